//! The GaBP correction `Z' = Z / Z^bp`.
//!
//! Modified weights `r'_ij = r_ij / (1 - a_{i\j})` turn the backtrackless
//! adjacency matrix of the graph into `R'`, an operator on directed edges with
//! `R'_{(ij),(jk)} = r'_jk` for `k != i`. Then `Z' = det(I - R')^{-1}`, and
//! `Z'` also factors over backtrackless orbits `gamma` as
//! `prod (1 - r'^gamma)^{-1}`.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::exact::{check_budget, log_z_of, DENSE_BUDGET};
use crate::gabp::GaBPState;
use crate::model::{perron_root, EdgeWeights};
use crate::orbits::{enumerate_cycles, log_orbit_factor, stable_sum, Orbit, OrbitBudget, OrbitClass};
use crate::sparse::CsrMatrix;

/// `r'` per directed edge, indexed by [`EdgeWeights`] arc ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedWeights {
    r_prime: Vec<f64>,
}

impl ModifiedWeights {
    pub fn r_prime(&self) -> &[f64] {
        &self.r_prime
    }

    pub fn get(&self, arc: usize) -> f64 {
        self.r_prime[arc]
    }
}

/// `r'_ij = r_ij / (1 - sum_{k in N(i)\j} alpha_ki)` from a converged GaBP state.
pub fn modified_weights(weights: &EdgeWeights, state: &GaBPState) -> Result<ModifiedWeights> {
    if !state.converged {
        return Err(Error::NotConverged {
            iterations: state.iterations,
            residual: state.max_residual,
        });
    }
    if state.alpha.len() != weights.num_arcs() {
        return Err(Error::InvalidParameter(format!(
            "GaBP state has {} messages, graph has {} directed edges",
            state.alpha.len(),
            weights.num_arcs()
        )));
    }
    let r_prime = (0..weights.num_arcs())
        .map(|e| {
            let denom = 1.0 - state.alpha_excluding(weights, e);
            if denom > 0.0 {
                Ok(weights.r(e) / denom)
            } else {
                let (i, j) = weights.arc(e);
                Err(Error::WalkSummabilityViolation(format!(
                    "1 - alpha_{{{i}\\{j}}} = {denom} is not positive"
                )))
            }
        })
        .collect::<Result<_>>()?;
    Ok(ModifiedWeights { r_prime })
}

/// `R'` on the directed edges of a graph. Row and column `e` both stand for
/// arc `e` of the [`EdgeWeights`] it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktracklessMatrix {
    matrix: CsrMatrix,
    arcs: Vec<(usize, usize)>,
}

impl BacktracklessMatrix {
    /// `2|E|`.
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// `(tail, head)` of the directed edge behind row/column `e`.
    pub fn arc(&self, e: usize) -> (usize, usize) {
        self.arcs[e]
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    fn successor_lists(&self) -> Vec<Vec<usize>> {
        (0..self.dim())
            .map(|e| self.matrix.row(e).map(|(f, _)| f).collect())
            .collect()
    }

    /// Writes `R'` as a general Matrix Market coordinate file. Header comments
    /// map each 1-based row/column index to its directed edge.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "% backtrackless operator on directed edges")?;
        for (e, (i, j)) in self.arcs.iter().enumerate() {
            writeln!(out, "% edge {}: {} -> {}", e + 1, i + 1, j + 1)?;
        }
        writeln!(out, "{} {} {}", self.dim(), self.dim(), self.matrix.nnz())?;
        for e in 0..self.dim() {
            for (f, v) in self.matrix.row(e) {
                writeln!(out, "{} {} {:e}", e + 1, f + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Builds `R'` with `R'_{(ij),(jk)} = r'_jk` for every `k in N(j)`, `k != i`.
pub fn build_backtrackless(mw: &ModifiedWeights, weights: &EdgeWeights) -> BacktracklessMatrix {
    let rows = (0..weights.num_arcs())
        .map(|e| {
            let (i, j) = weights.arc(e);
            weights
                .out_arcs(j)
                .filter(|&f| weights.arc(f).1 != i)
                .map(|f| (f, mw.get(f)))
                .collect()
        })
        .collect();
    BacktracklessMatrix {
        matrix: CsrMatrix::from_rows(rows),
        arcs: weights.arcs().to_vec(),
    }
}

/// `log Z' = -log det(I - R')` by dense LU, within [`DENSE_BUDGET`].
pub fn log_zprime_exact(rp: &BacktracklessMatrix) -> Result<f64> {
    log_zprime_exact_with_budget(rp, DENSE_BUDGET)
}

pub fn log_zprime_exact_with_budget(rp: &BacktracklessMatrix, limit: usize) -> Result<f64> {
    check_budget(rp.dim(), limit)?;
    let all: Vec<usize> = (0..rp.dim()).collect();
    log_z_of(&rp.matrix.identity_minus_principal(&all))
}

/// `log Z'_gamma = -log(1 - prod r'_ij^{n_ij(gamma)})` for a backtrackless orbit.
pub fn log_zprime_gamma(gamma: &Orbit, mw: &ModifiedWeights, weights: &EdgeWeights) -> Result<f64> {
    if gamma.class() != OrbitClass::Backtrackless {
        return Err(Error::Contract(format!(
            "orbit {gamma} is {}, not backtrackless",
            gamma.class()
        )));
    }
    log_orbit_factor(gamma.weight_with(weights, mw.r_prime())?)
}

/// Backtrackless orbits of the graph with length at most `max_len`, found as
/// the orbits of the directed graph of `R'`. Sorted by `(length, sequence)`.
pub fn enumerate_backtrackless(
    rp: &BacktracklessMatrix,
    max_len: usize,
    budget: &OrbitBudget,
) -> Result<Vec<Orbit>> {
    let cycles = enumerate_cycles(&rp.successor_lists(), 1, max_len, budget)?;
    let mut orbits: Vec<Orbit> = cycles
        .into_iter()
        .map(|c| {
            let vertices: Vec<usize> = c.iter().map(|&e| rp.arc(e).0).collect();
            let k = (0..vertices.len())
                .min_by(|&a, &b| rotation(&vertices, a).cmp(rotation(&vertices, b)))
                .unwrap_or(0);
            Orbit::from_canonical(rotation(&vertices, k).collect())
        })
        .collect();
    orbits.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cycle().cmp(b.cycle())));
    Ok(orbits)
}

fn rotation(seq: &[usize], k: usize) -> impl Iterator<Item = usize> + '_ {
    (0..seq.len()).map(move |t| seq[(k + t) % seq.len()])
}

/// `sum_{gamma backtrackless, |gamma| <= max_len} log Z'_gamma`.
pub fn truncated_correction(
    weights: &EdgeWeights,
    state: &GaBPState,
    max_len: usize,
    budget: &OrbitBudget,
) -> Result<f64> {
    let mw = modified_weights(weights, state)?;
    let rp = build_backtrackless(&mw, weights);
    let orbits = enumerate_backtrackless(&rp, max_len, budget)?;
    let terms = orbits
        .iter()
        .map(|g| log_zprime_gamma(g, &mw, weights))
        .collect::<Result<Vec<_>>>()?;
    Ok(stable_sum(terms))
}

/// Power-iteration estimate of `rho(|R'|)`.
pub fn rho_prime(rp: &BacktracklessMatrix, tol: f64, max_iter: usize) -> f64 {
    perron_root(&rp.matrix, tol, max_iter).rho
}

/// Per-node bound on `|log(Z^bp / Z)| / n = |log Z'| / n` from `rho' = rho(|R'|)`:
/// `(2|E| / n) rho'^g / (g (1 - rho'))`. `R'` has dimension `2|E|`, which is
/// where the factor comes from; dropping it fails already on a triangle.
/// Zero for forests.
pub fn refined_gabp_bound(rho_prime: f64, girth: Option<usize>, weights: &EdgeWeights) -> f64 {
    if weights.n() == 0 {
        return 0.0;
    }
    let scale = weights.num_arcs() as f64 / weights.n() as f64;
    scale * crate::gabp::gabp_error_bound(rho_prime, girth)
}

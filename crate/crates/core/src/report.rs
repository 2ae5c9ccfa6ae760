//! Estimator runs and their machine-readable reports.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::blocksum::{blocksum_error_bound, grid_block_family, induced_edge_family, log_z_blocks};
use crate::correction::{build_backtrackless, modified_weights, rho_prime, truncated_correction, BacktracklessMatrix};
use crate::error::{Error, Result};
use crate::exact::{self, DENSE_BUDGET};
use crate::gabp::{gabp_error_bound, log_zbp, run_gabp, GaBPOptions, GaBPState};
use crate::io::GridGeometry;
use crate::model::{spectral_radius_abs, EdgeWeights, GraphModel, WalkSummabilityReport};
use crate::orbits::{orbit_tail_bound, truncated_orbit_logsum, OrbitBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Exact,
    Gabp,
    GabpBtlTrunc,
    GabpBlocksumRprime,
    BlocksumR,
    OrbitTrunc,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Exact,
        Method::Gabp,
        Method::GabpBtlTrunc,
        Method::GabpBlocksumRprime,
        Method::BlocksumR,
        Method::OrbitTrunc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Gabp => "gabp",
            Method::GabpBtlTrunc => "gabp+btl-trunc",
            Method::GabpBlocksumRprime => "gabp+blocksum-Rprime",
            Method::BlocksumR => "blocksum-R",
            Method::OrbitTrunc => "orbit-trunc",
        }
    }

    /// Methods that take the block size `L`.
    pub fn uses_blocks(self) -> bool {
        matches!(self, Method::GabpBlocksumRprime | Method::BlocksumR)
    }

    fn uses_gabp(self) -> bool {
        matches!(self, Method::Gabp | Method::GabpBtlTrunc | Method::GabpBlocksumRprime)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.as_str()).collect();
                Error::InvalidParameter(format!("unknown method {s:?} (expected one of {})", names.join(", ")))
            })
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct EstimateConfig {
    pub methods: Vec<Method>,
    pub gabp: GaBPOptions,
    /// Block size `L` for the blocksum methods.
    pub block_size: usize,
    /// `L_max` for the orbit-truncation methods.
    pub orbit_max: usize,
    pub orbit_budget: OrbitBudget,
    /// Required by the blocksum methods.
    pub grid: Option<GridGeometry>,
    /// Run even when `rho(|R|) >= 1 - margin`.
    pub force: bool,
    pub power_tol: f64,
    pub power_max_iter: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Exact, Method::Gabp],
            gabp: GaBPOptions::default(),
            block_size: 4,
            orbit_max: 12,
            orbit_budget: OrbitBudget::default(),
            grid: None,
            force: false,
            power_tol: 1e-10,
            power_max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub n: usize,
    pub num_edges: usize,
    pub rho_abs: f64,
    pub walk_summable: bool,
    pub girth: Option<usize>,
    /// `sum_i log J_ii`.
    pub logdet_shift: f64,
    /// `rho(|R'|)`, present when a GaBP-based method ran.
    pub rho_prime: Option<f64>,
    pub gabp_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters {
    pub tol: Option<f64>,
    #[serde(rename = "L")]
    pub block_size: Option<usize>,
    #[serde(rename = "L_max")]
    pub orbit_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: Method,
    /// Estimate of `log Z = -log det(I - R)` for the normalized model.
    pub log_z: f64,
    /// `logdet_shift - log_z`, the matching estimate of `log det J`.
    pub logdet_j: f64,
    pub error_vs_exact: Option<f64>,
    /// Bound on `|log_z - log Z|` (total, not per node).
    pub bound: Option<f64>,
    pub wall_time_seconds: f64,
    pub parameters: Parameters,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub model: ModelSummary,
    pub results: Vec<MethodResult>,
}

/// Shared state for running several estimators on one model. Expensive
/// ingredients (GaBP, `R'`, the exact value) are computed once by
/// [`prepare`](Self::prepare); [`run`](Self::run) is then read-only.
pub struct Estimator<'a> {
    weights: &'a EdgeWeights,
    shift: f64,
    config: &'a EstimateConfig,
    rho: WalkSummabilityReport,
    girth: Option<usize>,
    gabp: Option<(GaBPState, f64, f64)>,
    rprime: Option<(BacktracklessMatrix, f64)>,
    exact: Option<(f64, f64)>,
}

fn bound_if(rho: f64, f: impl FnOnce() -> f64) -> Option<f64> {
    (rho < 1.0).then(f).filter(|b| b.is_finite())
}

impl<'a> Estimator<'a> {
    /// Checks walk-summability; fails with [`Error::NotWalkSummable`] unless forced.
    pub fn new(weights: &'a EdgeWeights, shift: f64, config: &'a EstimateConfig) -> Result<Self> {
        let rho = spectral_radius_abs(weights, config.power_tol, config.power_max_iter);
        if !rho.walk_summable && !config.force {
            return Err(Error::NotWalkSummable { rho: rho.rho_abs });
        }
        Ok(Self {
            weights,
            shift,
            config,
            rho,
            girth: weights.girth(),
            gabp: None,
            rprime: None,
            exact: None,
        })
    }

    /// Computes whatever `methods` need. `with_exact` also computes the dense
    /// value so every result gets an error column.
    pub fn prepare(&mut self, methods: &[Method], with_exact: bool) -> Result<()> {
        if (with_exact || methods.contains(&Method::Exact)) && self.exact.is_none() {
            let t = Instant::now();
            let z = exact::log_z(self.weights)?;
            self.exact = Some((z, t.elapsed().as_secs_f64()));
        }
        if methods.iter().any(|m| m.uses_gabp()) && self.gabp.is_none() {
            let t = Instant::now();
            let state = run_gabp(self.weights, None, &self.config.gabp)?;
            if !state.converged {
                return Err(Error::NotConverged {
                    iterations: state.iterations,
                    residual: state.max_residual,
                });
            }
            let zbp = log_zbp(&state, self.weights)?;
            self.gabp = Some((state, zbp, t.elapsed().as_secs_f64()));
        }
        if methods.iter().any(|m| m.uses_gabp()) && self.rprime.is_none() {
            let (state, ..) = self.gabp.as_ref().expect("prepared above");
            let rp = build_backtrackless(&modified_weights(self.weights, state)?, self.weights);
            let rho = rho_prime(&rp, self.config.power_tol, self.config.power_max_iter);
            self.rprime = Some((rp, rho));
        }
        Ok(())
    }

    pub fn rho(&self) -> &WalkSummabilityReport {
        &self.rho
    }

    pub fn rho_prime(&self) -> Option<f64> {
        self.rprime.as_ref().map(|r| r.1)
    }

    pub fn backtrackless(&self) -> Option<&BacktracklessMatrix> {
        self.rprime.as_ref().map(|r| &r.0)
    }

    pub fn exact(&self) -> Option<f64> {
        self.exact.map(|e| e.0)
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            n: self.weights.n(),
            num_edges: self.weights.num_edges(),
            rho_abs: self.rho.rho_abs,
            walk_summable: self.rho.walk_summable,
            girth: self.girth,
            logdet_shift: self.shift,
            rho_prime: self.rho_prime(),
            gabp_iterations: self.gabp.as_ref().map(|g| g.0.iterations),
        }
    }

    fn gabp_parts(&self) -> Result<(&GaBPState, f64, f64)> {
        self.gabp
            .as_ref()
            .map(|(s, z, t)| (s, *z, *t))
            .ok_or_else(|| Error::Contract("GaBP was not prepared".into()))
    }

    fn rprime_parts(&self) -> Result<(&BacktracklessMatrix, f64)> {
        self.rprime
            .as_ref()
            .map(|(m, r)| (m, *r))
            .ok_or_else(|| Error::Contract("R' was not prepared".into()))
    }

    fn grid(&self) -> Result<GridGeometry> {
        self.config.grid.ok_or_else(|| {
            Error::InvalidParameter("blocksum methods need grid geometry (--grid ROWSxCOLS)".into())
        })
    }

    /// Runs one method; `block_size` overrides the configured `L`.
    pub fn run(&self, method: Method, block_size: Option<usize>) -> Result<MethodResult> {
        let n = self.weights.n();
        let arcs = self.weights.num_arcs();
        let rho = self.rho.rho_abs;
        let l = block_size.unwrap_or(self.config.block_size);
        let lmax = self.config.orbit_max;
        let budget = &self.config.orbit_budget;
        let t = Instant::now();
        let mut extra_time = 0.0;
        let mut params = Parameters {
            tol: None,
            block_size: None,
            orbit_max: None,
        };
        let (log_z, bound) = match method {
            Method::Exact => {
                let z = match self.exact {
                    Some((z, secs)) => {
                        extra_time = secs;
                        z
                    }
                    None => exact::log_z(self.weights)?,
                };
                (z, Some(0.0))
            }
            Method::Gabp => {
                let (_, zbp, secs) = self.gabp_parts()?;
                extra_time = secs;
                params.tol = Some(self.config.gabp.tol);
                let bound = bound_if(rho, || n as f64 * gabp_error_bound(rho, self.girth));
                (zbp, bound)
            }
            Method::GabpBtlTrunc => {
                let (state, zbp, secs) = self.gabp_parts()?;
                let (_, rho_p) = self.rprime_parts()?;
                extra_time = secs;
                params.tol = Some(self.config.gabp.tol);
                params.orbit_max = Some(lmax);
                let corr = truncated_correction(self.weights, state, lmax, budget)?;
                (zbp + corr, bound_if(rho_p, || orbit_tail_bound(arcs, rho_p, lmax)))
            }
            Method::GabpBlocksumRprime => {
                let (_, zbp, secs) = self.gabp_parts()?;
                let (rp, rho_p) = self.rprime_parts()?;
                let g = self.grid()?;
                extra_time = secs;
                params.tol = Some(self.config.gabp.tol);
                params.block_size = Some(l);
                let nodes = grid_block_family(g.rows, g.cols, l, g.periodic)?;
                let edges = induced_edge_family(&nodes, self.weights);
                let corr = log_z_blocks(rp.matrix(), &edges)?;
                let bound = bound_if(rho_p, || arcs as f64 * blocksum_error_bound(rho_p, l));
                (zbp + corr, bound)
            }
            Method::BlocksumR => {
                let g = self.grid()?;
                if g.rows * g.cols != n {
                    return Err(Error::InvalidParameter(format!(
                        "grid {}x{} does not match a model with {n} vertices",
                        g.rows, g.cols
                    )));
                }
                params.block_size = Some(l);
                let family = grid_block_family(g.rows, g.cols, l, g.periodic)?;
                let z = log_z_blocks(&self.weights.matrix(), &family)?;
                (z, bound_if(rho, || n as f64 * blocksum_error_bound(rho, l)))
            }
            Method::OrbitTrunc => {
                params.orbit_max = Some(lmax);
                let z = truncated_orbit_logsum(self.weights, lmax, budget)?;
                (z, bound_if(rho, || orbit_tail_bound(n, rho, lmax)))
            }
        };
        Ok(MethodResult {
            method,
            log_z,
            logdet_j: self.shift - log_z,
            error_vs_exact: self.exact().map(|z| (log_z - z).abs()),
            bound,
            wall_time_seconds: t.elapsed().as_secs_f64() + extra_time,
            parameters: params,
        })
    }
}

/// Runs every configured method on `model` and collects a report.
pub fn estimate(model: &GraphModel, config: &EstimateConfig) -> Result<Report> {
    if config.methods.is_empty() {
        return Err(Error::InvalidParameter("no methods requested".into()));
    }
    let (weights, shift) = model.normalize();
    if config.methods.iter().any(|m| m.uses_blocks()) {
        if let Some(g) = config.grid {
            if g.rows * g.cols != model.n() {
                return Err(Error::InvalidParameter(format!(
                    "grid {}x{} does not match a model with {} vertices",
                    g.rows,
                    g.cols,
                    model.n()
                )));
            }
        }
    }
    let mut est = Estimator::new(&weights, shift, config)?;
    let with_exact = config.methods.contains(&Method::Exact) && model.n() <= DENSE_BUDGET;
    est.prepare(&config.methods, with_exact)?;
    let results = config
        .methods
        .iter()
        .map(|&m| est.run(m, None))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        model: est.summary(),
        results,
    })
}

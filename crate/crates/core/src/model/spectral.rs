use serde::Serialize;

use super::{EdgeWeights, WALK_SUMMABLE_MARGIN};
use crate::sparse::CsrMatrix;

/// Outcome of the power iteration on an element-wise absolute matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerIteration {
    pub rho: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// `rho(|R|)` and the walk-summability verdict derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkSummabilityReport {
    pub rho_abs: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub walk_summable: bool,
}

/// Perron root of `|A|` by power iteration from the all-ones vector.
///
/// The iteration runs on `|A| + I`, whose Perron root is strictly dominant
/// whenever `|A|` is irreducible, so bipartite patterns do not oscillate.
/// The estimate is the Rayleigh quotient `x . |A| x` of the unit iterate and
/// the residual is `|| |A| x - rho x ||_2`. Nilpotent patterns return 0.
pub fn perron_root(a: &CsrMatrix, tol: f64, max_iter: usize) -> PowerIteration {
    let n = a.dim();
    if n == 0 || a.pattern_is_acyclic() {
        return PowerIteration {
            rho: 0.0,
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    let mut rho = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        a.abs_mul_into(&x, &mut y);
        rho = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        residual = x
            .iter()
            .zip(&y)
            .map(|(xi, yi)| (yi - rho * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol {
            return PowerIteration {
                rho,
                iterations: it,
                residual,
                converged: true,
            };
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi += yi;
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    PowerIteration {
        rho,
        iterations: max_iter,
        residual,
        converged: false,
    }
}

/// Estimates `rho(|R|)`; `walk_summable` requires `rho < 1 - 1e-9`.
pub fn spectral_radius_abs(weights: &EdgeWeights, tol: f64, max_iter: usize) -> WalkSummabilityReport {
    let p = perron_root(&weights.matrix(), tol, max_iter);
    WalkSummabilityReport {
        rho_abs: p.rho,
        iterations: p.iterations,
        residual: p.residual,
        converged: p.converged,
        walk_summable: p.rho < 1.0 - WALK_SUMMABLE_MARGIN,
    }
}

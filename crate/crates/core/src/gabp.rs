//! Gaussian belief propagation on the unit-diagonal model `I - R`.
//!
//! Messages live on directed edges. With `a_{i\j} = sum_{k in N(i)\j} alpha_ki`
//! the updates are
//!
//! ```text
//! alpha_ij = r_ij^2 / (1 - a_{i\j})
//! beta_ij  = r_ij (h_i + b_{i\j}) / (1 - a_{i\j})
//! ```
//!
//! started from zero messages. In walk-summable models the iteration computes
//! walk-sums on ever deeper computation trees and converges.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::EdgeWeights;

/// Message update order. Both reach the same fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// Every message is recomputed from the previous sweep.
    #[default]
    Synchronous,
    /// Messages are updated in place in directed-edge id order.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaBPOptions {
    /// Stop once the largest message change in a sweep is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub schedule: Schedule,
}

impl Default for GaBPOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
            schedule: Schedule::Synchronous,
        }
    }
}

/// Message parameters per directed edge plus convergence metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct GaBPState {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub iterations: usize,
    /// Largest message change in the final sweep.
    pub max_residual: f64,
    pub converged: bool,
}

impl GaBPState {
    /// `a_{i\j}` for directed edge `e = (i, j)`: incoming alphas at `i` except from `j`.
    pub fn alpha_excluding(&self, weights: &EdgeWeights, e: usize) -> f64 {
        excluding_sum(weights, &self.alpha, e)
    }

    /// Largest violation of the alpha fixed-point equation over all directed edges.
    pub fn fixed_point_residual(&self, weights: &EdgeWeights) -> f64 {
        (0..weights.num_arcs())
            .map(|e| {
                let denom = 1.0 - self.alpha_excluding(weights, e);
                (self.alpha[e] - weights.r(e).powi(2) / denom).abs()
            })
            .fold(0.0, f64::max)
    }

    fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: self.max_residual,
            })
        }
    }
}

/// Summary quantities read off a converged GaBP state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaBPResult {
    /// `K_ii` estimates in the scale of the original `J`.
    pub variance: Vec<f64>,
    /// Mean estimates in the original scale; zero when no potential was given.
    pub mean: Vec<f64>,
    /// `log Z_ij^bp` per undirected edge, in [`EdgeWeights`] edge order (`i < j`).
    pub edge_logdet: Vec<f64>,
    /// `log Z^bp` of the normalized model.
    pub log_zbp: f64,
}

fn excluding_sum(weights: &EdgeWeights, msgs: &[f64], e: usize) -> f64 {
    let (i, _) = weights.arc(e);
    weights
        .out_arcs(i)
        .filter(|&f| f != e)
        .map(|f| msgs[weights.reverse(f)])
        .sum()
}

fn incoming_sum(weights: &EdgeWeights, msgs: &[f64], i: usize) -> f64 {
    weights.out_arcs(i).map(|f| msgs[weights.reverse(f)]).sum()
}

fn normalized_h(weights: &EdgeWeights, h: Option<&[f64]>) -> Result<Vec<f64>> {
    match h {
        None => Ok(vec![0.0; weights.n()]),
        Some(h) if h.len() == weights.n() => {
            Ok(h.iter().zip(weights.scale()).map(|(v, s)| v / s).collect())
        }
        Some(h) => Err(Error::InvalidParameter(format!(
            "potential has {} entries, model has {} vertices",
            h.len(),
            weights.n()
        ))),
    }
}

fn update(
    weights: &EdgeWeights,
    alpha: &[f64],
    beta: &[f64],
    h: &[f64],
    e: usize,
) -> Result<(f64, f64)> {
    let denom = 1.0 - excluding_sum(weights, alpha, e);
    if !(denom > 0.0) {
        let (i, j) = weights.arc(e);
        return Err(Error::WalkSummabilityViolation(format!(
            "1 - alpha_{{{i}\\{j}}} = {denom} is not positive"
        )));
    }
    let r = weights.r(e);
    let (i, _) = weights.arc(e);
    let b = h[i] + excluding_sum(weights, beta, e);
    Ok((r * r / denom, r * b / denom))
}

/// Iterates the message updates from `alpha = beta = 0`.
///
/// `h` is the potential of the original (un-normalized) model. Running out of
/// iterations is not an error: the returned state has `converged == false`.
pub fn run_gabp(weights: &EdgeWeights, h: Option<&[f64]>, opts: &GaBPOptions) -> Result<GaBPState> {
    if !(opts.tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be >= 0, got {}", opts.tol)));
    }
    let h = normalized_h(weights, h)?;
    let m = weights.num_arcs();
    let mut alpha = vec![0.0; m];
    let mut beta = vec![0.0; m];
    let mut residual = if m == 0 { 0.0 } else { f64::INFINITY };
    let mut iterations = 0;
    while iterations < opts.max_iter && residual > opts.tol {
        iterations += 1;
        residual = 0.0;
        match opts.schedule {
            Schedule::Synchronous => {
                let next: Vec<(f64, f64)> = (0..m)
                    .into_par_iter()
                    .with_min_len(1024)
                    .map(|e| update(weights, &alpha, &beta, &h, e))
                    .collect::<Result<_>>()?;
                for (e, (a, b)) in next.into_iter().enumerate() {
                    residual = residual.max((a - alpha[e]).abs()).max((b - beta[e]).abs());
                    alpha[e] = a;
                    beta[e] = b;
                }
            }
            Schedule::Sequential => {
                for e in 0..m {
                    let (a, b) = update(weights, &alpha, &beta, &h, e)?;
                    residual = residual.max((a - alpha[e]).abs()).max((b - beta[e]).abs());
                    alpha[e] = a;
                    beta[e] = b;
                }
            }
        }
    }
    Ok(GaBPState {
        alpha,
        beta,
        iterations,
        max_residual: residual,
        converged: residual <= opts.tol,
    })
}

/// Variance and mean estimates `K_i = (1 - sum_k alpha_ki)^{-1}` and
/// `mu_i = K_i (h_i + sum_k beta_ki)`, mapped back to the scale of `J`.
pub fn variances_means(
    state: &GaBPState,
    weights: &EdgeWeights,
    h: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    state.require_converged()?;
    let hn = normalized_h(weights, h)?;
    let mut var = Vec::with_capacity(weights.n());
    let mut mean = Vec::with_capacity(weights.n());
    for i in 0..weights.n() {
        let denom = 1.0 - incoming_sum(weights, &state.alpha, i);
        if !(denom > 0.0) {
            return Err(Error::WalkSummabilityViolation(format!(
                "1 - sum of incoming alpha at vertex {i} is {denom}"
            )));
        }
        let k = 1.0 / denom;
        let s = weights.scale()[i];
        var.push(k / (s * s));
        mean.push(k * (hn[i] + incoming_sum(weights, &state.beta, i)) / s);
    }
    Ok((var, mean))
}

/// `log Z_ij^bp` for every undirected edge (`i < j`), in arc order.
fn edge_logdets(state: &GaBPState, weights: &EdgeWeights) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(weights.num_edges());
    for e in 0..weights.num_arcs() {
        let (i, j) = weights.arc(e);
        if i > j {
            continue;
        }
        let a = 1.0 - state.alpha_excluding(weights, e);
        let b = 1.0 - state.alpha_excluding(weights, weights.reverse(e));
        let r = weights.r(e);
        let det = a * b - r * r;
        if !(det > 0.0 && a > 0.0) {
            return Err(Error::WalkSummabilityViolation(format!(
                "edge {{{i}, {j}}} has non-positive pairwise determinant {det}"
            )));
        }
        out.push(-det.ln());
    }
    Ok(out)
}

/// `log Z^bp = sum_i log Z_i + sum_{ij} (log Z_ij - log Z_i - log Z_j)` for
/// the normalized model.
pub fn log_zbp(state: &GaBPState, weights: &EdgeWeights) -> Result<f64> {
    state.require_converged()?;
    let node = node_logs(state, weights)?;
    let edges = edge_logdets(state, weights)?;
    let mut total: f64 = node.iter().sum();
    let mut k = 0;
    for e in 0..weights.num_arcs() {
        let (i, j) = weights.arc(e);
        if i < j {
            total += edges[k] - node[i] - node[j];
            k += 1;
        }
    }
    Ok(total)
}

fn node_logs(state: &GaBPState, weights: &EdgeWeights) -> Result<Vec<f64>> {
    (0..weights.n())
        .map(|i| {
            let denom = 1.0 - incoming_sum(weights, &state.alpha, i);
            if denom > 0.0 {
                Ok(-denom.ln())
            } else {
                Err(Error::WalkSummabilityViolation(format!(
                    "1 - sum of incoming alpha at vertex {i} is {denom}"
                )))
            }
        })
        .collect()
}

/// Collects variances, means, edge terms and `log Z^bp`.
pub fn gabp_result(state: &GaBPState, weights: &EdgeWeights, h: Option<&[f64]>) -> Result<GaBPResult> {
    let (variance, mean) = variances_means(state, weights, h)?;
    Ok(GaBPResult {
        variance,
        mean,
        edge_logdet: edge_logdets(state, weights)?,
        log_zbp: log_zbp(state, weights)?,
    })
}

/// Per-node bound `rho^g / (g (1 - rho))` on `|log(Z^bp / Z)| / n`;
/// zero for forests since every orbit is then totally backtracking.
pub fn gabp_error_bound(rho: f64, girth: Option<usize>) -> f64 {
    match girth {
        None => 0.0,
        Some(g) => rho.powi(g as i32) / (g as f64 * (1.0 - rho)),
    }
}

//! Grid sweeps over coupling strength and block size, emitted as CSV rows
//! ready for plotting.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gabp::GaBPOptions;
use crate::io::GridGeometry;
use crate::model::gen_grid;
use crate::orbits::OrbitBudget;
use crate::report::{EstimateConfig, Estimator, Method};

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub grid: GridGeometry,
    /// Uniform couplings `r` (`J_ij = -r`, unit diagonal).
    pub couplings: Vec<f64>,
    pub block_sizes: Vec<usize>,
    pub methods: Vec<Method>,
    pub gabp: GaBPOptions,
    pub orbit_max: usize,
    pub orbit_budget: OrbitBudget,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid: GridGeometry {
                rows: 32,
                cols: 32,
                periodic: true,
            },
            couplings: vec![0.05, 0.10, 0.15, 0.20, 0.23],
            block_sizes: vec![2, 4, 8],
            methods: vec![Method::Gabp, Method::BlocksumR, Method::GabpBlocksumRprime],
            gabp: GaBPOptions::default(),
            orbit_max: 12,
            orbit_budget: OrbitBudget::default(),
        }
    }
}

/// One CSV row. Methods without a block size leave `L` empty; failed cells
/// keep their row with empty numbers and the error in `status`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: f64,
    #[serde(rename = "L")]
    pub block_size: Option<usize>,
    pub method: Method,
    pub log_z_per_node: Option<f64>,
    pub error_per_node: Option<f64>,
    pub bound_per_node: Option<f64>,
    #[serde(rename = "rho_R")]
    pub rho_r: Option<f64>,
    #[serde(rename = "rho_Rprime")]
    pub rho_rprime: Option<f64>,
    pub status: String,
}

fn cells(config: &SweepConfig) -> Vec<(Method, Option<usize>)> {
    let mut out = Vec::new();
    for &m in &config.methods {
        if m.uses_blocks() {
            out.extend(config.block_sizes.iter().map(|&l| (m, Some(l))));
        } else {
            out.push((m, None));
        }
    }
    out
}

fn failed(r: f64, (method, block_size): (Method, Option<usize>), e: &Error) -> SweepRow {
    SweepRow {
        r,
        block_size,
        method,
        log_z_per_node: None,
        error_per_node: None,
        bound_per_node: None,
        rho_r: None,
        rho_rprime: None,
        status: format!("error: {e}"),
    }
}

fn sweep_one(config: &SweepConfig, r: f64) -> Vec<SweepRow> {
    let cells = cells(config);
    let g = config.grid;
    let model = match gen_grid(g.rows, g.cols, r, g.periodic) {
        Ok(m) => m,
        Err(e) => return cells.into_iter().map(|c| failed(r, c, &e)).collect(),
    };
    let (weights, shift) = model.normalize();
    let est_config = EstimateConfig {
        methods: config.methods.clone(),
        gabp: config.gabp,
        orbit_max: config.orbit_max,
        orbit_budget: config.orbit_budget,
        grid: Some(g),
        ..Default::default()
    };
    let prepared = Estimator::new(&weights, shift, &est_config).and_then(|mut est| {
        est.prepare(&config.methods, true)?;
        Ok(est)
    });
    let est = match prepared {
        Ok(est) => est,
        Err(e) => return cells.into_iter().map(|c| failed(r, c, &e)).collect(),
    };
    let n = model.n() as f64;
    cells
        .into_par_iter()
        .map(|cell| match est.run(cell.0, cell.1) {
            Ok(res) => SweepRow {
                r,
                block_size: cell.1,
                method: cell.0,
                log_z_per_node: Some(res.log_z / n),
                error_per_node: res.error_vs_exact.map(|e| e / n),
                bound_per_node: res.bound.map(|b| b / n),
                rho_r: Some(est.rho().rho_abs),
                rho_rprime: est.rho_prime(),
                status: "ok".into(),
            },
            Err(e) => failed(r, cell, &e),
        })
        .collect()
}

/// Runs every `(r, L, method)` cell. Rows come back sorted by `(r, L, method)`.
pub fn run_sweep(config: &SweepConfig) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = config
        .couplings
        .par_iter()
        .flat_map_iter(|&r| sweep_one(config, r))
        .collect();
    rows.sort_by(|a, b| {
        a.r.total_cmp(&b.r)
            .then(a.block_size.cmp(&b.block_size))
            .then(a.method.cmp(&b.method))
    });
    rows
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

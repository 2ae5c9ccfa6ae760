//! GaBP is exact on trees; on loopy graphs only the means stay exact.

use gabp_orbit::exact::{covariance_entries, dense_solve, log_z};
use gabp_orbit::gabp::{gabp_result, run_gabp, GaBPOptions};
use gabp_orbit::model::{gen_grid, gen_random_tree, GraphModel};

fn compare(name: &str, model: &GraphModel) -> gabp_orbit::Result<()> {
    let n = model.n();
    let h: Vec<f64> = (0..n).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
    let (weights, _) = model.normalize();
    let state = run_gabp(&weights, Some(&h), &GaBPOptions::default())?;
    let bp = gabp_result(&state, &weights, Some(&h))?;

    let j = model.to_dense();
    let diag: Vec<_> = (0..n).map(|i| (i, i)).collect();
    let var = covariance_entries(&j, &diag)?;
    let mean = dense_solve(&j, &h)?;
    let max_gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);

    println!("{name} ({} sweeps)", state.iterations);
    println!("  |log Zbp - log Z| = {:.2e}", (bp.log_zbp - log_z(&weights)?).abs());
    println!("  max variance gap  = {:.2e}", max_gap(&bp.variance, &var));
    println!("  max mean gap      = {:.2e}", max_gap(&bp.mean, &mean));
    Ok(())
}

fn main() -> gabp_orbit::Result<()> {
    compare("random tree, n = 50", &gen_random_tree(50, 0.95, 1)?)?;
    compare("6x6 grid, r = 0.24", &gen_grid(6, 6, 0.24, false)?)?;
    Ok(())
}

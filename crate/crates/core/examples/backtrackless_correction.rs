//! Builds R' from a converged GaBP run and corrects log Zbp, exactly and by
//! truncating the product over backtrackless orbits.

use gabp_orbit::correction::{
    build_backtrackless, log_zprime_exact, modified_weights, rho_prime, truncated_correction,
};
use gabp_orbit::exact::log_z;
use gabp_orbit::gabp::{log_zbp, run_gabp, GaBPOptions};
use gabp_orbit::model::{gen_grid, spectral_radius_abs};
use gabp_orbit::orbits::OrbitBudget;

fn main() -> gabp_orbit::Result<()> {
    let (weights, _) = gen_grid(3, 3, 0.2, false)?.normalize();
    let state = run_gabp(&weights, None, &GaBPOptions::default())?;
    let zbp = log_zbp(&state, &weights)?;
    let rp = build_backtrackless(&modified_weights(&weights, &state)?, &weights);
    let exact = log_z(&weights)?;

    println!("R' is {0}x{0} with {1} nonzeros", rp.dim(), rp.matrix().nnz());
    println!(
        "rho(|R|) = {:.6}, rho(|R'|) = {:.6}",
        spectral_radius_abs(&weights, 1e-12, 10_000).rho_abs,
        rho_prime(&rp, 1e-12, 10_000)
    );
    println!("log Z         = {exact:.12}");
    println!("log Zbp       = {zbp:.12}");
    println!("log Zbp + Z'  = {:.12}", zbp + log_zprime_exact(&rp)?);
    for l in [4, 6, 8, 10, 12] {
        let c = truncated_correction(&weights, &state, l, &OrbitBudget::default())?;
        println!("L_max = {l:2}: error {:.3e}", (zbp + c - exact).abs());
    }
    Ok(())
}

//! Normalizes a few models and reports rho(|R|), walk-summability and girth.

use gabp_orbit::model::{gen_complete, gen_grid, gen_random, spectral_radius_abs, GraphModel};

fn main() -> gabp_orbit::Result<()> {
    let models: Vec<(&str, GraphModel)> = vec![
        ("K4, r = 0.3", gen_complete(4, 0.3)?),
        ("K4, r = 0.34", gen_complete(4, 0.34)?),
        ("8x8 periodic grid, r = 0.23", gen_grid(8, 8, 0.23, true)?),
        ("random n = 40, target rho 0.9", gen_random(40, 3.0, 0.9, 7)?),
    ];
    for (name, model) in models {
        let (weights, shift) = model.normalize();
        let rep = spectral_radius_abs(&weights, 1e-10, 10_000);
        let girth = weights.girth().map_or("-".to_string(), |g| g.to_string());
        println!(
            "{name:32} rho(|R|) = {:.6}  walk-summable = {:5}  girth = {girth}  sum log d = {shift:.3}",
            rep.rho_abs, rep.walk_summable
        );
    }
    Ok(())
}

//! Block resummation on a periodic grid, applied to R directly and to the
//! GaBP correction R'.

use gabp_orbit::blocksum::{grid_block_family, induced_edge_family, log_z_blocks};
use gabp_orbit::correction::{build_backtrackless, modified_weights};
use gabp_orbit::exact::log_z;
use gabp_orbit::gabp::{log_zbp, run_gabp, GaBPOptions};
use gabp_orbit::model::gen_grid;

fn main() -> gabp_orbit::Result<()> {
    let (rows, cols, r) = (16, 16, 0.22);
    let (weights, _) = gen_grid(rows, cols, r, true)?.normalize();
    let n = weights.n() as f64;
    let exact = log_z(&weights)?;
    let state = run_gabp(&weights, None, &GaBPOptions::default())?;
    let zbp = log_zbp(&state, &weights)?;
    let rp = build_backtrackless(&modified_weights(&weights, &state)?, &weights);

    println!("{rows}x{cols} periodic grid, r = {r}");
    println!("GaBP error per node: {:.3e}", (zbp - exact).abs() / n);
    for l in [2, 4, 8] {
        let nodes = grid_block_family(rows, cols, l, true)?;
        let edges = induced_edge_family(&nodes, &weights);
        let direct = log_z_blocks(&weights.matrix(), &nodes)?;
        let corrected = zbp + log_z_blocks(rp.matrix(), &edges)?;
        println!(
            "L = {l}: {:3} vertex blocks, blocksum on R {:.3e}, GaBP + blocksum on R' {:.3e}",
            nodes.len(),
            (direct - exact).abs() / n,
            (corrected - exact).abs() / n
        );
    }
    Ok(())
}

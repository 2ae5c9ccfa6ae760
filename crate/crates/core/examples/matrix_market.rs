//! Writes a grid model to Matrix Market, reads it back and dumps R'.

use gabp_orbit::correction::{build_backtrackless, modified_weights};
use gabp_orbit::gabp::{run_gabp, GaBPOptions};
use gabp_orbit::io::{read_model, write_model, GridGeometry};
use gabp_orbit::model::gen_grid;

fn main() -> gabp_orbit::Result<()> {
    let grid = GridGeometry {
        rows: 2,
        cols: 2,
        periodic: false,
    };
    let model = gen_grid(2, 2, 0.25, false)?;
    let mut buf = Vec::new();
    write_model(&model, Some(grid), &mut buf)?;
    print!("{}", String::from_utf8_lossy(&buf));

    let (back, geometry) = read_model(&buf[..])?;
    assert_eq!(back, model);
    println!("read back {} vertices, geometry {:?}\n", back.n(), geometry);

    let (weights, _) = back.normalize();
    let state = run_gabp(&weights, None, &GaBPOptions::default())?;
    let rp = build_backtrackless(&modified_weights(&weights, &state)?, &weights);
    rp.write_matrix_market(std::io::stdout().lock())?;
    Ok(())
}

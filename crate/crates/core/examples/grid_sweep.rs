//! Coupling/block-size sweep on a periodic grid, written as CSV to stdout.
//! Pass a side length to change the grid (default 16).

use gabp_orbit::io::GridGeometry;
use gabp_orbit::sweep::{run_sweep, write_sweep_csv, SweepConfig};

fn main() -> gabp_orbit::Result<()> {
    let side = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    let config = SweepConfig {
        grid: GridGeometry {
            rows: side,
            cols: side,
            periodic: true,
        },
        ..Default::default()
    };
    write_sweep_csv(&run_sweep(&config), std::io::stdout().lock())
}

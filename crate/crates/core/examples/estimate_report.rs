//! Runs every estimator on one grid and prints the JSON report.

use gabp_orbit::io::GridGeometry;
use gabp_orbit::model::gen_grid;
use gabp_orbit::report::{estimate, EstimateConfig, Method};

fn main() -> gabp_orbit::Result<()> {
    let model = gen_grid(6, 6, 0.2, true)?;
    let config = EstimateConfig {
        methods: Method::ALL.to_vec(),
        block_size: 2,
        orbit_max: 8,
        grid: Some(GridGeometry {
            rows: 6,
            cols: 6,
            periodic: true,
        }),
        ..Default::default()
    };
    let report = estimate(&model, &config)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

//! Lists the short orbits of a small graph by class and checks the orbit
//! expansion of log Z against the trace series.

use std::collections::BTreeMap;

use gabp_orbit::exact::log_z;
use gabp_orbit::model::gen_grid;
use gabp_orbit::orbits::{enumerate_orbits, trace_series_crosscheck, truncated_orbit_logsum, OrbitBudget};

fn main() -> gabp_orbit::Result<()> {
    let (weights, _) = gen_grid(2, 3, 0.2, false)?.normalize();
    let budget = OrbitBudget::default();

    let orbits = enumerate_orbits(&weights, 6, &budget)?;
    let mut by_class: BTreeMap<_, usize> = BTreeMap::new();
    for o in &orbits {
        *by_class.entry(o.class()).or_default() += 1;
    }
    println!("{} orbits of length <= 6 on the 2x3 grid", orbits.len());
    for (class, count) in by_class {
        println!("  {class:22} {count}");
    }
    for o in orbits.iter().filter(|o| o.len() == 4) {
        println!("  {}", o.dump_line(&weights)?);
    }

    let exact = log_z(&weights)?;
    for l in [2, 4, 8, 12] {
        let (lhs, rhs) = trace_series_crosscheck(&weights, l, &budget)?;
        let partial = truncated_orbit_logsum(&weights, l, &budget)?;
        println!(
            "L = {l:2}: trace series {lhs:.12}  orbit side {rhs:.12}  orbit log Z {partial:.10} (exact {exact:.10})"
        );
    }
    Ok(())
}

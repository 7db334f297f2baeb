//! Runs a distance × capacity sweep and prints the decision map.
//!
//! ```text
//! cargo run --release --example decision_map -- data/two_node_sweep.toml [out_dir]
//! ```

use std::path::PathBuf;

use vreplan::io::{run_sweep, sweep_csv, SweepSpec};

fn main() -> vreplan::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let spec_path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/two_node_sweep.toml")
    });
    let out = args.next().map(PathBuf::from);

    let (spec, base) = SweepSpec::read(&spec_path)?;
    let results = run_sweep(&spec, &base, out.as_deref())?;

    print!("{:>8}", "km \\ MW");
    for c in &spec.capacities_mw {
        print!("{c:>14}");
    }
    println!();
    for d in &spec.distances_km {
        print!("{d:>8}");
        for r in results.iter().filter(|r| r.distance_km == *d) {
            print!("{:>14}", r.technologies());
        }
        println!();
    }
    println!();
    print!("{}", sweep_csv(&results));
    Ok(())
}

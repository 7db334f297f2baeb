//! Writes the synthetic VRE profiles used by the bundled cases.
//!
//! ```text
//! cargo run --example synthetic_profiles -- [out_dir]
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use vreplan::io::profiles::{blended_profile, write_profiles};
use vreplan::netmodel::{build_time_index, TimeConfig};

fn main() -> vreplan::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));

    // One week at 2 h steps, 5 GW split evenly between wind and solar.
    let week = build_time_index(&TimeConfig::with_steps(2.0, 1.0))?;
    let mut two_node = BTreeMap::new();
    two_node.insert("rez".to_string(), blended_profile(&week, 5000.0, 0.5, 0.5)?);
    write_profiles(&out.join("two_node_vre.csv"), &two_node)?;

    // Four days at 2 h steps for the Queensland zones.
    let days = build_time_index(&TimeConfig::with_steps(2.0, 4.0 / 7.0))?;
    let zones = [
        ("q1", 2600.0, 0.7),
        ("q4", 3400.0, 0.5),
        ("q6", 1800.0, 0.3),
        ("q8", 3800.0, 0.5),
    ];
    let mut qld = BTreeMap::new();
    for (id, mw, wind) in zones {
        qld.insert(
            id.to_string(),
            blended_profile(&days, mw, wind, 1.0 - wind)?,
        );
    }
    write_profiles(&out.join("rez_qld_vre.csv"), &qld)?;
    println!("profiles written to {}", out.display());
    Ok(())
}

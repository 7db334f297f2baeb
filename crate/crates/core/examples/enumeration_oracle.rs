//! Cross-checks branch-and-bound against exhaustive enumeration on a coarse
//! version of the two-node case with a trimmed menu.
//!
//! ```text
//! cargo run --release --example enumeration_oracle
//! ```

use std::path::PathBuf;

use vreplan::assembler::{assemble, AssembleOptions};
use vreplan::bnb::{enumerate_oracle, solve, BackendSettings, ClarabelBackend, SolveOptions};
use vreplan::io::case::{CaseFile, LinkKind};
use vreplan::io::profiles::blended_profile;
use vreplan::netmodel::build_time_index;

fn main() -> vreplan::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/two_node.case");
    let mut file = CaseFile::read(&path)?;
    file.time.step_hours = 6.0;
    file.time.weeks = None;
    file.time.days = Some(1.0);
    for c in &mut file.corridors {
        let menu: &[&str] = match c.kind {
            LinkKind::Pipeline => &["pipe-0.5m", "pipe-0.9m"],
            LinkKind::Hvdc => &["hvdc-2gw"],
            LinkKind::Hvac => &["hvac-500kv-single", "hvac-500kv-double"],
        };
        c.options = Some(menu.iter().map(|s| s.to_string()).collect());
    }
    let time = build_time_index(&file.time.config()?)?;
    let rez = blended_profile(&time, 4000.0, 0.5, 0.5)?;
    let case = file.build_with_profiles(time, [("rez".to_string(), rez)].into())?;
    let (program, _) = assemble(&case, &AssembleOptions::default())?;

    let oracle = enumerate_oracle(&program, &ClarabelBackend, &BackendSettings::default())?;
    let feasible = oracle.evaluated.iter().filter(|(_, o)| o.is_some()).count();
    println!(
        "{} assignments, {feasible} feasible",
        oracle.evaluated.len()
    );

    let options = SolveOptions {
        rel_gap: 1e-8,
        abs_gap: 1e-9,
        ..SolveOptions::default()
    };
    let out = solve(&program, &options, &ClarabelBackend)?;
    let best = oracle.best.map(|b| b.objective);
    let got = out.incumbent.map(|i| i.objective);
    println!("enumeration {best:?}");
    println!("branch-and-bound {got:?} after {} nodes", out.stats.nodes);
    Ok(())
}

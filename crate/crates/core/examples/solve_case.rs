//! Solves a case file and exports the plan.
//!
//! ```text
//! cargo run --release --example solve_case -- data/two_node.case out/two_node
//! ```

use std::path::PathBuf;

use vreplan::assembler::AssembleOptions;
use vreplan::bnb::{ClarabelBackend, SolveOptions};
use vreplan::io::{export_solution, load_case, SolutionFile};
use vreplan::plan::solve_case;

fn main() -> vreplan::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let case_path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| manifest.join("data/two_node.case"));
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("vreplan-two-node"));

    let case = load_case(&case_path)?;
    let options = SolveOptions {
        rel_gap: 0.005,
        ..SolveOptions::default()
    };
    let mut progress = std::io::stderr();
    let run = solve_case(
        &case,
        &AssembleOptions::default(),
        &options,
        &ClarabelBackend,
        Some(&mut progress),
    )?;
    let p = &run.program;
    println!(
        "{}: {} continuous, {} binaries, {} rows, {} cones",
        case.name, p.continuous, p.binaries, p.rows, p.cones
    );
    let s = &run.outcome.stats;
    println!(
        "status {:?} after {} nodes in {:.1} s, bound {:.3}, gap {:?}",
        s.status, s.nodes, s.seconds, s.best_bound, s.gap
    );
    match (&run.solution, &run.outcome.incumbent) {
        (Some(plan), Some(inc)) => {
            print!("{}", vreplan::io::export::summary_text(plan));
            export_solution(plan, &case, &out)?;
            SolutionFile::new(&case.name, run.assemble, inc.objective, inc.x.clone())
                .write(&out.join("solution.json"))?;
            println!("exported to {}", out.display());
        }
        _ => println!("no feasible plan"),
    }
    Ok(())
}

//! Prints the residual report of a stored solution.
//!
//! ```text
//! cargo run --example residual_audit -- data/two_node.case out/two_node/solution.json
//! ```

use std::path::PathBuf;

use vreplan::io::{load_case, residuals_from_file, SolutionFile};

fn main() -> vreplan::Result<()> {
    let mut args = std::env::args().skip(1);
    let (Some(case), Some(solution)) = (args.next(), args.next()) else {
        eprintln!("usage: residual_audit <case> <solution.json>");
        std::process::exit(2);
    };
    let case = load_case(&PathBuf::from(case))?;
    let file = SolutionFile::read(&PathBuf::from(solution))?;
    let report = residuals_from_file(&case, &file)?;
    let s = &report.summary;
    println!(
        "weymouth gap      {:.3e} .. {:.3e}",
        s.min_weymouth_gap, s.max_weymouth_gap
    );
    println!("avg pressure gap  {:.3e}", s.max_avgpress_gap);
    println!("gas balance       {:.3e}", s.max_gas_balance);
    println!("hvdc current gap  {:.3e}", s.max_hvdc_current_gap);
    println!("hvdc cone gap     {:.3e}", s.max_hvdc_cone_gap);
    println!("hvac cone gap     {:.3e}", s.max_hvac_cone_gap);
    println!("max angle (rad)   {:.4}", s.max_angle_rad);
    println!("linepack error    {:.3e}", s.max_telescoping_error);
    Ok(())
}

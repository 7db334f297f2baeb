//! Tangent cuts of the average-pressure envelope and their worst gap on a grid.
//!
//! ```text
//! cargo run --example envelope_cuts -- [cuts_per_axis]
//! ```

use vreplan::assembler::envelope::envelope_value;
use vreplan::assembler::envelope_avg_pressure;
use vreplan::gaspipe::exact_avg_pressure;
use vreplan::netmodel::MPA;

fn main() -> vreplan::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(5);
    let bounds = (3.5 * MPA, 10.0 * MPA);
    let cuts = envelope_avg_pressure(bounds, bounds, n)?;
    println!("{n}×{n} grid gives {} distinct cuts", cuts.len());
    for c in &cuts {
        println!("  dx {:+.5}  dy {:+.5}", c.dx, c.dy);
    }

    let points = 200;
    let mut worst = (0.0, 0.0, 0.0);
    for i in 0..points {
        for j in 0..points {
            let x = bounds.0 + (bounds.1 - bounds.0) * i as f64 / (points - 1) as f64;
            let y = bounds.0 + (bounds.1 - bounds.0) * j as f64 / (points - 1) as f64;
            let gap = exact_avg_pressure(x, y) - envelope_value(&cuts, x, y);
            if gap > worst.0 {
                worst = (gap, x, y);
            }
        }
    }
    println!(
        "max gap {:.3} Pa at ({:.3}, {:.3}) MPa",
        worst.0,
        worst.1 / MPA,
        worst.2 / MPA
    );
    Ok(())
}

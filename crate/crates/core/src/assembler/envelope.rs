//! Polyhedral under-estimator of the average-pressure term.
//!
//! The exact average pressure is `(2/3)(x + y + h(x, y))` with the convex,
//! degree-one homogeneous `h(x, y) = −xy/(x + y)`. Every tangent plane of `h` passes
//! through the origin, so each cut is `h ≥ dx·x + dy·y` and stays valid on the whole
//! positive quadrant, including the all-zero point of an uninstalled pipe.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCut {
    pub dx: f64,
    pub dy: f64,
}

impl EnvelopeCut {
    /// Tangent plane of `h` at `(x0, y0)`.
    pub fn at(x0: f64, y0: f64) -> Self {
        let s2 = (x0 + y0).powi(2);
        Self {
            dx: -(y0 * y0) / s2,
            dy: -(x0 * x0) / s2,
        }
    }

    /// Lower bound this cut places on the average pressure at `(x, y)`.
    pub fn avg_lower_bound(&self, x: f64, y: f64) -> f64 {
        2.0 / 3.0 * (x + y + self.dx * x + self.dy * y)
    }
}

/// `h(x, y) = −xy/(x + y)`.
pub fn h(x: f64, y: f64) -> f64 {
    -x * y / (x + y)
}

/// Tangent cuts of `h` at an `n × n` uniform grid over the box; cuts repeated along a
/// ray through the origin are emitted once. A zero-width axis contributes one point.
pub fn envelope_avg_pressure(
    x_bounds: (f64, f64),
    y_bounds: (f64, f64),
    n_cuts: usize,
) -> Result<Vec<EnvelopeCut>> {
    if n_cuts == 0 {
        return Err(Error::InvalidInput(
            "envelope needs at least one cut per axis".into(),
        ));
    }
    for (lo, hi) in [x_bounds, y_bounds] {
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::InvalidInput(format!(
                "envelope box [{lo}, {hi}] must satisfy 0 < lower <= upper"
            )));
        }
    }
    let xs = grid(x_bounds, n_cuts);
    let ys = grid(y_bounds, n_cuts);
    let mut cuts: Vec<EnvelopeCut> = Vec::with_capacity(xs.len() * ys.len());
    for &x in &xs {
        for &y in &ys {
            let cut = EnvelopeCut::at(x, y);
            let dup = cuts
                .iter()
                .any(|c| (c.dx - cut.dx).abs() <= 1e-14 && (c.dy - cut.dy).abs() <= 1e-14);
            if !dup {
                cuts.push(cut);
            }
        }
    }
    Ok(cuts)
}

fn grid((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 || hi == lo {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Best lower bound the cut set gives at `(x, y)`.
pub fn envelope_value(cuts: &[EnvelopeCut], x: f64, y: f64) -> f64 {
    cuts.iter()
        .map(|c| c.avg_lower_bound(x, y))
        .fold(f64::NEG_INFINITY, f64::max)
}

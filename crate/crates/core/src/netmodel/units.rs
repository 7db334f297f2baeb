use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::types::HvacOption;

/// π-model branch parameters in per-unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PuBranch {
    pub r: f64,
    pub x: f64,
    /// Series conductance and susceptance, y = 1/(r + jx) = g + jb.
    pub g: f64,
    pub b: f64,
    /// Total charging susceptance.
    pub b_ch: f64,
    /// Shunt-augmented terms of the flow identities: g_c = g, b_c = −b − b_ch/2.
    pub g_c: f64,
    pub b_c: f64,
}

/// Converts an HVAC option over `length_km` into per-unit on the given bases.
///
/// Series impedance is divided and charging multiplied by the number of conductors
/// sharing the arrangement.
pub fn per_unit_line(
    option: &HvacOption,
    length_km: f64,
    base_mva: f64,
    base_kv: f64,
) -> Result<PuBranch> {
    if !(base_mva > 0.0 && base_kv > 0.0) {
        return Err(Error::InvalidInput(format!(
            "per-unit bases must be positive (got {base_mva} MVA, {base_kv} kV)"
        )));
    }
    let n = f64::from(option.conductors.max(1));
    let z_base = base_kv * base_kv / base_mva;
    let r = option.r_ohm_per_km * length_km / n / z_base;
    let x = option.x_ohm_per_km * length_km / n / z_base;
    if r == 0.0 && x == 0.0 {
        return Err(Error::InvalidInput(format!(
            "option `{}` has zero series impedance",
            option.name
        )));
    }
    let b_ch = option.b_ch_us_per_km * 1e-6 * length_km * n * z_base;
    let den = r * r + x * x;
    let g = r / den;
    let b = -x / den;
    Ok(PuBranch {
        r,
        x,
        g,
        b,
        b_ch,
        g_c: g,
        b_c: -b - 0.5 * b_ch,
    })
}

/// Inverse of [`per_unit_line`]: ohmic series values (Ω/km) and charging (µS/km).
pub fn ohmic_from_pu(
    pu: &PuBranch,
    length_km: f64,
    base_mva: f64,
    base_kv: f64,
    conductors: u32,
) -> (f64, f64, f64) {
    let n = f64::from(conductors.max(1));
    let z_base = base_kv * base_kv / base_mva;
    (
        pu.r * z_base * n / length_km,
        pu.x * z_base * n / length_km,
        pu.b_ch / z_base / n / length_km * 1e6,
    )
}

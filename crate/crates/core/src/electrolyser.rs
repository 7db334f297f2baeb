//! Electrolyser stations: power-to-gas conversion, water stock, size cap and the
//! station compressor.
//!
//! The installation binary is not modelled (zero base cost), so every row here is linear.

use serde::{Deserialize, Serialize};

use crate::assembler::program::{ConicProgram, LinExpr, Sense, VarId};
use crate::error::{Error, Result};
use crate::gaspipe::srk_z;
use crate::netmodel::{Constants, PlanningCase};

/// kg of water consumed per kg of H2.
pub const WATER_RATIO: f64 = 10.0;

/// H2 output (m³/s at standard conditions) for `p_mw` of electrical input.
pub fn power_to_flow(p_mw: f64, efficiency: f64, hhv: f64) -> Result<f64> {
    if p_mw < 0.0 {
        return Err(Error::InvalidInput(format!(
            "negative electrolyser power {p_mw} MW"
        )));
    }
    Ok(p_mw * efficiency / hhv)
}

/// Water stock after one step of production at `flow`.
pub fn water_step(w_prev_kg: f64, flow: f64, density: f64, step_seconds: f64) -> f64 {
    w_prev_kg - WATER_RATIO * flow * density * step_seconds
}

/// MW of compression per m³/s of throughput between fixed inlet and outlet pressures.
pub fn compressor_coefficient(
    inlet_pa: f64,
    outlet_pa: f64,
    constants: &Constants,
    compressor_efficiency: f64,
    z: f64,
) -> Result<f64> {
    if !(inlet_pa > 0.0) {
        return Err(Error::InvalidInput(format!(
            "compressor inlet pressure {inlet_pa} Pa"
        )));
    }
    if outlet_pa < inlet_pa {
        return Err(Error::InvalidInput(format!(
            "compressor outlet {outlet_pa} Pa below inlet {inlet_pa} Pa"
        )));
    }
    let g = constants.isentropic_exponent;
    let head = constants.compressor_constant * constants.gas_temperature_k * z * g
        / ((g - 1.0) * compressor_efficiency);
    Ok(head * pressure_ratio_term(inlet_pa, outlet_pa, g))
}

/// `(outlet/inlet)^((γ−1)/γ) − 1`.
pub fn pressure_ratio_term(inlet_pa: f64, outlet_pa: f64, gamma: f64) -> f64 {
    (outlet_pa / inlet_pa).powf((gamma - 1.0) / gamma) - 1.0
}

/// Compressor power (MW) for `flow` m³/s.
pub fn compressor_power(
    flow: f64,
    inlet_pa: f64,
    outlet_pa: f64,
    constants: &Constants,
    compressor_efficiency: f64,
    z: f64,
) -> Result<f64> {
    if flow < 0.0 {
        return Err(Error::InvalidInput(format!(
            "negative compressor throughput {flow}"
        )));
    }
    Ok(flow * compressor_coefficient(inlet_pa, outlet_pa, constants, compressor_efficiency, z)?)
}

/// Variables of one electrolyser site, indexed by time step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SiteVars {
    pub power: Vec<VarId>,
    pub flow: Vec<VarId>,
    pub water: Vec<VarId>,
    pub compressor: Vec<VarId>,
    pub peak_power: VarId,
    pub peak_compressor: VarId,
    /// MW of compressor power per m³/s (zero at demand sites).
    pub compressor_coefficient: f64,
}

/// Compressor coefficient for site `s`: outlet at the junction's maximum pressure,
/// compressibility from SRK at inlet conditions.
pub fn site_compressor_coefficient(case: &PlanningCase, s: usize) -> Result<f64> {
    let site = &case.sites[s];
    if site.is_demand_site {
        return Ok(0.0);
    }
    let c = &case.constants;
    let m = case.junction_index(&site.junction).ok_or_else(|| {
        Error::emit(
            "electrolyser",
            format!("unknown junction `{}`", site.junction),
        )
    })?;
    let z = srk_z(c.gas_temperature_k, site.output_pressure, c)?;
    compressor_coefficient(
        site.output_pressure,
        case.junctions[m].pressure_max,
        c,
        site.compressor_efficiency,
        z,
    )
}

/// Emits conversion, water recursion and floor, size cap, compressor power and the
/// peak-power epigraphs for site `s`.
pub fn emit_electrolyser(
    program: &mut ConicProgram,
    case: &PlanningCase,
    s: usize,
) -> Result<SiteVars> {
    let site = &case.sites[s];
    let entity = format!("site:{}", site.id);
    program.claim(&entity)?;
    let c = &case.constants;
    let steps = case.time.steps;
    let k = site_compressor_coefficient(case, s)?;
    let flow_max = site.max_power_mw * site.efficiency / c.hhv_mj_per_m3;
    let water_rate = c.water_per_kg_h2 * c.density_kg_per_m3 * case.time.step_seconds;

    let peak_power = program.continuous("ptg.peak", &entity, None, 0.0, site.max_power_mw);
    let peak_compressor = program.continuous("ptg.cp_peak", &entity, None, 0.0, k * flow_max);
    let mut vars = SiteVars {
        power: Vec::with_capacity(steps),
        flow: Vec::with_capacity(steps),
        water: Vec::with_capacity(steps),
        compressor: Vec::with_capacity(steps),
        peak_power,
        peak_compressor,
        compressor_coefficient: k,
    };
    for t in 0..steps {
        let p = program.continuous("ptg.power", &entity, Some(t), 0.0, site.max_power_mw);
        let phi = program.continuous("ptg.flow", &entity, Some(t), 0.0, flow_max);
        let w = program.continuous(
            "ptg.water",
            &entity,
            Some(t),
            f64::NEG_INFINITY,
            site.initial_water_kg,
        );
        let cp = program.continuous("ptg.compressor", &entity, Some(t), 0.0, k * flow_max);

        program.add_row(
            "ptg.conversion",
            LinExpr::var(phi).with(p, -site.efficiency / c.hhv_mj_per_m3),
            Sense::Eq,
        );
        let prev = match vars.water.last() {
            Some(&w_prev) => LinExpr::term(w_prev, -1.0),
            None => LinExpr::constant(-site.initial_water_kg),
        };
        program.add_row(
            "ptg.water",
            prev.with(w, 1.0).with(phi, water_rate),
            Sense::Eq,
        );
        program.add_row("ptg.water_floor", LinExpr::var(w), Sense::Ge);
        if site.is_demand_site {
            program.add_row("ptg.compressor", LinExpr::var(cp), Sense::Eq);
        } else {
            program.add_row("ptg.compressor", LinExpr::var(cp).with(phi, -k), Sense::Eq);
        }
        program.add_row(
            "ptg.epigraph",
            LinExpr::var(p).with(peak_power, -1.0),
            Sense::Le,
        );
        program.add_row(
            "ptg.epigraph",
            LinExpr::var(cp).with(peak_compressor, -1.0),
            Sense::Le,
        );

        vars.power.push(p);
        vars.flow.push(phi);
        vars.water.push(w);
        vars.compressor.push(cp);
    }
    Ok(vars)
}

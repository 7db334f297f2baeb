//! VSC-HVDC links: per-circuit binaries with sequential installation, converter
//! ratings and losses, AC/DC coupling and the DC line in squared-voltage variables.
//!
//! Units: converter powers in MW/MVAr, AC current in kA, AC bus voltage squared in pu²,
//! DC voltages squared in pu² of the option's nominal DC voltage.

use serde::{Deserialize, Serialize};

use crate::assembler::program::{ConicProgram, LinExpr, Sense, VarId};
use crate::assembler::registry::{NodeVars, Registry};
use crate::error::{Error, Result};
use crate::netmodel::{HvdcOption, Link, PlanningCase};

/// Converter loss (MW) at AC current `i_ka` with install state `z`.
/// β is in volts, so β·i in V·kA is divided by 1000 to give MW; γ·i² in Ω·kA² is MW.
pub fn converter_loss(i_ka: f64, z: f64, alpha_mw: f64, beta_v: f64, gamma_ohm: f64) -> f64 {
    alpha_mw * z + beta_v * 1e-3 * i_ka + gamma_ohm * i_ka * i_ka
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HvdcEndVars {
    pub bus: usize,
    /// AC-side injection drawn from the bus into the converter.
    pub p_ac: Vec<VarId>,
    pub q_ac: Vec<VarId>,
    /// DC-side converter power.
    pub p_dc_side: Vec<VarId>,
    pub current: Vec<VarId>,
    pub current_sq: Vec<VarId>,
    pub loss: Vec<VarId>,
    pub w_dc: Vec<VarId>,
    /// Power leaving this end into the DC line.
    pub p_line: Vec<VarId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HvdcCircuitVars {
    pub z: VarId,
    pub ends: [HvdcEndVars; 2],
    /// Cross term `v_i·v_j` of the DC voltages.
    pub w_cross: Vec<VarId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HvdcOptionVars {
    pub name: String,
    pub cost: f64,
    pub capacity_mw: f64,
    pub option: HvdcOption,
    pub circuits: Vec<HvdcCircuitVars>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HvdcVars {
    pub corridor: String,
    pub from: usize,
    pub to: usize,
    pub options: Vec<HvdcOptionVars>,
}

/// Emits every option and circuit of HVDC corridor `k`.
pub fn emit_hvdc(
    program: &mut ConicProgram,
    case: &PlanningCase,
    k: usize,
    nodes: &NodeVars,
) -> Result<HvdcVars> {
    let cor = &case.corridors[k];
    let Link::Hvdc(options) = &cor.link else {
        return Err(Error::emit(
            "hvdc",
            format!("corridor `{}` is not an HVDC corridor", cor.id),
        ));
    };
    if options.is_empty() {
        return Err(Error::emit(
            "hvdc",
            format!("corridor `{}` has no options", cor.id),
        ));
    }
    program.claim(&format!("hvdc:{}", cor.id))?;
    let bus = |id: &str| {
        case.bus_index(id)
            .ok_or_else(|| Error::emit("hvdc", format!("unknown bus `{id}`")))
    };
    let (from, to) = (bus(&cor.from)?, bus(&cor.to)?);
    let steps = case.time.steps;
    let mut out = HvdcVars {
        corridor: cor.id.clone(),
        from,
        to,
        options: Vec::with_capacity(options.len()),
    };
    for o in options {
        let r = o.resistance_ohm();
        if !(r > 0.0) {
            return Err(Error::emit(
                "hvdc",
                format!("option `{}` has no line resistance", o.name),
            ));
        }
        let line_gain = o.dc_kv * o.dc_kv / r;
        let imax = o.current_max_ka;
        let loss_max = converter_loss(imax, 1.0, o.alpha_mw, o.beta_v, o.gamma_ohm);
        let flow_max = o.s_max_mva + loss_max;
        let w_lo = (o.dc_v_min_kv / o.dc_kv).powi(2);
        let w_hi = (o.dc_v_max_kv / o.dc_kv).powi(2);
        let k_cone = 3f64.sqrt() * o.ac_kv;

        let mut circuits: Vec<HvdcCircuitVars> = Vec::with_capacity(o.max_circuits as usize);
        for c in 1..=o.max_circuits {
            let entity = format!("{}/{}#{c}", cor.id, o.name);
            let z = program.binary("hvdc.z", &entity);
            let mut ends: Vec<HvdcEndVars> = Vec::with_capacity(2);
            for (side, b) in [("from", from), ("to", to)] {
                let e_entity = format!("{entity}:{side}");
                let mut e = HvdcEndVars {
                    bus: b,
                    p_ac: Vec::with_capacity(steps),
                    q_ac: Vec::with_capacity(steps),
                    p_dc_side: Vec::with_capacity(steps),
                    current: Vec::with_capacity(steps),
                    current_sq: Vec::with_capacity(steps),
                    loss: Vec::with_capacity(steps),
                    w_dc: Vec::with_capacity(steps),
                    p_line: Vec::with_capacity(steps),
                };
                for t in 0..steps {
                    let p = program.continuous(
                        "hvdc.p_ac",
                        &e_entity,
                        Some(t),
                        o.p_min_mw.min(0.0),
                        o.p_max_mw.max(0.0),
                    );
                    let q = program.continuous(
                        "hvdc.q_ac",
                        &e_entity,
                        Some(t),
                        o.q_min_mvar.min(0.0),
                        o.q_max_mvar.max(0.0),
                    );
                    let pdc = program.continuous(
                        "hvdc.p_dc_side",
                        &e_entity,
                        Some(t),
                        -flow_max,
                        flow_max,
                    );
                    let i = program.continuous("hvdc.current", &e_entity, Some(t), 0.0, imax);
                    let l =
                        program.continuous("hvdc.current_sq", &e_entity, Some(t), 0.0, imax * imax);
                    let loss = program.continuous("hvdc.loss", &e_entity, Some(t), 0.0, loss_max);
                    let w = program.continuous("hvdc.w_dc", &e_entity, Some(t), 0.0, w_hi);
                    let pl =
                        program.continuous("hvdc.p_line", &e_entity, Some(t), -flow_max, flow_max);

                    program.add_row(
                        "hvdc.converter_box",
                        LinExpr::var(p).with(z, -o.p_max_mw),
                        Sense::Le,
                    );
                    program.add_row(
                        "hvdc.converter_box",
                        LinExpr::var(p).with(z, -o.p_min_mw),
                        Sense::Ge,
                    );
                    program.add_row(
                        "hvdc.converter_box",
                        LinExpr::var(q).with(z, -o.q_max_mvar),
                        Sense::Le,
                    );
                    program.add_row(
                        "hvdc.converter_box",
                        LinExpr::var(q).with(z, -o.q_min_mvar),
                        Sense::Ge,
                    );
                    program.add_soc(
                        "hvdc.converter_mva",
                        LinExpr::term(z, o.s_max_mva),
                        vec![LinExpr::var(p), LinExpr::var(q)],
                    )?;
                    program.add_row(
                        "hvdc.current_onoff",
                        LinExpr::var(i).with(z, -imax),
                        Sense::Le,
                    );
                    program.add_row(
                        "hvdc.current_onoff",
                        LinExpr::var(l).with(z, -imax * imax),
                        Sense::Le,
                    );
                    program.add_row(
                        "hvdc.loss",
                        LinExpr::var(loss)
                            .with(z, -o.alpha_mw)
                            .with(i, -o.beta_v * 1e-3)
                            .with(l, -o.gamma_ohm),
                        Sense::Eq,
                    );
                    // i² ≤ l
                    program.add_rotated(
                        "hvdc.current_sq",
                        LinExpr::var(l),
                        LinExpr::constant(1.0),
                        vec![LinExpr::var(i)],
                    )?;
                    program.add_row(
                        "hvdc.ac_dc",
                        LinExpr::var(p).with(pdc, 1.0).with(loss, -1.0),
                        Sense::Eq,
                    );
                    program.add_row("hvdc.dc_link", LinExpr::var(pdc).with(pl, 1.0), Sense::Eq);
                    // p² + q² ≤ 3·V²·w·l, split evenly between the two factors.
                    program.add_rotated(
                        "hvdc.converter_cone",
                        LinExpr::term(nodes.bus_w[b][t], k_cone),
                        LinExpr::term(l, k_cone),
                        vec![LinExpr::var(p), LinExpr::var(q)],
                    )?;
                    program.add_row("hvdc.dc_voltage", LinExpr::var(w).with(z, -w_lo), Sense::Ge);
                    program.add_row("hvdc.dc_voltage", LinExpr::var(w).with(z, -w_hi), Sense::Le);

                    e.p_ac.push(p);
                    e.q_ac.push(q);
                    e.p_dc_side.push(pdc);
                    e.current.push(i);
                    e.current_sq.push(l);
                    e.loss.push(loss);
                    e.w_dc.push(w);
                    e.p_line.push(pl);
                }
                ends.push(e);
            }
            let mut w_cross = Vec::with_capacity(steps);
            for t in 0..steps {
                let wx = program.continuous("hvdc.w_cross", &entity, Some(t), 0.0, w_hi);
                program.add_row(
                    "hvdc.dc_voltage",
                    LinExpr::var(wx).with(z, -w_lo),
                    Sense::Ge,
                );
                program.add_row(
                    "hvdc.dc_voltage",
                    LinExpr::var(wx).with(z, -w_hi),
                    Sense::Le,
                );
                program.add_rotated(
                    "hvdc.dc_cross",
                    LinExpr::var(ends[0].w_dc[t]),
                    LinExpr::var(ends[1].w_dc[t]),
                    vec![LinExpr::var(wx)],
                )?;
                for e in &ends {
                    program.add_row(
                        "hvdc.dc_flow",
                        LinExpr::var(e.p_line[t])
                            .with(e.w_dc[t], -line_gain)
                            .with(wx, line_gain),
                        Sense::Eq,
                    );
                }
                w_cross.push(wx);
            }
            let ends: [HvdcEndVars; 2] = ends.try_into().expect("two ends");
            circuits.push(HvdcCircuitVars { z, ends, w_cross });
        }
        let zs: Vec<VarId> = circuits.iter().map(|c| c.z).collect();
        emit_sequencing(program, "hvdc.sequencing", &zs, o.max_circuits);
        out.options.push(HvdcOptionVars {
            name: o.name.clone(),
            cost: o.cost(),
            capacity_mw: o.capacity_mw,
            option: o.clone(),
            circuits,
        });
    }
    Ok(out)
}

/// `Σ z ≤ c̄` and `z_c ≤ z_{c−1}`; registers the circuits as one prefix group.
pub(crate) fn emit_sequencing(
    program: &mut ConicProgram,
    family: &str,
    zs: &[VarId],
    max_circuits: u32,
) {
    let mut sum = LinExpr::constant(-f64::from(max_circuits));
    for &z in zs {
        sum.push(z, 1.0);
    }
    program.add_row(family, sum, Sense::Le);
    for w in zs.windows(2) {
        program.add_row(family, LinExpr::var(w[1]).with(w[0], -1.0), Sense::Le);
    }
    program.add_group(zs.to_vec());
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvdcResidual {
    pub corridor: String,
    pub option: String,
    pub circuit: usize,
    pub t: usize,
    pub installed: bool,
    /// `l − i²` per end (kA²).
    pub current_gap: [f64; 2],
    /// `3V²·w·l − (p² + q²)` per end (MVA²).
    pub cone_gap: [f64; 2],
    /// `w_i·w_j − w_ij²` (pu⁴).
    pub dc_ohm_gap: f64,
}

/// Tightness of the HVDC relaxations at solution `x`.
pub fn hvdc_residuals(x: &[f64], registry: &Registry) -> Result<Vec<HvdcResidual>> {
    registry.check_len(x)?;
    let mut out = Vec::new();
    for h in &registry.hvdc {
        for o in &h.options {
            let v2 = 3.0 * o.option.ac_kv * o.option.ac_kv;
            for (ci, c) in o.circuits.iter().enumerate() {
                for t in 0..c.w_cross.len() {
                    let mut current_gap = [0.0; 2];
                    let mut cone_gap = [0.0; 2];
                    for (k, e) in c.ends.iter().enumerate() {
                        let i = x[e.current[t].0];
                        let l = x[e.current_sq[t].0];
                        let (p, q) = (x[e.p_ac[t].0], x[e.q_ac[t].0]);
                        let w = x[registry.nodes.bus_w[e.bus][t].0];
                        current_gap[k] = l - i * i;
                        cone_gap[k] = v2 * w * l - (p * p + q * q);
                    }
                    let wx = x[c.w_cross[t].0];
                    out.push(HvdcResidual {
                        corridor: h.corridor.clone(),
                        option: o.name.clone(),
                        circuit: ci + 1,
                        t,
                        installed: x[c.z.0] > 0.5,
                        current_gap,
                        cone_gap,
                        dc_ohm_gap: x[c.ends[0].w_dc[t].0] * x[c.ends[1].w_dc[t].0] - wx * wx,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idle_and_loaded_losses() {
        assert_eq!(converter_loss(0.0, 1.0, 6.62, 1800.0, 1.98), 6.62);
        assert!((converter_loss(1.0, 1.0, 6.62, 1800.0, 1.98) - 10.40).abs() < 1e-12);
        assert_eq!(converter_loss(0.0, 0.0, 6.62, 1800.0, 1.98), 0.0);
    }

    #[test]
    fn loss_strictly_increasing_in_current() {
        let mut prev = converter_loss(0.0, 1.0, 6.62, 1800.0, 1.98);
        for k in 1..100 {
            let v = converter_loss(f64::from(k) * 0.05, 1.0, 6.62, 1800.0, 1.98);
            assert!(v > prev);
            prev = v;
        }
    }
}

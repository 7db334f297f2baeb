//! HVAC links in lifted voltage-product variables, SVCs and the nodal balances.
//!
//! With `w_r = v_i v_j cos θ_ij` and `w_im = v_i v_j sin θ_ij` the π-model flows are
//!
//! ```text
//! p_ij = g·w_i − g·w_r − b·w_im        q_ij = b_c·w_i + b·w_r − g·w_im
//! p_ji = g·w_j − g·w_r + b·w_im        q_ji = b_c·w_j + b·w_r + g·w_im
//! ```
//!
//! with `b_c = −b − b_ch/2`. Printed versions of these identities that repeat `w_r`
//! in the last term do not follow from the π-model and are not used.

use serde::{Deserialize, Serialize};

use crate::assembler::program::{ConicProgram, LinExpr, Sense, VarId};
use crate::assembler::registry::{NodeVars, Registry};
use crate::electrolyser::SiteVars;
use crate::error::{Error, Result};
use crate::hvdc::{emit_sequencing, HvdcVars};
use crate::netmodel::{per_unit_line, Link, PlanningCase, PuBranch};

/// Sending-end flow `(p_ij, q_ij)` in pu.
pub fn branch_flow(w_i: f64, w_r: f64, w_im: f64, pu: &PuBranch) -> (f64, f64) {
    (
        pu.g_c * w_i - pu.g * w_r - pu.b * w_im,
        pu.b_c * w_i + pu.b * w_r - pu.g * w_im,
    )
}

/// Receiving-end flow `(p_ji, q_ji)` in pu.
pub fn branch_flow_reverse(w_j: f64, w_r: f64, w_im: f64, pu: &PuBranch) -> (f64, f64) {
    (
        pu.g_c * w_j - pu.g * w_r + pu.b * w_im,
        pu.b_c * w_j + pu.b * w_r + pu.g * w_im,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HvacCircuitVars {
    pub z: VarId,
    pub w_from: Vec<VarId>,
    pub w_to: Vec<VarId>,
    pub w_r: Vec<VarId>,
    pub w_im: Vec<VarId>,
    pub p_from: Vec<VarId>,
    pub q_from: Vec<VarId>,
    pub p_to: Vec<VarId>,
    pub q_to: Vec<VarId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HvacOptionVars {
    pub name: String,
    pub cost: f64,
    pub capacity_mw: f64,
    pub pu: PuBranch,
    pub circuits: Vec<HvacCircuitVars>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HvacVars {
    pub corridor: String,
    pub from: usize,
    pub to: usize,
    pub options: Vec<HvacOptionVars>,
}

/// Emits every option and circuit of HVAC corridor `k`. Cone, angle and MVA rows
/// go on the first circuit only unless `cones_all_circuits` is set.
pub fn emit_hvac(
    program: &mut ConicProgram,
    case: &PlanningCase,
    k: usize,
    nodes: &NodeVars,
    cones_all_circuits: bool,
) -> Result<HvacVars> {
    let cor = &case.corridors[k];
    let Link::Hvac(options) = &cor.link else {
        return Err(Error::emit(
            "hvac",
            format!("corridor `{}` is not an HVAC corridor", cor.id),
        ));
    };
    if options.is_empty() {
        return Err(Error::emit(
            "hvac",
            format!("corridor `{}` has no options", cor.id),
        ));
    }
    program.claim(&format!("hvac:{}", cor.id))?;
    let bus = |id: &str| {
        case.bus_index(id)
            .ok_or_else(|| Error::emit("hvac", format!("unknown bus `{id}`")))
    };
    let (i, j) = (bus(&cor.from)?, bus(&cor.to)?);
    let (bi, bj) = (&case.buses[i], &case.buses[j]);
    let base = case.constants.base_mva;
    let steps = case.time.steps;
    let vv = bi.v_max * bj.v_max;

    let mut out = HvacVars {
        corridor: cor.id.clone(),
        from: i,
        to: j,
        options: Vec::with_capacity(options.len()),
    };
    for o in options {
        let pu = per_unit_line(o, o.length_m / 1e3, base, o.voltage_kv)
            .map_err(|e| Error::emit("hvac", format!("corridor `{}`: {e}", cor.id)))?;
        let s_max = o.capacity_mw / base;
        let theta_abs = o.theta_min.abs().max(o.theta_max);
        let wr_lo = bi.v_min * bj.v_min * theta_abs.cos();
        let wim_lo = vv * o.theta_min.sin();
        let wim_hi = vv * o.theta_max.sin();
        let (tan_lo, tan_hi) = (o.theta_min.tan(), o.theta_max.tan());
        let w2 = bi.v_max.powi(2).max(bj.v_max.powi(2));
        let p_bound = pu.g_c.abs() * w2 + (pu.g.abs() + pu.b.abs()) * vv;
        let q_bound = pu.b_c.abs() * w2 + (pu.g.abs() + pu.b.abs()) * vv;

        let mut circuits: Vec<HvacCircuitVars> = Vec::with_capacity(o.max_circuits as usize);
        for c in 1..=o.max_circuits {
            let entity = format!("{}/{}#{c}", cor.id, o.name);
            let z = program.binary("hvac.z", &entity);
            let mut v = HvacCircuitVars {
                z,
                w_from: Vec::with_capacity(steps),
                w_to: Vec::with_capacity(steps),
                w_r: Vec::with_capacity(steps),
                w_im: Vec::with_capacity(steps),
                p_from: Vec::with_capacity(steps),
                q_from: Vec::with_capacity(steps),
                p_to: Vec::with_capacity(steps),
                q_to: Vec::with_capacity(steps),
            };
            let with_cones = c == 1 || cones_all_circuits;
            for t in 0..steps {
                let wi = program.continuous("hvac.w_from", &entity, Some(t), 0.0, bi.v_max.powi(2));
                let wj = program.continuous("hvac.w_to", &entity, Some(t), 0.0, bj.v_max.powi(2));
                let wr = program.continuous("hvac.w_r", &entity, Some(t), 0.0, vv);
                let wim = program.continuous(
                    "hvac.w_im",
                    &entity,
                    Some(t),
                    wim_lo.min(0.0),
                    wim_hi.max(0.0),
                );
                let pf = program.continuous("hvac.p_from", &entity, Some(t), -p_bound, p_bound);
                let qf = program.continuous("hvac.q_from", &entity, Some(t), -q_bound, q_bound);
                let pt = program.continuous("hvac.p_to", &entity, Some(t), -p_bound, p_bound);
                let qt = program.continuous("hvac.q_to", &entity, Some(t), -q_bound, q_bound);

                program.add_row(
                    "hvac.flow",
                    LinExpr::var(pf)
                        .with(wi, -pu.g_c)
                        .with(wr, pu.g)
                        .with(wim, pu.b),
                    Sense::Eq,
                );
                program.add_row(
                    "hvac.flow",
                    LinExpr::var(qf)
                        .with(wi, -pu.b_c)
                        .with(wr, -pu.b)
                        .with(wim, pu.g),
                    Sense::Eq,
                );
                program.add_row(
                    "hvac.flow",
                    LinExpr::var(pt)
                        .with(wj, -pu.g_c)
                        .with(wr, pu.g)
                        .with(wim, -pu.b),
                    Sense::Eq,
                );
                program.add_row(
                    "hvac.flow",
                    LinExpr::var(qt)
                        .with(wj, -pu.b_c)
                        .with(wr, -pu.b)
                        .with(wim, -pu.g),
                    Sense::Eq,
                );

                for (w, b) in [(wi, bi), (wj, bj)] {
                    program.add_row(
                        "hvac.lift",
                        LinExpr::var(w).with(z, -b.v_min.powi(2)),
                        Sense::Ge,
                    );
                    program.add_row(
                        "hvac.lift",
                        LinExpr::var(w).with(z, -b.v_max.powi(2)),
                        Sense::Le,
                    );
                }
                program.add_row("hvac.lift", LinExpr::var(wr).with(z, -wr_lo), Sense::Ge);
                program.add_row("hvac.lift", LinExpr::var(wr).with(z, -vv), Sense::Le);
                program.add_row("hvac.lift", LinExpr::var(wim).with(z, -wim_lo), Sense::Ge);
                program.add_row("hvac.lift", LinExpr::var(wim).with(z, -wim_hi), Sense::Le);

                for (w, b, wb) in [(wi, bi, nodes.bus_w[i][t]), (wj, bj, nodes.bus_w[j][t])] {
                    // v̲²(1−z) ≤ w_bus − w ≤ v̄²(1−z)
                    let lo = b.v_min.powi(2);
                    let hi = b.v_max.powi(2);
                    program.add_row(
                        "hvac.coupling",
                        LinExpr::var(wb).with(w, -1.0).with(z, lo).plus(-lo),
                        Sense::Ge,
                    );
                    program.add_row(
                        "hvac.coupling",
                        LinExpr::var(wb).with(w, -1.0).with(z, hi).plus(-hi),
                        Sense::Le,
                    );
                }

                if let Some(first) = circuits.first() {
                    let (wr1, wim1) = (first.w_r[t], first.w_im[t]);
                    program.add_row("hvac.tie", LinExpr::var(wr1).with(wr, -1.0), Sense::Ge);
                    program.add_row(
                        "hvac.tie",
                        LinExpr::var(wr1).with(wr, -1.0).with(z, vv).plus(-vv),
                        Sense::Le,
                    );
                    program.add_row(
                        "hvac.tie",
                        LinExpr::var(wim1)
                            .with(wim, -1.0)
                            .with(z, wim_lo)
                            .plus(-wim_lo),
                        Sense::Ge,
                    );
                    program.add_row(
                        "hvac.tie",
                        LinExpr::var(wim1)
                            .with(wim, -1.0)
                            .with(z, wim_hi)
                            .plus(-wim_hi),
                        Sense::Le,
                    );
                }

                if with_cones {
                    program.add_rotated(
                        "hvac.voltage_cone",
                        LinExpr::var(wi),
                        LinExpr::var(wj),
                        vec![LinExpr::var(wr), LinExpr::var(wim)],
                    )?;
                    program.add_row("hvac.angle", LinExpr::var(wim).with(wr, -tan_hi), Sense::Le);
                    program.add_row("hvac.angle", LinExpr::var(wim).with(wr, -tan_lo), Sense::Ge);
                    for (p, q) in [(pf, qf), (pt, qt)] {
                        program.add_soc(
                            "hvac.mva",
                            LinExpr::term(z, s_max),
                            vec![LinExpr::var(p), LinExpr::var(q)],
                        )?;
                    }
                }

                v.w_from.push(wi);
                v.w_to.push(wj);
                v.w_r.push(wr);
                v.w_im.push(wim);
                v.p_from.push(pf);
                v.q_from.push(qf);
                v.p_to.push(pt);
                v.q_to.push(qt);
            }
            circuits.push(v);
        }
        let zs: Vec<VarId> = circuits.iter().map(|c| c.z).collect();
        emit_sequencing(program, "hvac.sequencing", &zs, o.max_circuits);
        out.options.push(HvacOptionVars {
            name: o.name.clone(),
            cost: o.cost(),
            capacity_mw: o.capacity_mw,
            pu,
            circuits,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BusVars {
    /// Accommodated VRE (MW).
    pub p_res: Vec<VarId>,
    /// SVC output (MVAr) and its peak, when an SVC is allowed.
    pub q_var: Option<Vec<VarId>>,
    pub q_peak: Option<VarId>,
}

/// Active and reactive balances, VRE bounds and SVCs at every bus.
pub fn emit_balances(
    program: &mut ConicProgram,
    case: &PlanningCase,
    sites: &[SiteVars],
    hvdc: &[HvdcVars],
    hvac: &[HvacVars],
) -> Result<Vec<BusVars>> {
    program.claim("electric-balances")?;
    let base = case.constants.base_mva;
    let steps = case.time.steps;
    let mut out = Vec::with_capacity(case.buses.len());
    for (bi, bus) in case.buses.iter().enumerate() {
        let has_site = case.sites.iter().any(|s| s.bus == bus.id);
        let has_link = hvdc.iter().any(|h| h.from == bi || h.to == bi)
            || hvac.iter().any(|h| h.from == bi || h.to == bi);
        if !has_site && !has_link && bus.res_profile.is_none() && !bus.svc_allowed {
            return Err(Error::emit(
                "hvac",
                format!("bus `{}` is referenced by no link, site or profile", bus.id),
            ));
        }
        let entity = format!("bus:{}", bus.id);
        let avail = case.res_available(bi);
        let (q_var, q_peak) = if bus.svc_allowed {
            let qmax = bus.q_var_min.abs().max(bus.q_var_max);
            let peak = program.continuous("svc.peak", &entity, None, 0.0, qmax);
            let q: Vec<VarId> = (0..steps)
                .map(|t| {
                    let q =
                        program.continuous("svc.q", &entity, Some(t), bus.q_var_min, bus.q_var_max);
                    program.add_row("svc.epigraph", LinExpr::var(q).with(peak, -1.0), Sense::Le);
                    program.add_row(
                        "svc.epigraph",
                        LinExpr::term(q, -1.0).with(peak, -1.0),
                        Sense::Le,
                    );
                    q
                })
                .collect();
            (Some(q), Some(peak))
        } else {
            (None, None)
        };
        let mut p_res = Vec::with_capacity(steps);
        for t in 0..steps {
            let pr = program.continuous(
                "bus.p_res",
                &entity,
                Some(t),
                0.0,
                avail.get(t).copied().unwrap_or(0.0).max(0.0),
            );
            let mut active = LinExpr::var(pr);
            let mut reactive = LinExpr::new();
            if let Some(q) = &q_var {
                reactive.push(q[t], 1.0);
            }
            for (s, site) in case.sites.iter().enumerate() {
                if site.bus == bus.id {
                    active.push(sites[s].power[t], -1.0);
                }
            }
            for h in hvdc {
                for o in &h.options {
                    for c in &o.circuits {
                        for e in &c.ends {
                            if e.bus == bi {
                                active.push(e.p_ac[t], -1.0);
                                reactive.push(e.q_ac[t], 1.0);
                            }
                        }
                    }
                }
            }
            for h in hvac {
                for o in &h.options {
                    for c in &o.circuits {
                        if h.from == bi {
                            active.push(c.p_from[t], -base);
                            reactive.push(c.q_from[t], base);
                        }
                        if h.to == bi {
                            active.push(c.p_to[t], -base);
                            reactive.push(c.q_to[t], base);
                        }
                    }
                }
            }
            program.add_row("bus.active", active, Sense::Eq);
            program.add_row("bus.reactive", reactive, Sense::Eq);
            p_res.push(pr);
        }
        out.push(BusVars {
            p_res,
            q_var,
            q_peak,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub corridor: String,
    pub option: String,
    pub t: usize,
    /// Voltage angle difference (rad).
    pub theta: f64,
    /// `w_i·w_j − (w_r² + w_im²)`.
    pub cone_gap: f64,
}

/// Angle difference across each installed first circuit.
pub fn recover_angles(x: &[f64], registry: &Registry) -> Result<Vec<AngleReport>> {
    registry.check_len(x)?;
    let mut out = Vec::new();
    for h in &registry.hvac {
        for o in &h.options {
            let Some(c) = o.circuits.first() else {
                continue;
            };
            if x[c.z.0] < 0.5 {
                continue;
            }
            for t in 0..c.w_r.len() {
                let (wr, wim) = (x[c.w_r[t].0], x[c.w_im[t].0]);
                out.push(AngleReport {
                    corridor: h.corridor.clone(),
                    option: o.name.clone(),
                    t,
                    theta: wim.atan2(wr),
                    cone_gap: x[c.w_from[t].0] * x[c.w_to[t].0] - (wr * wr + wim * wim),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::Catalog;

    fn pu_500kv(r_zero: bool, b_zero: bool) -> PuBranch {
        let mut o = Catalog::default()
            .hvac("hvac-500kv-single")
            .unwrap()
            .instantiate(200.0);
        if r_zero {
            o.r_ohm_per_km = 0.0;
        }
        if b_zero {
            o.b_ch_us_per_km = 0.0;
        }
        per_unit_line(&o, 200.0, 100.0, 500.0).unwrap()
    }

    #[test]
    fn flat_start_carries_nothing() {
        let pu = pu_500kv(false, true);
        let (p, q) = branch_flow(1.0, 1.0, 0.0, &pu);
        assert!(p.abs() < 1e-12 && q.abs() < 1e-12);
    }

    #[test]
    fn lossless_flow_is_antisymmetric() {
        let pu = pu_500kv(true, true);
        let th: f64 = 0.2;
        let (p, _) = branch_flow(1.0, th.cos(), th.sin(), &pu);
        let (pr, _) = branch_flow_reverse(1.0, th.cos(), th.sin(), &pu);
        assert!(p > 0.0);
        assert!((p + pr).abs() < 1e-12);
        assert!((p + pu.b * th.sin()).abs() < 1e-12);
    }

    #[test]
    fn charging_generates_reactive_power() {
        let pu = pu_500kv(false, false);
        let (_, q) = branch_flow(1.0, 1.0, 0.0, &pu);
        assert!((q + 0.5 * pu.b_ch).abs() < 1e-12);
    }

    #[test]
    fn matches_complex_power_definition() {
        let pu = pu_500kv(false, false);
        let (vi, vj, ti, tj) = (1.05f64, 0.97f64, 0.3f64, -0.1f64);
        // S_ij = V_i · conj(y·(V_i − V_j) + j·b_ch/2·V_i)
        let (yr, yi) = (pu.g, pu.b);
        let (vir, vii) = (vi * ti.cos(), vi * ti.sin());
        let (vjr, vji) = (vj * tj.cos(), vj * tj.sin());
        let (dr, di) = (vir - vjr, vii - vji);
        let ir = yr * dr - yi * di - 0.5 * pu.b_ch * vii;
        let ii = yr * di + yi * dr + 0.5 * pu.b_ch * vir;
        let p_ref = vir * ir + vii * ii;
        let q_ref = vii * ir - vir * ii;
        let wr = vi * vj * (ti - tj).cos();
        let wim = vi * vj * (ti - tj).sin();
        let (p, q) = branch_flow(vi * vi, wr, wim, &pu);
        assert!((p - p_ref).abs() < 1e-9 && (q - q_ref).abs() < 1e-9);
    }
}

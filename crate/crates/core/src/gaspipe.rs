//! Hydrogen pipelines: SRK compressibility, Weymouth and linepack coefficients,
//! pipeline option constraints with big-M pressure coupling, junction gas balances,
//! and residuals measuring how far a solution is from the exact physics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembler::envelope::envelope_avg_pressure;
use crate::assembler::program::{ConicProgram, LinExpr, Sense, VarId};
use crate::assembler::registry::{NodeVars, Registry};
use crate::electrolyser::SiteVars;
use crate::error::{Error, Result};
use crate::netmodel::{Constants, Link, Offtake, PipelineOption, PlanningCase};

/// Compressibility factor of H2 from the Soave–Redlich–Kwong equation of state
/// (largest real root of the cubic).
pub fn srk_z(temperature_k: f64, pressure_pa: f64, constants: &Constants) -> Result<f64> {
    if !(temperature_k > 0.0 && pressure_pa > 0.0) {
        return Err(Error::InvalidInput(format!(
            "SRK needs positive temperature and pressure (got {temperature_k} K, {pressure_pa} Pa)"
        )));
    }
    let tc = constants.critical_temperature_k;
    let pc = constants.critical_pressure_pa;
    let w = constants.acentric_factor;
    let tr = temperature_k / tc;
    let pr = pressure_pa / pc;
    let m = 0.480 + 1.574 * w - 0.176 * w * w;
    let alpha = (1.0 + m * (1.0 - tr.sqrt())).powi(2);
    let a = 0.42748 * alpha * pr / (tr * tr);
    let b = 0.08664 * pr / tr;
    let roots = cubic_real_roots(-1.0, a - b - b * b, -a * b);
    let z = roots
        .into_iter()
        .filter(|z| *z > b)
        .fold(f64::NAN, f64::max);
    if z.is_nan() {
        return Err(Error::InvalidInput(format!(
            "SRK cubic has no physical root at {temperature_k} K, {pressure_pa} Pa"
        )));
    }
    // One Newton polish step against cancellation in the closed form.
    let f = ((z - 1.0) * z + (a - b - b * b)) * z - a * b;
    let df = (3.0 * z - 2.0) * z + (a - b - b * b);
    Ok(if df != 0.0 { z - f / df } else { z })
}

/// Real roots of `z³ + a2·z² + a1·z + a0`.
fn cubic_real_roots(a2: f64, a1: f64, a0: f64) -> Vec<f64> {
    let shift = a2 / 3.0;
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2.powi(3) / 27.0 - a2 * a1 / 3.0 + a0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| r * (phi - 2.0 * PI * f64::from(k) / 3.0).cos() - shift)
            .collect()
    }
}

/// Weymouth friction factor for diameter `d` (m).
pub fn weymouth_friction(diameter_m: f64) -> f64 {
    4.0 / (20.621 * diameter_m.powf(1.0 / 6.0)).powi(2)
}

/// Compressibility at the midpoint of the option's pressure range.
pub fn option_z(option: &PipelineOption, constants: &Constants) -> Result<f64> {
    srk_z(
        constants.gas_temperature_k,
        0.5 * (option.pressure_min + option.pressure_max),
        constants,
    )
}

/// Φ in `φ² = Φ(℘ₘ² − ℘ₙ²)` (m⁶/(s²·Pa²)).
pub fn weymouth_coefficient(option: &PipelineOption, constants: &Constants) -> Result<f64> {
    let z = option_z(option, constants)?;
    let d = option.diameter_m;
    let rho = constants.density_kg_per_m3;
    Ok(option.efficiency * PI * PI * d.powi(5)
        / (16.0
            * rho
            * rho
            * z
            * constants.gas_constant_j_per_kg_k
            * constants.gas_temperature_k
            * option.length_m
            * weymouth_friction(d)))
}

/// Ψ in `ℓ = Ψ·℘_avg` (m³/Pa).
pub fn linepack_coefficient(option: &PipelineOption, constants: &Constants) -> Result<f64> {
    let z = option_z(option, constants)?;
    Ok(PI * option.diameter_m.powi(2) * option.length_m
        / (4.0
            * constants.density_kg_per_m3
            * z
            * constants.gas_constant_j_per_kg_k
            * constants.gas_temperature_k))
}

/// Largest steady flow the option can carry across its full pressure range.
pub fn physical_flow_cap(option: &PipelineOption, constants: &Constants) -> Result<f64> {
    let phi = weymouth_coefficient(option, constants)?;
    Ok((phi * (option.pressure_max.powi(2) - option.pressure_min.powi(2))).sqrt())
}

/// Exact average pressure of a pipe with end pressures `x`, `y`.
pub fn exact_avg_pressure(x: f64, y: f64) -> f64 {
    if x + y == 0.0 {
        return 0.0;
    }
    2.0 / 3.0 * (x + y - x * y / (x + y))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipeOptionVars {
    pub name: String,
    pub z: VarId,
    pub p_from: Vec<VarId>,
    pub p_to: Vec<VarId>,
    pub p_avg: Vec<VarId>,
    pub flow: Vec<VarId>,
    pub flow_in: Vec<VarId>,
    pub flow_out: Vec<VarId>,
    pub linepack: Vec<VarId>,
    pub weymouth: f64,
    pub linepack_coef: f64,
    /// Initial linepack when installed (m³).
    pub linepack_initial: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipeVars {
    pub corridor: String,
    pub from: usize,
    pub to: usize,
    pub options: Vec<PipeOptionVars>,
}

/// Emits every option of pipeline corridor `k`.
pub fn emit_pipeline(
    program: &mut ConicProgram,
    case: &PlanningCase,
    k: usize,
    nodes: &NodeVars,
    envelope_cuts: usize,
) -> Result<PipeVars> {
    let cor = &case.corridors[k];
    let Link::Pipeline(options) = &cor.link else {
        return Err(Error::emit(
            "gaspipe",
            format!("corridor `{}` is not a pipeline", cor.id),
        ));
    };
    if options.is_empty() {
        return Err(Error::emit(
            "gaspipe",
            format!("corridor `{}` has no options", cor.id),
        ));
    }
    program.claim(&format!("pipeline:{}", cor.id))?;
    let c = &case.constants;
    let m = case
        .junction_index(&cor.from)
        .ok_or_else(|| Error::emit("gaspipe", format!("unknown junction `{}`", cor.from)))?;
    let n = case
        .junction_index(&cor.to)
        .ok_or_else(|| Error::emit("gaspipe", format!("unknown junction `{}`", cor.to)))?;
    let (jm, jn) = (&case.junctions[m], &case.junctions[n]);
    let cuts = envelope_avg_pressure(
        (jm.pressure_min, jm.pressure_max),
        (jn.pressure_min, jn.pressure_max),
        envelope_cuts,
    )?;
    let dt = case.time.step_seconds;
    let steps = case.time.steps;

    let mut out = PipeVars {
        corridor: cor.id.clone(),
        from: m,
        to: n,
        options: Vec::with_capacity(options.len()),
    };
    for o in options {
        let entity = format!("{}/{}", cor.id, o.name);
        let weymouth = weymouth_coefficient(o, c)?;
        let psi = linepack_coefficient(o, c)?;
        let cap = match o.flow_cap {
            Some(cap) => cap,
            None => physical_flow_cap(o, c)?,
        };
        let root = weymouth.sqrt();
        let z = program.binary("pipe.z", &entity);
        program.add_group(vec![z]);
        let mut v = PipeOptionVars {
            name: o.name.clone(),
            z,
            p_from: Vec::with_capacity(steps),
            p_to: Vec::with_capacity(steps),
            p_avg: Vec::with_capacity(steps),
            flow: Vec::with_capacity(steps),
            flow_in: Vec::with_capacity(steps),
            flow_out: Vec::with_capacity(steps),
            linepack: Vec::with_capacity(steps),
            weymouth,
            linepack_coef: psi,
            linepack_initial: psi * jn.pressure_min,
            cost: o.cost(),
        };
        for t in 0..steps {
            let pm = program.continuous("pipe.p_from", &entity, Some(t), 0.0, jm.pressure_max);
            let pn = program.continuous("pipe.p_to", &entity, Some(t), 0.0, jn.pressure_max);
            let pavg = program.continuous("pipe.p_avg", &entity, Some(t), 0.0, jm.pressure_max);
            let phi = program.continuous("pipe.flow", &entity, Some(t), 0.0, cap);
            let phi_in = program.continuous("pipe.flow_in", &entity, Some(t), 0.0, cap);
            let phi_out = program.continuous("pipe.flow_out", &entity, Some(t), 0.0, cap);
            let lp = program.continuous(
                "pipe.linepack",
                &entity,
                Some(t),
                0.0,
                psi * jm.pressure_max,
            );
            let pj_m = nodes.pressure[m][t];
            let pj_n = nodes.pressure[n][t];

            program.add_soc(
                "pipe.weymouth",
                LinExpr::term(pm, root),
                vec![LinExpr::var(phi), LinExpr::term(pn, root)],
            )?;
            for (p, j) in [(pm, jm), (pn, jn)] {
                program.add_row(
                    "pipe.pressure_onoff",
                    LinExpr::var(p).with(z, -j.pressure_min),
                    Sense::Ge,
                );
                program.add_row(
                    "pipe.pressure_onoff",
                    LinExpr::var(p).with(z, -j.pressure_max),
                    Sense::Le,
                );
            }
            for (p, pj, j) in [(pm, pj_m, jm), (pn, pj_n, jn)] {
                // ℘min(1−z) ≤ ℘ⱼ − ℘ᵒ ≤ ℘max(1−z)
                program.add_row(
                    "pipe.pressure_coupling",
                    LinExpr::var(pj)
                        .with(p, -1.0)
                        .with(z, j.pressure_min)
                        .plus(-j.pressure_min),
                    Sense::Ge,
                );
                program.add_row(
                    "pipe.pressure_coupling",
                    LinExpr::var(pj)
                        .with(p, -1.0)
                        .with(z, j.pressure_max)
                        .plus(-j.pressure_max),
                    Sense::Le,
                );
            }
            program.add_row(
                "pipe.split",
                LinExpr::var(phi).with(phi_in, -0.5).with(phi_out, -0.5),
                Sense::Eq,
            );
            for cut in &cuts {
                program.add_row(
                    "pipe.envelope",
                    LinExpr::var(pavg)
                        .with(pm, -2.0 / 3.0 * (1.0 + cut.dx))
                        .with(pn, -2.0 / 3.0 * (1.0 + cut.dy)),
                    Sense::Ge,
                );
            }
            program.add_row(
                "pipe.avg_upper",
                LinExpr::var(pavg).with(pm, -1.0),
                Sense::Le,
            );
            program.add_row(
                "pipe.linepack",
                LinExpr::var(lp).with(pavg, -psi),
                Sense::Eq,
            );
            let prev = match v.linepack.last() {
                Some(&l) => LinExpr::term(l, -1.0),
                None => LinExpr::term(z, -v.linepack_initial),
            };
            program.add_row(
                "pipe.continuity",
                prev.with(lp, 1.0).with(phi_in, -dt).with(phi_out, dt),
                Sense::Eq,
            );

            v.p_from.push(pm);
            v.p_to.push(pn);
            v.p_avg.push(pavg);
            v.flow.push(phi);
            v.flow_in.push(phi_in);
            v.flow_out.push(phi_out);
            v.linepack.push(lp);
        }
        out.options.push(v);
    }
    Ok(out)
}

/// H2 off-take at a junction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum OfftakeVars {
    None,
    Fixed(Vec<f64>),
    Sale(Vec<VarId>),
}

impl OfftakeVars {
    pub fn value(&self, x: &[f64], t: usize) -> f64 {
        match self {
            OfftakeVars::None => 0.0,
            OfftakeVars::Fixed(d) => d[t],
            OfftakeVars::Sale(v) => x[v[t].0],
        }
    }
}

/// Declares the off-take of every junction. Sale points without an explicit cap are
/// bounded by the total electrolyser output.
pub fn emit_offtakes(program: &mut ConicProgram, case: &PlanningCase) -> Vec<OfftakeVars> {
    let c = &case.constants;
    let total_flow: f64 = case
        .sites
        .iter()
        .map(|s| s.max_power_mw * s.efficiency / c.hhv_mj_per_m3)
        .sum();
    case.junctions
        .iter()
        .map(|j| match &j.offtake {
            Offtake::None => OfftakeVars::None,
            Offtake::Fixed(key) => {
                OfftakeVars::Fixed(case.profiles.get(key).cloned().unwrap_or_default())
            }
            Offtake::Sale { max_flow } => {
                let ub = max_flow.unwrap_or(total_flow);
                let entity = format!("junction:{}", j.id);
                OfftakeVars::Sale(
                    (0..case.time.steps)
                        .map(|t| program.continuous("gas.offtake", &entity, Some(t), 0.0, ub))
                        .collect(),
                )
            }
        })
        .collect()
}

/// Gas balance per junction and step:
/// `φ^ptg − µ·p^cp = Σ_out φ^in − Σ_in φ^out + φ^d`.
pub fn emit_gas_balances(
    program: &mut ConicProgram,
    case: &PlanningCase,
    sites: &[SiteVars],
    pipes: &[PipeVars],
    offtakes: &[OfftakeVars],
) -> Result<()> {
    program.claim("gas-balances")?;
    let mu = case.constants.fuel_rate_m3_per_mj;
    for (m, j) in case.junctions.iter().enumerate() {
        for t in 0..case.time.steps {
            let mut e = LinExpr::new();
            for (s, site) in case.sites.iter().enumerate() {
                if site.junction == j.id {
                    e.push(sites[s].flow[t], 1.0);
                    e.push(sites[s].compressor[t], -mu);
                }
            }
            for p in pipes {
                for o in &p.options {
                    if p.from == m {
                        e.push(o.flow_in[t], -1.0);
                    }
                    if p.to == m {
                        e.push(o.flow_out[t], 1.0);
                    }
                }
            }
            match &offtakes[m] {
                OfftakeVars::None => {}
                OfftakeVars::Fixed(d) => e.constant -= d[t],
                OfftakeVars::Sale(v) => e.push(v[t], -1.0),
            }
            program.add_row("gas.balance", e, Sense::Eq);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipeResidual {
    pub corridor: String,
    pub option: String,
    pub t: usize,
    pub installed: bool,
    /// Φ(℘ₘ² − ℘ₙ²) − φ²; negative means the point violates the Weymouth relaxation.
    pub weymouth_slack: f64,
    /// ℘_avg minus the exact average pressure of the end pressures.
    pub avgpress_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceResidual {
    pub junction: String,
    pub t: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GasResiduals {
    pub pipes: Vec<PipeResidual>,
    pub balances: Vec<BalanceResidual>,
}

/// Exactness report of the gas side at solution `x`.
pub fn gas_residuals(x: &[f64], registry: &Registry, case: &PlanningCase) -> Result<GasResiduals> {
    registry.check_len(x)?;
    let mut out = GasResiduals::default();
    for p in &registry.pipes {
        for o in &p.options {
            let installed = x[o.z.0] > 0.5;
            for t in 0..o.flow.len() {
                let (pm, pn) = (x[o.p_from[t].0], x[o.p_to[t].0]);
                let phi = x[o.flow[t].0];
                out.pipes.push(PipeResidual {
                    corridor: p.corridor.clone(),
                    option: o.name.clone(),
                    t,
                    installed,
                    weymouth_slack: o.weymouth * (pm * pm - pn * pn) - phi * phi,
                    avgpress_slack: x[o.p_avg[t].0] - exact_avg_pressure(pm, pn),
                });
            }
        }
    }
    let mu = case.constants.fuel_rate_m3_per_mj;
    for (m, j) in case.junctions.iter().enumerate() {
        for t in 0..case.time.steps {
            let mut lhs = 0.0;
            for (s, site) in case.sites.iter().enumerate() {
                if site.junction == j.id {
                    lhs +=
                        x[registry.sites[s].flow[t].0] - mu * x[registry.sites[s].compressor[t].0];
                }
            }
            let mut rhs = registry.offtakes[m].value(x, t);
            for p in &registry.pipes {
                for o in &p.options {
                    if p.from == m {
                        rhs += x[o.flow_in[t].0];
                    }
                    if p.to == m {
                        rhs -= x[o.flow_out[t].0];
                    }
                }
            }
            out.balances.push(BalanceResidual {
                junction: j.id.clone(),
                t,
                residual: lhs - rhs,
            });
        }
    }
    Ok(out)
}

/// Summed continuity of one installed pipe option: final minus initial linepack
/// against the net volume injected over the horizon (m³).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telescoping {
    pub corridor: String,
    pub option: String,
    pub initial: f64,
    pub final_linepack: f64,
    pub net_injection: f64,
    /// `|Δℓ − net| / max(1, ℓ₀)`.
    pub relative_error: f64,
}

pub fn linepack_telescoping(
    x: &[f64],
    registry: &Registry,
    step_seconds: f64,
) -> Result<Vec<Telescoping>> {
    registry.check_len(x)?;
    let mut out = Vec::new();
    for p in &registry.pipes {
        for o in &p.options {
            if x[o.z.0] <= 0.5 {
                continue;
            }
            let Some(last) = o.linepack.last() else {
                continue;
            };
            let initial = o.linepack_initial * x[o.z.0];
            let net: f64 = o
                .flow_in
                .iter()
                .zip(&o.flow_out)
                .map(|(i, j)| step_seconds * (x[i.0] - x[j.0]))
                .sum();
            let final_linepack = x[last.0];
            out.push(Telescoping {
                corridor: p.corridor.clone(),
                option: o.name.clone(),
                initial,
                final_linepack,
                net_injection: net,
                relative_error: ((final_linepack - initial) - net).abs() / initial.abs().max(1.0),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::catalog::{Catalog, MPA};

    fn half_metre(length_km: f64) -> PipelineOption {
        Catalog::default()
            .pipeline("pipe-0.5m")
            .unwrap()
            .instantiate(length_km)
    }

    #[test]
    fn srk_ideal_gas_limit() {
        let c = Constants::default();
        let z = srk_z(288.15, 1.0, &c).unwrap();
        assert!((z - 1.0).abs() < 1e-6);
    }

    #[test]
    fn srk_operating_point_in_range() {
        let z = srk_z(288.15, 3.5 * MPA, &Constants::default()).unwrap();
        assert!((1.0..1.1).contains(&z), "{z}");
    }

    #[test]
    fn friction_values_and_monotonicity() {
        assert!((weymouth_friction(0.5) - 0.011852).abs() < 5e-7);
        assert!((weymouth_friction(0.9) - 0.009743).abs() < 5e-7);
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let f = weymouth_friction(f64::from(i) * 0.01);
            assert!(f < prev);
            prev = f;
        }
    }

    #[test]
    fn coefficient_scaling() {
        let c = Constants::default();
        let a = weymouth_coefficient(&half_metre(100.0), &c).unwrap();
        let b = weymouth_coefficient(&half_metre(200.0), &c).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        let mut wide = half_metre(100.0);
        wide.diameter_m = 1.0;
        let r = linepack_coefficient(&wide, &c).unwrap()
            / linepack_coefficient(&half_metre(100.0), &c).unwrap();
        assert!((r - 4.0).abs() < 1e-12);
    }

    #[test]
    fn equal_pressures_average_to_themselves() {
        for p in [3.5 * MPA, 7.0 * MPA, 10.0 * MPA] {
            assert!((exact_avg_pressure(p, p) - p).abs() <= 1e-9 * p);
        }
    }
}

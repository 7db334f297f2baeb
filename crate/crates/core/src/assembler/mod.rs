//! Builds the full mixed-integer conic program from a validated case and decodes
//! solutions back into investment plans.

pub mod envelope;
pub mod program;
pub mod registry;

use serde::{Deserialize, Serialize};

use crate::electrolyser::emit_electrolyser;
use crate::error::{Error, Result};
use crate::gaspipe::{
    self, emit_gas_balances, emit_offtakes, emit_pipeline, GasResiduals, OfftakeVars, Telescoping,
};
use crate::hvac::{self, emit_balances, emit_hvac, AngleReport};
use crate::hvdc::{self, emit_hvdc, HvdcResidual};
use crate::netmodel::{Link, Offtake, PlanningCase};

pub use envelope::{envelope_avg_pressure, EnvelopeCut};
pub use program::{ConicProgram, LinExpr, ProgramStats, Sense, VarId, VarKind};
pub use registry::{emit_nodes, NodeVars, Registry};

/// NPV multiplier: `scale·(1/ι)·(1 − (1+ι)^−life)`.
pub fn annuity_factor(discount_rate: f64, life_years: f64, scale: f64) -> f64 {
    scale / discount_rate * (1.0 - (1.0 + discount_rate).powf(-life_years))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssembleOptions {
    /// Tangent points per axis of the average-pressure envelope.
    pub envelope_cuts: usize,
    /// Put the voltage cone, angle and MVA rows on every HVAC circuit.
    pub cones_all_circuits: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self {
            envelope_cuts: 5,
            cones_all_circuits: false,
        }
    }
}

/// Assembles the relaxed planning program of a validated case.
pub fn assemble(
    case: &PlanningCase,
    options: &AssembleOptions,
) -> Result<(ConicProgram, Registry)> {
    let mut program = ConicProgram::new();
    let nodes = emit_nodes(&mut program, case);
    let mut sites = Vec::with_capacity(case.sites.len());
    for s in 0..case.sites.len() {
        if case.sites[s].base_cost != 0.0 {
            log::warn!(
                "site `{}`: base installation cost is not modelled and is ignored",
                case.sites[s].id
            );
        }
        sites.push(emit_electrolyser(&mut program, case, s)?);
    }
    let mut pipes = Vec::new();
    let mut hvdc_vars = Vec::new();
    let mut hvac_vars = Vec::new();
    for (k, cor) in case.corridors.iter().enumerate() {
        match cor.link {
            Link::Pipeline(_) => pipes.push(emit_pipeline(
                &mut program,
                case,
                k,
                &nodes,
                options.envelope_cuts,
            )?),
            Link::Hvdc(_) => hvdc_vars.push(emit_hvdc(&mut program, case, k, &nodes)?),
            Link::Hvac(_) => hvac_vars.push(emit_hvac(
                &mut program,
                case,
                k,
                &nodes,
                options.cones_all_circuits,
            )?),
        }
    }
    let offtakes = emit_offtakes(&mut program, case);
    emit_gas_balances(&mut program, case, &sites, &pipes, &offtakes)?;
    let buses = emit_balances(&mut program, case, &sites, &hvdc_vars, &hvac_vars)?;

    let annuity = annuity_factor(
        case.time.discount_rate,
        case.time.life_years,
        case.time.year_scale,
    );
    let mut obj = LinExpr::new();
    for p in &pipes {
        for o in &p.options {
            obj.push(o.z, o.cost);
        }
    }
    for h in &hvdc_vars {
        for o in &h.options {
            for c in &o.circuits {
                obj.push(c.z, o.cost);
            }
        }
    }
    for h in &hvac_vars {
        for o in &h.options {
            for c in &o.circuits {
                obj.push(c.z, o.cost);
            }
        }
    }
    for (s, site) in case.sites.iter().enumerate() {
        obj.push(sites[s].peak_power, site.unit_cost);
        obj.push(sites[s].peak_compressor, site.compressor_unit_cost);
    }
    for (b, bus) in case.buses.iter().enumerate() {
        if let Some(peak) = buses[b].q_peak {
            obj.push(peak, bus.svc_unit_cost);
        }
    }
    let revenue_rate = annuity * case.time.step_seconds * 1e-6;
    for (m, j) in case.junctions.iter().enumerate() {
        let coef = revenue_rate * j.h2_price_per_m3;
        match &offtakes[m] {
            OfftakeVars::None => {}
            OfftakeVars::Fixed(d) => obj.constant -= coef * d.iter().sum::<f64>(),
            OfftakeVars::Sale(v) => {
                for &var in v {
                    obj.push(var, -coef);
                }
            }
        }
    }
    program.set_objective(obj);
    program
        .check()
        .map_err(|e| Error::emit("assembler", e.to_string()))?;
    let registry = Registry {
        nodes,
        sites,
        pipes,
        hvdc: hvdc_vars,
        hvac: hvac_vars,
        buses,
        offtakes,
        num_vars: program.num_vars(),
        annuity,
    };
    Ok((program, registry))
}

/// Net present cost split (M$). `total = ptg + pipe + hvdc + hvac − h2_revenue`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub ptg: f64,
    pub pipe: f64,
    pub hvdc: f64,
    /// HVAC lines plus SVCs.
    pub hvac: f64,
    pub h2_revenue: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn investment(&self) -> f64 {
        self.ptg + self.pipe + self.hvdc + self.hvac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenLink {
    pub corridor: String,
    pub kind: String,
    pub option: String,
    pub circuits: usize,
    pub capacity_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSize {
    pub site: String,
    pub power_mw: f64,
    pub compressor_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvcSize {
    pub bus: String,
    pub mvar: f64,
}

/// Named per-step series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    /// Per bus, MW.
    pub res_available: Vec<Series>,
    pub res_accommodated: Vec<Series>,
    /// Per junction with off-take, m³/s.
    pub demand: Vec<Series>,
    /// Per installed pipe option, m³ at standard conditions.
    pub linepack: Vec<Series>,
    /// Per junction, Pa.
    pub pressure: Vec<Series>,
    /// Per bus, pu².
    pub voltage_sq: Vec<Series>,
    /// Per installed HVDC circuit, both converters together (MW).
    pub converter_loss: Vec<Series>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub gas: GasResiduals,
    pub telescoping: Vec<Telescoping>,
    pub hvdc: Vec<HvdcResidual>,
    pub angles: Vec<AngleReport>,
}

/// Decoded investment plan with operating series and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSolution {
    pub case: String,
    pub links: Vec<ChosenLink>,
    pub electrolysers: Vec<SiteSize>,
    pub svcs: Vec<SvcSize>,
    pub costs: CostBreakdown,
    /// Accommodated over available VRE energy; 1 when no VRE is available.
    pub transmission_factor: f64,
    pub series: TimeSeries,
    pub residuals: Residuals,
    pub warnings: Vec<String>,
}

impl PlanSolution {
    pub fn is_empty(&self) -> bool {
        self.links.is_empty() && self.electrolysers.iter().all(|s| s.power_mw <= 1e-6)
    }

    pub fn technologies(&self) -> Vec<String> {
        let mut kinds: Vec<String> = self.links.iter().map(|l| l.kind.clone()).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }
}

fn peak(x: &[f64], vars: &[VarId]) -> f64 {
    vars.iter().map(|v| x[v.0]).fold(0.0, f64::max)
}

fn series(x: &[f64], vars: &[VarId]) -> Vec<f64> {
    vars.iter().map(|v| x[v.0]).collect()
}

/// Maps a solution vector back to a plan. Binaries are read as installed above 0.5
/// and costs are recomputed from the decoded sizes.
pub fn decode(x: &[f64], registry: &Registry, case: &PlanningCase) -> Result<PlanSolution> {
    registry.check_len(x)?;
    let on = |v: VarId| x[v.0] > 0.5;
    let mut links = Vec::new();
    let mut costs = CostBreakdown::default();
    let mut ts = TimeSeries::default();
    let mut warnings = Vec::new();
    let steps = case.time.steps;

    for p in &registry.pipes {
        let cor = case.corridors.iter().find(|c| c.id == p.corridor);
        for (oi, o) in p.options.iter().enumerate() {
            if !on(o.z) {
                continue;
            }
            costs.pipe += o.cost;
            let cap = match cor.map(|c| &c.link) {
                Some(Link::Pipeline(opts)) => {
                    opts[oi].flow_cap.unwrap_or(0.0) * case.constants.hhv_mj_per_m3
                }
                _ => 0.0,
            };
            links.push(ChosenLink {
                corridor: p.corridor.clone(),
                kind: "pipeline".into(),
                option: o.name.clone(),
                circuits: 1,
                capacity_mw: cap,
            });
            let lp = series(x, &o.linepack);
            if let Some(&last) = lp.last() {
                if last < o.linepack_initial * (1.0 - 1e-6) {
                    warnings.push(format!(
                        "{}/{}: final linepack {:.4e} m³ below its initial value {:.4e} m³",
                        p.corridor, o.name, last, o.linepack_initial
                    ));
                }
            }
            ts.linepack.push(Series {
                name: format!("{}/{}", p.corridor, o.name),
                values: lp,
            });
        }
    }
    for h in &registry.hvdc {
        for o in &h.options {
            let installed: Vec<_> = o.circuits.iter().filter(|c| on(c.z)).collect();
            if installed.is_empty() {
                continue;
            }
            costs.hvdc += o.cost * installed.len() as f64;
            links.push(ChosenLink {
                corridor: h.corridor.clone(),
                kind: "hvdc".into(),
                option: o.name.clone(),
                circuits: installed.len(),
                capacity_mw: o.capacity_mw * installed.len() as f64,
            });
            for (ci, c) in installed.iter().enumerate() {
                ts.converter_loss.push(Series {
                    name: format!("{}/{}#{}", h.corridor, o.name, ci + 1),
                    values: (0..steps)
                        .map(|t| x[c.ends[0].loss[t].0] + x[c.ends[1].loss[t].0])
                        .collect(),
                });
            }
        }
    }
    for h in &registry.hvac {
        for o in &h.options {
            let n = o.circuits.iter().filter(|c| on(c.z)).count();
            if n == 0 {
                continue;
            }
            costs.hvac += o.cost * n as f64;
            links.push(ChosenLink {
                corridor: h.corridor.clone(),
                kind: "hvac".into(),
                option: o.name.clone(),
                circuits: n,
                capacity_mw: o.capacity_mw * n as f64,
            });
        }
    }

    let mut electrolysers = Vec::new();
    for (s, site) in case.sites.iter().enumerate() {
        let v = &registry.sites[s];
        let power = peak(x, &v.power);
        let cp = peak(x, &v.compressor);
        costs.ptg += site.unit_cost * power + site.compressor_unit_cost * cp;
        electrolysers.push(SiteSize {
            site: site.id.clone(),
            power_mw: power,
            compressor_mw: cp,
        });
    }
    let mut svcs = Vec::new();
    let mut avail_total = 0.0;
    let mut used_total = 0.0;
    for (b, bus) in case.buses.iter().enumerate() {
        let v = &registry.buses[b];
        if let Some(q) = &v.q_var {
            let size = q.iter().map(|v| x[v.0].abs()).fold(0.0, f64::max);
            costs.hvac += bus.svc_unit_cost * size;
            if size > 1e-6 {
                svcs.push(SvcSize {
                    bus: bus.id.clone(),
                    mvar: size,
                });
            }
        }
        let avail = case.res_available(b);
        let used = series(x, &v.p_res);
        avail_total += avail.iter().sum::<f64>();
        used_total += used.iter().sum::<f64>();
        ts.res_available.push(Series {
            name: bus.id.clone(),
            values: avail,
        });
        ts.res_accommodated.push(Series {
            name: bus.id.clone(),
            values: used,
        });
        ts.voltage_sq.push(Series {
            name: bus.id.clone(),
            values: series(x, &registry.nodes.bus_w[b]),
        });
    }
    let revenue_rate = registry.annuity * case.time.step_seconds * 1e-6;
    for (m, j) in case.junctions.iter().enumerate() {
        ts.pressure.push(Series {
            name: j.id.clone(),
            values: series(x, &registry.nodes.pressure[m]),
        });
        if matches!(j.offtake, Offtake::None) {
            continue;
        }
        let d: Vec<f64> = (0..steps)
            .map(|t| registry.offtakes[m].value(x, t))
            .collect();
        costs.h2_revenue += revenue_rate * j.h2_price_per_m3 * d.iter().sum::<f64>();
        ts.demand.push(Series {
            name: j.id.clone(),
            values: d,
        });
    }
    costs.total = costs.investment() - costs.h2_revenue;
    let transmission_factor = if avail_total > 0.0 {
        used_total / avail_total
    } else {
        1.0
    };
    let residuals = Residuals {
        gas: gaspipe::gas_residuals(x, registry, case)?,
        telescoping: gaspipe::linepack_telescoping(x, registry, case.time.step_seconds)?,
        hvdc: hvdc::hvdc_residuals(x, registry)?,
        angles: hvac::recover_angles(x, registry)?,
    };
    Ok(PlanSolution {
        case: case.name.clone(),
        links,
        electrolysers,
        svcs,
        costs,
        transmission_factor,
        series: ts,
        residuals,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annuity_values() {
        let f = annuity_factor(0.06, 20.0, 13.04);
        assert!((f - 149.57).abs() < 5e-3);
        assert_eq!(annuity_factor(0.06, 0.0, 13.04), 0.0);
    }
}

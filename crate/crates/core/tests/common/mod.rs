#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use vreplan::io::case::CaseFile;
use vreplan::io::profiles::blended_profile;
use vreplan::netmodel::{build_time_index, PlanningCase};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

/// Two-node instance over one day with a trimmed menu: two pipe diameters, one
/// HVDC option with two circuits, one single and one double HVAC arrangement.
pub fn small_two_node(steps: usize, distance_km: f64, capacity_mw: f64) -> PlanningCase {
    let step_hours = 24.0 / steps as f64;
    let text = format!(
        r#"
schema = "vreplan-case/1"
name = "small-{steps}"

[time]
step_hours = {step_hours}
days = 1

[[buses]]
id = "rez"
svc = true
res_profile = "rez"

[[buses]]
id = "demand"
svc = true

[[junctions]]
id = "rez"

[[junctions]]
id = "demand"
offtake = "sale"

[[sites]]
id = "ptg-rez"
bus = "rez"
junction = "rez"
max_power_mw = {cap}

[[sites]]
id = "ptg-demand"
bus = "demand"
junction = "demand"
max_power_mw = {cap}
demand_site = true

[[corridors]]
id = "gas"
kind = "pipeline"
from = "rez"
to = "demand"
length_km = {distance_km}
options = ["pipe-0.5m", "pipe-0.9m"]

[[corridors]]
id = "dc"
kind = "hvdc"
from = "rez"
to = "demand"
length_km = {distance_km}
options = ["hvdc-2gw"]

[[corridors]]
id = "ac"
kind = "hvac"
from = "rez"
to = "demand"
length_km = {distance_km}
options = ["hvac-500kv-single", "hvac-500kv-double"]
"#,
        cap = 2.0 * capacity_mw,
    );
    let file = CaseFile::parse(&text, "small").unwrap();
    let time = build_time_index(&file.time.config().unwrap()).unwrap();
    assert_eq!(time.steps, steps);
    let mut profiles = BTreeMap::new();
    profiles.insert(
        "rez".to_owned(),
        blended_profile(&time, capacity_mw, 0.5, 0.5).unwrap(),
    );
    file.build_with_profiles(time, profiles).unwrap()
}

/// Two junctions joined by one 0.5 m pipe and two buses joined by one 500 kV
/// circuit, both forced in, with a constant VRE supply at the source.
pub fn pipe_and_line(steps: usize, length_km: f64) -> PlanningCase {
    let step_hours = 24.0 / steps as f64;
    let supply = vec![6000.0; steps];
    let text = format!(
        r#"
schema = "vreplan-case/1"
name = "pipe-and-line"

[time]
step_hours = {step_hours}
days = 1

[profiles.series]
src = {supply:?}

[[buses]]
id = "a"
svc = true
res_profile = "src"

[[buses]]
id = "b"
svc = true

[[junctions]]
id = "a"

[[junctions]]
id = "b"
offtake = "sale"

[[sites]]
id = "ptg-a"
bus = "a"
junction = "a"
max_power_mw = 6000

[[corridors]]
id = "gas"
kind = "pipeline"
from = "a"
to = "b"
length_km = {length_km}
options = ["pipe-0.5m"]

[[corridors]]
id = "ac"
kind = "hvac"
from = "a"
to = "b"
length_km = {length_km}
options = ["hvac-500kv-single"]
"#
    );
    CaseFile::parse(&text, "pipe-and-line")
        .unwrap()
        .build(&data(""))
        .unwrap()
}

/// Exact-physics operating point of [`pipe_and_line`] with both links installed:
/// steady pipe pressures `p_from > p_to` with the flow at Weymouth equality, exact
/// average pressure and linepack, and the AC circuit at uniform voltage `v` with zero
/// angle. The first step absorbs the linepack fill from its initial value. `None`
/// when the point leaves a variable bound of `program` (flow or power cap).
pub fn exact_point(
    case: &PlanningCase,
    program: &vreplan::assembler::ConicProgram,
    registry: &vreplan::assembler::Registry,
    p_from: f64,
    p_to: f64,
    v: f64,
) -> Option<Vec<f64>> {
    use vreplan::gaspipe::{exact_avg_pressure, OfftakeVars};
    use vreplan::hvac::{branch_flow, branch_flow_reverse};

    let steps = case.time.steps;
    let dt = case.time.step_seconds;
    let c = &case.constants;
    let mut x = vec![0.0; registry.num_vars];

    let (a, b) = (case.junction_index("a")?, case.junction_index("b")?);
    for t in 0..steps {
        x[registry.nodes.pressure[a][t].0] = p_from;
        x[registry.nodes.pressure[b][t].0] = p_to;
        for w in &registry.nodes.bus_w {
            x[w[t].0] = v * v;
        }
    }

    let pipe = &registry.pipes[0].options[0];
    let phi = (pipe.weymouth * (p_from * p_from - p_to * p_to)).sqrt();
    let avg = exact_avg_pressure(p_from, p_to);
    let lp = pipe.linepack_coef * avg;
    let fill = (lp - pipe.linepack_initial) / (2.0 * dt);
    x[pipe.z.0] = 1.0;
    let mut inflow = vec![phi; steps];
    let mut outflow = vec![phi; steps];
    inflow[0] = phi + fill;
    outflow[0] = phi - fill;
    for t in 0..steps {
        x[pipe.p_from[t].0] = p_from;
        x[pipe.p_to[t].0] = p_to;
        x[pipe.p_avg[t].0] = avg;
        x[pipe.flow[t].0] = phi;
        x[pipe.flow_in[t].0] = inflow[t];
        x[pipe.flow_out[t].0] = outflow[t];
        x[pipe.linepack[t].0] = lp;
        if let OfftakeVars::Sale(d) = &registry.offtakes[b] {
            x[d[t].0] = outflow[t];
        }
    }

    let site = &case.sites[0];
    let sv = &registry.sites[0];
    let k = sv.compressor_coefficient;
    let water_rate = c.water_per_kg_h2 * c.density_kg_per_m3 * dt;
    let mut water = site.initial_water_kg;
    let (mut peak, mut cp_peak) = (0.0f64, 0.0f64);
    let mut power = vec![0.0; steps];
    for t in 0..steps {
        let produced = inflow[t] / (1.0 - c.fuel_rate_m3_per_mj * k);
        let p = produced * c.hhv_mj_per_m3 / site.efficiency;
        water -= water_rate * produced;
        x[sv.power[t].0] = p;
        x[sv.flow[t].0] = produced;
        x[sv.water[t].0] = water;
        x[sv.compressor[t].0] = k * produced;
        peak = peak.max(p);
        cp_peak = cp_peak.max(k * produced);
        power[t] = p;
    }
    x[sv.peak_power.0] = peak;
    x[sv.peak_compressor.0] = cp_peak;

    let ac = &registry.hvac[0];
    let opt = &ac.options[0];
    let circ = &opt.circuits[0];
    let w = v * v;
    let (pf, qf) = branch_flow(w, w, 0.0, &opt.pu);
    let (pt, qt) = branch_flow_reverse(w, w, 0.0, &opt.pu);
    x[circ.z.0] = 1.0;
    for t in 0..steps {
        x[circ.w_from[t].0] = w;
        x[circ.w_to[t].0] = w;
        x[circ.w_r[t].0] = w;
        x[circ.w_im[t].0] = 0.0;
        x[circ.p_from[t].0] = pf;
        x[circ.q_from[t].0] = qf;
        x[circ.p_to[t].0] = pt;
        x[circ.q_to[t].0] = qt;
    }

    let base = c.base_mva;
    for (i, bus) in registry.buses.iter().enumerate() {
        let (p_line, q_line) = if i == ac.from { (pf, qf) } else { (pt, qt) };
        let q_svc = -base * q_line;
        for t in 0..steps {
            let load = if i == ac.from { power[t] } else { 0.0 };
            x[bus.p_res[t].0] = load + base * p_line;
            if let Some(q) = &bus.q_var {
                x[q[t].0] = q_svc;
            }
        }
        if let Some(qp) = bus.q_peak {
            x[qp.0] = q_svc.abs();
        }
    }
    let inside = program
        .vars()
        .iter()
        .zip(&x)
        .all(|(var, v)| *v >= var.lb && *v <= var.ub);
    inside.then_some(x)
}

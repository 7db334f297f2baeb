mod common;

use std::collections::BTreeMap;

use approx::assert_relative_eq;

use vreplan::assembler::{assemble, emit_nodes, AssembleOptions, ConicProgram, VarId};
use vreplan::bnb::{
    solve, BackendSettings, ClarabelBackend, ConicBackend, SolveOptions, SolveStatus,
};
use vreplan::electrolyser::{compressor_coefficient, emit_electrolyser};
use vreplan::gaspipe::{
    emit_gas_balances, emit_offtakes, emit_pipeline, linepack_coefficient, srk_z,
    weymouth_coefficient,
};
use vreplan::hvac::emit_hvac;
use vreplan::hvdc::{converter_loss, emit_hvdc};
use vreplan::io::case::CaseFile;
use vreplan::io::load_case;
use vreplan::netmodel::{validate_case, Catalog, Constants, Link, PlanningCase, MPA};
use vreplan::Error;

fn two_node_text() -> String {
    std::fs::read_to_string(common::data("two_node.case")).unwrap()
}

fn build(text: &str) -> vreplan::Result<PlanningCase> {
    CaseFile::parse(text, "test")?.build(&common::data(""))
}

fn family_counts(program: &ConicProgram) -> BTreeMap<String, usize> {
    let s = program.stats();
    let mut m = s.rows_by_family;
    m.extend(s.cones_by_family);
    m
}

/// Largest real root of the SRK cubic by a fine sign-change scan and bisection.
fn srk_scan(t: f64, p: f64, c: &Constants) -> f64 {
    let tr = t / c.critical_temperature_k;
    let pr = p / c.critical_pressure_pa;
    let w = c.acentric_factor;
    let m = 0.480 + 1.574 * w - 0.176 * w * w;
    let alpha = (1.0 + m * (1.0 - tr.sqrt())).powi(2);
    let a = 0.42748 * alpha * pr / (tr * tr);
    let b = 0.08664 * pr / tr;
    let f = |z: f64| z * z * z - z * z + (a - b - b * b) * z - a * b;
    let mut root = f64::NAN;
    let n = 100_000;
    for k in 0..n {
        let (lo, hi) = (
            b + 3.0 * k as f64 / n as f64,
            b + 3.0 * (k + 1) as f64 / n as f64,
        );
        if f(lo).signum() != f(hi).signum() {
            let (mut lo, mut hi) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(lo).signum() == f(mid).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            root = 0.5 * (lo + hi);
        }
    }
    root
}

#[test]
fn srk_against_root_scan() {
    let c = Constants::default();
    // Frozen from an independent polynomial-root evaluation.
    let frozen = [
        (3.0 * MPA, 1.016_061_980_315_534_2),
        (3.5 * MPA, 1.018_817_613_656_914_5),
        (6.75 * MPA, 1.037_231_428_737_629_2),
        (10.0 * MPA, 1.056_439_995_193_053_9),
    ];
    for (p, z) in frozen {
        let got = srk_z(288.15, p, &c).unwrap();
        assert_relative_eq!(got, srk_scan(288.15, p, &c), max_relative = 1e-12);
        assert_relative_eq!(got, z, max_relative = 1e-12);
        assert!((1.0..1.1).contains(&got));
    }
    assert!(srk_z(288.15, 0.0, &c).is_err());
}

#[test]
fn pipe_coefficients_frozen() {
    let c = Constants::default();
    let o = Catalog::default()
        .pipeline("pipe-0.5m")
        .unwrap()
        .instantiate(100.0);
    let z = srk_z(288.15, 6.75 * MPA, &c).unwrap();
    let d: f64 = 0.5;
    let friction = 4.0 / (20.621f64 * 20.621 * d.cbrt());
    let rho = 0.086;
    let rt = 4124.2 * 288.15;
    let phi_oracle = 0.95 * std::f64::consts::PI.powi(2) * d.powi(5)
        / (16.0 * rho * rho * z * rt * 100e3 * friction);
    let psi_oracle = std::f64::consts::PI * d * d * 100e3 / (4.0 * rho * z * rt);
    let phi = weymouth_coefficient(&o, &c).unwrap();
    let psi = linepack_coefficient(&o, &c).unwrap();
    assert_relative_eq!(phi, phi_oracle, max_relative = 1e-12);
    assert_relative_eq!(psi, psi_oracle, max_relative = 1e-12);
    assert_relative_eq!(phi, 1.694_878_610_835_695e-9, max_relative = 1e-9);
    assert_relative_eq!(psi, 0.185_224_072_727_947_2, max_relative = 1e-9);

    let long = Catalog::default()
        .pipeline("pipe-0.5m")
        .unwrap()
        .instantiate(200.0);
    assert_relative_eq!(
        weymouth_coefficient(&long, &c).unwrap(),
        phi / 2.0,
        max_relative = 1e-12
    );
    let mut wide = o.clone();
    wide.diameter_m = 1.0;
    assert_relative_eq!(
        linepack_coefficient(&wide, &c).unwrap(),
        4.0 * psi,
        max_relative = 1e-12
    );
}

#[test]
fn converter_loss_values() {
    assert_relative_eq!(converter_loss(0.0, 1.0, 6.62, 1800.0, 1.98), 6.62);
    assert_relative_eq!(
        converter_loss(1.0, 1.0, 6.62, 1800.0, 1.98),
        10.40,
        max_relative = 1e-12
    );
    assert_eq!(converter_loss(0.0, 0.0, 6.62, 1800.0, 1.98), 0.0);
    let o = Catalog::default()
        .hvdc("hvdc-2gw")
        .unwrap()
        .instantiate(570.0, 0.9);
    assert_relative_eq!(o.resistance_ohm(), 3.363, max_relative = 1e-12);
}

#[test]
fn compressor_defaults() {
    let c = Constants::default();
    let z = srk_z(288.15, 3.5 * MPA, &c).unwrap();
    let k = compressor_coefficient(3.5 * MPA, 10.0 * MPA, &c, 0.81, z).unwrap();
    let g = 1.296;
    let oracle = 0.351121e-3 * 288.15 * z * g / ((g - 1.0) * 0.81)
        * ((10.0f64 / 3.5).powf((g - 1.0) / g) - 1.0);
    assert_relative_eq!(k, oracle, max_relative = 1e-12);
}

#[test]
fn h2_price_per_cubic_metre() {
    let case = load_case(&common::data("two_node.case")).unwrap();
    for j in &case.junctions {
        assert_relative_eq!(j.h2_price_per_m3, 3.23 * 0.086, max_relative = 1e-12);
        assert!((j.h2_price_per_m3 - 0.277).abs() < 1e-3);
    }
}

#[test]
fn validation_is_idempotent() {
    let case = load_case(&common::data("two_node.case")).unwrap();
    assert_eq!(validate_case(case.clone()).unwrap(), case);
    let qld = load_case(&common::data("rez_qld.case")).unwrap();
    assert_eq!(validate_case(qld.clone()).unwrap(), qld);
}

#[test]
fn validation_reports_every_issue() {
    let text = two_node_text()
        .replace(
            "id = \"demand\"\nofftake = \"sale\"",
            "id = \"demand\"\nofftake = \"sale\"\npressure_min_mpa = 10\npressure_max_mpa = 3.5",
        )
        .replace(
            "id = \"rez\"\nsvc = true",
            "id = \"rez\"\nsvc = true\nv_min = 1.2\nv_max = 0.9",
        );
    match build(&text) {
        Err(Error::Validation(report)) => {
            assert!(report.mentions("junctions[demand]"), "{report}");
            assert!(report.mentions("buses[rez]"), "{report}");
        }
        other => panic!("expected a validation report, got {other:?}"),
    }
}

#[test]
fn profile_length_mismatch() {
    let text = two_node_text().replace("weeks = 1", "weeks = 2");
    let err = build(&text).unwrap_err().to_string();
    assert!(err.contains("two_node_vre.csv"), "{err}");
    assert!(err.contains("84") && err.contains("168"), "{err}");
}

#[test]
fn missing_profile_file() {
    let text = two_node_text().replace("two_node_vre.csv", "absent.csv");
    let err = build(&text).unwrap_err().to_string();
    assert!(err.contains("absent.csv"), "{err}");
}

#[test]
fn two_node_menu() {
    let case = load_case(&common::data("two_node.case")).unwrap();
    let counts: Vec<usize> = case
        .corridors
        .iter()
        .map(|c| c.link.option_count())
        .collect();
    let kinds: Vec<&str> = case.corridors.iter().map(|c| c.link.kind()).collect();
    assert_eq!(kinds, ["pipeline", "hvdc", "hvac"]);
    assert_eq!(counts, [3, 3, 6]);
    let (program, _) = assemble(&case, &AssembleOptions::default()).unwrap();
    assert_eq!(program.binaries().len(), 3 + 3 * 2 + 6);
}

#[test]
fn electrolyser_cost_override_reaches_objective() {
    let peak_coefficient = |text: &str| {
        let case = build(text).unwrap();
        let (program, registry) = assemble(&case, &AssembleOptions::default()).unwrap();
        let v = registry.sites[0].peak_power;
        program
            .objective()
            .terms
            .iter()
            .find(|(id, _)| *id == v)
            .unwrap()
            .1
    };
    let text = two_node_text();
    assert_relative_eq!(peak_coefficient(&text), 0.6);
    let text = text.replace(
        "[profiles]",
        "[catalog.electrolyser]\nunit_cost = 0.8\n\n[profiles]",
    );
    assert_relative_eq!(peak_coefficient(&text), 0.8);
}

fn single_corridor(
    kind: &str,
    options: &str,
    max_circuits: Option<u32>,
    steps_days: f64,
    step_hours: f64,
) -> PlanningCase {
    let circuits = max_circuits
        .map(|c| format!("max_circuits = {c}"))
        .unwrap_or_default();
    let text = format!(
        r#"
schema = "vreplan-case/1"
name = "single"
[time]
step_hours = {step_hours}
days = {steps_days}
[[buses]]
id = "a"
[[buses]]
id = "b"
[[junctions]]
id = "a"
[[junctions]]
id = "b"
[[corridors]]
id = "k"
kind = "{kind}"
from = "a"
to = "b"
length_km = 200
options = [{options}]
{circuits}
"#
    );
    build(&text).unwrap()
}

#[test]
fn hvac_rows_by_construction() {
    // One option, two circuits, one step.
    let case = single_corridor("hvac", "\"hvac-500kv-single\"", Some(2), 1.0, 24.0);
    assert_eq!(case.time.steps, 1);
    let mut p = ConicProgram::new();
    let nodes = emit_nodes(&mut p, &case);
    emit_hvac(&mut p, &case, 0, &nodes, false).unwrap();
    assert_eq!(p.binaries().len(), 2);
    let f = family_counts(&p);
    // Rows are one-sided: a two-sided bound counts twice.
    assert_eq!(f["hvac.flow"], 2 * 4);
    assert_eq!(f["hvac.lift"], 2 * 8);
    assert_eq!(f["hvac.coupling"], 2 * 4);
    assert_eq!(f["hvac.tie"], 4);
    assert_eq!(f["hvac.voltage_cone"], 1);
    assert_eq!(f["hvac.angle"], 2);
    assert_eq!(f["hvac.mva"], 2);
    assert_eq!(f["hvac.sequencing"], 2);

    let mut all = ConicProgram::new();
    let nodes = emit_nodes(&mut all, &case);
    emit_hvac(&mut all, &case, 0, &nodes, true).unwrap();
    let g = family_counts(&all);
    assert_eq!(g["hvac.voltage_cone"], 2);
    assert_eq!(g["hvac.angle"], 4);
    assert_eq!(g["hvac.mva"], 4);
}

#[test]
fn pipeline_rows_by_construction() {
    let case = single_corridor(
        "pipeline",
        "\"pipe-0.5m\", \"pipe-0.9m\", \"pipe-1.2m\"",
        None,
        1.0,
        12.0,
    );
    assert_eq!(case.time.steps, 2);
    let mut p = ConicProgram::new();
    let nodes = emit_nodes(&mut p, &case);
    let pipes = vec![emit_pipeline(&mut p, &case, 0, &nodes, 5).unwrap()];
    let offtakes = emit_offtakes(&mut p, &case);
    emit_gas_balances(&mut p, &case, &[], &pipes, &offtakes).unwrap();
    assert_eq!(p.binaries().len(), 3);
    let f = family_counts(&p);
    let per = 3 * 2;
    assert_eq!(f["pipe.weymouth"], per);
    assert_eq!(
        f["pipe.pressure_onoff"] + f["pipe.pressure_coupling"],
        8 * per
    );
    assert_eq!(f["pipe.split"], per);
    assert_eq!(f["pipe.linepack"] + f["pipe.continuity"], 2 * per);
    assert_eq!(f["pipe.avg_upper"], per);
    assert_eq!(f["gas.balance"], 2 * 2);
    // Same junction bounds at both ends: the 5 × 5 grid collapses onto 21 rays.
    assert_eq!(f["pipe.envelope"], 21 * per);
}

#[test]
fn electrolyser_rows_by_construction() {
    let case = build(
        &two_node_text()
            .replace("weeks = 1", "days = 1")
            .replace("step_hours = 2.0", "step_hours = 6.0")
            .replace(
                "files = [\"two_node_vre.csv\"]",
                "series = { rez = [1.0, 2.0, 3.0, 4.0] }",
            ),
    )
    .unwrap();
    assert_eq!(case.time.steps, 4);
    let mut p = ConicProgram::new();
    emit_electrolyser(&mut p, &case, 0).unwrap();
    let f = family_counts(&p);
    assert_eq!(f["ptg.conversion"], 4);
    assert_eq!(f["ptg.water"], 4);
    assert_eq!(f["ptg.compressor"], 4);
    assert_eq!(f["ptg.epigraph"], 8);
    assert_eq!(f["ptg.water_floor"], 4);
    assert_eq!(p.rows().len(), 24);
}

#[test]
fn hvdc_binaries_and_duplicate_emission() {
    let case = single_corridor("hvdc", "\"hvdc-1gw\"", None, 1.0, 12.0);
    let mut p = ConicProgram::new();
    let nodes = emit_nodes(&mut p, &case);
    let v = emit_hvdc(&mut p, &case, 0, &nodes).unwrap();
    assert_eq!(p.binaries().len(), 2);
    assert_eq!(v.options[0].circuits.len(), 2);
    assert!(matches!(
        emit_hvdc(&mut p, &case, 0, &nodes),
        Err(Error::DuplicateEmission { .. })
    ));
}

/// Solves with the given binaries fixed and returns the point.
fn solve_fixed(program: &ConicProgram, fixed: &[(VarId, f64)]) -> Vec<f64> {
    let sol = ClarabelBackend.solve(program, fixed, &BackendSettings::default());
    assert_eq!(sol.status, vreplan::bnb::BackendStatus::Optimal);
    sol.x
}

#[test]
fn off_state_zeroes_every_link_variable() {
    let case = common::small_two_node(4, 400.0, 2000.0);
    let (program, registry) = assemble(&case, &AssembleOptions::default()).unwrap();
    let off: Vec<(VarId, f64)> = program.binaries().into_iter().map(|v| (v, 0.0)).collect();
    let x = solve_fixed(&program, &off);
    let mut link_vars: Vec<VarId> = Vec::new();
    for p in &registry.pipes {
        for o in &p.options {
            for s in [
                &o.p_from,
                &o.p_to,
                &o.p_avg,
                &o.flow,
                &o.flow_in,
                &o.flow_out,
                &o.linepack,
            ] {
                link_vars.extend(s);
            }
        }
    }
    for h in &registry.hvac {
        for o in &h.options {
            for c in &o.circuits {
                for s in [
                    &c.w_from, &c.w_to, &c.w_r, &c.w_im, &c.p_from, &c.q_from, &c.p_to, &c.q_to,
                ] {
                    link_vars.extend(s);
                }
            }
        }
    }
    for h in &registry.hvdc {
        for o in &h.options {
            for c in &o.circuits {
                for e in &c.ends {
                    for s in [&e.p_ac, &e.q_ac] {
                        link_vars.extend(s);
                    }
                }
            }
        }
    }
    assert!(link_vars.len() > 100);
    for v in link_vars {
        assert!(x[v.0].abs() < 1e-6, "{} = {}", program.var_label(v), x[v.0]);
    }
    // Nothing can leave the zone, so nothing is sold.
    let demand = case.junction_index("demand").unwrap();
    for t in 0..4 {
        assert!(registry.offtakes[demand].value(&x, t) < 1e-6);
    }
}

#[test]
fn demand_site_has_no_compressor() {
    let case = common::small_two_node(4, 400.0, 2000.0);
    let (program, registry) = assemble(&case, &AssembleOptions::default()).unwrap();
    let s = case.sites.iter().position(|s| s.is_demand_site).unwrap();
    assert_eq!(registry.sites[s].compressor_coefficient, 0.0);
    let x = solve_fixed(&program, &[]);
    for v in &registry.sites[s].compressor {
        assert!(x[v.0].abs() < 1e-7);
    }
}

#[test]
fn zero_size_site_produces_nothing() {
    let text = two_node_text().replace(
        "max_power_mw = 12000\n\n[[sites]]",
        "max_power_mw = 0\n\n[[sites]]",
    );
    let case = build(&text).unwrap();
    assert_eq!(case.sites[0].max_power_mw, 0.0);
    let mut p = ConicProgram::new();
    let v = emit_electrolyser(&mut p, &case, 0).unwrap();
    for id in v.power.iter().chain(&v.flow) {
        assert_eq!((p.vars()[id.0].lb, p.vars()[id.0].ub), (0.0, 0.0));
    }
}

#[test]
fn empty_case_solves_to_zero() {
    let text =
        "schema = \"vreplan-case/1\"\nname = \"empty\"\n[time]\nstep_hours = 6.0\ndays = 1\n";
    let case = build(text).unwrap();
    let (program, _) = assemble(&case, &AssembleOptions::default()).unwrap();
    let out = solve(&program, &SolveOptions::default(), &ClarabelBackend).unwrap();
    assert_eq!(out.stats.status, SolveStatus::Optimal);
    assert_eq!(out.incumbent.unwrap().objective, 0.0);
    assert!(out.stats.backend_calls <= 1);
}

#[test]
fn isolated_bus_is_an_error() {
    let text = "schema = \"vreplan-case/1\"\nname = \"lonely\"\n[time]\nstep_hours = 6.0\ndays = 1\n[[buses]]\nid = \"x\"\n";
    let case = build(text).unwrap();
    let err = assemble(&case, &AssembleOptions::default())
        .unwrap_err()
        .to_string();
    assert!(err.contains("bus `x`"), "{err}");
}

#[test]
fn hvdc_terminal_without_hvac() {
    let case = single_corridor("hvdc", "\"hvdc-2gw\"", None, 1.0, 12.0);
    assert!(matches!(case.corridors[0].link, Link::Hvdc(_)));
    let (program, _) = assemble(&case, &AssembleOptions::default()).unwrap();
    assert_eq!(program.binaries().len(), 2);
}

mod common;

use std::sync::OnceLock;

use proptest::prelude::*;

use vreplan::assembler::envelope::envelope_value;
use vreplan::assembler::{
    assemble, envelope_avg_pressure, AssembleOptions, ConicProgram, LinExpr, Sense, VarId,
};
use vreplan::bnb::{
    enumerate_oracle, solve, ClarabelBackend, NodeStatus, SolveOptions, SolveStatus,
};
use vreplan::gaspipe::exact_avg_pressure;
use vreplan::io::export::{residuals_from_file, ResidualReport, SolutionFile};
use vreplan::io::{run_sweep, sweep_csv, SweepSpec};
use vreplan::netmodel::{PlanningCase, MPA};
use vreplan::plan::{solve_case, PlanRun};

fn solved_small() -> &'static (PlanningCase, PlanRun) {
    static RUN: OnceLock<(PlanningCase, PlanRun)> = OnceLock::new();
    RUN.get_or_init(|| {
        let case = common::small_two_node(4, 300.0, 2000.0);
        let opts = SolveOptions {
            rel_gap: 1e-6,
            ..SolveOptions::default()
        };
        let run = solve_case(
            &case,
            &AssembleOptions::default(),
            &opts,
            &ClarabelBackend,
            None,
        )
        .unwrap();
        assert_eq!(run.status(), SolveStatus::Optimal);
        (case, run)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_physics_is_feasible(p_to in 3.5f64..9.0, dp in 0.05f64..1.5, v in 0.92f64..1.08) {
        let p_from = (p_to + dp).min(10.0);
        let case = common::pipe_and_line(4, 300.0);
        let (program, registry) = assemble(&case, &AssembleOptions::default()).unwrap();
        let x = common::exact_point(&case, &program, &registry, p_from * MPA, p_to * MPA, v);
        prop_assume!(x.is_some());
        let x = x.unwrap();
        prop_assert!(program.max_violation(&x) <= 1e-7, "{:?}", program.violations_by_family(&x));
    }

    #[test]
    fn envelope_never_exceeds_exact(
        x_lo in 3.0f64..8.0, x_w in 0.0f64..4.0,
        y_lo in 3.0f64..8.0, y_w in 0.0f64..4.0,
        n in 1usize..7,
        u in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 50),
    ) {
        let xb = (x_lo * MPA, (x_lo + x_w) * MPA);
        let yb = (y_lo * MPA, (y_lo + y_w) * MPA);
        let cuts = envelope_avg_pressure(xb, yb, n).unwrap();
        prop_assert!(!cuts.is_empty() && cuts.len() <= n * n);
        for (a, b) in u {
            let x = xb.0 + a * (xb.1 - xb.0);
            let y = yb.0 + b * (yb.1 - yb.0);
            let exact = exact_avg_pressure(x, y);
            prop_assert!(envelope_value(&cuts, x, y) <= exact * (1.0 + 1e-14));
        }
    }

    #[test]
    fn voltage_cone_holds_on_any_angle(wi in 0.81f64..1.21, wj in 0.81f64..1.21, theta in -0.78f64..0.78) {
        let case = common::pipe_and_line(2, 200.0);
        let (program, registry) = assemble(&case, &AssembleOptions::default()).unwrap();
        let c = &registry.hvac[0].options[0].circuits[0];
        let mut x = vec![0.0; registry.num_vars];
        let m = (wi * wj).sqrt();
        for t in 0..2 {
            x[c.w_from[t].0] = wi;
            x[c.w_to[t].0] = wj;
            x[c.w_r[t].0] = m * theta.cos();
            x[c.w_im[t].0] = m * theta.sin();
        }
        let mut seen = 0;
        for cone in program.cones() {
            if program.cone_family(cone) == "hvac.voltage_cone" {
                seen += 1;
                prop_assert!(cone.cone.violation(&x) <= 1e-12);
            }
        }
        prop_assert_eq!(seen, 2);
        for t in 0..2 {
            x[c.w_r[t].0] *= 1.0 + 1e-3;
        }
        let worst = program
            .cones()
            .iter()
            .filter(|k| program.cone_family(k) == "hvac.voltage_cone")
            .map(|k| k.cone.violation(&x))
            .fold(f64::MIN, f64::max);
        prop_assert!(worst > 0.0 || theta.cos().abs() < 1e-3);
    }
}

/// Facility-style program: `n` binaries open capacity for continuous supplies that
/// must meet a demand; the first `group` binaries form a prefix group; an SOC couples
/// the first two supplies.
fn random_program(
    fixed: &[f64],
    unit: &[f64],
    caps: &[f64],
    demand: f64,
    group: usize,
) -> ConicProgram {
    let n = fixed.len();
    let mut p = ConicProgram::new();
    let zs: Vec<VarId> = (0..n).map(|i| p.binary("z", &format!("b{i}"))).collect();
    let ys: Vec<VarId> = (0..n)
        .map(|i| p.continuous("y", &format!("b{i}"), None, 0.0, 10.0))
        .collect();
    let s = p.continuous("s", "norm", None, 0.0, 100.0);
    if group >= 2 {
        p.add_group(zs[..group].to_vec());
        for w in zs[..group].windows(2) {
            p.add_row("seq", LinExpr::var(w[1]).with(w[0], -1.0), Sense::Le);
        }
        for &z in &zs[group..] {
            p.add_group(vec![z]);
        }
    } else {
        for &z in &zs {
            p.add_group(vec![z]);
        }
    }
    let mut need = LinExpr::constant(-demand);
    for i in 0..n {
        p.add_row("cap", LinExpr::var(ys[i]).with(zs[i], -caps[i]), Sense::Le);
        need.push(ys[i], 1.0);
    }
    p.add_row("need", need, Sense::Ge);
    p.add_soc(
        "norm",
        LinExpr::var(s),
        vec![LinExpr::var(ys[0]), LinExpr::var(ys[1])],
    )
    .unwrap();
    let mut obj = LinExpr::term(s, 0.3);
    for i in 0..n {
        obj.push(zs[i], fixed[i]);
        obj.push(ys[i], unit[i]);
    }
    p.set_objective(obj);
    p
}

fn program_strategy() -> impl Strategy<Value = ConicProgram> {
    (2usize..7).prop_flat_map(|n| {
        (
            prop::collection::vec(1.0f64..10.0, n),
            prop::collection::vec(0.1f64..2.0, n),
            prop::collection::vec(1.0f64..8.0, n),
            0.1f64..0.9,
            0usize..=n.min(3),
        )
            .prop_map(|(fixed, unit, caps, frac, group)| {
                let demand = frac * caps.iter().sum::<f64>().min(10.0 * caps.len() as f64);
                random_program(&fixed, &unit, &caps, demand, group)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bnb_agrees_with_enumeration(program in program_strategy()) {
        let oracle = enumerate_oracle(&program, &ClarabelBackend, &Default::default()).unwrap();
        let opts = SolveOptions {
            rel_gap: 1e-9,
            abs_gap: 1e-9,
            record_pruned: true,
            record_trace: true,
            ..SolveOptions::default()
        };
        let out = solve(&program, &opts, &ClarabelBackend).unwrap();
        let best = oracle.best.as_ref().map(|b| b.objective);
        let got = out.incumbent.as_ref().map(|i| i.objective);
        match (best, got) {
            (Some(b), Some(g)) => prop_assert!((b - g).abs() <= 1e-6 * b.abs().max(1.0), "oracle {b} bnb {g}"),
            (None, None) => {}
            other => prop_assert!(false, "oracle/bnb disagree on feasibility: {other:?}"),
        }
        if let Some(inc) = got {
            let slack = opts.abs_gap.max(opts.rel_gap * inc.abs()) + 1e-6 * inc.abs().max(1.0);
            for node in &out.stats.pruned {
                if let Some(within) = oracle.best_within(&node.fixings) {
                    prop_assert!(within >= inc - slack, "pruned subtree held {within} < {inc}");
                }
            }
        }
        prop_assert!(out.stats.trace.iter().any(|n| n.status == NodeStatus::Solved));
        for n in out.stats.trace.iter().filter(|n| n.status == NodeStatus::Solved) {
            let tol = 1e-6 * n.parent_bound.abs().max(1.0);
            prop_assert!(n.relaxation >= n.parent_bound - tol, "node {} bound fell {} < {}", n.id, n.relaxation, n.parent_bound);
        }
    }

    #[test]
    fn bnb_is_deterministic_and_parallel_sound(program in program_strategy()) {
        let single = SolveOptions {
            rel_gap: 1e-4,
            ..SolveOptions::default()
        };
        let a = solve(&program, &single, &ClarabelBackend).unwrap();
        let b = solve(&program, &single, &ClarabelBackend).unwrap();
        prop_assert_eq!(a.incumbent.as_ref().map(|i| &i.x), b.incumbent.as_ref().map(|i| &i.x));
        prop_assert_eq!(a.stats.nodes, b.stats.nodes);
        let parallel = SolveOptions { workers: 3, ..single.clone() };
        let c = solve(&program, &parallel, &ClarabelBackend).unwrap();
        match (a.incumbent, c.incumbent) {
            (Some(x), Some(y)) => {
                let tol = single.rel_gap * x.objective.abs() + 1e-6;
                prop_assert!((x.objective - y.objective).abs() <= tol);
            }
            (None, None) => {}
            _ => prop_assert!(false, "parallel run disagrees on feasibility"),
        }
    }
}

#[test]
fn water_inventory_is_conserved() {
    let (case, run) = solved_small();
    let x = run.x().unwrap();
    let c = &case.constants;
    let rate = c.water_per_kg_h2 * c.density_kg_per_m3 * case.time.step_seconds;
    for (site, v) in case.sites.iter().zip(&run.registry.sites) {
        let mut prev = site.initial_water_kg;
        for t in 0..case.time.steps {
            let expect = prev - rate * x[v.flow[t].0];
            let got = x[v.water[t].0];
            assert!(
                (got - expect).abs() <= 1e-6 * prev.abs().max(1.0),
                "{} t={t}: {got} vs {expect}",
                site.id
            );
            assert!(got >= -1e-6);
            prev = got;
        }
    }
}

#[test]
fn cost_breakdown_matches_objective() {
    let (_, run) = solved_small();
    let plan = run.solution.as_ref().unwrap();
    let obj = run.outcome.incumbent.as_ref().unwrap().objective;
    let c = &plan.costs;
    assert!(
        (c.total - obj).abs() <= 1e-6 * obj.abs().max(1.0),
        "{} vs {obj}",
        c.total
    );
    let sum = c.ptg + c.pipe + c.hvdc + c.hvac - c.h2_revenue;
    assert!((sum - c.total).abs() <= 1e-9 * c.total.abs().max(1.0));
}

#[test]
fn peak_epigraphs_are_tight() {
    let (_, run) = solved_small();
    let x = run.x().unwrap();
    for v in &run.registry.sites {
        let peak = v.power.iter().map(|p| x[p.0]).fold(0.0, f64::max);
        let top = x[v.peak_power.0];
        assert!(top >= peak - 1e-6);
        assert!(
            top - peak <= 1e-4 * peak.max(1.0),
            "peak {top} above max {peak}"
        );
        if v.compressor_coefficient > 0.0 {
            let cp = v.compressor.iter().map(|p| x[p.0]).fold(0.0, f64::max);
            assert!((x[v.peak_compressor.0] - cp).abs() <= 1e-4 * cp.max(1.0));
        }
    }
}

#[test]
fn stored_solution_reproduces_residuals() {
    let (case, run) = solved_small();
    let plan = run.solution.as_ref().unwrap();
    let inc = run.outcome.incumbent.as_ref().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("solution.json");
    SolutionFile::new(&case.name, run.assemble, inc.objective, inc.x.clone())
        .write(&path)
        .unwrap();
    let file = SolutionFile::read(&path).unwrap();
    assert_eq!(file.x, inc.x);
    let again = residuals_from_file(case, &file).unwrap();
    assert_eq!(again, ResidualReport::new(&case.name, &plan.residuals));
}

#[test]
fn tiny_sweep_is_deterministic() {
    let (mut spec, base) = SweepSpec::read(&common::data("two_node_sweep.toml")).unwrap();
    spec.distances_km = vec![200.0];
    spec.capacities_mw = vec![1000.0, 2000.0];
    spec.parallel_cells = 2;
    let mut time = spec.time.clone().unwrap();
    time.step_hours = 8.0;
    time.weeks = None;
    time.days = Some(1.0);
    spec.time = Some(time);
    let a = sweep_csv(&run_sweep(&spec, &base, None).unwrap());
    let b = sweep_csv(&run_sweep(&spec, &base, None).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 3);
}

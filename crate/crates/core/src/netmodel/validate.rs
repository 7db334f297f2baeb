use std::collections::HashSet;
use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result, ValidationReport};
use crate::gaspipe;

use super::types::{Link, Offtake, PlanningCase};

/// Checks every type invariant and fills derived defaults (pipeline flow caps).
///
/// All violations are collected into one [`ValidationReport`]; normalization is
/// idempotent, so validating an already validated case returns it unchanged.
pub fn validate_case(mut case: PlanningCase) -> Result<PlanningCase> {
    let mut report = ValidationReport::default();
    check(&case, &mut report);
    if !report.is_empty() {
        return Err(Error::Validation(report));
    }
    fill_flow_caps(&mut case, &mut report);
    if !report.is_empty() {
        return Err(Error::Validation(report));
    }
    Ok(case)
}

fn positive(report: &mut ValidationReport, path: &str, value: f64) {
    if !(value > 0.0 && value.is_finite()) {
        report.push(
            path,
            format!("must be strictly positive and finite, got {value}"),
        );
    }
}

fn fraction(report: &mut ValidationReport, path: &str, value: f64) {
    if !(value > 0.0 && value <= 1.0) {
        report.push(path, format!("must lie in (0, 1], got {value}"));
    }
}

fn nonneg(report: &mut ValidationReport, path: &str, value: f64) {
    if !(value >= 0.0 && value.is_finite()) {
        report.push(path, format!("must be nonnegative and finite, got {value}"));
    }
}

fn check(case: &PlanningCase, report: &mut ValidationReport) {
    let c = &case.constants;
    for (name, v) in [
        ("hhv_mj_per_m3", c.hhv_mj_per_m3),
        ("density_kg_per_m3", c.density_kg_per_m3),
        ("isentropic_exponent", c.isentropic_exponent),
        ("compressor_constant", c.compressor_constant),
        ("gas_temperature_k", c.gas_temperature_k),
        ("fuel_rate_m3_per_mj", c.fuel_rate_m3_per_mj),
        ("gas_constant_j_per_kg_k", c.gas_constant_j_per_kg_k),
        ("base_mva", c.base_mva),
        ("water_per_kg_h2", c.water_per_kg_h2),
        ("critical_temperature_k", c.critical_temperature_k),
        ("critical_pressure_pa", c.critical_pressure_pa),
    ] {
        positive(report, &format!("constants.{name}"), v);
    }
    if c.isentropic_exponent <= 1.0 {
        report.push("constants.isentropic_exponent", "must exceed 1");
    }

    let t = &case.time;
    positive(report, "time.step_seconds", t.step_seconds);
    positive(report, "time.year_scale", t.year_scale);
    if !(t.discount_rate > 0.0 && t.discount_rate < 1.0) {
        report.push(
            "time.discount_rate",
            format!("must lie in (0, 1), got {}", t.discount_rate),
        );
    }
    nonneg(report, "time.life_years", t.life_years);
    if t.steps == 0 {
        report.push("time.steps", "must be at least 1");
    }

    for (key, series) in &case.profiles {
        let path = format!("profiles[{key}]");
        if series.len() != t.steps {
            report.push(
                &path,
                format!(
                    "length {} does not match the {} time steps",
                    series.len(),
                    t.steps
                ),
            );
        }
        if let Some(pos) = series.iter().position(|v| !v.is_finite() || *v < 0.0) {
            report.push(&path, format!("entry {pos} is negative or not finite"));
        }
    }

    let mut ids = HashSet::new();
    for b in &case.buses {
        let path = format!("buses[{}]", b.id);
        if !ids.insert(b.id.as_str()) {
            report.push(&path, "duplicate bus id");
        }
        if !(b.v_min > 0.0 && b.v_min <= b.v_max) {
            report.push(
                format!("{path}.v_min"),
                format!(
                    "voltage bounds must satisfy 0 < v_min <= v_max, got [{}, {}]",
                    b.v_min, b.v_max
                ),
            );
        }
        if b.svc_allowed {
            if !(b.q_var_min <= 0.0 && 0.0 <= b.q_var_max) {
                report.push(
                    format!("{path}.q_var_min"),
                    format!(
                        "SVC bounds must bracket zero, got [{}, {}]",
                        b.q_var_min, b.q_var_max
                    ),
                );
            }
            nonneg(report, &format!("{path}.svc_unit_cost"), b.svc_unit_cost);
        }
        if let Some(key) = &b.res_profile {
            if !case.profiles.contains_key(key) {
                report.push(
                    format!("{path}.res_profile"),
                    format!("unknown profile `{key}`"),
                );
            }
        }
    }

    let mut ids = HashSet::new();
    for j in &case.junctions {
        let path = format!("junctions[{}]", j.id);
        if !ids.insert(j.id.as_str()) {
            report.push(&path, "duplicate junction id");
        }
        if !(j.pressure_min > 0.0 && j.pressure_min < j.pressure_max) {
            report.push(
                format!("{path}.pressure_min"),
                format!(
                    "pressure bounds must satisfy 0 < min < max, got [{}, {}] Pa",
                    j.pressure_min, j.pressure_max
                ),
            );
        }
        nonneg(
            report,
            &format!("{path}.h2_price_per_m3"),
            j.h2_price_per_m3,
        );
        match &j.offtake {
            Offtake::Fixed(key) if !case.profiles.contains_key(key) => {
                report.push(
                    format!("{path}.offtake"),
                    format!("unknown profile `{key}`"),
                );
            }
            Offtake::Sale { max_flow: Some(m) } => {
                nonneg(report, &format!("{path}.offtake.max_flow"), *m)
            }
            _ => {}
        }
    }

    let mut ids = HashSet::new();
    for s in &case.sites {
        let path = format!("sites[{}]", s.id);
        if !ids.insert(s.id.as_str()) {
            report.push(&path, "duplicate site id");
        }
        if case.bus_index(&s.bus).is_none() {
            report.push(format!("{path}.bus"), format!("unknown bus `{}`", s.bus));
        }
        match case.junction_index(&s.junction) {
            None => report.push(
                format!("{path}.junction"),
                format!("unknown junction `{}`", s.junction),
            ),
            Some(m) => {
                if s.output_pressure > case.junctions[m].pressure_max {
                    report.push(
                        format!("{path}.output_pressure"),
                        "electrolyser output pressure exceeds the junction maximum",
                    );
                }
            }
        }
        fraction(report, &format!("{path}.efficiency"), s.efficiency);
        fraction(
            report,
            &format!("{path}.compressor_efficiency"),
            s.compressor_efficiency,
        );
        positive(
            report,
            &format!("{path}.output_pressure"),
            s.output_pressure,
        );
        nonneg(report, &format!("{path}.max_power_mw"), s.max_power_mw);
        nonneg(
            report,
            &format!("{path}.initial_water_kg"),
            s.initial_water_kg,
        );
        nonneg(report, &format!("{path}.base_cost"), s.base_cost);
        nonneg(report, &format!("{path}.unit_cost"), s.unit_cost);
        nonneg(
            report,
            &format!("{path}.compressor_unit_cost"),
            s.compressor_unit_cost,
        );
    }

    let mut ids = HashSet::new();
    for cor in &case.corridors {
        let path = format!("corridors[{}]", cor.id);
        if !ids.insert(cor.id.as_str()) {
            report.push(&path, "duplicate corridor id");
        }
        if cor.from == cor.to {
            report.push(&path, "endpoints must be distinct");
        }
        if cor.link.option_count() == 0 {
            report.push(
                format!("{path}.options"),
                "corridor needs at least one option",
            );
        }
        let gas = matches!(cor.link, Link::Pipeline(_));
        for end in [&cor.from, &cor.to] {
            let found = if gas {
                case.junction_index(end).is_some()
            } else {
                case.bus_index(end).is_some()
            };
            if !found {
                let what = if gas { "junction" } else { "bus" };
                report.push(
                    format!("{path}.endpoints"),
                    format!("unknown {what} `{end}`"),
                );
            }
        }
        match &cor.link {
            Link::Pipeline(options) => {
                for o in options {
                    let p = format!("{path}.options[{}]", o.name);
                    positive(report, &format!("{p}.diameter_m"), o.diameter_m);
                    positive(report, &format!("{p}.length_m"), o.length_m);
                    fraction(report, &format!("{p}.efficiency"), o.efficiency);
                    nonneg(report, &format!("{p}.cost_per_km"), o.cost_per_km);
                    if !(o.pressure_min > 0.0 && o.pressure_min < o.pressure_max) {
                        report.push(
                            format!("{p}.pressure_min"),
                            "pressure bounds must satisfy 0 < min < max",
                        );
                    }
                    if let Some(cap) = o.flow_cap {
                        nonneg(report, &format!("{p}.flow_cap"), cap);
                    }
                }
            }
            Link::Hvdc(options) => {
                for o in options {
                    let p = format!("{path}.options[{}]", o.name);
                    for (name, v) in [
                        ("capacity_mw", o.capacity_mw),
                        ("length_m", o.length_m),
                        ("s_max_mva", o.s_max_mva),
                        ("p_max_mw", o.p_max_mw),
                        ("q_max_mvar", o.q_max_mvar),
                        ("current_max_ka", o.current_max_ka),
                        ("ac_kv", o.ac_kv),
                        ("dc_kv", o.dc_kv),
                        ("dc_v_min_kv", o.dc_v_min_kv),
                        ("resistance_ohm_per_km", o.resistance_ohm_per_km),
                    ] {
                        positive(report, &format!("{p}.{name}"), v);
                    }
                    for (name, v) in [
                        ("alpha_mw", o.alpha_mw),
                        ("beta_v", o.beta_v),
                        ("gamma_ohm", o.gamma_ohm),
                    ] {
                        nonneg(report, &format!("{p}.{name}"), v);
                    }
                    if o.dc_v_min_kv > o.dc_v_max_kv {
                        report.push(format!("{p}.dc_v_min_kv"), "DC voltage bounds inverted");
                    }
                    if o.p_min_mw > o.p_max_mw || o.q_min_mvar > o.q_max_mvar {
                        report.push(format!("{p}.p_min_mw"), "converter power bounds inverted");
                    }
                    if o.max_circuits < 1 {
                        report.push(format!("{p}.max_circuits"), "must be at least 1");
                    }
                }
            }
            Link::Hvac(options) => {
                for o in options {
                    let p = format!("{path}.options[{}]", o.name);
                    nonneg(report, &format!("{p}.r_ohm_per_km"), o.r_ohm_per_km);
                    positive(report, &format!("{p}.x_ohm_per_km"), o.x_ohm_per_km);
                    nonneg(report, &format!("{p}.b_ch_us_per_km"), o.b_ch_us_per_km);
                    positive(report, &format!("{p}.capacity_mw"), o.capacity_mw);
                    positive(report, &format!("{p}.length_m"), o.length_m);
                    positive(report, &format!("{p}.voltage_kv"), o.voltage_kv);
                    let lim = FRAC_PI_4 + 1e-12;
                    if !(o.theta_min <= 0.0
                        && o.theta_min.abs() <= lim
                        && 0.0 <= o.theta_max
                        && o.theta_max <= lim)
                    {
                        report.push(
                            format!("{p}.theta_max"),
                            format!("angle bounds must satisfy -pi/4 <= min <= 0 <= max <= pi/4, got [{}, {}]", o.theta_min, o.theta_max),
                        );
                    }
                    if o.max_circuits < 1 || o.conductors < 1 {
                        report.push(
                            format!("{p}.max_circuits"),
                            "circuit counts must be at least 1",
                        );
                    }
                }
            }
        }
    }
}

fn fill_flow_caps(case: &mut PlanningCase, report: &mut ValidationReport) {
    let constants = case.constants.clone();
    for cor in &mut case.corridors {
        if let Link::Pipeline(options) = &mut cor.link {
            for o in options.iter_mut() {
                if o.flow_cap.is_none() {
                    match gaspipe::physical_flow_cap(o, &constants) {
                        Ok(cap) => o.flow_cap = Some(cap),
                        Err(e) => report.push(
                            format!("corridors[{}].options[{}]", cor.id, o.name),
                            e.to_string(),
                        ),
                    }
                }
            }
        }
    }
}

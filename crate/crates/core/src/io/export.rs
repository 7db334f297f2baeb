//! Plan export: summary, per-step CSVs, residual report and the raw solution vector.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembler::{assemble, decode, AssembleOptions, PlanSolution, Residuals, Series};
use crate::error::{Error, Result};
use crate::netmodel::PlanningCase;

pub const SOLUTION_SCHEMA: &str = "vreplan-solution/1";
pub const RESIDUALS_SCHEMA: &str = "vreplan-residuals/1";
pub const SUMMARY_SCHEMA: &str = "vreplan-plan/1";

/// Solution vector with what is needed to rebuild its program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub schema: String,
    pub case: String,
    pub assemble: AssembleOptions,
    pub objective: f64,
    pub x: Vec<f64>,
}

impl SolutionFile {
    pub fn new(case: &str, assemble: AssembleOptions, objective: f64, x: Vec<f64>) -> Self {
        Self {
            schema: SOLUTION_SCHEMA.into(),
            case: case.into(),
            assemble,
            objective,
            x,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SolutionFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if file.schema != SOLUTION_SCHEMA {
            return Err(Error::Parse {
                path: path.display().to_string(),
                message: format!("schema `{}` is not `{SOLUTION_SCHEMA}`", file.schema),
            });
        }
        Ok(file)
    }
}

/// Worst values over the detailed residuals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    /// Largest Weymouth relaxation gap `Φ(℘ₘ²−℘ₙ²) − φ²` over installed pipes.
    pub max_weymouth_gap: f64,
    /// Most negative Weymouth gap (a violation when below zero).
    pub min_weymouth_gap: f64,
    pub max_avgpress_gap: f64,
    pub max_gas_balance: f64,
    pub max_hvdc_current_gap: f64,
    pub max_hvdc_cone_gap: f64,
    pub max_hvac_cone_gap: f64,
    pub max_angle_rad: f64,
    pub max_telescoping_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub schema: String,
    pub case: String,
    pub summary: ResidualSummary,
    pub details: Residuals,
}

impl ResidualReport {
    pub fn new(case: &str, r: &Residuals) -> Self {
        let mut s = ResidualSummary {
            min_weymouth_gap: 0.0,
            ..Default::default()
        };
        for p in r.gas.pipes.iter().filter(|p| p.installed) {
            s.max_weymouth_gap = s.max_weymouth_gap.max(p.weymouth_slack);
            s.min_weymouth_gap = s.min_weymouth_gap.min(p.weymouth_slack);
            s.max_avgpress_gap = s.max_avgpress_gap.max(p.avgpress_slack.abs());
        }
        for b in &r.gas.balances {
            s.max_gas_balance = s.max_gas_balance.max(b.residual.abs());
        }
        for h in r.hvdc.iter().filter(|h| h.installed) {
            for k in 0..2 {
                s.max_hvdc_current_gap = s.max_hvdc_current_gap.max(h.current_gap[k]);
                s.max_hvdc_cone_gap = s.max_hvdc_cone_gap.max(h.cone_gap[k]);
            }
        }
        for a in &r.angles {
            s.max_hvac_cone_gap = s.max_hvac_cone_gap.max(a.cone_gap);
            s.max_angle_rad = s.max_angle_rad.max(a.theta.abs());
        }
        for t in &r.telescoping {
            s.max_telescoping_error = s.max_telescoping_error.max(t.relative_error);
        }
        Self {
            schema: RESIDUALS_SCHEMA.into(),
            case: case.into(),
            summary: s,
            details: r.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Rebuilds the program of `case` with the stored options and reports residuals of
/// the stored vector.
pub fn residuals_from_file(case: &PlanningCase, file: &SolutionFile) -> Result<ResidualReport> {
    let (_, registry) = assemble(case, &file.assemble)?;
    let plan = decode(&file.x, &registry, case)?;
    Ok(ResidualReport::new(&case.name, &plan.residuals))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: &'a str,
    plan: &'a PlanSolution,
}

/// Human-readable plan summary.
pub fn summary_text(plan: &PlanSolution) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "case: {}", plan.case);
    if plan.links.is_empty() {
        let _ = writeln!(s, "links: none");
    }
    for l in &plan.links {
        let _ = writeln!(
            s,
            "link {} [{}]: {} x{} ({:.0} MW)",
            l.corridor, l.kind, l.option, l.circuits, l.capacity_mw
        );
    }
    for e in &plan.electrolysers {
        let _ = writeln!(
            s,
            "electrolyser {}: {:.1} MW, compressor {:.2} MW",
            e.site, e.power_mw, e.compressor_mw
        );
    }
    for v in &plan.svcs {
        let _ = writeln!(s, "svc {}: {:.1} MVAr", v.bus, v.mvar);
    }
    let c = &plan.costs;
    let _ = writeln!(
        s,
        "cost (M$): ptg {:.2}, pipe {:.2}, hvdc {:.2}, hvac {:.2}, h2 revenue {:.2}, total {:.2}",
        c.ptg, c.pipe, c.hvdc, c.hvac, c.h2_revenue, c.total
    );
    let _ = writeln!(
        s,
        "energy transmission factor: {:.4}",
        plan.transmission_factor
    );
    for w in &plan.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

fn series_csv(header: &[&str], series: &[Series], scale: f64) -> String {
    let mut s = header.join(",") + "\n";
    for ser in series {
        for (t, v) in ser.values.iter().enumerate() {
            let _ = writeln!(s, "{},{t},{}", ser.name, v * scale);
        }
    }
    s
}

/// Writes the plan into `dir` and returns the files written. An empty plan gets the
/// summary only.
pub fn export_solution(
    plan: &PlanSolution,
    case: &PlanningCase,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        write_text(&path, &text)?;
        written.push(path);
        Ok(())
    };
    let summary = Summary {
        schema: SUMMARY_SCHEMA,
        plan,
    };
    let mut json =
        serde_json::to_string_pretty(&summary).map_err(|e| Error::InvalidInput(e.to_string()))?;
    json.push('\n');
    put("summary.json", json)?;
    put("summary.txt", summary_text(plan))?;
    if plan.is_empty() {
        return Ok(written);
    }

    let ts = &plan.series;
    let mut vre = String::from("bus,t,available_mw,accommodated_mw\n");
    for (a, u) in ts.res_available.iter().zip(&ts.res_accommodated) {
        for (t, (av, ac)) in a.values.iter().zip(&u.values).enumerate() {
            let _ = writeln!(vre, "{},{t},{av},{ac}", a.name);
        }
    }
    put("vre.csv", vre)?;
    let hhv = case.constants.hhv_mj_per_m3;
    let mut demand = String::from("junction,t,flow_m3_per_s,energy_mw\n");
    for d in &ts.demand {
        for (t, v) in d.values.iter().enumerate() {
            let _ = writeln!(demand, "{},{t},{v},{}", d.name, v * hhv);
        }
    }
    put("demand.csv", demand)?;
    // m³ · MJ/m³ → TJ
    put(
        "linepack.csv",
        series_csv(&["pipe", "t", "tj"], &ts.linepack, hhv * 1e-6),
    )?;
    put(
        "pressure.csv",
        series_csv(&["junction", "t", "mpa"], &ts.pressure, 1e-6),
    )?;
    put(
        "voltage.csv",
        series_csv(&["bus", "t", "w_pu2"], &ts.voltage_sq, 1.0),
    )?;
    put(
        "converter_loss.csv",
        series_csv(&["circuit", "t", "loss_mw"], &ts.converter_loss, 1.0),
    )?;
    put(
        "residuals.json",
        ResidualReport::new(&plan.case, &plan.residuals).to_json()? + "\n",
    )?;
    Ok(written)
}

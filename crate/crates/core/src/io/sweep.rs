//! Distance × capacity sweeps over a two-node template.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::assembler::{AssembleOptions, PlanSolution};
use crate::bnb::{ClarabelBackend, SolveOptions, SolveStatus};
use crate::error::{Error, Result};
use crate::netmodel::build_time_index;
use crate::plan::solve_case;

use super::case::{base_dir, CaseFile, TimeSection};
use super::export::export_solution;
use super::profiles::{blended_profile, load_profiles};

pub const SWEEP_SCHEMA: &str = "vreplan-sweep/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    #[serde(default = "half_percent")]
    pub rel_gap: f64,
    /// Seconds per cell.
    pub time_limit: Option<f64>,
    pub node_limit: Option<usize>,
    /// Branch-and-bound workers per cell.
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "five")]
    pub envelope_cuts: usize,
    #[serde(default)]
    pub cones_all_circuits: bool,
}

fn half_percent() -> f64 {
    0.005
}
fn one() -> usize {
    1
}
fn five() -> usize {
    5
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            rel_gap: 0.005,
            time_limit: None,
            node_limit: None,
            workers: 1,
            envelope_cuts: 5,
            cones_all_circuits: false,
        }
    }
}

impl SolveSection {
    pub fn options(&self) -> (AssembleOptions, SolveOptions) {
        let mut s = SolveOptions {
            rel_gap: self.rel_gap,
            workers: self.workers,
            ..SolveOptions::default()
        };
        if let Some(t) = self.time_limit {
            s.time_limit = t;
        }
        if let Some(n) = self.node_limit {
            s.node_limit = n;
        }
        (
            AssembleOptions {
                envelope_cuts: self.envelope_cuts,
                cones_all_circuits: self.cones_all_circuits,
            },
            s,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub schema: String,
    /// Case file whose corridors all take the cell distance.
    pub template: String,
    /// Bus receiving the cell's VRE profile.
    pub rez_bus: String,
    pub distances_km: Vec<f64>,
    pub capacities_mw: Vec<f64>,
    #[serde(default = "half")]
    pub wind_fraction: f64,
    #[serde(default = "half")]
    pub solar_fraction: f64,
    /// Per-unit `wind` and `solar` columns; synthetic shapes when absent.
    pub capacity_factors: Option<String>,
    /// Per-cell time grid; the template's when absent.
    pub time: Option<TimeSection>,
    #[serde(default)]
    pub solve: SolveSection,
    /// Cells solved at once.
    #[serde(default = "one")]
    pub parallel_cells: usize,
}

fn half() -> f64 {
    0.5
}

impl SweepSpec {
    pub fn read(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: SweepSpec = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        spec.check()?;
        Ok((spec, base_dir(path)))
    }

    pub fn check(&self) -> Result<()> {
        if self.schema != SWEEP_SCHEMA {
            return Err(Error::InvalidInput(format!(
                "sweep schema `{}` is not `{SWEEP_SCHEMA}`",
                self.schema
            )));
        }
        if self.distances_km.is_empty() || self.capacities_mw.is_empty() {
            return Err(Error::InvalidInput(
                "sweep needs at least one distance and one capacity".into(),
            ));
        }
        if (self.wind_fraction + self.solar_fraction - 1.0).abs() > 1e-9
            || self.wind_fraction < 0.0
            || self.solar_fraction < 0.0
        {
            return Err(Error::InvalidInput(format!(
                "wind and solar fractions must be nonnegative and sum to 1, got {} + {}",
                self.wind_fraction, self.solar_fraction
            )));
        }
        if self.parallel_cells == 0 {
            return Err(Error::InvalidInput(
                "parallel_cells must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Cells in row-major order: distances outer, capacities inner.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.distances_km
            .iter()
            .flat_map(|&d| self.capacities_mw.iter().map(move |&c| (d, c)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub index: usize,
    pub distance_km: f64,
    pub capacity_mw: f64,
    pub status: Option<SolveStatus>,
    pub gap: Option<f64>,
    pub plan: Option<PlanSolution>,
    pub error: Option<String>,
}

impl CellResult {
    /// Installed technologies joined with `+`, or `none`.
    pub fn technologies(&self) -> String {
        match &self.plan {
            Some(p) if !p.links.is_empty() => p.technologies().join("+"),
            _ => "none".into(),
        }
    }

    pub fn has(&self, kind: &str) -> bool {
        self.plan
            .as_ref()
            .is_some_and(|p| p.links.iter().any(|l| l.kind == kind))
    }
}

/// Builds the case of one cell.
pub fn cell_case(
    spec: &SweepSpec,
    base: &Path,
    template: &CaseFile,
    distance_km: f64,
    capacity_mw: f64,
) -> Result<crate::netmodel::PlanningCase> {
    let mut file = template.clone();
    if let Some(t) = &spec.time {
        file.time = t.clone();
    }
    for c in &mut file.corridors {
        c.length_km = distance_km;
    }
    let time = build_time_index(&file.time.config()?)?;
    let mut profiles = std::collections::BTreeMap::new();
    // Template profile files only matter when something besides the swept bus uses them.
    let needs_files = file
        .buses
        .iter()
        .any(|b| b.id != spec.rez_bus && b.res_profile.is_some())
        || file.junctions.iter().any(|j| j.demand_profile.is_some());
    if needs_files {
        for f in &file.profiles.files {
            profiles.extend(load_profiles(&base.join(f), &time)?);
        }
    }
    profiles.extend(file.profiles.series.clone());
    let key = format!("{}-vre", spec.rez_bus);
    let series = match &spec.capacity_factors {
        Some(f) => {
            let cf = load_profiles(&base.join(f), &time)?;
            let (w, s) = match (cf.get("wind"), cf.get("solar")) {
                (Some(w), Some(s)) => (w, s),
                _ => {
                    return Err(Error::Parse {
                        path: f.clone(),
                        message: "needs `wind` and `solar` columns".into(),
                    })
                }
            };
            w.iter()
                .zip(s)
                .map(|(w, s)| capacity_mw * (spec.wind_fraction * w + spec.solar_fraction * s))
                .collect()
        }
        None => blended_profile(&time, capacity_mw, spec.wind_fraction, spec.solar_fraction)?,
    };
    profiles.insert(key.clone(), series);
    let bus = file
        .buses
        .iter_mut()
        .find(|b| b.id == spec.rez_bus)
        .ok_or_else(|| Error::InvalidInput(format!("template has no bus `{}`", spec.rez_bus)))?;
    bus.res_profile = Some(key);
    file.build_with_profiles(time, profiles)
}

fn run_cell(
    spec: &SweepSpec,
    base: &Path,
    template: &CaseFile,
    index: usize,
    out: Option<&Path>,
) -> CellResult {
    let (distance_km, capacity_mw) = spec.cells()[index];
    let mut result = CellResult {
        index,
        distance_km,
        capacity_mw,
        status: None,
        gap: None,
        plan: None,
        error: None,
    };
    let mut run = || -> Result<()> {
        let case = cell_case(spec, base, template, distance_km, capacity_mw)?;
        let (a, s) = spec.solve.options();
        let run = solve_case(&case, &a, &s, &ClarabelBackend, None)?;
        result.status = Some(run.status());
        result.gap = run.outcome.stats.gap;
        if let (Some(dir), Some(plan)) = (out, &run.solution) {
            export_solution(plan, &case, &dir.join(format!("cell-{index:02}")))?;
        }
        result.plan = run.solution;
        Ok(())
    };
    if let Err(e) = run() {
        log::warn!("sweep cell {index} ({distance_km} km, {capacity_mw} MW) failed: {e}");
        result.error = Some(e.to_string());
    }
    result
}

/// Solves every cell (`parallel_cells` at a time) and returns results in cell order.
/// Per-cell exports go to `out/cell-NN/` when `out` is given.
pub fn run_sweep(spec: &SweepSpec, base: &Path, out: Option<&Path>) -> Result<Vec<CellResult>> {
    spec.check()?;
    let template = CaseFile::read(&base.join(&spec.template))?;
    let n = spec.cells().len();
    let next = Mutex::new(0usize);
    let results = Mutex::new(Vec::with_capacity(n));
    std::thread::scope(|s| {
        for _ in 0..spec.parallel_cells.min(n) {
            s.spawn(|| loop {
                let i = {
                    let mut g = next.lock().unwrap_or_else(|e| e.into_inner());
                    let i = *g;
                    *g += 1;
                    i
                };
                if i >= n {
                    break;
                }
                let r = run_cell(spec, base, &template, i, out);
                results.lock().unwrap_or_else(|e| e.into_inner()).push(r);
            });
        }
    });
    let mut results = results.into_inner().unwrap_or_else(|e| e.into_inner());
    results.sort_by_key(|r| r.index);
    Ok(results)
}

fn num(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// Decision-map CSV, one row per cell.
pub fn sweep_csv(results: &[CellResult]) -> String {
    let mut s = String::from(
        "cell,distance_km,capacity_mw,status,technologies,links,ptg_musd,pipe_musd,hvdc_musd,hvac_musd,h2_revenue_musd,total_musd,transmission_factor,gap,error\n",
    );
    for r in results {
        let links = r
            .plan
            .as_ref()
            .map(|p| {
                p.links
                    .iter()
                    .map(|l| format!("{}x{}", l.option, l.circuits))
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        let c = r.plan.as_ref().map(|p| &p.costs);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.distance_km,
            r.capacity_mw,
            r.status
                .map(|s| format!("{s:?}"))
                .unwrap_or_else(|| "error".into()),
            r.technologies(),
            links,
            num(c.map(|c| c.ptg)),
            num(c.map(|c| c.pipe)),
            num(c.map(|c| c.hvdc)),
            num(c.map(|c| c.hvac)),
            num(c.map(|c| c.h2_revenue)),
            num(c.map(|c| c.total)),
            num(r.plan.as_ref().map(|p| p.transmission_factor)),
            num(r.gap),
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        );
    }
    s
}

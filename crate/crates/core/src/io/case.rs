//! Case files: a TOML document in engineering units plus CSV profiles.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::catalog::{HvacTemplate, HvdcTemplate, PipelineTemplate};
use crate::netmodel::{
    build_time_index, validate_case, Bus, Catalog, Constants, Corridor, ElectrolyserSite, Junction,
    Link, Offtake, PlanningCase, TimeConfig, TimeIndex, MPA,
};

use super::profiles::load_profiles;

pub const CASE_SCHEMA: &str = "vreplan-case/1";

/// Default SVC range when a bus allows one (MVAr).
pub const DEFAULT_SVC_MVAR: f64 = 2000.0;

/// Default H2 selling price ($/kg).
pub const DEFAULT_H2_PRICE_PER_KG: f64 = 3.23;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default = "half_hour")]
    pub step_hours: f64,
    /// Representative weeks; exclusive with `days`.
    pub weeks: Option<f64>,
    pub days: Option<f64>,
    #[serde(default = "six_percent")]
    pub discount_rate: f64,
    #[serde(default = "twenty")]
    pub life_years: f64,
}

fn half_hour() -> f64 {
    0.5
}
fn six_percent() -> f64 {
    0.06
}
fn twenty() -> f64 {
    20.0
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            step_hours: 0.5,
            weeks: Some(4.0),
            days: None,
            discount_rate: 0.06,
            life_years: 20.0,
        }
    }
}

impl TimeSection {
    pub fn config(&self) -> Result<TimeConfig> {
        let weeks = match (self.weeks, self.days) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInput(
                    "time: give either `weeks` or `days`, not both".into(),
                ))
            }
            (Some(w), None) => w,
            (None, Some(d)) => d / 7.0,
            (None, None) => 4.0,
        };
        Ok(TimeConfig {
            step_hours: self.step_hours,
            weeks,
            discount_rate: self.discount_rate,
            life_years: self.life_years,
        })
    }
}

/// Optional replacements for any physical constant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub hhv_mj_per_m3: Option<f64>,
    pub density_kg_per_m3: Option<f64>,
    pub isentropic_exponent: Option<f64>,
    pub compressor_constant: Option<f64>,
    pub gas_temperature_k: Option<f64>,
    pub fuel_rate_m3_per_mj: Option<f64>,
    pub gas_constant_j_per_kg_k: Option<f64>,
    pub base_mva: Option<f64>,
    pub water_per_kg_h2: Option<f64>,
    pub critical_temperature_k: Option<f64>,
    pub critical_pressure_mpa: Option<f64>,
    pub acentric_factor: Option<f64>,
}

impl ConstantsSection {
    fn apply(&self, c: &mut Constants) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut c.hhv_mj_per_m3, self.hhv_mj_per_m3);
        set(&mut c.density_kg_per_m3, self.density_kg_per_m3);
        set(&mut c.isentropic_exponent, self.isentropic_exponent);
        set(&mut c.compressor_constant, self.compressor_constant);
        set(&mut c.gas_temperature_k, self.gas_temperature_k);
        set(&mut c.fuel_rate_m3_per_mj, self.fuel_rate_m3_per_mj);
        set(&mut c.gas_constant_j_per_kg_k, self.gas_constant_j_per_kg_k);
        set(&mut c.base_mva, self.base_mva);
        set(&mut c.water_per_kg_h2, self.water_per_kg_h2);
        set(&mut c.critical_temperature_k, self.critical_temperature_k);
        set(
            &mut c.critical_pressure_pa,
            self.critical_pressure_mpa.map(|p| p * MPA),
        );
        set(&mut c.acentric_factor, self.acentric_factor);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectrolyserSection {
    pub unit_cost: Option<f64>,
    pub efficiency: Option<f64>,
    pub compressor_unit_cost: Option<f64>,
    pub compressor_inlet_mpa: Option<f64>,
    pub compressor_efficiency: Option<f64>,
}

/// Catalog changes: electrolyser field overrides, and templates that replace the
/// default entry of the same name or extend the menu.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSection {
    #[serde(default)]
    pub electrolyser: ElectrolyserSection,
    #[serde(default)]
    pub pipelines: Vec<PipelineTemplate>,
    #[serde(default)]
    pub hvdc: Vec<HvdcTemplate>,
    #[serde(default)]
    pub hvac: Vec<HvacTemplate>,
}

fn merge<T: Clone>(base: &mut Vec<T>, extra: &[T], name: impl Fn(&T) -> &str) {
    for e in extra {
        match base.iter_mut().find(|b| name(b) == name(e)) {
            Some(slot) => *slot = e.clone(),
            None => base.push(e.clone()),
        }
    }
}

impl CatalogSection {
    pub fn apply(&self, catalog: &mut Catalog) {
        let e = &self.electrolyser;
        let t = &mut catalog.electrolyser;
        if let Some(v) = e.unit_cost {
            t.unit_cost = v;
        }
        if let Some(v) = e.efficiency {
            t.efficiency = v;
        }
        if let Some(v) = e.compressor_unit_cost {
            t.compressor_unit_cost = v;
        }
        if let Some(v) = e.compressor_inlet_mpa {
            t.compressor_inlet_pa = v * MPA;
        }
        if let Some(v) = e.compressor_efficiency {
            t.compressor_efficiency = v;
        }
        merge(&mut catalog.pipelines, &self.pipelines, |p| &p.name);
        merge(&mut catalog.hvdc, &self.hvdc, |p| &p.name);
        merge(&mut catalog.hvac, &self.hvac, |p| &p.name);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilesSection {
    /// CSV files, relative to the case file; every column becomes a named profile.
    #[serde(default)]
    pub files: Vec<String>,
    /// Inline series.
    #[serde(default)]
    pub series: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusEntry {
    pub id: String,
    #[serde(default = "v_lo")]
    pub v_min: f64,
    #[serde(default = "v_hi")]
    pub v_max: f64,
    #[serde(default)]
    pub svc: bool,
    pub svc_min_mvar: Option<f64>,
    pub svc_max_mvar: Option<f64>,
    pub svc_unit_cost: Option<f64>,
    pub res_profile: Option<String>,
}

fn v_lo() -> f64 {
    0.9
}
fn v_hi() -> f64 {
    1.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OfftakeKind {
    #[default]
    None,
    Sale,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionEntry {
    pub id: String,
    #[serde(default = "p_lo")]
    pub pressure_min_mpa: f64,
    #[serde(default = "p_hi")]
    pub pressure_max_mpa: f64,
    #[serde(default)]
    pub offtake: OfftakeKind,
    /// Profile key (m³/s per step) for a fixed off-take.
    pub demand_profile: Option<String>,
    /// Upper bound on a sale off-take (m³/s).
    pub max_sale_m3_per_s: Option<f64>,
    pub h2_price_per_kg: Option<f64>,
}

fn p_lo() -> f64 {
    3.5
}
fn p_hi() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteEntry {
    pub id: String,
    pub bus: String,
    pub junction: String,
    pub max_power_mw: f64,
    /// Demand-point station without compressor.
    #[serde(default)]
    pub demand_site: bool,
    /// Defaults to the water needed to run at full size for the whole horizon.
    pub initial_water_kg: Option<f64>,
    pub output_pressure_mpa: Option<f64>,
    pub efficiency: Option<f64>,
    pub unit_cost: Option<f64>,
    pub compressor_unit_cost: Option<f64>,
    pub compressor_efficiency: Option<f64>,
    #[serde(default)]
    pub base_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Pipeline,
    Hvdc,
    Hvac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorridorEntry {
    pub id: String,
    pub kind: LinkKind,
    pub from: String,
    pub to: String,
    pub length_km: f64,
    /// Catalog names; every catalog entry of the kind when absent.
    pub options: Option<Vec<String>>,
    /// Overrides the catalog circuit limit of every option.
    pub max_circuits: Option<u32>,
}

/// Parsed case document before catalog expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub schema: String,
    pub name: String,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub catalog: CatalogSection,
    #[serde(default)]
    pub profiles: ProfilesSection,
    #[serde(default)]
    pub buses: Vec<BusEntry>,
    #[serde(default)]
    pub junctions: Vec<JunctionEntry>,
    #[serde(default)]
    pub sites: Vec<SiteEntry>,
    #[serde(default)]
    pub corridors: Vec<CorridorEntry>,
}

impl CaseFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let file: CaseFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_owned(),
            message: e.to_string(),
        })?;
        if file.schema != CASE_SCHEMA {
            return Err(Error::Parse {
                path: origin.to_owned(),
                message: format!("schema `{}` is not `{CASE_SCHEMA}`", file.schema),
            });
        }
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// Expands catalog references and loads profiles (paths relative to `base_dir`),
    /// then validates.
    pub fn build(&self, base_dir: &Path) -> Result<PlanningCase> {
        let time = build_time_index(&self.time.config()?)?;
        let mut profiles = BTreeMap::new();
        for f in &self.profiles.files {
            let path = base_dir.join(f);
            if !path.exists() {
                return Err(Error::Parse {
                    path: format!("profiles.files[{f}]"),
                    message: format!("profile file {} not found", path.display()),
                });
            }
            for (k, v) in load_profiles(&path, &time)? {
                profiles.insert(k, v);
            }
        }
        for (k, v) in &self.profiles.series {
            profiles.insert(k.clone(), v.clone());
        }
        self.build_with_profiles(time, profiles)
    }

    pub fn build_with_profiles(
        &self,
        time: TimeIndex,
        profiles: BTreeMap<String, Vec<f64>>,
    ) -> Result<PlanningCase> {
        let mut constants = Constants::default();
        self.constants.apply(&mut constants);
        let mut catalog = Catalog::default();
        self.catalog.apply(&mut catalog);
        let el = &catalog.electrolyser;
        let default_svc_cost = catalog
            .hvac
            .first()
            .map(|h| h.svc_unit_cost)
            .unwrap_or(0.088);

        for (key, reference) in self
            .buses
            .iter()
            .filter_map(|b| {
                b.res_profile
                    .as_ref()
                    .map(|p| (format!("buses[{}].res_profile", b.id), p))
            })
            .chain(self.junctions.iter().filter_map(|j| {
                j.demand_profile
                    .as_ref()
                    .map(|p| (format!("junctions[{}].demand_profile", j.id), p))
            }))
        {
            if !profiles.contains_key(reference) {
                return Err(Error::Parse {
                    path: key,
                    message: format!("unknown profile `{reference}`"),
                });
            }
        }

        let buses: Vec<Bus> = self
            .buses
            .iter()
            .map(|b| Bus {
                id: b.id.clone(),
                v_min: b.v_min,
                v_max: b.v_max,
                svc_allowed: b.svc,
                q_var_min: if b.svc {
                    b.svc_min_mvar.unwrap_or(-DEFAULT_SVC_MVAR)
                } else {
                    0.0
                },
                q_var_max: if b.svc {
                    b.svc_max_mvar.unwrap_or(DEFAULT_SVC_MVAR)
                } else {
                    0.0
                },
                svc_unit_cost: b.svc_unit_cost.unwrap_or(default_svc_cost),
                res_profile: b.res_profile.clone(),
            })
            .collect();

        let mut junctions = Vec::new();
        for j in &self.junctions {
            let offtake = match j.offtake {
                OfftakeKind::None => Offtake::None,
                OfftakeKind::Sale => Offtake::Sale {
                    max_flow: j.max_sale_m3_per_s,
                },
                OfftakeKind::Fixed => match &j.demand_profile {
                    Some(p) => Offtake::Fixed(p.clone()),
                    None => {
                        return Err(Error::Parse {
                            path: format!("junctions[{}].demand_profile", j.id),
                            message: "a fixed off-take needs a demand profile".into(),
                        })
                    }
                },
            };
            junctions.push(Junction {
                id: j.id.clone(),
                pressure_min: j.pressure_min_mpa * MPA,
                pressure_max: j.pressure_max_mpa * MPA,
                offtake,
                h2_price_per_m3: j.h2_price_per_kg.unwrap_or(DEFAULT_H2_PRICE_PER_KG)
                    * constants.density_kg_per_m3,
            });
        }

        let sites = self
            .sites
            .iter()
            .map(|s| {
                let efficiency = s.efficiency.unwrap_or(el.efficiency);
                let full_flow = s.max_power_mw * efficiency / constants.hhv_mj_per_m3;
                let horizon_water = constants.water_per_kg_h2
                    * full_flow
                    * constants.density_kg_per_m3
                    * time.step_seconds
                    * time.steps as f64;
                ElectrolyserSite {
                    id: s.id.clone(),
                    bus: s.bus.clone(),
                    junction: s.junction.clone(),
                    max_power_mw: s.max_power_mw,
                    efficiency,
                    compressor_efficiency: s
                        .compressor_efficiency
                        .unwrap_or(el.compressor_efficiency),
                    output_pressure: s
                        .output_pressure_mpa
                        .map(|p| p * MPA)
                        .unwrap_or(el.compressor_inlet_pa),
                    initial_water_kg: s.initial_water_kg.unwrap_or(horizon_water),
                    base_cost: s.base_cost,
                    unit_cost: s.unit_cost.unwrap_or(el.unit_cost),
                    compressor_unit_cost: s.compressor_unit_cost.unwrap_or(el.compressor_unit_cost),
                    is_demand_site: s.demand_site,
                }
            })
            .collect();

        let v_min = |id: &str| buses.iter().find(|b| b.id == id).map(|b| b.v_min);
        let mut corridors = Vec::new();
        for c in &self.corridors {
            let names: Vec<String> = match &c.options {
                Some(n) => n.clone(),
                None => match c.kind {
                    LinkKind::Pipeline => {
                        catalog.pipelines.iter().map(|p| p.name.clone()).collect()
                    }
                    LinkKind::Hvdc => catalog.hvdc.iter().map(|p| p.name.clone()).collect(),
                    LinkKind::Hvac => catalog.hvac.iter().map(|p| p.name.clone()).collect(),
                },
            };
            let unknown = |i: usize, name: &str| Error::Parse {
                path: format!("corridors[{}].options[{i}]", c.id),
                message: format!("unknown {:?} option `{name}`", c.kind).to_lowercase(),
            };
            let link = match c.kind {
                LinkKind::Pipeline => Link::Pipeline(
                    names
                        .iter()
                        .enumerate()
                        .map(|(i, n)| {
                            catalog
                                .pipeline(n)
                                .map(|t| t.instantiate(c.length_km))
                                .ok_or_else(|| unknown(i, n))
                        })
                        .collect::<Result<_>>()?,
                ),
                LinkKind::Hvdc => {
                    let vmin = v_min(&c.from)
                        .into_iter()
                        .chain(v_min(&c.to))
                        .fold(1.0, f64::min);
                    Link::Hvdc(
                        names
                            .iter()
                            .enumerate()
                            .map(|(i, n)| {
                                let mut o = catalog
                                    .hvdc(n)
                                    .ok_or_else(|| unknown(i, n))?
                                    .instantiate(c.length_km, vmin);
                                if let Some(m) = c.max_circuits {
                                    o.max_circuits = m;
                                }
                                Ok(o)
                            })
                            .collect::<Result<_>>()?,
                    )
                }
                LinkKind::Hvac => Link::Hvac(
                    names
                        .iter()
                        .enumerate()
                        .map(|(i, n)| {
                            let mut o = catalog
                                .hvac(n)
                                .ok_or_else(|| unknown(i, n))?
                                .instantiate(c.length_km);
                            if let Some(m) = c.max_circuits {
                                o.max_circuits = m;
                            }
                            Ok(o)
                        })
                        .collect::<Result<_>>()?,
                ),
            };
            corridors.push(Corridor {
                id: c.id.clone(),
                from: c.from.clone(),
                to: c.to.clone(),
                link,
            });
        }

        validate_case(PlanningCase {
            name: self.name.clone(),
            constants,
            buses,
            junctions,
            sites,
            corridors,
            time,
            profiles,
        })
    }
}

/// Reads, expands and validates a case file.
pub fn load_case(path: &Path) -> Result<PlanningCase> {
    let file = CaseFile::read(path)?;
    file.build(&base_dir(path))
}

pub(crate) fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema = "vreplan-case/1"
name = "tiny"

[time]
step_hours = 2.0
days = 1

[profiles.series]
rez = [100, 100, 100, 100, 100, 100, 100, 100, 100, 100, 100, 100]

[[buses]]
id = "a"
res_profile = "rez"

[[buses]]
id = "b"

[[junctions]]
id = "ja"

[[junctions]]
id = "jb"
offtake = "sale"

[[sites]]
id = "p1"
bus = "a"
junction = "ja"
max_power_mw = 200

[[corridors]]
id = "c1"
kind = "pipeline"
from = "ja"
to = "jb"
length_km = 100
options = ["pipe-0.5m"]

[[corridors]]
id = "c2"
kind = "hvac"
from = "a"
to = "b"
length_km = 100
options = ["hvac-365kv-single"]
"#;

    #[test]
    fn parses_and_builds() {
        let f = CaseFile::parse(MINIMAL, "inline").unwrap();
        let case = f.build(Path::new(".")).unwrap();
        assert_eq!(case.time.steps, 12);
        assert_eq!(case.corridors.len(), 2);
        assert!((case.junctions[1].h2_price_per_m3 - 3.23 * 0.086).abs() < 1e-12);
        match &case.corridors[0].link {
            Link::Pipeline(o) => assert!(o[0].flow_cap.unwrap() > 0.0),
            _ => panic!("pipeline expected"),
        }
    }

    #[test]
    fn unknown_option_named() {
        let text = MINIMAL.replace("\"pipe-0.5m\"", "\"pipe-9m\"");
        let err = CaseFile::parse(&text, "inline")
            .unwrap()
            .build(Path::new("."))
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("corridors[c1].options[0]"), "{msg}");
        assert!(msg.contains("pipe-9m"));
    }

    #[test]
    fn unknown_field_has_location() {
        let text = MINIMAL.replace("max_power_mw = 200", "max_power_mw = 200\nmax_powr = 1");
        let err = CaseFile::parse(&text, "inline").unwrap_err().to_string();
        assert!(err.contains("max_powr"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn missing_profile_file_named() {
        let text = MINIMAL.replace(
            "[profiles.series]",
            "[profiles]\nfiles = [\"nowhere.csv\"]\n[profiles.series]",
        );
        let err = CaseFile::parse(&text, "inline")
            .unwrap()
            .build(Path::new("."))
            .unwrap_err();
        assert!(err.to_string().contains("nowhere.csv"));
    }

    #[test]
    fn catalog_override_applies() {
        let text = MINIMAL.replace(
            "[[buses]]\nid = \"a\"",
            "[catalog.electrolyser]\nunit_cost = 0.8\n\n[[buses]]\nid = \"a\"",
        );
        let case = CaseFile::parse(&text, "inline")
            .unwrap()
            .build(Path::new("."))
            .unwrap();
        assert_eq!(case.sites[0].unit_cost, 0.8);
    }
}

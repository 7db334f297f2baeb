//! Domain types for the planning network. All quantities are SI (Pa, m, s, W-derived MW)
//! with money in M$; per-unit values appear only inside the HVAC module.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::time::TimeIndex;

/// Physical constants shared by every module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Higher heating value of H2 (MJ/m³ at standard conditions).
    pub hhv_mj_per_m3: f64,
    /// H2 density at standard conditions (kg/m³).
    pub density_kg_per_m3: f64,
    /// Isentropic exponent of H2 (dimensionless).
    pub isentropic_exponent: f64,
    /// Compressor constant K (MJ/(K·m³)).
    pub compressor_constant: f64,
    /// Gas temperature (K).
    pub gas_temperature_k: f64,
    /// Fuel rate of a centrifugal compressor drive (m³ of H2 per MJ of shaft work).
    pub fuel_rate_m3_per_mj: f64,
    /// Specific gas constant of H2 (J/(kg·K)).
    pub gas_constant_j_per_kg_k: f64,
    /// Power base for per-unit conversion (MVA).
    pub base_mva: f64,
    /// Water consumed per unit mass of H2 produced (kg/kg).
    pub water_per_kg_h2: f64,
    /// H2 critical temperature for the SRK equation of state (K).
    pub critical_temperature_k: f64,
    /// H2 critical pressure (Pa).
    pub critical_pressure_pa: f64,
    /// H2 acentric factor.
    pub acentric_factor: f64,
}

/// Electric bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    /// Voltage magnitude bounds (pu).
    pub v_min: f64,
    pub v_max: f64,
    pub svc_allowed: bool,
    /// SVC reactive output bounds (MVAr).
    pub q_var_min: f64,
    pub q_var_max: f64,
    /// SVC unit cost (M$/MVAr).
    pub svc_unit_cost: f64,
    /// Key into [`PlanningCase::profiles`] for the available VRE (MW per step).
    pub res_profile: Option<String>,
}

/// H2 off-take behaviour at a junction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Offtake {
    None,
    /// Fixed demand profile (m³/s per step), key into [`PlanningCase::profiles`].
    Fixed(String),
    /// Revenue-maximising sale point; the off-take is a bounded decision variable.
    /// `None` means the default bound (total electrolyser capacity equivalent).
    Sale {
        max_flow: Option<f64>,
    },
}

/// Gas junction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub id: String,
    pub pressure_min: f64,
    pub pressure_max: f64,
    pub offtake: Offtake,
    /// Selling price of H2 ($/m³).
    pub h2_price_per_m3: f64,
}

/// Candidate electrolyser station connecting an electric bus to a gas junction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectrolyserSite {
    pub id: String,
    pub bus: String,
    pub junction: String,
    /// Station size cap (MW).
    pub max_power_mw: f64,
    pub efficiency: f64,
    pub compressor_efficiency: f64,
    /// Electrolyser module output pressure, i.e. compressor inlet (Pa).
    pub output_pressure: f64,
    pub initial_water_kg: f64,
    pub base_cost: f64,
    /// M$/MW of electrolyser.
    pub unit_cost: f64,
    /// M$/MW of compressor.
    pub compressor_unit_cost: f64,
    /// Demand-point station: no compressor.
    pub is_demand_site: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOption {
    pub name: String,
    pub diameter_m: f64,
    pub length_m: f64,
    pub efficiency: f64,
    /// M$/km.
    pub cost_per_km: f64,
    /// Operating pressure range of the pipe (Pa).
    pub pressure_min: f64,
    pub pressure_max: f64,
    /// Flow cap (m³/s); filled with the physical maximum during validation when absent.
    pub flow_cap: Option<f64>,
}

impl PipelineOption {
    pub fn cost(&self) -> f64 {
        self.cost_per_km * self.length_m / 1e3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvdcOption {
    pub name: String,
    pub capacity_mw: f64,
    pub length_m: f64,
    /// M$/km.
    pub conductor_cost_per_km: f64,
    /// M$ for the sending and receiving converter stations together.
    pub converter_pair_cost: f64,
    /// Ω/km of the bipole.
    pub resistance_ohm_per_km: f64,
    /// No-load loss (MW).
    pub alpha_mw: f64,
    /// Linear loss coefficient (V).
    pub beta_v: f64,
    /// Quadratic loss coefficient (Ω).
    pub gamma_ohm: f64,
    /// Converter MVA cap.
    pub s_max_mva: f64,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
    pub q_min_mvar: f64,
    pub q_max_mvar: f64,
    /// AC-side current cap (kA).
    pub current_max_ka: f64,
    /// AC-side line-to-line voltage base of the converter (kV).
    pub ac_kv: f64,
    /// Nominal DC voltage (kV) and its bounds.
    pub dc_kv: f64,
    pub dc_v_min_kv: f64,
    pub dc_v_max_kv: f64,
    pub max_circuits: u32,
}

impl HvdcOption {
    /// Investment per installed circuit (M$).
    pub fn cost(&self) -> f64 {
        self.conductor_cost_per_km * self.length_m / 1e3 + self.converter_pair_cost
    }

    /// Line resistance over the full length (Ω).
    pub fn resistance_ohm(&self) -> f64 {
        self.resistance_ohm_per_km * self.length_m / 1e3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvacOption {
    pub name: String,
    pub voltage_kv: f64,
    /// Arrangement capacity (MW, taken as MVA at unity power factor).
    pub capacity_mw: f64,
    pub length_m: f64,
    /// M$/km.
    pub conductor_cost_per_km: f64,
    /// M$/km for the substation pair.
    pub substation_cost_per_km: f64,
    /// Per-circuit series parameters.
    pub r_ohm_per_km: f64,
    pub x_ohm_per_km: f64,
    /// Per-circuit charging susceptance (µS/km).
    pub b_ch_us_per_km: f64,
    /// Number of physical circuits sharing the arrangement (1 single, 2 double).
    pub conductors: u32,
    pub theta_min: f64,
    pub theta_max: f64,
    pub max_circuits: u32,
}

impl HvacOption {
    pub fn cost(&self) -> f64 {
        (self.conductor_cost_per_km + self.substation_cost_per_km) * self.length_m / 1e3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Link {
    Pipeline(Vec<PipelineOption>),
    Hvdc(Vec<HvdcOption>),
    Hvac(Vec<HvacOption>),
}

impl Link {
    pub fn kind(&self) -> &'static str {
        match self {
            Link::Pipeline(_) => "pipeline",
            Link::Hvdc(_) => "hvdc",
            Link::Hvac(_) => "hvac",
        }
    }

    pub fn option_count(&self) -> usize {
        match self {
            Link::Pipeline(o) => o.len(),
            Link::Hvdc(o) => o.len(),
            Link::Hvac(o) => o.len(),
        }
    }
}

/// Transport corridor. Gas corridors join junctions and flow `from → to`;
/// electric corridors join buses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub id: String,
    pub from: String,
    pub to: String,
    pub link: Link,
}

/// Immutable network description consumed by the assembler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningCase {
    pub name: String,
    pub constants: Constants,
    pub buses: Vec<Bus>,
    pub junctions: Vec<Junction>,
    pub sites: Vec<ElectrolyserSite>,
    pub corridors: Vec<Corridor>,
    pub time: TimeIndex,
    /// Named per-step series (MW for RES, m³/s for demand).
    pub profiles: BTreeMap<String, Vec<f64>>,
}

impl PlanningCase {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn junction_index(&self, id: &str) -> Option<usize> {
        self.junctions.iter().position(|j| j.id == id)
    }

    /// Available VRE at bus `i` (MW per step); zeros when the bus has no profile.
    pub fn res_available(&self, bus: usize) -> Vec<f64> {
        match &self.buses[bus].res_profile {
            Some(key) => self.profiles.get(key).cloned().unwrap_or_default(),
            None => vec![0.0; self.time.steps],
        }
    }
}

//! Bundled default technology catalog and physical constants.
//!
//! Values are the published cost and parameter assumptions for electrolysers,
//! compressors, H2 pipelines, 500 kV VSC HVDC and HVAC systems. Entries are
//! length-free templates; [`PipelineTemplate::instantiate`] and friends bind them to a corridor.

use serde::{Deserialize, Serialize};

use super::types::{Constants, HvacOption, HvdcOption, PipelineOption};

pub const MPA: f64 = 1e6;

impl Default for Constants {
    fn default() -> Self {
        Self {
            hhv_mj_per_m3: 12.1948,
            density_kg_per_m3: 0.086,
            isentropic_exponent: 1.296,
            compressor_constant: 0.351121e-3,
            gas_temperature_k: 288.15,
            fuel_rate_m3_per_mj: 0.2624,
            gas_constant_j_per_kg_k: 4124.2,
            base_mva: 100.0,
            water_per_kg_h2: 10.0,
            critical_temperature_k: 33.19,
            critical_pressure_pa: 1.313e6,
            acentric_factor: -0.216,
        }
    }
}

/// Electrolyser and station-compressor assumptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectrolyserTemplate {
    /// M$/MW.
    pub unit_cost: f64,
    pub efficiency: f64,
    /// kg of water per kg of H2.
    pub water_per_kg_h2: f64,
    /// M$/MW.
    pub compressor_unit_cost: f64,
    pub compressor_inlet_pa: f64,
    pub compressor_outlet_pa: f64,
    pub compressor_efficiency: f64,
}

impl Default for ElectrolyserTemplate {
    fn default() -> Self {
        Self {
            unit_cost: 0.6,
            efficiency: 0.70,
            water_per_kg_h2: 10.0,
            compressor_unit_cost: 4.15,
            compressor_inlet_pa: 3.5 * MPA,
            compressor_outlet_pa: 10.0 * MPA,
            compressor_efficiency: 0.81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTemplate {
    pub name: String,
    pub diameter_m: f64,
    /// M$/km.
    pub cost_per_km: f64,
    pub efficiency: f64,
    pub pressure_min_pa: f64,
    pub pressure_max_pa: f64,
}

impl PipelineTemplate {
    pub fn instantiate(&self, length_km: f64) -> PipelineOption {
        PipelineOption {
            name: self.name.clone(),
            diameter_m: self.diameter_m,
            length_m: length_km * 1e3,
            efficiency: self.efficiency,
            cost_per_km: self.cost_per_km,
            pressure_min: self.pressure_min_pa,
            pressure_max: self.pressure_max_pa,
            flow_cap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvdcTemplate {
    pub name: String,
    pub capacity_mw: f64,
    /// M$/km.
    pub conductor_cost_per_km: f64,
    /// M$ per converter station; a link needs two.
    pub converter_station_cost: f64,
    /// Stored per km; the source table prints the unit as Ω only.
    pub resistance_ohm_per_km: f64,
    pub alpha_mw: f64,
    pub beta_v: f64,
    pub gamma_ohm: f64,
    pub dc_kv: f64,
    pub ac_kv: f64,
    /// Relative DC voltage band (0.1 = ±10 %).
    pub dc_voltage_band: f64,
    pub max_circuits: u32,
}

impl HvdcTemplate {
    /// Binds the template to a corridor. The AC-current cap is the MVA rating drawn at
    /// the lowest admissible AC voltage `v_min_pu`.
    pub fn instantiate(&self, length_km: f64, v_min_pu: f64) -> HvdcOption {
        let s = self.capacity_mw;
        HvdcOption {
            name: self.name.clone(),
            capacity_mw: s,
            length_m: length_km * 1e3,
            conductor_cost_per_km: self.conductor_cost_per_km,
            converter_pair_cost: 2.0 * self.converter_station_cost,
            resistance_ohm_per_km: self.resistance_ohm_per_km,
            alpha_mw: self.alpha_mw,
            beta_v: self.beta_v,
            gamma_ohm: self.gamma_ohm,
            s_max_mva: s,
            p_min_mw: -s,
            p_max_mw: s,
            q_min_mvar: -s,
            q_max_mvar: s,
            current_max_ka: s / (3f64.sqrt() * self.ac_kv * v_min_pu),
            ac_kv: self.ac_kv,
            dc_kv: self.dc_kv,
            dc_v_min_kv: self.dc_kv * (1.0 - self.dc_voltage_band),
            dc_v_max_kv: self.dc_kv * (1.0 + self.dc_voltage_band),
            max_circuits: self.max_circuits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvacTemplate {
    pub name: String,
    pub voltage_kv: f64,
    pub conductors: u32,
    pub capacity_mw: f64,
    /// M$/km.
    pub conductor_cost_per_km: f64,
    /// M$/km per substation; a link needs two.
    pub substation_cost_per_km: f64,
    pub r_ohm_per_km: f64,
    pub x_ohm_per_km: f64,
    pub b_ch_us_per_km: f64,
    /// Relative voltage band (0.1 = ±10 %).
    pub voltage_band: f64,
    /// Maximum angular displacement (degrees).
    pub max_angle_deg: f64,
    /// SVC cost (M$/MVAr).
    pub svc_unit_cost: f64,
    pub max_circuits: u32,
}

impl HvacTemplate {
    pub fn instantiate(&self, length_km: f64) -> HvacOption {
        let theta = self.max_angle_deg.to_radians();
        HvacOption {
            name: self.name.clone(),
            voltage_kv: self.voltage_kv,
            capacity_mw: self.capacity_mw,
            length_m: length_km * 1e3,
            conductor_cost_per_km: self.conductor_cost_per_km,
            substation_cost_per_km: 2.0 * self.substation_cost_per_km,
            r_ohm_per_km: self.r_ohm_per_km,
            x_ohm_per_km: self.x_ohm_per_km,
            b_ch_us_per_km: self.b_ch_us_per_km,
            conductors: self.conductors,
            theta_min: -theta,
            theta_max: theta,
            max_circuits: self.max_circuits,
        }
    }
}

/// Full default catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub electrolyser: ElectrolyserTemplate,
    pub pipelines: Vec<PipelineTemplate>,
    pub hvdc: Vec<HvdcTemplate>,
    pub hvac: Vec<HvacTemplate>,
}

fn pipe(name: &str, d: f64, cost: f64) -> PipelineTemplate {
    PipelineTemplate {
        name: name.into(),
        diameter_m: d,
        cost_per_km: cost,
        efficiency: 0.95,
        pressure_min_pa: 3.5 * MPA,
        pressure_max_pa: 10.0 * MPA,
    }
}

fn hvdc(name: &str, gw: f64, conductor: f64, station: f64) -> HvdcTemplate {
    HvdcTemplate {
        name: name.into(),
        capacity_mw: gw * 1e3,
        conductor_cost_per_km: conductor,
        converter_station_cost: station,
        resistance_ohm_per_km: 0.0059,
        alpha_mw: 6.62,
        beta_v: 1800.0,
        gamma_ohm: 1.98,
        dc_kv: 500.0,
        ac_kv: 500.0,
        dc_voltage_band: 0.1,
        max_circuits: 2,
    }
}

#[allow(clippy::too_many_arguments)]
fn hvac(
    name: &str,
    kv: f64,
    conductors: u32,
    mw: f64,
    conductor: f64,
    substation: f64,
    r: f64,
    x: f64,
    b: f64,
) -> HvacTemplate {
    HvacTemplate {
        name: name.into(),
        voltage_kv: kv,
        conductors,
        capacity_mw: mw,
        conductor_cost_per_km: conductor,
        substation_cost_per_km: substation,
        r_ohm_per_km: r,
        x_ohm_per_km: x,
        b_ch_us_per_km: b,
        voltage_band: 0.1,
        max_angle_deg: 45.0,
        svc_unit_cost: 0.088,
        max_circuits: 1,
    }
}

impl Default for Catalog {
    fn default() -> Self {
        Self {
            electrolyser: ElectrolyserTemplate::default(),
            pipelines: vec![
                pipe("pipe-0.5m", 0.5, 1.829),
                pipe("pipe-0.9m", 0.9, 2.682),
                pipe("pipe-1.2m", 1.2, 3.414),
            ],
            hvdc: vec![
                hvdc("hvdc-1gw", 1.0, 0.78, 170.0),
                hvdc("hvdc-2gw", 2.0, 0.95, 237.4),
                hvdc("hvdc-3gw", 3.0, 1.0, 301.4),
            ],
            hvac: vec![
                hvac(
                    "hvac-365kv-single",
                    365.0,
                    1,
                    750.0,
                    0.84,
                    0.0706,
                    0.0339,
                    0.288,
                    3.803,
                ),
                hvac(
                    "hvac-500kv-single",
                    500.0,
                    1,
                    1500.0,
                    1.19,
                    0.0986,
                    0.0226,
                    0.276,
                    3.968,
                ),
                hvac(
                    "hvac-765kv-single",
                    765.0,
                    1,
                    1500.0,
                    1.67,
                    0.1168,
                    0.01695,
                    0.278,
                    3.937,
                ),
                hvac(
                    "hvac-365kv-double",
                    365.0,
                    2,
                    1500.0,
                    1.34,
                    0.1412,
                    0.0339,
                    0.288,
                    3.803,
                ),
                hvac(
                    "hvac-500kv-double",
                    500.0,
                    2,
                    3000.0,
                    1.91,
                    0.1971,
                    0.0226,
                    0.276,
                    3.968,
                ),
                hvac(
                    "hvac-765kv-double",
                    765.0,
                    2,
                    3000.0,
                    2.38,
                    0.2336,
                    0.01695,
                    0.278,
                    3.937,
                ),
            ],
        }
    }
}

impl Catalog {
    pub fn pipeline(&self, name: &str) -> Option<&PipelineTemplate> {
        self.pipelines.iter().find(|p| p.name == name)
    }

    pub fn hvdc(&self, name: &str) -> Option<&HvdcTemplate> {
        self.hvdc.iter().find(|p| p.name == name)
    }

    pub fn hvac(&self, name: &str) -> Option<&HvacTemplate> {
        self.hvac.iter().find(|p| p.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Every entry against the published tables, compared exactly.
    #[test]
    fn electrolyser_and_compressor_table() {
        let e = ElectrolyserTemplate::default();
        assert_eq!(e.unit_cost, 0.6);
        assert_eq!(e.efficiency, 0.70);
        assert_eq!(e.water_per_kg_h2, 10.0);
        assert_eq!(e.compressor_unit_cost, 4.15);
        assert_eq!(e.compressor_inlet_pa, 3.5e6);
        assert_eq!(e.compressor_outlet_pa, 10e6);
        assert_eq!(e.compressor_efficiency, 0.81);
    }

    #[test]
    fn pipeline_table() {
        let c = Catalog::default();
        let rows: Vec<_> = c
            .pipelines
            .iter()
            .map(|p| {
                (
                    p.diameter_m,
                    p.cost_per_km,
                    p.efficiency,
                    p.pressure_min_pa,
                    p.pressure_max_pa,
                )
            })
            .collect();
        assert_eq!(
            rows,
            vec![
                (0.5, 1.829, 0.95, 3.5e6, 10e6),
                (0.9, 2.682, 0.95, 3.5e6, 10e6),
                (1.2, 3.414, 0.95, 3.5e6, 10e6),
            ]
        );
    }

    #[test]
    fn hvdc_table() {
        let c = Catalog::default();
        let rows: Vec<_> = c
            .hvdc
            .iter()
            .map(|h| {
                (
                    h.capacity_mw,
                    h.conductor_cost_per_km,
                    h.converter_station_cost,
                )
            })
            .collect();
        assert_eq!(
            rows,
            vec![
                (1000.0, 0.78, 170.0),
                (2000.0, 0.95, 237.4),
                (3000.0, 1.0, 301.4)
            ]
        );
        for h in &c.hvdc {
            assert_eq!(h.resistance_ohm_per_km, 0.0059);
            assert_eq!(h.alpha_mw, 6.62);
            assert_eq!(h.beta_v, 1800.0);
            assert_eq!(h.gamma_ohm, 1.98);
            assert_eq!(h.dc_kv, 500.0);
        }
    }

    #[test]
    fn hvac_table() {
        let c = Catalog::default();
        let rows: Vec<_> = c
            .hvac
            .iter()
            .map(|h| {
                (
                    h.voltage_kv,
                    h.conductors,
                    h.conductor_cost_per_km,
                    h.substation_cost_per_km,
                    h.capacity_mw,
                )
            })
            .collect();
        assert_eq!(
            rows,
            vec![
                (365.0, 1, 0.84, 0.0706, 750.0),
                (500.0, 1, 1.19, 0.0986, 1500.0),
                (765.0, 1, 1.67, 0.1168, 1500.0),
                (365.0, 2, 1.34, 0.1412, 1500.0),
                (500.0, 2, 1.91, 0.1971, 3000.0),
                (765.0, 2, 2.38, 0.2336, 3000.0),
            ]
        );
        for h in &c.hvac {
            let (r, x, b) = match h.voltage_kv as u32 {
                365 => (0.0339, 0.288, 3.803),
                500 => (0.0226, 0.276, 3.968),
                765 => (0.01695, 0.278, 3.937),
                _ => unreachable!(),
            };
            assert_eq!(
                (h.r_ohm_per_km, h.x_ohm_per_km, h.b_ch_us_per_km),
                (r, x, b)
            );
            assert_eq!(h.voltage_band, 0.1);
            assert_eq!(h.max_angle_deg, 45.0);
            assert_eq!(h.svc_unit_cost, 88_000.0 / 1e6);
        }
    }

    #[test]
    fn hvdc_instantiation() {
        let o = Catalog::default()
            .hvdc("hvdc-2gw")
            .unwrap()
            .instantiate(570.0, 0.9);
        assert!((o.resistance_ohm() - 3.363).abs() < 1e-12);
        assert_eq!(o.converter_pair_cost, 474.8);
        assert_eq!(o.dc_v_min_kv, 450.0);
        assert!((o.dc_v_max_kv - 550.0).abs() < 1e-9);
    }
}

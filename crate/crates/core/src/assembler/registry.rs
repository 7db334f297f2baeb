use serde::{Deserialize, Serialize};

use crate::assembler::program::{ConicProgram, VarId};
use crate::electrolyser::SiteVars;
use crate::error::{Error, Result};
use crate::gaspipe::{OfftakeVars, PipeVars};
use crate::hvac::{BusVars, HvacVars};
use crate::hvdc::HvdcVars;
use crate::netmodel::PlanningCase;

/// Node-level variables shared by several emitters: squared bus voltage (pu²) and
/// junction pressure (Pa), indexed `[node][t]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeVars {
    pub bus_w: Vec<Vec<VarId>>,
    pub pressure: Vec<Vec<VarId>>,
}

pub fn emit_nodes(program: &mut ConicProgram, case: &PlanningCase) -> NodeVars {
    let steps = case.time.steps;
    let bus_w = case
        .buses
        .iter()
        .map(|b| {
            let entity = format!("bus:{}", b.id);
            (0..steps)
                .map(|t| {
                    program.continuous("bus.w", &entity, Some(t), b.v_min.powi(2), b.v_max.powi(2))
                })
                .collect()
        })
        .collect();
    let pressure = case
        .junctions
        .iter()
        .map(|j| {
            let entity = format!("junction:{}", j.id);
            (0..steps)
                .map(|t| {
                    program.continuous(
                        "gas.pressure",
                        &entity,
                        Some(t),
                        j.pressure_min,
                        j.pressure_max,
                    )
                })
                .collect()
        })
        .collect();
    NodeVars { bus_w, pressure }
}

/// Typed handles to every variable of an assembled program.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Registry {
    pub nodes: NodeVars,
    pub sites: Vec<SiteVars>,
    pub pipes: Vec<PipeVars>,
    pub hvdc: Vec<HvdcVars>,
    pub hvac: Vec<HvacVars>,
    pub buses: Vec<BusVars>,
    pub offtakes: Vec<OfftakeVars>,
    pub num_vars: usize,
    /// NPV multiplier applied to one representative year of H2 sales.
    pub annuity: f64,
}

impl Registry {
    pub fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.num_vars {
            return Err(Error::Dimension {
                expected: self.num_vars,
                actual: x.len(),
            });
        }
        Ok(())
    }
}

//! Network data model: domain types, the default technology catalog, the time grid,
//! per-unit conversion and case validation.

pub mod catalog;
pub mod time;
pub mod types;
pub mod units;
mod validate;

pub use catalog::{Catalog, MPA};
pub use time::{build_time_index, TimeConfig, TimeIndex};
pub use types::{
    Bus, Constants, Corridor, ElectrolyserSite, HvacOption, HvdcOption, Junction, Link, Offtake,
    PipelineOption, PlanningCase,
};
pub use units::{ohmic_from_pu, per_unit_line, PuBranch};
pub use validate::validate_case;

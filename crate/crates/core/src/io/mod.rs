//! File formats and study drivers: case and profile ingestion, plan export, sweeps.

pub mod case;
pub mod export;
pub mod profiles;
pub mod sweep;

pub use case::{load_case, CaseFile, CASE_SCHEMA};
pub use export::{export_solution, residuals_from_file, ResidualReport, SolutionFile};
pub use profiles::{load_profiles, synthetic_capacity_factor, Resource};
pub use sweep::{run_sweep, sweep_csv, CellResult, SweepSpec};

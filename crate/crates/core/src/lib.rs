//! Co-planning of electricity transmission and hydrogen pipelines for transporting
//! variable renewable energy.
//!
//! A [`netmodel::PlanningCase`] describes buses, gas junctions, electrolyser sites and
//! candidate corridors. [`assembler::assemble`] turns it into a mixed-integer conic
//! program (second-order-cone relaxation of the nonconvex physics), [`bnb::solve`]
//! runs branch-and-bound over the investment binaries, and [`assembler::decode`] maps
//! the result back to a [`assembler::PlanSolution`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembler;
pub mod bnb;
pub mod electrolyser;
pub mod error;
pub mod gaspipe;
pub mod hvac;
pub mod hvdc;
pub mod io;
pub mod netmodel;
pub mod plan;

pub use error::{Error, Result};

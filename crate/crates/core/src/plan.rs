//! One-call planning: assemble, branch-and-bound, decode.

use std::io::Write;

use serde::Serialize;

use crate::assembler::{assemble, decode, AssembleOptions, PlanSolution, ProgramStats, Registry};
use crate::bnb::{solve_with_log, ConicBackend, SolveOptions, SolveOutcome, SolveStatus};
use crate::error::Result;
use crate::netmodel::PlanningCase;

#[derive(Debug, Clone)]
pub struct PlanRun {
    pub program: ProgramStats,
    pub registry: Registry,
    pub outcome: SolveOutcome,
    /// Decoded incumbent, when one was found.
    pub solution: Option<PlanSolution>,
    pub assemble: AssembleOptions,
}

impl PlanRun {
    pub fn x(&self) -> Option<&[f64]> {
        self.outcome.incumbent.as_ref().map(|i| i.x.as_slice())
    }

    pub fn status(&self) -> SolveStatus {
        self.outcome.stats.status
    }
}

/// Solver summary suitable for JSON export.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary<'a> {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub best_bound: f64,
    pub gap: Option<f64>,
    pub nodes: usize,
    pub seconds: f64,
    pub program: &'a ProgramStats,
}

impl PlanRun {
    pub fn summary(&self) -> RunSummary<'_> {
        let s = &self.outcome.stats;
        RunSummary {
            status: s.status,
            objective: s.incumbent,
            best_bound: s.best_bound,
            gap: s.gap,
            nodes: s.nodes,
            seconds: s.seconds,
            program: &self.program,
        }
    }
}

pub fn solve_case<B: ConicBackend + ?Sized>(
    case: &PlanningCase,
    assemble_options: &AssembleOptions,
    solve_options: &SolveOptions,
    backend: &B,
    log: Option<&mut (dyn Write + Send)>,
) -> Result<PlanRun> {
    let (program, registry) = assemble(case, assemble_options)?;
    let outcome = solve_with_log(&program, solve_options, backend, log)?;
    let solution = match &outcome.incumbent {
        Some(inc) => Some(decode(&inc.x, &registry, case)?),
        None => None,
    };
    Ok(PlanRun {
        program: program.stats(),
        registry,
        outcome,
        solution,
        assemble: *assemble_options,
    })
}

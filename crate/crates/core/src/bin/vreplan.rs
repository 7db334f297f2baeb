use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vreplan::assembler::{assemble, AssembleOptions};
use vreplan::bnb::{enumerate_oracle, BackendSettings, ClarabelBackend, SolveOptions, SolveStatus};
use vreplan::io::export::summary_text;
use vreplan::io::{
    export_solution, load_case, residuals_from_file, run_sweep, sweep_csv, SolutionFile, SweepSpec,
};
use vreplan::plan::solve_case;
use vreplan::Error;

/// Co-planning of transmission lines and hydrogen pipelines.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a case file.
    Validate { case: PathBuf },
    /// Solve a case with branch-and-bound.
    Solve {
        case: PathBuf,
        /// Relative optimality gap.
        #[arg(long, default_value_t = 0.005)]
        gap: f64,
        /// Wall-clock limit in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 5)]
        envelope_cuts: usize,
        #[arg(long)]
        cones_all_circuits: bool,
        #[arg(long)]
        node_limit: Option<usize>,
        /// Directory for the exported plan.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write JSON-lines progress records here.
        #[arg(long)]
        progress: Option<PathBuf>,
    },
    /// Run a distance × capacity sweep.
    Sweep {
        spec: PathBuf,
        /// Directory for the decision map and per-cell exports.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve every prefix-consistent binary assignment (small cases only).
    Oracle {
        case: PathBuf,
        #[arg(long, default_value_t = 5)]
        envelope_cuts: usize,
    },
    /// Residual report of a stored solution.
    Residuals { case: PathBuf, solution: PathBuf },
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

const OK: u8 = 0;
const INFEASIBLE: u8 = 1;
const INPUT: u8 = 2;
const LIMIT: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::RootFailure { .. } => INFEASIBLE,
                _ => INPUT,
            })
        }
    }
}

fn run(command: Command) -> vreplan::Result<u8> {
    match command {
        Command::Validate { case } => {
            let c = load_case(&case)?;
            let (program, _) = assemble(&c, &AssembleOptions::default())?;
            let s = program.stats();
            emit(&format!(
                "{}: {} buses, {} junctions, {} sites, {} corridors, {} steps\n",
                c.name,
                c.buses.len(),
                c.junctions.len(),
                c.sites.len(),
                c.corridors.len(),
                c.time.steps
            ));
            emit(&format!(
                "program: {} continuous, {} binaries, {} rows, {} cones\n",
                s.continuous, s.binaries, s.rows, s.cones
            ));
            Ok(OK)
        }
        Command::Solve {
            case,
            gap,
            time_limit,
            workers,
            envelope_cuts,
            cones_all_circuits,
            node_limit,
            out,
            progress,
        } => {
            let c = load_case(&case)?;
            let assemble_options = AssembleOptions {
                envelope_cuts,
                cones_all_circuits,
            };
            let mut options = SolveOptions {
                rel_gap: gap,
                workers,
                ..SolveOptions::default()
            };
            if let Some(t) = time_limit {
                options.time_limit = t;
            }
            if let Some(n) = node_limit {
                options.node_limit = n;
            }
            let mut log_file = match &progress {
                Some(p) => Some(std::fs::File::create(p).map_err(|e| Error::Io {
                    path: p.clone(),
                    source: e,
                })?),
                None => None,
            };
            let log = log_file
                .as_mut()
                .map(|f| f as &mut (dyn std::io::Write + Send));
            let run = solve_case(&c, &assemble_options, &options, &ClarabelBackend, log)?;
            let summary = serde_json::to_string_pretty(&run.summary()).unwrap_or_default();
            emit(&(summary + "\n"));
            if let (Some(plan), Some(inc)) = (&run.solution, &run.outcome.incumbent) {
                emit(&summary_text(plan));
                if let Some(dir) = &out {
                    export_solution(plan, &c, dir)?;
                    SolutionFile::new(&c.name, run.assemble, inc.objective, inc.x.clone())
                        .write(&dir.join("solution.json"))?;
                }
            }
            Ok(match (run.status(), run.outcome.incumbent.is_some()) {
                (SolveStatus::Optimal, true) => OK,
                (SolveStatus::NodeLimit | SolveStatus::TimeLimit, true) => LIMIT,
                _ => INFEASIBLE,
            })
        }
        Command::Sweep { spec, out } => {
            let (s, base) = SweepSpec::read(&spec)?;
            let results = run_sweep(&s, &base, out.as_deref())?;
            let csv = sweep_csv(&results);
            match &out {
                Some(dir) => {
                    let path = dir.join("decision_map.csv");
                    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
                        path: dir.clone(),
                        source: e,
                    })?;
                    std::fs::write(&path, csv).map_err(|e| Error::Io { path, source: e })?;
                }
                None => emit(&csv),
            }
            Ok(OK)
        }
        Command::Oracle {
            case,
            envelope_cuts,
        } => {
            let c = load_case(&case)?;
            let (program, _) = assemble(
                &c,
                &AssembleOptions {
                    envelope_cuts,
                    ..AssembleOptions::default()
                },
            )?;
            let result = enumerate_oracle(&program, &ClarabelBackend, &BackendSettings::default())?;
            emit(&format!(
                "{} assignments evaluated\n",
                result.evaluated.len()
            ));
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            match result.best {
                Some(best) => {
                    let names: Vec<String> = program
                        .binaries()
                        .iter()
                        .zip(&best.assignment)
                        .filter(|(_, on)| **on)
                        .map(|(v, _)| program.var_label(*v))
                        .collect();
                    emit(&format!("best objective {:.6}\n", best.objective));
                    emit(&format!(
                        "installed: {}\n",
                        if names.is_empty() {
                            "none".into()
                        } else {
                            names.join(", ")
                        }
                    ));
                    Ok(OK)
                }
                None => {
                    emit("no feasible assignment\n");
                    Ok(INFEASIBLE)
                }
            }
        }
        Command::Residuals { case, solution } => {
            let c = load_case(&case)?;
            let file = SolutionFile::read(&solution)?;
            let report = residuals_from_file(&c, &file)?;
            emit(&(report.to_json()? + "\n"));
            Ok(OK)
        }
    }
}

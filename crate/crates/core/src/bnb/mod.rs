//! Branch-and-bound over investment binaries with conic node relaxations, plus an
//! exhaustive enumeration oracle for small programs.

pub mod backend;

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Condvar, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembler::program::{ConicProgram, VarId};
use crate::error::{Error, Result};

pub use backend::{BackendSettings, BackendSolution, BackendStatus, ClarabelBackend, ConicBackend};

/// State of one binary inside a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fix {
    Free,
    Zero,
    One,
}

impl Fix {
    fn value(self) -> Option<f64> {
        match self {
            Fix::Free => None,
            Fix::Zero => Some(0.0),
            Fix::One => Some(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeStatus {
    Pending,
    Solved,
    Pruned,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRelaxation {
    pub id: usize,
    /// Indexed like [`BinaryLayout::vars`].
    pub fixings: Vec<Fix>,
    pub parent_bound: f64,
    pub depth: usize,
    pub status: NodeStatus,
}

/// Binaries of a program in id order, with prefix groups as positions.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryLayout {
    pub vars: Vec<VarId>,
    pub groups: Vec<Vec<usize>>,
}

impl BinaryLayout {
    pub fn of(program: &ConicProgram) -> Self {
        let vars = program.binaries();
        let pos: HashMap<VarId, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let groups = program
            .groups()
            .iter()
            .map(|g| g.iter().map(|v| pos[v]).collect())
            .collect();
        Self { vars, groups }
    }

    /// Closes `fixings` under the prefix rule (one fixes every earlier member to one,
    /// zero fixes every later member to zero). `None` on conflict.
    pub fn propagate(&self, mut fixings: Vec<Fix>) -> Option<Vec<Fix>> {
        for g in &self.groups {
            if let Some(last_one) = g.iter().rposition(|&i| fixings[i] == Fix::One) {
                for &i in &g[..last_one] {
                    match fixings[i] {
                        Fix::Zero => return None,
                        _ => fixings[i] = Fix::One,
                    }
                }
            }
            if let Some(first_zero) = g.iter().position(|&i| fixings[i] == Fix::Zero) {
                for &i in &g[first_zero + 1..] {
                    match fixings[i] {
                        Fix::One => return None,
                        _ => fixings[i] = Fix::Zero,
                    }
                }
            }
        }
        Some(fixings)
    }

    pub fn fixed_pairs(&self, fixings: &[Fix]) -> Vec<(VarId, f64)> {
        self.vars
            .iter()
            .zip(fixings)
            .filter_map(|(v, f)| f.value().map(|x| (*v, x)))
            .collect()
    }

    /// Every 0/1 assignment consistent with the prefix rule.
    pub fn assignments(&self) -> Vec<Vec<bool>> {
        let n = self.vars.len();
        let mut in_group = vec![false; n];
        // Each factor lists alternative (position, value) settings.
        let mut factors: Vec<Vec<Vec<(usize, bool)>>> = Vec::new();
        for g in &self.groups {
            for &i in g {
                in_group[i] = true;
            }
            factors.push(
                (0..=g.len())
                    .map(|k| g.iter().enumerate().map(|(r, &i)| (i, r < k)).collect())
                    .collect(),
            );
        }
        for i in (0..n).filter(|&i| !in_group[i]) {
            factors.push(vec![vec![(i, false)], vec![(i, true)]]);
        }
        let mut out = vec![vec![false; n]];
        for f in &factors {
            let mut next = Vec::with_capacity(out.len() * f.len());
            for base in &out {
                for alt in f {
                    let mut a = base.clone();
                    for &(i, v) in alt {
                        a[i] = v;
                    }
                    next.push(a);
                }
            }
            out = next;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchRule {
    MostFractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeSelection {
    BestBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub rel_gap: f64,
    pub abs_gap: f64,
    pub node_limit: usize,
    /// Wall-clock seconds.
    pub time_limit: f64,
    pub branching: BranchRule,
    pub node_selection: NodeSelection,
    pub workers: usize,
    /// Distance from 0/1 below which a relaxed binary counts as integral.
    pub integrality_tol: f64,
    /// Keep the fixings of every pruned node in the stats.
    pub record_pruned: bool,
    /// Keep a per-node trace in the stats.
    pub record_trace: bool,
    pub backend: BackendSettings,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rel_gap: 1e-3,
            abs_gap: 1e-6,
            node_limit: 100_000,
            time_limit: f64::INFINITY,
            branching: BranchRule::MostFractional,
            node_selection: NodeSelection::BestBound,
            workers: 1,
            integrality_tol: 1e-6,
            record_pruned: false,
            record_trace: false,
            backend: BackendSettings::default(),
        }
    }
}

impl SolveOptions {
    pub fn check(&self) -> Result<()> {
        if !(self.rel_gap >= 0.0 && self.abs_gap >= 0.0) {
            return Err(Error::InvalidInput("gaps must be nonnegative".into()));
        }
        if self.node_limit < 1 || self.workers < 1 || !(self.time_limit > 0.0) {
            return Err(Error::InvalidInput(
                "node limit, worker count and time limit must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn tolerance(&self, incumbent: f64) -> f64 {
        self.abs_gap.max(self.rel_gap * incumbent.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub assignment: Vec<bool>,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Largest bound, row or cone violation at `x` (the feasibility certificate).
    pub max_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NodeLimit,
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PruneReason {
    Bound,
    Infeasible,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedNode {
    pub id: usize,
    pub fixings: Vec<Fix>,
    pub bound: f64,
    pub reason: PruneReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTrace {
    pub id: usize,
    pub depth: usize,
    pub parent_bound: f64,
    /// Raw relaxation objective (NaN when the node was not solved).
    pub relaxation: f64,
    pub status: NodeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub status: SolveStatus,
    pub nodes: usize,
    pub pruned_by_bound: usize,
    pub infeasible: usize,
    pub numerical: usize,
    pub backend_calls: usize,
    pub max_depth: usize,
    pub seconds: f64,
    pub best_bound: f64,
    pub incumbent: Option<f64>,
    /// `(incumbent − bound)/|incumbent|`, or absolute when the incumbent is zero.
    pub gap: Option<f64>,
    pub warnings: Vec<String>,
    pub pruned: Vec<PrunedNode>,
    pub trace: Vec<NodeTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub incumbent: Option<Incumbent>,
    pub best_bound: f64,
    pub stats: SolveStats,
}

/// Line-delimited progress record.
#[derive(Debug, Clone, Serialize)]
struct Progress {
    node: usize,
    nodes: usize,
    open: usize,
    bound: f64,
    incumbent: Option<f64>,
    gap: Option<f64>,
    seconds: f64,
}

/// Lowest parent bound; ties go to the deeper node, then to the older one.
pub fn select_node(open: &[NodeRelaxation]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, n) in open.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let m = &open[b];
                let better = n.parent_bound < m.parent_bound
                    || (n.parent_bound == m.parent_bound
                        && (n.depth > m.depth || (n.depth == m.depth && n.id < m.id)));
                Some(if better { i } else { b })
            }
        };
    }
    best
}

/// Splits on the most fractional free binary (lowest position on ties) and applies the
/// prefix rule to both children. Children get id 0 and the node's bound as parent bound.
pub fn branch(
    node: &NodeRelaxation,
    x: &[f64],
    layout: &BinaryLayout,
    integrality_tol: f64,
) -> Result<(NodeRelaxation, NodeRelaxation)> {
    let pick = most_fractional(node, x, layout, integrality_tol)
        .ok_or_else(|| Error::InvalidInput(format!("node {} has no fractional binary", node.id)))?;
    let child = |fix: Fix| {
        let mut f = node.fixings.clone();
        f[pick] = fix;
        NodeRelaxation {
            id: 0,
            fixings: layout.propagate(f).unwrap_or_default(),
            parent_bound: node.parent_bound,
            depth: node.depth + 1,
            status: NodeStatus::Pending,
        }
    };
    Ok((child(Fix::Zero), child(Fix::One)))
}

fn most_fractional(
    node: &NodeRelaxation,
    x: &[f64],
    layout: &BinaryLayout,
    tol: f64,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in layout.vars.iter().enumerate() {
        if node.fixings[i] != Fix::Free {
            continue;
        }
        let frac = x[v.0] - x[v.0].floor();
        let dist = frac.min(1.0 - frac);
        if dist <= tol {
            continue;
        }
        let score = (x[v.0] - 0.5).abs();
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((i, score));
        }
    }
    best.map(|b| b.0)
}

fn solve_node<B: ConicBackend + ?Sized>(
    program: &ConicProgram,
    fixed: &[(VarId, f64)],
    backend: &B,
    settings: &BackendSettings,
    calls: &mut usize,
) -> BackendSolution {
    *calls += 1;
    let first = backend.solve(program, fixed, settings);
    if !matches!(
        first.status,
        BackendStatus::NumericalTrouble | BackendStatus::Unbounded
    ) {
        return first;
    }
    *calls += 1;
    backend.solve(program, fixed, &settings.tightened())
}

struct Shared<'w> {
    open: Vec<NodeRelaxation>,
    incumbent: Option<Incumbent>,
    active: usize,
    next_id: usize,
    stop: Option<SolveStatus>,
    /// Lowest bound among nodes closed without proof (gap pruning, numerical pruning).
    closed_bound: f64,
    /// Bounds of nodes currently being solved.
    active_bounds: Vec<(usize, f64)>,
    stats: SolveStats,
    root_error: Option<Error>,
    log: Option<&'w mut (dyn Write + Send)>,
}

impl Shared<'_> {
    fn record_pruned(
        &mut self,
        opts: &SolveOptions,
        node: &NodeRelaxation,
        bound: f64,
        reason: PruneReason,
    ) {
        if opts.record_pruned {
            self.stats.pruned.push(PrunedNode {
                id: node.id,
                fixings: node.fixings.clone(),
                bound,
                reason,
            });
        }
    }

    fn trace(
        &mut self,
        opts: &SolveOptions,
        node: &NodeRelaxation,
        relaxation: f64,
        status: NodeStatus,
    ) {
        if opts.record_trace {
            self.stats.trace.push(NodeTrace {
                id: node.id,
                depth: node.depth,
                parent_bound: node.parent_bound,
                relaxation,
                status,
            });
        }
    }

    fn global_bound(&self) -> f64 {
        let open = self.open.iter().map(|n| n.parent_bound);
        let active = self.active_bounds.iter().map(|b| b.1);
        let inc = self.incumbent.as_ref().map(|i| i.objective);
        open.chain(active)
            .chain(inc)
            .fold(self.closed_bound, f64::min)
    }

    fn log_progress(&mut self, node: usize, start: &Instant) {
        let bound = self.global_bound();
        let incumbent = self.incumbent.as_ref().map(|i| i.objective);
        let record = Progress {
            node,
            nodes: self.stats.nodes,
            open: self.open.len(),
            bound,
            incumbent,
            gap: incumbent.map(|i| gap(i, bound)),
            seconds: start.elapsed().as_secs_f64(),
        };
        if let Some(w) = self.log.as_mut() {
            if let Ok(line) = serde_json::to_string(&record) {
                let _ = writeln!(w, "{line}");
            }
        }
    }
}

fn gap(incumbent: f64, bound: f64) -> f64 {
    let diff = (incumbent - bound).max(0.0);
    if incumbent.abs() > 1e-12 {
        diff / incumbent.abs()
    } else {
        diff
    }
}

/// Runs branch-and-bound on `program`.
pub fn solve<B: ConicBackend + ?Sized>(
    program: &ConicProgram,
    options: &SolveOptions,
    backend: &B,
) -> Result<SolveOutcome> {
    solve_with_log(program, options, backend, None)
}

/// [`solve`] writing one JSON progress record per processed node to `log`.
pub fn solve_with_log<B: ConicBackend + ?Sized>(
    program: &ConicProgram,
    options: &SolveOptions,
    backend: &B,
    log: Option<&mut (dyn Write + Send)>,
) -> Result<SolveOutcome> {
    options.check()?;
    program.check()?;
    let start = Instant::now();
    let layout = BinaryLayout::of(program);
    let root = NodeRelaxation {
        id: 0,
        fixings: vec![Fix::Free; layout.vars.len()],
        parent_bound: f64::NEG_INFINITY,
        depth: 0,
        status: NodeStatus::Pending,
    };
    let shared = Mutex::new(Shared {
        open: vec![root],
        incumbent: None,
        active: 0,
        next_id: 1,
        stop: None,
        closed_bound: f64::INFINITY,
        active_bounds: Vec::new(),
        stats: SolveStats {
            status: SolveStatus::Optimal,
            nodes: 0,
            pruned_by_bound: 0,
            infeasible: 0,
            numerical: 0,
            backend_calls: 0,
            max_depth: 0,
            seconds: 0.0,
            best_bound: f64::NEG_INFINITY,
            incumbent: None,
            gap: None,
            warnings: Vec::new(),
            pruned: Vec::new(),
            trace: Vec::new(),
        },
        root_error: None,
        log,
    });
    let wake = Condvar::new();

    if options.workers == 1 {
        worker(program, options, backend, &layout, &shared, &wake, &start);
    } else {
        std::thread::scope(|s| {
            for _ in 0..options.workers {
                s.spawn(|| worker(program, options, backend, &layout, &shared, &wake, &start));
            }
        });
    }

    let mut st = shared.into_inner().unwrap_or_else(|e| e.into_inner());
    if let Some(e) = st.root_error.take() {
        return Err(e);
    }
    let best_bound = st.global_bound();
    let mut stats = st.stats;
    stats.seconds = start.elapsed().as_secs_f64();
    stats.best_bound = best_bound;
    stats.incumbent = st.incumbent.as_ref().map(|i| i.objective);
    stats.gap = stats.incumbent.map(|i| gap(i, best_bound));
    stats.status = match st.stop {
        Some(s) => s,
        None if st.incumbent.is_none() && best_bound == f64::INFINITY => SolveStatus::Infeasible,
        None => SolveStatus::Optimal,
    };
    Ok(SolveOutcome {
        incumbent: st.incumbent,
        best_bound,
        stats,
    })
}

fn worker<B: ConicBackend + ?Sized>(
    program: &ConicProgram,
    opts: &SolveOptions,
    backend: &B,
    layout: &BinaryLayout,
    shared: &Mutex<Shared<'_>>,
    wake: &Condvar,
    start: &Instant,
) {
    let lock = || shared.lock().unwrap_or_else(|e| e.into_inner());
    loop {
        let mut node = {
            let mut st = lock();
            loop {
                if st.stop.is_some() || st.root_error.is_some() {
                    return;
                }
                if let Some(i) = select_node(&st.open) {
                    let node = st.open.remove(i);
                    if let Some(inc) = st.incumbent.as_ref().map(|i| i.objective) {
                        if node.parent_bound >= inc - opts.tolerance(inc) {
                            st.stats.pruned_by_bound += 1;
                            st.closed_bound = st.closed_bound.min(node.parent_bound);
                            st.record_pruned(opts, &node, node.parent_bound, PruneReason::Bound);
                            st.trace(opts, &node, f64::NAN, NodeStatus::Pruned);
                            continue;
                        }
                    }
                    let elapsed = start.elapsed().as_secs_f64();
                    if st.stats.nodes >= opts.node_limit || elapsed >= opts.time_limit {
                        st.stop = Some(if st.stats.nodes >= opts.node_limit {
                            SolveStatus::NodeLimit
                        } else {
                            SolveStatus::TimeLimit
                        });
                        st.open.push(node);
                        wake.notify_all();
                        return;
                    }
                    st.stats.nodes += 1;
                    st.active += 1;
                    st.active_bounds.push((node.id, node.parent_bound));
                    break node;
                }
                if st.active == 0 {
                    wake.notify_all();
                    return;
                }
                st = wake.wait(st).unwrap_or_else(|e| e.into_inner());
            }
        };

        let mut settings = opts.backend;
        let remaining = opts.time_limit - start.elapsed().as_secs_f64();
        settings.time_limit = settings.time_limit.min(remaining.max(1e-3));
        let fixed = layout.fixed_pairs(&node.fixings);
        let mut calls = 0;
        let sol = solve_node(program, &fixed, backend, &settings, &mut calls);

        // Integral relaxation with free binaries: re-solve with them rounded so the
        // incumbent carries exact 0/1 values.
        let mut leaf = None;
        if sol.status == BackendStatus::Optimal
            && most_fractional(&node, &sol.x, layout, opts.integrality_tol).is_none()
            && node.fixings.contains(&Fix::Free)
        {
            let rounded: Vec<Fix> = layout
                .vars
                .iter()
                .zip(&node.fixings)
                .map(|(v, f)| match f {
                    Fix::Free if sol.x[v.0] > 0.5 => Fix::One,
                    Fix::Free => Fix::Zero,
                    other => *other,
                })
                .collect();
            let fixed = layout.fixed_pairs(&rounded);
            leaf = Some((
                rounded,
                solve_node(program, &fixed, backend, &settings, &mut calls),
            ));
        }

        let mut st = lock();
        st.stats.backend_calls += calls;
        st.stats.max_depth = st.stats.max_depth.max(node.depth);
        st.active -= 1;
        if let Some(pos) = st.active_bounds.iter().position(|b| b.0 == node.id) {
            st.active_bounds.swap_remove(pos);
        }
        match sol.status {
            BackendStatus::Infeasible => {
                st.stats.infeasible += 1;
                node.status = NodeStatus::Infeasible;
                st.record_pruned(opts, &node, f64::INFINITY, PruneReason::Infeasible);
                st.trace(opts, &node, f64::INFINITY, NodeStatus::Infeasible);
            }
            BackendStatus::NumericalTrouble | BackendStatus::Unbounded => {
                if node.id == 0 {
                    let dump = std::env::temp_dir()
                        .join(format!("vreplan-root-{}.txt", std::process::id()));
                    let dump = program.write_text(&dump).ok().map(|_| dump);
                    st.root_error = Some(Error::RootFailure {
                        status: format!("{:?}", sol.status),
                        dump,
                    });
                    wake.notify_all();
                    return;
                }
                st.stats.numerical += 1;
                st.stats.warnings.push(format!(
                    "node {} pruned after {:?} persisted with tightened tolerances",
                    node.id, sol.status
                ));
                st.closed_bound = st.closed_bound.min(node.parent_bound);
                node.status = NodeStatus::Pruned;
                st.record_pruned(opts, &node, node.parent_bound, PruneReason::Numerical);
                st.trace(opts, &node, f64::NAN, NodeStatus::Pruned);
            }
            BackendStatus::Optimal => {
                let bound = sol.objective.max(node.parent_bound);
                node.status = NodeStatus::Solved;
                st.trace(opts, &node, sol.objective, NodeStatus::Solved);
                let incumbent = st.incumbent.as_ref().map(|i| i.objective);
                let dominated = incumbent.is_some_and(|inc| bound >= inc - opts.tolerance(inc));
                if let Some((rounded, leaf_sol)) = leaf {
                    match leaf_sol.status {
                        BackendStatus::Optimal => {
                            offer(&mut st, program, layout, &rounded, leaf_sol)
                        }
                        status => {
                            st.stats.warnings.push(format!(
                                "node {}: integral relaxation but the rounded re-solve returned {status:?}",
                                node.id
                            ));
                            st.closed_bound = st.closed_bound.min(bound);
                        }
                    }
                } else if !node.fixings.contains(&Fix::Free) {
                    let fixings = node.fixings.clone();
                    offer(&mut st, program, layout, &fixings, sol);
                } else if dominated {
                    st.stats.pruned_by_bound += 1;
                    st.closed_bound = st.closed_bound.min(bound);
                    st.record_pruned(opts, &node, bound, PruneReason::Bound);
                } else {
                    node.parent_bound = bound;
                    let (mut zero, mut one) = branch(&node, &sol.x, layout, opts.integrality_tol)
                        .expect("fractional binary exists");
                    for child in [&mut zero, &mut one] {
                        child.id = st.next_id;
                        st.next_id += 1;
                    }
                    for child in [zero, one] {
                        if child.fixings.is_empty() && !layout.vars.is_empty() {
                            // Prefix conflict: the branch is empty.
                            continue;
                        }
                        st.open.push(child);
                    }
                }
            }
        }
        st.log_progress(node.id, start);
        wake.notify_all();
    }
}

fn offer(
    st: &mut Shared<'_>,
    program: &ConicProgram,
    layout: &BinaryLayout,
    fixings: &[Fix],
    sol: BackendSolution,
) {
    if st
        .incumbent
        .as_ref()
        .is_some_and(|i| i.objective <= sol.objective)
    {
        return;
    }
    let assignment = layout.vars.iter().map(|v| sol.x[v.0] > 0.5).collect();
    debug_assert!(!fixings.contains(&Fix::Free));
    st.incumbent = Some(Incumbent {
        assignment,
        max_violation: program.max_violation(&sol.x),
        objective: sol.objective,
        x: sol.x,
    });
}

/// Result of exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best: Option<Incumbent>,
    /// Every assignment tried with its objective (`None` when infeasible or unsolved).
    pub evaluated: Vec<(Vec<bool>, Option<f64>)>,
    pub warnings: Vec<String>,
}

impl OracleResult {
    /// Best objective among evaluated assignments consistent with `fixings`.
    pub fn best_within(&self, fixings: &[Fix]) -> Option<f64> {
        self.evaluated
            .iter()
            .filter(|(a, _)| {
                a.iter().zip(fixings).all(|(&v, f)| match f {
                    Fix::Free => true,
                    Fix::Zero => !v,
                    Fix::One => v,
                })
            })
            .filter_map(|(_, o)| *o)
            .reduce(f64::min)
    }
}

pub const ORACLE_LIMIT: usize = 20;

/// Solves the continuous program for every prefix-consistent 0/1 assignment.
pub fn enumerate_oracle<B: ConicBackend + ?Sized>(
    program: &ConicProgram,
    backend: &B,
    settings: &BackendSettings,
) -> Result<OracleResult> {
    program.check()?;
    let layout = BinaryLayout::of(program);
    if layout.vars.len() > ORACLE_LIMIT {
        return Err(Error::TooManyBinaries {
            what: "enumeration oracle",
            count: layout.vars.len(),
            limit: ORACLE_LIMIT,
        });
    }
    let mut out = OracleResult {
        best: None,
        evaluated: Vec::new(),
        warnings: Vec::new(),
    };
    for a in layout.assignments() {
        let fixed: Vec<(VarId, f64)> = layout
            .vars
            .iter()
            .zip(&a)
            .map(|(v, &on)| (*v, if on { 1.0 } else { 0.0 }))
            .collect();
        let mut calls = 0;
        let sol = solve_node(program, &fixed, backend, settings, &mut calls);
        match sol.status {
            BackendStatus::Optimal => {
                out.evaluated.push((a.clone(), Some(sol.objective)));
                if out
                    .best
                    .as_ref()
                    .is_none_or(|b| sol.objective < b.objective)
                {
                    out.best = Some(Incumbent {
                        assignment: a,
                        max_violation: program.max_violation(&sol.x),
                        objective: sol.objective,
                        x: sol.x,
                    });
                }
            }
            BackendStatus::Infeasible => out.evaluated.push((a, None)),
            status => {
                out.warnings.push(format!("assignment {a:?}: {status:?}"));
                out.evaluated.push((a, None));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembler::program::{LinExpr, Sense};

    fn node(id: usize, bound: f64, depth: usize) -> NodeRelaxation {
        NodeRelaxation {
            id,
            fixings: Vec::new(),
            parent_bound: bound,
            depth,
            status: NodeStatus::Pending,
        }
    }

    #[test]
    fn best_bound_selection() {
        let open = vec![node(0, 5.0, 1), node(1, 3.0, 1), node(2, 7.0, 1)];
        assert_eq!(select_node(&open), Some(1));
        let open = vec![node(0, 3.0, 1), node(1, 3.0, 2), node(2, 3.0, 2)];
        assert_eq!(select_node(&open), Some(1));
        assert_eq!(select_node(&[]), None);
    }

    /// Two groups: a three-circuit prefix group and a singleton.
    fn toy() -> (ConicProgram, Vec<VarId>) {
        let mut p = ConicProgram::new();
        let zs: Vec<VarId> = (0..3).map(|c| p.binary("z", &format!("c{c}"))).collect();
        let y = p.binary("y", "pipe");
        p.add_group(zs.clone());
        p.add_group(vec![y]);
        // Need 2.5 units of capacity: circuits give 1 each, the pipe 2.
        let mut need = LinExpr::constant(-2.5);
        for &z in &zs {
            need.push(z, 1.0);
        }
        need.push(y, 2.0);
        p.add_row("need", need, Sense::Ge);
        for w in zs.windows(2) {
            p.add_row("seq", LinExpr::var(w[1]).with(w[0], -1.0), Sense::Le);
        }
        let mut obj = LinExpr::new();
        for &z in &zs {
            obj.push(z, 3.0);
        }
        obj.push(y, 5.0);
        p.set_objective(obj);
        (p, zs)
    }

    #[test]
    fn prefix_propagation() {
        let (p, _) = toy();
        let layout = BinaryLayout::of(&p);
        let mut f = vec![Fix::Free; 4];
        f[1] = Fix::One;
        let f = layout.propagate(f).unwrap();
        assert_eq!(f[0], Fix::One);
        assert_eq!(f[2], Fix::Free);
        let mut g = vec![Fix::Free; 4];
        g[0] = Fix::Zero;
        let g = layout.propagate(g).unwrap();
        assert_eq!(&g[..3], &[Fix::Zero; 3]);
        let mut bad = vec![Fix::Free; 4];
        bad[0] = Fix::Zero;
        bad[2] = Fix::One;
        assert!(layout.propagate(bad).is_none());
    }

    #[test]
    fn prefix_assignment_count() {
        let (p, _) = toy();
        let layout = BinaryLayout::of(&p);
        assert_eq!(layout.assignments().len(), 4 * 2);
    }

    #[test]
    fn branch_on_lowest_of_ties() {
        let (p, zs) = toy();
        let layout = BinaryLayout::of(&p);
        let root = NodeRelaxation {
            id: 0,
            fixings: vec![Fix::Free; 4],
            parent_bound: 1.0,
            depth: 0,
            status: NodeStatus::Solved,
        };
        let mut x = vec![0.0; p.num_vars()];
        x[zs[0].0] = 0.5;
        x[zs[1].0] = 0.5;
        let (zero, one) = branch(&root, &x, &layout, 1e-6).unwrap();
        assert_eq!(zero.fixings[0], Fix::Zero);
        assert_eq!(zero.fixings[1], Fix::Zero);
        assert_eq!(one.fixings[0], Fix::One);
        assert_eq!(one.depth, 1);
        x[zs[0].0] = 1.0;
        x[zs[1].0] = 0.0;
        assert!(branch(&root, &x, &layout, 1e-6).is_err());
    }

    #[test]
    fn matches_enumeration() {
        let (p, _) = toy();
        let oracle = enumerate_oracle(&p, &ClarabelBackend, &BackendSettings::default()).unwrap();
        let best = oracle.best.unwrap();
        // Cheapest: three circuits (9) vs pipe + one circuit (8).
        assert!((best.objective - 8.0).abs() < 1e-6);
        let opts = SolveOptions {
            rel_gap: 0.0,
            record_pruned: true,
            ..SolveOptions::default()
        };
        let out = solve(&p, &opts, &ClarabelBackend).unwrap();
        let inc = out.incumbent.unwrap();
        assert!((inc.objective - best.objective).abs() < 1e-6);
        assert_eq!(out.stats.status, SolveStatus::Optimal);
    }

    #[test]
    fn no_binaries_single_call() {
        let mut p = ConicProgram::new();
        let x = p.continuous("x", "a", None, 1.0, 2.0);
        p.set_objective(LinExpr::var(x));
        let out = solve(&p, &SolveOptions::default(), &ClarabelBackend).unwrap();
        assert_eq!(out.stats.backend_calls, 1);
        assert_eq!(out.stats.gap, Some(0.0));
        assert!((out.best_bound - 1.0).abs() < 1e-7);
    }

    #[test]
    fn oracle_guard() {
        let mut p = ConicProgram::new();
        for i in 0..21 {
            p.binary("z", &format!("{i}"));
        }
        assert!(matches!(
            enumerate_oracle(&p, &ClarabelBackend, &BackendSettings::default()),
            Err(Error::TooManyBinaries { .. })
        ));
    }
}

//! Continuous conic backend contract and the Clarabel implementation.

use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, NonnegativeConeT, SecondOrderConeT, SolverStatus,
    ZeroConeT,
};
use serde::{Deserialize, Serialize};

use crate::assembler::program::{Cone, ConicProgram, LinExpr, Sense, VarId, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalTrouble,
}

/// Per-call accuracy and limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackendSettings {
    /// Feasibility and duality-gap tolerance on the scaled problem.
    pub tolerance: f64,
    pub max_iter: u32,
    /// Seconds; infinite means no limit.
    pub time_limit: f64,
}

impl Default for BackendSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iter: 200,
            time_limit: f64::INFINITY,
        }
    }
}

impl BackendSettings {
    /// Settings for the single retry of a numerically troubled node.
    pub fn tightened(&self) -> Self {
        Self {
            tolerance: self.tolerance * 0.1,
            max_iter: self.max_iter * 2,
            time_limit: self.time_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendSolution {
    pub status: BackendStatus,
    /// Primal point in the original (unscaled) variables; empty unless optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    /// The status is backed by the backend's own optimality or infeasibility certificate
    /// rather than a reduced-accuracy stop or the presolve.
    pub certified: bool,
    pub iterations: u32,
}

impl BackendSolution {
    fn infeasible_by_presolve() -> Self {
        Self {
            status: BackendStatus::Infeasible,
            x: Vec::new(),
            objective: f64::INFINITY,
            certified: false,
            iterations: 0,
        }
    }
}

/// Solves the continuous relaxation of `program` with binaries relaxed to `[0, 1]`
/// and the listed variables fixed. Implementations hold no state shared between
/// calls, so one value can serve several workers.
pub trait ConicBackend: Sync {
    fn solve(
        &self,
        program: &ConicProgram,
        fixed: &[(VarId, f64)],
        settings: &BackendSettings,
    ) -> BackendSolution;
}

/// Clarabel interior-point solver with substitution of fixed variables, bound
/// tightening from singleton rows and variable/row scaling.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClarabelBackend;

impl ConicBackend for ClarabelBackend {
    fn solve(
        &self,
        program: &ConicProgram,
        fixed: &[(VarId, f64)],
        settings: &BackendSettings,
    ) -> BackendSolution {
        let start = Instant::now();
        let Some(reduced) = Reduced::build(program, fixed) else {
            return BackendSolution::infeasible_by_presolve();
        };
        reduced.solve(program, settings, start)
    }
}

const PRESOLVE_TOL: f64 = 1e-9;

fn magnitude(e: &LinExpr, x: &[f64]) -> f64 {
    e.terms.iter().map(|(v, c)| (c * x[v.0]).abs()).sum::<f64>() + e.constant.abs()
}

/// Tightens `[lb, ub]` from rows with a single unfixed variable; returns `false`
/// when some bound pair crosses or a fully fixed row is violated.
fn tighten(program: &ConicProgram, lb: &mut [f64], ub: &mut [f64]) -> bool {
    for _ in 0..8 {
        let mut changed = false;
        for row in program.rows() {
            let mut free = None;
            let mut count = 0;
            let mut constant = row.expr.constant;
            for &(v, c) in &row.expr.terms {
                if lb[v.0] == ub[v.0] {
                    constant += c * lb[v.0];
                } else {
                    count += 1;
                    free = Some((v, c));
                }
            }
            if count == 0 {
                let scale = magnitude(&row.expr, lb).max(1.0);
                let bad = match row.sense {
                    Sense::Le => constant > PRESOLVE_TOL * scale,
                    Sense::Ge => constant < -PRESOLVE_TOL * scale,
                    Sense::Eq => constant.abs() > PRESOLVE_TOL * scale,
                };
                if bad {
                    return false;
                }
                continue;
            }
            if count > 1 {
                continue;
            }
            let (v, c) = free.unwrap();
            let value = -constant / c;
            let i = v.0;
            // c·x + constant (sense) 0
            let (upper, lower) = match (row.sense, c > 0.0) {
                (Sense::Eq, _) => (true, true),
                (Sense::Le, true) | (Sense::Ge, false) => (true, false),
                (Sense::Le, false) | (Sense::Ge, true) => (false, true),
            };
            if upper && value < ub[i] {
                ub[i] = value;
                changed = true;
            }
            if lower && value > lb[i] {
                lb[i] = value;
                changed = true;
            }
            let width = ub[i] - lb[i];
            let scale = PRESOLVE_TOL * lb[i].abs().max(ub[i].abs()).max(1.0);
            if width < -scale {
                return false;
            }
            if width <= scale {
                let mid = 0.5 * (lb[i] + ub[i]);
                lb[i] = mid;
                ub[i] = mid;
            }
        }
        if !changed {
            break;
        }
    }
    true
}

struct Block {
    /// (column, coefficient) per row of the block, in slack form `s = b − A·x̃`.
    rows: Vec<(Vec<(usize, f64)>, f64)>,
}

/// Reduced, scaled problem in Clarabel's `A·x̃ + s = b` form.
struct Reduced {
    lb: Vec<f64>,
    ub: Vec<f64>,
    /// Original index → reduced column.
    column: Vec<Option<usize>>,
    col_scale: Vec<f64>,
    eq: Vec<(Vec<(usize, f64)>, f64)>,
    ineq: Vec<(Vec<(usize, f64)>, f64)>,
    cones: Vec<Block>,
}

impl Reduced {
    fn build(program: &ConicProgram, fixed: &[(VarId, f64)]) -> Option<Self> {
        let n = program.num_vars();
        let mut lb = Vec::with_capacity(n);
        let mut ub = Vec::with_capacity(n);
        for v in program.vars() {
            match v.kind {
                VarKind::Binary => {
                    lb.push(v.lb.max(0.0));
                    ub.push(v.ub.min(1.0));
                }
                VarKind::Continuous => {
                    lb.push(v.lb);
                    ub.push(v.ub);
                }
            }
        }
        for &(v, value) in fixed {
            if value < lb[v.0] - PRESOLVE_TOL || value > ub[v.0] + PRESOLVE_TOL {
                return None;
            }
            lb[v.0] = value;
            ub[v.0] = value;
        }
        if !tighten(program, &mut lb, &mut ub) {
            return None;
        }

        let mut column = vec![None; n];
        let mut col_scale = Vec::new();
        for i in 0..n {
            if lb[i] != ub[i] {
                column[i] = Some(col_scale.len());
                let s = [lb[i], ub[i]]
                    .iter()
                    .filter(|b| b.is_finite())
                    .map(|b| b.abs())
                    .fold(0.0, f64::max);
                col_scale.push(if s > 0.0 { s } else { 1.0 });
            }
        }
        let mut out = Self {
            lb,
            ub,
            column,
            col_scale,
            eq: Vec::new(),
            ineq: Vec::new(),
            cones: Vec::new(),
        };

        for row in program.rows() {
            let (terms, constant) = out.substitute(&row.expr);
            if terms.is_empty() {
                // Already checked by the presolve.
                continue;
            }
            match row.sense {
                // a·x + c ≤ 0  →  a·x + s = −c
                Sense::Le => out.ineq.push(scale_row(terms, -constant)),
                Sense::Ge => out.ineq.push(scale_row(negate(terms), constant)),
                Sense::Eq => out.eq.push(scale_row(terms, -constant)),
            }
        }
        for (j, i) in (0..n).filter_map(|i| out.column[i].map(|j| (j, i))) {
            let d = out.col_scale[j];
            if out.ub[i].is_finite() {
                out.ineq.push((vec![(j, 1.0)], out.ub[i] / d));
            }
            if out.lb[i].is_finite() {
                out.ineq.push((vec![(j, -1.0)], -out.lb[i] / d));
            }
        }
        for c in program.cones() {
            // Components (head, members...) of a standard SOC.
            let comps: Vec<(Vec<(usize, f64)>, f64)> = match &c.cone {
                Cone::Soc { bound, members } => std::iter::once(out.substitute(bound))
                    .chain(members.iter().map(|m| out.substitute(m)))
                    .collect(),
                Cone::Rotated { a, b, members } => {
                    let (a, b) = (out.substitute(a), out.substitute(b));
                    let mut comps = vec![add(&a, &b, 1.0)];
                    comps.extend(members.iter().map(|m| {
                        let (t, k) = out.substitute(m);
                        (t.into_iter().map(|(j, v)| (j, 2.0 * v)).collect(), 2.0 * k)
                    }));
                    comps.push(add(&a, &b, -1.0));
                    comps
                }
            };
            let members_zero = match &c.cone {
                Cone::Soc { .. } => comps[1..].iter().all(|(t, k)| t.is_empty() && *k == 0.0),
                Cone::Rotated { .. } => comps[1..comps.len() - 1]
                    .iter()
                    .all(|(t, k)| t.is_empty() && *k == 0.0),
            };
            if members_zero {
                // Degenerate cone: only the sign conditions of the head terms remain.
                let heads: Vec<(Vec<(usize, f64)>, f64)> = match &c.cone {
                    Cone::Soc { bound, .. } => vec![out.substitute(bound)],
                    Cone::Rotated { a, b, .. } => vec![out.substitute(a), out.substitute(b)],
                };
                for (t, k) in heads {
                    if t.is_empty() {
                        if k < -PRESOLVE_TOL * k.abs().max(1.0) {
                            return None;
                        }
                    } else {
                        // t·x + k ≥ 0  →  −t·x + s = k
                        out.ineq.push(scale_row(negate(t), k));
                    }
                }
                continue;
            }
            if comps.iter().all(|(t, _)| t.is_empty()) {
                let head = comps[0].1;
                let norm = comps[1..].iter().map(|(_, k)| k * k).sum::<f64>().sqrt();
                if norm - head > PRESOLVE_TOL * head.abs().max(1.0) {
                    return None;
                }
                continue;
            }
            // s_k = e_k(x) = t·x + k  →  −t·x + s = k
            let peak = comps
                .iter()
                .flat_map(|(t, _)| t.iter().map(|(_, v)| v.abs()))
                .fold(0.0, f64::max);
            let r = if peak > 0.0 { 1.0 / peak } else { 1.0 };
            out.cones.push(Block {
                rows: comps
                    .into_iter()
                    .map(|(t, k)| (t.into_iter().map(|(j, v)| (j, -v * r)).collect(), k * r))
                    .collect(),
            });
        }
        Some(out)
    }

    /// Replaces fixed variables by their values and scales columns.
    fn substitute(&self, e: &LinExpr) -> (Vec<(usize, f64)>, f64) {
        let mut terms = Vec::with_capacity(e.terms.len());
        let mut constant = e.constant;
        for &(v, c) in &e.terms {
            match self.column[v.0] {
                Some(j) => terms.push((j, c * self.col_scale[j])),
                None => constant += c * self.lb[v.0],
            }
        }
        (terms, constant)
    }

    fn solve(
        &self,
        program: &ConicProgram,
        settings: &BackendSettings,
        start: Instant,
    ) -> BackendSolution {
        let n = self.col_scale.len();
        let full = |xs: &[f64]| -> Vec<f64> {
            (0..program.num_vars())
                .map(|i| match self.column[i] {
                    Some(j) => (xs[j] * self.col_scale[j]).clamp(self.lb[i], self.ub[i]),
                    None => self.lb[i],
                })
                .collect()
        };
        if n == 0 {
            let x = full(&[]);
            return BackendSolution {
                status: BackendStatus::Optimal,
                objective: program.objective_value(&x),
                x,
                certified: true,
                iterations: 0,
            };
        }
        let (q_terms, _) = self.substitute(program.objective());
        let mut q = vec![0.0; n];
        for (j, v) in q_terms {
            q[j] += v;
        }
        let q_peak = q.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if q_peak > 0.0 {
            q.iter_mut().for_each(|v| *v /= q_peak);
        }

        let mut rows_i = Vec::new();
        let mut cols_j = Vec::new();
        let mut vals = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::new();
        let mut push = |terms: &[(usize, f64)], rhs: f64| {
            let r = b.len();
            for &(j, v) in terms {
                rows_i.push(r);
                cols_j.push(j);
                vals.push(v);
            }
            b.push(rhs);
        };
        for (t, k) in &self.eq {
            push(t, *k);
        }
        if !self.eq.is_empty() {
            cones.push(ZeroConeT(self.eq.len()));
        }
        for (t, k) in &self.ineq {
            push(t, *k);
        }
        if !self.ineq.is_empty() {
            cones.push(NonnegativeConeT(self.ineq.len()));
        }
        for block in &self.cones {
            for (t, k) in &block.rows {
                push(t, *k);
            }
            cones.push(SecondOrderConeT(block.rows.len()));
        }
        let m = b.len();
        let a = CscMatrix::new_from_triplets(m, n, rows_i, cols_j, vals);
        let p = CscMatrix::zeros((n, n));
        let remaining = settings.time_limit - start.elapsed().as_secs_f64();
        let cfg = DefaultSettings {
            verbose: false,
            tol_feas: settings.tolerance,
            tol_gap_abs: settings.tolerance,
            tol_gap_rel: settings.tolerance,
            max_iter: settings.max_iter,
            time_limit: if remaining.is_finite() {
                remaining.max(0.0)
            } else {
                f64::INFINITY
            },
            ..DefaultSettings::default()
        };
        let mut solver = match DefaultSolver::new(&p, &q, &a, &b, &cones, cfg) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("backend rejected the problem: {e}");
                return BackendSolution {
                    status: BackendStatus::NumericalTrouble,
                    x: Vec::new(),
                    objective: f64::NAN,
                    certified: false,
                    iterations: 0,
                };
            }
        };
        solver.solve();
        let sol = &solver.solution;
        let (status, certified) = match sol.status {
            SolverStatus::Solved => (BackendStatus::Optimal, true),
            SolverStatus::AlmostSolved => (BackendStatus::Optimal, false),
            SolverStatus::PrimalInfeasible => (BackendStatus::Infeasible, true),
            SolverStatus::AlmostPrimalInfeasible => (BackendStatus::Infeasible, false),
            SolverStatus::DualInfeasible => (BackendStatus::Unbounded, true),
            SolverStatus::AlmostDualInfeasible => (BackendStatus::Unbounded, false),
            _ => (BackendStatus::NumericalTrouble, false),
        };
        if status != BackendStatus::Optimal {
            return BackendSolution {
                status,
                x: Vec::new(),
                objective: if status == BackendStatus::Infeasible {
                    f64::INFINITY
                } else {
                    f64::NAN
                },
                certified,
                iterations: sol.iterations,
            };
        }
        let x = full(&sol.x);
        BackendSolution {
            status,
            objective: program.objective_value(&x),
            x,
            certified,
            iterations: sol.iterations,
        }
    }
}

fn negate(terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    terms.into_iter().map(|(j, v)| (j, -v)).collect()
}

fn add(
    a: &(Vec<(usize, f64)>, f64),
    b: &(Vec<(usize, f64)>, f64),
    sign: f64,
) -> (Vec<(usize, f64)>, f64) {
    let mut terms = a.0.clone();
    terms.extend(b.0.iter().map(|&(j, v)| (j, sign * v)));
    terms.sort_by_key(|t| t.0);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (j, v) in terms {
        match merged.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => merged.push((j, v)),
        }
    }
    merged.retain(|t| t.1 != 0.0);
    (merged, a.1 + sign * b.1)
}

/// Normalises a slack-form row `terms·x̃ + s = rhs` to unit largest coefficient.
fn scale_row(terms: Vec<(usize, f64)>, rhs: f64) -> (Vec<(usize, f64)>, f64) {
    let peak = terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
    if peak == 0.0 {
        return (terms, rhs);
    }
    (
        terms.into_iter().map(|(j, v)| (j, v / peak)).collect(),
        rhs / peak,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(p: &ConicProgram) -> BackendSolution {
        ClarabelBackend.solve(p, &[], &BackendSettings::default())
    }

    #[test]
    fn small_lp() {
        let mut p = ConicProgram::new();
        let x = p.continuous("x", "a", None, 0.0, 10.0);
        let y = p.continuous("y", "a", None, 0.0, 10.0);
        p.add_row("r", LinExpr::var(x).with(y, 1.0).plus(-4.0), Sense::Ge);
        p.set_objective(LinExpr::term(x, 2.0).with(y, 3.0));
        let s = solve(&p);
        assert_eq!(s.status, BackendStatus::Optimal);
        assert!((s.objective - 8.0).abs() < 1e-6);
    }

    #[test]
    fn soc_and_rotated() {
        // min t s.t. ‖(3, 4)‖ ≤ t, and min l s.t. 2² ≤ l·1
        let mut p = ConicProgram::new();
        let t = p.continuous("t", "a", None, 0.0, 100.0);
        let l = p.continuous("l", "a", None, 0.0, 100.0);
        p.add_soc(
            "c",
            LinExpr::var(t),
            vec![LinExpr::constant(3.0), LinExpr::constant(4.0)],
        )
        .unwrap();
        p.add_rotated(
            "r",
            LinExpr::var(l),
            LinExpr::constant(1.0),
            vec![LinExpr::constant(2.0)],
        )
        .unwrap();
        p.set_objective(LinExpr::var(t).with(l, 1.0));
        let s = solve(&p);
        assert_eq!(s.status, BackendStatus::Optimal);
        assert!((s.x[t.0] - 5.0).abs() < 1e-6);
        assert!((s.x[l.0] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_detected() {
        let mut p = ConicProgram::new();
        let x = p.continuous("x", "a", None, 0.0, 1.0);
        let y = p.continuous("y", "a", None, 0.0, 1.0);
        p.add_row("r", LinExpr::var(x).with(y, 1.0).plus(-3.0), Sense::Ge);
        p.set_objective(LinExpr::var(x));
        assert_eq!(solve(&p).status, BackendStatus::Infeasible);
    }

    #[test]
    fn fixing_binary_substitutes_out() {
        let mut p = ConicProgram::new();
        let z = p.binary("z", "a");
        let f = p.continuous("f", "a", None, 0.0, 1e7);
        p.add_row("cap", LinExpr::var(f).with(z, -1e7), Sense::Le);
        p.add_row("need", LinExpr::var(f).plus(-5e6), Sense::Ge);
        p.set_objective(LinExpr::term(z, 10.0));
        let relaxed = solve(&p);
        assert!((relaxed.objective - 5.0).abs() < 1e-5);
        let off = ClarabelBackend.solve(&p, &[(z, 0.0)], &BackendSettings::default());
        assert_eq!(off.status, BackendStatus::Infeasible);
        let on = ClarabelBackend.solve(&p, &[(z, 1.0)], &BackendSettings::default());
        assert!((on.objective - 10.0).abs() < 1e-9);
    }

    #[test]
    fn badly_scaled_rows() {
        // Pa-scale and pu-scale quantities in one problem.
        let mut p = ConicProgram::new();
        let pr = p.continuous("p", "a", None, 3.5e6, 1e7);
        let w = p.continuous("w", "a", None, 0.81, 1.21);
        p.add_row("link", LinExpr::var(pr).with(w, -8e6), Sense::Ge);
        p.set_objective(LinExpr::term(pr, 1e-6).with(w, -1.0));
        let s = solve(&p);
        assert_eq!(s.status, BackendStatus::Optimal);
        assert!((s.x[w.0] - 0.81).abs() < 1e-6);
        assert!((s.x[pr.0] - 6.48e6).abs() < 1.0);
    }
}

//! Solver-agnostic conic program: variables with bounds, one-sided linear rows,
//! second-order and rotated second-order cones, and a linear objective (minimised).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    family: u32,
    entity: u32,
    t: Option<u32>,
}

/// Affine expression `Σ cᵢ·xᵢ + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(v: VarId) -> Self {
        Self::term(v, 1.0)
    }

    pub fn term(v: VarId, c: f64) -> Self {
        Self {
            terms: vec![(v, c)],
            constant: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    /// Adds `c·v`; zero coefficients are dropped.
    pub fn with(mut self, v: VarId, c: f64) -> Self {
        if c != 0.0 {
            self.terms.push((v, c));
        }
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn push(&mut self, v: VarId, c: f64) {
        if c != 0.0 {
            self.terms.push((v, c));
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for (_, c) in &mut self.terms {
            *c *= s;
        }
        self.constant *= s;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| c * x[v.0]).sum::<f64>() + self.constant
    }

    /// Merges repeated variables and drops cancelled terms.
    pub fn compact(mut self) -> Self {
        if self.terms.len() > 1 {
            self.terms.sort_by_key(|(v, _)| *v);
            let mut out: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
            for (v, c) in self.terms {
                match out.last_mut() {
                    Some((w, d)) if *w == v => *d += c,
                    _ => out.push((v, c)),
                }
            }
            out.retain(|(_, c)| *c != 0.0);
            self.terms = out;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    /// expr ≤ 0
    Le,
    /// expr ≥ 0
    Ge,
    /// expr = 0
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    family: u32,
    pub expr: LinExpr,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cone {
    /// ‖members‖₂ ≤ bound
    Soc {
        bound: LinExpr,
        members: Vec<LinExpr>,
    },
    /// ‖members‖₂² ≤ a·b with a, b ≥ 0
    Rotated {
        a: LinExpr,
        b: LinExpr,
        members: Vec<LinExpr>,
    },
}

impl Cone {
    /// Violation in the equivalent standard SOC form; nonpositive when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            Cone::Soc { bound, members } => norm(members.iter().map(|m| m.eval(x))) - bound.eval(x),
            Cone::Rotated { a, b, members } => {
                let (av, bv) = (a.eval(x), b.eval(x));
                let lhs = norm(members.iter().map(|m| 2.0 * m.eval(x)).chain([av - bv]));
                lhs - (av + bv)
            }
        }
    }

    fn exprs(&self) -> impl Iterator<Item = &LinExpr> {
        let (head, members): (Vec<&LinExpr>, &Vec<LinExpr>) = match self {
            Cone::Soc { bound, members } => (vec![bound], members),
            Cone::Rotated { a, b, members } => (vec![a, b], members),
        };
        head.into_iter().chain(members.iter())
    }
}

fn norm(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeRow {
    family: u32,
    pub cone: Cone,
}

/// Structural summary used by tests and the CLI.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProgramStats {
    pub continuous: usize,
    pub binaries: usize,
    pub rows: usize,
    pub cones: usize,
    pub rows_by_family: BTreeMap<String, usize>,
    pub cones_by_family: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    vars: Vec<Variable>,
    rows: Vec<Row>,
    cones: Vec<ConeRow>,
    objective: LinExpr,
    /// Ordered binary groups whose installed members must form a prefix.
    groups: Vec<Vec<VarId>>,
    names: Vec<String>,
    name_index: HashMap<String, u32>,
    entities: Vec<String>,
    entity_index: HashMap<String, u32>,
    emitted: HashSet<String>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern_name(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.name_index.get(s) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(s.to_owned());
        self.name_index.insert(s.to_owned(), i);
        i
    }

    fn intern_entity(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.entity_index.get(s) {
            return i;
        }
        let i = self.entities.len() as u32;
        self.entities.push(s.to_owned());
        self.entity_index.insert(s.to_owned(), i);
        i
    }

    /// Registers an emission for `entity`; a second registration is an error.
    pub fn claim(&mut self, entity: &str) -> Result<()> {
        if !self.emitted.insert(entity.to_owned()) {
            return Err(Error::DuplicateEmission {
                entity: entity.to_owned(),
            });
        }
        Ok(())
    }

    pub fn add_var(
        &mut self,
        kind: VarKind,
        lb: f64,
        ub: f64,
        family: &str,
        entity: &str,
        t: Option<usize>,
    ) -> VarId {
        debug_assert!(lb <= ub, "{family}[{entity}] bounds [{lb}, {ub}]");
        let family = self.intern_name(family);
        let entity = self.intern_entity(entity);
        self.vars.push(Variable {
            kind,
            lb,
            ub,
            family,
            entity,
            t: t.map(|t| t as u32),
        });
        VarId(self.vars.len() - 1)
    }

    pub fn continuous(
        &mut self,
        family: &str,
        entity: &str,
        t: Option<usize>,
        lb: f64,
        ub: f64,
    ) -> VarId {
        self.add_var(VarKind::Continuous, lb, ub, family, entity, t)
    }

    pub fn binary(&mut self, family: &str, entity: &str) -> VarId {
        self.add_var(VarKind::Binary, 0.0, 1.0, family, entity, None)
    }

    pub fn add_group(&mut self, group: Vec<VarId>) {
        self.groups.push(group);
    }

    pub fn add_row(&mut self, family: &str, expr: LinExpr, sense: Sense) {
        let family = self.intern_name(family);
        self.rows.push(Row {
            family,
            expr: expr.compact(),
            sense,
        });
    }

    pub fn add_soc(&mut self, family: &str, bound: LinExpr, members: Vec<LinExpr>) -> Result<()> {
        self.add_cone(family, Cone::Soc { bound, members })
    }

    pub fn add_rotated(
        &mut self,
        family: &str,
        a: LinExpr,
        b: LinExpr,
        members: Vec<LinExpr>,
    ) -> Result<()> {
        self.add_cone(family, Cone::Rotated { a, b, members })
    }

    fn add_cone(&mut self, family: &str, cone: Cone) -> Result<()> {
        let quadratic: Vec<&LinExpr> = match &cone {
            Cone::Soc { members, .. } => members.iter().collect(),
            Cone::Rotated { a, b, members } => [a, b].into_iter().chain(members.iter()).collect(),
        };
        for e in quadratic {
            if let Some((v, _)) = e
                .terms
                .iter()
                .find(|(v, _)| self.vars[v.0].kind == VarKind::Binary)
            {
                return Err(Error::Program(format!(
                    "binary {} appears in a quadratic term of a `{family}` cone",
                    self.var_label(*v)
                )));
            }
        }
        let family = self.intern_name(family);
        let cone = match cone {
            Cone::Soc { bound, members } => Cone::Soc {
                bound: bound.compact(),
                members: members.into_iter().map(LinExpr::compact).collect(),
            },
            Cone::Rotated { a, b, members } => Cone::Rotated {
                a: a.compact(),
                b: b.compact(),
                members: members.into_iter().map(LinExpr::compact).collect(),
            },
        };
        self.cones.push(ConeRow { family, cone });
        Ok(())
    }

    pub fn set_objective(&mut self, objective: LinExpr) {
        self.objective = objective.compact();
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.vars[v.0]
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn cones(&self) -> &[ConeRow] {
        &self.cones
    }

    pub fn groups(&self) -> &[Vec<VarId>] {
        &self.groups
    }

    pub fn binaries(&self) -> Vec<VarId> {
        (0..self.vars.len())
            .filter(|&i| self.vars[i].kind == VarKind::Binary)
            .map(VarId)
            .collect()
    }

    pub fn row_family(&self, row: &Row) -> &str {
        &self.names[row.family as usize]
    }

    pub fn cone_family(&self, cone: &ConeRow) -> &str {
        &self.names[cone.family as usize]
    }

    /// Human-readable `family[entity]@t` label.
    pub fn var_label(&self, v: VarId) -> String {
        let var = &self.vars[v.0];
        let mut s = format!(
            "{}[{}]",
            self.names[var.family as usize], self.entities[var.entity as usize]
        );
        if let Some(t) = var.t {
            let _ = write!(s, "@{t}");
        }
        s
    }

    pub fn var_family(&self, v: VarId) -> &str {
        &self.names[self.vars[v.0].family as usize]
    }

    pub fn stats(&self) -> ProgramStats {
        let mut s = ProgramStats::default();
        for v in &self.vars {
            match v.kind {
                VarKind::Continuous => s.continuous += 1,
                VarKind::Binary => s.binaries += 1,
            }
        }
        s.rows = self.rows.len();
        s.cones = self.cones.len();
        for r in &self.rows {
            *s.rows_by_family
                .entry(self.names[r.family as usize].clone())
                .or_default() += 1;
        }
        for c in &self.cones {
            *s.cones_by_family
                .entry(self.names[c.family as usize].clone())
                .or_default() += 1;
        }
        s
    }

    /// Checks that every referenced variable exists, bounds are ordered and
    /// binaries stay out of quadratic terms.
    pub fn check(&self) -> Result<()> {
        let n = self.vars.len();
        for (i, v) in self.vars.iter().enumerate() {
            if !(v.lb <= v.ub) {
                return Err(Error::Program(format!(
                    "variable {} has bounds [{}, {}]",
                    self.var_label(VarId(i)),
                    v.lb,
                    v.ub
                )));
            }
        }
        let exprs = self
            .rows
            .iter()
            .map(|r| &r.expr)
            .chain(self.cones.iter().flat_map(|c| c.cone.exprs()))
            .chain(std::iter::once(&self.objective));
        for e in exprs {
            if let Some((v, _)) = e.terms.iter().find(|(v, _)| v.0 >= n) {
                return Err(Error::Program(format!(
                    "reference to undeclared variable {}",
                    v.0
                )));
            }
        }
        for c in &self.cones {
            let quadratic: Vec<&LinExpr> = match &c.cone {
                Cone::Soc { members, .. } => members.iter().collect(),
                Cone::Rotated { a, b, members } => {
                    [a, b].into_iter().chain(members.iter()).collect()
                }
            };
            if quadratic.iter().any(|e| {
                e.terms
                    .iter()
                    .any(|(v, _)| self.vars[v.0].kind == VarKind::Binary)
            }) {
                return Err(Error::Program(format!(
                    "binary inside a quadratic term of `{}`",
                    self.cone_family(c)
                )));
            }
        }
        for g in &self.groups {
            if g.iter()
                .any(|v| v.0 >= n || self.vars[v.0].kind != VarKind::Binary)
            {
                return Err(Error::Program("prefix group holds a non-binary".into()));
            }
        }
        Ok(())
    }

    /// Largest violation over bounds, rows and cones at `x` (absolute, unscaled).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (i, v) in self.vars.iter().enumerate() {
            worst = worst.max(v.lb - x[i]).max(x[i] - v.ub);
        }
        for r in &self.rows {
            worst = worst.max(row_violation(r, x));
        }
        for c in &self.cones {
            worst = worst.max(c.cone.violation(x));
        }
        worst
    }

    /// Per-family worst violation, for diagnostics.
    pub fn violations_by_family(&self, x: &[f64]) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for r in &self.rows {
            let e = out.entry(self.row_family(r).to_owned()).or_insert(0.0);
            *e = e.max(row_violation(r, x));
        }
        for c in &self.cones {
            let e = out.entry(self.cone_family(c).to_owned()).or_insert(0.0);
            *e = e.max(c.cone.violation(x));
        }
        out
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Writes the plain-text interchange format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_TAG}");
        let _ = writeln!(out, "vars {}", self.vars.len());
        for v in &self.vars {
            let kind = match v.kind {
                VarKind::Continuous => 'C',
                VarKind::Binary => 'B',
            };
            let t = v.t.map_or_else(|| "-".to_owned(), |t| t.to_string());
            let _ = writeln!(
                out,
                "v {kind} {:?} {:?} {} {} {t}",
                v.lb,
                v.ub,
                token(&self.names[v.family as usize]),
                token(&self.entities[v.entity as usize])
            );
        }
        let _ = writeln!(out, "objective {}", expr_text(&self.objective));
        for r in &self.rows {
            let sense = match r.sense {
                Sense::Le => "le",
                Sense::Ge => "ge",
                Sense::Eq => "eq",
            };
            let _ = writeln!(
                out,
                "row {} {sense} {}",
                token(self.row_family(r)),
                expr_text(&r.expr)
            );
        }
        for c in &self.cones {
            match &c.cone {
                Cone::Soc { bound, members } => {
                    let _ = writeln!(out, "soc {} {}", token(self.cone_family(c)), members.len());
                    let _ = writeln!(out, "  t {}", expr_text(bound));
                    for m in members {
                        let _ = writeln!(out, "  m {}", expr_text(m));
                    }
                }
                Cone::Rotated { a, b, members } => {
                    let _ = writeln!(out, "rsoc {} {}", token(self.cone_family(c)), members.len());
                    let _ = writeln!(out, "  a {}", expr_text(a));
                    let _ = writeln!(out, "  b {}", expr_text(b));
                    for m in members {
                        let _ = writeln!(out, "  m {}", expr_text(m));
                    }
                }
            }
        }
        for g in &self.groups {
            let ids: Vec<String> = g.iter().map(|v| v.0.to_string()).collect();
            let _ = writeln!(out, "group {}", ids.join(" "));
        }
        out
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Parses the plain-text interchange format written by [`ConicProgram::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut p = ConicProgram::new();
        let mut lines = text.lines().enumerate().peekable();
        let err = |line: usize, msg: &str| Error::Parse {
            path: format!("line {}", line + 1),
            message: msg.to_owned(),
        };
        match lines.next() {
            Some((_, l)) if l.trim() == FORMAT_TAG => {}
            _ => return Err(err(0, "missing format tag")),
        }
        while let Some((no, line)) = lines.next() {
            let mut it = line.split_whitespace();
            let Some(head) = it.next() else { continue };
            match head {
                "vars" => {}
                "v" => {
                    let f: Vec<&str> = it.collect();
                    if f.len() != 6 {
                        return Err(err(no, "variable line needs 6 fields"));
                    }
                    let kind = match f[0] {
                        "C" => VarKind::Continuous,
                        "B" => VarKind::Binary,
                        _ => return Err(err(no, "unknown variable kind")),
                    };
                    let lb = parse_f64(f[1]).ok_or_else(|| err(no, "bad lower bound"))?;
                    let ub = parse_f64(f[2]).ok_or_else(|| err(no, "bad upper bound"))?;
                    let t = match f[5] {
                        "-" => None,
                        s => Some(s.parse().map_err(|_| err(no, "bad time index"))?),
                    };
                    p.add_var(kind, lb, ub, f[3], f[4], t);
                }
                "objective" => {
                    let e = parse_expr(&mut it).ok_or_else(|| err(no, "bad objective"))?;
                    p.objective = e;
                }
                "row" => {
                    let family = it
                        .next()
                        .ok_or_else(|| err(no, "row without family"))?
                        .to_owned();
                    let sense = match it.next() {
                        Some("le") => Sense::Le,
                        Some("ge") => Sense::Ge,
                        Some("eq") => Sense::Eq,
                        _ => return Err(err(no, "bad row sense")),
                    };
                    let e = parse_expr(&mut it).ok_or_else(|| err(no, "bad row expression"))?;
                    let family = p.intern_name(&family);
                    p.rows.push(Row {
                        family,
                        expr: e,
                        sense,
                    });
                }
                "soc" | "rsoc" => {
                    let family = it
                        .next()
                        .ok_or_else(|| err(no, "cone without family"))?
                        .to_owned();
                    let n: usize = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(no, "bad member count"))?;
                    let heads: &[&str] = if head == "soc" { &["t"] } else { &["a", "b"] };
                    let mut parts = Vec::new();
                    for expected in heads.iter().copied().chain(std::iter::repeat_n("m", n)) {
                        let (no2, l) = lines.next().ok_or_else(|| err(no, "truncated cone"))?;
                        let mut jt = l.split_whitespace();
                        if jt.next() != Some(expected) {
                            return Err(err(no2, "unexpected cone part"));
                        }
                        parts.push(
                            parse_expr(&mut jt).ok_or_else(|| err(no2, "bad cone expression"))?,
                        );
                    }
                    let mut parts = parts.into_iter();
                    let cone = if head == "soc" {
                        let bound = parts.next().unwrap();
                        Cone::Soc {
                            bound,
                            members: parts.collect(),
                        }
                    } else {
                        let a = parts.next().unwrap();
                        let b = parts.next().unwrap();
                        Cone::Rotated {
                            a,
                            b,
                            members: parts.collect(),
                        }
                    };
                    p.add_cone(&family, cone)
                        .map_err(|e| err(no, &e.to_string()))?;
                }
                "group" => {
                    let g: Option<Vec<VarId>> = it.map(|s| s.parse().ok().map(VarId)).collect();
                    p.groups.push(g.ok_or_else(|| err(no, "bad group"))?);
                }
                _ => return Err(err(no, "unknown record")),
            }
        }
        p.check()?;
        Ok(p)
    }
}

pub(crate) fn row_violation(r: &Row, x: &[f64]) -> f64 {
    let v = r.expr.eval(x);
    match r.sense {
        Sense::Le => v,
        Sense::Ge => -v,
        Sense::Eq => v.abs(),
    }
}

const FORMAT_TAG: &str = "vreplan-conic/1";

fn token(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join("_")
}

fn expr_text(e: &LinExpr) -> String {
    let mut s = format!("{:?} {}", e.constant, e.terms.len());
    for (v, c) in &e.terms {
        let _ = write!(s, " {}:{:?}", v.0, c);
    }
    s
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse().ok()
}

fn parse_expr<'a>(it: &mut impl Iterator<Item = &'a str>) -> Option<LinExpr> {
    let constant = parse_f64(it.next()?)?;
    let n: usize = it.next()?.parse().ok()?;
    let mut terms = Vec::with_capacity(n);
    for _ in 0..n {
        let (v, c) = it.next()?.split_once(':')?;
        terms.push((VarId(v.parse().ok()?), parse_f64(c)?));
    }
    Some(LinExpr { terms, constant })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConicProgram {
        let mut p = ConicProgram::new();
        let z = p.binary("z", "link A");
        let x = p.continuous("x", "link A", Some(0), 0.0, f64::INFINITY);
        let y = p.continuous("y", "link A", Some(0), -1.0, 1.0);
        p.add_row("cap", LinExpr::var(x).with(z, -10.0), Sense::Le);
        p.add_row("fix", LinExpr::var(y).plus(-0.1), Sense::Eq);
        p.add_soc(
            "mva",
            LinExpr::term(z, 2.0),
            vec![LinExpr::var(x), LinExpr::var(y)],
        )
        .unwrap();
        p.add_rotated(
            "rot",
            LinExpr::var(x),
            LinExpr::constant(1.0),
            vec![LinExpr::var(y)],
        )
        .unwrap();
        p.add_group(vec![z]);
        p.set_objective(LinExpr::term(z, 3.0).with(x, -1.0 / 3.0));
        p
    }

    #[test]
    fn text_round_trip_is_exact() {
        let p = sample();
        let text = p.to_text();
        let q = ConicProgram::from_text(&text).unwrap();
        assert_eq!(q.to_text(), text);
        assert_eq!(q.stats(), p.stats());
        assert_eq!(q.objective().terms[1].1, -1.0 / 3.0);
    }

    #[test]
    fn binaries_rejected_in_quadratic_terms() {
        let mut p = sample();
        let z = VarId(0);
        assert!(p
            .add_soc("bad", LinExpr::constant(1.0), vec![LinExpr::var(z)])
            .is_err());
        assert!(p
            .add_rotated("bad", LinExpr::var(z), LinExpr::constant(1.0), vec![])
            .is_err());
    }

    #[test]
    fn duplicate_claim_is_an_error() {
        let mut p = ConicProgram::new();
        p.claim("site E1").unwrap();
        assert!(matches!(
            p.claim("site E1"),
            Err(Error::DuplicateEmission { .. })
        ));
    }

    #[test]
    fn violation_measures() {
        let p = sample();
        // z = 1, x = 1, y = 0.1: all rows hold, rotated cone 0.01 ≤ 1.
        assert!(p.max_violation(&[1.0, 1.0, 0.1]) <= 1e-15);
        // x > 10 z
        assert!(p.max_violation(&[0.0, 1.0, 0.1]) >= 1.0);
    }
}

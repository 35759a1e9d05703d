//! Semidefinite programs over complex Hermitian block variables.
//!
//! Programs are described with a [`ProgramSpec`], checked and frozen by
//! [`ProgramSpec::assemble`], and handed to [`solve`]. Every solution is
//! re-verified by [`check_solution`], which only looks at the lifted complex
//! values and never at solver internals.

mod backend;
mod coords;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operator::{c, CMatrix, HermitianOperator};

pub use backend::solve;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("bad-program: {0}")]
    BadProgram(String),
    #[error("bad-config: {0}")]
    BadConfig(String),
    #[error("backend: {0}")]
    Backend(String),
}

pub type Result<T> = std::result::Result<T, ConicError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Psd,
    FreeHermitian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub id: VarId,
    pub side: usize,
    pub kind: VarKind,
    pub name: String,
}

/// Real-linear map from `in_side × in_side` Hermitian matrices to
/// `out_side × out_side` Hermitian matrices, stored as a sparse matrix on
/// Hermitian coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    in_side: usize,
    out_side: usize,
    // (output coordinate, input coordinate, coefficient)
    entries: Arc<Vec<(usize, usize, f64)>>,
}

const MAP_ZERO: f64 = 1e-14;

impl LinearMap {
    /// Tabulates `f` on the Hermitian basis. `f` must be real-linear and map
    /// Hermitian matrices to Hermitian matrices of side `out_side`.
    pub fn from_fn(in_side: usize, out_side: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Result<Self> {
        let mut entries = Vec::new();
        for (col, coord) in coords::layout(in_side).into_iter().enumerate() {
            let image = f(&coords::basis(in_side, coord));
            if image.nrows() != out_side || image.ncols() != out_side {
                return Err(ConicError::BadProgram(format!(
                    "map image is {}x{}, expected side {out_side}",
                    image.nrows(),
                    image.ncols()
                )));
            }
            let asym = (&image - image.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if asym > 1e-10 {
                return Err(ConicError::BadProgram("map does not preserve Hermiticity".into()));
            }
            for (row, v) in coords::to_coords(&image).into_iter().enumerate() {
                if v.abs() > MAP_ZERO {
                    entries.push((row, col, v));
                }
            }
        }
        Ok(Self { in_side, out_side, entries: Arc::new(entries) })
    }

    pub fn identity(side: usize) -> Self {
        let entries = (0..side * side).map(|k| (k, k, 1.0)).collect();
        Self { in_side: side, out_side: side, entries: Arc::new(entries) }
    }

    /// `X ↦ tr X` as a 1×1 output.
    pub fn trace(side: usize) -> Self {
        let entries = (0..side).map(|i| (0, coords::re_index(side, i, i), 1.0)).collect();
        Self { in_side: side, out_side: 1, entries: Arc::new(entries) }
    }

    /// `X ↦ X_ij` restricted to a diagonal entry.
    pub fn diagonal_entry(side: usize, i: usize) -> Self {
        Self { in_side: side, out_side: 1, entries: Arc::new(vec![(0, coords::re_index(side, i, i), 1.0)]) }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let entries = self.entries.iter().map(|&(r, c, v)| (r, c, v * factor)).collect();
        Self { in_side: self.in_side, out_side: self.out_side, entries: Arc::new(entries) }
    }

    pub fn in_side(&self) -> usize {
        self.in_side
    }

    pub fn out_side(&self) -> usize {
        self.out_side
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub(crate) fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let xc = coords::to_coords(x);
        let mut out = vec![0.0; self.out_side * self.out_side];
        for &(r, col, v) in self.entries.iter() {
            out[r] += v * xc[col];
        }
        coords::from_coords(self.out_side, &out)
    }
}

/// `Σ_v L_v(X_v) + C`, a Hermitian-valued affine expression.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineExpr {
    side: usize,
    terms: Vec<(VarId, LinearMap)>,
    constant: CMatrix,
}

impl AffineExpr {
    pub fn zero(side: usize) -> Self {
        Self { side, terms: Vec::new(), constant: CMatrix::zeros(side, side) }
    }

    pub fn constant(op: &HermitianOperator) -> Self {
        Self { side: op.side(), terms: Vec::new(), constant: op.entries().clone() }
    }

    pub fn with_term(mut self, var: VarId, map: LinearMap) -> Self {
        self.terms.push((var, map));
        self
    }

    pub fn add_term(&mut self, var: VarId, map: LinearMap) {
        self.terms.push((var, map));
    }

    pub fn add_constant(&mut self, op: &CMatrix) {
        self.constant += op;
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn terms(&self) -> &[(VarId, LinearMap)] {
        &self.terms
    }

    pub fn constant_part(&self) -> &CMatrix {
        &self.constant
    }

    pub fn evaluate(&self, values: &BTreeMap<VarId, HermitianOperator>) -> Option<CMatrix> {
        let mut out = self.constant.clone();
        for (var, map) in &self.terms {
            out += map.apply(values.get(var)?.entries());
        }
        Some(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
    Feasibility,
}

/// `Σ_v Re tr(W_v X_v) + offset`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Objective {
    pub weights: Vec<(VarId, CMatrix)>,
    pub offset: f64,
}

impl Objective {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: VarId, weight: &HermitianOperator) -> Self {
        self.weights.push((var, weight.entries().clone()));
        self
    }

    pub fn with_matrix(mut self, var: VarId, weight: CMatrix) -> Self {
        self.weights.push((var, weight));
        self
    }

    /// Adds `factor · tr X_v`.
    pub fn with_trace(mut self, var: VarId, side: usize, factor: f64) -> Self {
        self.weights.push((var, CMatrix::identity(side, side).map(|z| z * factor)));
        self
    }

    pub fn evaluate(&self, values: &BTreeMap<VarId, HermitianOperator>) -> Option<f64> {
        let mut total = self.offset;
        for (var, w) in &self.weights {
            let x = values.get(var)?.entries();
            total += (w * x).trace().re;
        }
        Some(total)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: AffineExpr,
}

/// Declarative description of a program; freeze with [`ProgramSpec::assemble`].
#[derive(Clone, Debug, Default)]
pub struct ProgramSpec {
    variables: Vec<Variable>,
    equalities: Vec<Constraint>,
    psd: Vec<Constraint>,
    objective: Option<(Sense, Objective)>,
}

impl ProgramSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, side: usize, kind: VarKind, name: impl Into<String>) -> VarId {
        let id = VarId(self.variables.len());
        self.variables.push(Variable { id, side, kind, name: name.into() });
        id
    }

    pub fn psd_variable(&mut self, side: usize, name: impl Into<String>) -> VarId {
        self.add_variable(side, VarKind::Psd, name)
    }

    pub fn free_variable(&mut self, side: usize, name: impl Into<String>) -> VarId {
        self.add_variable(side, VarKind::FreeHermitian, name)
    }

    /// Constrains `expr = 0`.
    pub fn add_equality(&mut self, name: impl Into<String>, expr: AffineExpr) {
        self.equalities.push(Constraint { name: name.into(), expr });
    }

    /// Constrains `expr ⪰ 0`.
    pub fn add_psd(&mut self, name: impl Into<String>, expr: AffineExpr) {
        self.psd.push(Constraint { name: name.into(), expr });
    }

    pub fn minimize(&mut self, objective: Objective) {
        self.objective = Some((Sense::Minimize, objective));
    }

    pub fn maximize(&mut self, objective: Objective) {
        self.objective = Some((Sense::Maximize, objective));
    }

    pub fn assemble(self) -> Result<ConicProgram> {
        let bad = |m: String| Err(ConicError::BadProgram(m));
        for v in &self.variables {
            if v.side == 0 {
                return bad(format!("variable {} has side 0", v.name));
            }
        }
        let side_of = |id: VarId| self.variables.get(id.0).map(|v| v.side);
        for cons in self.equalities.iter().chain(&self.psd) {
            let e = &cons.expr;
            if e.constant.nrows() != e.side || e.constant.ncols() != e.side {
                return bad(format!("{}: constant has wrong shape", cons.name));
            }
            let asym = (&e.constant - e.constant.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if asym > 1e-10 {
                return bad(format!("{}: constant is not Hermitian", cons.name));
            }
            for (var, map) in &e.terms {
                match side_of(*var) {
                    None => return bad(format!("{}: unknown variable {}", cons.name, var.0)),
                    Some(s) if s != map.in_side => {
                        return bad(format!("{}: map expects side {}, variable has {}", cons.name, map.in_side, s))
                    }
                    _ => {}
                }
                if map.out_side != e.side {
                    return bad(format!("{}: map output side {} != {}", cons.name, map.out_side, e.side));
                }
            }
        }
        let (sense, objective) = self.objective.unwrap_or((Sense::Feasibility, Objective::new()));
        for (var, w) in &objective.weights {
            match side_of(*var) {
                Some(s) if s == w.nrows() && s == w.ncols() => {}
                _ => return bad(format!("objective weight for variable {} has wrong shape", var.0)),
            }
        }
        Ok(ConicProgram { variables: self.variables, equalities: self.equalities, psd: self.psd, sense, objective })
    }
}

/// A dimension-checked program ready for a backend.
#[derive(Clone, Debug)]
pub struct ConicProgram {
    variables: Vec<Variable>,
    equalities: Vec<Constraint>,
    psd: Vec<Constraint>,
    sense: Sense,
    objective: Objective,
}

impl ConicProgram {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn equalities(&self) -> &[Constraint] {
        &self.equalities
    }

    pub fn psd_constraints(&self) -> &[Constraint] {
        &self.psd
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    /// Returns a copy with every equality constant and the objective offset
    /// scaled by `factor`. For `factor > 0` the optimum scales by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.equalities {
            e.expr.constant = e.expr.constant.map(|z| z * factor);
        }
        out.objective.offset *= factor;
        out
    }

    /// Human-readable listing, stable across runs.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sense {:?}", self.sense);
        for v in &self.variables {
            let _ = writeln!(s, "var {} {} side={} kind={:?}", v.id.0, v.name, v.side, v.kind);
        }
        let mut constraint = |tag: &str, cons: &Constraint| {
            let _ = writeln!(s, "{tag} {} side={}", cons.name, cons.expr.side);
            for (var, map) in &cons.expr.terms {
                let _ = writeln!(s, "  term var={} nnz={}", var.0, map.nnz());
                for &(r, col, v) in map.entries() {
                    let _ = writeln!(s, "    {r} {col} {v:+.12e}");
                }
            }
            for (k, v) in coords::to_coords(&cons.expr.constant).into_iter().enumerate() {
                if v != 0.0 {
                    let _ = writeln!(s, "  const {k} {v:+.12e}");
                }
            }
        };
        for cons in &self.equalities {
            constraint("eq", cons);
        }
        for cons in &self.psd {
            constraint("psd", cons);
        }
        for (var, w) in &self.objective.weights {
            let _ = writeln!(s, "obj var={}", var.0);
            for (k, v) in coords::to_coords(w).into_iter().enumerate() {
                if v != 0.0 {
                    let _ = writeln!(s, "  {k} {v:+.12e}");
                }
            }
        }
        let _ = writeln!(s, "offset {:+.12e}", self.objective.offset);
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps_feas: f64,
    pub eps_psd: f64,
    pub max_iterations: u32,
    /// Residuals in `(eps_feas, inaccurate_band]` yield [`Status::Inaccurate`].
    pub inaccurate_band: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { eps_feas: 1e-7, eps_psd: 1e-8, max_iterations: 200, inaccurate_band: 1e-5 }
    }
}

impl SolverConfig {
    pub fn with_eps_feas(mut self, eps: f64) -> Self {
        self.eps_feas = eps;
        if self.eps_psd > eps {
            self.eps_psd = eps;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_psd > 0.0 && self.eps_psd <= self.eps_feas) {
            return Err(ConicError::BadConfig(format!(
                "need 0 < eps_psd <= eps_feas, got {} and {}",
                self.eps_psd, self.eps_feas
            )));
        }
        if !(self.inaccurate_band >= self.eps_feas) {
            return Err(ConicError::BadConfig("inaccurate band below eps_feas".into()));
        }
        if self.max_iterations == 0 {
            return Err(ConicError::BadConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    Infeasible,
    Inaccurate,
    Unbounded,
    NumericalFailure,
}

impl Status {
    pub fn has_values(self) -> bool {
        matches!(self, Status::Optimal | Status::Inaccurate)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Inaccurate => "inaccurate",
            Status::Unbounded => "unbounded",
            Status::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: Status,
    pub values: BTreeMap<VarId, HermitianOperator>,
    pub objective: f64,
    pub primal_residual: f64,
    pub min_eigenvalue: f64,
    pub iterations: u32,
    /// Multipliers `Z ⪰ 0` of the PSD constraints, keyed by name, entering
    /// the Lagrangian as `−Re tr[Z G(x)]`.
    pub constraint_duals: BTreeMap<String, HermitianOperator>,
    /// Multipliers of the PSD variables' own cones.
    pub variable_duals: BTreeMap<VarId, HermitianOperator>,
}

impl Solution {
    pub fn value(&self, id: VarId) -> Option<&HermitianOperator> {
        self.values.get(&id)
    }

    pub fn constraint_dual(&self, name: &str) -> Option<&HermitianOperator> {
        self.constraint_duals.get(name)
    }

    pub fn variable_dual(&self, id: VarId) -> Option<&HermitianOperator> {
        self.variable_duals.get(&id)
    }

    pub(crate) fn failed(status: Status, iterations: u32) -> Self {
        Self {
            status,
            values: BTreeMap::new(),
            objective: f64::NAN,
            primal_residual: f64::INFINITY,
            min_eigenvalue: f64::NEG_INFINITY,
            iterations,
            constraint_duals: BTreeMap::new(),
            variable_duals: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    /// Largest entrywise equality violation.
    pub equality_residual: f64,
    /// Smallest eigenvalue over PSD variables and PSD constraints.
    pub min_eigenvalue: f64,
    pub objective: f64,
    /// Names of constraints violating `eps_feas`.
    pub violations: Vec<String>,
    pub flagged: bool,
}

/// Recomputes every residual from `sol.values` alone.
pub fn check_solution(program: &ConicProgram, sol: &Solution, config: &SolverConfig) -> ResidualReport {
    let mut report = ResidualReport {
        equality_residual: 0.0,
        min_eigenvalue: f64::INFINITY,
        objective: f64::NAN,
        violations: Vec::new(),
        flagged: false,
    };
    let missing = program.variables.iter().any(|v| !sol.values.contains_key(&v.id));
    if missing {
        report.equality_residual = f64::INFINITY;
        report.min_eigenvalue = f64::NEG_INFINITY;
        report.violations.push("missing variable values".into());
        report.flagged = true;
        return report;
    }
    for cons in &program.equalities {
        let r = cons.expr.evaluate(&sol.values).expect("values present");
        let worst = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
        report.equality_residual = report.equality_residual.max(worst);
        if worst > config.eps_feas {
            report.violations.push(cons.name.clone());
        }
    }
    let mut psd_check = |name: &str, m: CMatrix| {
        let ev = hermitian_min_eigenvalue(m);
        report.min_eigenvalue = report.min_eigenvalue.min(ev);
        if ev < -config.eps_feas {
            report.violations.push(name.to_string());
        }
    };
    for v in &program.variables {
        if v.kind == VarKind::Psd {
            psd_check(&v.name, sol.values[&v.id].entries().clone());
        }
    }
    for cons in &program.psd {
        psd_check(&cons.name, cons.expr.evaluate(&sol.values).expect("values present"));
    }
    if report.min_eigenvalue == f64::INFINITY {
        report.min_eigenvalue = 0.0;
    }
    report.objective = program.objective.evaluate(&sol.values).expect("values present");
    report.flagged = !report.violations.is_empty();
    report
}

fn hermitian_min_eigenvalue(m: CMatrix) -> f64 {
    let h = (&m + m.adjoint()).map(|z| z * 0.5);
    if h.nrows() == 1 {
        return h[(0, 0)].re;
    }
    h.symmetric_eigenvalues().min()
}

/// Map from a 1×1 variable `t` to `t · op`.
pub fn scalar_times(op: &HermitianOperator) -> LinearMap {
    let m = op.entries().clone();
    LinearMap::from_fn(1, op.side(), |x| m.map(|z| z * x[(0, 0)].re)).expect("scalar map")
}

pub fn scalar(v: f64) -> CMatrix {
    CMatrix::from_element(1, 1, c(v, 0.0))
}

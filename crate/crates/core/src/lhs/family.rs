//! Largest certifiable member of an affine family `ρ(θ) = B + Σ_k θ_k A_k`.

use serde::{Deserialize, Serialize};

use crate::conic::{scalar_times, solve, AffineExpr, LinearMap, Objective, ProgramSpec, SolverConfig, Status, VarId};
use crate::geometry::MeasurementSet;
use crate::operator::{CMatrix, DensityMatrix, HermitianOperator};
use crate::states::{bell_basis, noisy_tripartite, TripartiteKind};

use super::program::{add_lhs_core, classify, minus_one, reconstruction_map};
use super::{certify, LhsCertificate, LhsError, LhsMode, LhsOutcome, Result};

const FAMILY_TRACE_TOL: f64 = 1e-9;

/// `Σ_k g_k θ_k ≤ h` (or `= h`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub equality: bool,
}

impl ThetaConstraint {
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self { coeffs, rhs, equality: false }
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self { coeffs, rhs, equality: true }
    }

    fn satisfied(&self, theta: &[f64], tol: f64) -> bool {
        let lhs: f64 = self.coeffs.iter().zip(theta).map(|(g, t)| g * t).sum();
        if self.equality {
            (lhs - self.rhs).abs() <= tol
        } else {
            lhs <= self.rhs + tol
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub name: String,
    pub parameters: Vec<String>,
    pub base: HermitianOperator,
    pub directions: Vec<HermitianOperator>,
    pub constraints: Vec<ThetaConstraint>,
    /// Maximized linear functional of `θ`.
    pub objective: Vec<f64>,
}

fn projector_on(ket: &[crate::operator::C64]) -> HermitianOperator {
    HermitianOperator::ket_projector(&[2, 2], ket).expect("two-qubit ket")
}

fn unit_box(k: usize, n: usize) -> [ThetaConstraint; 2] {
    let mut up = vec![0.0; n];
    up[k] = 1.0;
    let down = up.iter().map(|v| -v).collect();
    [ThetaConstraint::le(up, 1.0), ThetaConstraint::le(down, 0.0)]
}

impl FamilySpec {
    pub fn new(
        name: impl Into<String>,
        parameters: Vec<String>,
        base: HermitianOperator,
        directions: Vec<HermitianOperator>,
        constraints: Vec<ThetaConstraint>,
        objective: Vec<f64>,
    ) -> Result<Self> {
        let spec = Self { name: name.into(), parameters, base, directions, constraints, objective };
        spec.validate()?;
        Ok(spec)
    }

    /// `w|Φ⁺⟩⟨Φ⁺| + (1−w) I/4`, maximize `w`.
    pub fn werner() -> Self {
        let mixed = HermitianOperator::maximally_mixed(&[2, 2]);
        let phi = projector_on(&bell_basis()[0]);
        Self::new("werner", vec!["w".into()], mixed.clone(), vec![&phi - &mixed], unit_box(0, 1).to_vec(), vec![1.0])
            .expect("werner family is valid")
    }

    /// `Σ p_i |Ψ_i⟩⟨Ψ_i|` over the simplex, maximize `p1`.
    pub fn bell_diagonal() -> Self {
        Self::bell_family("bell-diagonal", false)
    }

    /// Bell-diagonal with `p4 = 0`.
    pub fn bell_diagonal_rank3() -> Self {
        Self::bell_family("bell-diagonal-rank3", true)
    }

    fn bell_family(name: &str, rank3: bool) -> Self {
        let dirs: Vec<HermitianOperator> = bell_basis().iter().map(|k| projector_on(k)).collect();
        let mut constraints = vec![ThetaConstraint::eq(vec![1.0; 4], 1.0)];
        for k in 0..4 {
            let mut g = vec![0.0; 4];
            g[k] = -1.0;
            constraints.push(ThetaConstraint::le(g, 0.0));
        }
        if rank3 {
            constraints.push(ThetaConstraint::eq(vec![0.0, 0.0, 0.0, 1.0], 0.0));
        }
        Self::new(
            name,
            (1..=4).map(|i| format!("p{i}")).collect(),
            HermitianOperator::zeros(&[2, 2]),
            dirs,
            constraints,
            vec![1.0, 0.0, 0.0, 0.0],
        )
        .expect("Bell-diagonal family is valid")
    }

    /// `p|ψ⟩⟨ψ| + (1−p) I/8`, maximize `p`.
    pub fn noisy_tripartite(kind: TripartiteKind) -> Self {
        let mixed = noisy_tripartite(kind, 0.0).expect("p = 0").into_op();
        let pure = noisy_tripartite(kind, 1.0).expect("p = 1").into_op();
        Self::new(
            kind.name(),
            vec!["p".into()],
            mixed.clone(),
            vec![&pure - &mixed],
            unit_box(0, 1).to_vec(),
            vec![1.0],
        )
        .expect("tripartite family is valid")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "werner" => Ok(Self::werner()),
            "bell-diag" | "bell-diagonal" => Ok(Self::bell_diagonal()),
            "bell-diag-rank3" | "bell-diagonal-rank3" => Ok(Self::bell_diagonal_rank3()),
            "ghz" => Ok(Self::noisy_tripartite(TripartiteKind::Ghz)),
            "w" => Ok(Self::noisy_tripartite(TripartiteKind::W)),
            other => Err(LhsError::BadFamily(format!("unknown family {other:?}"))),
        }
    }

    pub fn dims(&self) -> &[usize] {
        self.base.dims()
    }

    fn validate(&self) -> Result<()> {
        let n = self.parameters.len();
        let bad = |m: String| Err(LhsError::BadFamily(m));
        if n == 0 || self.directions.len() != n || self.objective.len() != n {
            return bad("parameters, directions and objective must have equal nonzero length".into());
        }
        if self.directions.iter().any(|d| d.dims() != self.base.dims()) {
            return bad("direction dims differ from the base".into());
        }
        if self.constraints.iter().any(|c| c.coeffs.len() != n) {
            return bad("constraint length differs from the parameter count".into());
        }
        // tr ρ(θ) = 1 must hold on the constraint set: either the trace is
        // constant, or it is pinned by one of the equalities.
        let t: Vec<f64> = self.directions.iter().map(|d| d.trace()).collect();
        let t0 = 1.0 - self.base.trace();
        let constant = t.iter().all(|v| v.abs() < FAMILY_TRACE_TOL) && t0.abs() < FAMILY_TRACE_TOL;
        let pinned = self.constraints.iter().filter(|c| c.equality).any(|c| {
            let scale = t.iter().zip(&c.coeffs).find(|(_, g)| g.abs() > FAMILY_TRACE_TOL).map(|(ti, g)| ti / g);
            match scale {
                Some(s) => {
                    t.iter().zip(&c.coeffs).all(|(ti, g)| (ti - s * g).abs() < FAMILY_TRACE_TOL)
                        && (t0 - s * c.rhs).abs() < FAMILY_TRACE_TOL
                }
                None => false,
            }
        });
        if !(constant || pinned) {
            return bad("tr ρ(θ) is not fixed to 1 by the family constraints".into());
        }
        Ok(())
    }

    pub fn feasible(&self, theta: &[f64], tol: f64) -> bool {
        theta.len() == self.parameters.len() && self.constraints.iter().all(|c| c.satisfied(theta, tol))
    }

    pub fn state_operator(&self, theta: &[f64]) -> HermitianOperator {
        self.directions.iter().zip(theta).fold(self.base.clone(), |acc, (d, t)| &acc + &d.scale(*t))
    }

    pub fn state(&self, theta: &[f64]) -> Result<DensityMatrix> {
        Ok(DensityMatrix::from_nearly_psd(&self.state_operator(theta))?)
    }

    pub fn objective_value(&self, theta: &[f64]) -> f64 {
        self.objective.iter().zip(theta).map(|(c, t)| c * t).sum()
    }
}

#[derive(Clone, Debug)]
pub struct FamilyOptimum {
    pub theta: Vec<f64>,
    /// Objective at the certified point, after shrinking.
    pub objective: f64,
    /// Objective returned by the maximization before shrinking.
    pub raw_objective: f64,
    pub shrink: f64,
    pub state: DensityMatrix,
    pub certificate: LhsCertificate,
    pub status: Status,
}

struct FamilyProgram {
    program: crate::conic::ConicProgram,
    theta: Vec<VarId>,
}

fn family_program(
    family: &FamilySpec,
    set: &MeasurementSet,
    mode: &LhsMode,
    level: Option<f64>,
) -> Result<FamilyProgram> {
    let dims = family.dims().to_vec();
    let mut spec = ProgramSpec::new();
    let vars = add_lhs_core(&mut spec, &dims, set, false)?;
    let theta: Vec<VarId> = family.parameters.iter().map(|p| spec.free_variable(1, format!("theta_{p}"))).collect();

    // reconstruct(O) − ρ(θ) = 0
    let mut recon =
        AffineExpr::constant(&-&family.base).with_term(vars.o, reconstruction_map(&dims, set.insphere(), mode)?);
    for (t, d) in theta.iter().zip(&family.directions) {
        recon.add_term(*t, scalar_times(&d.scale(-1.0)));
    }
    spec.add_equality("reconstruction", recon);

    // ρ(θ) ⪰ 0
    let mut state = AffineExpr::constant(&family.base);
    for (t, d) in theta.iter().zip(&family.directions) {
        state.add_term(*t, scalar_times(d));
    }
    spec.add_psd("state_psd", state);

    // sign · (g·θ − h)
    let linear = |coeffs: &[f64], rhs: f64, sign: f64| {
        let mut e = AffineExpr::constant(&minus_one().scale(sign * rhs));
        for (t, g) in theta.iter().zip(coeffs) {
            if *g != 0.0 {
                e.add_term(*t, LinearMap::identity(1).scaled(sign * g));
            }
        }
        e
    };
    for (k, c) in family.constraints.iter().enumerate() {
        if c.equality {
            spec.add_equality(format!("theta_eq{k}"), linear(&c.coeffs, c.rhs, 1.0));
        } else {
            // h − g·θ ≥ 0
            spec.add_psd(format!("theta_le{k}"), linear(&c.coeffs, c.rhs, -1.0));
        }
    }
    match level {
        None => {
            let mut obj = Objective::new();
            for (t, c) in theta.iter().zip(&family.objective) {
                obj = obj.with_matrix(*t, CMatrix::from_element(1, 1, crate::operator::c(*c, 0.0)));
            }
            spec.maximize(obj);
        }
        Some(target) => spec.add_equality("objective_level", linear(&family.objective, target, 1.0)),
    }
    Ok(FamilyProgram { program: spec.assemble()?, theta })
}

/// Maximizes the family objective over certifiable members, then backs the
/// reported optimum with a certificate for a point at a slightly lower level.
pub fn maximize_family(
    family: &FamilySpec,
    set: &MeasurementSet,
    mode: &LhsMode,
    config: &SolverConfig,
) -> Result<Option<FamilyOptimum>> {
    let first = family_program(family, set, mode, None)?;
    let sol = solve(&first.program, config)?;
    if classify(&sol)?.is_some() {
        return Ok(None);
    }
    let raw = sol.objective;
    let mut shrink = sol.primal_residual.max(1e-6);
    while shrink <= 1e-3 {
        let level = family_program(family, set, mode, Some(raw - shrink))?;
        let at_level = solve(&level.program, config)?;
        if at_level.status.has_values() {
            let theta: Vec<f64> = level.theta.iter().map(|t| at_level.values[t].entries()[(0, 0)].re).collect();
            if family.feasible(&theta, 1e-7) {
                let state = family.state(&theta)?;
                if let LhsOutcome::Certified(cert) = certify(&state, set, mode, config)? {
                    return Ok(Some(FamilyOptimum {
                        objective: family.objective_value(&theta),
                        theta,
                        raw_objective: raw,
                        shrink,
                        state,
                        certificate: *cert,
                        status: sol.status,
                    }));
                }
            }
        }
        shrink *= 10.0;
    }
    Err(LhsError::SolverFailure(Status::Inaccurate))
}

#[derive(Clone, Debug)]
pub struct BisectionResult {
    /// Largest parameter with a certificate.
    pub certified: f64,
    /// Smallest parameter found inconclusive (or the upper end).
    pub inconclusive: f64,
    pub steps: usize,
    pub certificate: Option<LhsCertificate>,
}

/// Bisection on a one-parameter family that need not be affine. `lo` is
/// expected to be certifiable; the certified end is returned when the
/// bracket is narrower than `tol`.
pub fn bisect_threshold(
    family: impl Fn(f64) -> Result<DensityMatrix>,
    lo: f64,
    hi: f64,
    tol: f64,
    set: &MeasurementSet,
    mode: &LhsMode,
    config: &SolverConfig,
) -> Result<BisectionResult> {
    let mut res = BisectionResult { certified: f64::NAN, inconclusive: hi, steps: 0, certificate: None };
    if let LhsOutcome::Certified(c) = certify(&family(hi)?, set, mode, config)? {
        res.certified = hi;
        res.certificate = Some(*c);
        return Ok(res);
    }
    match certify(&family(lo)?, set, mode, config)? {
        LhsOutcome::Certified(c) => {
            res.certified = lo;
            res.certificate = Some(*c);
        }
        LhsOutcome::Inconclusive { .. } => {
            res.inconclusive = lo;
            return Ok(res);
        }
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        res.steps += 1;
        match certify(&family(mid)?, set, mode, config)? {
            LhsOutcome::Certified(c) => {
                a = mid;
                res.certificate = Some(*c);
            }
            LhsOutcome::Inconclusive { .. } => b = mid,
        }
    }
    res.certified = a;
    res.inconclusive = b;
    Ok(res)
}

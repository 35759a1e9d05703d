//! Local-hidden-state models for a qubit Alice.
//!
//! A certificate consists of an operator `O` and unnormalized hidden states
//! `ρ_λ`, one per deterministic strategy over the measurement set, such that
//! the steering equalities hold for `O` and `ρ` is recovered from `O` by the
//! depolarizing (or, for POVMs, the depolarizing-plus-flag) reconstruction.

mod family;
mod generator;
mod program;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{ConicError, Status};
use crate::geometry::{
    depolarized_projector, projector, BlochDirection, DeterministicStrategy, GeometryError, MeasurementSet,
};
use crate::operator::{partial_trace, tensor, BipartiteCut, CMatrix, DensityMatrix, HermitianOperator, OperatorError};
use crate::rng::RngStream;

pub use family::{bisect_threshold, maximize_family, BisectionResult, FamilyOptimum, FamilySpec, ThetaConstraint};
pub use generator::{
    generate_local_state, iterate_generator, GeneratedState, GeneratorStep, GeneratorTrace, DEFAULT_GENERATOR_ITERS,
    DEFAULT_GENERATOR_TOL,
};
pub use program::{certify, certify_multipartite, certify_povm, certify_projective};

/// Largest `2^m · d_B²` accepted before refusing to build a program.
pub const MAX_HIDDEN_ENTRIES: usize = 1 << 20;
/// Violation above which [`verify_certificate`] flags a certificate.
pub const VERIFY_TOL: f64 = 1e-6;
/// Number of random directions for the depolarization check.
pub const VERIFY_DIRECTIONS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LhsError {
    #[error("unsupported-dim: {0}")]
    UnsupportedDim(String),
    #[error(
        "too-large: 2^{m} strategies with Bob dimension {d_b} exceed the memory guardrail; use fewer measurements"
    )]
    TooLarge { m: usize, d_b: usize },
    #[error("bad-family: {0}")]
    BadFamily(String),
    #[error("solver {0}: the program could not be solved reliably")]
    SolverFailure(Status),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    State(#[from] crate::states::StateError),
    #[error("witness: {0}")]
    Witness(String),
}

pub type Result<T> = std::result::Result<T, LhsError>;

/// Which measurements the model covers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum LhsMode {
    Projective,
    Povm { gamma: DensityMatrix },
}

impl LhsMode {
    /// POVM mode with `γ = |0⟩⟨0|`.
    pub fn povm_default() -> Self {
        let gamma = DensityMatrix::pure(&[2], &[crate::operator::c(1.0, 0.0), crate::operator::c(0.0, 0.0)])
            .expect("|0> is a state");
        LhsMode::Povm { gamma }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LhsMode::Projective => "projective",
            LhsMode::Povm { .. } => "povm",
        }
    }

    pub fn gamma(&self) -> Option<&DensityMatrix> {
        match self {
            LhsMode::Projective => None,
            LhsMode::Povm { gamma } => Some(gamma),
        }
    }
}

/// `tr_A[(E ⊗ I) X]` for a qubit-or-larger first factor of side `d_a`.
pub fn conditional_operator(x: &CMatrix, effect: &CMatrix, d_a: usize) -> CMatrix {
    let d_b = x.nrows() / d_a;
    let mut out = CMatrix::zeros(d_b, d_b);
    for i in 0..d_a {
        for j in 0..d_a {
            let e = effect[(i, j)];
            if e.norm() == 0.0 {
                continue;
            }
            out += x.view((j * d_b, i * d_b), (d_b, d_b)) * e;
        }
    }
    out
}

fn bob_cut(dims: &[usize]) -> BipartiteCut {
    BipartiteCut::new(1..dims.len())
}

/// Bob's marginal `tr_A X` with Bob's dims preserved.
pub(crate) fn bob_marginal(x: &HermitianOperator) -> Result<HermitianOperator> {
    Ok(partial_trace(x, &bob_cut(x.dims()))?)
}

/// The state `ρ` that a certificate's `O` represents: projective
/// `rO + (1−r) I/2 ⊗ O_B`; POVM `½[rO + (1−r) I/2 ⊗ O_B] + ½ γ ⊗ O_B`.
pub fn reconstruct(o: &HermitianOperator, r: f64, mode: &LhsMode) -> Result<HermitianOperator> {
    let o_b = bob_marginal(o)?;
    let half_id = HermitianOperator::maximally_mixed(&[2]);
    let projective = &o.scale(r) + &tensor(&half_id, &o_b).scale(1.0 - r);
    Ok(match mode {
        LhsMode::Projective => projective,
        LhsMode::Povm { gamma } => &projective.scale(0.5) + &tensor(gamma.op(), &o_b).scale(0.5),
    })
}

/// Steering assemblage `σ_{a|x} = tr_A[(Π_{a|x} ⊗ I) ρ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Assemblage {
    bob_dims: Vec<usize>,
    // [x][a]
    elements: Vec<[HermitianOperator; 2]>,
}

impl Assemblage {
    pub fn element(&self, a: u8, x: usize) -> &HermitianOperator {
        &self.elements[x][a as usize]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn bob_dims(&self) -> &[usize] {
        &self.bob_dims
    }

    /// Largest deviation of `Σ_a σ_{a|x}` from `Σ_a σ_{a|0}`.
    pub fn no_signaling_residual(&self) -> f64 {
        let first = &self.elements[0][0] + &self.elements[0][1];
        self.elements.iter().map(|pair| (&pair[0] + &pair[1]).max_abs_diff(&first)).fold(0.0, f64::max)
    }
}

pub fn assemblage(rho: &DensityMatrix, set: &MeasurementSet) -> Result<Assemblage> {
    let dims = rho.dims();
    if dims.len() < 2 || dims[0] != 2 {
        return Err(LhsError::UnsupportedDim(format!("Alice must be a qubit, dims {dims:?}")));
    }
    let bob_dims = dims[1..].to_vec();
    let elements = set
        .directions()
        .iter()
        .map(|u| {
            let cond = |a: u8| {
                let m = conditional_operator(rho.op().entries(), projector(u, a).entries(), 2);
                HermitianOperator::new(bob_dims.clone(), m)
            };
            Ok([cond(0)?, cond(1)?])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Assemblage { bob_dims, elements })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HiddenState {
    pub lambda: DeterministicStrategy,
    pub op: HermitianOperator,
}

/// Solver-independent data backing an LHS model for one state.
#[derive(Clone, Debug, PartialEq)]
pub struct LhsCertificate {
    pub mode: LhsMode,
    pub set: MeasurementSet,
    pub r: f64,
    pub o: HermitianOperator,
    pub hidden: Vec<HiddenState>,
    /// Largest violation found by [`verify_certificate`] against the certified state.
    pub residual: f64,
    pub status: Status,
}

impl LhsCertificate {
    pub fn hidden_weight(&self) -> f64 {
        self.hidden.iter().map(|h| h.op.trace()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CertificateJson::from(self)).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        let j: CertificateJson = serde_json::from_str(s)?;
        Self::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct HiddenJson {
    lambda: String,
    op: HermitianOperator,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CertificateJson {
    mode: String,
    set: MeasurementSet,
    r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<DensityMatrix>,
    #[serde(rename = "O")]
    o: HermitianOperator,
    hidden_states: Vec<HiddenJson>,
    residual: f64,
    #[serde(default = "optimal")]
    solver_status: Status,
}

fn optimal() -> Status {
    Status::Optimal
}

impl From<&LhsCertificate> for CertificateJson {
    fn from(c: &LhsCertificate) -> Self {
        CertificateJson {
            mode: c.mode.name().to_string(),
            set: c.set.clone(),
            r: c.r,
            gamma: c.mode.gamma().cloned(),
            o: c.o.clone(),
            hidden_states: c
                .hidden
                .iter()
                .map(|h| HiddenJson { lambda: h.lambda.to_string(), op: h.op.clone() })
                .collect(),
            residual: c.residual,
            solver_status: c.status,
        }
    }
}

impl TryFrom<CertificateJson> for LhsCertificate {
    type Error = String;
    fn try_from(j: CertificateJson) -> std::result::Result<Self, String> {
        let mode = match (j.mode.as_str(), j.gamma) {
            ("projective", None) => LhsMode::Projective,
            ("povm", Some(gamma)) => LhsMode::Povm { gamma },
            ("povm", None) => LhsMode::povm_default(),
            (m, _) => return Err(format!("unknown or inconsistent mode {m:?}")),
        };
        if (j.r - j.set.insphere()).abs() > 1e-6 {
            return Err(format!("r = {} does not match the set's insphere {}", j.r, j.set.insphere()));
        }
        let m = j.set.len();
        let hidden = j
            .hidden_states
            .into_iter()
            .map(|h| {
                let lambda: DeterministicStrategy = h.lambda.parse().map_err(|e: GeometryError| e.to_string())?;
                if lambda.len() != m {
                    return Err(format!("strategy {} has length {}, expected {m}", h.lambda, lambda.len()));
                }
                Ok(HiddenState { lambda, op: h.op })
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        Ok(LhsCertificate { mode, set: j.set, r: j.r, o: j.o, hidden, residual: j.residual, status: j.solver_status })
    }
}

/// Residuals recomputed from a certificate and the state it claims to model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Steering equalities `tr_A[(Π_{a|x}⊗I)O] = Σ_λ D_λ(a|x) ρ_λ`.
    pub lhs_residual: f64,
    /// `ρ` against its reconstruction from `O`.
    pub reconstruction_residual: f64,
    /// Noisy-measurement identity on random directions.
    pub depolarization_residual: f64,
    pub trace_o_error: f64,
    pub weight_error: f64,
    pub min_hidden_eigenvalue: f64,
    pub max_violation: f64,
    pub flagged: bool,
}

/// Checks a certificate against `rho` without any solver.
pub fn verify_certificate(cert: &LhsCertificate, rho: &DensityMatrix) -> Result<VerificationReport> {
    let dims = rho.dims();
    if cert.o.dims() != dims {
        return Err(LhsError::UnsupportedDim(format!(
            "certificate dims {:?} do not match state dims {:?}",
            cert.o.dims(),
            dims
        )));
    }
    let o = cert.o.entries();
    let m = cert.set.len();
    let mut by_lambda: BTreeMap<usize, &HermitianOperator> = BTreeMap::new();
    for h in &cert.hidden {
        by_lambda.insert(h.lambda.index(), &h.op);
    }

    let mut lhs_residual: f64 = 0.0;
    for (x, u) in cert.set.directions().iter().enumerate() {
        for a in 0..2u8 {
            let lhs = conditional_operator(o, projector(u, a).entries(), 2);
            let mut rhs = CMatrix::zeros(lhs.nrows(), lhs.ncols());
            for (&idx, op) in &by_lambda {
                if DeterministicStrategy::from_index(idx, m).outcome(x) == a {
                    rhs += op.entries();
                }
            }
            lhs_residual = lhs_residual.max(max_abs(&(lhs - rhs)));
        }
    }

    let rebuilt = reconstruct(&cert.o, cert.r, &cert.mode)?;
    let reconstruction_residual = rebuilt.max_abs_diff(rho.op());

    let mut rng = RngStream::new(0x5eed, 0);
    let mut depolarization_residual: f64 = 0.0;
    for _ in 0..VERIFY_DIRECTIONS {
        let u = BlochDirection::sample(&mut rng);
        for a in 0..2u8 {
            let noisy = depolarized_projector(&u, a, cert.r)?;
            let effective = match &cert.mode {
                LhsMode::Projective => noisy.entries().clone(),
                LhsMode::Povm { gamma } => {
                    let flag = projector(&u, a).inner(gamma.op());
                    (noisy.entries() + CMatrix::identity(2, 2).map(|z| z * flag)).map(|z| z * 0.5)
                }
            };
            let lhs = conditional_operator(o, &effective, 2);
            let rhs = conditional_operator(rho.op().entries(), projector(&u, a).entries(), 2);
            depolarization_residual = depolarization_residual.max(max_abs(&(lhs - rhs)));
        }
    }

    let trace_o_error = (cert.o.trace() - 1.0).abs();
    let weight_error = (cert.hidden_weight() - 1.0).abs();
    let min_hidden_eigenvalue = cert.hidden.iter().map(|h| h.op.min_eigenvalue()).fold(f64::INFINITY, f64::min);
    let max_violation = lhs_residual
        .max(reconstruction_residual)
        .max(depolarization_residual)
        .max(trace_o_error)
        .max(weight_error)
        .max(-min_hidden_eigenvalue.min(0.0));
    Ok(VerificationReport {
        lhs_residual,
        reconstruction_residual,
        depolarization_residual,
        trace_o_error,
        weight_error,
        min_hidden_eigenvalue,
        max_violation,
        flagged: max_violation > VERIFY_TOL,
    })
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Result of a certification attempt. Infeasibility never implies
/// nonlocality: the test is only sufficient.
#[derive(Clone, Debug)]
pub enum LhsOutcome {
    Certified(Box<LhsCertificate>),
    Inconclusive { status: Status, reason: String },
}

impl LhsOutcome {
    pub fn certificate(&self) -> Option<&LhsCertificate> {
        match self {
            LhsOutcome::Certified(c) => Some(c),
            LhsOutcome::Inconclusive { .. } => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, LhsOutcome::Certified(_))
    }
}

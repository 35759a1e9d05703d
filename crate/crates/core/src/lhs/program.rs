//! The steering-model SDP shared by certification, family optimization and
//! state generation.

use crate::conic::{
    scalar_times, solve, AffineExpr, ConicProgram, LinearMap, Objective, ProgramSpec, Solution, SolverConfig, Status,
    VarId,
};
use crate::geometry::{projector, DeterministicStrategy, MeasurementSet};
use crate::operator::{c, partial_transpose, BipartiteCut, CMatrix, DensityMatrix, HermitianOperator};

use super::{
    conditional_operator, reconstruct, verify_certificate, HiddenState, LhsCertificate, LhsError, LhsMode, LhsOutcome,
    Result, MAX_HIDDEN_ENTRIES, VERIFY_TOL,
};

/// Variables of the core program: `O`, and one hidden state per strategy.
pub(crate) struct LhsVars {
    pub o: VarId,
    pub hidden: Vec<VarId>,
    /// Uniform shift `t`: the hidden states are `σ_λ + t·I` with `σ_λ ⪰ 0`.
    pub slack: Option<VarId>,
    pub dims: Vec<usize>,
}

pub(crate) fn check_size(dims: &[usize], set: &MeasurementSet) -> Result<()> {
    if dims.len() < 2 || dims[0] != 2 {
        return Err(LhsError::UnsupportedDim(format!("Alice must be a qubit, dims {dims:?}")));
    }
    let d_b: usize = dims[1..].iter().product();
    if d_b > 4 {
        return Err(LhsError::UnsupportedDim(format!("Bob dimension {d_b} exceeds 4")));
    }
    let m = set.len();
    if m > crate::geometry::MAX_MEASUREMENTS || (1usize << m).saturating_mul(d_b * d_b) > MAX_HIDDEN_ENTRIES {
        return Err(LhsError::TooLarge { m, d_b });
    }
    Ok(())
}

fn op_on(dims: &[usize], m: &CMatrix) -> HermitianOperator {
    HermitianOperator::new(dims.to_vec(), m.clone()).expect("basis images are Hermitian")
}

/// Adds `O`, the hidden states, and the steering equalities. Bob with more
/// than one subsystem gets PPT hidden states across his first party. With
/// `slack`, every hidden state is shifted by a common scalar `t·I`.
pub(crate) fn add_lhs_core(
    spec: &mut ProgramSpec,
    dims: &[usize],
    set: &MeasurementSet,
    slack: bool,
) -> Result<LhsVars> {
    check_size(dims, set)?;
    let bob_dims = dims[1..].to_vec();
    let d_b: usize = bob_dims.iter().product();
    let m = set.len();
    let o = spec.free_variable(2 * d_b, "O");
    let hidden: Vec<VarId> = (0..1usize << m)
        .map(|i| spec.psd_variable(d_b, format!("rho_{}", DeterministicStrategy::from_index(i, m))))
        .collect();
    let slack = slack.then(|| spec.free_variable(1, "t"));
    let shift = scalar_times(&HermitianOperator::identity(&bob_dims));

    if bob_dims.len() > 1 {
        let cut = BipartiteCut::single(0);
        let bd = bob_dims.clone();
        let pt = LinearMap::from_fn(d_b, d_b, move |x| {
            partial_transpose(&op_on(&bd, x), &cut).expect("valid cut").into_entries()
        })?;
        for (i, &h) in hidden.iter().enumerate() {
            let mut expr = AffineExpr::zero(d_b).with_term(h, pt.clone());
            if let Some(t) = slack {
                expr.add_term(t, shift.clone());
            }
            spec.add_psd(format!("ppt_{}", DeterministicStrategy::from_index(i, m)), expr);
        }
    }

    let minus = LinearMap::identity(d_b).scaled(-1.0);
    for (x, u) in set.directions().iter().enumerate() {
        for a in 0..2u8 {
            let pi = projector(u, a).into_entries();
            let cond = LinearMap::from_fn(2 * d_b, d_b, move |xm| conditional_operator(xm, &pi, 2))?;
            let mut expr = AffineExpr::zero(d_b).with_term(o, cond);
            for (i, &h) in hidden.iter().enumerate() {
                if DeterministicStrategy::from_index(i, m).outcome(x) == a {
                    expr.add_term(h, minus.clone());
                    if let Some(t) = slack {
                        expr.add_term(t, shift.scaled(-1.0));
                    }
                }
            }
            spec.add_equality(format!("lhs_a{a}_x{x}"), expr);
        }
    }
    Ok(LhsVars { o, hidden, slack, dims: dims.to_vec() })
}

/// `X ↦ reconstruct(X)` as a linear map on `O`.
pub(crate) fn reconstruction_map(dims: &[usize], r: f64, mode: &LhsMode) -> Result<LinearMap> {
    let side: usize = dims.iter().product();
    let dims = dims.to_vec();
    let mode = mode.clone();
    Ok(LinearMap::from_fn(side, side, move |x| {
        reconstruct(&op_on(&dims, x), r, &mode).expect("dims are consistent").into_entries()
    })?)
}

pub(crate) fn minus_one() -> HermitianOperator {
    HermitianOperator::from_parts(vec![1], CMatrix::from_element(1, 1, c(-1.0, 0.0)))
}

pub(crate) fn unit_trace(spec: &mut ProgramSpec, vars: &LhsVars) {
    let side: usize = vars.dims.iter().product();
    spec.add_equality("trace_O", AffineExpr::constant(&minus_one()).with_term(vars.o, LinearMap::trace(side)));
}

/// Collects a certificate from solved values and verifies it against `rho`.
pub(crate) fn extract_certificate(
    sol: &Solution,
    vars: &LhsVars,
    set: &MeasurementSet,
    mode: &LhsMode,
    rho: &DensityMatrix,
) -> Result<(LhsCertificate, super::VerificationReport)> {
    let m = set.len();
    let o = sol.values[&vars.o].with_dims(vars.dims.clone())?;
    let bob_dims = vars.dims[1..].to_vec();
    let t = vars.slack.map_or(0.0, |t| sol.values[&t].entries()[(0, 0)].re);
    let shift = HermitianOperator::identity(&bob_dims).scale(t);
    let hidden = vars
        .hidden
        .iter()
        .enumerate()
        .map(|(i, id)| {
            Ok(HiddenState {
                lambda: DeterministicStrategy::from_index(i, m),
                op: &sol.values[id].with_dims(bob_dims.clone())? + &shift,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cert = LhsCertificate {
        mode: mode.clone(),
        set: set.clone(),
        r: set.insphere(),
        o,
        hidden,
        residual: 0.0,
        status: sol.status,
    };
    let report = verify_certificate(&cert, rho)?;
    cert.residual = report.max_violation;
    Ok((cert, report))
}

fn infeasible() -> LhsOutcome {
    LhsOutcome::Inconclusive {
        status: Status::Infeasible,
        reason: "no LHS decomposition for this measurement set; the test is inconclusive".into(),
    }
}

/// Maps a solved program to an outcome; failures that are not infeasibility
/// are errors.
pub(crate) fn classify(sol: &Solution) -> Result<Option<LhsOutcome>> {
    match sol.status {
        Status::Optimal | Status::Inaccurate => Ok(None),
        Status::Infeasible => Ok(Some(infeasible())),
        other => Err(LhsError::SolverFailure(other)),
    }
}

/// SDP (10) for a fixed state: find `O` with `ρ = reconstruct(O)` whose
/// steering equalities decompose into PSD hidden states.
pub fn certify(rho: &DensityMatrix, set: &MeasurementSet, mode: &LhsMode, config: &SolverConfig) -> Result<LhsOutcome> {
    let (program, vars) = certification_program(rho, set, mode)?;
    let sol = solve(&program, config)?;
    if let Some(outcome) = classify(&sol)? {
        return Ok(outcome);
    }
    let (cert, report) = extract_certificate(&sol, &vars, set, mode, rho)?;
    if report.max_violation > VERIFY_TOL {
        let t = vars.slack.map_or(0.0, |t| sol.values[&t].entries()[(0, 0)].re);
        if t < -VERIFY_TOL {
            return Ok(infeasible());
        }
        return Ok(LhsOutcome::Inconclusive {
            status: sol.status,
            reason: format!("solver point fails verification (violation {:.3e})", report.max_violation),
        });
    }
    Ok(LhsOutcome::Certified(Box::new(cert)))
}

pub(crate) fn certification_program(
    rho: &DensityMatrix,
    set: &MeasurementSet,
    mode: &LhsMode,
) -> Result<(ConicProgram, LhsVars)> {
    let mut spec = ProgramSpec::new();
    let vars = add_lhs_core(&mut spec, rho.dims(), set, true)?;
    if let Some(t) = vars.slack {
        spec.maximize(Objective::new().with_trace(t, 1, 1.0));
    }
    let recon = reconstruction_map(rho.dims(), set.insphere(), mode)?;
    spec.add_equality("reconstruction", AffineExpr::constant(&-rho.op()).with_term(vars.o, recon));
    Ok((spec.assemble()?, vars))
}

/// Projective test: Alice's projective measurements.
pub fn certify_projective(rho: &DensityMatrix, set: &MeasurementSet, config: &SolverConfig) -> Result<LhsOutcome> {
    certify(rho, set, &LhsMode::Projective, config)
}

/// POVM test: Alice's POVMs, with flag state `gamma`.
pub fn certify_povm(
    rho: &DensityMatrix,
    set: &MeasurementSet,
    gamma: &DensityMatrix,
    config: &SolverConfig,
) -> Result<LhsOutcome> {
    if gamma.dims() != [2] {
        return Err(LhsError::UnsupportedDim("gamma must be a qubit state".into()));
    }
    certify(rho, set, &LhsMode::Povm { gamma: gamma.clone() }, config)
}

/// Three-qubit states with Bob holding two qubits; hidden states are PPT.
pub fn certify_multipartite(
    rho: &DensityMatrix,
    set: &MeasurementSet,
    mode: &LhsMode,
    config: &SolverConfig,
) -> Result<LhsOutcome> {
    if rho.dims() != [2, 2, 2] {
        return Err(LhsError::UnsupportedDim(format!("expected dims [2, 2, 2], got {:?}", rho.dims())));
    }
    certify(rho, set, mode, config)
}

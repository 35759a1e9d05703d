//! Witness-driven search for entangled states with LHS models.

use serde::{Deserialize, Serialize};

use crate::conic::{solve, AffineExpr, LinearMap, Objective, ProgramSpec, SolverConfig, Status};
use crate::geometry::MeasurementSet;
use crate::operator::{DensityMatrix, HermitianOperator};
use crate::witness::{optimal_witness, QuantifierKind, WitnessConfig};

use super::program::{add_lhs_core, extract_certificate, reconstruction_map, unit_trace};
use super::{LhsCertificate, LhsError, LhsMode, Result};

pub const DEFAULT_GENERATOR_TOL: f64 = 1e-5;
pub const DEFAULT_GENERATOR_ITERS: usize = 50;

#[derive(Clone, Debug)]
pub struct GeneratedState {
    pub state: DensityMatrix,
    pub certificate: LhsCertificate,
    /// `tr[Wρ*]`; negative means the state is entangled.
    pub witness_value: f64,
}

/// Minimizes `tr[Wρ]` over states `ρ = reconstruct(O)` admitting the
/// steering decomposition.
pub fn generate_local_state(
    w: &HermitianOperator,
    set: &MeasurementSet,
    mode: &LhsMode,
    config: &SolverConfig,
) -> Result<GeneratedState> {
    let dims = w.dims().to_vec();
    let side: usize = dims.iter().product();
    let mut spec = ProgramSpec::new();
    let vars = add_lhs_core(&mut spec, &dims, set, false)?;
    unit_trace(&mut spec, &vars);
    let rho = spec.psd_variable(side, "rho");
    spec.add_equality(
        "reconstruction",
        AffineExpr::zero(side)
            .with_term(vars.o, reconstruction_map(&dims, set.insphere(), mode)?)
            .with_term(rho, LinearMap::identity(side).scaled(-1.0)),
    );
    spec.minimize(Objective::new().with(rho, w));
    let program = spec.assemble()?;
    let sol = solve(&program, config)?;
    match sol.status {
        Status::Optimal | Status::Inaccurate => {}
        other => return Err(LhsError::SolverFailure(other)),
    }
    let state = DensityMatrix::from_nearly_psd(&sol.values[&rho].with_dims(dims)?)?;
    let (certificate, _) = extract_certificate(&sol, &vars, set, mode, &state)?;
    let witness_value = w.inner(state.op());
    Ok(GeneratedState { state, certificate, witness_value })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorStep {
    pub state: DensityMatrix,
    #[serde(rename = "W")]
    pub witness: HermitianOperator,
    #[serde(rename = "E")]
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorTrace {
    pub steps: Vec<GeneratorStep>,
    pub converged: bool,
    /// Set when an inner solve failed; the steps so far are kept.
    pub error: Option<String>,
}

impl GeneratorTrace {
    pub fn last(&self) -> Option<&GeneratorStep> {
        self.steps.last()
    }

    pub fn values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.value).collect()
    }
}

/// Alternates optimal witnesses and witness-driven generation, starting
/// from `seed`, until `|E_{k+1} − E_k| < tol` or `max_iters` generations.
/// Step 0 is the seed itself.
pub fn iterate_generator(
    seed: &DensityMatrix,
    quantifier: QuantifierKind,
    set: &MeasurementSet,
    mode: &LhsMode,
    max_iters: usize,
    tol: f64,
    config: &WitnessConfig,
) -> Result<GeneratorTrace> {
    if max_iters == 0 {
        return Err(LhsError::BadFamily("max_iters must be at least 1".into()));
    }
    let mut trace = GeneratorTrace { steps: Vec::new(), converged: false, error: None };
    let first = optimal_witness(seed, quantifier, config).map_err(|e| LhsError::Witness(e.to_string()))?;
    let Some(w0) = first.w else {
        return Err(LhsError::Witness(format!("{quantifier} has no finite witness for the seed")));
    };
    trace.steps.push(GeneratorStep { state: seed.clone(), witness: w0, value: first.e });
    for _ in 0..max_iters {
        let prev = trace.steps.last().expect("non-empty");
        let generated = match generate_local_state(&prev.witness, set, mode, &config.solver) {
            Ok(g) => g,
            Err(e) => {
                trace.error = Some(e.to_string());
                return Ok(trace);
            }
        };
        let next = match optimal_witness(&generated.state, quantifier, config) {
            Ok(r) => r,
            Err(e) => {
                trace.error = Some(e.to_string());
                return Ok(trace);
            }
        };
        let delta = (next.e - prev.value).abs();
        let Some(w) = next.w else {
            trace.error = Some(format!("{quantifier} has no finite witness for the generated state"));
            return Ok(trace);
        };
        trace.steps.push(GeneratorStep { state: generated.state, witness: w, value: next.e });
        if delta < tol {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

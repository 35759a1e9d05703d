use std::collections::BTreeMap;
use std::time::Instant;

use lhs_core::conic::SolverConfig;
use lhs_core::geometry::MeasurementSet;
use lhs_core::lhs::{bisect_threshold, LhsCertificate, LhsMode};
use lhs_core::states::make_state;
use serde::Serialize;

use super::seconds;
use crate::error::{CliError, Result};

/// A one-parameter slice of a named family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BisectionSpec {
    pub family: String,
    pub parameter: String,
    /// Other parameters of the family, held fixed.
    pub fixed: BTreeMap<String, f64>,
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl BisectionSpec {
    /// The family's usual scan parameter and a bracket whose low end is
    /// certifiable for the built-in solids.
    pub fn default_for(family: &str) -> Result<Self> {
        let (parameter, lo) = match family {
            "werner" => ("w", 0.0),
            // below 1 − r Alice's reconstructed operator loses positivity
            "amplitude-damped" => ("eta", 0.3),
            "ghz" | "w" => ("p", 0.0),
            other => return Err(CliError::BadInput(format!("no default bisection for family {other:?}"))),
        };
        Ok(Self {
            family: family.to_string(),
            parameter: parameter.to_string(),
            fixed: BTreeMap::new(),
            lo,
            hi: 1.0,
            tol: 1e-3,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !(self.tol > 0.0) {
            return Err(CliError::BadInput(format!(
                "need lo < hi and tol > 0, got [{}, {}] tol {}",
                self.lo, self.hi, self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BisectionSummary {
    pub spec: BisectionSpec,
    pub set: String,
    pub mode: String,
    /// Largest certified parameter.
    pub threshold: f64,
    /// Smallest parameter found inconclusive; equals `hi` when all certify.
    pub inconclusive_at: f64,
    pub steps: usize,
    pub residual: Option<f64>,
    pub wall_time: f64,
}

/// Bisects certification over `spec.parameter`. An inconclusive low end is
/// a `bad-bracket` error.
pub fn run_threshold_bisection(
    spec: &BisectionSpec,
    set: &MeasurementSet,
    mode: &LhsMode,
    solver: &SolverConfig,
) -> Result<(BisectionSummary, Option<LhsCertificate>)> {
    spec.validate()?;
    let start = Instant::now();
    let family = |theta: f64| -> lhs_core::lhs::Result<lhs_core::DensityMatrix> {
        let mut params = spec.fixed.clone();
        params.insert(spec.parameter.clone(), theta);
        Ok(make_state(&spec.family, &params)?.state)
    };
    // surface bad family names and parameters as input errors before solving
    family(spec.lo)?;
    let res = bisect_threshold(family, spec.lo, spec.hi, spec.tol, set, mode, solver)?;
    if res.certified.is_nan() {
        return Err(CliError::BadBracket(format!(
            "{} at {} = {} admits no certificate with {}",
            spec.family,
            spec.parameter,
            spec.lo,
            set.name()
        )));
    }
    let summary = BisectionSummary {
        spec: spec.clone(),
        set: set.name().to_string(),
        mode: mode.name().to_string(),
        threshold: res.certified,
        inconclusive_at: res.inconclusive,
        steps: res.steps,
        residual: res.certificate.as_ref().map(|c| c.residual),
        wall_time: seconds(start),
    };
    Ok((summary, res.certificate))
}

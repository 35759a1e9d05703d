use std::time::Instant;

use lhs_core::lhs::{certify, iterate_generator, LhsOutcome, DEFAULT_GENERATOR_ITERS, DEFAULT_GENERATOR_TOL};
use lhs_core::operator::{negativity, trace_distance};
use lhs_core::states::{sample_bures, sample_hs, sample_pure_dims};
use lhs_core::witness::{QuantifierKind, WitnessConfig};
use lhs_core::{BipartiteCut, DensityMatrix, RngStream};
use serde::{Deserialize, Serialize};

use super::{run_jobs, seconds, store_certified};
use crate::config::{CampaignConfig, CampaignMetadata};
use crate::error::{CliError, Result};
use crate::output::{write_csv, write_json};
use crate::stats::{histogram, moments, HistogramBin, Moments};

pub const RECORDS_SCHEMA: &str = "generator-records";
pub const HISTOGRAM_SCHEMA: &str = "histogram";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedKind {
    Pure,
    Hs,
    Bures,
}

impl std::str::FromStr for SeedKind {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure" => Ok(SeedKind::Pure),
            "hs" => Ok(SeedKind::Hs),
            "bures" => Ok(SeedKind::Bures),
            other => Err(CliError::BadInput(format!("unknown seed kind {other:?} (pure, hs, bures)"))),
        }
    }
}

impl SeedKind {
    fn sample(self, rng: &mut RngStream) -> DensityMatrix {
        match self {
            SeedKind::Pure => sample_pure_dims(&[2, 2], rng),
            SeedKind::Hs => sample_hs(rng),
            SeedKind::Bures => sample_bures(rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeneratorSettings {
    pub quantifier: QuantifierKind,
    pub max_iters: usize,
    pub tol: f64,
    pub seeds: SeedKind,
    pub negativity_bin: f64,
    pub distance_bin: f64,
    /// Pairwise distances use at most this many terminal states.
    pub distance_sample: usize,
}

impl Default for GeneratorSettings {
    fn default() -> Self {
        Self {
            quantifier: QuantifierKind::OneSidedGeneralizedRobustness,
            max_iters: DEFAULT_GENERATOR_ITERS,
            tol: DEFAULT_GENERATOR_TOL,
            seeds: SeedKind::Pure,
            negativity_bin: 0.002,
            distance_bin: 0.02,
            distance_sample: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRecord {
    pub run_id: usize,
    pub seed: u64,
    pub stream: u64,
    /// Generated states, not counting the seed.
    pub steps: usize,
    pub converged: bool,
    pub quantifier_value: Option<f64>,
    pub negativity: Option<f64>,
    /// The terminal state re-certified from scratch.
    pub certified: bool,
    pub residual: Option<f64>,
    pub wall_time: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorSummary {
    pub metadata: CampaignMetadata,
    pub settings: GeneratorSettings,
    pub runs: usize,
    /// Runs that produced at least one generated state.
    pub completed: usize,
    pub recertified: usize,
    pub failures: usize,
    pub negativity: Moments,
    pub trace_distance: Moments,
    pub wall_time: f64,
}

pub struct GeneratorOutput {
    pub summary: GeneratorSummary,
    pub records: Vec<GeneratorRecord>,
    pub states: Vec<Option<DensityMatrix>>,
    pub negativity_histogram: Vec<HistogramBin>,
    pub distance_histogram: Vec<HistogramBin>,
}

/// Iterates the generator from random seeds and re-certifies every terminal
/// state. Writes records, both histograms and a summary under `cfg.out`.
pub fn run_generator_campaign(cfg: &CampaignConfig, settings: &GeneratorSettings) -> Result<GeneratorOutput> {
    cfg.validate()?;
    if !(settings.negativity_bin > 0.0 && settings.distance_bin > 0.0) {
        return Err(CliError::BadInput("histogram bin widths must be positive".into()));
    }
    let start = Instant::now();
    let set = cfg.set.build(cfg.seed)?;
    let wcfg = WitnessConfig { solver: cfg.solver, ..WitnessConfig::default() };
    let cut = BipartiteCut::single(0);
    let runs = run_jobs(cfg.workers, cfg.samples, |i| -> Result<(GeneratorRecord, Option<DensityMatrix>)> {
        let t0 = Instant::now();
        let mut rng = RngStream::new(cfg.seed, i as u64);
        let seed = settings.seeds.sample(&mut rng);
        let mut rec = GeneratorRecord {
            run_id: i,
            seed: cfg.seed,
            stream: i as u64,
            steps: 0,
            converged: false,
            quantifier_value: None,
            negativity: None,
            certified: false,
            residual: None,
            wall_time: 0.0,
            error: None,
        };
        let trace = match iterate_generator(
            &seed,
            settings.quantifier,
            &set,
            &cfg.mode,
            settings.max_iters,
            settings.tol,
            &wcfg,
        ) {
            Ok(t) => t,
            Err(e) => {
                rec.error = Some(e.to_string());
                rec.wall_time = seconds(t0);
                return Ok((rec, None));
            }
        };
        rec.steps = trace.steps.len() - 1;
        rec.converged = trace.converged;
        rec.error = trace.error.clone();
        if rec.steps == 0 {
            rec.error.get_or_insert_with(|| "no state generated".into());
            rec.wall_time = seconds(t0);
            return Ok((rec, None));
        }
        let last = trace.last().expect("seed step present");
        let state = last.state.clone();
        rec.quantifier_value = Some(last.value);
        rec.negativity = Some(negativity(&state, &cut)?);
        match certify(&state, &set, &cfg.mode, &cfg.solver) {
            Ok(LhsOutcome::Certified(cert)) => {
                store_certified(&cfg.out, "generated-", i, &state, &cert)?;
                rec.certified = true;
                rec.residual = Some(cert.residual);
            }
            Ok(LhsOutcome::Inconclusive { reason, .. }) => {
                rec.error.get_or_insert(format!("re-certification inconclusive: {reason}"));
            }
            Err(e) => {
                rec.error.get_or_insert(format!("re-certification failed: {e}"));
            }
        }
        rec.wall_time = seconds(t0);
        Ok((rec, Some(state)))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let (records, states): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let negativities: Vec<f64> = records.iter().filter_map(|r| r.negativity).collect();
    let terminal: Vec<&DensityMatrix> = states.iter().flatten().take(settings.distance_sample).collect();
    let mut distances = Vec::with_capacity(terminal.len() * terminal.len().saturating_sub(1) / 2);
    for (a, rho) in terminal.iter().enumerate() {
        for sigma in &terminal[a + 1..] {
            distances.push(trace_distance(rho, sigma)?);
        }
    }
    let summary = GeneratorSummary {
        metadata: cfg.metadata(),
        settings: *settings,
        runs: records.len(),
        completed: negativities.len(),
        recertified: records.iter().filter(|r| r.certified).count(),
        failures: records.iter().filter(|r| r.negativity.is_none()).count(),
        negativity: moments(&negativities),
        trace_distance: moments(&distances),
        wall_time: seconds(start),
    };
    let negativity_histogram = histogram(&negativities, settings.negativity_bin);
    let distance_histogram = histogram(&distances, settings.distance_bin);
    write_csv(&cfg.out.join("records.csv"), RECORDS_SCHEMA, &records)?;
    write_csv(&cfg.out.join("negativity_histogram.csv"), HISTOGRAM_SCHEMA, &negativity_histogram)?;
    write_csv(&cfg.out.join("distance_histogram.csv"), HISTOGRAM_SCHEMA, &distance_histogram)?;
    write_json(&cfg.out.join("summary.json"), &summary)?;
    Ok(GeneratorOutput { summary, records, states, negativity_histogram, distance_histogram })
}

use std::time::Instant;

use lhs_core::lhs::{generate_local_state, verify_certificate, VERIFY_TOL};
use lhs_core::states::sample_pure_dims;
use lhs_core::witness::gme_witness;
use lhs_core::RngStream;
use serde::{Deserialize, Serialize};

use super::{run_jobs, seconds, store_certified};
use crate::config::{CampaignConfig, CampaignMetadata};
use crate::error::{CliError, Result};
use crate::output::{write_csv, write_json};

pub const RECORDS_SCHEMA: &str = "gme-records";

/// A generated state counts as genuinely tripartite entangled below this
/// witness value.
pub const GME_THRESHOLD: f64 = -1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GmeSettings {
    /// Witness/generation alternations per run.
    pub rounds: usize,
}

impl Default for GmeSettings {
    fn default() -> Self {
        Self { rounds: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmeRecord {
    pub run_id: usize,
    pub seed: u64,
    pub stream: u64,
    pub rounds: usize,
    /// GME witness value of the last generated state.
    pub gme_value: Option<f64>,
    pub residual: Option<f64>,
    pub success: bool,
    pub wall_time: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GmeSummary {
    pub metadata: CampaignMetadata,
    pub settings: GmeSettings,
    pub runs: usize,
    pub successes: usize,
    pub failures: usize,
    pub best_value: Option<f64>,
    pub wall_time: f64,
}

pub struct GmeOutput {
    pub summary: GmeSummary,
    pub records: Vec<GmeRecord>,
}

fn run_one(
    cfg: &CampaignConfig,
    settings: &GmeSettings,
    set: &lhs_core::geometry::MeasurementSet,
    i: usize,
    rec: &mut GmeRecord,
) -> Result<()> {
    let mut rng = RngStream::new(cfg.seed, i as u64);
    let mut state = sample_pure_dims(&[2, 2, 2], &mut rng);
    let mut witness = gme_witness(&state, &cfg.solver)?;
    for round in 1..=settings.rounds {
        if witness.value >= GME_THRESHOLD {
            break;
        }
        let generated = generate_local_state(&witness.w, set, &cfg.mode, &cfg.solver)?;
        rec.rounds = round;
        state = generated.state;
        witness = gme_witness(&state, &cfg.solver)?;
        let report = verify_certificate(&generated.certificate, &state)?;
        rec.gme_value = Some(witness.value);
        rec.residual = Some(report.max_violation);
        if witness.value < GME_THRESHOLD && !report.flagged && witness.reconstruction_residual() <= VERIFY_TOL {
            store_certified(&cfg.out, "gme-", i, &state, &generated.certificate)?;
            write_json(&cfg.out.join("witnesses").join(format!("gme-{i:06}.json")), &witness)?;
            rec.success = true;
            return Ok(());
        }
    }
    Ok(())
}

/// Alternates the GME witness and multipartite generation from random pure
/// three-qubit seeds. A success is a generated state the witness detects
/// whose certificate verifies.
pub fn run_gme_campaign(cfg: &CampaignConfig, settings: &GmeSettings) -> Result<GmeOutput> {
    cfg.validate()?;
    if settings.rounds == 0 {
        return Err(CliError::BadInput("rounds must be at least 1".into()));
    }
    let start = Instant::now();
    let set = cfg.set.build(cfg.seed)?;
    let records = run_jobs(cfg.workers, cfg.samples, |i| {
        let t0 = Instant::now();
        let mut rec = GmeRecord {
            run_id: i,
            seed: cfg.seed,
            stream: i as u64,
            rounds: 0,
            gme_value: None,
            residual: None,
            success: false,
            wall_time: 0.0,
            error: None,
        };
        if let Err(e) = run_one(cfg, settings, &set, i, &mut rec) {
            rec.error = Some(e.to_string());
        }
        rec.wall_time = seconds(t0);
        rec
    })?;
    let summary = GmeSummary {
        metadata: cfg.metadata(),
        settings: *settings,
        runs: records.len(),
        successes: records.iter().filter(|r| r.success).count(),
        failures: records.iter().filter(|r| r.error.is_some()).count(),
        best_value: records.iter().filter_map(|r| r.gme_value).reduce(f64::min),
        wall_time: seconds(start),
    };
    write_csv(&cfg.out.join("records.csv"), RECORDS_SCHEMA, &records)?;
    write_json(&cfg.out.join("summary.json"), &summary)?;
    Ok(GmeOutput { summary, records })
}

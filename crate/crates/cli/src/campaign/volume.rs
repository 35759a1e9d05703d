use std::time::Instant;

use lhs_core::geometry::Solid;
use lhs_core::lhs::{certify, LhsOutcome};
use lhs_core::operator::{is_ppt, negativity, DEFAULT_PPT_TOL};
use lhs_core::states::SamplingMeasure;
use lhs_core::{BipartiteCut, RngStream};
use serde::{Deserialize, Serialize};

use super::{run_jobs, seconds, store_certified};
use crate::config::{CampaignConfig, CampaignMetadata, SetChoice};
use crate::error::Result;
use crate::output::{write_csv, write_json};
use crate::stats::{wilson, Proportion};

pub const RECORDS_SCHEMA: &str = "volume-records";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub state_id: usize,
    pub seed: u64,
    pub stream: u64,
    pub entangled: bool,
    pub certified: bool,
    pub negativity: f64,
    pub wall_time: f64,
    pub residual: Option<f64>,
    /// `separable`, `certified`, `inconclusive` or `failure`.
    pub status: String,
    pub error: Option<String>,
}

/// Published fractions for the icosahedron with projective measurements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VolumeReferences {
    pub separable: f64,
    pub lhs_of_entangled: f64,
    /// A second published estimate, where one exists.
    pub lhs_of_entangled_alt: Option<f64>,
}

impl VolumeReferences {
    pub fn for_measure(measure: SamplingMeasure) -> Self {
        match measure {
            SamplingMeasure::Hs => Self { separable: 0.242, lhs_of_entangled: 0.19, lhs_of_entangled_alt: Some(0.25) },
            SamplingMeasure::Bures => Self { separable: 0.073, lhs_of_entangled: 0.05, lhs_of_entangled_alt: None },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeSummary {
    pub metadata: CampaignMetadata,
    pub measure: SamplingMeasure,
    pub separable: Proportion,
    /// Certified over entangled states whose solve did not fail.
    pub lhs_of_entangled: Proportion,
    pub inconclusive: usize,
    pub failures: usize,
    pub references: Option<VolumeReferences>,
    pub wall_time: f64,
}

pub struct VolumeOutput {
    pub summary: VolumeSummary,
    pub records: Vec<CampaignRecord>,
}

/// Samples states, splits them by PPT and certifies the entangled ones.
/// Writes `records.csv`, `summary.json` and one state/certificate pair per
/// certified row under `cfg.out`.
pub fn run_volume_estimation(cfg: &CampaignConfig, measure: SamplingMeasure) -> Result<VolumeOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let set = cfg.set.build(cfg.seed)?;
    let cut = BipartiteCut::single(0);
    let records = run_jobs(cfg.workers, cfg.samples, |i| -> Result<CampaignRecord> {
        let t0 = Instant::now();
        let mut rng = RngStream::new(cfg.seed, i as u64);
        let rho = measure.sample(&mut rng);
        let entangled = !is_ppt(&rho, &cut, DEFAULT_PPT_TOL)?;
        let mut rec = CampaignRecord {
            state_id: i,
            seed: cfg.seed,
            stream: i as u64,
            entangled,
            certified: false,
            negativity: negativity(&rho, &cut)?,
            wall_time: 0.0,
            residual: None,
            status: "separable".into(),
            error: None,
        };
        if entangled {
            match certify(&rho, &set, &cfg.mode, &cfg.solver) {
                Ok(LhsOutcome::Certified(cert)) => {
                    store_certified(&cfg.out, "volume-", i, &rho, &cert)?;
                    rec.certified = true;
                    rec.residual = Some(cert.residual);
                    rec.status = "certified".into();
                }
                Ok(LhsOutcome::Inconclusive { .. }) => rec.status = "inconclusive".into(),
                Err(e) => {
                    rec.status = "failure".into();
                    rec.error = Some(e.to_string());
                }
            }
        }
        rec.wall_time = seconds(t0);
        Ok(rec)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let count = |s: &str| records.iter().filter(|r| r.status == s).count();
    let failures = count("failure");
    let entangled = records.iter().filter(|r| r.entangled).count();
    let references = (cfg.set == SetChoice::Solid(Solid::Icosahedron) && cfg.mode.gamma().is_none())
        .then(|| VolumeReferences::for_measure(measure));
    let summary = VolumeSummary {
        metadata: cfg.metadata(),
        measure,
        separable: wilson(records.len() - entangled, records.len()),
        lhs_of_entangled: wilson(count("certified"), entangled - failures),
        inconclusive: count("inconclusive"),
        failures,
        references,
        wall_time: seconds(start),
    };
    write_csv(&cfg.out.join("records.csv"), RECORDS_SCHEMA, &records)?;
    write_json(&cfg.out.join("summary.json"), &summary)?;
    Ok(VolumeOutput { summary, records })
}

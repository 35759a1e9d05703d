//! Batch campaigns. Job `i` always draws from `RngStream::new(seed, i)`, so
//! the set of rows does not depend on the worker count.

mod bisection;
mod generator;
mod gme;
mod tables;
mod volume;

use std::path::{Path, PathBuf};

use lhs_core::lhs::LhsCertificate;
use lhs_core::DensityMatrix;
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::output::write_json;

pub use bisection::{run_threshold_bisection, BisectionSpec, BisectionSummary};
pub use generator::{
    run_generator_campaign, GeneratorOutput, GeneratorRecord, GeneratorSettings, GeneratorSummary, SeedKind,
};
pub use gme::{run_gme_campaign, GmeOutput, GmeRecord, GmeSettings, GmeSummary};
pub use tables::{reference_row, run_table_reproduction, ReferenceRow, TableCell, REFERENCE_TABLE};
pub use volume::{run_volume_estimation, CampaignRecord, VolumeOutput, VolumeReferences, VolumeSummary};

/// Runs `job(0..n)` on a pool of `workers` threads; results keep job order.
pub fn run_jobs<T, F>(workers: usize, n: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::BadInput(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(job).collect()))
}

pub fn certificate_path(out: &Path, prefix: &str, id: usize) -> PathBuf {
    out.join("certificates").join(format!("{prefix}{id:06}.json"))
}

pub fn state_path(out: &Path, prefix: &str, id: usize) -> PathBuf {
    out.join("states").join(format!("{prefix}{id:06}.json"))
}

/// Stores a state and its certificate side by side.
pub fn store_certified(
    out: &Path,
    prefix: &str,
    id: usize,
    state: &DensityMatrix,
    cert: &LhsCertificate,
) -> Result<()> {
    write_json(&state_path(out, prefix, id), state)?;
    crate::output::write_text(&certificate_path(out, prefix, id), &cert.to_json())
}

/// Loads a stored pair and re-runs certificate verification.
pub fn reverify_from_disk(out: &Path, prefix: &str, id: usize) -> Result<lhs_core::lhs::VerificationReport> {
    let state: DensityMatrix = crate::output::read_json(&state_path(out, prefix, id))?;
    let text = std::fs::read_to_string(certificate_path(out, prefix, id))?;
    let cert = LhsCertificate::from_json(&text)?;
    Ok(lhs_core::lhs::verify_certificate(&cert, &state)?)
}

pub(crate) fn seconds(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

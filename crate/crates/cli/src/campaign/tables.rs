use std::time::Instant;

use lhs_core::geometry::{solid_directions, Solid};
use lhs_core::lhs::{maximize_family, FamilySpec};
use lhs_core::operator::negativity;
use lhs_core::BipartiteCut;
use serde::{Deserialize, Serialize};

use super::{run_jobs, seconds};
use crate::config::CampaignConfig;
use crate::error::Result;
use crate::output::{write_csv, write_json};

pub const TABLE_SCHEMA: &str = "family-table";

/// One row of the published optimum table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceRow {
    pub solid: Solid,
    pub vertices: usize,
    pub radius: f64,
    pub werner: f64,
    pub werner_negativity: f64,
    /// Rank-3 Bell-diagonal optimum `p₁*`.
    pub bell: f64,
    pub bell_negativity: f64,
    /// Negativity of the witnessed (iterated generator) state.
    pub witnessed_negativity: f64,
}

const fn row(solid: Solid, vertices: usize, radius: f64, cells: [f64; 5]) -> ReferenceRow {
    ReferenceRow {
        solid,
        vertices,
        radius,
        werner: cells[0],
        werner_negativity: cells[1],
        bell: cells[2],
        bell_negativity: cells[3],
        witnessed_negativity: cells[4],
    }
}

pub const REFERENCE_TABLE: [ReferenceRow; 6] = [
    row(Solid::Icosahedron, 12, 0.79, [0.4285, 0.0714, 0.5390, 0.0390, 0.0754]),
    row(Solid::Dodecahedron, 20, 0.79, [0.4160, 0.0620, 0.5296, 0.0296, 0.0647]),
    row(Solid::TruncatedCube, 24, 0.67, [0.3553, 0.0164, 0.500, 0.0, 0.0181]),
    row(Solid::TruncatedOctahedron, 24, 0.77, [0.4082, 0.0561, 0.5071, 0.0071, 0.0601]),
    row(Solid::TruncatedTetrahedronAntipodal, 24, 0.85, [0.4404, 0.0803, 0.5581, 0.0581, 0.0839]),
    row(Solid::Rhombicuboctahedron, 24, 0.86, [0.4454, 0.0840, 0.5664, 0.0664, 0.0883]),
];

pub fn reference_row(solid: Solid) -> Option<&'static ReferenceRow> {
    REFERENCE_TABLE.iter().find(|r| r.solid == solid)
}

/// Published `(θ*, N)` for a family column, if the table has one.
fn reference_cell(solid: Solid, family: &str) -> Option<(f64, f64)> {
    let r = reference_row(solid)?;
    match family {
        "werner" => Some((r.werner, r.werner_negativity)),
        "bell-diagonal-rank3" => Some((r.bell, r.bell_negativity)),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub solid: String,
    pub family: String,
    /// Certified objective value (`w*` or `p₁*`).
    pub theta: Option<f64>,
    pub negativity: Option<f64>,
    pub reference_theta: Option<f64>,
    pub reference_negativity: Option<f64>,
    pub deviation_theta: Option<f64>,
    pub deviation_negativity: Option<f64>,
    pub residual: Option<f64>,
    pub wall_time: f64,
    pub error: Option<String>,
}

/// Maximizes every `family` over every solid. Failed cells carry their
/// error and the table is still written to `table.csv` and `table.json`.
pub fn run_table_reproduction(cfg: &CampaignConfig, solids: &[Solid], families: &[String]) -> Result<Vec<TableCell>> {
    cfg.validate()?;
    let jobs: Vec<(Solid, &String)> = solids.iter().flat_map(|s| families.iter().map(move |f| (*s, f))).collect();
    let cells = run_jobs(cfg.workers, jobs.len(), |k| {
        let (solid, family) = jobs[k];
        let t0 = Instant::now();
        let reference = reference_cell(solid, family);
        let mut cell = TableCell {
            solid: solid.name().to_string(),
            family: family.clone(),
            theta: None,
            negativity: None,
            reference_theta: reference.map(|r| r.0),
            reference_negativity: reference.map(|r| r.1),
            deviation_theta: None,
            deviation_negativity: None,
            residual: None,
            wall_time: 0.0,
            error: None,
        };
        let outcome = FamilySpec::by_name(family)
            .and_then(|spec| maximize_family(&spec, &solid_directions(solid), &cfg.mode, &cfg.solver));
        match outcome {
            Ok(Some(opt)) => {
                let n = negativity(&opt.state, &BipartiteCut::single(0)).ok();
                cell.theta = Some(opt.objective);
                cell.negativity = n;
                cell.residual = Some(opt.certificate.residual);
                if let Some((t, rn)) = reference {
                    cell.deviation_theta = Some((opt.objective - t).abs());
                    cell.deviation_negativity = n.map(|n| (n - rn).abs());
                }
            }
            Ok(None) => cell.error = Some("no certifiable member".into()),
            Err(e) => cell.error = Some(e.to_string()),
        }
        cell.wall_time = seconds(t0);
        cell
    })?;
    write_csv(&cfg.out.join("table.csv"), TABLE_SCHEMA, &cells)?;
    write_json(&cfg.out.join("table.json"), &cells)?;
    Ok(cells)
}

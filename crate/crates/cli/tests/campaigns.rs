use lhs_cli::campaign::{
    reverify_from_disk, run_generator_campaign, run_gme_campaign, run_table_reproduction, run_threshold_bisection,
    run_volume_estimation, BisectionSpec, CampaignRecord, GeneratorRecord, GeneratorSettings, GmeSettings, TableCell,
};
use lhs_cli::output::{read_csv, schema_line};
use lhs_cli::{CampaignConfig, CampaignKind, CliError, SetChoice};
use lhs_core::conic::SolverConfig;
use lhs_core::geometry::{solid_directions, Solid};
use lhs_core::lhs::{certify_projective, LhsMode};
use lhs_core::states::{werner, SamplingMeasure};

fn ico() -> SetChoice {
    SetChoice::Solid(Solid::Icosahedron)
}

#[test]
fn volume_smoke_run_emits_well_formed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = CampaignConfig::new(CampaignKind::Volume, ico(), 10, dir.path());
    cfg.seed = 3;
    let out = run_volume_estimation(&cfg, SamplingMeasure::Hs).unwrap();
    assert_eq!(out.records.len(), 10);

    let text = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), schema_line("volume-records"));
    assert_eq!(
        lines.next().unwrap(),
        "state_id,seed,stream,entangled,certified,negativity,wall_time,residual,status,error"
    );
    assert_eq!(lines.count(), 10);
    let rows: Vec<CampaignRecord> = read_csv(&dir.path().join("records.csv"), "volume-records").unwrap();
    assert_eq!(rows, out.records);

    for r in &out.records {
        assert_eq!(r.entangled, r.negativity > 1e-9, "row {}", r.state_id);
        if r.certified {
            assert!(r.entangled);
            let report = reverify_from_disk(dir.path(), "volume-", r.state_id).unwrap();
            assert!(report.max_violation <= 1e-6);
        }
        if !r.entangled {
            assert_eq!(r.status, "separable");
        }
    }
    let s = &out.summary;
    assert_eq!(s.separable.trials, 10);
    assert!(s.separable.ci95[0] <= s.separable.fraction && s.separable.fraction <= s.separable.ci95[1]);
    assert!(s.references.is_some());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["metadata"]["samples"], 10);
    assert_eq!(json["references"]["lhs_of_entangled_alt"], 0.25);
}

#[test]
fn volume_rows_do_not_depend_on_worker_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = CampaignConfig::new(CampaignKind::Volume, ico(), 12, a.path());
    cfg.seed = 11;
    let one = run_volume_estimation(&cfg, SamplingMeasure::Bures).unwrap();
    cfg.workers = 3;
    cfg.out = b.path().to_path_buf();
    let three = run_volume_estimation(&cfg, SamplingMeasure::Bures).unwrap();
    let strip = |rows: &[CampaignRecord]| {
        rows.iter().map(|r| CampaignRecord { wall_time: 0.0, ..r.clone() }).collect::<Vec<_>>()
    };
    assert_eq!(strip(&one.records), strip(&three.records));
    for r in one.records.iter().filter(|r| r.certified) {
        let x = std::fs::read(a.path().join(format!("certificates/volume-{:06}.json", r.state_id))).unwrap();
        let y = std::fs::read(b.path().join(format!("certificates/volume-{:06}.json", r.state_id))).unwrap();
        assert_eq!(x, y);
    }
}

#[test]
fn campaign_guards() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = CampaignConfig::new(CampaignKind::Volume, ico(), 0, dir.path());
    assert!(matches!(run_volume_estimation(&cfg, SamplingMeasure::Hs), Err(CliError::BadInput(_))));
    cfg.samples = 1;
    cfg.workers = 0;
    assert!(matches!(run_volume_estimation(&cfg, SamplingMeasure::Hs), Err(CliError::BadInput(_))));
}

#[test]
fn werner_bisection_brackets_the_threshold() {
    let set = solid_directions(Solid::Icosahedron);
    let cfg = SolverConfig::default();
    let mut spec = BisectionSpec::default_for("werner").unwrap();
    spec.tol = 0.002;
    let (s, cert) = run_threshold_bisection(&spec, &set, &LhsMode::Projective, &cfg).unwrap();
    // Werner optimum for the icosahedron from the reference table
    assert!((s.threshold - 0.4285).abs() < 0.004, "{}", s.threshold);
    assert!(s.inconclusive_at - s.threshold <= spec.tol);
    assert!(cert.is_some());
    assert!(certify_projective(&werner(s.threshold).unwrap(), &set, &cfg).unwrap().is_certified());
    assert!(!certify_projective(&werner(s.threshold + 2.0 * spec.tol).unwrap(), &set, &cfg).unwrap().is_certified());
}

#[test]
fn bisection_rejects_bad_brackets() {
    let set = solid_directions(Solid::Icosahedron);
    let cfg = SolverConfig::default();
    let mut spec = BisectionSpec::default_for("werner").unwrap();
    spec.lo = 0.9;
    assert!(matches!(run_threshold_bisection(&spec, &set, &LhsMode::Projective, &cfg), Err(CliError::BadBracket(_))));
    spec.lo = 0.5;
    spec.hi = 0.4;
    assert!(matches!(run_threshold_bisection(&spec, &set, &LhsMode::Projective, &cfg), Err(CliError::BadInput(_))));
    let mut spec = BisectionSpec::default_for("werner").unwrap();
    spec.family = "nonsense".into();
    assert!(matches!(run_threshold_bisection(&spec, &set, &LhsMode::Projective, &cfg), Err(CliError::BadInput(_))));
    assert!(BisectionSpec::default_for("bell-diagonal").is_err());
}

#[test]
fn table_marks_failed_cells_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CampaignConfig::new(CampaignKind::Tables, ico(), 1, dir.path());
    let families = vec!["werner".to_string(), "no-such-family".to_string()];
    let cells = run_table_reproduction(&cfg, &[Solid::Icosahedron], &families).unwrap();
    assert_eq!(cells.len(), 2);
    let w = &cells[0];
    assert!((w.theta.unwrap() - 0.4285).abs() < 0.003);
    assert_eq!(w.reference_theta, Some(0.4285));
    assert!(w.deviation_theta.unwrap() < 0.003 && w.deviation_negativity.unwrap() < 0.003);
    assert!(cells[1].error.is_some() && cells[1].theta.is_none());
    let rows: Vec<TableCell> = read_csv(&dir.path().join("table.csv"), "family-table").unwrap();
    assert_eq!(rows, cells);
}

#[test]
fn generator_campaign_records_and_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = CampaignConfig::new(CampaignKind::Generator, ico(), 3, dir.path());
    cfg.seed = 4;
    let out = run_generator_campaign(&cfg, &GeneratorSettings::default()).unwrap();
    assert_eq!(out.summary.runs, 3);
    assert_eq!(out.summary.completed, 3);
    assert_eq!(out.summary.recertified, 3);
    for r in &out.records {
        assert!(r.steps >= 1 && r.error.is_none(), "{r:?}");
        assert!(r.negativity.unwrap() > 0.06);
        assert!(!reverify_from_disk(dir.path(), "generated-", r.run_id).unwrap().flagged);
    }
    let total: usize = out.negativity_histogram.iter().map(|b| b.count).sum();
    assert_eq!(total, 3);
    let pairs: usize = out.distance_histogram.iter().map(|b| b.count).sum();
    assert_eq!(pairs, 3);
    assert!(out.negativity_histogram.iter().all(|b| (b.hi - b.lo - 0.002).abs() < 1e-12));
    let rows: Vec<GeneratorRecord> = read_csv(&dir.path().join("records.csv"), "generator-records").unwrap();
    assert_eq!(rows.len(), 3);
    assert!(dir.path().join("negativity_histogram.csv").exists());
    assert!(dir.path().join("distance_histogram.csv").exists());
}

#[test]
fn gme_campaign_reports_counts() {
    // a single alternation on the icosahedron: cheap, and the count is
    // reported whatever it is
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = CampaignConfig::new(CampaignKind::Gme, ico(), 1, dir.path());
    cfg.seed = 5;
    let out = run_gme_campaign(&cfg, &GmeSettings { rounds: 1 }).unwrap();
    assert_eq!(out.summary.runs, 1);
    let r = &out.records[0];
    assert!(r.error.is_none(), "{r:?}");
    assert_eq!(r.rounds, 1);
    assert!(r.residual.unwrap() <= 1e-6);
    assert_eq!(out.summary.successes, usize::from(r.success));
    assert!(matches!(run_gme_campaign(&cfg, &GmeSettings { rounds: 0 }), Err(CliError::BadInput(_))));
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lhs_cli::campaign::{
    run_generator_campaign, run_gme_campaign, run_table_reproduction, run_threshold_bisection, run_volume_estimation,
    BisectionSpec, GeneratorSettings, GmeSettings, SeedKind,
};
use lhs_cli::config::parse_mode;
use lhs_cli::output::{read_json, write_json, write_text};
use lhs_cli::{CampaignConfig, CampaignKind, CliError, ConfigFile, Result, SetChoice, EXIT_INCONCLUSIVE, EXIT_OK};
use lhs_core::conic::SolverConfig;
use lhs_core::geometry::{solid_directions, Solid};
use lhs_core::lhs::{certify, maximize_family, FamilySpec, LhsMode, LhsOutcome};
use lhs_core::operator::negativity;
use lhs_core::states::{make_state, sample_bures_dims, sample_hs_dims, sample_pure_dims, FamilyPoint};
use lhs_core::witness::{gme_witness, optimal_witness, quantify, QuantifierKind, WitnessConfig};
use lhs_core::{BipartiteCut, DensityMatrix, RngStream};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "lhs", version, about = "Certify local-hidden-state models and run reproduction campaigns")]
struct Cli {
    /// Base seed; job i draws from stream (seed, i).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Solver feasibility tolerance.
    #[arg(long = "tol-feas", global = true)]
    tol_feas: Option<f64>,
    /// Interior-point iteration cap per solve.
    #[arg(long = "max-solver-iterations", global = true)]
    max_solver_iterations: Option<u32>,
    /// Output directory (campaigns) or file (single queries).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Full-size campaigns: 20000 volume samples, 300000 generator runs.
    #[arg(long, global = true)]
    full: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct StateArgs {
    /// JSON file holding a density matrix or a family point.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    /// Family parameter `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

#[derive(Args, Clone, Default)]
struct SetArgs {
    /// Solid name or `random-m`.
    #[arg(long)]
    set: Option<String>,
    /// projective or povm.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Insphere radius of a solid (all solids if omitted).
    Insphere { solid: Option<String> },
    /// Build a family member.
    MakeState {
        family: String,
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
    },
    /// Draw random states.
    Sample {
        /// hs, bures or pure.
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        count: Option<usize>,
        /// Comma-separated local dimensions.
        #[arg(long, default_value = "2,2")]
        dims: String,
    },
    /// Search for an LHS certificate.
    Certify {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        set: SetArgs,
    },
    /// Largest certifiable member of a family.
    Family {
        family: String,
        #[command(flatten)]
        set: SetArgs,
    },
    /// Entanglement quantifier and optimal witness.
    Witness {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        kind: Option<String>,
    },
    /// Fully decomposable genuine-multipartite witness of a three-qubit state.
    Gme {
        #[command(flatten)]
        state: StateArgs,
    },
    /// Separable and LHS volume fractions of random states.
    Volume {
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        set: SetArgs,
    },
    /// Threshold bisection over one family parameter.
    Bisect {
        family: String,
        #[arg(long)]
        parameter: Option<String>,
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Fixed family parameters `name=value`.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[command(flatten)]
        set: SetArgs,
    },
    /// Family optima for the reference solids.
    Tables {
        /// Comma-separated solids; defaults to the six table solids.
        #[arg(long)]
        solids: Option<String>,
        /// Comma-separated families.
        #[arg(long)]
        families: Option<String>,
        #[arg(long)]
        mode: Option<String>,
    },
    /// Iterated witness-driven generation campaign.
    Generate {
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        quantifier: Option<String>,
        /// pure, hs or bures seeds.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long = "max-iters")]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long = "negativity-bin")]
        negativity_bin: Option<f64>,
        #[arg(long = "distance-bin")]
        distance_bin: Option<f64>,
        #[command(flatten)]
        set: SetArgs,
    },
    /// Genuine tripartite entangled states with LHS models.
    GmeCampaign {
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
        #[command(flatten)]
        set: SetArgs,
    },
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

struct Globals {
    file: ConfigFile,
    seed: u64,
    workers: usize,
    solver: SolverConfig,
    out: Option<PathBuf>,
    full: bool,
}

impl Globals {
    fn resolve(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let tol = file.pick(cli.tol_feas, "tol-feas", SolverConfig::default().eps_feas)?;
        if !(tol > 0.0) {
            return Err(CliError::BadInput(format!("tol-feas must be positive, got {tol}")));
        }
        let mut solver = SolverConfig::default().with_eps_feas(tol);
        solver.inaccurate_band = solver.inaccurate_band.max(tol);
        solver.max_iterations = file.pick(cli.max_solver_iterations, "max-solver-iterations", solver.max_iterations)?;
        solver.validate()?;
        let out = match &cli.out {
            Some(p) => Some(p.clone()),
            None => file.raw("out").map(PathBuf::from),
        };
        Ok(Self {
            seed: file.pick(cli.seed, "seed", 1)?,
            workers: file.pick(cli.workers, "workers", 1)?,
            solver,
            out,
            full: cli.full || file.get::<bool>("full")?.unwrap_or(false),
            file,
        })
    }

    fn string(&self, flag: &Option<String>, key: &str, default: &str) -> String {
        flag.clone().or_else(|| self.file.raw(key).map(str::to_string)).unwrap_or_else(|| default.to_string())
    }

    fn set_and_mode(&self, args: &SetArgs, default_set: &str) -> Result<(SetChoice, LhsMode)> {
        let set = self.string(&args.set, "set", default_set).parse()?;
        let mode = parse_mode(&self.string(&args.mode, "mode", "projective"))?;
        Ok((set, mode))
    }

    fn campaign(&self, kind: CampaignKind, set: SetChoice, mode: LhsMode, samples: usize, dir: &str) -> CampaignConfig {
        let mut cfg =
            CampaignConfig::new(kind, set, samples, self.out.clone().unwrap_or_else(|| Path::new("out").join(dir)));
        cfg.mode = mode;
        cfg.seed = self.seed;
        cfg.workers = self.workers;
        cfg.solver = self.solver;
        cfg
    }

    /// Prints `value` and mirrors it to `--out` when given.
    fn emit<T: Serialize>(&self, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        println!("{text}");
        if let Some(path) = &self.out {
            write_text(path, &text)?;
        }
        Ok(())
    }
}

fn load_state(args: &StateArgs) -> Result<DensityMatrix> {
    match (&args.state, &args.family) {
        (Some(path), None) => {
            let value: serde_json::Value = read_json(path)?;
            if value.get("family").is_some() {
                Ok(serde_json::from_value::<FamilyPoint>(value)?.state)
            } else {
                Ok(serde_json::from_value::<DensityMatrix>(value)?)
            }
        }
        (None, Some(family)) => {
            let params: BTreeMap<String, f64> = args.params.iter().cloned().collect();
            Ok(make_state(family, &params)?.state)
        }
        _ => Err(CliError::BadInput("give exactly one of --state FILE or --family NAME".into())),
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

#[derive(Serialize)]
struct InsphereRow {
    solid: String,
    vertices: usize,
    measurements: usize,
    radius: f64,
}

#[derive(Serialize)]
struct CertifyReport<'a> {
    certified: bool,
    set: &'a str,
    mode: &'a str,
    r: f64,
    status: String,
    reason: Option<String>,
    residual: Option<f64>,
}

fn run(cli: Cli) -> Result<i32> {
    let g = Globals::resolve(&cli)?;
    match &cli.command {
        Command::Insphere { solid } => {
            let solids: Vec<Solid> = match solid {
                Some(s) => vec![s.parse()?],
                None => Solid::ALL.to_vec(),
            };
            let rows: Vec<InsphereRow> = solids
                .into_iter()
                .map(|s| {
                    let set = solid_directions(s);
                    InsphereRow {
                        solid: s.name().into(),
                        vertices: set.vertex_count(),
                        measurements: set.len(),
                        radius: set.insphere(),
                    }
                })
                .collect();
            g.emit(&rows)?;
        }
        Command::MakeState { family, params } => {
            let params: BTreeMap<String, f64> = params.iter().cloned().collect();
            g.emit(&make_state(family, &params)?)?;
        }
        Command::Sample { measure, count, dims } => {
            let measure = g.string(measure, "measure", "hs");
            let count = g.file.pick(*count, "count", 1)?;
            let dims: Vec<usize> = split_list(dims)
                .iter()
                .map(|d| d.parse().map_err(|_| CliError::BadInput(format!("bad dimension {d:?}"))))
                .collect::<Result<_>>()?;
            if dims.is_empty() || dims.contains(&0) {
                return Err(CliError::BadInput("dimensions must be positive".into()));
            }
            let states = (0..count)
                .map(|i| {
                    let mut rng = RngStream::new(g.seed, i as u64);
                    match measure.as_str() {
                        "hs" => Ok(sample_hs_dims(&dims, &mut rng)),
                        "bures" => Ok(sample_bures_dims(&dims, &mut rng)),
                        "pure" => Ok(sample_pure_dims(&dims, &mut rng)),
                        other => Err(CliError::BadInput(format!("unknown measure {other:?} (hs, bures, pure)"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            g.emit(&states)?;
        }
        Command::Certify { state, set } => {
            let rho = load_state(state)?;
            let (choice, mode) = g.set_and_mode(set, "icosahedron")?;
            let ms = choice.build(g.seed)?;
            let outcome = certify(&rho, &ms, &mode, &g.solver)?;
            let report = CertifyReport {
                certified: outcome.is_certified(),
                set: ms.name(),
                mode: mode.name(),
                r: ms.insphere(),
                status: match &outcome {
                    LhsOutcome::Certified(c) => c.status.to_string(),
                    LhsOutcome::Inconclusive { status, .. } => status.to_string(),
                },
                reason: match &outcome {
                    LhsOutcome::Inconclusive { reason, .. } => Some(reason.clone()),
                    _ => None,
                },
                residual: outcome.certificate().map(|c| c.residual),
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let (Some(path), Some(cert)) = (&g.out, outcome.certificate()) {
                write_text(path, &cert.to_json())?;
            }
            if !outcome.is_certified() {
                return Ok(EXIT_INCONCLUSIVE);
            }
        }
        Command::Family { family, set } => {
            let spec = FamilySpec::by_name(family)?;
            let (choice, mode) = g.set_and_mode(set, "icosahedron")?;
            let ms = choice.build(g.seed)?;
            let Some(opt) = maximize_family(&spec, &ms, &mode, &g.solver)? else {
                eprintln!("no member of {family} is certifiable with {}", ms.name());
                return Ok(EXIT_INCONCLUSIVE);
            };
            let n =
                if opt.state.dims().len() == 2 { negativity(&opt.state, &BipartiteCut::single(0)).ok() } else { None };
            let parameters: BTreeMap<&str, f64> =
                spec.parameters.iter().map(String::as_str).zip(opt.theta.iter().copied()).collect();
            g.emit(&serde_json::json!({
                "family": family,
                "set": ms.name(),
                "mode": mode.name(),
                "objective": opt.objective,
                "parameters": parameters,
                "negativity": n,
                "shrink": opt.shrink,
                "residual": opt.certificate.residual,
            }))?;
        }
        Command::Witness { state, kind } => {
            let rho = load_state(state)?;
            let kind: QuantifierKind = g.string(kind, "kind", "gr").parse()?;
            let wcfg = WitnessConfig { solver: g.solver, ..WitnessConfig::default() };
            let value = quantify(&rho, kind, &wcfg)?;
            let witness = optimal_witness(&rho, kind, &wcfg)?;
            g.emit(&serde_json::json!({ "primal": value, "dual": witness }))?;
        }
        Command::Gme { state } => {
            let rho = load_state(state)?;
            let w = gme_witness(&rho, &g.solver)?;
            g.emit(&w)?;
            if !w.detects() {
                return Ok(EXIT_INCONCLUSIVE);
            }
        }
        Command::Volume { measure, samples, set } => {
            let measure = g.string(measure, "measure", "hs").parse()?;
            let samples = g.file.pick(*samples, "samples", if g.full { 20_000 } else { 2_000 })?;
            let (choice, mode) = g.set_and_mode(set, "icosahedron")?;
            let cfg = g.campaign(CampaignKind::Volume, choice, mode, samples, "volume");
            let out = run_volume_estimation(&cfg, measure)?;
            println!("{}", serde_json::to_string_pretty(&out.summary)?);
        }
        Command::Bisect { family, parameter, lo, hi, tol, params, set } => {
            let mut spec = BisectionSpec::default_for(family).or_else(|_| {
                parameter
                    .clone()
                    .map(|p| BisectionSpec {
                        family: family.clone(),
                        parameter: p,
                        fixed: BTreeMap::new(),
                        lo: 0.0,
                        hi: 1.0,
                        tol: 1e-3,
                    })
                    .ok_or_else(|| CliError::BadInput(format!("family {family:?} needs --parameter")))
            })?;
            if let Some(p) = parameter {
                spec.parameter = p.clone();
            }
            spec.fixed = params.iter().cloned().collect();
            spec.lo = g.file.pick(*lo, "lo", spec.lo)?;
            spec.hi = g.file.pick(*hi, "hi", spec.hi)?;
            spec.tol = g.file.pick(*tol, "tol", spec.tol)?;
            let default_set = if family == "amplitude-damped" || family == "ghz" || family == "w" {
                "rhombicuboctahedron"
            } else {
                "icosahedron"
            };
            let (choice, mode) = g.set_and_mode(set, default_set)?;
            let ms = choice.build(g.seed)?;
            let (summary, cert) = run_threshold_bisection(&spec, &ms, &mode, &g.solver)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if let Some(dir) = &g.out {
                write_json(&dir.join("bisection.json"), &summary)?;
                if let Some(c) = cert {
                    write_text(&dir.join("certificate.json"), &c.to_json())?;
                }
            }
        }
        Command::Tables { solids, families, mode } => {
            let solids: Vec<Solid> = match solids.clone().or_else(|| g.file.raw("solids").map(str::to_string)) {
                Some(s) => split_list(&s).iter().map(|x| x.parse()).collect::<std::result::Result<_, _>>()?,
                None => Solid::TABLE.to_vec(),
            };
            let families = split_list(&g.string(families, "families", "werner,bell-diagonal-rank3"));
            let mode = parse_mode(&g.string(mode, "mode", "projective"))?;
            let cfg = g.campaign(CampaignKind::Tables, SetChoice::Solid(solids[0]), mode, solids.len(), "tables");
            let cells = run_table_reproduction(&cfg, &solids, &families)?;
            println!("{}", serde_json::to_string_pretty(&cells)?);
        }
        Command::Generate { runs, quantifier, seeds, max_iters, tol, negativity_bin, distance_bin, set } => {
            let d = GeneratorSettings::default();
            let settings = GeneratorSettings {
                quantifier: g.string(quantifier, "quantifier", d.quantifier.short()).parse()?,
                max_iters: g.file.pick(*max_iters, "max-iters", d.max_iters)?,
                tol: g.file.pick(*tol, "tol", d.tol)?,
                seeds: g.string(seeds, "seeds", "pure").parse::<SeedKind>()?,
                negativity_bin: g.file.pick(*negativity_bin, "negativity-bin", d.negativity_bin)?,
                distance_bin: g.file.pick(*distance_bin, "distance-bin", d.distance_bin)?,
                distance_sample: g.file.pick(None, "distance-sample", d.distance_sample)?,
            };
            let runs = g.file.pick(*runs, "runs", if g.full { 300_000 } else { 500 })?;
            let (choice, mode) = g.set_and_mode(set, "icosahedron")?;
            let cfg = g.campaign(CampaignKind::Generator, choice, mode, runs, "generate");
            let out = run_generator_campaign(&cfg, &settings)?;
            println!("{}", serde_json::to_string_pretty(&out.summary)?);
        }
        Command::GmeCampaign { runs, rounds, set } => {
            let settings = GmeSettings { rounds: g.file.pick(*rounds, "rounds", GmeSettings::default().rounds)? };
            let runs = g.file.pick(*runs, "runs", 20)?;
            let (choice, mode) = g.set_and_mode(set, "rhombicuboctahedron")?;
            let cfg = g.campaign(CampaignKind::Gme, choice, mode, runs, "gme");
            let out = run_gme_campaign(&cfg, &settings)?;
            println!("{}", serde_json::to_string_pretty(&out.summary)?);
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { lhs_cli::EXIT_BAD_INPUT } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

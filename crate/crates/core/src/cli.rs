//! `vmpsim` command-line surface.
//!
//! Exit codes: 0 success, 1 usage, 2 schema or configuration, 3 infeasible
//! instance.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{ObjectiveSet, ProblemConfig, PART_ONE_WEIGHTS, PART_TWO_WEIGHTS};
use crate::error::{Error, Result};
use crate::eval::{build_report, MethodResult, ScenarioResult};
use crate::model::{read_pm_catalog, PhysicalMachine};
use crate::objectives::{ObjectiveVector, Scalarizer};
use crate::sim::{run_simulation, Algorithm, LoadProfile, SimOptions};
use crate::trace::{parse_csv, to_csv_string, GeneratorParams, TraceSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vmpsim", version, about = "Virtual machine placement simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a workload trace CSV.
    GenTrace(GenTraceArgs),
    /// Simulate one algorithm over a trace.
    Run(RunArgs),
    /// Build comparison tables from run summaries.
    Compare(CompareArgs),
}

#[derive(Debug, clap::Args)]
pub struct GenTraceArgs {
    /// TOML generator config; `generator = "cwtg" | "legacy"` selects the generator.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path. A `<out>.manifest.json` sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// TOML run config with optional `preset`, `[problem]` and `[sim]` tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub trace: PathBuf,
    /// ff, bf, wf, ffd, bfd, ma or two-phase.
    #[arg(long, value_parser = parse_algorithm)]
    pub algo: Algorithm,
    #[arg(long, value_parser = ["ws", "ed", "cd"])]
    pub scalarizer: Option<String>,
    /// First seed; repeated runs use consecutive seeds.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of repeated runs.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub seeds: u32,
    #[arg(long, value_parser = parse_load, conflicts_with = "pms")]
    pub load_profile: Option<LoadProfile>,
    /// PM catalog CSV (pm_id,cpu,ram,net,pmax,datacenter_id).
    #[arg(long)]
    pub pms: Option<PathBuf>,
    /// Method label used by `compare`; defaults to the algorithm label.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct CompareArgs {
    /// `summary.json` files or run directories containing one.
    #[arg(required = true)]
    pub summaries: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_load(s: &str) -> std::result::Result<LoadProfile, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    PartOne,
    PartTwo,
}

/// Contents of a `run` config file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub preset: Preset,
    pub problem: ProblemConfig,
    pub sim: SimOptions,
}

impl RunConfig {
    /// Parses TOML. Keys under `[problem]` override the preset's values.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        let preset: Preset = match table.remove("preset") {
            Some(v) => v.try_into().map_err(|e: toml::de::Error| Error::config(e.to_string()))?,
            None => Preset::default(),
        };
        let base = match preset {
            Preset::PartOne => ProblemConfig::part_one(),
            Preset::PartTwo => ProblemConfig::part_two(),
        };
        let mut merged = toml::Table::try_from(&base).map_err(|e| Error::config(e.to_string()))?;
        if let Some(v) = table.remove("problem") {
            let toml::Value::Table(overrides) = v else {
                return Err(Error::config("`problem` must be a table"));
            };
            for (k, v) in overrides {
                merged.insert(k, v);
            }
        }
        let problem: ProblemConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        let sim: SimOptions = match table.remove("sim") {
            Some(v) => v.try_into().map_err(|e: toml::de::Error| Error::config(e.to_string()))?,
            None => SimOptions::default(),
        };
        if let Some(k) = table.keys().next() {
            return Err(Error::config(format!("unknown key {k:?}")));
        }
        problem.validate()?;
        sim.ma.validate()?;
        Ok(RunConfig { preset, problem, sim })
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: Preset::PartOne,
            problem: ProblemConfig::part_one(),
            sim: SimOptions::default(),
        }
    }
}

/// Echo of a `run` invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: Option<PathBuf>,
    pub trace: PathBuf,
    pub algorithm: String,
    pub scalarizer: String,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub problem: ProblemConfig,
    pub sim: SimOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub average_cost: f64,
    pub objectives: ObjectiveVector,
    pub migrations: usize,
    pub migrated_gb: f64,
    pub reconfigurations_adopted: usize,
    pub reconfigurations_discarded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub algorithm: String,
    pub objective_set: ObjectiveSet,
    pub scalarizer: String,
    pub scenario: String,
    pub load: String,
    pub steps: usize,
    pub runs: Vec<SeedSummary>,
    /// Mean over `runs`.
    pub mean: ScenarioResult,
}

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn json(value: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

pub fn cmd_gen_trace(args: &GenTraceArgs) -> Result<()> {
    let mut workload = match &args.config {
        Some(p) => toml::from_str::<TraceSpec>(&read(p)?).map_err(|e| Error::config(format!("{}: {e}", p.display())))?,
        None => TraceSpec::Cwtg(GeneratorParams::default()),
    };
    if let Some(seed) = args.seed {
        workload = workload.with_seed(seed);
    }
    let events = workload.generate()?;
    let manifest = serde_json::json!({
        "command": "gen-trace",
        "config": args.config,
        "rows": events.len(),
        "workload": workload,
    });
    let csv = to_csv_string(&events);
    let mut sidecar = args.out.clone().into_os_string();
    sidecar.push(".manifest.json");
    write_atomic(&args.out, csv.as_bytes())?;
    write_atomic(Path::new(&sidecar), &json(&manifest))
}

fn scalarizer_for(label: &str, problem: &ProblemConfig) -> Scalarizer {
    match label {
        "ed" => Scalarizer::Euclidean,
        "cd" => Scalarizer::Chebyshev,
        _ => match (&problem.scalarizer, problem.objective_set) {
            (Scalarizer::WeightedSum { .. }, _) => problem.scalarizer.clone(),
            (_, ObjectiveSet::PartI) => Scalarizer::ws(PART_ONE_WEIGHTS),
            (_, ObjectiveSet::PartII) => Scalarizer::ws(PART_TWO_WEIGHTS),
        },
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<RunSummary> {
    let cfg = match &args.config {
        Some(p) => RunConfig::from_toml(&read(p)?).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", p.display())),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    let mut problem = cfg.problem.clone();
    if let Some(label) = &args.scalarizer {
        problem.scalarizer = scalarizer_for(label, &problem);
    }
    let trace_text = read(&args.trace)?;
    let trace = parse_csv(trace_text.as_bytes())?;
    let (pms, load): (Vec<PhysicalMachine>, String) = match (&args.pms, args.load_profile) {
        (Some(p), _) => (read_pm_catalog(read(p)?.as_bytes())?, "catalog".into()),
        (None, Some(l)) => (l.pms(), l.label().into()),
        (None, None) => (LoadProfile::Homogeneous.pms(), LoadProfile::Homogeneous.label().into()),
    };
    let first = args.seed.unwrap_or(cfg.sim.ma.rng_seed);
    let seeds: Vec<u64> = (0..args.seeds as u64).map(|k| first.wrapping_add(k)).collect();
    let scenario = args
        .trace
        .file_stem()
        .map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned());
    let method = args.label.clone().unwrap_or_else(|| args.algo.label().to_string());

    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    let mut runs = Vec::new();
    let mut results = Vec::new();
    let mut steps = 0;
    for &seed in &seeds {
        let options = SimOptions {
            ma: cfg.sim.ma.clone().with_seed(seed),
            ..cfg.sim.clone()
        };
        let run = run_simulation(&trace, pms.clone(), &problem, args.algo, &options)?;
        eprintln!(
            "{} seed {seed}: online {:.3}s, reconfiguration {:.3}s",
            method,
            run.timing.online.as_secs_f64(),
            run.timing.reconfiguration.as_secs_f64()
        );
        let mut csv = Vec::new();
        run.write_steps_csv(&mut csv)?;
        let name = if seeds.len() == 1 {
            "steps.csv".to_string()
        } else {
            format!("steps-seed{seed}.csv")
        };
        files.push((args.out.join(name), csv));
        let result = ScenarioResult::from_run(&scenario, &load, &run)?;
        steps = run.steps.len();
        runs.push(SeedSummary {
            seed,
            average_cost: result.average_cost,
            objectives: result.objectives,
            migrations: run.migrations,
            migrated_gb: run.migrated_gb,
            reconfigurations_adopted: run.reconfigurations_adopted,
            reconfigurations_discarded: run.reconfigurations_discarded,
        });
        results.push(result);
    }
    let summary = RunSummary {
        method,
        algorithm: args.algo.label().to_string(),
        objective_set: problem.objective_set,
        scalarizer: problem.scalarizer.label().to_string(),
        scenario,
        load,
        steps,
        runs,
        mean: ScenarioResult::mean(&results)?,
    };
    let manifest = RunManifest {
        config: args.config.clone(),
        trace: args.trace.clone(),
        algorithm: args.algo.label().to_string(),
        scalarizer: problem.scalarizer.label().to_string(),
        seeds,
        out: args.out.clone(),
        problem,
        sim: cfg.sim,
    };
    files.push((args.out.join("summary.json"), json(&summary)));
    files.push((args.out.join("manifest.json"), json(&manifest)));
    for (path, bytes) in files {
        write_atomic(&path, &bytes)?;
    }
    Ok(summary)
}

fn load_summary(path: &Path) -> Result<RunSummary> {
    let file = if path.is_dir() { path.join("summary.json") } else { path.to_path_buf() };
    serde_json::from_str(&read(&file)?).map_err(|e| Error::Schema {
        line: e.line() as u64,
        message: format!("{}: {e}", file.display()),
    })
}

/// Groups summaries by method label, in first-appearance order.
pub fn method_results(summaries: &[RunSummary]) -> Result<Vec<MethodResult>> {
    let mut order: Vec<&str> = Vec::new();
    for s in summaries {
        if !order.contains(&s.method.as_str()) {
            order.push(&s.method);
        }
    }
    order
        .into_iter()
        .map(|m| {
            let hits: Vec<&RunSummary> = summaries.iter().filter(|s| s.method == m).collect();
            let set = hits[0].objective_set;
            if hits.iter().any(|s| s.objective_set != set) {
                return Err(Error::config(format!("method {m} mixes objective sets")));
            }
            MethodResult::new(m, set, hits.iter().map(|s| s.mean.clone()).collect())
        })
        .collect()
}

pub fn cmd_compare(args: &CompareArgs) -> Result<String> {
    let summaries = args
        .summaries
        .iter()
        .map(|p| load_summary(p))
        .collect::<Result<Vec<_>>>()?;
    let report = build_report(&method_results(&summaries)?)?;
    let mut files = Vec::new();
    for t in &report.tables {
        files.push((args.out.join(format!("{}.txt", t.name)), t.to_text().into_bytes()));
        files.push((args.out.join(format!("{}.csv", t.name)), t.to_csv()?.into_bytes()));
    }
    for (path, bytes) in files {
        write_atomic(&path, &bytes)?;
    }
    Ok(report.to_text())
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_SCHEMA,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::GenTrace(a) => cmd_gen_trace(a),
        Command::Run(a) => cmd_run(a).map(|s| {
            println!("{} {}: F = {:.6}", s.method, s.scenario, s.mean.average_cost);
        }),
        Command::Compare(a) => cmd_compare(a).map(|text| print!("{text}")),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

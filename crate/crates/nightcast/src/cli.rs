//! Command-line interface. Every command except `serve` and `rerun` writes
//! its outputs plus a `manifest.json` into `--output-dir`.

use std::ffi::OsString;
use std::io::Write as _;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use nightcast_core::ga::{BatchEvaluator, Sequential};
use nightcast_core::{
    deviation_summary, generate_synthetic, group_profile, kmeans_baseline, make_scenario,
    multirun_stats, run_with, Dataset, DeclarationState, FitnessContext, ForecastContext, GaConfig,
    GroupingChromosome, Metric, Objective, Operator, SynthSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{
    deviation_stats_csv, deviations_csv, group_profile_csv, multirun_csv, multirun_sd_csv,
    sha256_hex, trace_csv, ChromosomeDoc, ForecastDoc, TruthMatricesDoc,
};
use crate::io::{
    dataset_json, import_csv, load_dataset, load_declarations, read_json, stored_declarations,
    to_json, write_file, DeclarationsDoc,
};
use crate::manifest::{FileDigest, RunManifest, WallClock};
use crate::parallel::Parallel;

#[derive(Parser, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[command(
    name = "nightcast",
    version,
    about = "Results-based election-night forecasting"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalArgs {
    /// Seed of every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value = ".")]
    pub output_dir: PathBuf,
    /// Fitness-evaluation threads; 0 = all cores. Never affects results.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Command {
    /// Generate a synthetic election with known grouping and matrices.
    Synth(SynthArgs),
    /// Merge reference.csv and current.csv into a dataset file.
    Import(ImportArgs),
    /// Optimize the station grouping.
    Optimize(OptimizeArgs),
    /// Forecast the current election from a grouping and declarations.
    Forecast(ForecastArgs),
    /// Compare groupings: per-party deviations and group profiles.
    Evaluate(EvaluateArgs),
    /// Run the live HTTP service.
    Serve(ServeArgs),
    /// Re-execute a command from its manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Import(_) => "import",
            Command::Optimize(_) => "optimize",
            Command::Forecast(_) => "forecast",
            Command::Evaluate(_) => "evaluate",
            Command::Serve(_) => "serve",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub groups: u32,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    pub stations_per_group: u32,
    /// Reference-election parties besides NV.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub ref_parties: u32,
    /// Current-election parties besides NV.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub cur_parties: u32,
    #[arg(long, default_value_t = 200)]
    pub electorate_min: u64,
    #[arg(long, default_value_t = 4000)]
    pub electorate_max: u64,
    /// Gaussian vote noise (standard deviation in votes).
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub current: PathBuf,
}

/// Which stations count as declared.
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioArgs {
    /// Declarations file; overrides the simulated scenario.
    #[arg(long)]
    pub declarations: Option<PathBuf>,
    /// Share of the current electorate left undeclared in the simulation.
    #[arg(long, default_value_t = 0.9)]
    pub missing_fraction: f64,
    /// Tie-break seed of the simulated scenario; defaults to --seed.
    #[arg(long)]
    pub scenario_seed: Option<u64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaArgs {
    #[arg(long, alias = "population", default_value_t = 100)]
    pub initial_population_size: usize,
    #[arg(long, default_value_t = 500)]
    pub generations: usize,
    #[arg(long, default_value_t = 0.1)]
    pub elite_proportion: f64,
    #[arg(long, default_value_t = 0.7)]
    pub reproduction_eligible_population_proportion: f64,
    #[arg(long, default_value_t = 0.003)]
    pub mutation_probability: f64,
    #[arg(long, default_value_t = 0.1)]
    pub random_re_seeding_proportion: f64,
    /// Number of station groups.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub groups: u32,
    #[arg(long, default_value = "abs", value_parser = parse_metric)]
    pub metric: Metric,
    /// Default: reference parties (incl. NV) + 2.
    #[arg(long)]
    pub min_declared_per_group: Option<usize>,
    /// Default: 10 × the best raw error of generation 0.
    #[arg(long)]
    pub penalty_weight: Option<f64>,
    /// Switch off a genetic operator (mutation, crossover, reseed).
    #[arg(long, value_parser = parse_operator)]
    pub disable: Vec<Operator>,
    /// Stop once the best fitness improves < 0.1% over 100 generations.
    #[arg(long)]
    pub early_stop: bool,
    /// Held-out share of declared stations when final results are unknown.
    #[arg(long, default_value_t = 0.2)]
    pub holdout_fraction: f64,
}

impl GaArgs {
    pub fn config(&self, seed: u64, objective: Objective) -> GaConfig {
        let mut c = GaConfig {
            population_size: self.initial_population_size,
            generations: self.generations,
            elite_fraction: self.elite_proportion,
            eligible_fraction: self.reproduction_eligible_population_proportion,
            mutation_prob: self.mutation_probability,
            reseed_fraction: self.random_re_seeding_proportion,
            n_groups: self.groups as usize,
            metric: self.metric,
            min_declared_per_group: self.min_declared_per_group,
            penalty_weight: self.penalty_weight,
            seed,
            early_stop: self.early_stop,
            objective,
            ..GaConfig::default()
        };
        for op in &self.disable {
            c.disable(*op);
        }
        c
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub ga: GaArgs,
    /// Independent runs with seeds seed, seed+1, ...; ≥ 2 writes the
    /// multi-run summary.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub runs: u32,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Chromosome file with the station labels.
    #[arg(long)]
    pub grouping: PathBuf,
    /// Declarations file; default: stations with stored current votes.
    #[arg(long)]
    pub declarations: Option<PathBuf>,
    #[arg(long, default_value = "abs", value_parser = parse_metric)]
    pub metric: Metric,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// `name=path` or `path` of a chromosome file; repeatable.
    #[arg(long)]
    pub grouping: Vec<String>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Add the k-means grouping of reference vote shares as `baseline`.
    #[arg(long)]
    pub with_baseline: bool,
    /// Baseline group count; default: the first grouping's.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub groups: Option<u32>,
    /// Restrict outputs to one metric (default: elec and vald).
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<Metric>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServeArgs {
    #[arg(long, env = "PORT", default_value_t = 8080)]
    pub port: u16,
    /// Event-log directory; sessions are replayed from it on startup.
    #[arg(long, env = "DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, default_value = "0.0.0.0")]
    pub host: String,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Compare the new outputs with the digests in the manifest.
    #[arg(long)]
    pub check: bool,
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    s.parse().map_err(|e: nightcast_core::Error| e.to_string())
}

fn parse_operator(s: &str) -> std::result::Result<Operator, String> {
    s.parse().map_err(|e: nightcast_core::Error| e.to_string())
}

/// Files produced by a command, written only after it succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub inputs: Vec<PathBuf>,
    pub config: serde_json::Value,
    pub generation_ms: Vec<f64>,
    pub stdout: String,
}

impl Outputs {
    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }
}

fn evaluator(threads: usize) -> Box<dyn BatchEvaluator + Sync> {
    if threads == 1 {
        Box::new(Sequential)
    } else {
        Box::new(Parallel::new(threads))
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::fs::canonicalize(p).map_err(|e| Error::io(p, e))
}

/// Makes input paths absolute so the stored invocation is replayable from
/// any working directory.
fn resolve_inputs(cli: &mut Cli) -> Result<()> {
    fn scenario(s: &mut ScenarioArgs) -> Result<()> {
        if let Some(p) = &s.declarations {
            s.declarations = Some(absolute(p)?);
        }
        Ok(())
    }
    match &mut cli.command {
        Command::Import(a) => {
            a.reference = absolute(&a.reference)?;
            a.current = absolute(&a.current)?;
        }
        Command::Optimize(a) => {
            a.dataset = absolute(&a.dataset)?;
            scenario(&mut a.scenario)?;
            a.scenario.scenario_seed.get_or_insert(cli.global.seed);
        }
        Command::Forecast(a) => {
            a.dataset = absolute(&a.dataset)?;
            a.grouping = absolute(&a.grouping)?;
            if let Some(p) = &a.declarations {
                a.declarations = Some(absolute(p)?);
            }
        }
        Command::Evaluate(a) => {
            a.dataset = absolute(&a.dataset)?;
            scenario(&mut a.scenario)?;
            a.scenario.scenario_seed.get_or_insert(cli.global.seed);
            for g in a.grouping.iter_mut() {
                let (name, path) = split_grouping(g);
                *g = format!("{name}={}", absolute(Path::new(&path))?.display());
            }
        }
        _ => {}
    }
    Ok(())
}

fn split_grouping(arg: &str) -> (String, String) {
    match arg.split_once('=') {
        Some((n, p)) if !n.is_empty() => (n.to_string(), p.to_string()),
        _ => {
            let stem = Path::new(arg)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            (stem, arg.to_string())
        }
    }
}

/// Scenario from a declarations file or simulated from stored votes.
fn scenario(
    ds: &Dataset,
    args: &ScenarioArgs,
    seed: u64,
    out: &mut Outputs,
) -> Result<DeclarationState> {
    let decl = match &args.declarations {
        Some(p) => {
            out.inputs.push(p.clone());
            load_declarations(p, ds)?
        }
        None => {
            if !(0.0..=1.0).contains(&args.missing_fraction) {
                return Err(Error::Usage(format!(
                    "--missing-fraction {} outside [0, 1]",
                    args.missing_fraction
                )));
            }
            make_scenario(
                ds,
                args.missing_fraction,
                args.scenario_seed.unwrap_or(seed),
            )?
        }
    };
    out.add(
        "declarations.json",
        to_json(&DeclarationsDoc::from_state(ds, &decl)),
    );
    Ok(decl)
}

fn cmd_synth(global: &GlobalArgs, a: &SynthArgs, out: &mut Outputs) -> Result<()> {
    let spec = SynthSpec {
        n_groups: a.groups as usize,
        stations_per_group: a.stations_per_group as usize,
        ref_party_count: a.ref_parties as usize,
        cur_party_count: a.cur_parties as usize,
        electorate_range: (a.electorate_min, a.electorate_max),
        noise_sd: a.noise_sd,
        seed: global.seed,
    };
    spec.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let syn = generate_synthetic(&spec)?;
    out.config = serde_json::to_value(&spec).expect("serializable");
    out.add("dataset.json", dataset_json(&syn.dataset));
    out.add(
        "truth_labels.json",
        to_json(&ChromosomeDoc::new(
            &GroupingChromosome::new(syn.true_grouping.clone()),
            None,
        )),
    );
    out.add(
        "truth_matrices.json",
        to_json(&TruthMatricesDoc::new(&syn.dataset, &syn.true_matrices)),
    );
    out.stdout = format!(
        "{} stations in {} groups\n",
        syn.dataset.len(),
        spec.n_groups
    );
    Ok(())
}

fn cmd_import(a: &ImportArgs, out: &mut Outputs) -> Result<()> {
    out.inputs.push(a.reference.clone());
    out.inputs.push(a.current.clone());
    let ds = import_csv(&a.reference, &a.current)?;
    out.stdout = format!("{} stations imported\n", ds.len());
    out.add("dataset.json", dataset_json(&ds));
    Ok(())
}

fn cmd_optimize(global: &GlobalArgs, a: &OptimizeArgs, out: &mut Outputs) -> Result<()> {
    out.inputs.push(a.dataset.clone());
    let ds = load_dataset(&a.dataset)?;
    let decl = scenario(&ds, &a.scenario, global.seed, out)?;
    let objective = if ds.has_current_votes() {
        Objective::Truth
    } else {
        Objective::HoldOut {
            fraction: a.ga.holdout_fraction,
        }
    };
    let config = a.ga.config(global.seed, objective);
    let ctx = FitnessContext::new(&ds, &decl, &config)?;
    let eval = evaluator(global.threads);
    out.config = serde_json::to_value(&config).expect("serializable");

    if a.runs == 1 {
        let mut last = Instant::now();
        let mut timings = Vec::new();
        let outcome = run_with(&ctx, &config, eval.as_ref(), &mut |_| {
            timings.push(last.elapsed().as_secs_f64() * 1e3);
            last = Instant::now();
            ControlFlow::Continue(())
        })?;
        out.generation_ms = timings;
        out.add(
            "best.json",
            to_json(&ChromosomeDoc::new(&outcome.best, Some(&config))),
        );
        out.add("trace.csv", trace_csv(&outcome.trace));
        out.add("trace.json", to_json(&outcome.trace));
        out.stdout = format!(
            "best fitness {} after {} generations\n",
            outcome.best.fitness.unwrap_or(f64::NAN),
            outcome.trace.records.len() - 1
        );
    } else {
        let seeds: Vec<u64> = (0..a.runs as u64)
            .map(|k| global.seed.wrapping_add(k))
            .collect();
        let (summary, runs) = multirun_stats(&ctx, &config, &seeds, eval.as_ref())?;
        let best = runs
            .iter()
            .zip(&seeds)
            .min_by(|x, y| {
                let f = |r: &nightcast_core::RunOutcome| r.best.fitness.unwrap_or(f64::INFINITY);
                f(x.0).total_cmp(&f(y.0))
            })
            .expect("at least two runs");
        let best_config = GaConfig {
            seed: *best.1,
            ..config.clone()
        };
        out.add(
            "best.json",
            to_json(&ChromosomeDoc::new(&best.0.best, Some(&best_config))),
        );
        for (r, s) in runs.iter().zip(&seeds) {
            out.add(format!("trace_seed{s}.csv"), trace_csv(&r.trace));
        }
        out.add("multirun.csv", multirun_csv(&summary));
        out.add("multirun_sd.csv", multirun_sd_csv(&summary));
        out.add("multirun.json", to_json(&summary));
        let mut text = String::from("indicator,mean,best\n");
        for (name, m, b) in summary.table() {
            text.push_str(&format!("{name},{m},{b}\n"));
        }
        out.stdout = text;
    }
    Ok(())
}

fn load_grouping(path: &Path, ds: &Dataset) -> Result<Vec<u32>> {
    let doc: ChromosomeDoc = read_json(path)?;
    if doc.labels.len() != ds.len() {
        return Err(Error::Validation(format!(
            "{}: {} labels for {} stations",
            path.display(),
            doc.labels.len(),
            ds.len()
        )));
    }
    Ok(doc.labels)
}

fn cmd_forecast(a: &ForecastArgs, out: &mut Outputs) -> Result<()> {
    out.inputs.push(a.dataset.clone());
    out.inputs.push(a.grouping.clone());
    let ds = load_dataset(&a.dataset)?;
    let grouping = load_grouping(&a.grouping, &ds)?;
    let decl = match &a.declarations {
        Some(p) => {
            out.inputs.push(p.clone());
            load_declarations(p, &ds)?
        }
        None => stored_declarations(&ds),
    };
    let f = ForecastContext::new(&ds, &decl)?.forecast(&grouping)?;
    let doc = ForecastDoc::new(&ds, &f);
    let (parties, values) = doc.view(a.metric);
    let mut text = format!("party,{}\n", a.metric);
    for (p, v) in parties.iter().zip(&values) {
        text.push_str(&format!("{p},{v}\n"));
    }
    out.stdout = text;
    out.config = serde_json::json!({ "metric": a.metric });
    out.add("forecast.json", to_json(&doc));
    Ok(())
}

fn cmd_evaluate(global: &GlobalArgs, a: &EvaluateArgs, out: &mut Outputs) -> Result<()> {
    if a.grouping.is_empty() && !a.with_baseline {
        return Err(Error::Usage(
            "nothing to evaluate: pass --grouping and/or --with-baseline".into(),
        ));
    }
    out.inputs.push(a.dataset.clone());
    let ds = load_dataset(&a.dataset)?;
    if !ds.has_current_votes() {
        return Err(Error::Validation(
            "evaluation needs current votes for every station".into(),
        ));
    }
    let decl = scenario(&ds, &a.scenario, global.seed, out)?;
    let mut groupings: Vec<(String, Vec<u32>)> = Vec::new();
    for g in &a.grouping {
        let (name, path) = split_grouping(g);
        if groupings.iter().any(|(n, _)| *n == name) {
            return Err(Error::Usage(format!("grouping name `{name}` used twice")));
        }
        out.inputs.push(PathBuf::from(&path));
        groupings.push((name, load_grouping(Path::new(&path), &ds)?));
    }
    if a.with_baseline {
        let k = match (a.groups, groupings.first()) {
            (Some(k), _) => k as usize,
            (None, Some((_, g))) => g.iter().max().map_or(1, |m| *m as usize + 1),
            (None, None) => 10,
        };
        groupings.push((
            "baseline".into(),
            kmeans_baseline(&ds, k, global.seed).genes,
        ));
    }
    let metrics: Vec<Metric> = match a.metric {
        Some(m) => vec![m],
        None => vec![Metric::Elec, Metric::Vald],
    };
    let summary = deviation_summary(&ds, &decl, &groupings)?;
    out.config = serde_json::json!({ "metrics": metrics, "strategies": groupings.iter().map(|g| &g.0).collect::<Vec<_>>() });
    out.add("deviations.csv", deviations_csv(&summary, &metrics));
    out.add(
        "deviation_summary.csv",
        deviation_stats_csv(&summary, &metrics),
    );
    for (k, (name, g)) in groupings.iter().enumerate() {
        let csv = group_profile_csv(&group_profile(&ds, g)?);
        if k == 0 {
            out.add("group_profile.csv", csv.clone());
        }
        out.add(format!("group_profile_{name}.csv"), csv);
    }
    out.stdout = String::from_utf8(deviation_stats_csv(&summary, &metrics)).expect("utf-8");
    Ok(())
}

/// Runs a manifest-producing command and writes its outputs.
pub fn execute(cli: &Cli, argv: Vec<String>) -> Result<RunManifest> {
    let mut cli = cli.clone();
    resolve_inputs(&mut cli)?;
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let clock = Instant::now();
    let mut out = Outputs::default();
    match &cli.command {
        Command::Synth(a) => cmd_synth(&cli.global, a, &mut out)?,
        Command::Import(a) => cmd_import(a, &mut out)?,
        Command::Optimize(a) => cmd_optimize(&cli.global, a, &mut out)?,
        Command::Forecast(a) => cmd_forecast(a, &mut out)?,
        Command::Evaluate(a) => cmd_evaluate(&cli.global, a, &mut out)?,
        Command::Serve(_) | Command::Rerun(_) => {
            return Err(Error::Usage(format!(
                "`{}` does not produce a manifest",
                cli.command.name()
            )))
        }
    }
    let dir = &cli.global.output_dir;
    let mut outputs = Vec::new();
    for (name, bytes) in &out.files {
        write_file(&dir.join(name), bytes)?;
        outputs.push(FileDigest {
            path: PathBuf::from(name),
            sha256: sha256_hex(bytes),
        });
    }
    let mut inputs = Vec::new();
    for p in &out.inputs {
        inputs.push(FileDigest::of_file(p)?);
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command.name().into(),
        argv,
        seed: cli.global.seed,
        invocation: cli.clone(),
        config: out.config,
        inputs,
        outputs,
        wall_clock: WallClock {
            started,
            elapsed_ms: clock.elapsed().as_secs_f64() * 1e3,
            generation_ms: out.generation_ms,
        },
    };
    manifest.save(dir)?;
    print!("{}", out.stdout);
    Ok(manifest)
}

/// Re-executes a manifest's invocation; outputs go to `--output-dir` when
/// given on the command line, else next to the manifest.
pub fn rerun(args: &RerunArgs, global: &GlobalArgs, output_dir_given: bool) -> Result<RunManifest> {
    let old = RunManifest::load(&args.manifest)?;
    old.check_inputs()?;
    let mut cli = old.invocation.clone();
    cli.global.threads = global.threads;
    cli.global.output_dir = if output_dir_given {
        global.output_dir.clone()
    } else {
        args.manifest
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    };
    let new = execute(&cli, old.argv.clone())?;
    if args.check {
        let mut diffs = Vec::new();
        for o in &old.outputs {
            match new.outputs.iter().find(|n| n.path == o.path) {
                Some(n) if n.sha256 == o.sha256 => {}
                Some(_) => diffs.push(format!("{} differs", o.path.display())),
                None => diffs.push(format!("{} missing", o.path.display())),
            }
        }
        if new.outputs.len() != old.outputs.len() {
            diffs.push("output set differs".into());
        }
        if !diffs.is_empty() {
            return Err(Error::Runtime(format!(
                "rerun not identical: {}",
                diffs.join(", ")
            )));
        }
        eprintln!("{} outputs identical", new.outputs.len());
    }
    Ok(new)
}

fn output_dir_given(argv: &[OsString]) -> bool {
    argv.iter()
        .any(|a| a == "--output-dir" || a.to_string_lossy().starts_with("--output-dir="))
}

/// Entry point; returns the process exit code.
pub fn main_with_args<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let argv: Vec<OsString> = args.into_iter().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Serve(a) => crate::service::serve_blocking(a, cli.global.threads),
        Command::Rerun(a) => rerun(a, &cli.global, output_dir_given(&argv)).map(|_| ()),
        _ => {
            let argv = argv
                .iter()
                .map(|a| a.to_string_lossy().into_owned())
                .collect();
            execute(&cli, argv).map(|_| ())
        }
    };
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! `binharm`: synthesize stimuli, simulate the model experiments, fit the
//! internal-noise parameters, emit plot tables and run the listening service.

mod config;
mod error;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use binharm::audio::write_wav;
use binharm::calibration::{calibrate, Anchors, CalibrationSet, FitOptions};
use binharm::experiment::{run_orders, ConditionKey, ExperimentId, ExperimentPreset};
use binharm::model::{dump_stages, write_stage_csv, PathwayConfig, ProcessingOrder};
use binharm::psychophysics::trial_stimulus;
use binharm::results::{report_csv, results_csv, summary_json, ResultsSummary};
use binharm::stimulus::{ConditionSpec, TrialOptions};
use binharm_service::{AppState, ServiceConfig, DEFAULT_ISI_MS};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use config::{
    parse_list, resolve_out_dir, CalibrateConfig, FileConfig, RunConfig, Sigma, CALIBRATION_FILE, DEFAULT_RUNS,
    DEFAULT_SAMPLES,
};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "binharm", version, about = "Binaural masking by harmonic complexes: stimuli, model and listening service")]
struct Cli {
    /// Worker threads for simulation and calibration (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (falls back to the config file, then BINHARM_OUT_DIR, then `.`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// More log output on stderr; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one trial (or one interval of it) as a 24-bit stereo WAV.
    Synth(SynthArgs),
    /// Run model experiments and write results CSVs and JSON summaries.
    Simulate(SimulateArgs),
    /// Fit the internal-noise parameters to the threshold anchors.
    Calibrate(CalibrateArgs),
    /// Combine JSON summaries into a plot-data table.
    Report(ReportArgs),
    /// Run the HTTP listening service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Experiment preset that sets the component count.
    #[arg(long = "exp", default_value = "exp2", value_parser = parse_one::<ExperimentId>)]
    experiment: ExperimentId,
    /// Masker fundamental, Hz.
    #[arg(long, default_value_t = binharm::experiment::F0)]
    f0: f64,
    /// Component count; overrides the preset.
    #[arg(long = "n-components")]
    n_components: Option<usize>,
    /// Mistuning of the fundamental, percent.
    #[arg(long, default_value_t = 0.0)]
    mistuning: f64,
    /// Present the target with a 180 degree interaural phase difference.
    #[arg(long)]
    dichotic: bool,
    /// Target level, dB SPL.
    #[arg(long, default_value_t = 55.0)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trial number, 1-based as in the listening service.
    #[arg(long, default_value_t = 1)]
    trial: usize,
    /// Write only interval 1, 2 or 3 instead of the whole trial.
    #[arg(long)]
    interval: Option<usize>,
    /// Silence between intervals of a whole trial, ms.
    #[arg(long = "isi-ms", default_value_t = DEFAULT_ISI_MS)]
    isi_ms: u32,
    /// Mix background noise into every interval.
    #[arg(long)]
    noise: bool,
    /// Output path (default: <out-dir>/synth.wav).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiments: exp2, exp3, a comma-separated list or `all`.
    #[arg(long = "exp")]
    experiments: Option<String>,
    /// Processing orders: a comma-separated list or `all`.
    #[arg(long = "order")]
    orders: Option<String>,
    /// Monaural internal noise, or `fit` to use the calibration file.
    #[arg(long)]
    sigma_m: Option<Sigma>,
    /// Binaural internal noise, or `fit` to use the calibration file.
    #[arg(long)]
    sigma_b: Option<Sigma>,
    #[arg(long)]
    seed: Option<u64>,
    /// Calibration file (default: <out-dir>/calibration.json).
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Threshold samples per condition.
    #[arg(long)]
    samples: Option<usize>,
    /// Tracks averaged into each threshold sample.
    #[arg(long)]
    runs: Option<usize>,
    /// Mix background noise into every interval.
    #[arg(long)]
    noise: bool,
    /// Also write every model stage of one target interval per condition.
    #[arg(long)]
    dump_internals: bool,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Diotic harmonic threshold relative to the masker, dB.
    #[arg(long, allow_hyphen_values = true)]
    diotic_rel: Option<f64>,
    /// Dichotic anchor distance below the diotic one, dB.
    #[arg(long)]
    bmld: Option<f64>,
    /// Orders to fit sigma_b for: a comma-separated list or `all`.
    #[arg(long = "order")]
    orders: Option<String>,
    /// Tracks per objective evaluation.
    #[arg(long)]
    fit_runs: Option<usize>,
    /// Accepted distance to the anchor, dB.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (default: <out-dir>/calibration.json).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// JSON summaries, or directories searched for `summary_*.json`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output path (default: <out-dir>/report.csv).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    #[arg(long = "isi-ms", default_value_t = DEFAULT_ISI_MS)]
    isi_ms: u32,
    /// Persist sessions as JSON files here and reload them on start.
    #[arg(long)]
    snapshot_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    noise_seed: u64,
}

fn parse_one<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

/// What `calibrate` writes and `simulate` reads back.
#[derive(Debug, Serialize, Deserialize)]
struct CalibrationFile {
    run_config: CalibrateConfig,
    calibration: CalibrationSet,
}

/// Sidecar written next to each synthesized WAV.
#[derive(Debug, Serialize)]
struct SynthRecord<'a> {
    condition: &'a ConditionSpec,
    level: f64,
    seed: u64,
    trial: usize,
    interval: Option<usize>,
    isi_ms: u32,
    background_noise: bool,
    target_interval: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    tracing_subscriber::fmt().with_max_level(level).with_writer(std::io::stderr).init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Synth(args) => synth(args, cli.out_dir),
        Command::Simulate(args) => simulate(args, cli.out_dir),
        Command::Calibrate(args) => calibrate_cmd(args, cli.out_dir),
        Command::Report(args) => report(args, cli.out_dir),
        Command::Serve(args) => serve(args),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(&format!("creating {}", dir.display()), e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(&format!("writing {}", path.display()), e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn synth(args: SynthArgs, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let n = args.n_components.unwrap_or(args.experiment.n_components());
    let spec = ConditionSpec::new(args.f0, args.mistuning, n, args.dichotic);
    spec.validate()?;
    if args.trial == 0 {
        return Err(CliError::Validation("trials are numbered from 1".into()));
    }
    if args.interval.is_some_and(|k| !(1..=3).contains(&k)) {
        return Err(CliError::Validation("--interval must be 1, 2 or 3".into()));
    }
    let options = TrialOptions { background_noise: args.noise };
    let stimulus = trial_stimulus(&spec, args.level, args.seed, args.trial - 1, options)?;
    let signal = match args.interval {
        Some(k) => stimulus.interval(k).expect("checked above").clone(),
        None => stimulus.concatenate(args.isi_ms as f64 / 1000.0),
    };
    let path = args.output.unwrap_or_else(|| resolve_out_dir(out_dir, &FileConfig::default()).join("synth.wav"));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_wav(&path, &signal)?;
    let record = SynthRecord {
        condition: &spec,
        level: args.level,
        seed: args.seed,
        trial: args.trial,
        interval: args.interval,
        isi_ms: args.isi_ms,
        background_noise: args.noise,
        target_interval: stimulus.target_interval(),
    };
    write_file(&sidecar(&path), to_json(&record))?;
    println!("{}", path.display());
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn resolve_run_config(args: &SimulateArgs, out_dir: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let experiments = match &args.experiments {
        Some(s) => parse_list(s, &ExperimentId::ALL).map_err(CliError::Validation)?,
        None => file.experiments()?.unwrap_or_else(config::default_experiments),
    };
    let orders = match &args.orders {
        Some(s) => parse_list(s, &ProcessingOrder::ALL).map_err(CliError::Validation)?,
        None => file.orders()?.unwrap_or_else(config::default_orders),
    };
    let out_dir = resolve_out_dir(out_dir, &file);
    let calibration = args
        .calibration
        .clone()
        .or(file.calibration.clone())
        .unwrap_or_else(|| out_dir.join(CALIBRATION_FILE));
    let cfg = RunConfig {
        experiments,
        orders,
        sigma_m: args.sigma_m.or(file.sigma_m).unwrap_or(Sigma::Fit),
        sigma_b: args.sigma_b.or(file.sigma_b).unwrap_or(Sigma::Fit),
        seed: args.seed.or(file.seed).unwrap_or(0),
        out_dir,
        calibration,
        background_noise: args.noise || file.background_noise.unwrap_or(false),
        dump_internals: args.dump_internals || file.dump_internals.unwrap_or(false),
        threshold_samples: args.samples.or(file.threshold_samples).unwrap_or(DEFAULT_SAMPLES),
        runs_per_sample: args.runs.or(file.runs_per_sample).unwrap_or(DEFAULT_RUNS),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_calibration(path: &Path) -> Result<CalibrationFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!(
            "sigma is set to 'fit' but {} cannot be read ({e}); run `binharm calibrate` first or pass numeric --sigma-m/--sigma-b",
            path.display()
        ))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{} is not a calibration file: {e}", path.display())))
}

fn pathway_for(cfg: &RunConfig, order: ProcessingOrder, fit: Option<&CalibrationFile>) -> Result<PathwayConfig, CliError> {
    let sigma_m = match cfg.sigma_m {
        Sigma::Value(v) => v,
        Sigma::Fit => fit.expect("loaded when needed").calibration.sigma_m.sigma,
    };
    let sigma_b = match cfg.sigma_b {
        Sigma::Value(v) => v,
        Sigma::Fit => fit.expect("loaded when needed").calibration.sigma_b(order).ok_or_else(|| {
            CliError::Validation(format!("sigma_b was not fitted for {order}; rerun calibrate with --order {order}"))
        })?,
    };
    Ok(PathwayConfig::new(order, sigma_m, sigma_b))
}

fn simulate(args: SimulateArgs, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = resolve_run_config(&args, out_dir)?;
    let fit = cfg.needs_calibration().then(|| load_calibration(&cfg.calibration)).transpose()?;
    let pathways = cfg
        .orders
        .iter()
        .map(|&o| pathway_for(&cfg, o, fit.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    create_dir(&cfg.out_dir)?;
    let run_config = serde_json::to_value(&cfg).expect("serializable");
    for &experiment in &cfg.experiments {
        tracing::info!(%experiment, "simulating");
        let results = run_orders(&ExperimentPreset::new(experiment), &pathways, &cfg.settings(), cfg.seed)?;
        for result in results {
            let stem = format!("{experiment}_{}", result.pathway.order);
            write_file(&cfg.out_dir.join(format!("results_{stem}.csv")), results_csv(&result))?;
            let summary = summary_json(&result, Some(run_config.clone()));
            write_file(&cfg.out_dir.join(format!("summary_{stem}.json")), &summary)?;
            if cfg.dump_internals {
                dump_internals(&cfg, &result, &cfg.out_dir.join(format!("internals_{stem}")))?;
            }
            print_result(&result);
        }
    }
    Ok(())
}

/// Writes every model stage of the target interval of the first trial,
/// synthesized at each condition's mean threshold.
fn dump_internals(
    cfg: &RunConfig,
    result: &binharm::experiment::ExperimentResult,
    dir: &Path,
) -> Result<(), CliError> {
    let preset = ExperimentPreset::new(result.experiment);
    for key in ConditionKey::ALL {
        let Some(c) = result.condition(key) else { continue };
        let spec = preset.condition(key);
        let stimulus = trial_stimulus(spec, c.threshold.mean, cfg.seed, 0, cfg.settings().trial_options)?;
        let target = stimulus.interval(stimulus.target_interval()).expect("2 or 3");
        let sub = dir.join(key.label());
        create_dir(&sub)?;
        for stage in dump_stages(target, key.mistuned, &result.pathway)? {
            write_stage_csv(&sub.join(format!("{}.csv", stage.name)), &stage.signal)?;
        }
    }
    Ok(())
}

fn print_result(result: &binharm::experiment::ExperimentResult) {
    println!("{} {}", result.experiment, result.pathway.order);
    for c in &result.conditions {
        println!("  {:<18} {:7.2} dB SPL  (sd {:.2})", c.key.label(), c.threshold.mean, c.threshold.std);
    }
    let show = |name: &str, s: Option<binharm::experiment::Stat>| {
        if let Some(s) = s {
            println!("  {name:<18} {:7.2} dB      (sd {:.2})", s.mean, s.std);
        }
    };
    show("release diotic", result.release(false));
    show("release dichotic", result.release(true));
    show("bmld harmonic", result.bmld(false));
    show("bmld mistuned", result.bmld(true));
}

fn calibrate_cmd(args: CalibrateArgs, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let defaults = Anchors::default();
    let anchors = Anchors {
        diotic_harmonic_rel: args.diotic_rel.or(file.diotic_harmonic_rel).unwrap_or(defaults.diotic_harmonic_rel),
        harmonic_bmld: args.bmld.or(file.harmonic_bmld).unwrap_or(defaults.harmonic_bmld),
    };
    let orders = match &args.orders {
        Some(s) => parse_list(s, &ProcessingOrder::ALL).map_err(CliError::Validation)?,
        None => file.orders()?.unwrap_or_else(|| ProcessingOrder::ALL.to_vec()),
    };
    let mut fit = FitOptions::default();
    fit.n_runs = args.fit_runs.or(file.fit_runs).unwrap_or(fit.n_runs);
    fit.tolerance = args.tolerance.or(file.fit_tolerance).unwrap_or(fit.tolerance);
    fit.trial_options.background_noise = file.background_noise.unwrap_or(false);
    if fit.n_runs == 0 || fit.tolerance <= 0.0 {
        return Err(CliError::Validation("fit runs and tolerance must be positive".into()));
    }
    let out_dir = resolve_out_dir(out_dir, &file);
    let output = args.output.unwrap_or_else(|| out_dir.join(CALIBRATION_FILE));
    let run_config = CalibrateConfig {
        anchors,
        orders,
        fit,
        seed: args.seed.or(file.seed).unwrap_or(0),
        out_dir,
        output: output.clone(),
    };
    let set = calibrate(&anchors, &run_config.orders, &fit, run_config.seed)?;
    let describe = |name: &str, f: &binharm::calibration::SigmaFit| {
        println!(
            "{name:<24} sigma {:.6e}  target {:.2}  achieved {:.2}{}",
            f.sigma,
            f.target_threshold,
            f.achieved_threshold,
            if f.converged { "" } else { "  (not converged)" }
        );
    };
    describe("sigma_m", &set.sigma_m);
    for (order, f) in &set.sigma_b {
        describe(&format!("sigma_b {order}"), f);
    }
    write_file(&output, to_json(&CalibrationFile { run_config, calibration: set }))?;
    println!("{}", output.display());
    Ok(())
}

fn summary_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| CliError::io(&format!("reading {}", input.display()), e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("summary_") && n.ends_with(".json"))
                })
                .collect();
            found.sort();
            paths.extend(found);
        } else {
            paths.push(input.clone());
        }
    }
    if paths.is_empty() {
        return Err(CliError::Validation("no summary files found".into()));
    }
    Ok(paths)
}

#[derive(Debug, Serialize)]
struct ReportSource {
    file: PathBuf,
    config_digest: String,
}

fn report(args: ReportArgs, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let paths = summary_paths(&args.inputs)?;
    let mut summaries = Vec::new();
    let mut sources = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let summary: ResultsSummary = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("malformed summary {}: {e}", path.display())))?;
        sources.push(ReportSource { file: path, config_digest: summary.config_digest.clone() });
        summaries.push(summary);
    }
    let output = args
        .output
        .unwrap_or_else(|| resolve_out_dir(out_dir, &FileConfig::default()).join("report.csv"));
    let body = format!("# sources: {}\n{}", serde_json::to_string(&sources).expect("serializable"), report_csv(&summaries));
    write_file(&output, body)?;
    println!("{}", output.display());
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let config = ServiceConfig { isi_ms: args.isi_ms, snapshot_dir: args.snapshot_dir, noise_seed: args.noise_seed };
    let state = AppState::new(config).map_err(|e| CliError::Runtime(e.to_string()))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io("starting runtime", e))?;
    eprintln!("listening on http://{}", args.addr);
    runtime
        .block_on(binharm_service::serve(args.addr, Arc::new(state)))
        .map_err(|e| CliError::Runtime(e.to_string()))
}

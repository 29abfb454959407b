//! Command-line front end: synthetic dataset generation, training in
//! cleartext or simulated-encrypted mode, bundle evaluation, and the
//! four-algorithm per-iteration MSE comparison report.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use lffr_core::data::{load_csv, load_csv_scaled, synth};
use lffr_core::hesim::{
    encrypted_train_seeded, EncKind, HesimError, LevelReport, SimError, SimParams,
};
use lffr_core::models::{
    mse, predict_matrix, train, ModelBundle, ModelError, ModelKind, SigmoidImpl, TrainConfig,
    TrainTrace,
};

#[derive(Parser)]
#[command(name = "lffr", version, about = "Fixed-Hessian regression trainers with a slotted-ciphertext simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic regression dataset and its ground-truth weights.
    Gen(GenArgs),
    /// Train one model; writes model.json, trace.csv, and in hesim mode level_report.json.
    Train(TrainArgs),
    /// Score a trained model bundle against a dataset.
    Eval(EvalArgs),
    /// Train all four algorithms on one dataset and tabulate MSE per iteration.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Linear,
    Ynorm,
    Lffr,
    Improved,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Clear,
    Hesim,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SigmoidArg {
    Exact,
    Poly,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> ModelKind {
        match k {
            KindArg::Linear => ModelKind::Linear,
            KindArg::Ynorm => ModelKind::YnormLinear,
            KindArg::Lffr => ModelKind::Lffr,
            KindArg::Improved => ModelKind::ImprovedLffr,
        }
    }
}

impl From<SigmoidArg> for SigmoidImpl {
    fn from(s: SigmoidArg) -> SigmoidImpl {
        match s {
            SigmoidArg::Exact => SigmoidImpl::Exact,
            SigmoidArg::Poly => SigmoidImpl::Poly,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// Number of records.
    #[arg(long)]
    n: Option<usize>,
    /// Number of features.
    #[arg(long)]
    d: Option<usize>,
    /// Number of target outputs.
    #[arg(long)]
    c: Option<usize>,
    /// Standard deviation of the Gaussian target noise.
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for data.csv and truth.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset CSV with the target columns last.
    #[arg(long)]
    data: Option<PathBuf>,
    /// How many trailing columns are targets.
    #[arg(long)]
    targets: Option<usize>,
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Training iterations.
    #[arg(long)]
    iters: Option<usize>,
    /// Sigmoid input range fraction used by the improved transform.
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Ridge term added to every fixed-Hessian diagonal entry.
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Sigmoid evaluation for the lffr kind.
    #[arg(long, value_enum)]
    sigmoid: Option<SigmoidArg>,
    /// Simulator slots per ciphertext.
    #[arg(long)]
    slots: Option<usize>,
    /// Simulator multiplicative level budget.
    #[arg(long)]
    levels: Option<u32>,
    /// Simulator per-operation noise; 0 keeps slots exact.
    #[arg(long, allow_negative_numbers = true)]
    noise_std: Option<f64>,
    /// Seed for simulator noise.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the output files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Model bundle JSON written by train.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Dataset CSV with the target columns last.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    targets: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    targets: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Sigmoid evaluation for the lffr column.
    #[arg(long, value_enum)]
    sigmoid: Option<SigmoidArg>,
    /// Directory for compare.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runtime(err: impl std::fmt::Display) -> CliError {
    CliError::Runtime(err.to_string())
}

fn model_err(err: ModelError) -> CliError {
    match err {
        ModelError::InvalidConfig { .. } => CliError::Usage(err.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

fn hesim_err(err: HesimError) -> CliError {
    let msg = err.to_string();
    match err {
        HesimError::Model(ModelError::InvalidConfig { .. }) => CliError::Usage(msg),
        HesimError::Sim(SimError::Params { .. }) => CliError::Usage(msg),
        _ => CliError::Runtime(msg),
    }
}

/// Optional values a `--config` JSON file may provide. Unknown keys are
/// ignored so one file can serve several subcommands.
#[derive(Default, Deserialize)]
#[serde(default)]
struct FileConfig {
    n: Option<usize>,
    d: Option<usize>,
    c: Option<usize>,
    sigma: Option<f64>,
    data: Option<PathBuf>,
    targets: Option<usize>,
    kind: Option<String>,
    iters: Option<usize>,
    gamma: Option<f64>,
    epsilon: Option<f64>,
    mode: Option<String>,
    sigmoid: Option<String>,
    slots: Option<usize>,
    levels: Option<u32>,
    noise_std: Option<f64>,
    seed: Option<u64>,
    model: Option<PathBuf>,
    out: Option<PathBuf>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

fn parse_choice<T: ValueEnum>(value: &str, flag: &str) -> Result<T, CliError> {
    T::from_str(value, true).map_err(|_| usage(format!("invalid {flag} value {value:?} in config")))
}

/// Flag if given, else the config-file value, else the default.
fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn require<T>(flag: Option<T>, file: Option<T>, what: &str) -> Result<T, CliError> {
    flag.or(file).ok_or_else(|| usage(format!("missing {what}")))
}

/// Shortest round-trip rendering, the same one the CSV and JSON writers use.
fn fnum(v: f64) -> String {
    let mut buf = ryu::Buffer::new();
    buf.format(v).to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Train(args) => cmd_train(args),
        Cmd::Eval(args) => cmd_eval(args),
        Cmd::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let file = load_file_config(args.config.as_deref())?;
    let n = require(args.n, file.n, "--n")?;
    let d = require(args.d, file.d, "--d")?;
    let c = require(args.c, file.c, "--c")?;
    let sigma = pick(args.sigma, file.sigma, 0.0);
    let seed = args
        .seed
        .or(file.seed)
        .ok_or_else(|| usage("synthetic data needs --seed"))?;
    let out = require(args.out, file.out, "--out")?;
    if n == 0 || d == 0 || c == 0 {
        return Err(usage("--n, --d, and --c must all be at least 1"));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(usage(format!("--sigma must be finite and >= 0, got {sigma}")));
    }

    let (ds, r) = synth(n, d, c, sigma, seed);
    fs::create_dir_all(&out)
        .map_err(|e| runtime(format!("cannot create {}: {e}", out.display())))?;

    let data_path = out.join("data.csv");
    let mut w = csv::Writer::from_path(&data_path)
        .map_err(|e| runtime(format!("cannot write {}: {e}", data_path.display())))?;
    let mut header = Vec::with_capacity(d + c);
    header.extend((1..=d).map(|k| format!("x{k}")));
    header.extend((1..=c).map(|j| format!("y{j}")));
    w.write_record(&header).map_err(runtime)?;
    for i in 0..n {
        let mut row = Vec::with_capacity(d + c);
        // Column 0 of ds.x is the bias; the raw features follow it.
        row.extend((0..d).map(|k| fnum(ds.x.get(i, 1 + k))));
        row.extend((0..c).map(|j| fnum(ds.y.get(i, j))));
        w.write_record(&row).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;

    let truth_path = out.join("truth.json");
    let coefficients: Vec<Vec<f64>> = (0..c).map(|j| r.row(j).to_vec()).collect();
    let truth = serde_json::json!({
        "n": n,
        "d": d,
        "c": c,
        "sigma": sigma,
        "seed": seed,
        "coefficients": coefficients,
    });
    fs::write(&truth_path, format!("{truth:#}\n"))
        .map_err(|e| runtime(format!("cannot write {}: {e}", truth_path.display())))?;

    println!("wrote {}", data_path.display());
    println!("wrote {}", truth_path.display());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let file = load_file_config(args.config.as_deref())?;
    let data = require(args.data, file.data, "--data")?;
    let targets = pick(args.targets, file.targets, 1);
    let kind = match (args.kind, file.kind) {
        (Some(k), _) => k,
        (None, Some(s)) => parse_choice::<KindArg>(&s, "kind")?,
        (None, None) => return Err(usage("missing --kind")),
    };
    let iters = require(args.iters, file.iters, "--iters")?;
    let gamma = pick(args.gamma, file.gamma, 0.5);
    let epsilon = pick(args.epsilon, file.epsilon, 1e-8);
    let mode = match (args.mode, file.mode) {
        (Some(m), _) => m,
        (None, Some(s)) => parse_choice::<ModeArg>(&s, "mode")?,
        (None, None) => ModeArg::Clear,
    };
    let sigmoid = match (args.sigmoid, file.sigmoid) {
        (Some(s), _) => s,
        (None, Some(s)) => parse_choice::<SigmoidArg>(&s, "sigmoid")?,
        (None, None) => SigmoidArg::Exact,
    };
    let slots = pick(args.slots, file.slots, lffr_core::hesim::DEFAULT_SLOT_COUNT);
    let levels = pick(args.levels, file.levels, lffr_core::hesim::DEFAULT_INITIAL_LEVELS);
    let noise_std = pick(args.noise_std, file.noise_std, 0.0);
    let seed = args.seed.or(file.seed);
    let out = require(args.out, file.out, "--out")?;

    if targets == 0 {
        return Err(usage("--targets must be at least 1"));
    }
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(usage(format!(
            "--noise-std must be finite and >= 0, got {noise_std}"
        )));
    }

    let mut cfg = TrainConfig::new(iters);
    cfg.gamma = gamma;
    cfg.epsilon = epsilon;
    cfg.sigmoid_impl = sigmoid.into();

    let ds = load_csv(&data, targets).map_err(runtime)?;

    match mode {
        ModeArg::Clear => {
            let (bundle, trace) = train(&ds, kind.into(), &cfg).map_err(model_err)?;
            write_train_outputs(&out, &bundle, &trace, None)
        }
        ModeArg::Hesim => {
            let enc_kind = match (kind, sigmoid) {
                (KindArg::Linear, _) => EncKind::Linear,
                (KindArg::Improved, _) => EncKind::ImprovedLffr,
                (KindArg::Lffr, SigmoidArg::Poly) => EncKind::LffrPoly,
                (KindArg::Lffr, SigmoidArg::Exact) => {
                    return Err(usage(
                        "hesim lffr needs --sigmoid poly; the exact sigmoid has no slot circuit",
                    ));
                }
                (KindArg::Ynorm, _) => {
                    return Err(usage(
                        "kind ynorm has no encrypted circuit; use clear mode or kind improved",
                    ));
                }
            };
            if noise_std > 0.0 && seed.is_none() {
                return Err(usage("simulator noise needs --seed"));
            }
            let sim = SimParams {
                slot_count: slots,
                initial_levels: levels,
                noise_std,
                ..SimParams::default()
            };
            let (bundle, trace, report) =
                encrypted_train_seeded(&ds, enc_kind, &cfg, &sim, seed.unwrap_or(0))
                    .map_err(hesim_err)?;
            write_train_outputs(&out, &bundle, &trace, Some(&report))
        }
    }
}

fn write_train_outputs(
    out: &Path,
    bundle: &ModelBundle,
    trace: &TrainTrace,
    report: Option<&LevelReport>,
) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| runtime(format!("cannot create {}: {e}", out.display())))?;

    let model_path = out.join("model.json");
    let json = serde_json::to_string_pretty(bundle).map_err(runtime)?;
    fs::write(&model_path, json + "\n")
        .map_err(|e| runtime(format!("cannot write {}: {e}", model_path.display())))?;
    println!("wrote {}", model_path.display());

    let trace_path = out.join("trace.csv");
    let f = fs::File::create(&trace_path)
        .map_err(|e| runtime(format!("cannot write {}: {e}", trace_path.display())))?;
    trace.write_csv(f).map_err(runtime)?;
    println!("wrote {}", trace_path.display());

    if let Some(report) = report {
        let report_path = out.join("level_report.json");
        let json = serde_json::to_string_pretty(report).map_err(runtime)?;
        fs::write(&report_path, json + "\n")
            .map_err(|e| runtime(format!("cannot write {}: {e}", report_path.display())))?;
        println!("wrote {}", report_path.display());
    }
    if let Some(last) = trace.records.last() {
        println!("final mse {}", fnum(last.mse_original));
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let file = load_file_config(args.config.as_deref())?;
    let model_path = require(args.model, file.model, "--model")?;
    let data = require(args.data, file.data, "--data")?;
    let targets = pick(args.targets, file.targets, 1);
    if targets == 0 {
        return Err(usage("--targets must be at least 1"));
    }

    let text = fs::read_to_string(&model_path)
        .map_err(|e| runtime(format!("cannot read {}: {e}", model_path.display())))?;
    let bundle: ModelBundle = serde_json::from_str(&text)
        .map_err(|e| runtime(format!("invalid model {}: {e}", model_path.display())))?;
    bundle.validate().map_err(runtime)?;

    let ds = load_csv_scaled(&data, targets, &bundle.feature_scaling).map_err(runtime)?;
    let preds = predict_matrix(&bundle, &ds.x).map_err(runtime)?;
    if preds.cols() != ds.y.cols() {
        return Err(runtime(format!(
            "model predicts {} outputs, dataset has {} target columns",
            preds.cols(),
            ds.y.cols()
        )));
    }

    for j in 0..preds.cols() {
        let mut acc = 0.0;
        for i in 0..preds.rows() {
            let r = preds.get(i, j) - ds.y.get(i, j);
            acc += r * r;
        }
        println!("output {} mse {}", j, fnum(acc / preds.rows() as f64));
    }
    let aggregate = mse(&preds, &ds.y).map_err(runtime)?;
    println!("aggregate mse {}", fnum(aggregate));
    Ok(())
}

/// Fixed column order of the comparison report.
const COMPARE_KINDS: [ModelKind; 4] = [
    ModelKind::Linear,
    ModelKind::YnormLinear,
    ModelKind::Lffr,
    ModelKind::ImprovedLffr,
];

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let file = load_file_config(args.config.as_deref())?;
    let data = require(args.data, file.data, "--data")?;
    let targets = pick(args.targets, file.targets, 1);
    let iters = require(args.iters, file.iters, "--iters")?;
    let gamma = pick(args.gamma, file.gamma, 0.5);
    let epsilon = pick(args.epsilon, file.epsilon, 1e-8);
    let sigmoid = match (args.sigmoid, file.sigmoid) {
        (Some(s), _) => s,
        (None, Some(s)) => parse_choice::<SigmoidArg>(&s, "sigmoid")?,
        (None, None) => SigmoidArg::Exact,
    };
    let out = require(args.out, file.out, "--out")?;
    if targets == 0 {
        return Err(usage("--targets must be at least 1"));
    }

    let mut cfg = TrainConfig::new(iters);
    cfg.gamma = gamma;
    cfg.epsilon = epsilon;
    cfg.sigmoid_impl = sigmoid.into();

    let ds = load_csv(&data, targets).map_err(runtime)?;

    // One thread per algorithm; assembly stays in COMPARE_KINDS order.
    let ds_ref = &ds;
    let cfg_ref = &cfg;
    let results = std::thread::scope(|scope| {
        let handles =
            COMPARE_KINDS.map(|kind| scope.spawn(move || train(ds_ref, kind, cfg_ref)));
        handles.map(|h| h.join().expect("trainer thread panicked"))
    });
    let mut traces = Vec::with_capacity(4);
    for result in results {
        let (_, trace) = result.map_err(model_err)?;
        traces.push(trace);
    }

    fs::create_dir_all(&out)
        .map_err(|e| runtime(format!("cannot create {}: {e}", out.display())))?;
    let report_path = out.join("compare.csv");
    let mut w = csv::Writer::from_path(&report_path)
        .map_err(|e| runtime(format!("cannot write {}: {e}", report_path.display())))?;
    w.write_record(["iter", "mse_LR", "mse_YnormdLR", "mse_LFFR", "mse_ImprovedLFFR"])
        .map_err(runtime)?;
    for i in 0..iters {
        let mut row = vec![traces[0].records[i].iter.to_string()];
        row.extend(traces.iter().map(|t| fnum(t.records[i].mse_original)));
        w.write_record(&row).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    println!("wrote {}", report_path.display());
    Ok(())
}

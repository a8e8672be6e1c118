//! `pr`: phase retrieval from STFT magnitudes on the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use pr_core::harness::dataset::{write_corpus, CorpusSpec};
use pr_core::harness::wav::{load_wav, write_wav, SampleFormat};
use pr_core::harness::{
    emit_report, label_models, prepare, reconstruct, run_experiment, train_from_config,
    ExperimentConfig, Method,
};
use pr_core::metric_recovery::{linear_grid, sample_metric_curve, save_curves_csv};
use pr_core::solvers::spectral_distance;
use pr_core::unfolded::Checkpoint;
use pr_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "pr",
    version,
    about = "Phase retrieval with Griffin-Lim, ADMM and unfolded ADMM"
)]
struct Cli {
    /// Overrides the seed from the config file.
    #[arg(long, env = "PR_SEED", global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reconstruct one file from the magnitudes of its STFT.
    Run(RunArgs),
    /// Train an unfolded network on the configured train/val split.
    Train(TrainArgs),
    /// Evaluate every method on the configured test split.
    Eval(EvalArgs),
    /// Sample the learned metric of a trained network.
    RecoverMetric(RecoverArgs),
    /// Write a synthetic speech-like corpus.
    SynthCorpus(SynthArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodName {
    Gla,
    Admm,
    Uadmm,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    method: MethodName,
    /// Iteration count (a multiple of the layer count for uadmm). Defaults
    /// to the largest configured budget, or one pass of the network.
    #[arg(long)]
    iters: Option<usize>,
    /// Checkpoint, required for uadmm.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "out")]
    output: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("variant").required(true).args(["tied", "untied"])))]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    tied: bool,
    #[arg(long)]
    untied: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, num_args = 0..)]
    models: Vec<PathBuf>,
    /// Defaults to `output_dir` from the config.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write timing.json (wall-clock, so not reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct RecoverArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    r: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    ymin: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    ymax: f64,
    #[arg(long, default_value_t = 61)]
    points: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 40)]
    train: usize,
    #[arg(long, default_value_t = 4)]
    val: usize,
    #[arg(long, default_value_t = 10)]
    test: usize,
    #[arg(long, default_value_t = 1.0)]
    seconds: f64,
    #[arg(long, default_value_t = 16000)]
    rate: u32,
}

/// Why a command failed, which decides the exit code.
#[derive(Debug)]
enum Failure {
    /// Bad configuration or input: exit code 1.
    Invalid(String),
    /// Anything that went wrong while computing: exit code 2.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::InvalidWindow(_)
            | Error::InvalidRho(_)
            | Error::InvalidSignal(_)
            | Error::Checkpoint(_)
            | Error::WavParse { .. }
            | Error::WavUnsupported(_)
            | Error::BetaSingular(_)
            | Error::NonPositiveGamma(_) => Failure::Invalid(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn invalid(e: Error) -> Failure {
    Failure::Invalid(e.to_string())
}

type CmdResult = Result<(), Failure>;

/// A missing or unreadable config file counts as a config error.
fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path).map_err(invalid)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, Failure> {
    Checkpoint::load(path).map_err(invalid)
}

fn cmd_run(a: RunArgs, seed: Option<u64>) -> CmdResult {
    let cfg = load_config(&a.config, seed)?;
    let checkpoint = match (a.method, &a.model) {
        (MethodName::Uadmm, Some(p)) => Some(load_checkpoint(p)?),
        (MethodName::Uadmm, None) => {
            return Err(Failure::Invalid("--method uadmm needs --model".into()))
        }
        (_, Some(_)) => return Err(Failure::Invalid("--model only applies to uadmm".into())),
        (_, None) => None,
    };
    let loaded = load_wav(&a.input, None).map_err(|e| match e {
        Error::Io { .. } => invalid(e),
        other => other.into(),
    })?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", a.input.display());
    }
    let largest = |b: &[usize]| b.iter().copied().max().unwrap_or(1500);
    let (method, iters) = match (a.method, &checkpoint) {
        (MethodName::Gla, _) => (
            Method::Gla,
            a.iters.unwrap_or(largest(&cfg.solvers.gla_budgets)),
        ),
        (MethodName::Admm, _) => (
            Method::Admm {
                rho: cfg.solvers.admm_rho,
            },
            a.iters.unwrap_or(largest(&cfg.solvers.admm_budgets)),
        ),
        (MethodName::Uadmm, Some(ck)) => {
            let t = ck.model.layers_count;
            let iters = a.iters.unwrap_or(t);
            if t == 0 || !iters.is_multiple_of(t) {
                return Err(Failure::Invalid(format!(
                    "--iters {iters} must be a multiple of the network's {t} layers"
                )));
            }
            (Method::Uadmm(&ck.model), iters)
        }
        (MethodName::Uadmm, None) => unreachable!("checked above"),
    };
    let name = a
        .input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (op, r, x0) = prepare(&cfg, &name, &loaded.signal)?;
    let (_, estimate) = reconstruct(method, &op, &r, &x0, &[iters])?
        .pop()
        .expect("one budget requested");
    write_wav(&a.output, &estimate, SampleFormat::Float32)?;
    let dist = spectral_distance(&op, &estimate.samples, &r)?;
    println!(
        "{:?} {iters} iterations: spectral distance {dist:.6e}, wrote {}",
        a.method,
        a.output.display()
    );
    Ok(())
}

fn cmd_train(a: TrainArgs, seed: Option<u64>) -> CmdResult {
    let cfg = load_config(&a.config, seed)?;
    let ck = train_from_config(&cfg, a.tied)?;
    ck.save(&a.out)?;
    if let Some(t) = &ck.training {
        let h = &t.history;
        let best = &h.epochs[h.best_epoch];
        println!(
            "{} model: {} epochs, best epoch {} (train loss {:.4}, val loss {:.4}){}, wrote {}",
            if a.tied { "tied" } else { "untied" },
            h.epochs.len() - 1,
            h.best_epoch,
            best.train_loss,
            best.val_loss,
            if h.stopped_early {
                ", stopped early"
            } else {
                ""
            },
            a.out.display()
        );
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs, seed: Option<u64>) -> CmdResult {
    let cfg = load_config(&a.config, seed)?;
    let checkpoints = a
        .models
        .iter()
        .map(|p| load_checkpoint(p))
        .collect::<Result<Vec<_>, _>>()?;
    let models = label_models(checkpoints);
    let (report, timing) = run_experiment(&cfg, &models)?;
    for f in &report.failures {
        log::warn!(
            "{} {}: {}",
            f.signal.as_deref().unwrap_or("-"),
            f.method.as_deref().unwrap_or("-"),
            f.message
        );
    }
    let dir = a.report.unwrap_or_else(|| cfg.output_dir.clone());
    emit_report(&report, a.timing.then_some(&timing), &dir)?;
    println!(
        "{:>16} {:>6} {:>8} {:>9}",
        "method", "budget", "stoi", "si-sdr"
    );
    for s in report.summaries.iter().filter(|s| s.metric == "stoi") {
        let sdr = report
            .summary("si_sdr", &s.method, s.budget)
            .map(|x| format!("{:.3}", x.stats.median))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:>16} {:>6} {:>8.4} {:>9}",
            s.method, s.budget, s.stats.median, sdr
        );
    }
    println!(
        "{} signals, {} failures, {:.1} s; report in {}",
        report.header.test_signals,
        report.failures.len(),
        timing.total_seconds,
        dir.display()
    );
    Ok(())
}

fn cmd_recover(a: RecoverArgs) -> CmdResult {
    let ck = load_checkpoint(&a.model)?;
    let grid = linear_grid(a.ymin, a.ymax, a.points)?;
    let curves = sample_metric_curve(&ck.model, a.r, &grid)?;
    save_curves_csv(&curves, &a.out)?;
    let missing: usize = curves.iter().map(|c| c.missing()).sum();
    println!(
        "{} curves at r = {}, {missing} non-invertible points, wrote {}",
        curves.len(),
        a.r,
        a.out.display()
    );
    Ok(())
}

fn cmd_synth(a: SynthArgs, seed: Option<u64>) -> CmdResult {
    let spec = CorpusSpec {
        seed: seed.unwrap_or(0),
        train: a.train,
        val: a.val,
        test: a.test,
        seconds: a.seconds,
        sample_rate: a.rate,
    };
    write_corpus(&a.out, &spec)?;
    println!(
        "wrote {} + {} + {} clips to {}",
        a.train,
        a.val,
        a.test,
        a.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let seed = cli.seed;
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a, seed),
        Command::Train(a) => cmd_train(a, seed),
        Command::Eval(a) => cmd_eval(a, seed),
        Command::RecoverMetric(a) => cmd_recover(a),
        Command::SynthCorpus(a) => cmd_synth(a, seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

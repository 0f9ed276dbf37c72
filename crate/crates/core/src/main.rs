use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use eeg_emotion::classifier::{KernelConfig, KernelKind, SmoParams};
use eeg_emotion::eval::{format_percent, ProtocolConfig};
use eeg_emotion::features::FeatureConfig;
use eeg_emotion::pipeline;
use eeg_emotion::preprocess::{PreprocessConfig, SavGolSpec};
use eeg_emotion::synth::SynthConfig;
use eeg_emotion::Error;

#[derive(Parser)]
#[command(name = "eeg-emotion", version, about = "Four-class emotion recognition from headband EEG")]
struct Cli {
    /// Print stage timings to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset (recordings + manifest).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        synth: SynthArgs,
    },
    /// Truncate, impute and smooth every trial of a raw manifest.
    Ingest {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pre: PreArgs,
    },
    /// Extract the 34-feature matrix from a raw or preprocessed manifest.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        /// Output feature matrix file.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pre: PreArgs,
    },
    /// Split, cross-validate and save the selected model.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        protocol: ProtocolArgs,
    },
    /// Score a saved model on its test split.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare all four kernels under the same protocol.
    Report {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        protocol: ProtocolArgs,
    },
    /// synth, ingest, features, train, evaluate and report into one directory.
    Run {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        synth: SynthArgs,
        #[command(flatten)]
        pre: PreArgs,
        #[command(flatten)]
        protocol: ProtocolArgs,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 40)]
    subjects: usize,
    #[arg(long, default_value_t = 4)]
    videos_per_quadrant: usize,
    /// Stimulus duration per video, seconds.
    #[arg(long, default_value_t = 30.0)]
    duration: f64,
    #[arg(long, default_value_t = 0.001)]
    missing_rate: f64,
    #[arg(long, default_value_t = 2.0)]
    noise_std: f64,
    #[arg(long = "synth-seed")]
    synth_seed: Option<u64>,
}

impl SynthArgs {
    fn config(&self, default_seed: u64) -> SynthConfig {
        SynthConfig {
            n_subjects: self.subjects,
            videos_per_quadrant: self.videos_per_quadrant,
            duration_s: self.duration,
            missing_rate: self.missing_rate,
            noise_std: self.noise_std,
            seed: self.synth_seed.unwrap_or(default_seed),
            ..SynthConfig::default()
        }
    }
}

#[derive(Args)]
struct PreArgs {
    #[arg(long, default_value_t = 11)]
    sg_window: usize,
    #[arg(long, default_value_t = 3)]
    sg_order: usize,
}

impl PreArgs {
    fn config(&self) -> PreprocessConfig {
        PreprocessConfig {
            savgol: SavGolSpec { window_len: self.sg_window, poly_order: self.sg_order },
            ..PreprocessConfig::default()
        }
    }
}

#[derive(Args)]
struct ProtocolArgs {
    #[arg(long, default_value = "polynomial")]
    kernel: KernelKind,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// RBF / polynomial scale (default 1/34).
    #[arg(long)]
    gamma: Option<f64>,
    /// Gaussian width.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    coef0: f64,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Training fraction of the stratified split.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_passes: usize,
    /// Retrain on the full training split instead of reusing the best fold's model.
    #[arg(long)]
    refit_full_train: bool,
}

impl ProtocolArgs {
    fn config(&self) -> ProtocolConfig {
        let base = KernelConfig::default();
        ProtocolConfig {
            kernel: KernelConfig {
                kind: self.kernel,
                gamma: self.gamma.unwrap_or(base.gamma),
                sigma: self.sigma,
                degree: self.degree,
                coef0: self.coef0,
            },
            smo: SmoParams { c: self.c, tol: self.tol, max_passes: self.max_passes, ..SmoParams::default() },
            folds: self.folds,
            train_frac: self.split,
            seed: self.seed,
            refit_full_train: self.refit_full_train,
        }
    }
}

struct Timer {
    verbose: bool,
    start: Instant,
}

impl Timer {
    fn done(&mut self, stage: &str) {
        if self.verbose {
            eprintln!("{stage}: {:.2}s", self.start.elapsed().as_secs_f64());
        }
        self.start = Instant::now();
    }
}

fn print_comparison(c: &pipeline::KernelComparison) {
    print!("{}", c.to_text());
}

fn train_then_evaluate(features: &Path, out: &Path, protocol: &ProtocolConfig, t: &mut Timer) -> eeg_emotion::Result<()> {
    let model = pipeline::train_stage(features, out, protocol)?;
    t.done("train");
    let report = pipeline::evaluate_stage(features, &out.join("model.json"), out)?;
    t.done("evaluate");
    let unconverged = model.model.unconverged_pairs().len();
    println!(
        "{}: cv mean {}, best fold {}, test {}{}",
        protocol.kernel.kind,
        format_percent(report.cv.mean_accuracy),
        format_percent(report.cv.best_fold_accuracy),
        format_percent(report.test_accuracy),
        if unconverged > 0 { format!(" ({unconverged} pair model(s) unconverged)") } else { String::new() },
    );
    Ok(())
}

fn run(cli: Cli) -> eeg_emotion::Result<()> {
    let mut t = Timer { verbose: cli.verbose, start: Instant::now() };
    match cli.command {
        Command::Synth { out, synth } => {
            let m = pipeline::synth_stage(&synth.config(42), &out)?;
            t.done("synth");
            println!("wrote {} recordings to {}", m.entries.len(), out.display());
        }
        Command::Ingest { manifest, out, pre } => {
            let s = pipeline::ingest_stage(&manifest, &out, &pre.config())?;
            t.done("ingest");
            println!("ingested {} trials ({} imputed cells) into {}", s.trials, s.imputed_cells, s.manifest.display());
        }
        Command::Features { manifest, out, pre } => {
            let m = pipeline::features_stage(&manifest, &out, &pre.config(), &FeatureConfig::default())?;
            t.done("features");
            println!("wrote {} feature rows to {}", m.rows.len(), out.display());
        }
        Command::Train { features, out, protocol } => {
            let cfg = protocol.config();
            let model = pipeline::train_stage(&features, &out, &cfg)?;
            t.done("train");
            let cv = &model.config["cv"];
            println!(
                "{}: cv mean {}, best fold {}; model written to {}",
                cfg.kernel.kind,
                format_percent(cv["mean_accuracy"].as_f64().unwrap_or(f64::NAN)),
                format_percent(cv["best_fold_accuracy"].as_f64().unwrap_or(f64::NAN)),
                out.join("model.json").display()
            );
        }
        Command::Evaluate { features, model, out } => {
            let r = pipeline::evaluate_stage(&features, &model, &out)?;
            t.done("evaluate");
            print!("{}", r.to_text());
        }
        Command::Report { features, out, protocol } => {
            let c = pipeline::report_stage(&features, &out, &protocol.config())?;
            t.done("report");
            print_comparison(&c);
        }
        Command::Run { out, synth, pre, protocol } => {
            let cfg = protocol.config();
            let data = out.join("data");
            pipeline::synth_stage(&synth.config(cfg.seed), &data)?;
            t.done("synth");
            let store = out.join("trials");
            let pre = pre.config();
            pipeline::ingest_stage(&data.join("manifest.json"), &store, &pre)?;
            t.done("ingest");
            let features = out.join("features.csv");
            pipeline::features_stage(&store.join("manifest.json"), &features, &pre, &FeatureConfig::default())?;
            t.done("features");
            train_then_evaluate(&features, &out.join("model"), &cfg, &mut t)?;
            let c = pipeline::report_stage(&features, &out.join("report"), &cfg)?;
            t.done("report");
            print_comparison(&c);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::FAILURE
        }
    }
}

fn report_error(e: &Error) {
    let kind = e.kind();
    let msg = e.to_string().replace('\n', "; ");
    let msg = msg.strip_prefix(&format!("{kind}: ")).unwrap_or(&msg);
    eprintln!("error[{kind}]: {msg}");
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use edsense::detector::write_bound_reports;
use edsense::experiment::{report_for, run_experiment, ExperimentConfig, ExperimentKind};
use edsense::Error;

#[derive(Parser)]
#[command(name = "edsense", version, about = "Energy detection bounds under noise and signal uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the bound report for one configuration.
    Bounds(BoundsArgs),
    /// Bound reports over an SNR grid.
    Sweep(CommonArgs),
    /// Missed-detection level vs false-alarm bound (same as fig3).
    Roc(CommonArgs),
    /// Monte Carlo check of the bounds over the default scenario set.
    Mc(CommonArgs),
    /// Classical modified-Gaussian baseline curves.
    Baseline(CommonArgs),
    /// False-alarm bounds vs SNR with signal-model overlays.
    Fig1a(CommonArgs),
    /// False-alarm bounds vs SNR with overlays for several Γ.
    Fig1b(CommonArgs),
    /// Bounds vs the Gaussian-assumption curve at n = 100 and 1000.
    Fig2(CommonArgs),
    /// Receiver operating characteristic of the bounds.
    Fig3(CommonArgs),
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Flat key = value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Noise standard deviation band: <lower>,<upper>.
    #[arg(long)]
    noise: Option<String>,
    /// Signal magnitude band: <lower>,<upper> (default: mapped from SNR).
    #[arg(long)]
    band: Option<String>,
    /// Fading model, e.g. constant:eps=1, rician:sigma=1,v=1.
    #[arg(long)]
    fading: Option<String>,
    /// Sample count(s), comma separated.
    #[arg(long)]
    n: Option<String>,
    /// Target missed-detection level.
    #[arg(long)]
    p: Option<String>,
    /// Chernoff parameter β.
    #[arg(long, conflicts_with = "auto_beta")]
    beta: Option<String>,
    /// Choose β by minimizing the false-alarm bound.
    #[arg(long)]
    auto_beta: bool,
    /// SNR grid in dB: <start>:<stop>:<step>.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Monte Carlo trials per scenario.
    #[arg(long)]
    trials: Option<String>,
    /// Base seed; each trial derives its own stream from it.
    #[arg(long)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<String>,
    /// Signal models for overlays, e.g. dtv,dabt,egsm.
    #[arg(long)]
    signal_model: Option<String>,
    /// Pick n so the conservative bound at the calibration SNR hits its target.
    #[arg(long)]
    calibrate_n: bool,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    noise: String,
    #[arg(long)]
    band: String,
    #[arg(long)]
    fading: String,
    #[arg(long)]
    n: String,
    #[arg(long)]
    p: String,
    #[arg(long, required_unless_present = "auto_beta", conflicts_with = "auto_beta")]
    beta: Option<String>,
    #[arg(long)]
    auto_beta: bool,
    /// Also write bounds.csv and a manifest here.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut kv = Vec::new();
        let mut put = |k: &'static str, v: &Option<String>| {
            if let Some(v) = v {
                kv.push((k, v.clone()));
            }
        };
        put("noise", &self.noise);
        put("band", &self.band);
        put("fading", &self.fading);
        put("n", &self.n);
        put("p", &self.p);
        put("beta", &self.beta);
        put("snr_db", &self.snr_db);
        put("trials", &self.trials);
        put("seed", &self.seed);
        put("workers", &self.workers);
        put("signal_models", &self.signal_model);
        if self.auto_beta {
            kv.push(("beta", "auto".into()));
        }
        if self.calibrate_n {
            kv.push(("calibrate_n", "true".into()));
        }
        if self.plot {
            kv.push(("plot", "true".into()));
        }
        if let Some(out) = &self.out {
            kv.push(("out", out.display().to_string()));
        }
        kv
    }

    fn build(&self, kind: ExperimentKind) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.experiment = kind;
        for (key, value) in self.overrides() {
            cfg.set(key, &value)
                .map_err(|e| Error::InvalidParameter(format!("--{}: {e}", key.replace('_', "-"))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run_figure(args: &CommonArgs, kind: ExperimentKind) -> Result<(), Error> {
    let cfg = args.build(kind)?;
    let summary = run_experiment(&cfg)?;
    if let Some(n) = summary.calibrated_n {
        eprintln!("calibrated n = {n}");
    }
    for file in &summary.files {
        println!("{}", file.display());
    }
    Ok(())
}

fn run_bounds(args: &BoundsArgs) -> Result<(), Error> {
    let common = CommonArgs {
        noise: Some(args.noise.clone()),
        band: Some(args.band.clone()),
        fading: Some(args.fading.clone()),
        n: Some(args.n.clone()),
        p: Some(args.p.clone()),
        beta: args.beta.clone(),
        auto_beta: args.auto_beta,
        out: args.out.clone(),
        ..Default::default()
    };
    let cfg = common.build(ExperimentKind::Bounds)?;
    let band = cfg.band.expect("band is a required flag");
    let rows = cfg
        .resolved_n_values()
        .into_iter()
        .map(|n| {
            let base = edsense::detector::DetectorConfig::new(n, cfg.p, 1.0, cfg.noise, band, cfg.fading)?;
            report_for(&base, cfg.beta)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    for (_, _, warning) in &rows {
        if !warning.is_empty() {
            eprintln!("warning: {warning}");
        }
    }
    write_bound_reports(std::io::stdout().lock(), &rows)?;
    if args.out.is_some() {
        run_experiment(&cfg)?;
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        _ if err.is_numeric() => 3,
        Error::InvalidParameter(_) | Error::Parse { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bounds(a) => run_bounds(a),
        Command::Sweep(a) => run_figure(a, ExperimentKind::Sweep),
        Command::Roc(a) | Command::Fig3(a) => run_figure(a, ExperimentKind::Fig3),
        Command::Mc(a) => run_figure(a, ExperimentKind::Mc),
        Command::Baseline(a) => run_figure(a, ExperimentKind::Baseline),
        Command::Fig1a(a) => run_figure(a, ExperimentKind::Fig1a),
        Command::Fig1b(a) => run_figure(a, ExperimentKind::Fig1b),
        Command::Fig2(a) => run_figure(a, ExperimentKind::Fig2),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

//! Experiment orchestration: configuration, SNR mapping, the figure sweeps and
//! their CSV, manifest and SVG outputs.
//!
//! Configuration is a flat `key = value` text file with `#` comments. The CLI
//! feeds its flags through the same [`ExperimentConfig::set`] entry point, so
//! a flag and a file line with the same key behave identically.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::baseline::{
    classical_ed_probabilities, classical_lambda, signal_model, SnrDistribution, SignalModelParams,
};
use crate::detector::{
    bound_report, fa_bound, optimize_beta_for, rule_lambda, write_bound_reports, BetaObjective,
    BoundReport, DetectorConfig, ThresholdRule, BETA_RANGE,
};
use crate::error::{Error, Result};
use crate::fading::{FadingModel, SignalBand};
use crate::gnormal::GNormalParams;
use crate::mcsim::{scenario_sweep, with_workers, Scenario};
use crate::plot::{LinePlot, Series};

/// β used when no admissible β exists and a row must still be produced.
pub const FALLBACK_BETA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Fig1a,
    Fig1b,
    Fig2,
    Fig3,
    Bounds,
    Sweep,
    Mc,
    Baseline,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Fig1a => "fig1a",
            ExperimentKind::Fig1b => "fig1b",
            ExperimentKind::Fig2 => "fig2",
            ExperimentKind::Fig3 => "fig3",
            ExperimentKind::Bounds => "bounds",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Mc => "mc",
            ExperimentKind::Baseline => "baseline",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fig1a" => ExperimentKind::Fig1a,
            "fig1b" => ExperimentKind::Fig1b,
            "fig2" => ExperimentKind::Fig2,
            "fig3" | "roc" => ExperimentKind::Fig3,
            "bounds" => ExperimentKind::Bounds,
            "sweep" => ExperimentKind::Sweep,
            "mc" => ExperimentKind::Mc,
            "baseline" => ExperimentKind::Baseline,
            _ => return Err(Error::invalid(format!("unknown experiment '{s}'"))),
        })
    }
}

/// Inclusive SNR grid in dB, written `start:stop:step` or as a single value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) || stop < start {
            return Err(Error::invalid(format!("bad SNR range {start}:{stop}:{step}")));
        }
        if !(step > 0.0) && stop > start {
            return Err(Error::invalid("SNR step must be positive"));
        }
        Ok(Self { start, stop, step })
    }

    pub fn single(db: f64) -> Result<Self> {
        Self::new(db, db, 1.0)
    }

    pub fn values(&self) -> Vec<f64> {
        if self.stop == self.start {
            return vec![self.start];
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl fmt::Display for SnrRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

impl FromStr for SnrRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("'{t}' is not a number")))
        };
        match parts.as_slice() {
            [one] => Self::single(num(one)?),
            [a, b, c] => Self::new(num(a)?, num(b)?, num(c)?),
            _ => Err(Error::invalid(format!("expected start:stop:step, got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaChoice {
    Fixed(f64),
    /// Minimize the false-alarm bound separately for each curve and point.
    Auto,
}

impl fmt::Display for BetaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaChoice::Fixed(b) => write!(f, "{b}"),
            BetaChoice::Auto => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub snr_db: SnrRange,
    /// `None` picks the experiment default: 100 and 1000 for fig2, otherwise
    /// [`DEFAULT_FIG_N`].
    pub n_values: Option<Vec<u64>>,
    pub p: f64,
    pub noise: GNormalParams,
    /// Fixed signal band; when absent the band comes from the SNR mapping.
    pub band: Option<SignalBand>,
    pub signal_lower_mult: f64,
    pub signal_upper_mult: f64,
    pub fading: FadingModel,
    pub beta: BetaChoice,
    pub trials: u64,
    pub seed: u64,
    pub workers: Option<usize>,
    pub signal_models: Vec<String>,
    pub gammas: Vec<f64>,
    pub chi: f64,
    pub calibrate_n: bool,
    pub calibration_snr_db: f64,
    pub calibration_target: f64,
    pub calibration_max_n: u64,
    pub roc_snr_db: f64,
    pub roc_points: usize,
    pub plot: bool,
    pub out: PathBuf,
}

/// Sample count for the Figure 1 curves, found by [`calibrate_n`] with the
/// default fading at −3 dB and p = 0.01.
pub const DEFAULT_FIG_N: u64 = 741;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Fig1a,
            snr_db: SnrRange { start: -10.0, stop: 10.0, step: 1.0 },
            n_values: None,
            p: 0.01,
            noise: GNormalParams::new(1.0, std::f64::consts::SQRT_2).expect("valid defaults"),
            band: None,
            signal_lower_mult: 0.5,
            signal_upper_mult: 3.0,
            fading: FadingModel::Constant { epsilon: 3.0 },
            beta: BetaChoice::Auto,
            trials: 10_000,
            seed: 1,
            workers: None,
            signal_models: vec!["dtv".into(), "dabt".into(), "egsm".into()],
            gammas: vec![0.01, 0.055, 0.23, 0.29, 0.7],
            chi: 0.2,
            calibrate_n: false,
            calibration_snr_db: -3.0,
            calibration_target: 0.75,
            calibration_max_n: 5000,
            roc_snr_db: -3.0,
            roc_points: 60,
            plot: false,
            out: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("'{v}' is not a valid number"))
}

fn parse_pair(v: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = v
        .split_once(',')
        .ok_or_else(|| format!("expected '<lower>,<upper>', got '{v}'"))?;
    Ok((parse_num(a.trim())?, parse_num(b.trim())?))
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    let items: std::result::Result<Vec<T>, String> =
        v.split(',').map(|t| parse_num(t.trim())).collect();
    let items = items?;
    if items.is_empty() {
        return Err("list is empty".into());
    }
    Ok(items)
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("'{v}' is not a boolean")),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Keys accepted by [`ExperimentConfig::set`], in manifest order.
pub const CONFIG_KEYS: [&str; 24] = [
    "experiment",
    "snr_db",
    "n",
    "p",
    "noise",
    "band",
    "signal_lower_mult",
    "signal_upper_mult",
    "fading",
    "beta",
    "trials",
    "seed",
    "workers",
    "signal_models",
    "gammas",
    "chi",
    "calibrate_n",
    "calibration_snr_db",
    "calibration_target",
    "calibration_max_n",
    "roc_snr_db",
    "roc_points",
    "plot",
    "out",
];

impl ExperimentConfig {
    pub fn for_experiment(kind: ExperimentKind) -> Self {
        Self { experiment: kind, ..Self::default() }
    }

    /// Set one key from its text form. Errors name the key; the caller adds
    /// positions.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let wrap = |msg: String| Error::invalid(format!("{key}: {msg}"));
        match key {
            "experiment" => self.experiment = value.parse()?,
            "snr_db" => self.snr_db = value.parse()?,
            "n" => self.n_values = Some(parse_list(value).map_err(wrap)?),
            "p" => self.p = parse_num(value).map_err(wrap)?,
            "noise" => {
                let (lo, hi) = parse_pair(value).map_err(wrap)?;
                self.noise = GNormalParams::new(lo, hi)?;
            }
            "band" => {
                self.band = if value == "auto" {
                    None
                } else {
                    let (lo, hi) = parse_pair(value).map_err(wrap)?;
                    Some(SignalBand::new(lo, hi)?)
                }
            }
            "signal_lower_mult" => self.signal_lower_mult = parse_num(value).map_err(wrap)?,
            "signal_upper_mult" => self.signal_upper_mult = parse_num(value).map_err(wrap)?,
            "fading" => self.fading = value.parse()?,
            "beta" => {
                self.beta = if value == "auto" {
                    BetaChoice::Auto
                } else {
                    BetaChoice::Fixed(parse_num(value).map_err(wrap)?)
                }
            }
            "trials" => self.trials = parse_num(value).map_err(wrap)?,
            "seed" => self.seed = parse_num(value).map_err(wrap)?,
            "workers" => {
                self.workers = if value == "auto" {
                    None
                } else {
                    Some(parse_num(value).map_err(wrap)?)
                }
            }
            "signal_models" => {
                self.signal_models = value.split(',').map(|s| s.trim().to_string()).collect()
            }
            "gammas" => self.gammas = parse_list(value).map_err(wrap)?,
            "chi" => self.chi = parse_num(value).map_err(wrap)?,
            "calibrate_n" => self.calibrate_n = parse_bool(value).map_err(wrap)?,
            "calibration_snr_db" => self.calibration_snr_db = parse_num(value).map_err(wrap)?,
            "calibration_target" => self.calibration_target = parse_num(value).map_err(wrap)?,
            "calibration_max_n" => self.calibration_max_n = parse_num(value).map_err(wrap)?,
            "roc_snr_db" => self.roc_snr_db = parse_num(value).map_err(wrap)?,
            "roc_points" => self.roc_points = parse_num(value).map_err(wrap)?,
            "plot" => self.plot = parse_bool(value).map_err(wrap)?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(Error::invalid(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parse `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let indent = content.len() - content.trim_start().len();
            let eq = content
                .find('=')
                .ok_or_else(|| Error::parse(line, indent + 1, "expected 'key = value'"))?;
            let key = content[..eq].trim();
            if key.is_empty() {
                return Err(Error::parse(line, indent + 1, "missing key before '='"));
            }
            let after = &content[eq + 1..];
            let value_col = eq + 2 + (after.len() - after.trim_start().len());
            self.set(key, after).map_err(|e| match e {
                Error::Parse { column, message, .. } => {
                    Error::parse(line, value_col + column - 1, message)
                }
                Error::InvalidParameter(msg) if msg.starts_with("unknown key") => {
                    Error::parse(line, indent + 1, msg)
                }
                other => Error::parse(line, value_col, other.to_string()),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(&fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn resolved_n_values(&self) -> Vec<u64> {
        match (&self.n_values, self.experiment) {
            (Some(ns), _) => ns.clone(),
            (None, ExperimentKind::Fig2) => vec![100, 1000],
            (None, _) => vec![DEFAULT_FIG_N],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::invalid(format!("p must lie in (0, 1), got {}", self.p)));
        }
        let ns = self.resolved_n_values();
        if ns.is_empty() || ns.contains(&0) {
            return Err(Error::invalid("n values must be positive"));
        }
        if !(self.signal_lower_mult > 0.0 && self.signal_upper_mult >= self.signal_lower_mult) {
            return Err(Error::invalid("need 0 < signal_lower_mult ≤ signal_upper_mult"));
        }
        if let BetaChoice::Fixed(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::invalid(format!("beta must be positive, got {b}")));
            }
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be positive"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers must be positive"));
        }
        for name in &self.signal_models {
            signal_model(name)?;
        }
        if self.gammas.iter().any(|g| !(*g > 0.0)) || !(self.chi >= 0.0) {
            return Err(Error::invalid("gammas must be positive and chi non-negative"));
        }
        if !(self.calibration_target > 0.0 && self.calibration_target < 1.0) {
            return Err(Error::invalid("calibration_target must lie in (0, 1)"));
        }
        if self.calibration_max_n == 0 || self.roc_points < 2 {
            return Err(Error::invalid("calibration_max_n ≥ 1 and roc_points ≥ 2 required"));
        }
        self.fading.validate()
    }

    /// Every key with its current value, in [`CONFIG_KEYS`] order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let n = self.n_values.as_deref().map(join).unwrap_or_else(|| "auto".into());
        let values = [
            self.experiment.to_string(),
            self.snr_db.to_string(),
            n,
            self.p.to_string(),
            format!("{},{}", self.noise.sigma_lower(), self.noise.sigma_upper()),
            self.band
                .map(|b| format!("{},{}", b.lower(), b.upper()))
                .unwrap_or_else(|| "auto".into()),
            self.signal_lower_mult.to_string(),
            self.signal_upper_mult.to_string(),
            self.fading.to_string(),
            self.beta.to_string(),
            self.trials.to_string(),
            self.seed.to_string(),
            self.workers.map(|w| w.to_string()).unwrap_or_else(|| "auto".into()),
            self.signal_models.join(","),
            join(&self.gammas),
            self.chi.to_string(),
            self.calibrate_n.to_string(),
            self.calibration_snr_db.to_string(),
            self.calibration_target.to_string(),
            self.calibration_max_n.to_string(),
            self.roc_snr_db.to_string(),
            self.roc_points.to_string(),
            self.plot.to_string(),
            self.out.display().to_string(),
        ];
        CONFIG_KEYS.into_iter().zip(values).collect()
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    fn band_at(&self, snr_db: f64) -> Result<(f64, SignalBand)> {
        let (sigma, mapped) =
            snr_mapping_with(snr_db, &self.noise, self.signal_lower_mult, self.signal_upper_mult)?;
        Ok((sigma, self.band.unwrap_or(mapped)))
    }

    fn detector(&self, n: u64, band: SignalBand) -> Result<DetectorConfig> {
        let beta = match self.beta {
            BetaChoice::Fixed(b) => b,
            BetaChoice::Auto => FALLBACK_BETA,
        };
        DetectorConfig::new(n, self.p, beta, self.noise, band, self.fading)
    }
}

/// Signal scale σ and band (σ/2, 3σ) for an SNR given as ½(σ²/σ̲² + σ²/σ̄²).
pub fn snr_mapping(snr_db: f64, noise: &GNormalParams) -> Result<(f64, SignalBand)> {
    snr_mapping_with(snr_db, noise, 0.5, 3.0)
}

pub fn snr_mapping_with(
    snr_db: f64,
    noise: &GNormalParams,
    lower_mult: f64,
    upper_mult: f64,
) -> Result<(f64, SignalBand)> {
    if !snr_db.is_finite() {
        return Err(Error::invalid(format!("SNR must be finite, got {snr_db}")));
    }
    let s = 10f64.powf(snr_db / 10.0);
    let sigma = (2.0 * s / (1.0 / noise.var_lower() + 1.0 / noise.var_upper())).sqrt();
    Ok((sigma, SignalBand::new(lower_mult * sigma, upper_mult * sigma)?))
}

/// Noise power that makes the classical SNR y equal to the mapped one.
pub fn classical_noise_var(noise: &GNormalParams) -> f64 {
    2.0 / (1.0 / noise.var_lower() + 1.0 / noise.var_upper())
}

/// Classical false-alarm probability at SNR `y` when λ is set by the CLT so
/// that the missed-detection probability equals p.
pub fn classical_fa_curve(y: f64, n: u64, p: f64, noise_var: f64) -> Result<f64> {
    let lambda = classical_lambda(y.max(0.0), n, p, noise_var)?;
    Ok(classical_ed_probabilities(y.max(0.0), n, lambda, noise_var)?.1)
}

/// One threshold rule evaluated at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub beta: f64,
    pub lambda: f64,
    /// Upper false-alarm bound; 1 when no β makes λ exceed nσ̄².
    pub fa: f64,
    pub valid: bool,
}

/// λ for `rule` at the chosen β, then the false-alarm bound.
pub fn curve_point(base: &DetectorConfig, beta: BetaChoice, rule: ThresholdRule) -> Result<CurvePoint> {
    let beta = match beta {
        BetaChoice::Fixed(b) => b,
        BetaChoice::Auto => match optimize_beta_for(base, BetaObjective::MinFaBound, rule) {
            Ok(b) => b,
            Err(Error::NoAdmissibleBeta { .. }) => FALLBACK_BETA,
            Err(e) => return Err(e),
        },
    };
    let cfg = base.with_beta(beta)?;
    let lambda = rule_lambda(&cfg, rule)?;
    let fa = fa_bound(&cfg, lambda)?;
    Ok(CurvePoint {
        beta,
        lambda,
        fa: fa.map_or(1.0, |f| f.chernoff.value()),
        valid: fa.is_some(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigRow {
    pub snr_db: f64,
    pub n: u64,
    pub sigma: f64,
    pub band: SignalBand,
    pub conservative: CurvePoint,
    pub aggressive: CurvePoint,
    pub gaussian: f64,
    pub overlays: Vec<f64>,
}

/// Overlay curves of a figure: name and (Γ, χ).
fn overlay_models(cfg: &ExperimentConfig) -> Result<Vec<(String, SignalModelParams)>> {
    match cfg.experiment {
        ExperimentKind::Fig1a | ExperimentKind::Baseline => cfg
            .signal_models
            .iter()
            .map(|name| Ok((name.clone(), signal_model(name)?)))
            .collect(),
        ExperimentKind::Fig1b => Ok(cfg
            .gammas
            .iter()
            .map(|&g| {
                (
                    format!("gamma_{g}"),
                    SignalModelParams { name: "custom", label: "custom", gamma: g, chi: cfg.chi },
                )
            })
            .collect()),
        _ => Ok(Vec::new()),
    }
}

/// Conservative and aggressive bounds plus classical overlays over the SNR
/// grid, for every n. Rows are ordered by n, then SNR.
pub fn figure_rows(cfg: &ExperimentConfig, ns: &[u64]) -> Result<Vec<FigRow>> {
    cfg.validate()?;
    let overlays = overlay_models(cfg)?;
    let noise_var = classical_noise_var(&cfg.noise);
    let points: Vec<(u64, f64)> = ns
        .iter()
        .flat_map(|&n| cfg.snr_db.values().into_iter().map(move |db| (n, db)))
        .collect();
    points
        .par_iter()
        .map(|&(n, db)| {
            let (sigma, band) = cfg.band_at(db)?;
            let base = cfg.detector(n, band)?;
            let gamma0 = 10f64.powf(db / 10.0);
            let curve = |y: f64| classical_fa_curve(y, n, cfg.p, noise_var).unwrap_or(f64::NAN);
            let overlay_values = overlays
                .iter()
                .map(|(_, m)| {
                    let dist = SnrDistribution::for_signal(m, gamma0, n)?;
                    crate::baseline::averaged_probability(curve, &dist)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(FigRow {
                snr_db: db,
                n,
                sigma,
                band,
                conservative: curve_point(&base, cfg.beta, ThresholdRule::Conservative)?,
                aggressive: curve_point(&base, cfg.beta, ThresholdRule::Aggressive)?,
                gaussian: classical_fa_curve(gamma0, n, cfg.p, noise_var)?,
                overlays: overlay_values,
            })
        })
        .collect()
}

/// The n in [1, max_n] whose conservative bound at `snr_db` is closest to
/// `target`; ties go to the smaller n. `None` if no n gives a valid bound.
pub fn calibrate_n(cfg: &ExperimentConfig, snr_db: f64, target: f64, max_n: u64) -> Result<Option<(u64, f64)>> {
    let (_, band) = cfg.band_at(snr_db)?;
    let base = cfg.detector(1, band)?;
    let scored: Vec<Option<(u64, f64)>> = (1..=max_n)
        .into_par_iter()
        .map(|n| -> Result<Option<(u64, f64)>> {
            let point = curve_point(&base.with_n(n)?, cfg.beta, ThresholdRule::Conservative)?;
            Ok(point.valid.then_some((n, point.fa)))
        })
        .collect::<Result<_>>()?;
    Ok(scored.into_iter().flatten().fold(None, |best, (n, fa)| match best {
        Some((_, b)) if (b - target).abs() <= (fa - target).abs() => best,
        _ => Some((n, fa)),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocRow {
    /// Missed-detection level p being capped.
    pub p_md: f64,
    pub conservative: CurvePoint,
    pub aggressive: CurvePoint,
}

/// Trace (missed-detection level, false-alarm bound) pairs by sweeping p on a
/// log grid from 1e-4 to 0.5; each p fixes λ for both rules.
pub fn roc_rows(cfg: &ExperimentConfig, n: u64) -> Result<Vec<RocRow>> {
    cfg.validate()?;
    let (_, band) = cfg.band_at(cfg.roc_snr_db)?;
    let base = cfg.detector(n, band)?;
    let (lo, hi) = (1e-4f64.ln(), 0.5f64.ln());
    let m = cfg.roc_points;
    (0..m)
        .into_par_iter()
        .map(|i| {
            let p = (lo + (hi - lo) * i as f64 / (m - 1) as f64).exp();
            let at = DetectorConfig { p, ..base };
            Ok(RocRow {
                p_md: p,
                conservative: curve_point(&at, cfg.beta, ThresholdRule::Conservative)?,
                aggressive: curve_point(&at, cfg.beta, ThresholdRule::Aggressive)?,
            })
        })
        .collect()
}

/// Bound report at the conservative threshold, with β resolved and a warning
/// when no admissible β exists.
pub fn report_for(base: &DetectorConfig, beta: BetaChoice) -> Result<(DetectorConfig, BoundReport, String)> {
    let (beta, warning) = match beta {
        BetaChoice::Fixed(b) => (b, String::new()),
        BetaChoice::Auto => {
            match optimize_beta_for(base, BetaObjective::MinFaBound, ThresholdRule::Conservative) {
                Ok(b) => (b, String::new()),
                Err(Error::NoAdmissibleBeta { .. }) => (
                    FALLBACK_BETA,
                    format!(
                        "no beta in [{}, {}] puts lambda above n*sigma_hi^2 (decay condition fails); reporting beta={FALLBACK_BETA}",
                        BETA_RANGE.0, BETA_RANGE.1
                    ),
                ),
                Err(e) => return Err(e),
            }
        }
    };
    let cfg = base.with_beta(beta)?;
    let report = bound_report(&cfg)?;
    Ok((cfg, report, warning))
}

fn f(x: f64) -> String {
    crate::fmt_f64(x)
}

fn point_cells(p: &CurvePoint) -> [String; 4] {
    [f(p.beta), f(p.lambda), f(p.fa), p.valid.to_string()]
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(row)?;
    }
    wtr.flush()?;
    Ok(())
}

const POINT_FIELDS: [&str; 4] = ["beta", "lambda", "fa", "valid"];

fn point_header(prefix: &str) -> Vec<String> {
    POINT_FIELDS.iter().map(|k| format!("{prefix}_{k}")).collect()
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub calibrated_n: Option<u64>,
    /// Rows of the bounds experiment, for printing.
    pub bound_rows: Vec<Vec<String>>,
}

/// Run the configured experiment and write its artifacts under `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    match cfg.workers {
        Some(w) => with_workers(w, || run_inner(cfg))?,
        None => run_inner(cfg),
    }
}

fn run_inner(cfg: &ExperimentConfig) -> Result<RunSummary> {
    fs::create_dir_all(&cfg.out)?;
    let mut summary = RunSummary { files: Vec::new(), calibrated_n: None, bound_rows: Vec::new() };
    let mut notes: Vec<(String, String)> = Vec::new();
    let name = cfg.experiment.name();
    let csv_path = cfg.out.join(format!("{name}.csv"));

    let mut ns = cfg.resolved_n_values();
    if cfg.calibrate_n {
        let found = calibrate_n(cfg, cfg.calibration_snr_db, cfg.calibration_target, cfg.calibration_max_n)?
            .ok_or_else(|| {
                Error::Numeric(format!(
                    "no n ≤ {} gives a non-trivial conservative bound at {} dB",
                    cfg.calibration_max_n, cfg.calibration_snr_db
                ))
            })?;
        notes.push(("calibrated_n".into(), found.0.to_string()));
        notes.push(("calibrated_fa_conservative".into(), f(found.1)));
        summary.calibrated_n = Some(found.0);
        ns = vec![found.0];
    }
    notes.push(("n_used".into(), join(&ns)));

    match cfg.experiment {
        ExperimentKind::Fig1a | ExperimentKind::Fig1b | ExperimentKind::Fig2 => {
            let rows = figure_rows(cfg, &ns)?;
            let names: Vec<String> = overlay_models(cfg)?.into_iter().map(|(n, _)| n).collect();
            let mut header: Vec<String> =
                ["snr_db", "n", "sigma", "sx_lo", "sx_hi"].map(String::from).to_vec();
            header.extend(point_header("conservative"));
            header.extend(point_header("aggressive"));
            header.push("gaussian".into());
            header.extend(names.iter().map(|n| format!("baseline_{n}")));
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut row = vec![f(r.snr_db), r.n.to_string(), f(r.sigma), f(r.band.lower()), f(r.band.upper())];
                    row.extend(point_cells(&r.conservative));
                    row.extend(point_cells(&r.aggressive));
                    row.push(f(r.gaussian));
                    row.extend(r.overlays.iter().map(|&v| f(v)));
                    row
                })
                .collect();
            write_csv(&csv_path, &header, &table)?;
            summary.files.push(csv_path);
            notes.push((
                "beta_rule".into(),
                match cfg.beta {
                    BetaChoice::Auto => "optimize_beta(min_fa_bound) per curve and point".into(),
                    BetaChoice::Fixed(b) => format!("fixed {b}"),
                },
            ));
            if cfg.plot {
                for &n in &ns {
                    let sel: Vec<&FigRow> = rows.iter().filter(|r| r.n == n).collect();
                    let mut plot = LinePlot::new(
                        &format!("{name}: upper false-alarm probability, n = {n}"),
                        "SNR (dB)",
                        "false-alarm probability",
                    );
                    let pts = |g: &dyn Fn(&FigRow) -> f64| sel.iter().map(|r| (r.snr_db, g(r))).collect();
                    plot.push(Series::new("conservative", pts(&|r| r.conservative.fa)));
                    plot.push(Series::new("aggressive", pts(&|r| r.aggressive.fa)));
                    plot.push(Series::new("Gaussian assumption", pts(&|r| r.gaussian)).dashed());
                    for (i, label) in names.iter().enumerate() {
                        plot.push(Series::new(label.clone(), pts(&|r| r.overlays[i])).dashed());
                    }
                    let path = cfg.out.join(format!("{name}_n{n}.svg"));
                    fs::write(&path, plot.to_svg())?;
                    summary.files.push(path);
                }
            }
        }
        ExperimentKind::Fig3 => {
            let n = ns[0];
            let rows = roc_rows(cfg, n)?;
            let mut header = vec!["p_md".to_string()];
            header.extend(point_header("conservative"));
            header.extend(point_header("aggressive"));
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut row = vec![f(r.p_md)];
                    row.extend(point_cells(&r.conservative));
                    row.extend(point_cells(&r.aggressive));
                    row
                })
                .collect();
            write_csv(&csv_path, &header, &table)?;
            summary.files.push(csv_path);
            if cfg.plot {
                let mut plot = LinePlot::new(
                    &format!("ROC bounds, n = {n}, SNR = {} dB", cfg.roc_snr_db),
                    "missed-detection level",
                    "false-alarm bound",
                );
                plot.push(Series::new("conservative", rows.iter().map(|r| (r.p_md, r.conservative.fa)).collect()));
                plot.push(Series::new("aggressive", rows.iter().map(|r| (r.p_md, r.aggressive.fa)).collect()));
                let path = cfg.out.join("fig3.svg");
                fs::write(&path, plot.to_svg())?;
                summary.files.push(path);
            }
        }
        ExperimentKind::Bounds | ExperimentKind::Sweep => {
            let dbs = match cfg.experiment {
                ExperimentKind::Bounds => vec![cfg.snr_db.start],
                _ => cfg.snr_db.values(),
            };
            let points: Vec<(f64, u64)> =
                dbs.iter().flat_map(|&db| ns.iter().map(move |&n| (db, n))).collect();
            let reports = points
                .par_iter()
                .map(|&(db, n)| {
                    let (_, band) = cfg.band_at(db)?;
                    report_for(&cfg.detector(n, band)?, cfg.beta)
                })
                .collect::<Result<Vec<_>>>()?;
            if cfg.experiment == ExperimentKind::Bounds {
                write_bound_reports(fs::File::create(&csv_path)?, &reports)?;
                summary.bound_rows = reports.iter().map(|(c, r, w)| r.csv_record(c, w)).collect();
            } else {
                let mut header = vec!["snr_db".to_string()];
                header.extend(crate::detector::BOUND_REPORT_HEADER.map(String::from));
                let table: Vec<Vec<String>> = points
                    .iter()
                    .zip(&reports)
                    .map(|((db, _), (c, r, w))| {
                        let mut row = vec![f(*db)];
                        row.extend(r.csv_record(c, w));
                        row
                    })
                    .collect();
                write_csv(&csv_path, &header, &table)?;
            }
            summary.files.push(csv_path);
        }
        ExperimentKind::Mc => {
            let (_, band) = cfg.band_at(cfg.snr_db.start)?;
            let (det, report, warning) = report_for(&cfg.detector(ns[0], band)?, cfg.beta)?;
            let sweep = scenario_sweep(&det, report.lambda, &Scenario::default_set(), cfg.trials, cfg.seed)?;
            sweep.write_csv(fs::File::create(&csv_path)?)?;
            summary.files.push(csv_path);
            notes.push(("mc_beta".into(), f(det.beta)));
            notes.push(("mc_lambda".into(), f(report.lambda)));
            if !warning.is_empty() {
                notes.push(("warning".into(), warning));
            }
        }
        ExperimentKind::Baseline => {
            let models: Vec<(String, SignalModelParams)> = overlay_models(cfg)?;
            let noise_var = classical_noise_var(&cfg.noise);
            let points: Vec<(u64, f64)> = ns
                .iter()
                .flat_map(|&n| cfg.snr_db.values().into_iter().map(move |db| (n, db)))
                .collect();
            let table = points
                .par_iter()
                .map(|&(n, db)| {
                    let gamma0 = 10f64.powf(db / 10.0);
                    let mut row = vec![f(db), n.to_string(), f(gamma0)];
                    row.push(f(classical_fa_curve(gamma0, n, cfg.p, noise_var)?));
                    for (_, m) in &models {
                        let dist = SnrDistribution::for_signal(m, gamma0, n)?;
                        row.push(f(dist.kappa()));
                        let curve = |y: f64| classical_fa_curve(y, n, cfg.p, noise_var).unwrap_or(f64::NAN);
                        row.push(f(crate::baseline::averaged_probability(curve, &dist)?));
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut header: Vec<String> = ["snr_db", "n", "gamma0", "gaussian"].map(String::from).to_vec();
            for (name, _) in &models {
                header.push(format!("kappa_{name}"));
                header.push(format!("fa_{name}"));
            }
            write_csv(&csv_path, &header, &table)?;
            summary.files.push(csv_path);
        }
    }

    let manifest = cfg.out.join("manifest.txt");
    let mut text = format!("# {name} run\n");
    text.push_str(&cfg.to_text());
    for (k, v) in &notes {
        text.push_str(&format!("{k} = {v}\n"));
    }
    let listed: Vec<String> = summary
        .files
        .iter()
        .map(|p| p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();
    text.push_str(&format!("files = {}\n", listed.join(",")));
    fs::write(&manifest, text)?;
    summary.files.push(manifest);
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_mapping_examples() {
        let unit = GNormalParams::degenerate(1.0).unwrap();
        let (s, band) = snr_mapping(0.0, &unit).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        assert!((band.lower() - 0.5).abs() < 1e-15 && (band.upper() - 3.0).abs() < 1e-15);

        let noise = GNormalParams::new(1.0, 2f64.sqrt()).unwrap();
        let (s0, _) = snr_mapping(0.0, &noise).unwrap();
        assert!((s0 * s0 - 4.0 / 3.0).abs() < 1e-14);
        let (s3, _) = snr_mapping(-3.0, &noise).unwrap();
        assert!((s3 * s3 / (s0 * s0) - 10f64.powf(-0.3)).abs() < 1e-14);
    }

    #[test]
    fn snr_range_grid() {
        let r: SnrRange = "-10:0:2.5".parse().unwrap();
        assert_eq!(r.values(), vec![-10.0, -7.5, -5.0, -2.5, 0.0]);
        assert_eq!("-3".parse::<SnrRange>().unwrap().values(), vec![-3.0]);
        assert!("1:0:1".parse::<SnrRange>().is_err());
        assert!("1:2".parse::<SnrRange>().is_err());
    }

    #[test]
    fn config_text_round_trips() {
        let mut cfg = ExperimentConfig::for_experiment(ExperimentKind::Sweep);
        cfg.apply_text("n = 10, 20\nfading = rician:v=1,sigma=0.5 # comment\nbeta = 0.7\nband = 1,2\nworkers = 2\n")
            .unwrap();
        let mut again = ExperimentConfig::default();
        again.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.n_values, Some(vec![10, 20]));
        assert_eq!(again.beta, BetaChoice::Fixed(0.7));
    }

    #[test]
    fn config_errors_carry_positions() {
        let mut cfg = ExperimentConfig::default();
        match cfg.apply_text("# header\n\n  p = abc\n").unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (3, 7)),
            e => panic!("unexpected {e}"),
        }
        match cfg.apply_text("bogus = 1").unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (1, 1)),
            e => panic!("unexpected {e}"),
        }
        match cfg.apply_text("fading = nakagami:m=2,omega=x").unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (1, 29)),
            e => panic!("unexpected {e}"),
        }
        assert!(cfg.apply_text("no equals sign").is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = ExperimentConfig { p: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.p = 0.01;
        cfg.signal_models = vec!["lte".into()];
        assert!(cfg.validate().is_err());
        cfg.signal_models.clear();
        cfg.n_values = Some(vec![0]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn aggressive_never_exceeds_conservative() {
        let cfg = ExperimentConfig { snr_db: SnrRange::new(-10.0, 6.0, 2.0).unwrap(), ..Default::default() };
        for row in figure_rows(&cfg, &[200, 741]).unwrap() {
            assert!(row.aggressive.fa <= row.conservative.fa, "{row:?}");
            assert!(row.aggressive.lambda >= row.conservative.lambda);
            assert!(row.overlays.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn degenerate_band_roc_curves_coincide() {
        let cfg = ExperimentConfig {
            band: Some(SignalBand::new(1.5, 1.5).unwrap()),
            roc_points: 12,
            ..Default::default()
        };
        for r in roc_rows(&cfg, 300).unwrap() {
            assert_eq!(r.conservative.beta, r.aggressive.beta);
            assert!((r.conservative.lambda - r.aggressive.lambda).abs() <= 1e-9 * r.conservative.lambda.abs());
            assert!((r.conservative.fa - r.aggressive.fa).abs() < 1e-8);
        }
    }

    #[test]
    fn unit_gain_fading_needs_auto_beta_fallback() {
        let noise = GNormalParams::new(1.0, 2f64.sqrt()).unwrap();
        let base = DetectorConfig::new(
            100,
            0.01,
            1.0,
            noise,
            SignalBand::new(0.2, 1.0).unwrap(),
            FadingModel::Constant { epsilon: 1.0 },
        )
        .unwrap();
        let (cfg, report, warning) = report_for(&base, BetaChoice::Auto).unwrap();
        assert_eq!(cfg.beta, FALLBACK_BETA);
        assert!(!report.decay_ok && !report.fa_valid);
        assert!(!warning.is_empty());
    }

    #[test]
    fn classical_curve_decreases_with_snr() {
        let v: Vec<f64> = [0.1, 0.5, 1.0, 2.0]
            .iter()
            .map(|&y| classical_fa_curve(y, 100, 0.01, 1.0).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0]));
    }
}

//! Energy detector threshold and error-probability bounds.
//!
//! The test rejects "signal present" when ΣY_i² ≤ λ. All bounds are carried
//! in log space: `(1 + β)^(−ρn)` underflows long before interesting sample
//! counts.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fading::{k_beta, laplace_argument, FadingModel, SignalBand, SignalEdge};
use crate::gnormal::GNormalParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub n: u64,
    pub p: f64,
    pub beta: f64,
    pub noise: GNormalParams,
    pub band: SignalBand,
    pub fading: FadingModel,
}

impl DetectorConfig {
    pub fn new(
        n: u64,
        p: f64,
        beta: f64,
        noise: GNormalParams,
        band: SignalBand,
        fading: FadingModel,
    ) -> Result<Self> {
        let cfg = Self {
            n,
            p,
            beta,
            noise,
            band,
            fading,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("sample count n must be at least 1"));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::invalid(format!("level p must lie in (0, 1), got {}", self.p)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive, got {}", self.beta)));
        }
        self.fading.validate()
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        let cfg = Self { beta, ..*self };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_n(&self, n: u64) -> Result<Self> {
        let cfg = Self { n, ..*self };
        cfg.validate()?;
        Ok(cfg)
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }
}

/// A probability bound kept as its raw logarithm; [`ProbBound::value`] clamps to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbBound {
    ln_raw: f64,
}

impl ProbBound {
    pub fn from_ln(ln_raw: f64) -> Self {
        Self { ln_raw }
    }

    pub fn ln_raw(&self) -> f64 {
        self.ln_raw
    }

    /// Pre-clamp value; may exceed 1.
    pub fn raw(&self) -> f64 {
        self.ln_raw.exp()
    }

    pub fn value(&self) -> f64 {
        self.ln_raw.min(0.0).exp()
    }
}

/// Threshold slope and intercept, λ = k_β n + d_β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParts {
    pub k_beta: f64,
    pub d_beta: f64,
}

/// Which missed-detection quantity is capped at p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdRule {
    /// Cap the maximum over signals (worst-case signal at the lower edge).
    Conservative,
    /// Cap the minimum over signals (best-case signal at the upper edge).
    Aggressive,
}

impl ThresholdRule {
    fn edge(self) -> SignalEdge {
        match self {
            ThresholdRule::Conservative => SignalEdge::Lower,
            ThresholdRule::Aggressive => SignalEdge::Upper,
        }
    }
}

/// d_β = (2σ̄²/β) ln p.
pub fn d_beta(cfg: &DetectorConfig) -> f64 {
    2.0 * cfg.noise.var_upper() / cfg.beta * cfg.p.ln()
}

pub fn threshold_parts(cfg: &DetectorConfig, rule: ThresholdRule) -> Result<ThresholdParts> {
    cfg.validate()?;
    Ok(ThresholdParts {
        k_beta: k_beta(&cfg.fading, cfg.beta, &cfg.noise, &cfg.band, rule.edge())?,
        d_beta: d_beta(cfg),
    })
}

/// λ = −(2σ̄²n/β) ln E[exp(−Aε²)] + (σ̲²n/β) ln(1 + β) + (2σ̄²/β) ln p, with
/// A built from σ̲_X. Caps the maximum upper missed-detection probability at p.
pub fn threshold_lambda(cfg: &DetectorConfig) -> Result<f64> {
    cfg.validate()?;
    let vu = cfg.noise.var_upper();
    let a = laplace_argument(cfg.beta, cfg.band.lower(), &cfg.noise);
    let ln_l = cfg.fading.ln_laplace_sq(a)?;
    let n = cfg.nf();
    Ok(-(2.0 * vu * n / cfg.beta) * ln_l
        + cfg.noise.var_lower() * n / cfg.beta * cfg.beta.ln_1p()
        + 2.0 * vu / cfg.beta * cfg.p.ln())
}

fn ln_missed_bound(cfg: &DetectorConfig, lambda: f64, signal: f64) -> Result<f64> {
    cfg.validate()?;
    let a = laplace_argument(cfg.beta, signal, &cfg.noise);
    let n = cfg.nf();
    Ok(cfg.beta * lambda / (2.0 * cfg.noise.var_upper()) - cfg.noise.rho() * n * cfg.beta.ln_1p()
        + n * cfg.fading.ln_laplace_sq(a)?)
}

/// exp(βλ/(2σ̄²)) (1 + β)^(−ρn) E[exp(−Aε²)]ⁿ with A from σ̲_X.
pub fn md_max_bound(cfg: &DetectorConfig, lambda: f64) -> Result<ProbBound> {
    ln_missed_bound(cfg, lambda, cfg.band.lower()).map(ProbBound::from_ln)
}

/// As [`md_max_bound`] with A from σ̄_X; bounds the minimum over signals.
pub fn md_min_bound(cfg: &DetectorConfig, lambda: f64) -> Result<ProbBound> {
    ln_missed_bound(cfg, lambda, cfg.band.upper()).map(ProbBound::from_ln)
}

/// False-alarm bounds for a threshold above nσ̄².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FalseAlarmBound {
    /// inf over t of the Chernoff bound: exp(−(n/2) ln(nσ̄²/λ) − λ/(2σ̄²) + n/2).
    pub chernoff: ProbBound,
    /// exp(−d_β/(2σ̄²)) exp(r(k_β) n); never below `chernoff` when λ = k_β n + d_β.
    pub theorem_form: ProbBound,
}

/// Upper false-alarm bound, `None` unless λ > nσ̄².
pub fn fa_bound(cfg: &DetectorConfig, lambda: f64) -> Result<Option<FalseAlarmBound>> {
    let parts = threshold_parts(cfg, ThresholdRule::Conservative)?;
    Ok(chernoff_fa(cfg.n, lambda, &cfg.noise).map(|chernoff| FalseAlarmBound {
        chernoff,
        theorem_form: ProbBound::from_ln(
            -parts.d_beta / (2.0 * cfg.noise.var_upper())
                + decay_rate_unchecked(parts.k_beta, &cfg.noise) * cfg.nf(),
        ),
    }))
}

/// The optimized Chernoff false-alarm value alone; `None` unless λ > nσ̄².
pub fn chernoff_fa(n: u64, lambda: f64, noise: &GNormalParams) -> Option<ProbBound> {
    let n = n as f64;
    let vu = noise.var_upper();
    if !(lambda > n * vu) || !lambda.is_finite() {
        return None;
    }
    Some(ProbBound::from_ln(
        -0.5 * n * (n * vu / lambda).ln() - lambda / (2.0 * vu) + 0.5 * n,
    ))
}

fn decay_rate_unchecked(k: f64, noise: &GNormalParams) -> f64 {
    let vu = noise.var_upper();
    0.5 - 0.5 * (vu / k).ln() - k / (2.0 * vu)
}

/// r(k) = ½ − ½ ln(σ̄²/k) − k/(2σ̄²); zero at k = σ̄², negative elsewhere.
pub fn decay_rate(k: f64, noise: &GNormalParams) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid(format!("decay rate needs k > 0, got {k}")));
    }
    Ok(decay_rate_unchecked(k, noise))
}

/// Threshold that makes [`md_min_bound`] equal p, found by bisection on λ.
pub fn aggressive_lambda(cfg: &DetectorConfig) -> Result<f64> {
    cfg.validate()?;
    let target = cfg.p.ln();
    let f = |lambda: f64| -> Result<f64> { Ok(md_min_bound(cfg, lambda)?.ln_raw() - target) };

    // the log bound is increasing in λ; start from the conservative threshold
    let start = threshold_lambda(cfg)?;
    let mut step = 1.0f64.max(start.abs());
    let (mut lo, mut hi) = (start, start);
    if f(start)? > 0.0 {
        while f(lo)? > 0.0 {
            lo -= step;
            step *= 2.0;
        }
    } else {
        while f(hi)? < 0.0 {
            hi += step;
            step *= 2.0;
        }
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Numeric("could not bracket the aggressive threshold".into()));
    }
    // run to adjacent floats: the slope β/(2σ̄²) can magnify any slack in λ
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if f(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Threshold for a rule: [`threshold_lambda`] or [`aggressive_lambda`].
pub fn rule_lambda(cfg: &DetectorConfig, rule: ThresholdRule) -> Result<f64> {
    match rule {
        ThresholdRule::Conservative => threshold_lambda(cfg),
        ThresholdRule::Aggressive => aggressive_lambda(cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaObjective {
    /// Smallest false-alarm bound at the configured n.
    MinFaBound,
    /// Most negative decay rate r(k_β).
    MaxDecayMagnitude,
}

pub const BETA_RANGE: (f64, f64) = (1e-4, 1e4);
const BETA_GRID: usize = 200;

/// β minimizing the objective for the conservative threshold.
pub fn optimize_beta(cfg: &DetectorConfig, objective: BetaObjective) -> Result<f64> {
    optimize_beta_for(cfg, objective, ThresholdRule::Conservative)
}

/// Log-grid scan of β over [1e-4, 1e4] followed by golden-section refinement
/// in ln β. Only β with λ(β) > nσ̄² are admissible; `cfg.beta` is ignored.
pub fn optimize_beta_for(
    cfg: &DetectorConfig,
    objective: BetaObjective,
    rule: ThresholdRule,
) -> Result<f64> {
    cfg.validate()?;
    let score = |ln_beta: f64| -> f64 {
        beta_score(cfg, ln_beta.exp(), objective, rule).unwrap_or(f64::INFINITY)
    };

    let (lo, hi) = (BETA_RANGE.0.ln(), BETA_RANGE.1.ln());
    let h = (hi - lo) / (BETA_GRID - 1) as f64;
    let grid: Vec<f64> = (0..BETA_GRID).map(|i| lo + i as f64 * h).collect();
    let scores: Vec<f64> = grid.iter().map(|&x| score(x)).collect();
    let best = (0..BETA_GRID)
        .min_by(|&a, &b| scores[a].total_cmp(&scores[b]))
        .expect("grid is non-empty");
    if !scores[best].is_finite() {
        return Err(Error::NoAdmissibleBeta {
            lo: BETA_RANGE.0,
            hi: BETA_RANGE.1,
        });
    }

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(BETA_GRID - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (score(c), score(d));
    for _ in 0..80 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = score(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = score(d);
        }
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok(if fx <= scores[best] { x.exp() } else { grid[best].exp() })
}

fn beta_score(
    cfg: &DetectorConfig,
    beta: f64,
    objective: BetaObjective,
    rule: ThresholdRule,
) -> Result<f64> {
    let cfg = cfg.with_beta(beta)?;
    let parts = threshold_parts(&cfg, rule)?;
    // closed-form threshold keeps the search cheap; the aggressive bisection agrees to 1e-10
    let lambda = parts.k_beta * cfg.nf() + parts.d_beta;
    let fa = chernoff_fa(cfg.n, lambda, &cfg.noise).ok_or(Error::NoAdmissibleBeta {
        lo: beta,
        hi: beta,
    })?;
    Ok(match objective {
        BetaObjective::MinFaBound => fa.ln_raw(),
        BetaObjective::MaxDecayMagnitude => decay_rate(parts.k_beta, &cfg.noise)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub lambda: f64,
    pub k_beta: f64,
    pub d_beta: f64,
    pub rho: f64,
    pub md_max: ProbBound,
    pub md_min: ProbBound,
    pub fa: Option<FalseAlarmBound>,
    pub fa_valid: bool,
    pub decay_rate: f64,
    /// k_β > σ̄²: this β gives exponential decay of the false-alarm bound.
    pub decay_ok: bool,
}

pub const BOUND_REPORT_HEADER: [&str; 18] = [
    "n",
    "p",
    "beta",
    "sigma_lo",
    "sigma_hi",
    "sx_lo",
    "sx_hi",
    "fading_spec",
    "lambda",
    "k_beta",
    "d_beta",
    "md_max",
    "md_min",
    "fa_bound",
    "fa_valid",
    "decay_rate",
    "decay_ok",
    "warning",
];

/// Full report at the conservative threshold.
pub fn bound_report(cfg: &DetectorConfig) -> Result<BoundReport> {
    let parts = threshold_parts(cfg, ThresholdRule::Conservative)?;
    let lambda = threshold_lambda(cfg)?;
    let fa = fa_bound(cfg, lambda)?;
    Ok(BoundReport {
        lambda,
        k_beta: parts.k_beta,
        d_beta: parts.d_beta,
        rho: cfg.noise.rho(),
        md_max: md_max_bound(cfg, lambda)?,
        md_min: md_min_bound(cfg, lambda)?,
        fa,
        fa_valid: fa.is_some(),
        decay_rate: decay_rate(parts.k_beta, &cfg.noise)?,
        decay_ok: parts.k_beta > cfg.noise.var_upper(),
    })
}

impl BoundReport {
    pub fn csv_record(&self, cfg: &DetectorConfig, warning: &str) -> Vec<String> {
        vec![
            cfg.n.to_string(),
            crate::fmt_f64(cfg.p),
            crate::fmt_f64(cfg.beta),
            crate::fmt_f64(cfg.noise.sigma_lower()),
            crate::fmt_f64(cfg.noise.sigma_upper()),
            crate::fmt_f64(cfg.band.lower()),
            crate::fmt_f64(cfg.band.upper()),
            cfg.fading.to_string(),
            crate::fmt_f64(self.lambda),
            crate::fmt_f64(self.k_beta),
            crate::fmt_f64(self.d_beta),
            crate::fmt_f64(self.md_max.value()),
            crate::fmt_f64(self.md_min.value()),
            self.fa.map(|f| crate::fmt_f64(f.chernoff.value())).unwrap_or_default(),
            self.fa_valid.to_string(),
            crate::fmt_f64(self.decay_rate),
            self.decay_ok.to_string(),
            warning.to_string(),
        ]
    }
}

/// Header plus one row per report.
pub fn write_bound_reports<W: Write>(
    out: W,
    rows: &[(DetectorConfig, BoundReport, String)],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(BOUND_REPORT_HEADER)?;
    for (cfg, report, warning) in rows {
        wtr.write_record(report.csv_record(cfg, warning))?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_cfg() -> DetectorConfig {
        DetectorConfig::new(
            100,
            0.01,
            1.0,
            GNormalParams::new(1.0, 2f64.sqrt()).unwrap(),
            SignalBand::new(1.0, 3.0).unwrap(),
            FadingModel::constant(1.0).unwrap(),
        )
        .unwrap()
    }

    const EXAMPLE_K: f64 = 0.5 + std::f64::consts::LN_2;

    #[test]
    fn config_validation() {
        let cfg = example_cfg();
        assert!(cfg.with_n(0).is_err());
        assert!(cfg.with_beta(0.0).is_err());
        assert!(DetectorConfig { p: 1.0, ..cfg }.validate().is_err());
        assert!(DetectorConfig { p: 0.0, ..cfg }.validate().is_err());
    }

    #[test]
    fn threshold_example() {
        let cfg = example_cfg();
        let want = EXAMPLE_K * 100.0 + 4.0 * 0.01f64.ln();
        let got = threshold_lambda(&cfg).unwrap();
        assert!((got - want).abs() < 1e-11);
        assert!((got - 100.894).abs() < 1e-3);
        let parts = threshold_parts(&cfg, ThresholdRule::Conservative).unwrap();
        assert!((parts.k_beta * 100.0 + parts.d_beta - got).abs() <= 1e-12 * got.abs());
    }

    #[test]
    fn unit_level_has_zero_intercept() {
        // p = 1 sits outside the admissible level range, so check d_β directly
        let cfg = DetectorConfig {
            p: 1.0,
            ..example_cfg()
        };
        assert_eq!(d_beta(&cfg), 0.0);
    }

    #[test]
    fn md_max_at_threshold_is_p() {
        let cfg = example_cfg();
        let lambda = threshold_lambda(&cfg).unwrap();
        assert!((md_max_bound(&cfg, lambda).unwrap().raw() - 0.01).abs() < 1e-12);
        assert!(md_max_bound(&cfg, -1e6).unwrap().value() < 1e-300);
    }

    #[test]
    fn md_max_shift_example() {
        let cfg = example_cfg();
        let lambda_star = threshold_lambda(&cfg).unwrap();
        let got = md_max_bound(&cfg, 100.0).unwrap().value();
        let want = 0.01 * ((100.0 - lambda_star) / 4.0).exp();
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.007_997_074_321_534_455).abs() < 1e-12);
    }

    #[test]
    fn md_min_examples() {
        let cfg = example_cfg();
        let lambda = threshold_lambda(&cfg).unwrap();
        let min = md_min_bound(&cfg, lambda).unwrap().value();
        assert!(min < 0.01);
        assert!(min < md_max_bound(&cfg, lambda).unwrap().value());

        let flat = DetectorConfig {
            band: SignalBand::new(1.0, 1.0).unwrap(),
            ..cfg
        };
        assert_eq!(
            md_min_bound(&flat, lambda).unwrap(),
            md_max_bound(&flat, lambda).unwrap()
        );
    }

    #[test]
    fn fa_examples() {
        let unit = GNormalParams::new(1.0, 1.0).unwrap();
        let e = std::f64::consts::E;
        let fa = chernoff_fa(10, 10.0 * e, &unit).unwrap().value();
        assert!((fa - (10.0 - 5.0 * e).exp()).abs() < 1e-15);
        assert!((fa - 0.027_559_467_836_460_39).abs() < 1e-12);
        assert!(chernoff_fa(10, 10.0, &unit).is_none());
        assert!(chernoff_fa(10, 3.0, &unit).is_none());

        let cfg = example_cfg();
        assert!(fa_bound(&cfg, 150.0).unwrap().is_none());
        let fa = fa_bound(&cfg, 250.0).unwrap().unwrap();
        assert!(fa.chernoff.value() < 1.0);
    }

    #[test]
    fn theorem_form_dominates_chernoff_at_threshold() {
        let cfg = DetectorConfig {
            n: 1000,
            fading: FadingModel::constant(1.5).unwrap(),
            beta: 0.2,
            ..example_cfg()
        };
        let lambda = threshold_lambda(&cfg).unwrap();
        let fa = fa_bound(&cfg, lambda).unwrap().expect("valid at n = 1000");
        assert!(fa.theorem_form.ln_raw() >= fa.chernoff.ln_raw());
    }

    #[test]
    fn decay_rate_examples() {
        let n = GNormalParams::new(1.0, 2f64.sqrt()).unwrap();
        assert!(decay_rate(2.0, &n).unwrap().abs() < 1e-15);
        let r = decay_rate(3.0, &n).unwrap();
        assert!((r - (0.5 - 0.5 * (2.0f64 / 3.0).ln() - 0.75)).abs() < 1e-15);
        assert!((r + 0.047_267_445_945_917_81).abs() < 1e-12);
        for k in [0.01, 0.5, 1.9, 2.1, 10.0, 1e4] {
            assert!(decay_rate(k, &n).unwrap() < 0.0);
        }
        assert!(decay_rate(0.0, &n).is_err());
    }

    #[test]
    fn aggressive_matches_closed_form() {
        let cfg = example_cfg();
        let lambda = aggressive_lambda(&cfg).unwrap();
        let parts = threshold_parts(&cfg, ThresholdRule::Aggressive).unwrap();
        let closed = parts.k_beta * 100.0 + parts.d_beta;
        assert!((lambda - closed).abs() <= 1e-9 * closed.abs());
        assert!((md_min_bound(&cfg, lambda).unwrap().raw() - 0.01).abs() < 1e-8);
        assert!(lambda > threshold_lambda(&cfg).unwrap());
    }

    #[test]
    fn no_admissible_beta_without_decay() {
        let cfg = DetectorConfig {
            band: SignalBand::new(1.0, 1.0).unwrap(),
            n: 10_000,
            ..example_cfg()
        };
        assert!(matches!(
            optimize_beta(&cfg, BetaObjective::MinFaBound),
            Err(Error::NoAdmissibleBeta { .. })
        ));
    }

    #[test]
    fn optimized_beta_beats_samples() {
        let cfg = DetectorConfig {
            band: SignalBand::new(10.0, 12.0).unwrap(),
            ..example_cfg()
        };
        for objective in [BetaObjective::MinFaBound, BetaObjective::MaxDecayMagnitude] {
            let best = optimize_beta(&cfg, objective).unwrap();
            let at = |b| beta_score(&cfg, b, objective, ThresholdRule::Conservative).unwrap();
            for b in [0.1, 1.0, 10.0] {
                assert!(at(best) <= at(b) + 1e-12, "{objective:?}: β*={best} vs {b}");
            }
        }
        let best = optimize_beta(&cfg, BetaObjective::MinFaBound).unwrap();
        let tuned = cfg.with_beta(best).unwrap();
        let fa = fa_bound(&tuned, threshold_lambda(&tuned).unwrap()).unwrap().unwrap();
        assert!(fa.chernoff.value() < cfg.p);
    }

    #[test]
    fn report_is_consistent() {
        let cfg = example_cfg();
        let r = bound_report(&cfg).unwrap();
        assert!(r.md_min.value() <= r.md_max.value());
        assert_eq!(r.fa_valid, r.fa.is_some());
        assert!(!r.decay_ok);
        assert!((r.rho - 0.25).abs() < 1e-15);
        let rec = r.csv_record(&cfg, "");
        assert_eq!(rec.len(), BOUND_REPORT_HEADER.len());
        assert_eq!(rec[7], "constant:eps=1");
        assert_eq!(rec[13], "");
    }
}

//! Seeded Monte Carlo over explicit admissible scenarios.
//!
//! Each scenario fixes one classical law inside the uncertainty family: a
//! noise-variance path in [σ̲², σ̄²], signal magnitudes in [σ̲_X, σ̄_X], and
//! i.i.d. fading. Simulated rates are therefore **lower** bounds for the upper
//! probabilities; the supremum over the family is never reached by sampling.
//! The harness can only show that the analytic upper bounds dominate what it
//! observes.
//!
//! Every trial draws from its own ChaCha8 stream (key from the seed and the
//! scenario, stream id = trial index), so results do not depend on how trials
//! are spread across threads.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::detector::{fa_bound, md_max_bound, DetectorConfig};
use crate::error::{Error, Result};
use crate::fading::FadingSampler;

#[derive(Debug, Clone, PartialEq)]
pub enum VariancePolicy {
    ConstLower,
    ConstUpper,
    /// σ̲² on even samples, σ̄² on odd ones.
    Alternating,
    /// Each sample's variance drawn uniformly from [σ̲², σ̄²].
    IidUniformOnBand,
    PerSampleList(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalPolicy {
    ConstLower,
    ConstUpper,
    PerSampleList(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignPolicy {
    AllPlus,
    IidSigns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub variance: VariancePolicy,
    pub signal: SignalPolicy,
    pub sign: SignPolicy,
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    bytes.into_iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn list_tag(name: &str, xs: &[f64]) -> String {
    let h = fnv1a(xs.iter().flat_map(|x| x.to_bits().to_le_bytes()));
    format!("{name}#{h:016x}")
}

impl VariancePolicy {
    pub fn label(&self) -> String {
        match self {
            VariancePolicy::ConstLower => "const_lower".into(),
            VariancePolicy::ConstUpper => "const_upper".into(),
            VariancePolicy::Alternating => "alternating".into(),
            VariancePolicy::IidUniformOnBand => "iid_uniform_on_band".into(),
            VariancePolicy::PerSampleList(xs) => list_tag("per_sample_list", xs),
        }
    }
}

impl SignalPolicy {
    pub fn label(&self) -> String {
        match self {
            SignalPolicy::ConstLower => "const_lower".into(),
            SignalPolicy::ConstUpper => "const_upper".into(),
            SignalPolicy::PerSampleList(xs) => list_tag("per_sample_list", xs),
        }
    }
}

impl SignPolicy {
    pub fn label(&self) -> &'static str {
        match self {
            SignPolicy::AllPlus => "all_plus",
            SignPolicy::IidSigns => "iid_signs",
        }
    }
}

impl Scenario {
    pub fn new(variance: VariancePolicy, signal: SignalPolicy, sign: SignPolicy) -> Self {
        Self {
            variance,
            signal,
            sign,
        }
    }

    pub fn label(&self) -> String {
        format!(
            "{}/{}/{}",
            self.variance.label(),
            self.signal.label(),
            self.sign.label()
        )
    }

    /// {const_lower, const_upper, alternating, iid_uniform_on_band} ×
    /// {const_lower, const_upper} signals, all signs positive.
    pub fn default_set() -> Vec<Scenario> {
        let variances = [
            VariancePolicy::ConstLower,
            VariancePolicy::ConstUpper,
            VariancePolicy::Alternating,
            VariancePolicy::IidUniformOnBand,
        ];
        variances
            .iter()
            .flat_map(|v| {
                [SignalPolicy::ConstLower, SignalPolicy::ConstUpper]
                    .into_iter()
                    .map(move |s| Scenario::new(v.clone(), s, SignPolicy::AllPlus))
            })
            .collect()
    }

    pub fn validate(&self, cfg: &DetectorConfig) -> Result<()> {
        let n = cfg.n as usize;
        if let VariancePolicy::PerSampleList(vs) = &self.variance {
            if vs.len() != n {
                return Err(Error::invalid(format!(
                    "variance list has {} entries, expected n = {n}",
                    vs.len()
                )));
            }
            let (lo, hi) = (cfg.noise.var_lower(), cfg.noise.var_upper());
            if let Some(v) = vs.iter().find(|v| !(**v >= lo && **v <= hi)) {
                return Err(Error::invalid(format!("variance {v} outside [{lo}, {hi}]")));
            }
        }
        if let SignalPolicy::PerSampleList(xs) = &self.signal {
            if xs.len() != n {
                return Err(Error::invalid(format!(
                    "signal list has {} entries, expected n = {n}",
                    xs.len()
                )));
            }
            let (lo, hi) = (cfg.band.lower(), cfg.band.upper());
            if let Some(x) = xs.iter().find(|x| !(**x >= lo && **x <= hi)) {
                return Err(Error::invalid(format!("signal magnitude {x} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    MissedDetection,
    FalseAlarm,
}

impl Event {
    pub fn label(&self) -> &'static str {
        match self {
            Event::MissedDetection => "missed_detection",
            Event::FalseAlarm => "false_alarm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub trials: u64,
    pub hits: u64,
    pub rate: f64,
    pub stderr: f64,
    pub seed: u64,
    pub scenario: Scenario,
}

impl SimResult {
    fn new(trials: u64, hits: u64, seed: u64, scenario: Scenario) -> Self {
        let rate = hits as f64 / trials as f64;
        Self {
            trials,
            hits,
            rate,
            stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
            seed,
            scenario,
        }
    }

    /// rate ≤ bound + 3·stderr.
    pub fn dominated_by(&self, bound: f64) -> bool {
        self.rate <= bound + 3.0 * self.stderr
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_key(seed: u64, event: Event, tag: &str) -> [u8; 32] {
    let mut state = seed ^ fnv1a(event.label().bytes().chain(tag.bytes()));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

const CHUNK: u64 = 1024;

fn count_hits<F>(trials: u64, key: [u8; 32], trial: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let hi = ((c + 1) * CHUNK).min(trials);
            (c * CHUNK..hi)
                .filter(|&t| {
                    let mut rng = ChaCha8Rng::from_seed(key);
                    rng.set_stream(t);
                    trial(&mut rng)
                })
                .count() as u64
        })
        .sum()
}

/// Run `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T, F>(workers: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

enum NoiseScales {
    PerSample(Vec<f64>),
    Uniform(f64, f64),
}

impl NoiseScales {
    fn new(policy: &VariancePolicy, cfg: &DetectorConfig) -> Self {
        let n = cfg.n as usize;
        let (lo, hi) = (cfg.noise.sigma_lower(), cfg.noise.sigma_upper());
        match policy {
            VariancePolicy::ConstLower => NoiseScales::PerSample(vec![lo; n]),
            VariancePolicy::ConstUpper => NoiseScales::PerSample(vec![hi; n]),
            VariancePolicy::Alternating => {
                NoiseScales::PerSample((0..n).map(|i| if i % 2 == 0 { lo } else { hi }).collect())
            }
            VariancePolicy::IidUniformOnBand => {
                NoiseScales::Uniform(cfg.noise.var_lower(), cfg.noise.var_upper())
            }
            VariancePolicy::PerSampleList(vs) => {
                NoiseScales::PerSample(vs.iter().map(|v| v.sqrt()).collect())
            }
        }
    }

    fn draw<R: Rng>(&self, i: usize, rng: &mut R) -> f64 {
        match self {
            NoiseScales::PerSample(s) => s[i],
            NoiseScales::Uniform(lo, hi) => {
                if lo == hi {
                    lo.sqrt()
                } else {
                    rng.random_range(*lo..=*hi).sqrt()
                }
            }
        }
    }
}

fn check_run(cfg: &DetectorConfig, scenario: &Scenario, trials: u64) -> Result<()> {
    cfg.validate()?;
    scenario.validate(cfg)?;
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    Ok(())
}

/// Fraction of trials with Σ(ε_i X_i + Z_i)² ≤ λ when a signal is present.
pub fn simulate_missed_detection(
    cfg: &DetectorConfig,
    lambda: f64,
    scenario: &Scenario,
    trials: u64,
    seed: u64,
) -> Result<SimResult> {
    check_run(cfg, scenario, trials)?;
    let n = cfg.n as usize;
    let fading: FadingSampler = cfg.fading.sampler()?;
    let noise = NoiseScales::new(&scenario.variance, cfg);
    let mags: Vec<f64> = match &scenario.signal {
        SignalPolicy::ConstLower => vec![cfg.band.lower(); n],
        SignalPolicy::ConstUpper => vec![cfg.band.upper(); n],
        SignalPolicy::PerSampleList(xs) => xs.clone(),
    };
    let random_signs = scenario.sign == SignPolicy::IidSigns;

    let key = stream_key(seed, Event::MissedDetection, &scenario.label());
    let hits = count_hits(trials, key, |rng| {
        let mut energy = 0.0;
        for (i, mag) in mags.iter().enumerate() {
            let eps = fading.sample(rng);
            let sd = noise.draw(i, rng);
            let x = if random_signs && rng.random::<bool>() { -mag } else { *mag };
            let z: f64 = StandardNormal.sample(rng);
            let y = eps * x + sd * z;
            energy += y * y;
            if energy > lambda {
                return false;
            }
        }
        energy <= lambda
    });
    Ok(SimResult::new(trials, hits, seed, scenario.clone()))
}

/// Fraction of trials with ΣZ_i² ≥ λ when the channel is idle. The signal
/// policy plays no role.
pub fn simulate_false_alarm(
    cfg: &DetectorConfig,
    lambda: f64,
    scenario: &Scenario,
    trials: u64,
    seed: u64,
) -> Result<SimResult> {
    check_run(cfg, scenario, trials)?;
    let n = cfg.n as usize;
    let noise = NoiseScales::new(&scenario.variance, cfg);
    // keyed on the variance path only, so scenarios differing in signal agree
    let key = stream_key(seed, Event::FalseAlarm, &scenario.variance.label());
    let hits = count_hits(trials, key, |rng| {
        let mut energy = 0.0;
        for i in 0..n {
            let sd = noise.draw(i, rng);
            let z: f64 = StandardNormal.sample(rng);
            energy += sd * sd * z * z;
            if energy >= lambda {
                return true;
            }
        }
        energy >= lambda
    });
    Ok(SimResult::new(trials, hits, seed, scenario.clone()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario_id: usize,
    pub event: Event,
    pub result: SimResult,
    /// Analytic upper bound for the event: md_max, or the false-alarm bound
    /// (1 when λ ≤ nσ̄² leaves only the trivial bound).
    pub bound: f64,
    pub dominated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Largest simulated missed-detection rate: a lower bound for the maximum upper probability.
    pub max_missed: SimResult,
    /// Largest simulated false-alarm rate: a lower bound for the upper probability.
    pub max_false_alarm: SimResult,
}

fn max_rate<'a>(rows: impl Iterator<Item = &'a SweepRow>) -> SimResult {
    rows.map(|r| &r.result)
        .fold(None::<&SimResult>, |best, r| match best {
            Some(b) if b.rate >= r.rate => Some(b),
            _ => Some(r),
        })
        .expect("non-empty scenario set")
        .clone()
}

/// Both simulations for every scenario, with the analytic bounds alongside.
pub fn scenario_sweep(
    cfg: &DetectorConfig,
    lambda: f64,
    scenarios: &[Scenario],
    trials: u64,
    seed: u64,
) -> Result<SweepReport> {
    if scenarios.is_empty() {
        return Err(Error::invalid("scenario set is empty"));
    }
    let md_bound = md_max_bound(cfg, lambda)?.value();
    let fa = fa_bound(cfg, lambda)?.map_or(1.0, |f| f.chernoff.value());

    let mut rows = Vec::with_capacity(2 * scenarios.len());
    let mut fa_cache: HashMap<String, SimResult> = HashMap::new();
    for (id, scenario) in scenarios.iter().enumerate() {
        let md = simulate_missed_detection(cfg, lambda, scenario, trials, seed)?;
        rows.push(SweepRow {
            scenario_id: id,
            event: Event::MissedDetection,
            dominated: md.dominated_by(md_bound),
            result: md,
            bound: md_bound,
        });

        let tag = scenario.variance.label();
        let fa_result = match fa_cache.get(&tag) {
            Some(r) => SimResult {
                scenario: scenario.clone(),
                ..r.clone()
            },
            None => {
                let r = simulate_false_alarm(cfg, lambda, scenario, trials, seed)?;
                fa_cache.insert(tag, r.clone());
                r
            }
        };
        rows.push(SweepRow {
            scenario_id: id,
            event: Event::FalseAlarm,
            dominated: fa_result.dominated_by(fa),
            result: fa_result,
            bound: fa,
        });
    }

    Ok(SweepReport {
        max_missed: max_rate(rows.iter().filter(|r| r.event == Event::MissedDetection)),
        max_false_alarm: max_rate(rows.iter().filter(|r| r.event == Event::FalseAlarm)),
        rows,
    })
}

pub const SWEEP_HEADER: [&str; 10] = [
    "scenario_id",
    "variance_policy",
    "signal_policy",
    "event",
    "trials",
    "hits",
    "rate",
    "stderr",
    "bound",
    "dominated",
];

impl SweepReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(SWEEP_HEADER)?;
        for row in &self.rows {
            let r = &row.result;
            wtr.write_record([
                row.scenario_id.to_string(),
                r.scenario.variance.label(),
                r.scenario.signal.label(),
                row.event.label().to_string(),
                r.trials.to_string(),
                r.hits.to_string(),
                crate::fmt_f64(r.rate),
                crate::fmt_f64(r.stderr),
                crate::fmt_f64(row.bound),
                row.dominated.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

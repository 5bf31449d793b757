//! Classical comparison model: a truncated ("modified") Gaussian law for the
//! received SNR and the usual CLT approximation of the energy detector.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, DEFAULT_ABS_TOL};
use crate::special::{normal_cdf, normal_quantile, normal_sf};

/// SNR-uncertainty parameters for one signal family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalModelParams {
    pub name: &'static str,
    pub label: &'static str,
    pub gamma: f64,
    pub chi: f64,
}

pub const SIGNAL_MODELS: [SignalModelParams; 5] = [
    SignalModelParams { name: "dtv", label: "digital TV", gamma: 0.01, chi: 0.59 },
    SignalModelParams { name: "dabt", label: "DAB-T", gamma: 0.055, chi: 0.051 },
    SignalModelParams { name: "egsm", label: "E-GSM", gamma: 0.23, chi: 0.24 },
    SignalModelParams { name: "atv", label: "analogical TV", gamma: 0.29, chi: 0.17 },
    SignalModelParams { name: "umts", label: "UMTS", gamma: 0.7, chi: 0.23 },
];

pub fn signal_model(name: &str) -> Result<SignalModelParams> {
    SIGNAL_MODELS
        .iter()
        .find(|m| m.name.eq_ignore_ascii_case(name))
        .copied()
        .ok_or_else(|| {
            let known: Vec<_> = SIGNAL_MODELS.iter().map(|m| m.name).collect();
            Error::invalid(format!("unknown signal model '{name}' (expected one of {})", known.join("|")))
        })
}

/// 1/P(γ ≥ 0) for γ ~ N(γ₀, σ_γ²).
pub fn normalization_kappa(gamma0: f64, sigma_gamma: f64) -> Result<f64> {
    if !(gamma0 > 0.0 && gamma0.is_finite()) || !(sigma_gamma > 0.0 && sigma_gamma.is_finite()) {
        return Err(Error::invalid(format!(
            "need gamma0 > 0 and sigma_gamma > 0, got {gamma0} and {sigma_gamma}"
        )));
    }
    Ok(1.0 / normal_cdf(gamma0 / sigma_gamma))
}

/// Gaussian SNR law truncated to [0, ∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrDistribution {
    gamma0: f64,
    sigma_gamma: f64,
    kappa: f64,
    n: u64,
}

impl SnrDistribution {
    pub fn new(gamma0: f64, sigma_gamma: f64) -> Result<Self> {
        let kappa = normalization_kappa(gamma0, sigma_gamma)?;
        Ok(Self { gamma0, sigma_gamma, kappa, n: 0 })
    }

    /// σ_γ² = Γ·N^(−χ)·γ₀², with N taken to be the detector's sample count.
    pub fn for_signal(model: &SignalModelParams, gamma0: f64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("sample count must be positive"));
        }
        if !(model.gamma > 0.0) || !(model.chi >= 0.0) {
            return Err(Error::invalid(format!("bad signal model parameters for {}", model.name)));
        }
        let sigma = (model.gamma * (n as f64).powf(-model.chi)).sqrt() * gamma0;
        let mut dist = Self::new(gamma0, sigma)?;
        dist.n = n;
        Ok(dist)
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn sigma_gamma(&self) -> f64 {
        self.sigma_gamma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Sample count used for σ_γ, or 0 when σ_γ was given directly.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        let z = (y - self.gamma0) / self.sigma_gamma;
        self.kappa * (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * self.sigma_gamma)
    }

    /// Upper end of the integration range.
    pub fn support_end(&self) -> f64 {
        self.gamma0 + 12.0 * self.sigma_gamma
    }

    // Extra breaks around the mode keep narrow peaks from being stepped over.
    fn breaks(&self) -> Vec<f64> {
        let lo = (self.gamma0 - 12.0 * self.sigma_gamma).max(0.0);
        let mut b = vec![0.0, lo, self.gamma0, self.support_end()];
        b.dedup();
        b
    }
}

/// ∫ curve(y)·f(y) dy over [0, γ₀ + 12σ_γ].
pub fn averaged_probability<F: Fn(f64) -> f64>(curve: F, dist: &SnrDistribution) -> Result<f64> {
    let v = integrate_with_breaks(|y| curve(y) * dist.pdf(y), &dist.breaks(), DEFAULT_ABS_TOL)?;
    Ok(v.clamp(0.0, 1.0))
}

/// (P_md, P_fa) of the energy detector under the Gaussian (CLT) approximation
/// of the chi-square statistic.
pub fn classical_ed_probabilities(snr: f64, n: u64, lambda: f64, noise_var: f64) -> Result<(f64, f64)> {
    if !(snr >= 0.0) || n == 0 || !(noise_var > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!(
            "need snr ≥ 0, n ≥ 1, noise_var > 0 and finite lambda; got {snr}, {n}, {noise_var}, {lambda}"
        )));
    }
    let nf = n as f64;
    let root = (2.0 * nf).sqrt();
    let p_fa = normal_sf((lambda - nf * noise_var) / (root * noise_var));
    let loud = noise_var * (1.0 + snr);
    let p_md = normal_cdf((lambda - nf * loud) / (root * loud));
    Ok((p_md, p_fa))
}

/// Threshold putting the CLT missed-detection probability at exactly `p_md`.
pub fn classical_lambda(snr: f64, n: u64, p_md: f64, noise_var: f64) -> Result<f64> {
    if !(p_md > 0.0 && p_md < 1.0) {
        return Err(Error::invalid(format!("target probability must be in (0, 1), got {p_md}")));
    }
    classical_ed_probabilities(snr, n, 0.0, noise_var)?;
    let nf = n as f64;
    let loud = noise_var * (1.0 + snr);
    Ok(nf * loud + (2.0 * nf).sqrt() * loud * normal_quantile(p_md))
}

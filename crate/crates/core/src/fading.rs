//! Channel fading laws, their Laplace-type transform E[exp(−A ε²)], and the
//! threshold slope k_β built from it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::gnormal::GNormalParams;
use crate::special::{ln_bessel_i0, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingModel {
    Constant { epsilon: f64 },
    Rayleigh { sigma: f64 },
    Rician { sigma: f64, v: f64 },
    Nakagami { m: f64, omega: f64 },
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

impl FadingModel {
    pub fn constant(epsilon: f64) -> Result<Self> {
        let m = FadingModel::Constant { epsilon };
        m.validate().map(|_| m)
    }

    pub fn rayleigh(sigma: f64) -> Result<Self> {
        let m = FadingModel::Rayleigh { sigma };
        m.validate().map(|_| m)
    }

    pub fn rician(sigma: f64, v: f64) -> Result<Self> {
        let m = FadingModel::Rician { sigma, v };
        m.validate().map(|_| m)
    }

    pub fn nakagami(m: f64, omega: f64) -> Result<Self> {
        let model = FadingModel::Nakagami { m, omega };
        model.validate().map(|_| model)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingModel::Constant { epsilon } => positive("epsilon", epsilon),
            FadingModel::Rayleigh { sigma } => positive("sigma", sigma),
            FadingModel::Rician { sigma, v } => {
                positive("sigma", sigma)?;
                if v >= 0.0 && v.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("rician v must be >= 0, got {v}")))
                }
            }
            FadingModel::Nakagami { m, omega } => {
                if !(m >= 0.5 && m.is_finite()) {
                    return Err(Error::invalid(format!("nakagami m must be >= 1/2, got {m}")));
                }
                positive("omega", omega)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FadingModel::Constant { .. } => "constant",
            FadingModel::Rayleigh { .. } => "rayleigh",
            FadingModel::Rician { .. } => "rician",
            FadingModel::Nakagami { .. } => "nakagami",
        }
    }

    /// E[ε²].
    pub fn mean_square(&self) -> f64 {
        match *self {
            FadingModel::Constant { epsilon } => epsilon * epsilon,
            FadingModel::Rayleigh { sigma } => 2.0 * sigma * sigma,
            FadingModel::Rician { sigma, v } => 2.0 * sigma * sigma + v * v,
            FadingModel::Nakagami { omega, .. } => omega,
        }
    }

    /// ln E[exp(−A ε²)], evaluated with `ln_1p` so small `A` keeps full precision.
    pub fn ln_laplace_sq(&self, a: f64) -> Result<f64> {
        if !(a >= 0.0) {
            return Err(Error::invalid(format!("laplace argument must be >= 0, got {a}")));
        }
        Ok(match *self {
            FadingModel::Constant { epsilon } => -a * epsilon * epsilon,
            FadingModel::Rayleigh { sigma } => -(2.0 * a * sigma * sigma).ln_1p(),
            FadingModel::Rician { sigma, v } => {
                let s = 2.0 * sigma * sigma * a;
                -s.ln_1p() - a * v * v / (s + 1.0)
            }
            FadingModel::Nakagami { m, omega } => -m * (a * omega / m).ln_1p(),
        })
    }

    /// E[exp(−A ε²)], in (0, 1].
    pub fn laplace_sq(&self, a: f64) -> Result<f64> {
        self.ln_laplace_sq(a).map(f64::exp)
    }

    /// Density of ε at `x`; zero for negative `x`. Constant fading has no density.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if let FadingModel::Constant { .. } = self {
            return Err(Error::invalid("constant fading is degenerate and has no density"));
        }
        if x <= 0.0 {
            // every non-degenerate density here vanishes at 0 except Nakagami m = 1/2
            return Ok(match *self {
                FadingModel::Nakagami { m, omega } if x == 0.0 && m == 0.5 => {
                    (2.0 / (std::f64::consts::PI * omega)).sqrt()
                }
                _ => 0.0,
            });
        }
        Ok(match *self {
            FadingModel::Constant { .. } => unreachable!(),
            FadingModel::Rayleigh { sigma } => {
                let s2 = sigma * sigma;
                x / s2 * (-x * x / (2.0 * s2)).exp()
            }
            FadingModel::Rician { sigma, v } => {
                let s2 = sigma * sigma;
                // ln I₀ keeps the product finite for large x·v
                let ln = x.ln() - s2.ln() - (x * x + v * v) / (2.0 * s2) + ln_bessel_i0(x * v / s2);
                ln.exp()
            }
            FadingModel::Nakagami { m, omega } => {
                let ln = std::f64::consts::LN_2 - ln_gamma(m) + m * (m / omega).ln()
                    + (2.0 * m - 1.0) * x.ln()
                    - m / omega * x * x;
                ln.exp()
            }
        })
    }

    /// A reusable sampler with any distribution setup done once.
    pub fn sampler(&self) -> Result<FadingSampler> {
        self.validate()?;
        Ok(match *self {
            FadingModel::Constant { epsilon } => FadingSampler::Constant(epsilon),
            FadingModel::Rayleigh { sigma } => FadingSampler::Rician { sigma, v: 0.0 },
            FadingModel::Rician { sigma, v } => FadingSampler::Rician { sigma, v },
            FadingModel::Nakagami { m, omega } => FadingSampler::Nakagami(
                Gamma::new(m, omega / m).map_err(|e| Error::invalid(format!("nakagami: {e}")))?,
            ),
        })
    }

    /// One draw of ε.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.sampler()?.sample(rng))
    }
}

/// Draws from a [`FadingModel`]. Rayleigh and Rician draws are the norm of a
/// Gaussian pair with means (v, 0); Nakagami draws are square roots of
/// Gamma(m, Ω/m) draws.
#[derive(Debug, Clone, Copy)]
pub enum FadingSampler {
    Constant(f64),
    Rician { sigma: f64, v: f64 },
    Nakagami(Gamma<f64>),
}

impl Distribution<f64> for FadingSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingSampler::Constant(e) => *e,
            FadingSampler::Rician { sigma, v } => {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                (v + sigma * a).hypot(sigma * b)
            }
            FadingSampler::Nakagami(g) => g.sample(rng).sqrt(),
        }
    }
}

impl fmt::Display for FadingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FadingModel::Constant { epsilon } => write!(f, "constant:eps={epsilon}"),
            FadingModel::Rayleigh { sigma } => write!(f, "rayleigh:sigma={sigma}"),
            FadingModel::Rician { sigma, v } => write!(f, "rician:sigma={sigma},v={v}"),
            FadingModel::Nakagami { m, omega } => write!(f, "nakagami:m={m},omega={omega}"),
        }
    }
}

impl FromStr for FadingModel {
    type Err = Error;

    /// Parses `constant:eps=1.2`, `rayleigh:sigma=1`, `rician:sigma=1,v=1`,
    /// `nakagami:m=2,omega=1`. Errors carry the 1-based column.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::parse(1, 1, "expected '<model>:<key>=<value>,...'"))?;
        let wanted: &[&str] = match kind {
            "constant" => &["eps"],
            "rayleigh" => &["sigma"],
            "rician" => &["sigma", "v"],
            "nakagami" => &["m", "omega"],
            _ => return Err(Error::parse(1, 1, format!("unknown fading model '{kind}'"))),
        };

        let mut values = vec![None; wanted.len()];
        let mut col = kind.len() + 2;
        for field in rest.split(',') {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::parse(1, col, format!("expected key=value, got '{field}'")))?;
            let slot = wanted
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| Error::parse(1, col, format!("unknown key '{key}' for {kind}")))?;
            if values[slot].is_some() {
                return Err(Error::parse(1, col, format!("duplicate key '{key}'")));
            }
            let x: f64 = value.parse().map_err(|_| {
                Error::parse(1, col + key.len() + 1, format!("'{value}' is not a number"))
            })?;
            values[slot] = Some(x);
            col += field.len() + 1;
        }
        let mut got = Vec::with_capacity(wanted.len());
        for (k, v) in wanted.iter().zip(&values) {
            got.push(v.ok_or_else(|| Error::parse(1, s.len() + 1, format!("missing key '{k}'")))?);
        }

        let model = match kind {
            "constant" => FadingModel::Constant { epsilon: got[0] },
            "rayleigh" => FadingModel::Rayleigh { sigma: got[0] },
            "rician" => FadingModel::Rician {
                sigma: got[0],
                v: got[1],
            },
            _ => FadingModel::Nakagami {
                m: got[0],
                omega: got[1],
            },
        };
        model.validate()?;
        Ok(model)
    }
}

/// Admissible signal magnitudes [σ̲_X, σ̄_X].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalBand {
    lower: f64,
    upper: f64,
}

impl SignalBand {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
            return Err(Error::invalid(format!(
                "signal band needs 0 < lower <= upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn edge(&self, edge: SignalEdge) -> f64 {
        match edge {
            SignalEdge::Lower => self.lower,
            SignalEdge::Upper => self.upper,
        }
    }
}

/// Which end of the signal band enters k_β: the lower edge bounds the worst
/// case over signals, the upper edge the best case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalEdge {
    Lower,
    Upper,
}

/// A = β s² / (2σ̄²(1 + β)).
pub fn laplace_argument(beta: f64, signal: f64, noise: &GNormalParams) -> f64 {
    beta * signal * signal / (2.0 * noise.var_upper() * (1.0 + beta))
}

/// k_β = −(2σ̄²/β) ln E[exp(−A ε²)] + (σ̲²/β) ln(1 + β).
pub fn k_beta(
    model: &FadingModel,
    beta: f64,
    noise: &GNormalParams,
    band: &SignalBand,
    edge: SignalEdge,
) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    let a = laplace_argument(beta, band.edge(edge), noise);
    let ln_l = model.ln_laplace_sq(a)?;
    Ok(-(2.0 * noise.var_upper() / beta) * ln_l + noise.var_lower() / beta * beta.ln_1p())
}

/// lim_{β→0} k_β for the lower signal edge.
pub fn k_beta_limit(model: &FadingModel, noise: &GNormalParams, band: &SignalBand) -> f64 {
    let sx2 = band.lower() * band.lower();
    let vl = noise.var_lower();
    match *model {
        FadingModel::Constant { epsilon } => sx2 * epsilon * epsilon + vl,
        FadingModel::Rayleigh { sigma } => 2.0 * sx2 * sigma * sigma + vl,
        FadingModel::Rician { sigma, v } => 2.0 * sigma * sigma * sx2 + v * v * sx2 + vl,
        FadingModel::Nakagami { omega, .. } => omega * sx2 + vl,
    }
}

/// Whether some β makes the false-alarm bound decay exponentially in n.
pub fn decay_condition(model: &FadingModel, noise: &GNormalParams, band: &SignalBand) -> bool {
    k_beta_limit(model, noise, band) > noise.var_upper()
}

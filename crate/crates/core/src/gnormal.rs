//! Numerics for the G-normal distribution N({0} × [σ̲², σ̄²]).
//!
//! The sublinear expectation of `φ(x + √t ξ)` is the viscosity solution of the
//! G-heat equation `u_t = G(u_xx)`, `u(0, ·) = φ`, with
//! `G(a) = ½(σ̄² a⁺ − σ̲² a⁻)`. [`solve_gheat`] approximates it with an explicit
//! monotone finite-difference scheme; `E[φ(ξ)]` is `u(1, 0)`.
//!
//! For convex (concave) payoffs the expectation collapses to a classical
//! Gaussian integral at the upper (lower) variance, see
//! [`expectation_extremal`]. [`gaussian_envelope`] is the supremum over the
//! constant-variance Gaussian family and is always a lower bound.
//!
//! # Truncation
//!
//! The PDE is solved on `center ± L·σ̄·√T` with `L = 8` and the boundary values
//! frozen at the payoff. Information from the boundary reaches the centre with
//! weight at most of order `P(|N(0, σ̄²T)| > Lσ̄√T) = 2Q(8) ≈ 1.2e-15` times the
//! boundary mismatch `|u(T, ±L) − φ(±L)|`, which is negligible for payoffs of
//! polynomial growth.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, DEFAULT_ABS_TOL};

/// Variance band of the channel noise, stored as standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GNormalParams {
    sigma_lower: f64,
    sigma_upper: f64,
}

impl GNormalParams {
    pub fn new(sigma_lower: f64, sigma_upper: f64) -> Result<Self> {
        if !(sigma_lower.is_finite() && sigma_upper.is_finite()) {
            return Err(Error::invalid("noise scales must be finite"));
        }
        if sigma_lower <= 0.0 || sigma_lower > sigma_upper {
            return Err(Error::invalid(format!(
                "noise band needs 0 < sigma_lower <= sigma_upper, got [{sigma_lower}, {sigma_upper}]"
            )));
        }
        Ok(Self {
            sigma_lower,
            sigma_upper,
        })
    }

    /// Classical Gaussian noise, σ̲ = σ̄.
    pub fn degenerate(sigma: f64) -> Result<Self> {
        Self::new(sigma, sigma)
    }

    pub fn sigma_lower(&self) -> f64 {
        self.sigma_lower
    }

    pub fn sigma_upper(&self) -> f64 {
        self.sigma_upper
    }

    pub fn var_lower(&self) -> f64 {
        self.sigma_lower * self.sigma_lower
    }

    pub fn var_upper(&self) -> f64 {
        self.sigma_upper * self.sigma_upper
    }

    /// ρ = σ̲² / (2σ̄²), in (0, ½].
    pub fn rho(&self) -> f64 {
        self.var_lower() / (2.0 * self.var_upper())
    }
}

/// G(x) = ½(σ̄² x⁺ − σ̲² x⁻).
pub fn g_function(x: f64, params: &GNormalParams) -> f64 {
    0.5 * (params.var_upper() * x.max(0.0) - params.var_lower() * (-x).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    Convex,
    Concave,
    General,
}

/// Certificate for the local Lipschitz condition
/// `|φ(x) − φ(y)| ≤ C (1 + |x|^m + |y|^m) |x − y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBound {
    pub order: u32,
    pub constant: f64,
}

impl GrowthBound {
    pub fn new(order: u32, constant: f64) -> Self {
        Self { order, constant }
    }

    fn admits(&self, x: f64, y: f64, fx: f64, fy: f64) -> bool {
        let m = self.order as i32;
        let bound = self.constant * (1.0 + x.abs().powi(m) + y.abs().powi(m)) * (x - y).abs();
        (fx - fy).abs() <= bound * (1.0 + 1e-9) + 1e-12
    }
}

const CONVEXITY_CHECK_PAIRS: usize = 64;
const CONVEXITY_CHECK_RANGE: f64 = 16.0;
const CONVEXITY_CHECK_SEED: u64 = 0x6e6f_726d_616c;

/// A payoff φ together with its convexity tag and growth certificate.
///
/// Claimed convexity or concavity is verified by a midpoint test on 64
/// deterministic random pairs in `[-16, 16]`; a failed check downgrades the
/// tag to [`Convexity::General`].
#[derive(Clone)]
pub struct PayoffFunction {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    convexity: Convexity,
    growth: GrowthBound,
}

impl std::fmt::Debug for PayoffFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PayoffFunction")
            .field("convexity", &self.convexity)
            .field("growth", &self.growth)
            .finish_non_exhaustive()
    }
}

impl PayoffFunction {
    pub fn new<F>(eval: F, convexity: Convexity, growth: GrowthBound) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut payoff = Self {
            eval: Arc::new(eval),
            convexity,
            growth,
        };
        if convexity != Convexity::General && !payoff.midpoint_check(convexity) {
            payoff.convexity = Convexity::General;
        }
        payoff
    }

    pub fn general<F>(eval: F, growth: GrowthBound) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(eval, Convexity::General, growth)
    }

    /// exp(−β (x − a)² / (2σ̄²)), the payoff of the solution estimate.
    pub fn gaussian_bump(beta: f64, a: f64, params: &GNormalParams) -> Result<Self> {
        if beta <= 0.0 || !beta.is_finite() {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        let scale = beta / (2.0 * params.var_upper());
        // sup |φ'| = sqrt(2·scale/e)
        let lip = (2.0 * scale / std::f64::consts::E).sqrt();
        Ok(Self::general(
            move |x| (-scale * (x - a) * (x - a)).exp(),
            GrowthBound::new(0, lip),
        ))
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }

    pub fn growth(&self) -> GrowthBound {
        self.growth
    }

    /// Check the growth certificate between consecutive sample points.
    pub fn check_growth(&self, xs: &[f64], values: &[f64]) -> Result<()> {
        for (w, v) in xs.windows(2).zip(values.windows(2)) {
            if !self.growth.admits(w[0], w[1], v[0], v[1]) {
                return Err(Error::invalid(format!(
                    "payoff violates its growth bound between x={} and x={}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    fn midpoint_check(&self, tag: Convexity) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(CONVEXITY_CHECK_SEED);
        (0..CONVEXITY_CHECK_PAIRS).all(|_| {
            let x = rng.random_range(-CONVEXITY_CHECK_RANGE..CONVEXITY_CHECK_RANGE);
            let y = rng.random_range(-CONVEXITY_CHECK_RANGE..CONVEXITY_CHECK_RANGE);
            let (fx, fy, fm) = (self.eval(x), self.eval(y), self.eval(0.5 * (x + y)));
            let chord = 0.5 * (fx + fy);
            let slack = 1e-12 * (1.0 + fx.abs() + fy.abs());
            match tag {
                Convexity::Convex => fm <= chord + slack,
                Convexity::Concave => fm >= chord - slack,
                Convexity::General => true,
            }
        })
    }
}

/// Grid settings for [`solve_gheat_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSettings {
    /// Number of spatial nodes; must be odd so the centre is a node.
    pub nodes: usize,
    /// Domain half-width in units of σ̄√T.
    pub half_width: f64,
    /// Fraction of the stability limit dx²/(2σ̄²) used for the time step.
    pub cfl_safety: f64,
    /// Explicit time step; `None` picks the largest stable one.
    pub dt: Option<f64>,
    /// Number of stored time levels, including t = 0 and t = T.
    pub snapshots: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            nodes: 801,
            half_width: 8.0,
            cfl_safety: 0.9,
            dt: None,
            snapshots: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeMeta {
    pub dx: f64,
    pub dt: f64,
    pub half_width: f64,
    pub steps: usize,
}

/// Stored time levels of a finite-difference G-heat solution.
#[derive(Debug, Clone)]
pub struct GHeatSolution {
    grid: Vec<f64>,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    params: GNormalParams,
    meta: SchemeMeta,
}

impl GHeatSolution {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `values()[k][j]` is u(times[k], grid[j]).
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn params(&self) -> &GNormalParams {
        &self.params
    }

    pub fn meta(&self) -> &SchemeMeta {
        &self.meta
    }

    pub fn final_values(&self) -> &[f64] {
        self.values.last().expect("at least two snapshots")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("at least two snapshots")
    }

    /// u(T, center).
    pub fn value_at_center(&self) -> f64 {
        self.final_values()[self.grid.len() / 2]
    }

    /// u(T, x) by linear interpolation; `None` outside the grid.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let lo = self.grid[0];
        let hi = *self.grid.last()?;
        if !(lo..=hi).contains(&x) {
            return None;
        }
        let s = (x - lo) / self.meta.dx;
        let j = (s.floor() as usize).min(self.grid.len() - 2);
        let w = s - j as f64;
        let u = self.final_values();
        Some((1.0 - w) * u[j] + w * u[j + 1])
    }

    /// CSV with columns `t,x,u`, time-major.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "x", "u"])?;
        for (t, row) in self.times.iter().zip(&self.values) {
            for (x, u) in self.grid.iter().zip(row) {
                wtr.write_record([t.to_string(), x.to_string(), u.to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// [`solve_gheat_with`] on the default grid.
pub fn solve_gheat(
    payoff: &PayoffFunction,
    params: &GNormalParams,
    horizon: f64,
    center: f64,
) -> Result<GHeatSolution> {
    solve_gheat_with(payoff, params, horizon, center, &GridSettings::default())
}

/// Explicit finite differences for u_t = G(u_xx) up to `horizon`, on
/// `center ± half_width·σ̄·√horizon` with frozen (Dirichlet) boundary values.
pub fn solve_gheat_with(
    payoff: &PayoffFunction,
    params: &GNormalParams,
    horizon: f64,
    center: f64,
    settings: &GridSettings,
) -> Result<GHeatSolution> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    if !center.is_finite() {
        return Err(Error::invalid("center must be finite"));
    }
    if settings.nodes < 5 || settings.nodes.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "grid needs an odd node count >= 5, got {}",
            settings.nodes
        )));
    }
    if !(settings.half_width > 0.0) || !(settings.cfl_safety > 0.0 && settings.cfl_safety <= 1.0) {
        return Err(Error::invalid("half_width must be positive and cfl_safety in (0, 1]"));
    }
    if settings.snapshots < 2 {
        return Err(Error::invalid("need at least two snapshots"));
    }

    let var_hi = params.var_upper();
    let var_lo = params.var_lower();
    let reach = settings.half_width * params.sigma_upper() * horizon.sqrt();
    let last = settings.nodes - 1;
    let dx = 2.0 * reach / last as f64;
    let mid = last / 2;
    let grid: Vec<f64> = (0..settings.nodes)
        .map(|j| center + (j as f64 - mid as f64) * dx)
        .collect();

    let dt_limit = settings.cfl_safety * dx * dx / (2.0 * var_hi);
    let steps = match settings.dt {
        Some(dt) => {
            if !(dt > 0.0) || dt > dt_limit {
                return Err(Error::invalid(format!(
                    "time step {dt:e} violates the stability limit {dt_limit:e}"
                )));
            }
            (horizon / dt).ceil() as usize
        }
        None => (horizon / dt_limit).ceil() as usize,
    };
    let dt = horizon / steps as f64;

    let mut u: Vec<f64> = grid.iter().map(|&x| payoff.eval(x)).collect();
    if let Some(j) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "payoff is not finite at x={} on the truncated domain",
            grid[j]
        )));
    }
    payoff.check_growth(&grid, &u)?;

    let snap_steps: Vec<usize> = (0..settings.snapshots)
        .map(|k| ((k as f64) * steps as f64 / (settings.snapshots - 1) as f64).round() as usize)
        .collect();
    let mut times = vec![0.0];
    let mut values = vec![u.clone()];
    let mut next_snap = 1;

    let c_hi = 0.5 * var_hi * dt / (dx * dx);
    let c_lo = 0.5 * var_lo * dt / (dx * dx);
    let mut next = u.clone();
    for step in 1..=steps {
        for j in 1..last {
            let d2 = u[j - 1] - 2.0 * u[j] + u[j + 1];
            next[j] = u[j] + if d2 > 0.0 { c_hi * d2 } else { c_lo * d2 };
        }
        std::mem::swap(&mut u, &mut next);
        while next_snap < snap_steps.len() && snap_steps[next_snap] == step {
            times.push(if step == steps { horizon } else { step as f64 * dt });
            values.push(u.clone());
            next_snap += 1;
        }
    }

    Ok(GHeatSolution {
        grid,
        times,
        values,
        params: *params,
        meta: SchemeMeta {
            dx,
            dt,
            half_width: settings.half_width,
            steps,
        },
    })
}

/// Classical E[f(σZ)] for standard normal Z, integrated over ±10σ.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(f: F, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("gaussian scale must be positive, got {sigma}")));
    }
    let norm = 1.0 / ((2.0 * PI).sqrt() * sigma);
    let integrand = |y: f64| {
        let z = y / sigma;
        f(y) * norm * (-0.5 * z * z).exp()
    };
    let r = 10.0 * sigma;
    integrate_with_breaks(integrand, &[-r, 0.0, r], DEFAULT_ABS_TOL)
}

/// Closed-form G-expectation of a convex (σ̄) or concave (σ̲) payoff.
pub fn expectation_extremal(payoff: &PayoffFunction, params: &GNormalParams) -> Result<f64> {
    let sigma = match payoff.convexity() {
        Convexity::Convex => params.sigma_upper(),
        Convexity::Concave => params.sigma_lower(),
        Convexity::General => {
            return Err(Error::invalid(
                "no closed-form G-expectation for a payoff that is neither convex nor concave",
            ))
        }
    };
    gaussian_expectation(|y| payoff.eval(y), sigma)
}

/// Upper estimate of the G-heat solution started from
/// exp(−β|x − a|²/(2σ̄²)):
/// (1 + βt)^(−ρ) · exp(−β(x − a)² / (2(1 + βt)σ̄²)).
pub fn lemma_estimate_bound(
    beta: f64,
    a: f64,
    t: f64,
    x: f64,
    params: &GNormalParams,
) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    let spread = 1.0 + beta * t;
    let dx = x - a;
    Ok((-params.rho() * spread.ln() - beta * dx * dx / (2.0 * spread * params.var_upper())).exp())
}

/// max over v on a uniform grid of [σ̲, σ̄] of E[φ(vZ)]; a lower bound for the
/// G-expectation of φ(ξ).
pub fn gaussian_envelope(
    payoff: &PayoffFunction,
    params: &GNormalParams,
    v_grid_size: usize,
) -> Result<f64> {
    if v_grid_size < 2 {
        return Err(Error::invalid("envelope grid needs at least two points"));
    }
    let (lo, hi) = (params.sigma_lower(), params.sigma_upper());
    let step = (hi - lo) / (v_grid_size - 1) as f64;
    let mut best = f64::NEG_INFINITY;
    for i in 0..v_grid_size {
        let v = if i + 1 == v_grid_size { hi } else { lo + i as f64 * step };
        best = best.max(gaussian_expectation(|y| payoff.eval(y), v)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band() -> GNormalParams {
        GNormalParams::new(1.0, 2f64.sqrt()).unwrap()
    }

    fn square() -> PayoffFunction {
        PayoffFunction::new(|x| x * x, Convexity::Convex, GrowthBound::new(1, 1.0))
    }

    #[test]
    fn params_validation() {
        assert!(GNormalParams::new(0.0, 1.0).is_err());
        assert!(GNormalParams::new(2.0, 1.0).is_err());
        assert!(GNormalParams::new(f64::NAN, 1.0).is_err());
        let p = GNormalParams::new(1.0, 1.0).unwrap();
        assert_eq!(p.rho(), 0.5);
        assert!((band().rho() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn g_function_examples() {
        let p = band();
        assert_eq!(g_function(0.0, &p), 0.0);
        assert!((g_function(1.0, &p) - 1.0).abs() < 1e-15);
        assert!((g_function(-1.0, &p) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn g_function_is_homogeneous_and_monotone() {
        let p = band();
        for &x in &[-3.0, -0.2, 0.5, 4.0] {
            for &c in &[0.0, 0.5, 3.0] {
                assert!((g_function(c * x, &p) - c * g_function(x, &p)).abs() < 1e-12);
            }
            assert!(g_function(x + 0.1, &p) >= g_function(x, &p));
        }
    }

    #[test]
    fn misdeclared_convexity_is_downgraded() {
        let f = PayoffFunction::new(|x: f64| x.sin(), Convexity::Convex, GrowthBound::new(0, 1.0));
        assert_eq!(f.convexity(), Convexity::General);
        let g = PayoffFunction::new(|x: f64| -x.abs(), Convexity::Concave, GrowthBound::new(0, 1.0));
        assert_eq!(g.convexity(), Convexity::Concave);
    }

    #[test]
    fn linear_payoff_has_zero_expectation() {
        let f = PayoffFunction::new(|x| x, Convexity::Convex, GrowthBound::new(0, 1.0));
        let sol = solve_gheat(&f, &band(), 1.0, 0.0).unwrap();
        assert!(sol.value_at_center().abs() < 1e-12);
    }

    #[test]
    fn square_payoff_matches_upper_variance() {
        let sol = solve_gheat(&square(), &band(), 1.0, 0.0).unwrap();
        assert!((sol.value_at_center() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn extremal_examples() {
        let p = band();
        assert!((expectation_extremal(&square(), &p).unwrap() - 2.0).abs() < 1e-9);
        let neg = PayoffFunction::new(|x| -x * x, Convexity::Concave, GrowthBound::new(1, 1.0));
        assert!((expectation_extremal(&neg, &p).unwrap() + 1.0).abs() < 1e-9);
        let abs = PayoffFunction::new(|x: f64| x.abs(), Convexity::Convex, GrowthBound::new(0, 1.0));
        let wide = GNormalParams::new(1.0, 2.0).unwrap();
        assert!((expectation_extremal(&abs, &wide).unwrap() - 1.595_769_121_605_730_8).abs() < 1e-9);
        let sine = PayoffFunction::general(|x: f64| x.sin(), GrowthBound::new(0, 1.0));
        assert!(expectation_extremal(&sine, &p).is_err());
    }

    #[test]
    fn lemma_bound_examples() {
        let p = band();
        assert!((lemma_estimate_bound(1.0, 0.3, 0.0, 0.3, &p).unwrap() - 1.0).abs() < 1e-15);
        let flat = GNormalParams::new(1.5, 1.5).unwrap();
        let v = lemma_estimate_bound(1.0, 0.0, 1.0, 0.0, &flat).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-14);
        let v = lemma_estimate_bound(1.0, 0.0, 1.0, 2f64.sqrt(), &p).unwrap();
        assert!((v - 0.654_890_786_681_530_1).abs() < 1e-12);
        assert!(lemma_estimate_bound(0.0, 0.0, 1.0, 0.0, &p).is_err());
        assert!(lemma_estimate_bound(1.0, 0.0, -1.0, 0.0, &p).is_err());
    }

    #[test]
    fn lemma_payoff_stays_below_estimate_at_center() {
        let p = band();
        let f = PayoffFunction::gaussian_bump(1.0, 0.0, &p).unwrap();
        let sol = solve_gheat(&f, &p, 1.0, 0.0).unwrap();
        assert!(sol.value_at_center() <= lemma_estimate_bound(1.0, 0.0, 1.0, 0.0, &p).unwrap());
    }

    #[test]
    fn envelope_examples() {
        let p = band();
        assert!((gaussian_envelope(&square(), &p, 11).unwrap() - 2.0).abs() < 1e-9);
        let cube = PayoffFunction::general(|x| x * x * x, GrowthBound::new(2, 3.0));
        assert!(gaussian_envelope(&cube, &p, 11).unwrap().abs() < 1e-9);
        let bump = PayoffFunction::general(|x| (-x * x / 4.0).exp(), GrowthBound::new(0, 1.0));
        let v = gaussian_envelope(&bump, &p, 11).unwrap();
        assert!((v - 1.0 / 1.5f64.sqrt()).abs() < 1e-9);
        assert!(gaussian_envelope(&bump, &p, 1).is_err());
    }

    #[test]
    fn solver_rejects_bad_input() {
        let p = band();
        assert!(solve_gheat(&square(), &p, 0.0, 0.0).is_err());
        assert!(solve_gheat(&square(), &p, -1.0, 0.0).is_err());
        let unstable = GridSettings {
            dt: Some(1.0),
            ..GridSettings::default()
        };
        assert!(solve_gheat_with(&square(), &p, 1.0, 0.0, &unstable).is_err());
        let even = GridSettings {
            nodes: 800,
            ..GridSettings::default()
        };
        assert!(solve_gheat_with(&square(), &p, 1.0, 0.0, &even).is_err());
        // x⁴ breaks a first-order growth certificate
        let quartic = PayoffFunction::general(|x: f64| x.powi(4), GrowthBound::new(1, 1.0));
        assert!(solve_gheat(&quartic, &p, 1.0, 0.0).is_err());
    }

    #[test]
    fn solution_starts_at_payoff_and_preserves_constants() {
        let p = band();
        let sol = solve_gheat(&square(), &p, 1.0, 0.5).unwrap();
        for (x, u) in sol.grid().iter().zip(&sol.values()[0]) {
            assert_eq!(*u, x * x);
        }
        assert_eq!(sol.times()[0], 0.0);
        assert_eq!(sol.horizon(), 1.0);
        let c = PayoffFunction::new(|_| 3.25, Convexity::Convex, GrowthBound::new(0, 1.0));
        let sol = solve_gheat(&c, &p, 2.0, 0.0).unwrap();
        assert!(sol.values().iter().flatten().all(|&u| u == 3.25));
    }

    #[test]
    fn value_at_interpolates() {
        let sol = solve_gheat(&square(), &band(), 1.0, 0.0).unwrap();
        let x = 0.5 * (sol.grid()[400] + sol.grid()[401]);
        let want = 0.5 * (sol.final_values()[400] + sol.final_values()[401]);
        assert!((sol.value_at(x).unwrap() - want).abs() < 1e-12);
        assert!(sol.value_at(1e6).is_none());
    }
}

//! Independent oracles shared by the integration test targets.
#![allow(dead_code)]

use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

/// P(χ²_k ≥ x).
pub fn chi2_sf(k: f64, x: f64) -> f64 {
    gamma_ur(k / 2.0, x / 2.0)
}

/// P(χ²_k(nc) ≤ x) as a Poisson(nc/2) mixture of central CDFs.
pub fn noncentral_chi2_cdf(k: f64, nc: f64, x: f64) -> f64 {
    let half = nc / 2.0;
    let mut total = 0.0;
    for j in 0..2000 {
        let jf = j as f64;
        let w = (-half + jf * half.ln() - ln_gamma(jf + 1.0)).exp();
        total += w * gamma_lr(k / 2.0 + jf, x / 2.0);
        if jf > half && w < 1e-18 {
            break;
        }
    }
    total
}

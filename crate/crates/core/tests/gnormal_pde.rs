use edsense::gnormal::{
    expectation_extremal, gaussian_envelope, gaussian_expectation, lemma_estimate_bound,
    solve_gheat, Convexity, GNormalParams, GrowthBound, PayoffFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_params(rng: &mut ChaCha8Rng) -> GNormalParams {
    let lo = rng.random_range(0.5..1.5);
    GNormalParams::new(lo, lo * rng.random_range(1.0..2.0)).unwrap()
}

/// Quadratic, shifted absolute value or exp(a x²), convex with positive sign.
fn random_convex(rng: &mut ChaCha8Rng, params: &GNormalParams) -> (String, PayoffFunction) {
    let c: f64 = rng.random_range(-1.0..1.0);
    let a: f64 = rng.random_range(0.1..1.0);
    match rng.random_range(0..3) {
        0 => {
            let b: f64 = rng.random_range(-1.0..1.0);
            let f = PayoffFunction::new(
                move |x| a * (x - c) * (x - c) + b,
                Convexity::Convex,
                GrowthBound::new(1, 2.0 * a * (1.0 + c.abs())),
            );
            (format!("{a}(x-{c})^2+{b}"), f)
        }
        1 => (
            format!("{a}|x-{c}|"),
            PayoffFunction::new(move |x| a * (x - c).abs(), Convexity::Convex, GrowthBound::new(0, a)),
        ),
        _ => {
            // keeps E[exp(k ξ²)] = (1 − 2kσ̄²)^(-1/2) moderate
            let k = 0.1 * a / params.var_upper();
            (
                format!("exp({k}x^2)"),
                PayoffFunction::new(move |x| (k * x * x).exp(), Convexity::Convex, GrowthBound::new(4, 1.0)),
            )
        }
    }
}

fn negate(p: &PayoffFunction) -> PayoffFunction {
    let q = p.clone();
    let tag = match p.convexity() {
        Convexity::Convex => Convexity::Concave,
        Convexity::Concave => Convexity::Convex,
        Convexity::General => Convexity::General,
    };
    PayoffFunction::new(move |x| -q.eval(x), tag, p.growth())
}

#[test]
fn pde_matches_closed_form_for_convex_and_concave_payoffs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..40 {
        let params = random_params(&mut rng);
        let (name, convex) = random_convex(&mut rng, &params);
        let payoff = if i % 2 == 0 { convex } else { negate(&convex) };
        assert_ne!(payoff.convexity(), Convexity::General, "{name}");
        let pde = solve_gheat(&payoff, &params, 1.0, 0.0).unwrap().value_at_center();
        let exact = expectation_extremal(&payoff, &params).unwrap();
        assert!((pde - exact).abs() <= 1e-3, "{name} {params:?}: {pde} vs {exact}");
    }
}

#[test]
fn pde_dominates_gaussian_envelope() {
    let params = GNormalParams::new(1.0, 2f64.sqrt()).unwrap();
    let payoffs = [
        PayoffFunction::general(|x| x * x * x, GrowthBound::new(2, 3.0)),
        PayoffFunction::general(|x| (x - 0.5).abs() - 0.5 * x * x / (1.0 + x * x), GrowthBound::new(0, 2.0)),
        PayoffFunction::general(|x: f64| (-x * x / 4.0).exp(), GrowthBound::new(0, 1.0)),
        PayoffFunction::general(|x: f64| x.sin() + 0.1 * x * x, GrowthBound::new(1, 2.0)),
        PayoffFunction::new(|x| x * x, Convexity::Convex, GrowthBound::new(1, 2.0)),
    ];
    for (i, p) in payoffs.iter().enumerate() {
        let pde = solve_gheat(p, &params, 1.0, 0.0).unwrap().value_at_center();
        let env = gaussian_envelope(p, &params, 41).unwrap();
        assert!(pde >= env - 1e-3, "payoff {i}: {pde} < {env}");
    }
}

#[test]
fn odd_moment_is_strictly_positive() {
    // the cubic's G-expectation exceeds every classical (zero) odd moment
    let params = GNormalParams::new(1.0, 2f64.sqrt()).unwrap();
    let cube = PayoffFunction::general(|x| x * x * x, GrowthBound::new(2, 3.0));
    let pde = solve_gheat(&cube, &params, 1.0, 0.0).unwrap().value_at_center();
    assert!(pde > 0.05, "{pde}");
    assert!(gaussian_envelope(&cube, &params, 11).unwrap().abs() < 1e-9);
}

#[test]
fn lemma_estimate_holds_at_every_node() {
    let params = GNormalParams::new(1.0, 2f64.sqrt()).unwrap();
    for beta in [0.5, 1.0, 2.0] {
        for a in [0.0, 1.0] {
            let payoff = PayoffFunction::gaussian_bump(beta, a, &params).unwrap();
            let sol = solve_gheat(&payoff, &params, 1.0, 0.0).unwrap();
            for (t, row) in sol.times().iter().zip(sol.values()) {
                for (x, u) in sol.grid().iter().zip(row) {
                    let bound = lemma_estimate_bound(beta, a, *t, *x, &params).unwrap();
                    assert!(*u <= bound + 1e-3, "β={beta} a={a} t={t} x={x}: {u} > {bound}");
                }
            }
        }
    }
}

#[test]
fn degenerate_band_is_the_heat_kernel() {
    let sigma = 1.3;
    let params = GNormalParams::degenerate(sigma).unwrap();
    let payoffs = [
        PayoffFunction::new(|x| x * x, Convexity::Convex, GrowthBound::new(1, 2.0)),
        PayoffFunction::new(|x: f64| -(x - 0.3).abs(), Convexity::Concave, GrowthBound::new(0, 1.0)),
        PayoffFunction::general(|x: f64| x.sin() * (1.0 + x), GrowthBound::new(1, 2.0)),
        PayoffFunction::general(|x: f64| (x - 0.2).max(0.0) - 0.3 * (x + 0.5).abs(), GrowthBound::new(0, 1.3)),
    ];
    for center in [0.0, 0.7] {
        for (i, p) in payoffs.iter().enumerate() {
            let pde = solve_gheat(p, &params, 1.0, center).unwrap().value_at_center();
            let want = gaussian_expectation(|y| p.eval(center + y), sigma).unwrap();
            assert!((pde - want).abs() <= 1e-3, "payoff {i} at {center}: {pde} vs {want}");
        }
    }
}

#[test]
fn comparison_principle_and_constants() {
    let params = GNormalParams::new(0.8, 1.5).unwrap();
    let lower = PayoffFunction::general(|x: f64| x.cos(), GrowthBound::new(0, 1.0));
    let upper = PayoffFunction::general(|x: f64| x.cos() + 0.1 * (x * x).min(4.0), GrowthBound::new(0, 2.0));
    let s1 = solve_gheat(&lower, &params, 0.7, 0.0).unwrap();
    let s2 = solve_gheat(&upper, &params, 0.7, 0.0).unwrap();
    for (r1, r2) in s1.values().iter().zip(s2.values()) {
        assert!(r1.iter().zip(r2).all(|(a, b)| a <= b));
    }

    let constant = PayoffFunction::general(|_| -2.5, GrowthBound::new(0, 0.0));
    let s = solve_gheat(&constant, &params, 2.0, 1.0).unwrap();
    assert!(s.values().iter().flatten().all(|&u| u == -2.5));
}

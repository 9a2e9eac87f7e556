mod common;

use common::brute_pmf;
use lfdr_core::confdist::ConfidenceDistribution;
use lfdr_core::distkit::BinomialParams;
use lfdr_core::nfdr::{
    corrected_nfdr, mean_nfdr, mle_nfdr, CapPlacement, MeanMethod, MeanOptions,
};
use proptest::prelude::*;

const ALPHAS: [f64; 6] = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5];

fn pi_grid(alpha: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut k = 0;
    loop {
        let pi = alpha + 0.05 * k as f64;
        if pi > 1.0 + 1e-12 {
            break;
        }
        v.push(pi.min(1.0));
        k += 1;
    }
    v
}

#[test]
fn median_below_mle_share() {
    // S_1^{-1}(1/2; x) <= x / N for 1 <= x <= N, hence corrected >= mle
    for n in 1..=50u64 {
        for x in 1..=n {
            let med = ConfidenceDistribution::new(n, x, 1.0).unwrap().quantile(0.5).unwrap();
            assert!(med <= x as f64 / n as f64 + 1e-12, "N={n} x={x}: {med}");
            for &a in &ALPHAS {
                let c = corrected_nfdr(a, x, n, 1.0).unwrap().value;
                let m = mle_nfdr(a, x, n).unwrap().value;
                assert!(c >= m - 1e-12, "N={n} x={x} a={a}");
            }
        }
    }
}

#[test]
fn corrected_is_median_conservative_small_n() {
    for n in 1..=3u64 {
        for &a in &ALPHAS {
            for pi in pi_grid(a) {
                let bound = a / pi;
                let cover: f64 = (0..=n)
                    .filter(|&x| corrected_nfdr(a, x, n, 1.0).unwrap().value >= bound)
                    .map(|x| brute_pmf(n, pi, x))
                    .sum();
                assert!(cover >= 0.5 - 1e-12, "N={n} a={a} pi={pi}: {cover}");
            }
        }
    }
}

/// Probability, over X ~ Binomial(N, pi), that `est(x) >= target`, summed
/// exactly over a +-6 sd window; mass outside counts as a miss.
fn coverage_window(n: u64, pi: f64, target: f64, est: impl Fn(u64) -> f64) -> f64 {
    let b = BinomialParams::new(n, pi).unwrap();
    let mean = n as f64 * pi;
    let sd = (n as f64 * pi * (1.0 - pi)).sqrt();
    let lo = (mean - 6.0 * sd).floor().max(0.0) as u64;
    let hi = ((mean + 6.0 * sd).ceil() as u64).min(n);
    (lo..=hi)
        .filter(|&x| est(x) >= target)
        .map(|x| b.pmf(x).unwrap())
        .sum()
}

#[test]
fn estimators_conservative_at_large_n() {
    let n = 10_000u64;
    let pi0 = 0.9;
    for &(alpha, pi) in &[(0.01, 0.06), (0.01, 0.3), (0.05, 0.1), (0.05, 0.6), (0.1, 0.3)] {
        let target = pi0 * alpha / pi;
        let mle = coverage_window(n, pi, target, |x| mle_nfdr(alpha, x, n).unwrap().value);
        let corr = coverage_window(n, pi, target, |x| corrected_nfdr(alpha, x, n, 1.0).unwrap().value);
        let opts = MeanOptions {
            method: MeanMethod::MonteCarlo { draws: 100, seed: 5 },
            ..MeanOptions::default()
        };
        let mean = coverage_window(n, pi, target, |x| mean_nfdr(alpha, x, n, &opts).unwrap().value);
        for (name, v) in [("mle", mle), ("corrected", corr), ("mean", mean)] {
            assert!(v > 0.99, "{name} alpha={alpha} pi={pi}: {v}");
        }
    }
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    for &(alpha, x, n, c) in &[(0.05, 1, 1, 1.0), (0.05, 3, 10, 0.5), (0.2, 2, 4, 0.5), (0.01, 8, 20, 0.0)] {
        let quad = mean_nfdr(
            alpha,
            x,
            n,
            &MeanOptions {
                weight: c,
                method: MeanMethod::Quadrature { tolerance: 1e-10 },
                cap: CapPlacement::PerDraw,
            },
        )
        .unwrap();
        let mc = mean_nfdr(
            alpha,
            x,
            n,
            &MeanOptions {
                weight: c,
                method: MeanMethod::MonteCarlo { draws: 10_000, seed: 77 },
                cap: CapPlacement::PerDraw,
            },
        )
        .unwrap();
        let se = mc.std_error.unwrap();
        assert!(
            (mc.value - quad.value).abs() <= 3.0 * se,
            "({alpha},{x},{n},{c}): mc {} quad {} se {se}",
            mc.value,
            quad.value
        );
    }
}

#[test]
fn quadrature_mean_against_independent_integral() {
    // E[min(a / P, 1)] = int_0^1 min(a / p, 1) dS(p), written here with
    // Simpson on the parameter scale from finite-difference densities.
    for &(alpha, x, n, c) in &[(0.05, 3, 10, 0.5), (0.1, 5, 6, 1.0), (0.02, 2, 2, 0.5)] {
        let d = ConfidenceDistribution::new(n, x, c).unwrap();
        let (lo, hi) = d.attainable_range();
        let m = 20_000;
        let mut acc = 0.0;
        for i in 0..m {
            let p0 = i as f64 / m as f64;
            let p1 = (i + 1) as f64 / m as f64;
            let mass = d.significance(p1).unwrap() - d.significance(p0).unwrap();
            let mid = 0.5 * (p0 + p1);
            acc += mass * (alpha / mid).min(1.0);
        }
        let want = lo + acc + (1.0 - hi) * alpha;
        let got = mean_nfdr(
            alpha,
            x,
            n,
            &MeanOptions {
                weight: c,
                method: MeanMethod::Quadrature { tolerance: 1e-10 },
                cap: CapPlacement::PerDraw,
            },
        )
        .unwrap()
        .value;
        assert!((got - want).abs() < 1e-5, "({alpha},{x},{n},{c}): {got} vs {want}");
    }
}

proptest! {
    #[test]
    fn estimates_in_unit_interval(alpha in 0.0f64..=1.0, n in 1u64..40, frac in 0.0f64..=1.0, c in 0.0f64..=1.0, seed in 0u64..1000) {
        let x = ((n as f64) * frac).round() as u64;
        let vals = [
            mle_nfdr(alpha, x, n).unwrap().value,
            corrected_nfdr(alpha, x, n, c).unwrap().value,
            mean_nfdr(alpha, x, n, &MeanOptions {
                weight: c,
                method: MeanMethod::MonteCarlo { draws: 20, seed },
                cap: CapPlacement::PerDraw,
            }).unwrap().value,
        ];
        for v in vals {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn quadrature_bitwise_repeatable(alpha in 0.001f64..0.5, n in 1u64..12, frac in 0.0f64..=1.0) {
        let x = ((n as f64) * frac).round() as u64;
        let opts = MeanOptions {
            weight: 0.5,
            method: MeanMethod::Quadrature { tolerance: 1e-8 },
            cap: CapPlacement::PerDraw,
        };
        let a = mean_nfdr(alpha, x, n, &opts).unwrap().value;
        let b = mean_nfdr(alpha, x, n, &opts).unwrap().value;
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}

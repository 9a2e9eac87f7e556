//! Nonlocal false discovery rate: the Bayes identity and three estimators
//! (maximum likelihood, confidence-posterior median, confidence-posterior
//! mean), all with the null proportion set to 1.
//!
//! Every estimator returns 1 when there are no discoveries.

use serde::{Deserialize, Serialize};

use crate::confdist::ConfidenceDistribution;
use crate::error::{Error, Result};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Mle,
    CorrectedMedian,
    PosteriorMean,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Mle => "mle",
            EstimatorKind::CorrectedMedian => "corrected_median",
            EstimatorKind::PosteriorMean => "posterior_mean",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NfdrEstimate {
    pub value: f64,
    pub kind: EstimatorKind,
    /// Test-wise level, equal to the null rejection probability.
    pub alpha: f64,
    /// Number of discoveries at that level.
    pub successes: u64,
    pub trials: u64,
    pub weight: f64,
    /// Set when the cap at 1 was active.
    pub capped: bool,
    /// Monte Carlo standard error, when the value was simulated.
    pub std_error: Option<f64>,
}

/// Mixture quantities for one rejection region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureTruth {
    pi0: f64,
    null_prob: f64,
    marginal_prob: f64,
}

impl MixtureTruth {
    pub fn new(pi0: f64, null_prob: f64, marginal_prob: f64) -> Result<Self> {
        for (name, v) in [("pi0", pi0), ("null_prob", null_prob), ("marginal_prob", marginal_prob)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} = {v} not in [0, 1]")));
            }
        }
        if marginal_prob < pi0 * null_prob {
            return Err(Error::domain(format!(
                "marginal probability {marginal_prob} below pi0 * null_prob = {}",
                pi0 * null_prob
            )));
        }
        Ok(Self {
            pi0,
            null_prob,
            marginal_prob,
        })
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    pub fn null_prob(&self) -> f64 {
        self.null_prob
    }

    pub fn marginal_prob(&self) -> f64 {
        self.marginal_prob
    }

    /// Rejection probability under the alternative, recovered from
    /// `marginal = pi0 * null + (1 - pi0) * alt`. `None` when `pi0 = 1`.
    pub fn alt_prob(&self) -> Option<f64> {
        (self.pi0 < 1.0).then(|| (self.marginal_prob - self.pi0 * self.null_prob) / (1.0 - self.pi0))
    }
}

/// `pi0 * Pi0 / Pi`.
pub fn true_nfdr(truth: &MixtureTruth) -> Result<f64> {
    if truth.marginal_prob == 0.0 {
        return Err(Error::domain("marginal rejection probability is 0"));
    }
    Ok((truth.pi0 * truth.null_prob / truth.marginal_prob).min(1.0))
}

fn check_counts(alpha: f64, x: u64, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    if x > n {
        return Err(Error::domain(format!("discoveries {x} exceed trials {n}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("level {alpha} not in [0, 1]")));
    }
    Ok(())
}

/// `alpha / (x / N)`, capped at 1.
pub fn mle_nfdr(alpha: f64, x: u64, n: u64) -> Result<NfdrEstimate> {
    check_counts(alpha, x, n)?;
    let (value, capped) = if x == 0 {
        (1.0, true)
    } else {
        let ratio = alpha * n as f64 / x as f64;
        (ratio.min(1.0), ratio > 1.0)
    };
    Ok(NfdrEstimate {
        value,
        kind: EstimatorKind::Mle,
        alpha,
        successes: x,
        trials: n,
        weight: f64::NAN,
        capped,
        std_error: None,
    })
}

/// `alpha / S_C^{-1}(1/2; x)`, capped at 1.
///
/// The median is the generalized one, so an atom of the confidence
/// distribution at 0 holding at least half the mass gives 1, and one at 1
/// gives `alpha`.
pub fn corrected_nfdr(alpha: f64, x: u64, n: u64, weight: f64) -> Result<NfdrEstimate> {
    check_counts(alpha, x, n)?;
    let cd = ConfidenceDistribution::new(n, x, weight)?;
    let median = cd.quantile(0.5)?;
    let (value, capped) = if x == 0 || median == 0.0 {
        (1.0, true)
    } else {
        let ratio = alpha / median;
        (ratio.min(1.0), ratio > 1.0)
    };
    Ok(NfdrEstimate {
        value,
        kind: EstimatorKind::CorrectedMedian,
        alpha,
        successes: x,
        trials: n,
        weight,
        capped,
        std_error: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanMethod {
    MonteCarlo { draws: usize, seed: u64 },
    Quadrature { tolerance: f64 },
}

/// Where the cap at 1 is applied in the confidence-posterior mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapPlacement {
    /// Average `min(alpha / pi, 1)`.
    #[default]
    PerDraw,
    /// Average `alpha / pi`, then cap the mean.
    FinalMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanOptions {
    pub weight: f64,
    pub method: MeanMethod,
    pub cap: CapPlacement,
}

/// Monte Carlo draws per estimate used by the simulation protocol.
pub const DEFAULT_MC_DRAWS: usize = 100;
const QUAD_MAX_SEGMENTS: usize = 4000;

impl Default for MeanOptions {
    fn default() -> Self {
        Self {
            weight: 0.5,
            method: MeanMethod::MonteCarlo {
                draws: DEFAULT_MC_DRAWS,
                seed: 0,
            },
            cap: CapPlacement::PerDraw,
        }
    }
}

/// Confidence-posterior mean of `alpha / Pi'` with `Pi'` distributed as
/// `S_C(.; x)`.
pub fn mean_nfdr(alpha: f64, x: u64, n: u64, opts: &MeanOptions) -> Result<NfdrEstimate> {
    check_counts(alpha, x, n)?;
    let cd = ConfidenceDistribution::new(n, x, opts.weight)?;
    let mut est = NfdrEstimate {
        value: 1.0,
        kind: EstimatorKind::PosteriorMean,
        alpha,
        successes: x,
        trials: n,
        weight: opts.weight,
        capped: true,
        std_error: None,
    };
    if x == 0 {
        return Ok(est);
    }
    let (value, capped, std_error) = match (opts.method, opts.cap) {
        (MeanMethod::MonteCarlo { draws, seed }, cap) => {
            let draws = cd.sample_parameter(draws, seed)?;
            monte_carlo_mean(alpha, &draws, cap)
        }
        (MeanMethod::Quadrature { tolerance }, CapPlacement::PerDraw) => {
            let (v, c) = quadrature_per_draw(&cd, alpha, tolerance)?;
            (v, c, None)
        }
        (MeanMethod::Quadrature { tolerance }, CapPlacement::FinalMean) => {
            let (v, c) = quadrature_final_mean(&cd, alpha, tolerance)?;
            (v, c, None)
        }
    };
    est.value = value.clamp(0.0, 1.0);
    est.capped = capped;
    est.std_error = std_error;
    Ok(est)
}

fn capped_ratio(alpha: f64, pi: f64) -> f64 {
    if pi <= alpha {
        1.0
    } else {
        alpha / pi
    }
}

fn monte_carlo_mean(alpha: f64, draws: &[f64], cap: CapPlacement) -> (f64, bool, Option<f64>) {
    let n = draws.len() as f64;
    match cap {
        CapPlacement::PerDraw => {
            let vals: Vec<f64> = draws.iter().map(|&p| capped_ratio(alpha, p)).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let capped = draws.iter().any(|&p| p < alpha || p == 0.0);
            let se = if draws.len() > 1 {
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                Some((var / n).sqrt())
            } else {
                None
            };
            (mean, capped, se)
        }
        CapPlacement::FinalMean => {
            if draws.contains(&0.0) {
                return (1.0, true, None);
            }
            let raw = draws.iter().map(|&p| alpha / p).sum::<f64>() / n;
            (raw.min(1.0), raw > 1.0, None)
        }
    }
}

/// Integrates in the probability variable `u = S_C(pi)`. Below
/// `u* = S_C(alpha)` the capped integrand is identically 1, so only
/// `[u*, S_C(1)]` needs numerical work; the atom at 1 adds
/// `(1 - S_C(1)) * alpha`.
fn quadrature_per_draw(cd: &ConfidenceDistribution, alpha: f64, tol: f64) -> Result<(f64, bool)> {
    if alpha >= 1.0 {
        return Ok((1.0, false));
    }
    let (lo, hi) = cd.attainable_range();
    let u_star = cd.significance(alpha)?.clamp(lo, hi);
    let mut value = u_star + (1.0 - hi) * alpha;
    if hi > u_star {
        let integral = quad::integrate(
            |u| alpha / cd.quantile(u).unwrap_or(1.0),
            u_star,
            hi,
            tol,
            0.0,
            QUAD_MAX_SEGMENTS,
        )?;
        value += integral.value;
    }
    Ok((value, u_star > 0.0))
}

/// Integrates `alpha * density(pi) / pi` in the parameter variable. The
/// integral diverges when the confidence density stays positive at 0
/// faster than `pi`, in which case the capped mean is 1.
fn quadrature_final_mean(cd: &ConfidenceDistribution, alpha: f64, tol: f64) -> Result<(f64, bool)> {
    let (lo, hi) = cd.attainable_range();
    let x = cd.successes();
    let c = cd.weight();
    let diverges = lo > 0.0 || (x == 0 && c < 1.0) || (x == 1 && c > 0.0);
    if diverges && alpha > 0.0 {
        return Ok((1.0, true));
    }
    let integral = quad::integrate(
        |p| alpha * cd.density(p).unwrap_or(0.0) / p,
        0.0,
        1.0,
        tol,
        0.0,
        QUAD_MAX_SEGMENTS,
    )?;
    let raw = integral.value + (1.0 - hi) * alpha;
    Ok((raw.min(1.0), raw > 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_opts(weight: f64) -> MeanOptions {
        MeanOptions {
            weight,
            method: MeanMethod::Quadrature { tolerance: 1e-10 },
            cap: CapPlacement::PerDraw,
        }
    }

    #[test]
    fn truth_examples() {
        let t = MixtureTruth::new(1.0, 0.3, 0.3).unwrap();
        assert_eq!(true_nfdr(&t).unwrap(), 1.0);
        let t = MixtureTruth::new(0.0, 0.3, 0.6).unwrap();
        assert_eq!(true_nfdr(&t).unwrap(), 0.0);
        let t = MixtureTruth::new(0.8, 0.05, 0.2).unwrap();
        assert!((true_nfdr(&t).unwrap() - 0.2).abs() < 1e-15);
        assert!((t.alt_prob().unwrap() - 0.8).abs() < 1e-12);
        let t = MixtureTruth::new(0.0, 0.0, 0.0).unwrap();
        assert!(true_nfdr(&t).is_err());
        assert!(MixtureTruth::new(0.9, 0.5, 0.1).is_err());
    }

    #[test]
    fn mle_examples() {
        let e = mle_nfdr(0.05, 2, 20).unwrap();
        assert!((e.value - 0.5).abs() < 1e-15);
        assert!(!e.capped);
        let e = mle_nfdr(0.2, 1, 10).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(e.capped);
        assert_eq!(mle_nfdr(0.05, 0, 5).unwrap().value, 1.0);
        assert!(mle_nfdr(0.05, 6, 5).is_err());
        assert!(mle_nfdr(0.05, 0, 0).is_err());
    }

    #[test]
    fn corrected_examples() {
        assert!((corrected_nfdr(0.05, 1, 1, 1.0).unwrap().value - 0.1).abs() < 1e-12);
        for n in [1, 4, 30] {
            assert_eq!(corrected_nfdr(0.05, 0, n, 1.0).unwrap().value, 1.0);
        }
        let v = corrected_nfdr(0.05, 2, 2, 1.0).unwrap().value;
        assert!((v - 0.05 / 2f64.powf(-0.5)).abs() < 1e-12);
        // x = 0 with C = 1/2: median sits exactly on the atom at 0
        assert_eq!(corrected_nfdr(0.05, 0, 3, 0.5).unwrap().value, 1.0);
        // x = N with C = 0: the whole distribution is the atom at 1
        assert!((corrected_nfdr(0.05, 3, 3, 0.0).unwrap().value - 0.05).abs() < 1e-15);
    }

    #[test]
    fn mean_uniform_closed_form() {
        let alpha: f64 = 0.05;
        let exact = alpha * (1.0 - alpha.ln());
        let e = mean_nfdr(alpha, 1, 1, &quad_opts(1.0)).unwrap();
        assert!((e.value - exact).abs() < 1e-9, "{} vs {exact}", e.value);
    }

    #[test]
    fn mean_alpha_one_is_one() {
        for (x, n) in [(1, 1), (2, 5), (5, 5)] {
            assert_eq!(mean_nfdr(1.0, x, n, &quad_opts(0.5)).unwrap().value, 1.0);
            let mc = MeanOptions {
                method: MeanMethod::MonteCarlo { draws: 50, seed: 3 },
                ..MeanOptions::default()
            };
            assert_eq!(mean_nfdr(1.0, x, n, &mc).unwrap().value, 1.0);
        }
    }

    #[test]
    fn mean_zero_discoveries() {
        assert_eq!(mean_nfdr(0.1, 0, 4, &quad_opts(0.5)).unwrap().value, 1.0);
        assert_eq!(mean_nfdr(0.1, 0, 4, &MeanOptions::default()).unwrap().value, 1.0);
    }

    #[test]
    fn quadrature_is_deterministic() {
        let a = mean_nfdr(0.03, 3, 9, &quad_opts(0.5)).unwrap().value;
        let b = mean_nfdr(0.03, 3, 9, &quad_opts(0.5)).unwrap().value;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn final_mean_cap_diverging_cases() {
        let opts = MeanOptions {
            weight: 0.5,
            method: MeanMethod::Quadrature { tolerance: 1e-10 },
            cap: CapPlacement::FinalMean,
        };
        // x = 1 with C > 0: int alpha / pi dS diverges
        assert_eq!(mean_nfdr(0.05, 1, 4, &opts).unwrap().value, 1.0);
        // x = N = 1, C = 0.5: S(pi) = pi / 2, atom 1/2 at 1, divergent part
        assert_eq!(mean_nfdr(0.05, 1, 1, &opts).unwrap().value, 1.0);
    }

    #[test]
    fn final_mean_matches_beta_moment() {
        // C = 1, x = N: S(pi) = pi^N, E[1 / pi] = N / (N - 1)
        let opts = MeanOptions {
            weight: 1.0,
            method: MeanMethod::Quadrature { tolerance: 1e-11 },
            cap: CapPlacement::FinalMean,
        };
        let alpha = 0.02;
        for n in [2u64, 3, 6] {
            let v = mean_nfdr(alpha, n, n, &opts).unwrap().value;
            let exact = alpha * n as f64 / (n as f64 - 1.0);
            assert!((v - exact).abs() < 1e-9, "n={n}: {v} vs {exact}");
        }
    }

    #[test]
    fn per_draw_cap_bounded_by_final_mean() {
        // min(a/p, 1) <= a/p pointwise, so per-draw <= final-mean before capping
        for (x, n) in [(3, 6), (4, 4), (5, 9)] {
            let per = mean_nfdr(0.02, x, n, &quad_opts(1.0)).unwrap().value;
            let fin = mean_nfdr(
                0.02,
                x,
                n,
                &MeanOptions {
                    cap: CapPlacement::FinalMean,
                    ..quad_opts(1.0)
                },
            )
            .unwrap()
            .value;
            assert!(per <= fin + 1e-9);
        }
    }
}

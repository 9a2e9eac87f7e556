//! Chi-squared mixture simulation study, the true LFDR it implies, error
//! metrics over a grid of null proportions and sizes, the Pearson
//! skewness diagnostic, and exact small-N coverage by enumeration.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distkit::{chi2_1df_sf, noncentral_chi2_1df_pdf, BinomialParams, Chi2MixtureParams};
use crate::error::{Error, Result};
use crate::lfdr::{lfdr_estimates, Estimator, LfdrOptions, PValueSet};
use crate::nfdr::{CapPlacement, EstimatorKind, MeanMethod, MeanOptions, DEFAULT_MC_DRAWS};
use crate::seeds::derive_seed;

/// How per-hypothesis errors are averaged into a cell metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricPooling {
    /// One average over every (hypothesis, replicate) pair.
    #[default]
    Pooled,
    /// Average within each replicate, then across replicates.
    PerReplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub pi0_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub delta: f64,
    pub replicates: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub mc_draws: usize,
    /// Tie weight of the corrected (median) estimator.
    pub corrected_weight: f64,
    /// Tie weight of the confidence-posterior mean.
    pub mean_weight: f64,
    pub mean_cap: CapPlacement,
    pub pooling: MetricPooling,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            pi0_grid: vec![0.5, 0.75, 0.9, 1.0],
            n_grid: vec![2, 4, 8, 16, 32],
            delta: 2.0,
            replicates: 100,
            seed: 20_100_409,
            estimators: vec![
                EstimatorKind::Mle,
                EstimatorKind::CorrectedMedian,
                EstimatorKind::PosteriorMean,
            ],
            mc_draws: DEFAULT_MC_DRAWS,
            corrected_weight: 1.0,
            mean_weight: 0.5,
            mean_cap: CapPlacement::PerDraw,
            pooling: MetricPooling::Pooled,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pi0_grid.is_empty() || self.n_grid.is_empty() || self.estimators.is_empty() {
            return Err(Error::domain("grids and estimator list must be nonempty"));
        }
        if self.replicates == 0 {
            return Err(Error::domain("replicates must be at least 1"));
        }
        if self.mc_draws == 0 {
            return Err(Error::domain("mc_draws must be at least 1"));
        }
        if self.n_grid.contains(&0) {
            return Err(Error::domain("every N must be at least 1"));
        }
        for &pi0 in &self.pi0_grid {
            Chi2MixtureParams::new(pi0, self.delta)?;
        }
        for w in [self.corrected_weight, self.mean_weight] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::domain(format!("weight {w} not in [0, 1]")));
            }
        }
        Ok(())
    }

    /// The concrete estimator for `kind`, with its Monte Carlo stream
    /// rooted at `seed`.
    pub fn estimator(&self, kind: EstimatorKind, seed: u64) -> Estimator {
        match kind {
            EstimatorKind::Mle => Estimator::Mle,
            EstimatorKind::CorrectedMedian => Estimator::CorrectedMedian {
                weight: self.corrected_weight,
            },
            EstimatorKind::PosteriorMean => Estimator::PosteriorMean(MeanOptions {
                weight: self.mean_weight,
                method: MeanMethod::MonteCarlo {
                    draws: self.mc_draws,
                    seed,
                },
                cap: self.mean_cap,
            }),
        }
    }
}

/// Where a dataset's randomness came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPath {
    pub base: u64,
    pub path: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedDataset {
    pub statistics: Vec<f64>,
    /// 1 when the null hypothesis is false.
    pub truth_labels: Vec<u8>,
    pub p_values: Vec<f64>,
    pub seed_path: SeedPath,
}

/// Draws `n` statistics: with probability `pi0` the null is true and the
/// statistic is `Z^2`, otherwise it is `(Z + sqrt(delta))^2`.
pub fn generate_dataset(pi0: f64, n: usize, delta: f64, seed: u64) -> Result<SimulatedDataset> {
    let params = Chi2MixtureParams::new(pi0, delta)?;
    let mut ds = sample_mixture(&params, n, &mut ChaCha8Rng::seed_from_u64(seed))?;
    ds.seed_path = SeedPath {
        base: seed,
        path: Vec::new(),
    };
    Ok(ds)
}

fn sample_mixture<R: Rng + ?Sized>(params: &Chi2MixtureParams, n: usize, rng: &mut R) -> Result<SimulatedDataset> {
    let shift = params.delta().sqrt();
    let mut statistics = Vec::with_capacity(n);
    let mut truth_labels = Vec::with_capacity(n);
    let mut p_values = Vec::with_capacity(n);
    for _ in 0..n {
        let false_null = rng.random::<f64>() >= params.pi0();
        let z: f64 = rng.sample(StandardNormal);
        let t = if false_null { (z + shift).powi(2) } else { z * z };
        statistics.push(t);
        truth_labels.push(false_null as u8);
        p_values.push(chi2_1df_sf(t)?);
    }
    Ok(SimulatedDataset {
        statistics,
        truth_labels,
        p_values,
        seed_path: SeedPath {
            base: 0,
            path: Vec::new(),
        },
    })
}

/// Inverse of the chi-squared (1 df) survival function, parametrized by
/// `z = sqrt(t)`: a monotone lookup grid brackets the root and bisection
/// refines it.
struct Chi2InverseSf {
    z: Vec<f64>,
    p: Vec<f64>,
}

const INV_GRID_POINTS: usize = 10_000;
const INV_Z_MAX: f64 = 38.0;

impl Chi2InverseSf {
    fn shared() -> &'static Self {
        static CACHE: OnceLock<Chi2InverseSf> = OnceLock::new();
        CACHE.get_or_init(|| {
            let step = INV_Z_MAX / (INV_GRID_POINTS - 1) as f64;
            let z: Vec<f64> = (0..INV_GRID_POINTS).map(|i| i as f64 * step).collect();
            let p = z.iter().map(|&z| sf_z(z)).collect();
            Chi2InverseSf { z, p }
        })
    }

    /// `sqrt` of the statistic whose p-value is `p`; infinite for `p = 0`.
    fn z_of(&self, p: f64) -> f64 {
        if p >= 1.0 {
            return 0.0;
        }
        if p <= 0.0 {
            return f64::INFINITY;
        }
        // p is decreasing along the grid
        let idx = self.p.partition_point(|&g| g > p);
        let (mut lo, mut hi) = if idx == 0 {
            (0.0, 0.0)
        } else if idx >= self.p.len() {
            (INV_Z_MAX, 40.0)
        } else {
            (self.z[idx - 1], self.z[idx])
        };
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sf_z(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn sf_z(z: f64) -> f64 {
    libm::erfc(z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Inverse survival function of the central chi-squared with one degree
/// of freedom.
pub fn chi2_1df_isf(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p-value {p} not in [0, 1]")));
    }
    let z = Chi2InverseSf::shared().z_of(p);
    Ok(z * z)
}

/// Posterior probability that the null is true given p-value `p`, under the
/// chi-squared mixture. Computed from the log likelihood ratio
/// `f1/f0 = exp(-delta/2) cosh(sqrt(delta t))`, so `p = 0` gives the
/// `t -> infinity` limit.
pub fn true_lfdr(p: f64, pi0: f64, delta: f64) -> Result<f64> {
    let params = Chi2MixtureParams::new(pi0, delta)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p-value {p} not in [0, 1]")));
    }
    if pi0 == 1.0 {
        return Ok(1.0);
    }
    if pi0 == 0.0 {
        return Ok(0.0);
    }
    let z = Chi2InverseSf::shared().z_of(p);
    Ok(lfdr_from_z(z, &params))
}

fn lfdr_from_z(z: f64, params: &Chi2MixtureParams) -> f64 {
    let delta = params.delta();
    if delta == 0.0 {
        return params.pi0();
    }
    if z.is_infinite() {
        return 0.0;
    }
    let y = z * delta.sqrt();
    let ln_cosh = y + (-2.0 * y).exp().ln_1p() - std::f64::consts::LN_2;
    let log_odds_alt = ((1.0 - params.pi0()) / params.pi0()).ln() - 0.5 * delta + ln_cosh;
    1.0 / (1.0 + log_odds_alt.exp())
}

/// Same quantity from the statistic and the two component densities.
pub fn true_lfdr_from_statistic(t: f64, pi0: f64, delta: f64) -> Result<f64> {
    Chi2MixtureParams::new(pi0, delta)?;
    let f0 = noncentral_chi2_1df_pdf(t, 0.0)?;
    let f1 = noncentral_chi2_1df_pdf(t, delta)?;
    Ok(pi0 * f0 / (pi0 * f0 + (1.0 - pi0) * f1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub pi0: f64,
    pub n: usize,
    pub estimator: EstimatorKind,
    pub rmse: f64,
    pub conservatism_proportion: f64,
    pub bias: f64,
    pub replicate_count: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct ErrorSums {
    sq: f64,
    conservative: usize,
    diff: f64,
    count: usize,
}

impl ErrorSums {
    fn push(&mut self, estimate: f64, truth: f64) {
        let d = estimate - truth;
        self.sq += d * d;
        self.diff += d;
        self.count += 1;
        if estimate >= truth {
            self.conservative += 1;
        }
    }

    fn add(&mut self, o: &ErrorSums) {
        self.sq += o.sq;
        self.conservative += o.conservative;
        self.diff += o.diff;
        self.count += o.count;
    }

    /// (rmse, proportion, bias)
    fn metrics(&self) -> (f64, f64, f64) {
        let n = self.count as f64;
        ((self.sq / n).sqrt(), self.conservative as f64 / n, self.diff / n)
    }
}

/// Runs one replicate of one cell, returning error sums per estimator.
fn run_replicate(config: &SimulationConfig, pi0: f64, n: usize, seed: u64) -> Result<Vec<ErrorSums>> {
    let params = Chi2MixtureParams::new(pi0, config.delta)?;
    let ds = sample_mixture(&params, n, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let pvals = PValueSet::from_values(&ds.p_values, derive_seed(seed, &[1]))?;
    let truth: Vec<f64> = ds
        .p_values
        .iter()
        .map(|&p| true_lfdr(p, pi0, config.delta))
        .collect::<Result<_>>()?;
    config
        .estimators
        .iter()
        .enumerate()
        .map(|(e, &kind)| {
            let estimator = config.estimator(kind, derive_seed(seed, &[2, e as u64]));
            let result = lfdr_estimates(&pvals, &LfdrOptions::new(estimator))?;
            let mut sums = ErrorSums::default();
            for (est, tr) in result.monotone_by_entry(&pvals).into_iter().zip(&truth) {
                sums.push(est, *tr);
            }
            Ok(sums)
        })
        .collect()
}

/// Evaluates every `(pi0, N, estimator)` cell. Rows come out sorted by
/// grid position, then by the order of `config.estimators`; results do not
/// depend on how rayon schedules the work.
pub fn run_grid(config: &SimulationConfig) -> Result<Vec<MetricsRow>> {
    config.validate()?;
    let units: Vec<(usize, usize, usize)> = (0..config.pi0_grid.len())
        .flat_map(|i| {
            (0..config.n_grid.len())
                .flat_map(move |j| (0..config.replicates).map(move |r| (i, j, r)))
        })
        .collect();
    let partials: Vec<Vec<ErrorSums>> = units
        .par_iter()
        .map(|&(i, j, r)| {
            let seed = derive_seed(config.seed, &[i as u64, j as u64, r as u64]);
            run_replicate(config, config.pi0_grid[i], config.n_grid[j], seed)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (cell, chunk) in partials.chunks(config.replicates).enumerate() {
        let i = cell / config.n_grid.len();
        let j = cell % config.n_grid.len();
        for (e, &kind) in config.estimators.iter().enumerate() {
            let (rmse, prop, bias) = match config.pooling {
                MetricPooling::Pooled => {
                    let mut total = ErrorSums::default();
                    for rep in chunk {
                        total.add(&rep[e]);
                    }
                    total.metrics()
                }
                MetricPooling::PerReplicate => {
                    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                    for rep in chunk {
                        let (x, y, z) = rep[e].metrics();
                        a += x;
                        b += y;
                        c += z;
                    }
                    let k = chunk.len() as f64;
                    (a / k, b / k, c / k)
                }
            };
            rows.push(MetricsRow {
                pi0: config.pi0_grid[i],
                n: config.n_grid[j],
                estimator: kind,
                rmse,
                conservatism_proportion: prop,
                bias,
                replicate_count: chunk.len(),
            });
        }
    }
    Ok(rows)
}

/// `3 (mean - median) / sd`, with the `n - 1` standard deviation.
pub fn pearson_skewness(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::domain("skewness needs at least two samples"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) {
        return Err(Error::domain("skewness undefined for zero variance"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    Ok(3.0 * (mean - median) / var.sqrt())
}

/// Exact probability that the NFDR estimate at level `alpha` is at least
/// the upper bound `alpha / pi` of the NFDR, when the number of discoveries
/// is Binomial(`n`, `pi`).
pub fn exact_small_n_coverage(n: u64, alpha: f64, pi: f64, estimator: &Estimator) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::domain(format!("alpha {alpha} not in (0, 1]")));
    }
    if !(pi >= alpha && pi <= 1.0) {
        return Err(Error::domain(format!(
            "discovery probability {pi} must lie in [alpha = {alpha}, 1]"
        )));
    }
    let binom = BinomialParams::new(n, pi)?;
    let bound = alpha / pi;
    let mut coverage = 0.0;
    for x in 0..=n {
        let est = estimator.estimate(alpha, x, n, x)?;
        if est.value >= bound {
            coverage += binom.pmf(x)?;
        }
    }
    Ok(coverage.min(1.0))
}

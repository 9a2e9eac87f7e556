//! Local false discovery rates from ranked p-values.
//!
//! The LFDR at the p-value of rank `r` is estimated by the NFDR estimated
//! at level `p_(2r)` with `2r` discoveries out of `N`, or by 1 when
//! `2r > N`. Estimates are then made nondecreasing in rank by a running
//! maximum. The same ranked set drives the Benjamini-Hochberg step-up rule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfdr::{
    corrected_nfdr, mean_nfdr, mle_nfdr, EstimatorKind, MeanMethod, MeanOptions, NfdrEstimate,
};
use crate::seeds::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueEntry {
    pub id: String,
    pub p: f64,
}

/// P-values with a tie-free ranking.
///
/// Ties are broken by a random permutation drawn from `tie_break_seed`, so
/// ranks are a bijection onto `1..=N` and reproducible from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueSet {
    entries: Vec<PValueEntry>,
    tie_break_seed: u64,
    /// `order[k]` is the entry holding rank `k + 1`.
    order: Vec<usize>,
    /// `ranks[i]` is the 1-based rank of entry `i`.
    ranks: Vec<usize>,
}

impl PValueSet {
    pub fn new(entries: Vec<PValueEntry>, tie_break_seed: u64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("p-value set has no entries".into()));
        }
        if let Some(bad) = entries.iter().find(|e| !(0.0..=1.0).contains(&e.p)) {
            return Err(Error::domain(format!(
                "p-value {} for '{}' not in [0, 1]",
                bad.p, bad.id
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(tie_break_seed);
        let keys: Vec<u64> = entries.iter().map(|_| rng.random()).collect();
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by(|&a, &b| {
            entries[a]
                .p
                .total_cmp(&entries[b].p)
                .then(keys[a].cmp(&keys[b]))
                .then(a.cmp(&b))
        });
        let mut ranks = vec![0; entries.len()];
        for (k, &i) in order.iter().enumerate() {
            ranks[i] = k + 1;
        }
        Ok(Self {
            entries,
            tie_break_seed,
            order,
            ranks,
        })
    }

    /// Builds a set with ids `"1"`, `"2"`, ... in input order.
    pub fn from_values(ps: &[f64], tie_break_seed: u64) -> Result<Self> {
        let entries = ps
            .iter()
            .enumerate()
            .map(|(i, &p)| PValueEntry {
                id: (i + 1).to_string(),
                p,
            })
            .collect();
        Self::new(entries, tie_break_seed)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PValueEntry] {
        &self.entries
    }

    pub fn tie_break_seed(&self) -> u64 {
        self.tie_break_seed
    }

    /// Rank of entry `i` (1-based).
    pub fn rank(&self, i: usize) -> usize {
        self.ranks[i]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// The order statistic `p_(k)`, `k` 1-based.
    pub fn order_stat(&self, k: usize) -> f64 {
        self.entries[self.order[k - 1]].p
    }

    /// Entry holding rank `k` (1-based).
    pub fn by_rank(&self, k: usize) -> &PValueEntry {
        &self.entries[self.order[k - 1]]
    }

    /// Entries in rank order.
    pub fn ranked(&self) -> impl Iterator<Item = (usize, &PValueEntry)> + '_ {
        self.order.iter().enumerate().map(|(k, &i)| (k + 1, &self.entries[i]))
    }
}

/// An NFDR estimator with its tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Mle,
    CorrectedMedian { weight: f64 },
    PosteriorMean(MeanOptions),
}

impl Estimator {
    pub fn corrected() -> Self {
        Estimator::CorrectedMedian { weight: 1.0 }
    }

    pub fn mean_monte_carlo(draws: usize, seed: u64) -> Self {
        Estimator::PosteriorMean(MeanOptions {
            method: MeanMethod::MonteCarlo { draws, seed },
            ..MeanOptions::default()
        })
    }

    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimator::Mle => EstimatorKind::Mle,
            Estimator::CorrectedMedian { .. } => EstimatorKind::CorrectedMedian,
            Estimator::PosteriorMean(_) => EstimatorKind::PosteriorMean,
        }
    }

    /// Evaluates the estimator. `stream` selects an independent Monte Carlo
    /// stream so that calls at different ranks do not share draws.
    pub fn estimate(&self, alpha: f64, x: u64, n: u64, stream: u64) -> Result<NfdrEstimate> {
        match *self {
            Estimator::Mle => mle_nfdr(alpha, x, n),
            Estimator::CorrectedMedian { weight } => corrected_nfdr(alpha, x, n, weight),
            Estimator::PosteriorMean(opts) => {
                let opts = match opts.method {
                    MeanMethod::MonteCarlo { draws, seed } => MeanOptions {
                        method: MeanMethod::MonteCarlo {
                            draws,
                            seed: derive_seed(seed, &[stream]),
                        },
                        ..opts
                    },
                    MeanMethod::Quadrature { .. } => opts,
                };
                mean_nfdr(alpha, x, n, &opts)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfdrOptions {
    pub estimator: Estimator,
    /// Apply the running maximum; when false the monotone column repeats
    /// the raw estimates.
    pub enforce_monotone: bool,
}

impl LfdrOptions {
    pub fn new(estimator: Estimator) -> Self {
        Self {
            estimator,
            enforce_monotone: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfdrRow {
    pub id: String,
    pub p: f64,
    pub rank: usize,
    pub raw_estimate: f64,
    pub monotone_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfdrResult {
    /// One row per hypothesis, in rank order.
    pub rows: Vec<LfdrRow>,
    pub estimator_kind: EstimatorKind,
    /// NFDR estimates behind ranks `1..=N/2`, in rank order.
    pub nfdr_trace: Vec<NfdrEstimate>,
}

impl LfdrResult {
    pub fn raw(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.raw_estimate).collect()
    }

    pub fn monotone(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.monotone_estimate).collect()
    }

    /// Monotone estimates indexed like the entries of the input set.
    pub fn monotone_by_entry(&self, pvals: &PValueSet) -> Vec<f64> {
        (0..pvals.len())
            .map(|i| self.rows[pvals.rank(i) - 1].monotone_estimate)
            .collect()
    }
}

pub fn lfdr_estimates(pvals: &PValueSet, opts: &LfdrOptions) -> Result<LfdrResult> {
    let n = pvals.len();
    if n == 0 {
        return Err(Error::Empty("no p-values to estimate from".into()));
    }
    let half = n / 2;
    let nfdr_trace: Vec<NfdrEstimate> = (1..=half)
        .into_par_iter()
        .map(|r| {
            let alpha = pvals.order_stat(2 * r);
            opts.estimator.estimate(alpha, 2 * r as u64, n as u64, r as u64)
        })
        .collect::<Result<_>>()?;

    let raw: Vec<f64> = (1..=n)
        .map(|r| if r <= half { nfdr_trace[r - 1].value } else { 1.0 })
        .collect();
    let monotone = if opts.enforce_monotone {
        enforce_monotonicity(&raw)
    } else {
        raw.clone()
    };
    let rows = pvals
        .ranked()
        .map(|(rank, e)| LfdrRow {
            id: e.id.clone(),
            p: e.p,
            rank,
            raw_estimate: raw[rank - 1],
            monotone_estimate: monotone[rank - 1],
        })
        .collect();
    Ok(LfdrResult {
        rows,
        estimator_kind: opts.estimator.kind(),
        nfdr_trace,
    })
}

/// Running maximum in rank order.
pub fn enforce_monotonicity(estimates: &[f64]) -> Vec<f64> {
    estimates
        .iter()
        .scan(f64::NEG_INFINITY, |acc, &v| {
            *acc = acc.max(v);
            Some(*acc)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhRejection {
    /// Rejected ids in rank order.
    pub rejected: Vec<String>,
    /// Largest qualifying rank `k*`, 0 when nothing is rejected.
    pub threshold_rank: usize,
    /// `p_(k*)`, when something is rejected.
    pub threshold_p: Option<f64>,
    pub q: f64,
}

/// Benjamini-Hochberg at level `q`, stated through the MLE of the NFDR:
/// `k* = max { k : mle(p_(k); k, N) <= q }`.
///
/// The MLE condition is checked solved for the level, `p_(k) <= q k / N`,
/// so a p-value sitting exactly on the boundary is rejected regardless of
/// rounding in `p N / k`.
pub fn bh_reject(pvals: &PValueSet, q: f64) -> Result<BhRejection> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("FDR level {q} not in (0, 1)")));
    }
    let n = pvals.len() as f64;
    let k_star = (1..=pvals.len())
        .rev()
        .find(|&k| pvals.order_stat(k) <= mle_level_at(q, k as f64, n))
        .unwrap_or(0);
    Ok(BhRejection {
        rejected: (1..=k_star).map(|k| pvals.by_rank(k).id.clone()).collect(),
        threshold_rank: k_star,
        threshold_p: (k_star > 0).then(|| pvals.order_stat(k_star)),
        q,
    })
}

/// Largest level whose MLE with `k` of `n` discoveries is at most `q`.
fn mle_level_at(q: f64, k: f64, n: f64) -> f64 {
    q * k / n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianRejected {
    /// Lower-median rank within the rejection set.
    pub rank: usize,
    pub id: String,
    pub p: f64,
    /// Raw MLE LFDR at that rank.
    pub lfdr_mle: f64,
    /// Same after the running maximum.
    pub lfdr_mle_monotone: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhLfdrLink {
    pub rejection: BhRejection,
    /// `None` when nothing is rejected.
    pub median: Option<MedianRejected>,
}

impl BhLfdrLink {
    pub fn is_applicable(&self) -> bool {
        self.median.is_some()
    }
}

/// Reports the MLE LFDR at the median rejected p-value next to the level
/// `q` at which BH controls the FDR.
pub fn bh_lfdr_link(pvals: &PValueSet, q: f64) -> Result<BhLfdrLink> {
    let rejection = bh_reject(pvals, q)?;
    if rejection.threshold_rank == 0 {
        return Ok(BhLfdrLink {
            rejection,
            median: None,
        });
    }
    let lfdr = lfdr_estimates(pvals, &LfdrOptions::new(Estimator::Mle))?;
    let rank = rejection.threshold_rank.div_ceil(2);
    let row = &lfdr.rows[rank - 1];
    let median = MedianRejected {
        rank,
        id: row.id.clone(),
        p: row.p,
        lfdr_mle: row.raw_estimate,
        lfdr_mle_monotone: row.monotone_estimate,
    };
    Ok(BhLfdrLink {
        rejection,
        median: Some(median),
    })
}

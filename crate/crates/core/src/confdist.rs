//! Binomial confidence distributions.
//!
//! For `x` successes in `N` trials, the significance function
//! `S_C(pi; x) = Pr(X > x; pi) + C Pr(X = x; pi)` is nondecreasing in `pi`
//! and can be read as the distribution function of a random binomial
//! parameter. Its atoms sit at 0 (mass `S_C(0)`) and at 1 (mass
//! `1 - S_C(1)`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distkit::BinomialParams;
use crate::error::{Error, Result};

/// Absolute bisection tolerance in the parameter.
pub const INVERSE_TOL: f64 = 1e-12;
/// Bisection iteration cap.
pub const INVERSE_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceDistribution {
    trials: u64,
    successes: u64,
    weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntervalSide {
    /// `[lower, 1]`, built from `S_1`.
    LowerBounded,
    /// `[0, upper]`, built from `S_0`.
    UpperBounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityInterval {
    pub lower: f64,
    pub upper: f64,
}

impl ProbabilityInterval {
    pub fn contains(&self, pi: f64) -> bool {
        self.lower <= pi && pi <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

impl ConfidenceDistribution {
    pub fn new(trials: u64, successes: u64, weight: f64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if successes > trials {
            return Err(Error::domain(format!(
                "successes {successes} exceed trials {trials}"
            )));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::domain(format!("weight {weight} not in [0, 1]")));
        }
        Ok(Self {
            trials,
            successes,
            weight,
        })
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Same data, different tie weight.
    pub fn with_weight(&self, weight: f64) -> Result<Self> {
        Self::new(self.trials, self.successes, weight)
    }

    /// `S_C(pi; x)`.
    pub fn significance(&self, pi: f64) -> Result<f64> {
        let b = BinomialParams::new(self.trials, pi)?;
        let mut s = b.sf(self.successes)?;
        if self.weight > 0.0 {
            s += self.weight * b.pmf(self.successes)?;
        }
        Ok(s.min(1.0))
    }

    /// `[S_C(0), S_C(1)]`, written in closed form.
    pub fn attainable_range(&self) -> (f64, f64) {
        let at_zero = if self.successes == 0 { self.weight } else { 0.0 };
        let at_one = if self.successes < self.trials {
            1.0
        } else {
            self.weight
        };
        (at_zero, at_one)
    }

    /// True when `S_C` does not move with `pi` (`x = N, C = 0` or `x = 0, C = 1`).
    pub fn is_constant(&self) -> bool {
        let (lo, hi) = self.attainable_range();
        lo == hi
    }

    /// Derivative `dS_C/dpi = N [(1 - C) b(x; N-1, pi) + C b(x-1; N-1, pi)]`,
    /// the continuous part of the confidence density.
    pub fn density(&self, pi: f64) -> Result<f64> {
        let n = self.trials;
        let x = self.successes;
        if !(0.0..=1.0).contains(&pi) {
            return Err(Error::domain(format!("parameter {pi} not in [0, 1]")));
        }
        if n == 1 {
            // b(.; 0, pi) is a point mass at 0
            let strict = if x == 0 { 1.0 - self.weight } else { 0.0 };
            let tie = if x == 1 { self.weight } else { 0.0 };
            return Ok(strict + tie);
        }
        let reduced = BinomialParams::new(n - 1, pi)?;
        let strict = if x < n { reduced.pmf(x)? } else { 0.0 };
        let tie = if x >= 1 { reduced.pmf(x - 1)? } else { 0.0 };
        Ok(n as f64 * ((1.0 - self.weight) * strict + self.weight * tie))
    }

    /// The unique `pi` with `S_C(pi) = s`, by bracketed bisection.
    ///
    /// Fails with [`Error::Range`] when `s` is outside
    /// [`attainable_range`](Self::attainable_range), and with a domain error
    /// when `S_C` is constant (every `pi` solves the equation).
    pub fn inverse_significance(&self, s: f64) -> Result<f64> {
        let (lo_val, hi_val) = self.attainable_range();
        if s.is_nan() || s < lo_val || s > hi_val {
            return Err(Error::Range {
                value: s,
                lo: lo_val,
                hi: hi_val,
                below: !(s >= lo_val),
            });
        }
        if lo_val == hi_val {
            return Err(Error::domain(
                "significance function is constant; inverse is not unique",
            ));
        }
        if s == lo_val {
            return Ok(0.0);
        }
        if s == hi_val {
            return Ok(1.0);
        }
        self.bisect(s, lo_val, hi_val)
    }

    fn bisect(&self, s: f64, mut f_lo: f64, mut f_hi: f64) -> Result<f64> {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..INVERSE_MAX_ITER {
            if hi - lo <= INVERSE_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let f_mid = self.significance(mid)?;
            if f_mid == s {
                return Ok(mid);
            }
            if f_mid < s {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
                f_hi = f_mid;
            }
        }
        // Secant step inside the final bracket.
        let span = f_hi - f_lo;
        if span > 0.0 {
            Ok((lo + (s - f_lo) / span * (hi - lo)).clamp(lo, hi))
        } else {
            Ok(0.5 * (lo + hi))
        }
    }

    /// Generalized inverse `inf { pi : S_C(pi) >= u }`, with values of `u`
    /// above the attainable range sent to 1. This is the quantile function
    /// of the confidence distribution, atoms included.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("probability {u} not in [0, 1]")));
        }
        let (lo_val, hi_val) = self.attainable_range();
        if u <= lo_val {
            return Ok(0.0);
        }
        if u >= hi_val {
            return Ok(1.0);
        }
        self.bisect(u, lo_val, hi_val)
    }

    /// One-sided `(1 - alpha)` confidence interval for the binomial
    /// parameter. The weight is fixed by the side (0 for the upper bound,
    /// 1 for the lower bound) whatever `self.weight` is; unattainable
    /// endpoints degenerate to 0 or 1.
    pub fn one_sided_interval(&self, alpha: f64, side: IntervalSide) -> Result<ProbabilityInterval> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha {alpha} not in (0, 1)")));
        }
        match side {
            IntervalSide::UpperBounded => {
                let upper = self.with_weight(0.0)?.quantile(1.0 - alpha)?;
                Ok(ProbabilityInterval { lower: 0.0, upper })
            }
            IntervalSide::LowerBounded => {
                let lower = self.with_weight(1.0)?.quantile(alpha)?;
                Ok(ProbabilityInterval { lower, upper: 1.0 })
            }
        }
    }

    /// Draws the random parameter by inverse-CDF sampling from a generator
    /// seeded with `seed`.
    pub fn sample_parameter(&self, n_draws: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n_draws, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n_draws: usize, rng: &mut R) -> Result<Vec<f64>> {
        if n_draws == 0 {
            return Err(Error::domain("n_draws must be at least 1"));
        }
        (0..n_draws)
            .map(|_| {
                let u: f64 = rng.random();
                self.quantile(u)
            })
            .collect()
    }
}

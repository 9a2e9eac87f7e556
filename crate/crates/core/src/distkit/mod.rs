//! Special functions and the handful of distributions every estimator
//! rests on: binomial tails, the standard normal, central and noncentral
//! chi-squared with one degree of freedom, and Student's t.

pub mod special;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use special::{beta_reg, ln_choose};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Binomial distribution with `trials` draws and per-draw success
/// probability `success_prob`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialParams {
    trials: u64,
    success_prob: f64,
}

impl BinomialParams {
    pub fn new(trials: u64, success_prob: f64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::domain("binomial trials must be at least 1"));
        }
        if !(0.0..=1.0).contains(&success_prob) {
            return Err(Error::domain(format!(
                "binomial success probability {success_prob} not in [0, 1]"
            )));
        }
        Ok(Self {
            trials,
            success_prob,
        })
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn success_prob(&self) -> f64 {
        self.success_prob
    }

    fn check(&self, x: u64) -> Result<()> {
        if x > self.trials {
            return Err(Error::domain(format!(
                "count {x} exceeds {} trials",
                self.trials
            )));
        }
        Ok(())
    }

    /// `Pr(X = x)`, evaluated in log space.
    pub fn pmf(&self, x: u64) -> Result<f64> {
        self.check(x)?;
        let (n, p) = (self.trials, self.success_prob);
        if p == 0.0 {
            return Ok(if x == 0 { 1.0 } else { 0.0 });
        }
        if p == 1.0 {
            return Ok(if x == n { 1.0 } else { 0.0 });
        }
        let ln_pmf = ln_choose(n, x) + x as f64 * p.ln() + (n - x) as f64 * (-p).ln_1p();
        Ok(ln_pmf.exp())
    }

    /// Strict upper tail `Pr(X > x)`.
    pub fn sf(&self, x: u64) -> Result<f64> {
        self.check(x)?;
        let (n, p) = (self.trials, self.success_prob);
        if x == n || p == 0.0 {
            return Ok(0.0);
        }
        if p == 1.0 {
            return Ok(1.0);
        }
        // Pr(X > x) = Pr(X >= x + 1) = I_p(x + 1, n - x)
        Ok(beta_reg((x + 1) as f64, (n - x) as f64, p))
    }
}

/// Two-component chi-squared mixture: the null component is central
/// chi-squared with one degree of freedom (weight `pi0`), the alternative
/// is noncentral with noncentrality `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi2MixtureParams {
    pi0: f64,
    delta: f64,
}

impl Chi2MixtureParams {
    pub fn new(pi0: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi0) {
            return Err(Error::domain(format!("pi0 {pi0} not in [0, 1]")));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::domain(format!("noncentrality {delta} must be finite and >= 0")));
        }
        Ok(Self { pi0, delta })
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

pub fn std_normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// `Pr(chi2_1 > t) = 2 (1 - Phi(sqrt t))`, computed as `erfc(sqrt(t / 2))`
/// so that tiny tail probabilities keep their relative precision.
pub fn chi2_1df_sf(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("chi-squared statistic {t} must be >= 0")));
    }
    Ok(libm::erfc((0.5 * t).sqrt()))
}

/// Density of the noncentral chi-squared distribution with one degree of
/// freedom and noncentrality `delta`.
pub fn noncentral_chi2_1df_pdf(t: f64, delta: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("density argument {t} must be > 0")));
    }
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("noncentrality {delta} must be >= 0")));
    }
    let s = t.sqrt();
    let m = delta.sqrt();
    Ok((std_normal_pdf(s - m) + std_normal_pdf(s + m)) / (2.0 * s))
}

/// Upper tail `Pr(T > t)` of Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: u64) -> Result<f64> {
    if df < 1 {
        return Err(Error::domain("t distribution needs df >= 1"));
    }
    if t.is_nan() {
        return Err(Error::domain("t statistic is NaN"));
    }
    let nu = df as f64;
    // Pr(|T| > |t|) = I_{nu/(nu+t^2)}(nu/2, 1/2)
    let two_sided = if t.is_infinite() {
        0.0
    } else {
        beta_reg(0.5 * nu, 0.5, nu / (nu + t * t))
    };
    Ok(if t >= 0.0 {
        0.5 * two_sided
    } else {
        1.0 - 0.5 * two_sided
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: u64, p: f64) -> BinomialParams {
        BinomialParams::new(n, p).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(BinomialParams::new(0, 0.5).is_err());
        assert!(BinomialParams::new(3, 1.2).is_err());
        assert!(BinomialParams::new(3, f64::NAN).is_err());
        assert!(Chi2MixtureParams::new(1.1, 2.0).is_err());
        assert!(Chi2MixtureParams::new(0.5, -1.0).is_err());
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(binom(1, 0.5).pmf(0).unwrap(), 0.5);
        // four outcomes HH HT TH TT, two with one success
        assert!((binom(2, 0.5).pmf(1).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(binom(10, 0.0).pmf(0).unwrap(), 1.0);
        assert!(binom(3, 0.5).pmf(4).is_err());
    }

    #[test]
    fn pmf_large_n_finite() {
        let b = binom(1_000_000, 0.3);
        let p = b.pmf(300_000).unwrap();
        assert!(p.is_finite() && p > 0.0);
        // normal approximation at the mode: 1 / sqrt(2 pi n p q)
        let approx = 1.0 / (2.0 * std::f64::consts::PI * 1e6 * 0.21).sqrt();
        assert!((p / approx - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sf_examples() {
        assert!((binom(2, 0.5).sf(1).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(binom(5, 1.0).sf(4).unwrap(), 1.0);
        assert_eq!(binom(3, 0.5).sf(3).unwrap(), 0.0);
        assert!(binom(3, 0.5).sf(4).is_err());
    }

    #[test]
    fn normal_cdf_examples() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
    }

    #[test]
    fn chi2_sf_examples() {
        assert_eq!(chi2_1df_sf(0.0).unwrap(), 1.0);
        assert!((chi2_1df_sf(3.841_458_820_694_124).unwrap() - 0.05).abs() < 1e-12);
        assert!(chi2_1df_sf(-0.1).is_err());
        assert_eq!(chi2_1df_sf(f64::INFINITY).unwrap(), 0.0);
        let mut prev = 1.0;
        for k in 1..200 {
            let v = chi2_1df_sf(k as f64 * 0.1).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn noncentral_pdf_examples() {
        let v = noncentral_chi2_1df_pdf(1.0, 0.0).unwrap();
        let closed = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((v - closed).abs() < 1e-15);
        assert!(noncentral_chi2_1df_pdf(0.0, 1.0).is_err());
        assert!(noncentral_chi2_1df_pdf(1.0, -1.0).is_err());
        // central chi2_1 density: t^{-1/2} e^{-t/2} / sqrt(2 pi)
        for k in 1..100 {
            let t = k as f64 * 0.13;
            let central = (-0.5 * t).exp() / (2.0 * std::f64::consts::PI * t).sqrt();
            let v = noncentral_chi2_1df_pdf(t, 0.0).unwrap();
            assert!((v - central).abs() < 1e-14 * central.max(1.0));
        }
    }

    #[test]
    fn student_t_symmetry() {
        for df in [1, 2, 4, 9, 30] {
            assert_eq!(student_t_sf(0.0, df).unwrap(), 0.5);
            for k in -40..=40 {
                let t = k as f64 * 0.25;
                let s = student_t_sf(t, df).unwrap() + student_t_sf(-t, df).unwrap();
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
        assert!(student_t_sf(1.0, 0).is_err());
    }

    #[test]
    fn student_t_cauchy_closed_form() {
        // df = 1 is Cauchy: sf(t) = 1/2 - atan(t)/pi
        for &t in &[0.3f64, 1.0, 2.5, 10.0, 100.0] {
            let exact = 0.5 - t.atan() / std::f64::consts::PI;
            assert!((student_t_sf(t, 1).unwrap() - exact).abs() < 1e-13);
        }
    }
}

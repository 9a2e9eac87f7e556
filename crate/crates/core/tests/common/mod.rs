#![allow(dead_code)]
//! Oracles shared by the integration tests. Nothing here calls into the
//! code paths it is used to check.

/// Binomial pmf by direct products: `C(n, x) p^x (1-p)^(n-x)`.
pub fn brute_pmf(n: u64, p: f64, x: u64) -> f64 {
    let mut coef = 1.0f64;
    let k = x.min(n - x);
    for i in 0..k {
        coef = coef * (n - i) as f64 / (i + 1) as f64;
    }
    coef * p.powi(x as i32) * (1.0 - p).powi((n - x) as i32)
}

pub fn brute_tail_gt(n: u64, p: f64, x: u64) -> f64 {
    ((x + 1)..=n).map(|k| brute_pmf(n, p, k)).sum()
}

pub fn brute_tail_ge(n: u64, p: f64, x: u64) -> f64 {
    (x..=n).map(|k| brute_pmf(n, p, k)).sum()
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 0.999 critical value of the one-sample KS statistic.
pub fn ks_critical_999(n: usize) -> f64 {
    1.949_5 / (n as f64).sqrt()
}

/// Textbook step-up Benjamini-Hochberg: sort, find the largest k with
/// p_(k) <= k q / N, reject everything at or below p_(k). Returns the
/// rejected input indices, sorted.
pub fn textbook_bh(ps: &[f64], q: f64) -> Vec<usize> {
    let n = ps.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| ps[a].partial_cmp(&ps[b]).unwrap());
    let mut k_star = 0;
    for k in 1..=n {
        if ps[idx[k - 1]] <= k as f64 * q / n as f64 {
            k_star = k;
        }
    }
    if k_star == 0 {
        return Vec::new();
    }
    let cut = ps[idx[k_star - 1]];
    let mut out: Vec<usize> = (0..n).filter(|&i| ps[i] <= cut).collect();
    out.sort();
    out
}

/// Composite Simpson rule with `m` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

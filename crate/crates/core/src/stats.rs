//! Small statistics toolkit used across the crate: compensated summation,
//! autocorrelation-aware Monte Carlo summaries, binomial intervals, and
//! least squares.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated accumulator. Reductions over large enumerations use
/// this so that two independent implementations summing the same multiset in
/// different orders agree to ~1e-15 relative instead of ~1e-9.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Merge another accumulator (used when reducing parallel shards in a
    /// fixed order).
    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }
}

pub fn kahan_total(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Summary of one scalar observable from a (possibly autocorrelated) series.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Standard error corrected for autocorrelation (sd / sqrt(ess)).
    pub se: f64,
    /// Integrated autocorrelation time (>= 0.5; 0.5 means uncorrelated).
    pub tau: f64,
    /// Effective sample size n / (2 tau).
    pub ess: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    kahan_total(xs.iter().copied()) / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    kahan_total(xs.iter().map(|x| (x - m) * (x - m))) / (xs.len() - 1) as f64
}

/// Integrated autocorrelation time with Sokal's adaptive window: the sum of
/// autocorrelations is truncated at the smallest W with W >= c * tau(W),
/// c = 6. Returns 0.5 for series too short or with zero variance.
pub fn integrated_autocorrelation_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 8 {
        return 0.5;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if var <= 0.0 || !var.is_finite() {
        return 0.5;
    }
    let c = 6.0;
    let max_lag = n / 2;
    let mut tau = 0.5;
    for w in 1..max_lag {
        let mut acf = 0.0;
        for i in 0..n - w {
            acf += (xs[i] - m) * (xs[i + w] - m);
        }
        acf /= (n - w) as f64 * var;
        tau += acf;
        if tau < 0.5 {
            tau = 0.5;
        }
        if (w as f64) >= c * tau {
            break;
        }
    }
    tau.max(0.5)
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary {
            n: 0,
            mean: f64::NAN,
            se: f64::NAN,
            tau: f64::NAN,
            ess: 0.0,
        };
    }
    let m = mean(xs);
    if n == 1 {
        return Summary {
            n,
            mean: m,
            se: f64::NAN,
            tau: 0.5,
            ess: 1.0,
        };
    }
    let var = variance(xs);
    let tau = integrated_autocorrelation_time(xs);
    let ess = (n as f64 / (2.0 * tau)).min(n as f64).max(1.0);
    let se = (var / ess).sqrt();
    Summary {
        n,
        mean: m,
        se,
        tau,
        ess,
    }
}

/// Wilson score interval for a binomial proportion at `z` standard normal
/// quantiles (z = 1.96 for 95%).
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Ordinary least squares y = a + b x.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OlsFit {
    pub intercept: f64,
    pub slope: f64,
    /// Residual sum of squares.
    pub rss: f64,
}

pub fn ols(xs: &[f64], ys: &[f64]) -> Option<OlsFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum::<f64>();
    let _ = n;
    Some(OlsFit {
        intercept,
        slope,
        rss,
    })
}

/// Percentile of a sorted slice (linear interpolation), q in [0,1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

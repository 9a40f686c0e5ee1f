//! Mergeable moment accumulators, the normal cdf, KS distance and histograms.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Count, mean and central power sums `M2..M4`.
///
/// `push` is a merge with a one-point accumulator, so a left fold of pushes
/// and the equivalent sequence of merges agree bit for bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentAccumulator<T> {
    count: u64,
    mean: T,
    m2: T,
    m3: T,
    m4: T,
}

impl<T: Real> Default for MomentAccumulator<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> MomentAccumulator<T> {
    pub fn new() -> Self {
        Self {
            count: 0,
            mean: T::zero(),
            m2: T::zero(),
            m3: T::zero(),
            m4: T::zero(),
        }
    }

    pub fn singleton(x: T) -> Self {
        Self {
            count: 1,
            mean: x,
            ..Self::new()
        }
    }

    pub fn from_slice(xs: &[T]) -> Self {
        let mut acc = Self::new();
        for &x in xs {
            acc.push(x);
        }
        acc
    }

    pub fn push(&mut self, x: T) {
        *self = self.merge(&Self::singleton(x));
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    /// Pébay's pairwise update through fourth order.
    pub fn merge(&self, other: &Self) -> Self {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let na = T::lit(self.count as f64);
        let nb = T::lit(other.count as f64);
        let n = na + nb;
        let d = other.mean - self.mean;
        let dn = d / n;
        let dn2 = dn * dn;
        let cross = d * dn * na * nb;
        let three = T::lit(3.0);
        let four = T::lit(4.0);
        let six = T::lit(6.0);
        let mean = self.mean + dn * nb;
        let m2 = self.m2 + other.m2 + cross;
        let m3 = self.m3
            + other.m3
            + cross * dn * (na - nb)
            + three * dn * (na * other.m2 - nb * self.m2);
        let m4 = self.m4
            + other.m4
            + cross * dn2 * (na * na - na * nb + nb * nb)
            + six * dn2 * (na * na * other.m2 + nb * nb * self.m2)
            + four * dn * (na * other.m3 - nb * self.m3);
        Self {
            count: self.count + other.count,
            mean,
            m2,
            m3,
            m4,
        }
    }

    /// Mean, unbiased variance, skewness and excess kurtosis with standard
    /// errors. Needs at least four observations.
    pub fn finalize(&self) -> Result<Moments> {
        if self.count < 4 {
            return Err(Error::invalid(format!(
                "need at least 4 observations, have {}",
                self.count
            )));
        }
        let m = self.count as f64;
        let mean = self.mean.to_f64().unwrap_or(f64::NAN);
        let m2 = self.m2.to_f64().unwrap_or(f64::NAN);
        let m3 = self.m3.to_f64().unwrap_or(f64::NAN);
        let m4 = self.m4.to_f64().unwrap_or(f64::NAN);
        let variance = m2 / (m - 1.0);
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m.sqrt() * m3 / m2.powf(1.5), m * m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        let mu4 = m4 / m;
        let sigma2 = m2 / m;
        let var_of_var = (mu4 - sigma2 * sigma2 * (m - 3.0) / (m - 1.0)) / m;
        Ok(Moments {
            count: self.count,
            mean,
            se_mean: (variance / m).sqrt(),
            variance,
            se_variance: var_of_var.max(0.0).sqrt(),
            skewness,
            se_skewness: (6.0 / m).sqrt(),
            excess_kurtosis,
            se_kurtosis: (24.0 / m).sqrt(),
        })
    }
}

/// Merges accumulators by a balanced binary tree over their order.
pub fn merge_tree<T: Real>(parts: &[MomentAccumulator<T>]) -> MomentAccumulator<T> {
    match parts.len() {
        0 => MomentAccumulator::new(),
        1 => parts[0],
        len => {
            let (l, r) = parts.split_at(len / 2);
            merge_tree(l).merge(&merge_tree(r))
        }
    }
}

/// Finalised moments with their standard errors. Kurtosis and skewness errors
/// use the normal-theory values `sqrt(24/m)` and `sqrt(6/m)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub se_mean: f64,
    pub variance: f64,
    pub se_variance: f64,
    pub skewness: f64,
    pub se_skewness: f64,
    pub excess_kurtosis: f64,
    pub se_kurtosis: f64,
}

/// Standard normal cdf through the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse of [`normal_cdf`] by bisection; meant for test fixtures.
pub fn normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::invalid(format!("quantile level {u} outside (0, 1)")));
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two-sided Kolmogorov–Smirnov distance to the standard normal.
pub fn ks_statistic(samples: &[f64]) -> Result<f64> {
    if samples.len() < 10 {
        return Err(Error::invalid(format!(
            "ks_statistic needs at least 10 samples, have {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("ks_statistic: NaN sample"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = normal_cdf(x);
        let above = (i + 1) as f64 / m - f;
        let below = f - i as f64 / m;
        d = d.max(above).max(below);
    }
    Ok(d)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

/// Equal-width bins `[e_k, e_{k+1})` on `[lo, hi)`.
pub fn histogram(samples: &[f64], bins: usize, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(format!(
            "invalid histogram range [{lo}, {hi})"
        )));
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|k| if k == bins { hi } else { lo + k as f64 * width })
        .collect();
    let mut counts = vec![0u64; bins];
    let (mut underflow, mut overflow) = (0, 0);
    for &x in samples {
        if x.is_nan() || x >= hi {
            overflow += 1;
            continue;
        }
        if x < lo {
            underflow += 1;
            continue;
        }
        let mut k = (((x - lo) / width) as usize).min(bins - 1);
        while k > 0 && x < edges[k] {
            k -= 1;
        }
        while k + 1 < bins && x >= edges[k + 1] {
            k += 1;
        }
        counts[k] += 1;
    }
    Ok(Histogram {
        edges,
        counts,
        underflow,
        overflow,
    })
}

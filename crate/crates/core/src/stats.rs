//! Small numeric helpers shared across the samplers, metrics and tests.

use rand::Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};
use statrs::function::erf::erfc;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (denominator `n - 1`); `None` below two values.
pub fn sample_sd(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

/// Linearly interpolated quantile of an ascending slice (the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median of a slice (not required to be sorted).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided tail probability `P(|Z| >= |z|)`, accurate far into the tail.
pub fn normal_two_sided(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// Draws `Z ~ N(0, 1)` conditioned on `Z > lower`.
///
/// Plain rejection near the bulk, Robert's exponential proposal in the tail.
pub fn truncated_standard_normal_above<R: Rng + ?Sized>(lower: f64, rng: &mut R) -> f64 {
    if lower < 0.5 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z > lower {
                return z;
            }
        }
    }
    let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
    loop {
        let u: f64 = rng.random();
        let z = lower - (1.0 - u).ln() / rate;
        let accept = (-0.5 * (z - rate) * (z - rate)).exp();
        if rng.random::<f64>() <= accept {
            return z;
        }
    }
}

/// One univariate slice-sampling update (stepping out, then shrinkage).
pub fn slice_sample<R: Rng + ?Sized>(
    x0: f64,
    log_density: impl Fn(f64) -> f64,
    width: f64,
    max_steps: usize,
    rng: &mut R,
) -> f64 {
    let level = log_density(x0) + (1.0 - rng.random::<f64>()).ln();
    let mut left = x0 - width * rng.random::<f64>();
    let mut right = left + width;
    let mut j = rng.random_range(0..max_steps.max(1));
    let mut k = max_steps.max(1) - 1 - j;
    while j > 0 && log_density(left) > level {
        left -= width;
        j -= 1;
    }
    while k > 0 && log_density(right) > level {
        right += width;
        k -= 1;
    }
    loop {
        let x1 = left + (right - left) * rng.random::<f64>();
        if log_density(x1) > level {
            return x1;
        }
        if x1 < x0 {
            left = x1;
        } else {
            right = x1;
        }
        if right - left < 1e-12 {
            return x0;
        }
    }
}

/// Stable 64-bit seed derived from a list of integers.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

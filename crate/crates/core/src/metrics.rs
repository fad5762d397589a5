//! Accuracy and interval metrics for one fitted replicate.

use serde::{Deserialize, Serialize};

use crate::bcf::{ate_posterior, cate_intervals, BcfFit};
use crate::dgp::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointErrors {
    pub rmse: f64,
    pub mae: f64,
    pub mape: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalMetrics {
    /// Fraction of intervals containing the truth.
    pub cover: f64,
    /// Mean interval length.
    pub len: f64,
    /// `(cover - nominal)^2`
    pub se_cover: f64,
    /// `|cover - nominal|`
    pub ae_cover: f64,
}

fn check_lengths(expected: usize, others: &[usize]) -> Result<()> {
    if expected == 0 {
        return Err(Error::EmptyInput("metric input"));
    }
    match others.iter().find(|&&l| l != expected) {
        Some(&actual) => Err(Error::DimensionMismatch { expected, actual }),
        None => Ok(()),
    }
}

/// RMSE, MAE and MAPE of `estimate` against `truth`. A zero truth value is an
/// error since its percentage error is undefined.
pub fn pointwise_errors(estimate: &[f64], truth: &[f64]) -> Result<PointErrors> {
    check_lengths(truth.len(), &[estimate.len()])?;
    let (mut sq, mut abs, mut pct) = (0.0, 0.0, 0.0);
    for (i, (&e, &t)) in estimate.iter().zip(truth).enumerate() {
        if t == 0.0 {
            return Err(Error::ZeroTruth(i));
        }
        let d = (e - t).abs();
        sq += d * d;
        abs += d;
        pct += d / t.abs();
    }
    let m = truth.len() as f64;
    Ok(PointErrors {
        rmse: (sq / m).sqrt(),
        mae: abs / m,
        mape: pct / m,
    })
}

/// Coverage and length of intervals `[lower_i, upper_i]` against `truth`.
pub fn interval_metrics(
    lower: &[f64],
    upper: &[f64],
    truth: &[f64],
    nominal: f64,
) -> Result<IntervalMetrics> {
    check_lengths(truth.len(), &[lower.len(), upper.len()])?;
    if !(nominal > 0.0 && nominal < 1.0) {
        return Err(Error::OutOfRange {
            name: "nominal",
            value: nominal,
        });
    }
    let (mut hits, mut len) = (0usize, 0.0);
    for (index, ((&lo, &hi), &t)) in lower.iter().zip(upper).zip(truth).enumerate() {
        if lo > hi {
            return Err(Error::CrossedInterval {
                index,
                lower: lo,
                upper: hi,
            });
        }
        if lo <= t && t <= hi {
            hits += 1;
        }
        len += hi - lo;
    }
    let m = truth.len() as f64;
    let cover = hits as f64 / m;
    Ok(IntervalMetrics {
        cover,
        len: len / m,
        se_cover: (cover - nominal).powi(2),
        ae_cover: (cover - nominal).abs(),
    })
}

/// Every metric for one (design, alpha, model, replicate) cell.
///
/// `fit_seconds` is not serialized; wall-clock time is kept apart from the
/// reproducible record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub dgp_id: String,
    pub alpha: f64,
    pub model: String,
    pub replicate_index: usize,
    pub seed: u64,
    pub rmse_cate: f64,
    pub mae_cate: f64,
    pub mape_cate: f64,
    pub cover_cate: f64,
    pub len_cate: f64,
    pub rmse_ate: f64,
    pub mae_ate: f64,
    pub mape_ate: f64,
    pub cover_ate: f64,
    pub len_ate: f64,
    pub rmse_pi: f64,
    pub mae_pi: f64,
    pub se_cover_cate: f64,
    pub ae_cover_cate: f64,
    pub se_cover_ate: f64,
    pub ae_cover_ate: f64,
    #[serde(skip)]
    pub fit_seconds: f64,
}

impl ReplicateRecord {
    /// Serialized column order.
    pub const COLUMNS: [&'static str; 21] = [
        "dgp_id",
        "alpha",
        "model",
        "replicate_index",
        "seed",
        "rmse_cate",
        "mae_cate",
        "mape_cate",
        "cover_cate",
        "len_cate",
        "rmse_ate",
        "mae_ate",
        "mape_ate",
        "cover_ate",
        "len_ate",
        "rmse_pi",
        "mae_pi",
        "se_cover_cate",
        "ae_cover_cate",
        "se_cover_ate",
        "ae_cover_ate",
    ];

    /// Metric columns in table order.
    pub const METRICS: [&'static str; 16] = [
        "rmse_cate",
        "mae_cate",
        "mape_cate",
        "cover_cate",
        "len_cate",
        "rmse_ate",
        "mae_ate",
        "mape_ate",
        "cover_ate",
        "len_ate",
        "rmse_pi",
        "mae_pi",
        "se_cover_cate",
        "ae_cover_cate",
        "se_cover_ate",
        "ae_cover_ate",
    ];

    /// Looks up a metric by column name.
    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "rmse_cate" => self.rmse_cate,
            "mae_cate" => self.mae_cate,
            "mape_cate" => self.mape_cate,
            "cover_cate" => self.cover_cate,
            "len_cate" => self.len_cate,
            "rmse_ate" => self.rmse_ate,
            "mae_ate" => self.mae_ate,
            "mape_ate" => self.mape_ate,
            "cover_ate" => self.cover_ate,
            "len_ate" => self.len_ate,
            "rmse_pi" => self.rmse_pi,
            "mae_pi" => self.mae_pi,
            "se_cover_cate" => self.se_cover_cate,
            "ae_cover_cate" => self.ae_cover_cate,
            "se_cover_ate" => self.se_cover_ate,
            "ae_cover_ate" => self.ae_cover_ate,
            "fit_seconds" => self.fit_seconds,
            _ => return None,
        })
    }
}

/// Identifies the cell a record belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordKey<'a> {
    pub dgp_id: &'a str,
    pub alpha: f64,
    pub model: &'a str,
    pub replicate_index: usize,
    pub seed: u64,
}

/// Scores a fit against the dataset it was trained on.
pub fn evaluate(fit: &BcfFit, ds: &Dataset, key: RecordKey<'_>) -> Result<ReplicateRecord> {
    let level = fit.interval_level;
    let cate = cate_intervals(fit, level)?;
    let mean: Vec<f64> = cate.iter().map(|c| c.mean).collect();
    let lower: Vec<f64> = cate.iter().map(|c| c.lower).collect();
    let upper: Vec<f64> = cate.iter().map(|c| c.upper).collect();
    let cate_err = pointwise_errors(&mean, &ds.cate_true)?;
    let cate_iv = interval_metrics(&lower, &upper, &ds.cate_true, level)?;

    let ate = ate_posterior(fit)?.summary;
    let ate_err = pointwise_errors(&[ate.mean], &[ds.ate_true])?;
    let ate_iv = interval_metrics(&[ate.lower], &[ate.upper], &[ds.ate_true], level)?;

    let pi_err = pointwise_errors(&fit.pi_used, &ds.pi_true)?;
    Ok(ReplicateRecord {
        dgp_id: key.dgp_id.to_string(),
        alpha: key.alpha,
        model: key.model.to_string(),
        replicate_index: key.replicate_index,
        seed: key.seed,
        rmse_cate: cate_err.rmse,
        mae_cate: cate_err.mae,
        mape_cate: cate_err.mape,
        cover_cate: cate_iv.cover,
        len_cate: cate_iv.len,
        rmse_ate: ate_err.rmse,
        mae_ate: ate_err.mae,
        mape_ate: ate_err.mape,
        cover_ate: ate_iv.cover,
        len_ate: ate_iv.len,
        rmse_pi: pi_err.rmse,
        mae_pi: pi_err.mae,
        se_cover_cate: cate_iv.se_cover,
        ae_cover_cate: cate_iv.ae_cover,
        se_cover_ate: ate_iv.se_cover,
        ae_cover_ate: ate_iv.ae_cover,
        fit_seconds: fit.fit_seconds,
    })
}

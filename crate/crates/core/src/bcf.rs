//! Bayesian causal forests with three ways of handling the propensity score.
//!
//! The outcome model is `y = mu(x, pi) + tau(x) z + e`. The prognostic forest
//! `mu` sees the covariates plus a propensity column; the effect forest `tau`
//! sees the covariates alone and enters through the treatment indicator.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bart::{
    fit_binary_probit, standardization, BartConfig, ForestSampler, LeafScalePrior, NoiseSampler,
    HALF_NORMAL_MEDIAN,
};
use crate::data::Matrix;
use crate::stats::{derive_seed, quantile_sorted};
use crate::{Error, Result};

/// Stream tag for the internal propensity fit.
const PROPENSITY_STREAM: u64 = 0x7072_6f70;

/// What the prognostic forest receives as its propensity column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PropensityMode {
    /// The constant 0.5 for every unit.
    #[serde(rename = "no_pi")]
    NoPropensity,
    /// The oracle propensity, supplied by the caller.
    #[serde(rename = "true_pi")]
    TruePropensity,
    /// Posterior mean of an internal probit BART fit of `z` on `x`.
    #[serde(rename = "est_pi")]
    EstimatedPropensity,
}

impl PropensityMode {
    pub const ALL: [PropensityMode; 3] = [
        PropensityMode::NoPropensity,
        PropensityMode::TruePropensity,
        PropensityMode::EstimatedPropensity,
    ];

    /// Short identifier used in file names and CSV columns.
    pub fn name(self) -> &'static str {
        match self {
            PropensityMode::NoPropensity => "no_pi",
            PropensityMode::TruePropensity => "true_pi",
            PropensityMode::EstimatedPropensity => "est_pi",
        }
    }

    /// Column heading used in summary tables.
    pub fn label(self) -> &'static str {
        match self {
            PropensityMode::NoPropensity => "BCF (pi_hat = 0.5)",
            PropensityMode::TruePropensity => "BCF (pi)",
            PropensityMode::EstimatedPropensity => "BCF (pi_hat(X))",
        }
    }

    pub(crate) fn index(self) -> u64 {
        match self {
            PropensityMode::NoPropensity => 1,
            PropensityMode::TruePropensity => 2,
            PropensityMode::EstimatedPropensity => 3,
        }
    }
}

impl fmt::Display for PropensityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PropensityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "no_pi" | "nopropensity" | "no_propensity" => Ok(PropensityMode::NoPropensity),
            "true_pi" | "truepropensity" | "true_propensity" => Ok(PropensityMode::TruePropensity),
            "est_pi" | "estimatedpropensity" | "estimated_propensity" => {
                Ok(PropensityMode::EstimatedPropensity)
            }
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Settings for a causal forest fit.
///
/// The joint chain takes its length, burn-in, thinning and noise prior from
/// `mu`; those fields of `tau` are not consulted. `propensity` is used only
/// by [`PropensityMode::EstimatedPropensity`].
#[derive(Debug, Clone, PartialEq)]
pub struct BcfConfig {
    pub mu: BartConfig,
    pub tau: BartConfig,
    pub propensity: BartConfig,
    pub interval_level: f64,
}

impl Default for BcfConfig {
    fn default() -> Self {
        Self {
            mu: BartConfig {
                num_trees: 200,
                eta: 0.95,
                beta: 2.0,
                leaf_scale_prior: LeafScalePrior::HalfCauchy { scale: 2.0 },
                ..BartConfig::default()
            },
            tau: BartConfig {
                num_trees: 50,
                eta: 0.25,
                beta: 3.0,
                leaf_scale_prior: LeafScalePrior::HalfNormal {
                    scale: 1.0 / HALF_NORMAL_MEDIAN,
                },
                ..BartConfig::default()
            },
            propensity: BartConfig::default(),
            interval_level: 0.95,
        }
    }
}

impl BcfConfig {
    /// Sets burn-in and retained draws for all three samplers.
    pub fn with_chain(mut self, burn_in: usize, retained: usize) -> Self {
        for c in [&mut self.mu, &mut self.tau, &mut self.propensity] {
            c.burn_in = burn_in;
            *c = c.clone().with_retained(retained);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.mu.validate()?;
        self.tau.validate()?;
        self.propensity.validate()?;
        check_level(self.interval_level)
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "interval_level",
            value: level,
        })
    }
}

/// Posterior draws from one causal forest fit, on the original outcome scale.
#[derive(Debug, Clone, PartialEq)]
pub struct BcfFit {
    pub mode: PropensityMode,
    /// Prognostic function per retained draw.
    pub mu_draws: Vec<Vec<f64>>,
    /// Treatment effect per retained draw.
    pub tau_draws: Vec<Vec<f64>>,
    pub sigma_draws: Vec<f64>,
    /// The propensity column fed to the prognostic forest.
    pub pi_used: Vec<f64>,
    /// Wall-clock duration of the whole call, propensity estimation included.
    pub fit_seconds: f64,
    pub interval_level: f64,
    /// Accepted grow/change moves per feature of the prognostic design
    /// (the last entry is the propensity column).
    pub mu_split_counts: Vec<u64>,
    pub tau_split_counts: Vec<u64>,
    pub mu_acceptance: f64,
    pub tau_acceptance: f64,
}

impl BcfFit {
    pub fn num_draws(&self) -> usize {
        self.tau_draws.len()
    }

    pub fn num_units(&self) -> usize {
        self.pi_used.len()
    }

    /// Equality of everything except the timing.
    pub fn same_draws(&self, other: &BcfFit) -> bool {
        self.mode == other.mode
            && self.mu_draws == other.mu_draws
            && self.tau_draws == other.tau_draws
            && self.sigma_draws == other.sigma_draws
            && self.pi_used == other.pi_used
            && self.mu_split_counts == other.mu_split_counts
            && self.tau_split_counts == other.tau_split_counts
    }
}

/// Posterior mean with an equal-tailed credible interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtePosterior {
    pub draws: Vec<f64>,
    pub summary: Interval,
}

/// Mean and equal-tailed interval of a sample of draws, with
/// linearly interpolated quantiles.
pub fn posterior_interval(draws: &[f64], level: f64) -> Result<Interval> {
    check_level(level)?;
    if draws.is_empty() {
        return Err(Error::EmptyInput("posterior draws"));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let lower = quantile_sorted(&sorted, tail);
    let upper = quantile_sorted(&sorted, 1.0 - tail);
    Ok(Interval {
        // guards the ordering against rounding when all draws coincide
        mean: mean.clamp(lower, upper),
        lower,
        upper,
    })
}

/// Appends the propensity column to the covariates.
pub fn build_design(x: &Matrix, pi: &[f64]) -> Result<Matrix> {
    if let Some(&bad) = pi.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::OutOfRange {
            name: "pi",
            value: bad,
        });
    }
    x.with_column(pi)
}

/// Per-unit treatment-effect summaries at the given level.
pub fn cate_intervals(fit: &BcfFit, level: f64) -> Result<Vec<Interval>> {
    check_level(level)?;
    if fit.tau_draws.is_empty() {
        return Err(Error::EmptyInput("posterior draws"));
    }
    let mut column = vec![0.0; fit.num_draws()];
    (0..fit.num_units())
        .map(|i| {
            for (c, draw) in column.iter_mut().zip(&fit.tau_draws) {
                *c = draw[i];
            }
            posterior_interval(&column, level)
        })
        .collect()
}

/// Sample-average treatment effect per draw, summarized at the fit's level.
pub fn ate_posterior(fit: &BcfFit) -> Result<AtePosterior> {
    if fit.tau_draws.is_empty() {
        return Err(Error::EmptyInput("posterior draws"));
    }
    let draws: Vec<f64> = fit
        .tau_draws
        .iter()
        .map(|d| d.iter().sum::<f64>() / d.len() as f64)
        .collect();
    let summary = posterior_interval(&draws, fit.interval_level)?;
    Ok(AtePosterior { draws, summary })
}

/// Fits a causal forest.
///
/// `pi_true` must be given for [`PropensityMode::TruePropensity`] and is
/// ignored otherwise.
pub fn fit_bcf(
    x: &Matrix,
    z: &[bool],
    y: &[f64],
    mode: PropensityMode,
    pi_true: Option<&[f64]>,
    config: &BcfConfig,
    seed: u64,
) -> Result<BcfFit> {
    let start = Instant::now();
    config.validate()?;
    let n = x.nrows();
    if n < 2 {
        return Err(Error::invalid(
            "n",
            "at least two observations are required",
        ));
    }
    for len in [z.len(), y.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let treated = z.iter().filter(|&&v| v).count();
    if treated == 0 || treated == n {
        return Err(Error::SingleClass("z"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("y", "outcomes must be finite"));
    }
    let pi = match mode {
        PropensityMode::NoPropensity => vec![0.5; n],
        PropensityMode::TruePropensity => {
            let p = pi_true.ok_or_else(|| {
                Error::invalid("pi_true", "required when the mode is TruePropensity")
            })?;
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: p.len(),
                });
            }
            p.to_vec()
        }
        PropensityMode::EstimatedPropensity => {
            let probit_seed = derive_seed(&[seed, PROPENSITY_STREAM]);
            fit_binary_probit(x, z, &config.propensity, probit_seed)?.mean_probability()
        }
    };
    let mut fit = sample(x, z, y, &pi, config, seed)?;
    fit.mode = mode;
    fit.fit_seconds = start.elapsed().as_secs_f64();
    Ok(fit)
}

fn sample(
    x: &Matrix,
    z: &[bool],
    y: &[f64],
    pi: &[f64],
    config: &BcfConfig,
    seed: u64,
) -> Result<BcfFit> {
    let design = build_design(x, pi)?;
    let n = x.nrows();
    let (center, scale) = standardization(y);
    let ys: Vec<f64> = y.iter().map(|v| (v - center) / scale).collect();
    let zw: Vec<f64> = z.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mu = ForestSampler::new(&design, &config.mu);
    let mut tau = ForestSampler::new(x, &config.tau);
    let noise = NoiseSampler::new(config.mu.sigma_prior);
    let mut sigma = noise.initial();
    let mut target = vec![0.0; n];

    let chain = &config.mu;
    let retained = chain.retained();
    let mut fit = BcfFit {
        mode: PropensityMode::NoPropensity,
        mu_draws: Vec::with_capacity(retained),
        tau_draws: Vec::with_capacity(retained),
        sigma_draws: Vec::with_capacity(retained),
        pi_used: pi.to_vec(),
        fit_seconds: 0.0,
        interval_level: config.interval_level,
        mu_split_counts: Vec::new(),
        tau_split_counts: Vec::new(),
        mu_acceptance: 0.0,
        tau_acceptance: 0.0,
    };
    for it in 0..chain.iterations {
        for i in 0..n {
            target[i] = ys[i] - zw[i] * tau.fit()[i];
        }
        mu.sweep(&design, &target, None, sigma, &mut rng);
        for i in 0..n {
            target[i] = ys[i] - mu.fit()[i];
        }
        tau.sweep(x, &target, Some(&zw), sigma, &mut rng);
        let resid = (0..n).map(|i| ys[i] - mu.fit()[i] - zw[i] * tau.fit()[i]);
        sigma = noise.draw(resid, &mut rng);
        mu.update_scale(&mut rng);
        tau.update_scale(&mut rng);
        if chain.keeps(it) {
            fit.mu_draws
                .push(mu.fit().iter().map(|m| center + scale * m).collect());
            fit.tau_draws
                .push(tau.fit().iter().map(|t| scale * t).collect());
            fit.sigma_draws.push(scale * sigma);
        }
    }
    fit.mu_split_counts = mu.split_counts.clone();
    fit.tau_split_counts = tau.split_counts.clone();
    fit.mu_acceptance = mu.acceptance_rate();
    fit.tau_acceptance = tau.acceptance_rate();
    Ok(fit)
}

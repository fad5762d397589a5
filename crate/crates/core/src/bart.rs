//! Backfitting MCMC for sum-of-trees models.
//!
//! [`fit_continuous`] samples a Gaussian-noise BART model; [`fit_binary_probit`]
//! samples a probit BART model through truncated-normal latent variables.
//! Both run on standardized units: the continuous outcome is centered and
//! scaled to unit sample variance before fitting, and every scale parameter
//! in [`BartConfig`] is expressed in those units. Reported draws are on the
//! original scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::Matrix;
use crate::forest::{
    propose_move, CutpointGrids, DecisionTree, Forest, MoveKind, MoveProbabilities, TreePrior,
    TreeState,
};
use crate::stats::{self, normal_cdf, slice_sample, truncated_standard_normal_above};
use crate::{Error, Result};

/// Prior on the forest-level scale `s`; each leaf value is `N(0, (s / sqrt(m))^2)`
/// for a forest of `m` trees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeafScalePrior {
    /// Half-Cauchy with the given scale, which is also its median.
    HalfCauchy {
        scale: f64,
    },
    /// Half-normal `|N(0, scale^2)|`; its median is `0.67449 * scale`.
    HalfNormal {
        scale: f64,
    },
    Fixed(f64),
}

/// Median of `|N(0, 1)|`.
pub const HALF_NORMAL_MEDIAN: f64 = 0.674_489_750_196_081_7;

impl LeafScalePrior {
    fn median(&self) -> f64 {
        match *self {
            LeafScalePrior::HalfCauchy { scale } => scale,
            LeafScalePrior::HalfNormal { scale } => HALF_NORMAL_MEDIAN * scale,
            LeafScalePrior::Fixed(v) => v,
        }
    }

    fn log_density(&self, s: f64) -> f64 {
        match *self {
            LeafScalePrior::HalfCauchy { scale } => -(s / scale).powi(2).ln_1p(),
            LeafScalePrior::HalfNormal { scale } => -0.5 * (s / scale).powi(2),
            LeafScalePrior::Fixed(_) => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            LeafScalePrior::HalfCauchy { scale } | LeafScalePrior::HalfNormal { scale } => scale,
            LeafScalePrior::Fixed(v) => v,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                name: "leaf_scale_prior",
                value: v,
            })
        }
    }
}

/// Prior on the noise standard deviation (continuous outcomes only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaPrior {
    /// `sigma^2 ~ nu * lambda / chi2_nu` with `lambda` set so that
    /// `P(sigma < 1) = q` in standardized units.
    InverseChiSquared {
        nu: f64,
        q: f64,
    },
    Fixed(f64),
}

impl SigmaPrior {
    fn validate(&self) -> Result<()> {
        match *self {
            SigmaPrior::InverseChiSquared { nu, q } => {
                if !(nu > 0.0 && nu.is_finite()) {
                    return Err(Error::OutOfRange {
                        name: "sigma_prior.nu",
                        value: nu,
                    });
                }
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::OutOfRange {
                        name: "sigma_prior.q",
                        value: q,
                    });
                }
                Ok(())
            }
            SigmaPrior::Fixed(s) if s > 0.0 && s.is_finite() => Ok(()),
            SigmaPrior::Fixed(s) => Err(Error::OutOfRange {
                name: "sigma_prior",
                value: s,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BartConfig {
    pub num_trees: usize,
    /// Base of the split probability.
    pub eta: f64,
    /// Depth power of the split probability.
    pub beta: f64,
    pub leaf_scale_prior: LeafScalePrior,
    pub sigma_prior: SigmaPrior,
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub cutpoints_per_feature: usize,
    pub move_probabilities: MoveProbabilities,
}

impl Default for BartConfig {
    /// 200 trees, `eta = 0.95`, `beta = 2`, leaf scale fixed by the usual
    /// `k = 2` rule, 1,000 burn-in sweeps followed by 1,000 retained draws.
    fn default() -> Self {
        Self {
            num_trees: 200,
            eta: 0.95,
            beta: 2.0,
            leaf_scale_prior: LeafScalePrior::Fixed(1.5),
            sigma_prior: SigmaPrior::InverseChiSquared { nu: 3.0, q: 0.9 },
            iterations: 2000,
            burn_in: 1000,
            thin: 1,
            cutpoints_per_feature: 100,
            move_probabilities: MoveProbabilities::default(),
        }
    }
}

impl BartConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_trees == 0 {
            return Err(Error::invalid("num_trees", "must be positive"));
        }
        TreePrior::new(self.eta, self.beta)?;
        self.leaf_scale_prior.validate()?;
        self.sigma_prior.validate()?;
        if self.thin == 0 {
            return Err(Error::invalid("thin", "must be positive"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::invalid(
                "burn_in",
                format!(
                    "burn_in {} leaves no retained draws out of {} iterations",
                    self.burn_in, self.iterations
                ),
            ));
        }
        if self.cutpoints_per_feature == 0 {
            return Err(Error::invalid("cutpoints_per_feature", "must be positive"));
        }
        self.move_probabilities.validate()
    }

    pub fn tree_prior(&self) -> TreePrior {
        TreePrior {
            eta: self.eta,
            beta: self.beta,
        }
    }

    /// Number of retained draws.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }

    /// Sets `iterations` so that exactly `draws` draws are retained.
    pub fn with_retained(mut self, draws: usize) -> Self {
        self.iterations = self.burn_in + draws * self.thin;
        self
    }

    pub(crate) fn keeps(&self, iteration: usize) -> bool {
        iteration >= self.burn_in && (iteration - self.burn_in).is_multiple_of(self.thin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BartPosterior {
    /// Fitted values per retained draw (latent probit index for binary fits).
    pub draws: Vec<Vec<f64>>,
    /// Noise standard deviation per retained draw; empty for probit fits.
    pub sigma_draws: Vec<f64>,
    /// Success probabilities per retained draw; empty for continuous fits.
    pub probability_draws: Vec<Vec<f64>>,
    /// Forest-level scale per retained draw, in standardized units.
    pub leaf_scale_draws: Vec<f64>,
    pub acceptance_rate: f64,
    /// Accepted grow/change moves per feature.
    pub split_counts: Vec<u64>,
    /// The forest at the final sweep.
    pub final_forest: Forest,
}

impl BartPosterior {
    pub fn mean_fit(&self) -> Vec<f64> {
        column_means(&self.draws)
    }

    pub fn mean_probability(&self) -> Vec<f64> {
        column_means(&self.probability_draws)
    }
}

pub(crate) fn column_means(draws: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = draws.first() else {
        return Vec::new();
    };
    let mut out = vec![0.0; first.len()];
    for d in draws {
        for (o, v) in out.iter_mut().zip(d) {
            *o += v;
        }
    }
    let m = draws.len() as f64;
    out.iter_mut().for_each(|o| *o /= m);
    out
}

/// `eta (1 + depth)^-beta`.
pub fn depth_split_prob(depth: usize, eta: f64, beta: f64) -> Result<f64> {
    Ok(TreePrior::new(eta, beta)?.split_prob(depth))
}

/// Log marginal likelihood of a node's residuals with its leaf mean
/// integrated out under `N(0, leaf_sd^2)`, dropping the `sum r^2` term that is
/// common to every tree configuration. Depends on the residuals only through
/// their count and sum.
pub fn leaf_log_marginal(n_node: usize, sum_resid: f64, sigma: f64, leaf_sd: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::OutOfRange {
            name: "sigma",
            value: sigma,
        });
    }
    if leaf_sd.is_nan() || leaf_sd <= 0.0 {
        return Err(Error::OutOfRange {
            name: "leaf_sd",
            value: leaf_sd,
        });
    }
    Ok(log_marginal(
        n_node as f64,
        sum_resid,
        sigma * sigma,
        leaf_sd * leaf_sd,
    ))
}

/// `weight` is the sum of squared design weights (the row count when unweighted).
#[inline]
fn log_marginal(weight: f64, sum: f64, sigma2: f64, leaf_var: f64) -> f64 {
    if weight == 0.0 {
        return 0.0;
    }
    let total = sigma2 + weight * leaf_var;
    -0.5 * weight * (2.0 * std::f64::consts::PI * sigma2).ln()
        + 0.5 * (sigma2 / total).ln()
        + leaf_var * sum * sum / (2.0 * sigma2 * total)
}

/// Backfitting state for one forest.
#[derive(Debug, Clone)]
pub(crate) struct ForestSampler {
    states: Vec<TreeState>,
    fit: Vec<f64>,
    grids: CutpointGrids,
    prior: TreePrior,
    moves: MoveProbabilities,
    leaf_scale_prior: LeafScalePrior,
    /// Forest-level scale; the leaf sd is `scale / sqrt(num_trees)`.
    pub(crate) scale: f64,
    pub(crate) split_counts: Vec<u64>,
    pub(crate) proposed: u64,
    pub(crate) accepted: u64,
    use_likelihood: bool,
    resid: Vec<f64>,
    old_values: Vec<f64>,
}

impl ForestSampler {
    pub(crate) fn new(x: &Matrix, config: &BartConfig) -> Self {
        let grids = CutpointGrids::uniform(x, config.cutpoints_per_feature);
        let states = (0..config.num_trees)
            .map(|_| TreeState::new(0.0, x, &grids))
            .collect();
        Self {
            states,
            fit: vec![0.0; x.nrows()],
            grids,
            prior: config.tree_prior(),
            moves: config.move_probabilities,
            leaf_scale_prior: config.leaf_scale_prior,
            scale: config.leaf_scale_prior.median(),
            split_counts: vec![0; x.ncols()],
            proposed: 0,
            accepted: 0,
            use_likelihood: true,
            resid: vec![0.0; x.nrows()],
            old_values: vec![0.0; x.nrows()],
        }
    }

    pub(crate) fn fit(&self) -> &[f64] {
        &self.fit
    }

    pub(crate) fn leaf_sd(&self) -> f64 {
        self.scale / (self.states.len() as f64).sqrt()
    }

    pub(crate) fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub(crate) fn forest(&self) -> Forest {
        let trees = self.states.iter().map(|s| s.tree().clone()).collect();
        Forest::from_trees(trees, self.leaf_sd()).expect("leaf sd is positive")
    }

    /// Sum over trees recomputed from scratch.
    #[cfg(test)]
    pub(crate) fn recomputed_fit(&self, x: &Matrix) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                self.states
                    .iter()
                    .map(|s| {
                        let t = s.tree();
                        t.leaf_value(t.route_row(x, i)).unwrap()
                    })
                    .sum()
            })
            .collect()
    }

    /// One Metropolis-within-Gibbs pass over all trees.
    ///
    /// The forest explains `target` through `weights * forest(x)` (unit weights
    /// when `None`). Each tree receives one grow/prune/change proposal and then
    /// has all its leaf values drawn from their conjugate conditional.
    pub(crate) fn sweep<R: Rng + ?Sized>(
        &mut self,
        x: &Matrix,
        target: &[f64],
        weights: Option<&[f64]>,
        sigma: f64,
        rng: &mut R,
    ) {
        let sigma2 = sigma * sigma;
        let leaf_sd = self.leaf_sd();
        let leaf_var = leaf_sd * leaf_sd;
        let w = |i: usize| weights.map_or(1.0, |w| w[i]);
        for t in 0..self.states.len() {
            {
                let state = &self.states[t];
                let tree = state.tree();
                for (i, &leaf) in state.assignment().iter().enumerate() {
                    let v = tree.leaf_value(leaf).unwrap();
                    self.old_values[i] = v;
                    self.resid[i] = target[i] - w(i) * (self.fit[i] - v);
                }
            }
            let proposal = propose_move(
                &self.states[t],
                x,
                &self.grids,
                &self.prior,
                &self.moves,
                rng,
            );
            if let Some(p) = proposal {
                self.proposed += 1;
                if p.admissible {
                    let mut log_alpha = p.log_ratio();
                    if self.use_likelihood {
                        let score = |groups: &[Vec<usize>]| -> f64 {
                            groups
                                .iter()
                                .map(|g| {
                                    let (mut s, mut ww) = (0.0, 0.0);
                                    for &i in g {
                                        let wi = w(i);
                                        s += wi * self.resid[i];
                                        ww += wi * wi;
                                    }
                                    log_marginal(ww, s, sigma2, leaf_var)
                                })
                                .sum()
                        };
                        log_alpha += score(p.rows_after()) - score(p.rows_before());
                    }
                    let u: f64 = rng.random();
                    if u.ln() < log_alpha {
                        self.accepted += 1;
                        if let (MoveKind::Grow | MoveKind::Change, Some(rule)) =
                            (p.kind, p.new_rule)
                        {
                            self.split_counts[rule.feature] += 1;
                        }
                        self.states[t].apply(&p);
                    }
                }
            }
            self.draw_leaves(t, weights, sigma2, leaf_var, rng);
        }
    }

    fn draw_leaves<R: Rng + ?Sized>(
        &mut self,
        t: usize,
        weights: Option<&[f64]>,
        sigma2: f64,
        leaf_var: f64,
        rng: &mut R,
    ) {
        let state = &mut self.states[t];
        let cap = state.tree().capacity();
        let mut sums = vec![0.0; cap];
        let mut wsum = vec![0.0; cap];
        for (i, &leaf) in state.assignment().iter().enumerate() {
            let wi = weights.map_or(1.0, |w| w[i]);
            sums[leaf] += wi * self.resid[i];
            wsum[leaf] += wi * wi;
        }
        for leaf in state.tree().leaves() {
            let precision = wsum[leaf] / sigma2 + 1.0 / leaf_var;
            let mean = sums[leaf] / sigma2 / precision;
            let z: f64 = rng.sample(StandardNormal);
            state.set_leaf_value(leaf, mean + z / precision.sqrt());
        }
        let tree = state.tree();
        for (i, &leaf) in state.assignment().iter().enumerate() {
            self.fit[i] += tree.leaf_value(leaf).unwrap() - self.old_values[i];
        }
    }

    /// Slice-samples the forest-level scale given the current leaf values.
    pub(crate) fn update_scale<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if let LeafScalePrior::Fixed(_) = self.leaf_scale_prior {
            return;
        }
        let m = self.states.len() as f64;
        let (mut count, mut ss) = (0.0, 0.0);
        for s in &self.states {
            let tree = s.tree();
            for leaf in tree.leaves() {
                let v = tree.leaf_value(leaf).unwrap();
                count += 1.0;
                ss += v * v;
            }
        }
        let prior = self.leaf_scale_prior;
        // density of log(scale), including the Jacobian
        let log_post = |u: f64| {
            let s = u.exp();
            prior.log_density(s) + u - count * u - m * ss / (2.0 * s * s)
        };
        let u = slice_sample(self.scale.ln(), log_post, 1.0, 50, rng);
        self.scale = u.exp();
    }
}

fn check_design(x: &Matrix, n: usize) -> Result<()> {
    if x.nrows() == 0 || n == 0 {
        return Err(Error::EmptyInput("training data"));
    }
    if x.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: n,
        });
    }
    Ok(())
}

/// Location and scale used to standardize an outcome. A constant outcome
/// keeps unit scale.
pub(crate) fn standardization(y: &[f64]) -> (f64, f64) {
    let center = stats::mean(y);
    let scale = stats::sample_sd(y).filter(|s| *s > 0.0).unwrap_or(1.0);
    (center, scale)
}

/// Noise-variance sampler shared by the continuous BART and BCF fits.
#[derive(Debug, Clone, Copy)]
pub(crate) enum NoiseSampler {
    Fixed(f64),
    InverseGamma { shape: f64, scale: f64 },
}

impl NoiseSampler {
    pub(crate) fn new(prior: SigmaPrior) -> Self {
        match prior {
            SigmaPrior::Fixed(s) => NoiseSampler::Fixed(s),
            SigmaPrior::InverseChiSquared { nu, q } => {
                let chi = ChiSquared::new(nu).expect("validated nu");
                let lambda = chi.inverse_cdf(1.0 - q) / nu;
                NoiseSampler::InverseGamma {
                    shape: 0.5 * nu,
                    scale: 0.5 * nu * lambda,
                }
            }
        }
    }

    pub(crate) fn initial(&self) -> f64 {
        match *self {
            NoiseSampler::Fixed(s) => s,
            NoiseSampler::InverseGamma { .. } => 1.0,
        }
    }

    /// Draws sigma from its full conditional given the residuals.
    pub(crate) fn draw<R: Rng + ?Sized>(
        &self,
        residuals: impl Iterator<Item = f64>,
        rng: &mut R,
    ) -> f64 {
        match *self {
            NoiseSampler::Fixed(s) => s,
            NoiseSampler::InverseGamma { shape, scale } => {
                let (mut n, mut ssr) = (0.0, 0.0);
                for r in residuals {
                    n += 1.0;
                    ssr += r * r;
                }
                let g = Gamma::new(shape + 0.5 * n, 1.0).expect("positive shape");
                let precision_draw: f64 = g.sample(rng);
                ((scale + 0.5 * ssr) / precision_draw).sqrt()
            }
        }
    }
}

/// Samples a continuous-outcome BART model.
pub fn fit_continuous(
    x: &Matrix,
    y: &[f64],
    config: &BartConfig,
    seed: u64,
) -> Result<BartPosterior> {
    config.validate()?;
    check_design(x, y.len())?;
    if x.nrows() < 2 {
        return Err(Error::invalid(
            "n",
            "at least two observations are required",
        ));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("y", "outcomes must be finite"));
    }
    let (center, scale) = standardization(y);
    let ys: Vec<f64> = y.iter().map(|v| (v - center) / scale).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut forest = ForestSampler::new(x, config);
    let noise = NoiseSampler::new(config.sigma_prior);
    let mut sigma = noise.initial();

    let mut post = empty_posterior(config.retained());
    for it in 0..config.iterations {
        forest.sweep(x, &ys, None, sigma, &mut rng);
        sigma = noise.draw(ys.iter().zip(forest.fit()).map(|(y, f)| y - f), &mut rng);
        forest.update_scale(&mut rng);
        if config.keeps(it) {
            post.draws
                .push(forest.fit().iter().map(|f| center + scale * f).collect());
            post.sigma_draws.push(scale * sigma);
            post.leaf_scale_draws.push(forest.scale);
        }
    }
    post.acceptance_rate = forest.acceptance_rate();
    post.split_counts = forest.split_counts.clone();
    post.final_forest = forest.forest();
    Ok(post)
}

fn empty_posterior(capacity: usize) -> BartPosterior {
    BartPosterior {
        draws: Vec::with_capacity(capacity),
        sigma_draws: Vec::with_capacity(capacity),
        probability_draws: Vec::new(),
        leaf_scale_draws: Vec::with_capacity(capacity),
        acceptance_rate: 0.0,
        split_counts: Vec::new(),
        final_forest: Forest::from_trees(Vec::<DecisionTree>::new(), 1.0).unwrap(),
    }
}

/// Smallest distance from 0 and 1 allowed for reported probabilities.
const PROB_FLOOR: f64 = 1e-12;

/// Samples a probit BART model for a binary outcome.
///
/// The latent index is `Phi^-1(mean(d)) + forest(x)`; the noise scale is fixed
/// at one and `config.sigma_prior` is ignored.
pub fn fit_binary_probit(
    x: &Matrix,
    d: &[bool],
    config: &BartConfig,
    seed: u64,
) -> Result<BartPosterior> {
    config.validate()?;
    check_design(x, d.len())?;
    let ones = d.iter().filter(|&&v| v).count();
    if ones == 0 || ones == d.len() {
        return Err(Error::SingleClass("d"));
    }
    let rate = ones as f64 / d.len() as f64;
    let offset = statrs::distribution::Normal::standard().inverse_cdf(rate);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut forest = ForestSampler::new(x, config);
    let mut latent = vec![0.0; d.len()];
    let mut post = empty_posterior(config.retained());
    post.probability_draws.reserve(config.retained());

    for it in 0..config.iterations {
        for (i, z) in latent.iter_mut().enumerate() {
            let m = offset + forest.fit()[i];
            // latent = m + e with e ~ N(0,1), truncated to the observed sign
            *z = if d[i] {
                m + truncated_standard_normal_above(-m, &mut rng)
            } else {
                m - truncated_standard_normal_above(m, &mut rng)
            } - offset;
        }
        forest.sweep(x, &latent, None, 1.0, &mut rng);
        forest.update_scale(&mut rng);
        if config.keeps(it) {
            let index: Vec<f64> = forest.fit().iter().map(|f| offset + f).collect();
            post.probability_draws.push(
                index
                    .iter()
                    .map(|&v| normal_cdf(v).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR))
                    .collect(),
            );
            post.draws.push(index);
            post.leaf_scale_draws.push(forest.scale);
        }
    }
    post.acceptance_rate = forest.acceptance_rate();
    post.split_counts = forest.split_counts.clone();
    post.final_forest = forest.forest();
    Ok(post)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, sample_sd};

    fn uniform_matrix(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let cols = (0..p)
            .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
            .collect();
        Matrix::from_columns(cols).unwrap()
    }

    fn short(trees: usize, burn_in: usize, draws: usize) -> BartConfig {
        BartConfig {
            num_trees: trees,
            burn_in,
            ..BartConfig::default()
        }
        .with_retained(draws)
    }

    #[test]
    fn split_probabilities() {
        assert!((depth_split_prob(0, 0.95, 2.0).unwrap() - 0.95).abs() < 1e-15);
        assert!((depth_split_prob(0, 0.25, 3.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((depth_split_prob(1, 0.95, 2.0).unwrap() - 0.2375).abs() < 1e-15);
        assert!(depth_split_prob(0, 0.0, 2.0).is_err());
        assert!(depth_split_prob(0, 1.1, 2.0).is_err());
        assert!(depth_split_prob(0, 0.5, -1.0).is_err());
    }

    #[test]
    fn leaf_marginal_values() {
        assert_eq!(leaf_log_marginal(0, 3.0, 1.0, 1.0).unwrap(), 0.0);
        let v = leaf_log_marginal(1, 0.0, 1.0, 1.0).unwrap();
        assert!((v + 0.5 * (4.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        assert!((v + 1.2655).abs() < 1e-4);
        assert!(leaf_log_marginal(1, 0.0, 0.0, 1.0).is_err());
        assert!(leaf_log_marginal(1, 0.0, 1.0, -1.0).is_err());
    }

    /// The reduced marginal plus the dropped `-sum r^2 / (2 sigma^2)` term
    /// equals the exact multivariate normal log density of the residuals.
    #[test]
    fn leaf_marginal_matches_full_density() {
        let r = [0.3, -1.2, 0.7, 2.0];
        let (sigma, tau): (f64, f64) = (0.8, 1.3);
        let n = r.len();
        // covariance sigma^2 I + tau^2 11^T; determinant and inverse in closed form
        let s2: f64 = sigma * sigma;
        let t2 = tau * tau;
        let det = s2.powi(n as i32 - 1) * (s2 + n as f64 * t2);
        let sum: f64 = r.iter().sum();
        let ss: f64 = r.iter().map(|v| v * v).sum();
        let quad = ss / s2 - t2 * sum * sum / (s2 * (s2 + n as f64 * t2));
        let exact =
            -0.5 * (n as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * quad;
        let reduced = leaf_log_marginal(n, sum, sigma, tau).unwrap() - ss / (2.0 * s2);
        assert!((exact - reduced).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(BartConfig::default().validate().is_ok());
        let bad = BartConfig {
            burn_in: 2000,
            ..BartConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = BartConfig {
            move_probabilities: MoveProbabilities {
                grow: 0.5,
                prune: 0.5,
                change: 0.5,
            },
            ..BartConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(short(10, 100, 250).retained(), 250);
    }

    #[test]
    fn constant_outcome_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = uniform_matrix(60, 3, &mut rng);
        for c in [0.0, 3.5, -12.0] {
            let y = vec![c; 60];
            let post = fit_continuous(&x, &y, &short(50, 200, 200), 9).unwrap();
            for m in post.mean_fit() {
                assert!((m - c).abs() < 0.05 * (c.abs() + 1.0), "c={c} m={m}");
            }
        }
    }

    /// With one tree that (effectively) cannot split, fixed noise and a fixed
    /// leaf scale, the retained leaf draws follow the conjugate normal posterior.
    #[test]
    fn single_node_matches_conjugate_posterior() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 50;
        let x = uniform_matrix(n, 2, &mut rng);
        let y: Vec<f64> = (0..n)
            .map(|_| 0.4 + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let (sigma, leaf) = (0.7, 0.3);
        // run the sampler directly on the unstandardized outcome
        let config = BartConfig {
            num_trees: 1,
            eta: 1e-12,
            leaf_scale_prior: LeafScalePrior::Fixed(leaf),
            sigma_prior: SigmaPrior::Fixed(sigma),
            burn_in: 10,
            ..BartConfig::default()
        }
        .with_retained(4000);
        let mut sampler = ForestSampler::new(&x, &config);
        let mut draws = Vec::new();
        for it in 0..config.iterations {
            sampler.sweep(&x, &y, None, sigma, &mut rng);
            if config.keeps(it) {
                draws.push(sampler.fit()[0]);
            }
        }
        assert!(sampler.fit().iter().all(|f| *f == sampler.fit()[0]));
        let total: f64 = y.iter().sum();
        let post_var = 1.0 / (n as f64 / (sigma * sigma) + 1.0 / (leaf * leaf));
        let post_mean = post_var * total / (sigma * sigma);
        let se = (post_var / draws.len() as f64).sqrt();
        assert!((mean(&draws) - post_mean).abs() < 3.0 * se);
        let var = sample_sd(&draws).unwrap().powi(2);
        assert!((var / post_var - 1.0).abs() < 0.1);
    }

    #[test]
    fn cached_fit_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 80;
        let x = uniform_matrix(n, 3, &mut rng);
        let y: Vec<f64> = (0..n)
            .map(|i| (6.0 * x.get(i, 0)).sin() + 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let weights: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let config = short(20, 0, 50);
        let mut sampler = ForestSampler::new(&x, &config);
        for sweep in 0..60 {
            let w = (sweep % 2 == 0).then_some(weights.as_slice());
            sampler.sweep(&x, &y, w, 0.5, &mut rng);
            for (a, b) in sampler.fit().iter().zip(sampler.recomputed_fit(&x)) {
                assert!((a - b).abs() < 1e-8);
            }
        }
        assert!(sampler.accepted > 0);
    }

    /// With the likelihood switched off the chain samples the tree prior, so
    /// the root splits with probability eta.
    #[test]
    fn prior_only_root_split_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = uniform_matrix(40, 3, &mut rng);
        let target = vec![0.0; 40];
        for (eta, beta) in [(0.95, 2.0), (0.5, 1.0)] {
            let config = BartConfig {
                num_trees: 1,
                eta,
                beta,
                ..BartConfig::default()
            };
            let draws = 5000;
            let mut splits = 0;
            for _ in 0..draws {
                let mut sampler = ForestSampler::new(&x, &config);
                sampler.use_likelihood = false;
                for _ in 0..60 {
                    sampler.sweep(&x, &target, None, 1.0, &mut rng);
                }
                if sampler.states[0].tree().num_leaves() > 1 {
                    splits += 1;
                }
            }
            let rate = splits as f64 / draws as f64;
            let se = (eta * (1.0 - eta) / draws as f64).sqrt();
            assert!((rate - eta).abs() < 3.0 * se, "eta {eta}: rate {rate}");
        }
    }

    #[test]
    fn constant_feature_is_never_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100;
        let mut x = uniform_matrix(n, 2, &mut rng);
        x = x.with_column(&vec![0.5; n]).unwrap();
        let y: Vec<f64> = (0..n)
            .map(|i| 3.0 * x.get(i, 0) + rng.random::<f64>())
            .collect();
        let config = short(50, 100, 100);
        let post = fit_continuous(&x, &y, &config, 6).unwrap();
        assert_eq!(post.split_counts[2], 0);
        assert!(post.split_counts[0] > 0);
        // 50 trees x 200 sweeps = 10,000 steps, none of them using the constant
        assert!(post.acceptance_rate > 0.0);
    }

    #[test]
    fn noise_scale_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 250;
        let x = uniform_matrix(n, 3, &mut rng);
        let y: Vec<f64> = (0..n)
            .map(|i| 2.0 * x.get(i, 0) + x.get(i, 1) + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let post = fit_continuous(&x, &y, &short(50, 300, 300), 8).unwrap();
        assert!(post.sigma_draws.iter().all(|s| *s > 0.0));
        let med = stats::median(&post.sigma_draws);
        assert!(med > 0.8 && med < 1.2, "median sigma {med}");
    }

    #[test]
    fn continuous_fit_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = uniform_matrix(40, 2, &mut rng);
        let y: Vec<f64> = (0..40).map(|i| x.get(i, 1)).collect();
        let a = fit_continuous(&x, &y, &short(10, 20, 20), 11).unwrap();
        let b = fit_continuous(&x, &y, &short(10, 20, 20), 11).unwrap();
        assert_eq!(a, b);
        let c = fit_continuous(&x, &y, &short(10, 20, 20), 12).unwrap();
        assert_ne!(a.draws, c.draws);
    }

    #[test]
    fn probit_calibrates_to_constant_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 500;
        let x = uniform_matrix(n, 3, &mut rng);
        let d: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.5).collect();
        let post = fit_binary_probit(&x, &d, &short(50, 200, 200), 12).unwrap();
        let probs = post.mean_probability();
        assert!((mean(&probs) - 0.5).abs() < 0.05);
        let inside = probs.iter().filter(|p| **p > 0.2 && **p < 0.8).count();
        assert!(inside as f64 >= 0.95 * n as f64);
        for draw in &post.probability_draws {
            assert!(draw.iter().all(|p| *p > 0.0 && *p < 1.0));
        }
    }

    #[test]
    fn probit_tracks_a_signal_and_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 300;
        let x = uniform_matrix(n, 2, &mut rng);
        let truth: Vec<f64> = (0..n).map(|i| 0.1 + 0.8 * x.get(i, 0)).collect();
        let d: Vec<bool> = truth.iter().map(|p| rng.random::<f64>() < *p).collect();
        let config = short(50, 200, 200);
        let a = fit_binary_probit(&x, &d, &config, 14).unwrap();
        let est = a.mean_probability();
        let rmse = (est
            .iter()
            .zip(&truth)
            .map(|(e, t)| (e - t).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        assert!(rmse < 0.12, "rmse {rmse}");
        let b = fit_binary_probit(&x, &d, &config, 14).unwrap();
        assert_eq!(a.probability_draws, b.probability_draws);
    }

    #[test]
    fn probit_rejects_single_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let x = uniform_matrix(10, 2, &mut rng);
        assert!(matches!(
            fit_binary_probit(&x, &[true; 10], &BartConfig::default(), 1),
            Err(Error::SingleClass(_))
        ));
    }
}

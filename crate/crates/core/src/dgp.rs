//! Synthetic targeted-selection designs with known treatment effects.
//!
//! Every design draws `X ~ Uniform(0,1)^5`, `D | X ~ Bernoulli(pi(X))`,
//! `e ~ N(0,1)` and
//!
//! ```text
//! Y = b(X) + (D - 0.5) (X1 + X2) / (2 alpha) + e
//! b(X) = sin(pi X1 X2) + 2 (X3 - 0.5)^2 + X4 + 0.5 X5
//! ```
//!
//! The three [`Selection`] strengths differ only in how closely the propensity
//! score tracks the prognostic function `b`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Matrix;
use crate::{Error, Result};

pub const NUM_COVARIATES: usize = 5;

/// Strength of targeted selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Propensity is a monotone transform of `b` (DGP1).
    Extreme,
    /// Mostly `b`, partly `min(X1, X2)` (DGP2).
    Moderate,
    /// Propensity depends on `min(X1, X2)` only (DGP3).
    Slight,
}

impl Selection {
    pub const ALL: [Selection; 3] = [Selection::Extreme, Selection::Moderate, Selection::Slight];

    pub fn name(self) -> &'static str {
        match self {
            Selection::Extreme => "extreme",
            Selection::Moderate => "moderate",
            Selection::Slight => "slight",
        }
    }

    /// `DGP1`, `DGP2` or `DGP3`.
    pub fn label(self) -> &'static str {
        match self {
            Selection::Extreme => "DGP1",
            Selection::Moderate => "DGP2",
            Selection::Slight => "DGP3",
        }
    }

    pub(crate) fn index(self) -> u64 {
        match self {
            Selection::Extreme => 1,
            Selection::Moderate => 2,
            Selection::Slight => 3,
        }
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "extreme" | "dgp1" => Ok(Selection::Extreme),
            "moderate" | "dgp2" => Ok(Selection::Moderate),
            "slight" | "dgp3" => Ok(Selection::Slight),
            other => Err(Error::Config(format!("unknown selection `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub selection: Selection,
    pub alpha: f64,
    pub n: usize,
}

impl DgpSpec {
    pub fn new(selection: Selection, alpha: f64, n: usize) -> Result<Self> {
        let spec = Self {
            selection,
            alpha,
            n,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::OutOfRange {
                name: "alpha",
                value: self.alpha,
            });
        }
        if self.n < 2 {
            return Err(Error::invalid("n", "at least two rows are required"));
        }
        Ok(())
    }

    pub fn cate(&self, x: &[f64]) -> f64 {
        (x[0] + x[1]) / (2.0 * self.alpha)
    }
}

/// One synthetic draw with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: DgpSpec,
    /// `n x 5` covariates in `[0, 1]`.
    pub x: Matrix,
    pub pi_true: Vec<f64>,
    pub d: Vec<bool>,
    pub y: Vec<f64>,
    pub noise: Vec<f64>,
    pub cate_true: Vec<f64>,
    pub ate_true: f64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Prognostic function evaluated at every row.
    pub fn baseline_values(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| baseline_unchecked(&self.x.row(i)))
            .collect()
    }

    /// SHA-256 over the covariates, treatments and outcomes, as lowercase hex.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for j in 0..self.x.ncols() {
            for v in self.x.column(j) {
                h.update(v.to_le_bytes());
            }
        }
        for (d, y) in self.d.iter().zip(&self.y) {
            h.update([u8::from(*d)]);
            h.update(y.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Writes `x1..x5, pi_true, d, y, cate_true` as CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "x1",
            "x2",
            "x3",
            "x4",
            "x5",
            "pi_true",
            "d",
            "y",
            "cate_true",
        ])?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.x.row(i).iter().map(f64::to_string).collect();
            rec.push(self.pi_true[i].to_string());
            rec.push(u8::from(self.d[i]).to_string());
            rec.push(self.y[i].to_string());
            rec.push(self.cate_true[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value: v })
    }
}

/// CDF of Beta(2, 4): `10u^2 - 20u^3 + 15u^4 - 4u^5`.
pub fn beta_cdf_2_4(u: f64) -> Result<f64> {
    check_unit("u", u)?;
    Ok(beta_cdf_2_4_unchecked(u))
}

fn beta_cdf_2_4_unchecked(u: f64) -> f64 {
    u * u * (10.0 + u * (-20.0 + u * (15.0 - 4.0 * u)))
}

fn check_covariates(x: &[f64]) -> Result<()> {
    if x.len() != NUM_COVARIATES {
        return Err(Error::DimensionMismatch {
            expected: NUM_COVARIATES,
            actual: x.len(),
        });
    }
    x.iter().try_for_each(|&v| check_unit("x", v))
}

/// `sin(pi x1 x2) + 2 (x3 - 0.5)^2 + x4 + 0.5 x5`.
pub fn baseline(x: &[f64]) -> Result<f64> {
    check_covariates(x)?;
    Ok(baseline_unchecked(x))
}

fn baseline_unchecked(x: &[f64]) -> f64 {
    (std::f64::consts::PI * x[0] * x[1]).sin() + 2.0 * (x[2] - 0.5).powi(2) + x[3] + 0.5 * x[4]
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

pub fn propensity(x: &[f64], selection: Selection) -> Result<f64> {
    check_covariates(x)?;
    Ok(propensity_unchecked(x, selection))
}

fn propensity_unchecked(x: &[f64], selection: Selection) -> f64 {
    let by_baseline = || beta_cdf_2_4_unchecked(sigmoid(baseline_unchecked(x)));
    let by_min = || beta_cdf_2_4_unchecked(x[0].min(x[1]));
    let p = match selection {
        Selection::Extreme => 0.05 + 0.9 * by_baseline(),
        Selection::Moderate => 0.05 + 0.75 * by_baseline() + 0.15 * by_min(),
        Selection::Slight => 0.05 + 0.9 * by_min(),
    };
    p.clamp(0.05, 0.95)
}

/// Draws one dataset. Rows are generated in order, each consuming five
/// uniforms, one uniform for the treatment and one normal for the noise.
pub fn generate(spec: &DgpSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let mut x = Matrix::zeros(n, NUM_COVARIATES);
    let mut pi_true = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n);
    let mut cate_true = Vec::with_capacity(n);
    let mut row = [0.0; NUM_COVARIATES];
    for i in 0..n {
        for (j, v) in row.iter_mut().enumerate() {
            *v = rng.random();
            x.set(i, j, *v);
        }
        let pi = propensity_unchecked(&row, spec.selection);
        let treated = rng.random::<f64>() < pi;
        let e: f64 = rng.sample(StandardNormal);
        let tau = spec.cate(&row);
        let z = if treated { 0.5 } else { -0.5 };
        pi_true.push(pi);
        d.push(treated);
        y.push(baseline_unchecked(&row) + z * tau + e);
        noise.push(e);
        cate_true.push(tau);
    }
    let ate_true = cate_true.iter().sum::<f64>() / n as f64;
    Ok(Dataset {
        spec: *spec,
        x,
        pi_true,
        d,
        y,
        noise,
        cate_true,
        ate_true,
    })
}

/// Monte Carlo estimate of `E|b(X)| / E|tau(X)|`.
pub fn signal_ratio(spec: &DgpSpec, n_mc: usize, seed: u64) -> Result<f64> {
    spec.validate()?;
    if n_mc < 10_000 {
        return Err(Error::invalid("n_mc", "at least 10,000 draws are required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut b_sum, mut tau_sum) = (0.0, 0.0);
    let mut row = [0.0; NUM_COVARIATES];
    for _ in 0..n_mc {
        row.iter_mut().for_each(|v| *v = rng.random());
        b_sum += baseline_unchecked(&row).abs();
        tau_sum += spec.cate(&row).abs();
    }
    Ok(b_sum / tau_sum)
}

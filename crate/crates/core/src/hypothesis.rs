//! Two-sample location and dispersion tests, plus the rule that picks a
//! location test from the dispersion result.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::stats::{mean, median, normal_two_sided};
use crate::{Error, Result};

/// Levene's p-value below which the samples are treated as having unequal
/// variances.
pub const SELECTION_ALPHA: f64 = 0.05;

/// Largest per-sample size for which [`mann_whitney_u`] uses the exact null
/// distribution (tie-free samples only).
pub const EXACT_MWU_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn check_sample(name: &'static str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::EmptyInput(name));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(name, "values must be finite"));
    }
    Ok(())
}

/// Average ranks (1-based) of the pooled values, plus the tie sum
/// `sum(t^3 - t)` over tie groups.
fn pooled_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = 0.5 * ((start + 1) + end) as f64;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        let t = (end - start) as f64;
        ties += t * t * t - t;
        start = end;
    }
    (ranks, ties)
}

/// Mann-Whitney U test, two-sided. The reported statistic is `min(U_x, U_y)`.
///
/// Tie-free samples with at most [`EXACT_MWU_MAX`] values each use the exact
/// null distribution; otherwise the normal approximation with tie and
/// continuity corrections.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<TestResult> {
    check_sample("x", x)?;
    check_sample("y", y)?;
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = pooled_ranks(&pooled);
    if ties == 0.0 && x.len() <= EXACT_MWU_MAX && y.len() <= EXACT_MWU_MAX {
        return mann_whitney_u_exact(x, y);
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let n = nx + ny;
    let rx: f64 = ranks[..x.len()].iter().sum();
    let ux = rx - nx * (nx + 1.0) / 2.0;
    let u = ux.min(nx * ny - ux);
    let mu = nx * ny / 2.0;
    let var = nx * ny / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(TestResult {
            statistic: u,
            p_value: 1.0,
        });
    }
    let z = ((ux - mu).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(TestResult {
        statistic: u,
        p_value: normal_two_sided(z),
    })
}

/// Mann-Whitney U test with the exact permutation distribution of `U`.
/// Requires tie-free samples.
pub fn mann_whitney_u_exact(x: &[f64], y: &[f64]) -> Result<TestResult> {
    check_sample("x", x)?;
    check_sample("y", y)?;
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = pooled_ranks(&pooled);
    if ties > 0.0 {
        return Err(Error::invalid("x", "exact test requires tie-free samples"));
    }
    let (m, n) = (x.len(), y.len());
    let rx: f64 = ranks[..m].iter().sum();
    let ux = (rx - (m * (m + 1)) as f64 / 2.0).round() as usize;
    let counts = u_distribution(m, n);
    let total: f64 = counts.iter().sum();
    let u = ux.min(m * n - ux);
    let tail: f64 = counts[..=u].iter().sum::<f64>() / total;
    Ok(TestResult {
        statistic: u as f64,
        p_value: (2.0 * tail).min(1.0),
    })
}

/// Number of arrangements giving each value of `U` for sample sizes `m`, `n`.
fn u_distribution(m: usize, n: usize) -> Vec<f64> {
    // f[j][u]: arrangements of i x-values and j y-values with statistic u,
    // built up over i.
    let max_u = m * n;
    let mut prev: Vec<Vec<f64>> = (0..=n)
        .map(|_| {
            let mut v = vec![0.0; max_u + 1];
            v[0] = 1.0;
            v
        })
        .collect();
    for _ in 1..=m {
        let mut cur = vec![vec![0.0; max_u + 1]; n + 1];
        cur[0][0] = 1.0;
        for j in 1..=n {
            for u in 0..=max_u {
                // the largest value is an x (it beats all j y-values) or a y
                let from_x = if u >= j { prev[j][u - j] } else { 0.0 };
                cur[j][u] = from_x + cur[j - 1][u];
            }
        }
        prev = cur;
    }
    prev.swap_remove(n)
}

/// Kruskal-Wallis H test with tie correction.
pub fn kruskal_wallis(groups: &[&[f64]]) -> Result<TestResult> {
    if groups.len() < 2 {
        return Err(Error::invalid("groups", "at least two groups are required"));
    }
    for g in groups {
        check_sample("group", g)?;
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let n = pooled.len() as f64;
    let (ranks, ties) = pooled_ranks(&pooled);
    let mut offset = 0;
    let mut between = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        between += r * r / g.len() as f64;
        offset += g.len();
    }
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
        });
    }
    let h = ((12.0 / (n * (n + 1.0)) * between - 3.0 * (n + 1.0)) / correction).max(0.0);
    let chi = ChiSquared::new((groups.len() - 1) as f64).expect("positive degrees of freedom");
    Ok(TestResult {
        statistic: h,
        p_value: chi.sf(h).clamp(0.0, 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Center {
    /// Levene's original test.
    Mean,
    /// The Brown-Forsythe variant.
    Median,
}

/// Levene-type test of equal dispersion: one-way ANOVA on absolute
/// deviations from each group's center.
pub fn levene_family(x: &[f64], y: &[f64], center: Center) -> Result<TestResult> {
    for (name, v) in [("x", x), ("y", y)] {
        check_sample(name, v)?;
        if v.len() < 2 {
            return Err(Error::invalid(name, "at least two values are required"));
        }
    }
    let deviations = |v: &[f64]| -> Vec<f64> {
        let c = match center {
            Center::Mean => mean(v),
            Center::Median => median(v),
        };
        v.iter().map(|a| (a - c).abs()).collect()
    };
    let (dx, dy) = (deviations(x), deviations(y));
    let (mx, my) = (mean(&dx), mean(&dy));
    let (nx, ny) = (dx.len() as f64, dy.len() as f64);
    let n = nx + ny;
    let grand = (nx * mx + ny * my) / n;
    let between = nx * (mx - grand).powi(2) + ny * (my - grand).powi(2);
    let within: f64 = dx.iter().map(|d| (d - mx).powi(2)).sum::<f64>()
        + dy.iter().map(|d| (d - my).powi(2)).sum::<f64>();
    if within <= 0.0 {
        let (statistic, p_value) = if between > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (0.0, 1.0)
        };
        return Ok(TestResult { statistic, p_value });
    }
    let w = (n - 2.0) * between / within;
    let f = FisherSnedecor::new(1.0, n - 2.0).expect("positive degrees of freedom");
    Ok(TestResult {
        statistic: w,
        p_value: f.sf(w).clamp(0.0, 1.0),
    })
}

pub fn levene(x: &[f64], y: &[f64]) -> Result<TestResult> {
    levene_family(x, y, Center::Mean)
}

pub fn brown_forsythe(x: &[f64], y: &[f64]) -> Result<TestResult> {
    levene_family(x, y, Center::Median)
}

/// Sample size below which the Fligner-Policello normal approximation is
/// considered unreliable.
pub const FLIGNER_POLICELLO_MIN_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlignerPolicello {
    pub statistic: f64,
    pub p_value: f64,
    /// Set when either sample is smaller than [`FLIGNER_POLICELLO_MIN_N`].
    pub small_sample: bool,
}

/// Fligner-Policello robust rank-order test, two-sided.
pub fn fligner_policello(x: &[f64], y: &[f64]) -> Result<FlignerPolicello> {
    check_sample("x", x)?;
    check_sample("y", y)?;
    let placements = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter()
            .map(|&v| {
                b.iter()
                    .map(|&w| match w.partial_cmp(&v) {
                        Some(std::cmp::Ordering::Less) => 1.0,
                        Some(std::cmp::Ordering::Equal) => 0.5,
                        _ => 0.0,
                    })
                    .sum()
            })
            .collect()
    };
    let p = placements(x, y);
    let q = placements(y, x);
    let (pm, qm) = (mean(&p), mean(&q));
    let vp: f64 = p.iter().map(|v| (v - pm).powi(2)).sum();
    let vq: f64 = q.iter().map(|v| (v - qm).powi(2)).sum();
    let numerator = p.iter().sum::<f64>() - q.iter().sum::<f64>();
    let denominator = 2.0 * (vp + vq + pm * qm).sqrt();
    let small_sample = x.len() < FLIGNER_POLICELLO_MIN_N || y.len() < FLIGNER_POLICELLO_MIN_N;
    let (statistic, p_value) = if denominator > 0.0 {
        let u = numerator / denominator;
        (u, normal_two_sided(u))
    } else if numerator == 0.0 {
        (0.0, 1.0)
    } else {
        (numerator.signum() * f64::INFINITY, 0.0)
    };
    Ok(FlignerPolicello {
        statistic,
        p_value,
        small_sample,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LocationTest {
    FlignerPolicello,
    MannWhitneyKruskalWallis,
}

/// Dispersion tests plus the selected location test for one metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub metric: String,
    pub fligner_policello: Option<TestResult>,
    pub mann_whitney: Option<TestResult>,
    pub kruskal_wallis: Option<TestResult>,
    pub levene: TestResult,
    pub brown_forsythe: TestResult,
    pub selected: LocationTest,
}

impl TestReport {
    /// p-value of the selected location test (Mann-Whitney when both rank
    /// tests ran).
    pub fn location_p(&self) -> f64 {
        match self.selected {
            LocationTest::FlignerPolicello => self.fligner_policello.map(|r| r.p_value),
            LocationTest::MannWhitneyKruskalWallis => self.mann_whitney.map(|r| r.p_value),
        }
        .expect("selected test is populated")
    }
}

/// Runs both dispersion tests, then Fligner-Policello if Levene's p is below
/// [`SELECTION_ALPHA`], otherwise Mann-Whitney and Kruskal-Wallis.
pub fn select_and_run(x: &[f64], y: &[f64], metric: &str) -> Result<TestReport> {
    let levene = levene(x, y)?;
    let brown_forsythe = brown_forsythe(x, y)?;
    let mut report = TestReport {
        metric: metric.to_string(),
        fligner_policello: None,
        mann_whitney: None,
        kruskal_wallis: None,
        levene,
        brown_forsythe,
        selected: LocationTest::MannWhitneyKruskalWallis,
    };
    if levene.p_value < SELECTION_ALPHA {
        let fp = fligner_policello(x, y)?;
        report.fligner_policello = Some(TestResult {
            statistic: fp.statistic,
            p_value: fp.p_value,
        });
        report.selected = LocationTest::FlignerPolicello;
    } else {
        report.mann_whitney = Some(mann_whitney_u(x, y)?);
        report.kruskal_wallis = Some(kruskal_wallis(&[x, y])?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normals(rng: &mut ChaCha8Rng, n: usize, loc: f64, scale: f64) -> Vec<f64> {
        (0..n)
            .map(|_| loc + scale * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// Two-sided exact p by listing every split of the pooled ranks.
    fn enumerate_mwu_p(m: usize, n: usize, observed_u: usize) -> f64 {
        let total = m + n;
        let (mut hits_lo, mut hits_hi, mut count) = (0u64, 0u64, 0u64);
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let rank_sum: usize = (0..total)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| b + 1)
                .sum();
            let u = rank_sum - m * (m + 1) / 2;
            count += 1;
            if u <= observed_u {
                hits_lo += 1;
            }
            if u >= m * n - observed_u {
                hits_hi += 1;
            }
        }
        ((hits_lo.min(hits_hi) as f64 * 2.0) / count as f64).min(1.0)
    }

    #[test]
    fn mwu_exact_example() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 0.1).abs() < 1e-12);
        assert!((enumerate_mwu_p(3, 3, 0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn exact_distribution_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (m, n) in [(2, 5), (4, 4), (5, 3), (6, 7)] {
            for _ in 0..5 {
                let x = normals(&mut rng, m, 0.5, 1.0);
                let y = normals(&mut rng, n, 0.0, 1.0);
                let r = mann_whitney_u_exact(&x, &y).unwrap();
                let oracle = enumerate_mwu_p(m, n, r.statistic as usize);
                assert!((r.p_value - oracle).abs() < 1e-12, "{m} {n}");
            }
        }
        assert!(mann_whitney_u_exact(&[1.0, 1.0], &[2.0]).is_err());
    }

    #[test]
    fn mwu_symmetry_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = normals(&mut rng, 40, 0.0, 1.0);
        let y = normals(&mut rng, 30, 0.3, 1.0);
        let a = mann_whitney_u(&x, &y).unwrap();
        let b = mann_whitney_u(&y, &x).unwrap();
        assert_eq!(a, b);
        assert!(mann_whitney_u(&x, &x).unwrap().p_value >= 0.99);
        assert!(mann_whitney_u(&[], &y).is_err());
    }

    #[test]
    fn mwu_normal_approximation_reference() {
        // x = 1..10, y = 6..15: the overlap 6..10 gives 10 wins and 5 ties, so
        // U = 12.5 against mu = 50
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let y: Vec<f64> = (6..=15).map(f64::from).collect();
        let r = mann_whitney_u(&x, &y).unwrap();
        assert_eq!(r.statistic, 12.5);
        // ties: five pairs, each t = 2
        let var: f64 = 100.0 / 12.0 * (21.0 - 5.0 * 6.0 / (20.0 * 19.0));
        let z = (37.5 - 0.5) / var.sqrt();
        assert!((r.p_value - normal_two_sided(z)).abs() < 1e-14);
    }

    #[test]
    fn kruskal_wallis_properties() {
        let g = [1.0, 2.0, 3.0, 4.0];
        let r = kruskal_wallis(&[&g, &g]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert!(kruskal_wallis(&[&g]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = normals(&mut rng, 30, 0.0, 1.0);
        let y = normals(&mut rng, 25, 0.5, 2.0);
        let z = normals(&mut rng, 20, -0.2, 1.0);
        let h = kruskal_wallis(&[&x, &y, &z]).unwrap();
        let t = |v: &[f64]| v.iter().map(|a| a.exp()).collect::<Vec<_>>();
        let ht = kruskal_wallis(&[&t(&x), &t(&y), &t(&z)]).unwrap();
        assert!((h.statistic - ht.statistic).abs() < 1e-9);
    }

    #[test]
    fn kruskal_wallis_matches_mwu_for_two_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = normals(&mut rng, 100, 0.0, 1.0);
            let y = normals(&mut rng, 100, 0.2, 1.0);
            let kw = kruskal_wallis(&[&x, &y]).unwrap().p_value;
            let mw = mann_whitney_u(&x, &y).unwrap().p_value;
            assert!((kw - mw).abs() < 0.01, "{kw} {mw}");
        }
    }

    #[test]
    fn levene_examples() {
        let x = [1.0, 2.0, 4.0, 7.0, 11.0];
        let r = levene(&x, &x).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let flat = levene_family(&[2.0, 2.0], &[5.0, 5.0], Center::Median).unwrap();
        assert_eq!(flat.p_value, 1.0);
        assert!(levene(&[1.0], &[1.0, 2.0]).is_err());

        // symmetric samples: each group's mean equals its median
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 4.0, 6.0, 8.0, 10.0];
        let l = levene(&a, &b).unwrap();
        let bf = brown_forsythe(&a, &b).unwrap();
        assert!((l.statistic - bf.statistic).abs() < 1e-12);
        assert!((l.p_value - bf.p_value).abs() < 1e-12);
    }

    #[test]
    fn levene_reference_value() {
        // deviations from means 3 and 6: {2,1,0,1,2} and {4,2,0,2,4};
        // group means 1.2 and 2.4, within SS 2.8 + 11.2 = 14, between 3.6
        let r = levene(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 6.0, 8.0, 10.0]).unwrap();
        assert!((r.statistic - 8.0 * 3.6 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn levene_has_power_against_scale_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 200;
        let mut rejections = 0;
        for _ in 0..trials {
            let x = normals(&mut rng, 100, 0.0, 1.0);
            let y = normals(&mut rng, 100, 0.0, 5.0);
            if levene(&x, &y).unwrap().p_value < 0.01 {
                rejections += 1;
            }
        }
        assert!(rejections as f64 >= 0.95 * trials as f64);
    }

    #[test]
    fn fligner_policello_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = normals(&mut rng, 50, 0.0, 1.0);
        assert!(fligner_policello(&x, &x).unwrap().p_value >= 0.99);
        let shifted: Vec<f64> = normals(&mut rng, 50, 10.0, 1.0);
        assert!(fligner_policello(&shifted, &x).unwrap().p_value < 1e-6);
        let t = |v: &[f64]| v.iter().map(|a| a.powi(3)).collect::<Vec<_>>();
        let y = normals(&mut rng, 40, 0.4, 2.0);
        let a = fligner_policello(&x, &y).unwrap();
        let b = fligner_policello(&t(&x), &t(&y)).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-12);
        assert!(!a.small_sample);
        assert!(fligner_policello(&[1.0, 2.0], &[3.0]).unwrap().small_sample);
    }

    #[test]
    fn fligner_policello_partial_overlap_reference() {
        // placements of x in y: 0, 1, 2 (mean 1, V = 2); of y in x: 1, 2, 3
        // (mean 2, V = 2); U = (3 - 6) / (2 sqrt(2 + 2 + 2))
        let r = fligner_policello(&[1.0, 3.0, 5.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r.statistic + 3.0 / (2.0 * 6f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn null_calibration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 2000;
        let mut rejects = [0usize; 5];
        for _ in 0..trials {
            let x = normals(&mut rng, 50, 0.0, 1.0);
            let y = normals(&mut rng, 50, 0.0, 1.0);
            let ps = [
                mann_whitney_u(&x, &y).unwrap().p_value,
                kruskal_wallis(&[&x, &y]).unwrap().p_value,
                levene(&x, &y).unwrap().p_value,
                brown_forsythe(&x, &y).unwrap().p_value,
                fligner_policello(&x, &y).unwrap().p_value,
            ];
            for (r, p) in rejects.iter_mut().zip(ps) {
                assert!((0.0..=1.0).contains(&p));
                if p < 0.05 {
                    *r += 1;
                }
            }
        }
        for r in rejects {
            let rate = r as f64 / trials as f64;
            assert!((0.03..=0.07).contains(&rate), "rate {rate}");
        }
    }

    #[test]
    fn selection_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = normals(&mut rng, 100, 0.0, 1.0);
        let wide = normals(&mut rng, 100, 0.0, 10.0);
        let r = select_and_run(&x, &wide, "rmse_pi").unwrap();
        assert!(r.levene.p_value < 1e-10);
        assert_eq!(r.selected, LocationTest::FlignerPolicello);
        assert!(
            r.fligner_policello.is_some() && r.mann_whitney.is_none() && r.kruskal_wallis.is_none()
        );

        let similar: Vec<f64> = x.iter().map(|v| v + 0.1).collect();
        let r = select_and_run(&x, &similar, "rmse_cate").unwrap();
        assert!(r.levene.p_value >= SELECTION_ALPHA);
        assert_eq!(r.selected, LocationTest::MannWhitneyKruskalWallis);
        assert!(
            r.fligner_policello.is_none() && r.mann_whitney.is_some() && r.kruskal_wallis.is_some()
        );
        assert_eq!(r, select_and_run(&x, &similar, "rmse_cate").unwrap());

        let same = select_and_run(&x, &x, "m").unwrap();
        assert!(same.location_p() >= 0.99);
    }
}

//! Fits the three causal forest variants to one synthetic dataset and prints
//! treatment-effect accuracy and timing for each.
//!
//! ```text
//! cargo run --release --example fit_bcf -- [selection] [alpha] [retained]
//! ```

use bcf_ablation::bcf::{ate_posterior, cate_intervals, fit_bcf, BcfConfig, PropensityMode};
use bcf_ablation::dgp::{generate, DgpSpec, Selection};
use bcf_ablation::metrics::{interval_metrics, pointwise_errors};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let selection: Selection = args.next().as_deref().unwrap_or("extreme").parse()?;
    let alpha: f64 = args.next().map_or(Ok(4.0), |a| a.parse())?;
    let retained: usize = args.next().map_or(Ok(500), |a| a.parse())?;

    let ds = generate(&DgpSpec::new(selection, alpha, 250)?, 2024)?;
    let config = BcfConfig::default().with_chain(1000, retained);
    println!(
        "{} alpha={alpha} n={} true ATE={:.4}",
        selection.label(),
        ds.len(),
        ds.ate_true
    );
    for mode in PropensityMode::ALL {
        let fit = fit_bcf(&ds.x, &ds.d, &ds.y, mode, Some(&ds.pi_true), &config, 7)?;
        let cate = cate_intervals(&fit, fit.interval_level)?;
        let means: Vec<f64> = cate.iter().map(|c| c.mean).collect();
        let lower: Vec<f64> = cate.iter().map(|c| c.lower).collect();
        let upper: Vec<f64> = cate.iter().map(|c| c.upper).collect();
        let err = pointwise_errors(&means, &ds.cate_true)?;
        let cover = interval_metrics(&lower, &upper, &ds.cate_true, fit.interval_level)?;
        let ate = ate_posterior(&fit)?.summary;
        println!(
            "{:<18} rmse_cate={:.4} cover_cate={:.3} ate={:.4} [{:.4}, {:.4}] {:.2}s",
            mode.label(),
            err.rmse,
            cover.cover,
            ate.mean,
            ate.lower,
            ate.upper,
            fit.fit_seconds
        );
    }
    Ok(())
}

//! A miniature propensity ablation: a short grid through the full harness,
//! then the summary table and the no-propensity vs estimated-propensity
//! comparison.
//!
//! ```text
//! cargo run --release --example ablation_study -- [output_dir] [replicates]
//! ```

use bcf_ablation::bcf::PropensityMode;
use bcf_ablation::dgp::Selection;
use bcf_ablation::harness::{
    compare_models, run_experiment, summarize, timing_report, ExperimentConfig, RunOptions,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "ablation_out".into());
    let replicates: usize = args.next().map_or(Ok(5), |a| a.parse())?;

    let config = ExperimentConfig {
        selections: vec![Selection::Extreme],
        alphas: vec![4.0],
        replicates,
        burn_in: Some(200),
        retained: Some(200),
        output_dir: out.into(),
        ..ExperimentConfig::default()
    };
    let run = run_experiment(
        &config,
        RunOptions {
            overwrite: true,
            ..RunOptions::default()
        },
    )?;
    for table in summarize(&run.records)? {
        println!("{}", table.to_markdown());
    }
    let pv = compare_models(
        &run.records,
        PropensityMode::NoPropensity.name(),
        PropensityMode::EstimatedPropensity.name(),
    )?;
    for metric in ["rmse_cate", "cover_cate", "rmse_pi"] {
        let row = pv.row(metric).unwrap();
        println!("{metric}: {:?} p={:.4}", row.selected, row.location_p());
    }
    let timing = timing_report(&run.records)?;
    println!(
        "estimated-propensity time overhead: {:.1}%",
        100.0 * timing.pooled_overhead
    );
    println!(
        "{} files written to {}",
        run.artifacts.len(),
        config.output_dir.display()
    );
    Ok(())
}

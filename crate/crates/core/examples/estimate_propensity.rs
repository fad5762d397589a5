//! Estimates propensity scores with probit BART for each selection design
//! and compares them with the constant 0.5.

use bcf_ablation::bart::{fit_binary_probit, BartConfig};
use bcf_ablation::dgp::{generate, DgpSpec, Selection};
use bcf_ablation::metrics::pointwise_errors;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = BartConfig::default().with_retained(500);
    for selection in Selection::ALL {
        let ds = generate(&DgpSpec::new(selection, 4.0, 250)?, 21)?;
        let post = fit_binary_probit(&ds.x, &ds.d, &config, 22)?;
        let est = pointwise_errors(&post.mean_probability(), &ds.pi_true)?;
        let half = pointwise_errors(&vec![0.5; ds.len()], &ds.pi_true)?;
        println!(
            "{}: rmse_pi probit {:.4}, constant 0.5 {:.4}",
            selection.label(),
            est.rmse,
            half.rmse
        );
    }
    Ok(())
}

//! Draws one synthetic dataset and writes it as CSV.
//!
//! ```text
//! cargo run --example generate_dataset -- [selection] [alpha] [n] [seed] > data.csv
//! ```

use std::io;

use bcf_ablation::dgp::{generate, signal_ratio, DgpSpec, Selection};
use bcf_ablation::stats::mean;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let selection: Selection = args.next().as_deref().unwrap_or("moderate").parse()?;
    let alpha: f64 = args.next().map_or(Ok(2.0), |a| a.parse())?;
    let n: usize = args.next().map_or(Ok(250), |a| a.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |a| a.parse())?;

    let spec = DgpSpec::new(selection, alpha, n)?;
    let ds = generate(&spec, seed)?;
    let treated = ds.d.iter().filter(|&&d| d).count();
    eprintln!("{} alpha={alpha} n={n} seed={seed}", selection.label());
    eprintln!("  treated: {treated} of {n}");
    eprintln!("  mean propensity: {:.4}", mean(&ds.pi_true));
    eprintln!("  true ATE: {:.4}", ds.ate_true);
    eprintln!(
        "  E|b| / E|tau|: {:.2}",
        signal_ratio(&spec, 100_000, seed)?
    );
    eprintln!("  digest: {}", ds.digest());
    ds.write_csv(io::stdout().lock())?;
    Ok(())
}

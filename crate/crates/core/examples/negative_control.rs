//! A discrete system that is not complex balanced: `2A -> 0`, `0 -> A`.
//! Its stationary law is not Poisson, so the continuous rates must be
//! averaged against it rather than against a product-form equilibrium.
//!
//! ```text
//! cargo run --example negative_control
//! ```

use acr_scope::model::parse_network;
use acr_scope::multiscale::{render_reductions, Averaging, ContinuousReduction, DiscreteReduction, ScalingSpec};
use acr_scope::statistics::{truncated_stationary, PoissonReference, StationaryOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let discrete = parse_network("2A -> 0 @ ma(1)\n0 -> A @ ma(8)")?;
    let mu = truncated_stationary(&discrete, &StationaryOptions::default())?;
    let law = mu.distribution();
    let (mean, fano) = (law.mean()[0], law.fano()[0]);
    let poisson = PoissonReference::new(vec![mean]).distribution()?;
    println!(
        "stationary mean {mean:.4}, Fano factor {fano:.4}, TV to Poisson({mean:.4}) {:.4}",
        law.total_variation(&poisson)
    );

    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/not_poisson.crn"))?;
    let spec = ScalingSpec::with_discrete(parse_network(&src)?, &["A"], &[("A", 2.0), ("B", 1.0)], vec![1000])?;
    let d = DiscreteReduction::build(&spec)?;
    match ContinuousReduction::build(&d, Averaging::ComplexBalanced) {
        Ok(_) => println!("unexpectedly complex balanced"),
        Err(e) => println!("complex-balanced averaging refused: {e}"),
    }
    let c = ContinuousReduction::build(&d, Averaging::Stationary(StationaryOptions::default()))?;
    print!("{}", render_reductions(&c).to_text());
    Ok(())
}

//! The discrete species of the simple network at a fixed time is close to
//! Poisson(k2/k1) once `N` is large.
//!
//! ```text
//! cargo run --release --example poisson_limit
//! ```

use acr_scope::dynamics::rng::replica_rng;
use acr_scope::dynamics::ssa::{Observer, Ssa, SsaOptions};
use acr_scope::model::parse_network;
use acr_scope::multiscale::{build_scaled_system, ScalingSpec};
use acr_scope::statistics::{distribution_distance, EmpiricalMarginal, PoissonReference};

struct Quiet;

impl Observer for Quiet {
    fn jump(&mut self, _t: f64, _x: &[u64], _r: usize) {}
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/simple.crn"))?;
    let spec = ScalingSpec::with_discrete(parse_network(&src)?, &["A"], &[("A", 2.0), ("B", 1.0)], vec![1000])?;
    let scaled = build_scaled_system(&spec, 1000)?;
    let ssa = Ssa::new(&scaled.network);
    let mut marginal = EmpiricalMarginal::new(2.0);
    for i in 0..2000 {
        let out = ssa.run(&scaled.initial_state, 2.0, &mut replica_rng(11, i), &mut Quiet, &SsaOptions::default())?;
        marginal.add(vec![out.final_state[0]]);
    }
    let reference = PoissonReference::new(vec![2.0]).distribution()?;
    let d = distribution_distance(&marginal, &reference, 0)?;
    println!(
        "2000 replicas at N = 1000: mean {:.3}, variance {:.3}, TV to Poisson(2) {:.4}, chi-square p-value {:?}",
        marginal.mean()[0],
        marginal.variance()[0],
        d.total_variation,
        d.chi_square_pvalue
    );
    Ok(())
}

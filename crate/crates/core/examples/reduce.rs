//! Discrete and continuous reductions of the modified network, where two
//! reactions per direction collapse into one with rate `k1*w + k4*w^2`.
//!
//! ```text
//! cargo run --example reduce
//! ```

use acr_scope::model::parse_network;
use acr_scope::multiscale::{
    audit_assumptions, render_reductions, AuditOptions, Averaging, ContinuousReduction, DiscreteReduction, ScalingSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/modified_simple.crn"))?;
    let spec = ScalingSpec::with_discrete(parse_network(&src)?, &["A"], &[("A", 2.0), ("B", 1.0)], vec![1000])?;
    let discrete = DiscreteReduction::build(&spec)?;
    let continuous = ContinuousReduction::build(&discrete, Averaging::ComplexBalanced)?;
    print!("{}", render_reductions(&continuous).to_text());
    for w in [0.5, 1.0, 4.0] {
        println!("q_d at w = {w}: {:.4}", continuous.discrete_equilibrium(&[w])?[0]);
    }
    let audit = audit_assumptions(&spec, &AuditOptions::default(), &Averaging::ComplexBalanced)?;
    println!("reduction assumptions: {:?}, Poisson limit: {:?}", audit.reduction_verdict(), audit.poisson_verdict());
    Ok(())
}

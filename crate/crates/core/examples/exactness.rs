//! The simulator against the transient law from uniformization on a small
//! closed system, `A + B <-> C` started from `(3, 2, 0)`.
//!
//! ```text
//! cargo run --release --example exactness
//! ```

use acr_scope::dynamics::rng::replica_rng;
use acr_scope::dynamics::ssa::{Observer, Ssa, SsaOptions};
use acr_scope::model::parse_network;
use acr_scope::statistics::{distribution_distance, uniformization, EmpiricalMarginal};

struct Quiet;

impl Observer for Quiet {
    fn jump(&mut self, _t: f64, _x: &[u64], _r: usize) {}
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_network("A + B <-> C @ ma(1.5, 0.7)")?;
    let (x0, t) = ([3, 2, 0], 0.8);
    let law = uniformization(&net, &x0, t, &[3, 2, 2])?;
    let ssa = Ssa::new(&net);
    let mut m = EmpiricalMarginal::new(t);
    for i in 0..20_000 {
        let out = ssa.run(&x0, t, &mut replica_rng(5, i), &mut Quiet, &SsaOptions::default())?;
        m.add(out.final_state);
    }
    let d = distribution_distance(&m, &law.distribution, 0)?;
    println!(
        "20000 paths: TV {:.4} to the uniformization law, chi-square p-value {:?}, expected jumps {:.3}",
        d.total_variation, d.chi_square_pvalue, law.expected_events
    );
    Ok(())
}

//! Structural invariants and ACR detection for a bundled network.
//!
//! ```text
//! cargo run --example analyze -- examples/envz_ompr.crn
//! ```

use acr_scope::equilibria::{detect_acr, AcrOptions};
use acr_scope::model::parse_network;
use acr_scope::structural::analyze_structure;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/envz_ompr.crn").into());
    let net = parse_network(&std::fs::read_to_string(&path)?)?;
    let s = analyze_structure(&net);
    println!(
        "{} species, {} complexes, {} linkage classes, s = {}, deficiency {}, weakly reversible: {}",
        s.num_species,
        s.num_complexes,
        s.linkage_classes.len(),
        s.stoich_dimension,
        s.deficiency,
        s.weakly_reversible
    );
    let names = net.species_names();
    for law in &s.conservation_basis {
        let terms: Vec<String> =
            law.iter().zip(&names).filter(|(&c, _)| c != 0).map(|(c, n)| format!("{c}*{n}")).collect();
        println!("conserved: {}", terms.join(" + "));
    }
    let acr = detect_acr(&net, &AcrOptions::default());
    for &(i, v) in &acr.acr_values {
        println!("ACR species {} at {v:.6} ({})", names[i], acr.label);
    }
    if acr.acr_values.is_empty() {
        println!("no ACR species among {} sampled equilibria", acr.equilibria_sampled);
    }
    Ok(())
}

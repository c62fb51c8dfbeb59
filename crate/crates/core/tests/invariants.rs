//! Property tests for invariants that hold for every input.

use acr_scope::dynamics::rng::{derive_seed, replica_rng};
use acr_scope::dynamics::ssa::{simulate_network, SsaOptions};
use acr_scope::model::{falling_factorial, parse_network, print_network};
use acr_scope::multiscale::{Averaging, ContinuousReduction, DiscreteReduction, ScalingSpec};
use acr_scope::statistics::{DiscreteDistribution, PoissonReference};
use acr_scope::structural::{analyze_structure, complex_balance_residuals, stoichiometric_rows};
use proptest::prelude::*;
use rand::RngCore;

const NAMES: [&str; 4] = ["A", "B", "C", "D"];

fn complex_text(c: &[u32]) -> String {
    let terms: Vec<String> = c
        .iter()
        .zip(NAMES)
        .filter(|(&k, _)| k > 0)
        .map(|(&k, n)| if k == 1 { n.to_string() } else { format!("{k}{n}") })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// Mass-action networks with at most 4 species and 5 reactions.
fn network_text() -> impl Strategy<Value = String> {
    let complex = prop::collection::vec(0u32..3, 4);
    let reaction = (complex.clone(), complex, 0.1f64..5.0);
    prop::collection::vec(reaction, 1..=5).prop_filter_map("a reaction must change the state", |rs| {
        let lines: Vec<String> = rs
            .iter()
            .filter(|(s, p, _)| s != p)
            .map(|(s, p, k)| format!("{} -> {} @ ma({k})", complex_text(s), complex_text(p)))
            .collect();
        (!lines.is_empty()).then(|| lines.join("\n"))
    })
}

fn spec(src: &str, x0: &[(&str, f64)]) -> ScalingSpec {
    ScalingSpec::with_discrete(parse_network(src).unwrap(), &["A"], x0, vec![100]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printing_round_trips(src in network_text()) {
        let net = parse_network(&src).unwrap();
        let printed = print_network(&net);
        let again = parse_network(&printed).unwrap();
        prop_assert_eq!(print_network(&again), printed);
        prop_assert_eq!(analyze_structure(&again), analyze_structure(&net));
    }

    #[test]
    fn structural_counts_are_consistent(src in network_text()) {
        let net = parse_network(&src).unwrap();
        let r = analyze_structure(&net);
        prop_assert_eq!(
            r.deficiency + r.linkage_classes.len() + r.stoich_dimension,
            r.num_complexes
        );
        prop_assert_eq!(r.stoich_dimension + r.conservation_basis.len(), r.num_species);
        for law in &r.conservation_basis {
            for row in stoichiometric_rows(&net) {
                prop_assert_eq!(law.iter().zip(&row).map(|(a, b)| a * b).sum::<i64>(), 0);
            }
        }
        if let Some(p) = &r.positive_conservation_law {
            prop_assert!(p.iter().all(|&v| v > 0));
        }
    }

    #[test]
    fn falling_factorial_recurses(x in 0u64..40, y in 1u32..6) {
        let lhs = falling_factorial(x, y).unwrap();
        let rhs = u128::from(x) * falling_factorial(x.saturating_sub(1), y - 1).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn total_variation_is_a_metric_on_poisson_laws(a in 0.05f64..6.0, b in 0.05f64..6.0) {
        let p = PoissonReference::new(vec![a]).distribution().unwrap();
        let q = PoissonReference::new(vec![b]).distribution().unwrap();
        let d = p.total_variation(&q);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - q.total_variation(&p)).abs() < 1e-12);
        prop_assert!(p.total_variation(&p) < 1e-12);
        prop_assert!((p.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn projection_preserves_mass(a in 0.1f64..4.0, b in 0.1f64..4.0) {
        let joint = PoissonReference::new(vec![a, b]).distribution().unwrap();
        let marginal: DiscreteDistribution = joint.project(&[1]);
        let direct = PoissonReference::new(vec![b]).distribution().unwrap();
        prop_assert!(marginal.total_variation(&direct) < 1e-9);
    }

    #[test]
    fn ssa_preserves_conservation_laws(
        k1 in 0.1f64..5.0,
        k2 in 0.1f64..5.0,
        a in 0u64..30,
        b in 0u64..30,
        c in 0u64..30,
        seed in any::<u64>(),
    ) {
        let net = parse_network(&format!("A + B <-> C @ ma({k1}, {k2})")).unwrap();
        let traj = simulate_network(&net, &[a, b, c], 2.0, seed, &SsaOptions::default()).unwrap();
        for k in 0..traj.len() {
            let x = traj.state(k);
            prop_assert_eq!(x[0] + x[2], a + c);
            prop_assert_eq!(x[1] + x[2], b + c);
        }
        prop_assert!(traj.times.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(traj.times.last().copied().unwrap_or(0.0) <= 2.0);
    }

    #[test]
    fn discrete_equilibrium_is_complex_balanced(
        k in prop::array::uniform4(0.1f64..5.0),
        w in 0.05f64..20.0,
    ) {
        let src = format!(
            "A + B -> 2B @ ma({})\nB -> A @ ma({})\n2B -> A + 2B @ ma({})\nA + 2B -> 2B @ ma({})",
            k[0], k[1], k[2], k[3]
        );
        let d = DiscreteReduction::build(&spec(&src, &[("A", 2.0), ("B", 1.0)])).unwrap();
        let c = ContinuousReduction::build(&d, Averaging::ComplexBalanced).unwrap();
        let q = c.discrete_equilibrium(&[w]).unwrap();
        let expected = (k[1] + k[2] * w) / (k[0] + k[3] * w);
        prop_assert!((q[0] - expected).abs() <= 1e-10 * expected);
        let net = d.network_at(&[w]).unwrap().unwrap();
        prop_assert!(complex_balance_residuals(&net, &q).iter().all(|&r| r < 1e-10));

        // b' = k1 w q - k2 w: the other two reactions leave B unchanged.
        let mut rhs = [0.0];
        c.rhs(&[w], &mut rhs).unwrap();
        let oracle = k[0] * w * expected - k[1] * w;
        prop_assert!((rhs[0] - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()));
    }

    #[test]
    fn replica_streams_are_reproducible(master in any::<u64>(), i in 0u64..1000) {
        let mut a = replica_rng(master, i);
        let mut b = replica_rng(master, i);
        prop_assert_eq!(a.next_u64(), b.next_u64());
        prop_assert_ne!(derive_seed(master, i), derive_seed(master, i + 1));
    }
}

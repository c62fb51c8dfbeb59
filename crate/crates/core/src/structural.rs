//! Linkage classes, weak reversibility, deficiency, conservation laws and
//! complex-balance certificates.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::equilibria::{find_positive_equilibrium, EquilibriumOptions};
use crate::exact;
use crate::model::{monomial, ReactionNetwork};

/// Relative tolerance on the per-complex inflow/outflow balance.
pub const COMPLEX_BALANCE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructuralReport {
    pub num_species: usize,
    pub num_complexes: usize,
    pub num_reactions: usize,
    /// Complex indices per linkage class, each sorted, classes ordered by
    /// their smallest member.
    pub linkage_classes: Vec<Vec<usize>>,
    pub stoich_dimension: usize,
    pub deficiency: usize,
    pub weakly_reversible: bool,
    /// Integer basis of `{T : T . xi_r = 0 for all r}`.
    pub conservation_basis: Vec<Vec<i64>>,
    pub conservative: bool,
    pub positive_conservation_law: Option<Vec<i64>>,
}

/// Reaction vectors as rows.
pub fn stoichiometric_rows(net: &ReactionNetwork) -> Vec<Vec<i64>> {
    net.reactions().iter().map(|r| r.reaction_vector().to_vec()).collect()
}

pub fn linkage_classes(num_complexes: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::<usize>::new(num_complexes);
    for &(a, b) in edges {
        uf.union(a, b);
    }
    let labels = uf.into_labeling();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for (c, &l) in labels.iter().enumerate() {
        match seen.iter().position(|&s| s == l) {
            Some(k) => classes[k].push(c),
            None => {
                seen.push(l);
                classes.push(vec![c]);
            }
        }
    }
    classes
}

/// Every edge lies inside a strongly connected component, which is the
/// same as every linkage class being strongly connected.
pub fn is_weakly_reversible(num_complexes: usize, edges: &[(usize, usize)]) -> bool {
    let mut g = DiGraph::<(), ()>::with_capacity(num_complexes, edges.len());
    let nodes: Vec<_> = (0..num_complexes).map(|_| g.add_node(())).collect();
    for &(a, b) in edges {
        g.add_edge(nodes[a], nodes[b], ());
    }
    let mut comp = vec![0usize; num_complexes];
    for (k, scc) in tarjan_scc(&g).iter().enumerate() {
        for n in scc {
            comp[n.index()] = k;
        }
    }
    edges.iter().all(|&(a, b)| comp[a] == comp[b])
}

pub fn analyze_structure(net: &ReactionNetwork) -> StructuralReport {
    let n = net.num_species();
    let rows = stoichiometric_rows(net);
    let linkage = linkage_classes(net.complexes().len(), net.edges());
    let s = exact::rank(&rows);
    let deficiency = net.complexes().len() - linkage.len() - s;
    let conservation_basis: Vec<Vec<i64>> = exact::nullspace(&rows, n)
        .iter()
        .map(|v| exact::to_i64(v).expect("conservation law entries fit in i64"))
        .collect();
    let positive = exact::positive_annihilator(&rows, n).map(|v| exact::to_i64(&v).expect("fits in i64"));
    StructuralReport {
        num_species: n,
        num_complexes: net.complexes().len(),
        num_reactions: net.reactions().len(),
        linkage_classes: linkage,
        stoich_dimension: s,
        deficiency,
        weakly_reversible: is_weakly_reversible(net.complexes().len(), net.edges()),
        conservation_basis,
        conservative: positive.is_some(),
        positive_conservation_law: positive,
    }
}

pub fn is_conservative(report: &StructuralReport) -> (bool, Option<&[i64]>) {
    (report.conservative, report.positive_conservation_law.as_deref())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ComplexBalanceCertificate {
    /// Deficiency zero and weakly reversible: complex balanced for every
    /// choice of rate constants.
    AllRateConstants,
    /// Per-complex relative imbalance at a positive equilibrium.
    AtEquilibrium {
        point: Vec<f64>,
        residuals: Vec<f64>,
    },
    NotComplexBalanced {
        witness_complex: Option<usize>,
        residual: f64,
        diagnostic: String,
    },
}

impl ComplexBalanceCertificate {
    pub fn holds(&self) -> bool {
        !matches!(self, ComplexBalanceCertificate::NotComplexBalanced { .. })
    }
}

/// Relative imbalance `|out - in| / max(out, in)` at every complex.
pub fn complex_balance_residuals(net: &ReactionNetwork, c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; net.complexes().len()];
    let mut inflow = vec![0.0; net.complexes().len()];
    for (rx, &(s, p)) in net.reactions().iter().zip(net.edges()) {
        let kappa = rx.rate.kappa().expect("mass-action network");
        let flux = kappa * monomial(c, &rx.source);
        out[s] += flux;
        inflow[p] += flux;
    }
    out.iter()
        .zip(&inflow)
        .map(|(&o, &i)| {
            let scale = o.max(i);
            if scale == 0.0 {
                0.0
            } else {
                (o - i).abs() / scale
            }
        })
        .collect()
}

/// Decides complex balance of a mass-action network, by the deficiency
/// zero shortcut when it applies and otherwise by testing a positive
/// equilibrium (all positive equilibria of a complex-balanced system are
/// complex balanced, so one suffices).
pub fn certify_complex_balance(net: &ReactionNetwork, hint: Option<&[f64]>) -> ComplexBalanceCertificate {
    assert!(net.is_mass_action(), "complex balance is defined for mass-action networks");
    let report = analyze_structure(net);
    if report.deficiency == 0 && report.weakly_reversible {
        return ComplexBalanceCertificate::AllRateConstants;
    }
    certify_at_equilibrium(net, hint)
}

/// Like [`certify_complex_balance`] but never takes the structural shortcut.
pub fn certify_at_equilibrium(net: &ReactionNetwork, hint: Option<&[f64]>) -> ComplexBalanceCertificate {
    let anchor = hint.map(<[f64]>::to_vec).unwrap_or_else(|| vec![1.0; net.num_species()]);
    let Some(eq) = find_positive_equilibrium(net, &anchor, &EquilibriumOptions::default()) else {
        return ComplexBalanceCertificate::NotComplexBalanced {
            witness_complex: None,
            residual: f64::INFINITY,
            diagnostic: "no equilibrium".into(),
        };
    };
    let residuals = complex_balance_residuals(net, &eq.concentrations);
    let (worst, &res) = residuals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("at least one complex");
    if res < COMPLEX_BALANCE_TOL {
        ComplexBalanceCertificate::AtEquilibrium { point: eq.concentrations, residuals }
    } else {
        ComplexBalanceCertificate::NotComplexBalanced {
            witness_complex: Some(worst),
            residual: res,
            diagnostic: format!("complex {worst} imbalanced at the equilibrium found"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_network;

    #[test]
    fn simple_network_structure() {
        let net = parse_network("A + B -> 2B @ ma(1)\nB -> A @ ma(2)").unwrap();
        let r = analyze_structure(&net);
        assert_eq!((r.num_complexes, r.linkage_classes.len(), r.stoich_dimension, r.deficiency), (4, 2, 1, 1));
        assert!(!r.weakly_reversible);
        assert_eq!(r.conservation_basis, vec![vec![1, 1]]);
        assert_eq!(r.positive_conservation_law, Some(vec![1, 1]));
    }

    #[test]
    fn birth_death_is_deficiency_zero_and_weakly_reversible() {
        let net = parse_network("A <-> 0 @ ma(1, 2)").unwrap();
        let r = analyze_structure(&net);
        assert_eq!((r.num_complexes, r.linkage_classes.len(), r.stoich_dimension, r.deficiency), (2, 1, 1, 0));
        assert!(r.weakly_reversible);
        assert!(!r.conservative);
        assert_eq!(certify_complex_balance(&net, None), ComplexBalanceCertificate::AllRateConstants);
    }

    #[test]
    fn single_irreversible_reaction() {
        let net = parse_network("A -> B @ ma(1)").unwrap();
        let r = analyze_structure(&net);
        assert_eq!(r.deficiency, 0);
        assert!(!r.weakly_reversible);
        assert_eq!(r.positive_conservation_law, Some(vec![1, 1]));
        let net = parse_network("A -> 2A @ ma(1)").unwrap();
        assert!(!analyze_structure(&net).conservative);
    }

    #[test]
    fn chain_with_balanced_ratios_is_complex_balanced() {
        // 0 <-> A <-> 2A with k1/k2 = k3/k4.
        let net = parse_network("0 <-> A @ ma(4, 2)\nA <-> 2A @ ma(2, 1)").unwrap();
        assert!(analyze_structure(&net).deficiency > 0);
        assert!(matches!(certify_complex_balance(&net, None), ComplexBalanceCertificate::AtEquilibrium { .. }));
        let net = parse_network("0 <-> A @ ma(4, 2)\nA <-> 2A @ ma(3, 1)").unwrap();
        assert!(!certify_complex_balance(&net, None).holds());
    }

    #[test]
    fn dimerization_sink_is_not_complex_balanced() {
        let net = parse_network("2A -> 0 @ ma(1)\n0 -> A @ ma(8)").unwrap();
        assert!(!certify_complex_balance(&net, None).holds());
    }
}

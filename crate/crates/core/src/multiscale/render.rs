//! Text form of the reductions with symbolic rates where the rate laws
//! allow it.

use serde::Serialize;

use crate::model::{Complex, Expr, RateLaw};
use crate::symbolic::{RatFn, Sym, SymNames};

use super::reduction::{Averaging, ContinuousReduction, DiscreteReduction, ReducedReaction};

/// Placeholder for rates with no symbolic form.
const NUMERIC: &str = "<numeric>";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RenderedReductions {
    pub discrete_species: Vec<String>,
    pub continuous_species: Vec<String>,
    pub discrete_system: Vec<String>,
    /// `q_d^w` per discrete species, empty for stationary averaging.
    pub equilibrium: Vec<String>,
    pub continuous_system: Vec<String>,
}

impl RenderedReductions {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[String]| if v.is_empty() { "(none)".to_string() } else { v.join(", ") };
        s.push_str(&format!("discrete species: {}\n", list(&self.discrete_species)));
        s.push_str(&format!("continuous species: {}\n", list(&self.continuous_species)));
        s.push_str("discrete system at w:\n");
        for l in &self.discrete_system {
            s.push_str(&format!("  {l}\n"));
        }
        if !self.equilibrium.is_empty() {
            s.push_str("complex-balanced equilibrium q_d^w:\n");
            for l in &self.equilibrium {
                s.push_str(&format!("  {l}\n"));
            }
        }
        if !self.continuous_system.is_empty() {
            s.push_str("continuous system:\n");
            for l in &self.continuous_system {
                s.push_str(&format!("  {l}\n"));
            }
        }
        s
    }
}

struct Symbols<'a> {
    d: &'a DiscreteReduction,
    names: SymNames,
}

impl<'a> Symbols<'a> {
    fn new(d: &'a DiscreteReduction) -> Self {
        let net = &d.spec.network;
        Self {
            d,
            names: SymNames {
                constants: net.constants().iter().map(|(n, _)| n.clone()).collect(),
                species: net.species_names(),
                single_w: d.continuous.len() == 1,
            },
        }
    }

    fn from_expr(&self, e: &Expr) -> Option<RatFn> {
        let alpha = &self.d.spec.alpha;
        let consts = &self.names.constants;
        RatFn::from_expr(e, &|i| if alpha[i] == 0 { Sym::V(i) } else { Sym::W(i) }, &|name| {
            consts.iter().position(|c| c == name).map(Sym::Const)
        })
    }

    /// `kappa_r(w)` symbolically.
    fn kappa(&self, r: usize) -> Option<RatFn> {
        let spec = &self.d.spec;
        let rx = &spec.network.reactions()[r];
        match &rx.rate {
            RateLaw::MassAction { expr, .. } => {
                let mut k = self.from_expr(expr)?;
                for (i, c) in rx.source.iter() {
                    if spec.alpha[i] == 1 {
                        k = k.mul(&RatFn::sym(Sym::W(i)).powi(c as i32));
                    }
                }
                Some(k)
            }
            RateLaw::Expression(law) => {
                if spec.has_numeric_limit(r) {
                    return None;
                }
                let limit = self.from_expr(law.limit.as_ref()?)?;
                let y: Vec<(usize, u32)> = rx.source.iter().filter(|&(i, _)| spec.alpha[i] == 0).collect();
                limit.factor_out_v(&y)
            }
        }
    }

    fn sum(&self, preimages: &[usize], term: impl Fn(usize) -> Option<RatFn>) -> Option<RatFn> {
        let mut acc = RatFn::constant(0.0);
        for &r in preimages {
            acc = acc.add(&term(r)?);
        }
        Some(acc)
    }

    fn render(&self, f: Option<RatFn>) -> String {
        f.map_or_else(|| NUMERIC.to_string(), |f| f.render(&self.names))
    }
}

/// Formats reactions, merging reverse pairs into `S <=> P [f] [b]` and
/// same-source pairs with equal rates into `P1 <- S -> P2 [r]`.
fn format_reactions(reactions: &[ReducedReaction], rates: &[String], names: &[String]) -> Vec<String> {
    let mut used = vec![false; reactions.len()];
    let mut out = Vec::new();
    let c = |x: &Complex| x.render(names);
    for i in 0..reactions.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let (ri, ref_i) = (&reactions[i], &rates[i]);
        if let Some(j) = (i + 1..reactions.len())
            .find(|&j| !used[j] && reactions[j].source == ri.product && reactions[j].product == ri.source)
        {
            used[j] = true;
            out.push(format!("{} <=> {} [{}] [{}]", c(&ri.source), c(&ri.product), ref_i, rates[j]));
            continue;
        }
        if let Some(j) =
            (i + 1..reactions.len()).find(|&j| !used[j] && reactions[j].source == ri.source && rates[j] == *ref_i)
        {
            used[j] = true;
            let (a, b) = (&ri.product, &reactions[j].product);
            let (left, right) = if b.order() < a.order() { (b, a) } else { (a, b) };
            out.push(format!("{} <- {} -> {} [{}]", c(left), c(&ri.source), c(right), ref_i));
            continue;
        }
        out.push(format!("{} -> {} [{}]", c(&ri.source), c(&ri.product), ref_i));
    }
    out
}

/// Renders the discrete system alone, for when the continuous system
/// cannot be built.
pub fn render_discrete(d: &DiscreteReduction) -> RenderedReductions {
    let sy = Symbols::new(d);
    let rates: Vec<String> = d.reactions.iter().map(|rr| sy.render(sy.sum(&rr.preimages, |r| sy.kappa(r)))).collect();
    let names = d.spec.network.species_names();
    RenderedReductions {
        discrete_species: d.species_names(),
        continuous_species: d.continuous.iter().map(|&i| names[i].clone()).collect(),
        discrete_system: format_reactions(&d.reactions, &rates, &d.species_names()),
        equilibrium: Vec::new(),
        continuous_system: Vec::new(),
    }
}

/// Renders both reductions. `q_d^w` is written from the highest adjacent
/// pair of each birth-death chain.
pub fn render_reductions(c: &ContinuousReduction) -> RenderedReductions {
    let d = &c.discrete;
    let sy = Symbols::new(d);
    let mut out = render_discrete(d);
    let dnames = d.species_names();

    let q: Option<Vec<Option<RatFn>>> = match c.averaging {
        Averaging::ComplexBalanced => c.chain_pairs().map(|pairs| {
            pairs
                .iter()
                .map(|&(u, dn)| {
                    let up = sy.sum(&d.reactions[u].preimages, |r| sy.kappa(r))?;
                    let down = sy.sum(&d.reactions[dn].preimages, |r| sy.kappa(r))?;
                    Some(up.div(&down))
                })
                .collect()
        }),
        Averaging::Stationary(_) => None,
    };
    if let Some(q) = &q {
        out.equilibrium = q.iter().zip(&dnames).map(|(qi, n)| format!("{n} = {}", sy.render(qi.clone()))).collect();
    } else if let Averaging::ComplexBalanced = c.averaging {
        out.equilibrium = dnames.iter().map(|n| format!("{n} = {NUMERIC}")).collect();
    }

    let rates: Vec<String> = c
        .reactions
        .iter()
        .map(|rr| match (&c.averaging, &q) {
            (Averaging::ComplexBalanced, Some(q)) => sy.render(sy.sum(&rr.preimages, |r| {
                let mut term = sy.kappa(r)?;
                for (j, e) in d.discrete_source(r).iter() {
                    term = term.mul(&q[j].clone()?.powi(e as i32));
                }
                Some(term)
            })),
            (Averaging::Stationary(_), _) => rr
                .preimages
                .iter()
                .map(|&r| {
                    let k = sy.render(sy.kappa(r));
                    let y = d.discrete_source(r);
                    if y.is_zero() {
                        k
                    } else {
                        format!("{k}*E[{}]", falling_factorial_text(&y, &dnames))
                    }
                })
                .collect::<Vec<_>>()
                .join(" + "),
            _ => NUMERIC.to_string(),
        })
        .collect();
    out.continuous_system = format_reactions(&c.reactions, &rates, &c.species_names());
    out
}

/// `A*(A-1)*B` for the falling factorial of a complex.
fn falling_factorial_text(y: &Complex, names: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, c) in y.iter() {
        for k in 0..c {
            parts.push(if k == 0 { names[i].clone() } else { format!("({}-{k})", names[i]) });
        }
    }
    parts.join("*")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_network;
    use crate::multiscale::ScalingSpec;

    fn reduce(src: &str, discrete: &[&str], x0: &[(&str, f64)]) -> RenderedReductions {
        let spec = ScalingSpec::with_discrete(parse_network(src).unwrap(), discrete, x0, vec![10]).unwrap();
        let d = DiscreteReduction::build(&spec).unwrap();
        render_reductions(&ContinuousReduction::build(&d, Averaging::ComplexBalanced).unwrap())
    }

    #[test]
    fn simple_network_lines() {
        let r =
            reduce("let k1 = 1\nlet k2 = 2\nA + B -> 2B @ ma(k1)\nB -> A @ ma(k2)", &["A"], &[("A", 2.0), ("B", 1.0)]);
        assert_eq!(r.discrete_system, vec!["A <=> 0 [k1*w] [k2*w]"]);
        assert_eq!(r.equilibrium, vec!["A = k2/k1"]);
        assert_eq!(r.continuous_system, vec!["0 <- B -> 2B [k2*w]"]);
    }

    #[test]
    fn stationary_rates_show_expectations() {
        let spec = ScalingSpec::with_discrete(
            parse_network("let k1 = 1\nlet k2 = 8\n2A + B -> 3B @ ma(k1)\nB -> A @ ma(k2)").unwrap(),
            &["A"],
            &[("A", 2.0), ("B", 1.0)],
            vec![10],
        )
        .unwrap();
        let d = DiscreteReduction::build(&spec).unwrap();
        let c = ContinuousReduction::build(&d, Averaging::Stationary(Default::default())).unwrap();
        let r = render_reductions(&c);
        assert_eq!(r.discrete_system, vec!["2A -> 0 [k1*w]", "0 -> A [k2*w]"]);
        assert_eq!(r.continuous_system, vec!["B -> 3B [k1*w*E[A*(A-1)]]", "B -> 0 [k2*w]"]);
    }
}

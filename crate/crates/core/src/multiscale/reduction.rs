//! The reduced discrete system at frozen continuous concentrations and
//! the averaged continuous system.

use std::collections::BTreeMap;

use crate::dynamics::ode::{integrate, OdeError, OdeOptions, OdeSolution};
use crate::equilibria::{find_positive_equilibrium, EquilibriumOptions};
use crate::model::{falling_factorial_f64, Complex, RateLaw, Reaction, ReactionNetwork};
use crate::statistics::{truncated_stationary, StationaryOptions};
use crate::structural::{certify_at_equilibrium, ComplexBalanceCertificate};

use super::{ScalingError, ScalingSpec};

/// Relative tolerance of the multiplicativity check for declared limits.
const FACTOR_TOL: f64 = 1e-9;
/// The same for limits evaluated at a large `N`.
const FACTOR_TOL_NUMERIC: f64 = 1e-6;
/// Relative disagreement tolerated between adjacent-pair ratios of a chain.
const CHAIN_TOL: f64 = 1e-8;

/// A reduced reaction and the original reactions collapsed into it.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedReaction {
    /// Complexes over the reduced species, in local indices.
    pub source: Complex,
    pub product: Complex,
    pub preimages: Vec<usize>,
}

/// Groups projected reactions by `(source, product)` in first-appearance
/// order, dropping trivial projections.
fn group(projected: impl Iterator<Item = (usize, Complex, Complex)>) -> Vec<ReducedReaction> {
    let mut out: Vec<ReducedReaction> = Vec::new();
    let mut index: BTreeMap<(Complex, Complex), usize> = BTreeMap::new();
    for (r, s, p) in projected {
        if s == p {
            continue;
        }
        match index.get(&(s.clone(), p.clone())) {
            Some(&k) => out[k].preimages.push(r),
            None => {
                index.insert((s.clone(), p.clone()), out.len());
                out.push(ReducedReaction { source: s, product: p, preimages: vec![r] });
            }
        }
    }
    out
}

fn local_map(species: &[usize], n: usize) -> Vec<Option<usize>> {
    let mut m = vec![None; n];
    for (k, &i) in species.iter().enumerate() {
        m[i] = Some(k);
    }
    m
}

/// `w` probes: the diagonal `{0.5, 1, 2}` plus three fixed off-diagonal points.
fn probe_ws(nc: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = [0.5, 1.0, 2.0].iter().map(|&c| vec![c; nc]).collect();
    for shift in 0..3 {
        out.push((0..nc).map(|i| [0.6, 1.3, 1.9, 0.8][(i + shift) % 4]).collect());
    }
    out
}

/// The discrete system at frozen continuous concentrations `w`.
#[derive(Clone, Debug)]
pub struct DiscreteReduction {
    pub spec: ScalingSpec,
    /// Discrete species, as indices into the full network.
    pub species: Vec<usize>,
    pub continuous: Vec<usize>,
    pub reactions: Vec<ReducedReaction>,
    /// Original reactions with a continuous species in their source.
    pub fast: Vec<usize>,
}

impl DiscreteReduction {
    /// Projects every reaction with a continuous species in its source onto
    /// the discrete species and groups them; checks that each limiting rate
    /// factors as `kappa_r(w) v!/(v - pi_d(y_r))!`.
    pub fn build(spec: &ScalingSpec) -> Result<Self, ScalingError> {
        let species = spec.discrete();
        let continuous = spec.continuous();
        let n = spec.network.num_species();
        let dmap = local_map(&species, n);
        let fast: Vec<usize> = spec
            .network
            .reactions()
            .iter()
            .enumerate()
            .filter(|(_, rx)| rx.source.iter().any(|(i, _)| spec.alpha[i] == 1))
            .map(|(r, _)| r)
            .collect();
        let reactions = group(fast.iter().map(|&r| {
            let rx = &spec.network.reactions()[r];
            (r, rx.source.project(|i| dmap[i]), rx.product.project(|i| dmap[i]))
        }));
        let red = Self { spec: spec.clone(), species, continuous, reactions, fast };
        red.check_factorization()?;
        Ok(red)
    }

    pub fn species_names(&self) -> Vec<String> {
        let names = self.spec.network.species_names();
        self.species.iter().map(|&i| names[i].clone()).collect()
    }

    /// Full-length vector with `v` on discrete and `w` on continuous species.
    pub fn mixed(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.spec.network.num_species()];
        for (&i, &x) in self.species.iter().zip(v) {
            m[i] = x;
        }
        for (&i, &x) in self.continuous.iter().zip(w) {
            m[i] = x;
        }
        m
    }

    /// `pi_d(y_r)` in local discrete indices.
    pub fn discrete_source(&self, r: usize) -> Complex {
        let dmap = local_map(&self.species, self.spec.network.num_species());
        self.spec.network.reactions()[r].source.project(|i| dmap[i])
    }

    /// `kappa_r(w)`: symbolic for mass action, otherwise the limiting rate
    /// at `v = pi_d(y_r)` divided by the falling factorial there.
    pub fn kappa(&self, r: usize, w: &[f64]) -> f64 {
        let rx = &self.spec.network.reactions()[r];
        match &rx.rate {
            RateLaw::MassAction { kappa, .. } => {
                let mut acc = *kappa;
                for (k, &i) in self.continuous.iter().enumerate() {
                    let c = rx.source.coefficient(i);
                    if c > 0 {
                        acc *= w[k].powi(c as i32);
                    }
                }
                acc
            }
            RateLaw::Expression(_) => {
                let y = self.discrete_source(r);
                let v = y.to_dense(self.species.len()).iter().map(|&c| f64::from(c)).collect::<Vec<_>>();
                let ff = falling_factorial_f64(&v, &y);
                self.spec.limit_rate(r, &self.mixed(&v, w)) / ff
            }
        }
    }

    fn check_factorization(&self) -> Result<(), ScalingError> {
        let nd = self.species.len();
        for &r in &self.fast {
            if self.spec.network.reactions()[r].rate.is_mass_action() {
                continue;
            }
            let tol = if self.spec.has_numeric_limit(r) { FACTOR_TOL_NUMERIC } else { FACTOR_TOL };
            let y = self.discrete_source(r);
            let base: Vec<f64> = y.to_dense(nd).iter().map(|&c| f64::from(c)).collect();
            let mut others: Vec<Vec<f64>> =
                vec![base.iter().map(|v| v + 1.0).collect(), base.iter().map(|v| v + 3.0).collect()];
            if nd > 0 {
                let mut v = base.clone();
                v[0] += 5.0;
                others.push(v);
            }
            for w in probe_ws(self.continuous.len()) {
                let k = self.kappa(r, &w);
                if !(k.is_finite() && k > 0.0) {
                    return Err(ScalingError::NotFactorable {
                        reaction: r,
                        detail: format!("kappa_r(w) = {k} at w = {w:?} is not positive"),
                    });
                }
                for v in &others {
                    let lambda = self.spec.limit_rate(r, &self.mixed(v, &w));
                    let predicted = k * falling_factorial_f64(v, &y);
                    if (lambda - predicted).abs() > tol * (1.0 + lambda.abs()) {
                        return Err(ScalingError::NotFactorable {
                            reaction: r,
                            detail: format!(
                                "limiting rate {lambda} at v = {v:?}, w = {w:?} is not kappa_r(w) times the falling factorial ({predicted})"
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// `lambda^w_{d,k}(v)`: the sum of the preimages' limiting rates.
    pub fn rate(&self, k: usize, v: &[f64], w: &[f64]) -> f64 {
        let m = self.mixed(v, w);
        self.reactions[k].preimages.iter().map(|&r| self.spec.limit_rate(r, &m)).sum()
    }

    /// Mass-action constant of reduced reaction `k` at `w`.
    pub fn rate_constant(&self, k: usize, w: &[f64]) -> f64 {
        self.reactions[k].preimages.iter().map(|&r| self.kappa(r, w)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    /// The reduced system at `w` as a mass-action network over the discrete
    /// species; `None` when it has no reactions.
    pub fn network_at(&self, w: &[f64]) -> Result<Option<ReactionNetwork>, ScalingError> {
        if self.reactions.is_empty() {
            return Ok(None);
        }
        let nd = self.species.len();
        let reactions = (0..self.reactions.len())
            .map(|k| {
                let rr = &self.reactions[k];
                Reaction::new(rr.source.clone(), rr.product.clone(), RateLaw::mass_action(self.rate_constant(k, w)), nd)
            })
            .collect();
        Ok(Some(ReactionNetwork::new_allow_unused(self.species_names(), reactions, Vec::new())?))
    }

    /// Independent single-species chains `m e_i <-> (m+1) e_i`, if the
    /// reduced system has that shape: per species, the adjacent pairs
    /// `(m, up reaction, down reaction)` sorted by `m`.
    pub fn chains(&self) -> Option<Vec<Vec<(u32, usize, usize)>>> {
        let nd = self.species.len();
        let mut ups: Vec<BTreeMap<u32, usize>> = vec![BTreeMap::new(); nd];
        let mut downs: Vec<BTreeMap<u32, usize>> = vec![BTreeMap::new(); nd];
        for (k, rr) in self.reactions.iter().enumerate() {
            let support: Vec<usize> = rr.source.iter().chain(rr.product.iter()).map(|(i, _)| i).collect();
            let i = *support.first()?;
            if support.iter().any(|&j| j != i) {
                return None;
            }
            let (s, p) = (rr.source.coefficient(i), rr.product.coefficient(i));
            if p == s + 1 {
                ups[i].insert(s, k);
            } else if s == p + 1 {
                downs[i].insert(p, k);
            } else {
                return None;
            }
        }
        let mut out = Vec::with_capacity(nd);
        for i in 0..nd {
            if ups[i].is_empty() || ups[i].keys().ne(downs[i].keys()) {
                return None;
            }
            out.push(ups[i].iter().map(|(&m, &u)| (m, u, downs[i][&m])).collect());
        }
        Some(out)
    }
}

/// How the discrete species are averaged in the continuous system.
#[derive(Clone, Debug)]
pub enum Averaging {
    /// `kappa_r(w) (q_d^w)^{pi_d(y_r)}` at the complex-balanced equilibrium.
    ComplexBalanced,
    /// `E_mu[lambda_r(v, w)]` under the stationary law of the discrete
    /// system, for systems that are not complex balanced.
    Stationary(StationaryOptions),
}

/// The continuous system with discrete species averaged out.
#[derive(Clone, Debug)]
pub struct ContinuousReduction {
    pub discrete: DiscreteReduction,
    /// Continuous species, as indices into the full network.
    pub species: Vec<usize>,
    /// Complexes in local continuous indices.
    pub reactions: Vec<ReducedReaction>,
    pub averaging: Averaging,
    chains: Option<Vec<Vec<(u32, usize, usize)>>>,
}

impl ContinuousReduction {
    /// Groups the fast reactions by their continuous projections and checks
    /// that the averaging is computable at the probe concentrations.
    pub fn build(discrete: &DiscreteReduction, averaging: Averaging) -> Result<Self, ScalingError> {
        let spec = &discrete.spec;
        if let Averaging::Stationary(_) = averaging {
            if discrete.species.len() > 2 {
                return Err(ScalingError::AveragingDimension(discrete.species.len()));
            }
        }
        let cmap = local_map(&discrete.continuous, spec.network.num_species());
        let reactions = group(discrete.fast.iter().map(|&r| {
            let rx = &spec.network.reactions()[r];
            (r, rx.source.project(|i| cmap[i]), rx.product.project(|i| cmap[i]))
        }));
        let red = Self {
            discrete: discrete.clone(),
            species: discrete.continuous.clone(),
            reactions,
            averaging,
            chains: discrete.chains(),
        };
        let mut scratch = vec![0.0; red.reactions.len()];
        for w in probe_ws(red.species.len()) {
            red.rates(&w, &mut scratch)?;
        }
        Ok(red)
    }

    pub fn species_names(&self) -> Vec<String> {
        let names = self.discrete.spec.network.species_names();
        self.species.iter().map(|&i| names[i].clone()).collect()
    }

    /// The highest adjacent pair of each chain, which the symbolic form
    /// uses for `q_d^w`.
    pub fn chain_pairs(&self) -> Option<Vec<(usize, usize)>> {
        self.chains.as_ref().map(|c| c.iter().map(|pairs| pairs.last().map(|&(_, u, d)| (u, d)).unwrap()).collect())
    }

    /// `q_d^w`, the complex-balanced equilibrium of the discrete system.
    pub fn discrete_equilibrium(&self, w: &[f64]) -> Result<Vec<f64>, ScalingError> {
        let d = &self.discrete;
        if d.species.is_empty() {
            return Ok(Vec::new());
        }
        if let Some(chains) = &self.chains {
            let mut q = Vec::with_capacity(chains.len());
            for pairs in chains {
                let ratios: Vec<f64> =
                    pairs.iter().map(|&(_, u, dn)| d.rate_constant(u, w) / d.rate_constant(dn, w)).collect();
                let top = *ratios.last().expect("non-empty chain");
                if let Some(bad) = ratios.iter().find(|&&r| (r - top).abs() > CHAIN_TOL * top.abs()) {
                    return Err(ScalingError::NotComplexBalanced {
                        w: w.to_vec(),
                        detail: format!("adjacent pairs give ratios {bad} and {top}"),
                    });
                }
                if !(top.is_finite() && top > 0.0) {
                    return Err(ScalingError::NotComplexBalanced {
                        w: w.to_vec(),
                        detail: format!("equilibrium ratio {top} is not positive"),
                    });
                }
                q.push(top);
            }
            return Ok(q);
        }
        let net = d.network_at(w)?.ok_or_else(|| ScalingError::NotComplexBalanced {
            w: w.to_vec(),
            detail: "discrete system has no reactions".into(),
        })?;
        let anchor = vec![1.0; d.species.len()];
        let eq = find_positive_equilibrium(&net, &anchor, &EquilibriumOptions::default()).ok_or_else(|| {
            ScalingError::NotComplexBalanced { w: w.to_vec(), detail: "no positive equilibrium found".into() }
        })?;
        let cert = certify_at_equilibrium(&net, Some(&eq.concentrations));
        if let ComplexBalanceCertificate::NotComplexBalanced { witness_complex, residual, .. } = cert {
            let names = d.species_names();
            let witness = witness_complex.map_or("no complex".to_string(), |c| net.complexes()[c].render(&names));
            return Err(ScalingError::NotComplexBalanced {
                w: w.to_vec(),
                detail: format!("complex {witness} has relative imbalance {residual:.3} at the equilibrium"),
            });
        }
        Ok(eq.concentrations)
    }

    /// Per fast reaction (in the order of `discrete.fast`), the averaged
    /// discrete factor: `q^{pi_d(y_r)}` or `E_mu[v!/(v - pi_d(y_r))!]`.
    pub fn discrete_factors(&self, w: &[f64]) -> Result<Vec<f64>, ScalingError> {
        let d = &self.discrete;
        let sources: Vec<Complex> = d.fast.iter().map(|&r| d.discrete_source(r)).collect();
        match &self.averaging {
            Averaging::ComplexBalanced => {
                let q = self.discrete_equilibrium(w)?;
                Ok(sources.iter().map(|y| crate::model::monomial(&q, y)).collect())
            }
            Averaging::Stationary(opts) => {
                let Some(net) = d.network_at(w)? else {
                    return Ok(vec![1.0; sources.len()]);
                };
                let mu = truncated_stationary(&net, opts)?;
                Ok(sources
                    .iter()
                    .map(|y| {
                        mu.expectation(|x| {
                            let v: Vec<f64> = x.iter().map(|&c| c as f64).collect();
                            falling_factorial_f64(&v, y)
                        })
                    })
                    .collect())
            }
        }
    }

    /// `lambda_{c,k}(w)` for every reduced continuous reaction.
    pub fn rates(&self, w: &[f64], out: &mut [f64]) -> Result<(), ScalingError> {
        let d = &self.discrete;
        let factors = self.discrete_factors(w)?;
        let pos: BTreeMap<usize, usize> = d.fast.iter().enumerate().map(|(k, &r)| (r, k)).collect();
        for (o, rr) in out.iter_mut().zip(&self.reactions) {
            *o = rr.preimages.iter().map(|r| d.kappa(*r, w) * factors[pos[r]]).sum();
        }
        Ok(())
    }

    /// `z' = sum_k (y'_k - y_k) lambda_{c,k}(z)`.
    pub fn rhs(&self, w: &[f64], out: &mut [f64]) -> Result<(), ScalingError> {
        let mut rates = vec![0.0; self.reactions.len()];
        self.rates(w, &mut rates)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (rr, rate) in self.reactions.iter().zip(&rates) {
            for (i, c) in rr.product.iter() {
                out[i] += f64::from(c) * rate;
            }
            for (i, c) in rr.source.iter() {
                out[i] -= f64::from(c) * rate;
            }
        }
        Ok(())
    }

    /// Integrates the continuous system from `z0` on `[0, t_end]`.
    pub fn integrate(&self, z0: &[f64], t_end: f64, opts: &OdeOptions) -> Result<OdeSolution, OdeError> {
        integrate(
            |t, z, out| {
                // Outside the positive orthant the averaging is undefined;
                // the step is rejected and retried smaller.
                if z.iter().any(|&v| v <= 0.0) {
                    return Err(OdeError::Rhs { t, message: "left the positive orthant".into() });
                }
                self.rhs(z, out).map_err(|e| OdeError::Rhs { t, message: e.to_string() })
            },
            z0,
            0.0,
            t_end,
            opts,
        )
    }

    /// `pi_c(X0)`.
    pub fn initial_concentrations(&self) -> Vec<f64> {
        self.species.iter().map(|&i| self.discrete.spec.x0[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_network;

    fn spec(src: &str, discrete: &[&str], x0: &[(&str, f64)]) -> ScalingSpec {
        ScalingSpec::with_discrete(parse_network(src).unwrap(), discrete, x0, vec![100]).unwrap()
    }

    #[test]
    fn simple_network_reduces_to_birth_death() {
        let s = spec("A + B -> 2B @ ma(1)\nB -> A @ ma(2)", &["A"], &[("A", 2.0), ("B", 1.0)]);
        let d = DiscreteReduction::build(&s).unwrap();
        assert_eq!(d.reactions.len(), 2);
        assert_eq!(d.reactions[0].source, Complex::from_pairs([(0, 1)]));
        assert!(d.reactions[0].product.is_zero());
        assert_eq!(d.rate_constant(0, &[3.0]), 3.0);
        assert_eq!(d.rate_constant(1, &[3.0]), 6.0);
        let c = ContinuousReduction::build(&d, Averaging::ComplexBalanced).unwrap();
        assert_eq!(c.discrete_equilibrium(&[3.0]).unwrap(), vec![2.0]);
        let mut out = vec![0.0; 2];
        for w in [0.5, 1.0, 7.0] {
            c.rates(&[w], &mut out).unwrap();
            assert!((out[0] - 2.0 * w).abs() < 1e-12 && (out[1] - 2.0 * w).abs() < 1e-12);
        }
        let sol = c.integrate(&[1.0], 5.0, &OdeOptions::default()).unwrap();
        assert!((sol.final_state()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collapse_sums_preimage_rates() {
        let s = spec(
            "A + B -> 2B @ ma(1)\nB -> A @ ma(2)\n2B -> A + 2B @ ma(3)\nA + 2B -> 2B @ ma(4)",
            &["A"],
            &[("A", 1.0), ("B", 1.0)],
        );
        let d = DiscreteReduction::build(&s).unwrap();
        assert_eq!(d.reactions.len(), 2);
        assert_eq!(d.reactions[0].preimages, vec![0, 3]);
        assert_eq!(d.reactions[1].preimages, vec![1, 2]);
        let w = 2.0;
        assert!((d.rate_constant(0, &[w]) - (w + 4.0 * w * w)).abs() < 1e-12);
        assert!((d.rate_constant(1, &[w]) - (2.0 * w + 3.0 * w * w)).abs() < 1e-12);
        // Reduced rates are the preimage sums at every probe.
        for v in 0..5 {
            let m = d.mixed(&[f64::from(v)], &[w]);
            let direct: f64 = d.reactions[0].preimages.iter().map(|&r| s.limit_rate(r, &m)).sum();
            assert_eq!(d.rate(0, &[f64::from(v)], &[w]), direct);
        }
    }

    #[test]
    fn non_mass_action_limit_factors() {
        let s = spec(
            "let k0 = 1\nlet k1 = 1\nlet k2 = 1\nlet k3 = 1\n\
             A + 2B -> 3B @ expr(k0*x[A]*x[B]*(x[B]-1)/(1+x[B])) scale N^0 limit(k0*x[A]*x[B])\n\
             B <-> C @ ma(k1, k2)\nC -> A @ ma(k3)",
            &["A"],
            &[("A", 1.0), ("B", 1.0), ("C", 1.0)],
        );
        let d = DiscreteReduction::build(&s).unwrap();
        assert!((d.kappa(0, &[2.0, 3.0]) - 2.0).abs() < 1e-12);
        let c = ContinuousReduction::build(&d, Averaging::ComplexBalanced).unwrap();
        // q = k3 w_C / (k0 w_B)
        assert!((c.discrete_equilibrium(&[2.0, 3.0]).unwrap()[0] - 1.5).abs() < 1e-12);
        // Equivalent to B <-> C with (k1, k2 + k3): total conserved, ratio C/B -> 1/2.
        let sol = c.integrate(&[1.0, 2.0], 40.0, &OdeOptions::default()).unwrap();
        let z = sol.final_state();
        assert!((z[0] - 2.0).abs() < 1e-6 && (z[1] - 1.0).abs() < 1e-6, "{z:?}");
    }

    #[test]
    fn non_factorable_rate_is_reported() {
        let s = spec(
            "A + B -> B @ expr(x[A]*x[A]*x[B]) scale N^0 limit(x[A]*x[A]*x[B])\n0 -> A @ ma(1)\nB -> 2B @ ma(1)",
            &["A"],
            &[("A", 1.0), ("B", 1.0)],
        );
        assert!(matches!(DiscreteReduction::build(&s), Err(ScalingError::NotFactorable { reaction: 0, .. })));
    }

    #[test]
    fn double_death_needs_stationary_averaging() {
        let s = spec("2A + B -> 3B @ ma(1)\nB -> A @ ma(8)", &["A"], &[("A", 2.0), ("B", 1.0)]);
        let d = DiscreteReduction::build(&s).unwrap();
        assert!(matches!(
            ContinuousReduction::build(&d, Averaging::ComplexBalanced),
            Err(ScalingError::NotComplexBalanced { .. })
        ));
        let c = ContinuousReduction::build(&d, Averaging::Stationary(StationaryOptions::default())).unwrap();
        let mut out = vec![0.0];
        c.rhs(&[1.5], &mut out).unwrap();
        assert!(out[0].abs() < 1e-8, "{out:?}");
    }

    #[test]
    fn two_level_chain_uses_consistent_ratio() {
        // 0 <-> A <-> 2A with k1/k2 = k3/k4
        let s = spec(
            "A + B -> 2A + C @ ma(2)\n2A + C -> A + D @ ma(1)\nB -> A + D @ ma(4)\nA + C -> B @ ma(2)\nD -> B @ ma(1)\nD -> C @ ma(1)",
            &["A"],
            &[("A", 2.0), ("B", 1.0), ("C", 1.0), ("D", 4.0)],
        );
        let d = DiscreteReduction::build(&s).unwrap();
        let c = ContinuousReduction::build(&d, Averaging::ComplexBalanced).unwrap();
        let q = c.discrete_equilibrium(&[1.0, 1.0, 4.0]).unwrap();
        assert!((q[0] - 2.0).abs() < 1e-12);
        let mut out = vec![0.0; 3];
        c.rhs(&[1.0, 1.0, 4.0], &mut out).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-12), "{out:?}");
    }
}

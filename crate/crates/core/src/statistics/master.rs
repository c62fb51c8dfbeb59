//! Master-equation oracles on box-truncated lattices. Transitions leaving
//! the box are suppressed (reflecting truncation); the probability mass on
//! the outer faces is reported as leakage.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;
use statrs::distribution::{Discrete, Poisson};

use super::{DiscreteDistribution, StatisticsError};
use crate::model::ReactionNetwork;

/// Lattice side used by [`lattice_irreducible`].
pub const IRREDUCIBILITY_BOUND: u64 = 200;

const MAX_LATTICE_STATES: u128 = 5_000_000;

struct Lattice {
    caps: Vec<u64>,
    strides: Vec<usize>,
    size: usize,
}

impl Lattice {
    fn new(caps: &[u64]) -> Result<Self, StatisticsError> {
        let states: u128 = caps.iter().map(|&c| u128::from(c) + 1).product();
        if states > MAX_LATTICE_STATES {
            return Err(StatisticsError::TooManyStates { states });
        }
        let mut strides = Vec::with_capacity(caps.len());
        let mut s = 1usize;
        for &c in caps {
            strides.push(s);
            s *= c as usize + 1;
        }
        Ok(Self { caps: caps.to_vec(), strides, size: s })
    }

    fn state(&self, mut i: usize) -> Vec<u64> {
        self.caps
            .iter()
            .map(|&c| {
                let w = c as usize + 1;
                let v = i % w;
                i /= w;
                v as u64
            })
            .collect()
    }

    fn index(&self, x: &[u64]) -> usize {
        x.iter().zip(&self.strides).map(|(&v, &s)| v as usize * s).sum()
    }

    fn on_boundary(&self, x: &[u64]) -> bool {
        x.iter().zip(&self.caps).any(|(v, c)| v == c)
    }

    /// In-box transitions `(from, to, rate)` and total in-box exit rates.
    fn transitions(&self, net: &ReactionNetwork) -> Result<(Vec<(usize, usize, f64)>, Vec<f64>), StatisticsError> {
        let mut edges = Vec::new();
        let mut out = vec![0.0; self.size];
        for s in 0..self.size {
            let x = self.state(s);
            for (r, rx) in net.reactions().iter().enumerate() {
                if !rx.enabled(&x) {
                    continue;
                }
                let rate = net.evaluate_rate(r, &x)?;
                if rate <= 0.0 {
                    continue;
                }
                let mut y = x.clone();
                let inside = y.iter_mut().zip(rx.reaction_vector()).zip(&self.caps).all(|((v, &d), &c)| {
                    let t = *v as i64 + d;
                    *v = t.max(0) as u64;
                    t >= 0 && t as u64 <= c
                });
                if inside {
                    edges.push((s, self.index(&y), rate));
                    out[s] += rate;
                }
            }
        }
        Ok((edges, out))
    }

    fn distribution(&self, probs: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new((0..self.size).map(|s| self.state(s)).collect(), probs.to_vec())
    }

    fn boundary_mass(&self, probs: &[f64]) -> f64 {
        (0..self.size).filter(|&s| self.on_boundary(&self.state(s))).map(|s| probs[s]).sum()
    }
}

#[derive(Clone, Debug)]
pub struct StationaryOptions {
    pub initial_cap: u64,
    /// Per-coordinate cap limit for one and two discrete species.
    pub max_cap_1d: u64,
    pub max_cap_2d: u64,
    pub leakage_tol: f64,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self { initial_cap: 32, max_cap_1d: 1 << 14, max_cap_2d: 128, leakage_tol: 1e-8 }
    }
}

/// Stationary law of a discrete network on a truncated lattice.
#[derive(Clone, Debug, Serialize)]
pub struct TruncatedStationary {
    pub caps: Vec<u64>,
    /// Probability mass on the outer faces of the box.
    pub leakage: f64,
    /// `||mu Q||_1` for the truncated generator.
    pub residual: f64,
    #[serde(skip)]
    distribution: DiscreteDistribution,
}

impl TruncatedStationary {
    pub fn distribution(&self) -> &DiscreteDistribution {
        &self.distribution
    }

    pub fn expectation(&self, g: impl Fn(&[u64]) -> f64) -> f64 {
        self.distribution.expectation(g)
    }
}

/// Solves `mu Q = 0` with `mu(0) = 1` and normalizes. The cap doubles
/// until the boundary mass falls below the tolerance.
pub fn truncated_stationary(
    net: &ReactionNetwork,
    opts: &StationaryOptions,
) -> Result<TruncatedStationary, StatisticsError> {
    let d = net.num_species();
    let max_cap = match d {
        1 => opts.max_cap_1d,
        2 => opts.max_cap_2d,
        _ => return Err(StatisticsError::Dimension { got: d, max: 2 }),
    };
    let mut cap = opts.initial_cap.min(max_cap);
    loop {
        let lattice = Lattice::new(&vec![cap; d])?;
        let (edges, out) = lattice.transitions(net)?;
        let probs = solve_stationary(lattice.size, &edges, &out)?;
        let leakage = lattice.boundary_mass(&probs);
        if leakage < opts.leakage_tol {
            let mut flow = vec![0.0; lattice.size];
            for &(i, j, r) in &edges {
                flow[j] += probs[i] * r;
                flow[i] -= probs[i] * r;
            }
            let residual = flow.iter().map(|v| v.abs()).sum();
            return Ok(TruncatedStationary {
                caps: lattice.caps.clone(),
                leakage,
                residual,
                distribution: lattice.distribution(&probs),
            });
        }
        if cap >= max_cap {
            return Err(StatisticsError::CapLimit { cap, leakage });
        }
        cap = (cap * 2).min(max_cap);
    }
}

/// Banded elimination without pivoting on the generator transpose with
/// the origin's row and column removed; that matrix is column diagonally
/// dominant, so the pivots stay non-zero for an irreducible chain.
fn solve_stationary(n: usize, edges: &[(usize, usize, f64)], out: &[f64]) -> Result<Vec<f64>, StatisticsError> {
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let m = n - 1;
    let b = edges.iter().map(|&(i, j, _)| i.abs_diff(j)).max().unwrap_or(1).max(1);
    let w = 2 * b + 1;
    let mut a = vec![0.0; m * w];
    let at = |r: usize, c: usize| r * w + (c + b - r);
    let mut rhs = vec![0.0; m];
    for j in 1..n {
        a[at(j - 1, j - 1)] = -out[j];
    }
    for &(i, j, rate) in edges {
        // Column i of Q^T is the outflow of state i; equation j collects inflow.
        if j == 0 {
            continue;
        }
        if i == 0 {
            rhs[j - 1] -= rate;
        } else {
            a[at(j - 1, i - 1)] += rate;
        }
    }
    for k in 0..m {
        let piv = a[at(k, k)];
        if piv.abs() < 1e-300 {
            return Err(StatisticsError::NotIrreducible { value: 0.0 });
        }
        let hi = (k + b + 1).min(m);
        for r in k + 1..hi {
            let f = a[at(r, k)] / piv;
            if f == 0.0 {
                continue;
            }
            for c in k..(k + b + 1).min(m) {
                a[at(r, c)] -= f * a[at(k, c)];
            }
            rhs[r] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; m];
    for k in (0..m).rev() {
        let mut s = rhs[k];
        for c in k + 1..(k + b + 1).min(m) {
            s -= a[at(k, c)] * x[c];
        }
        x[k] = s / a[at(k, k)];
    }
    let mut mu = Vec::with_capacity(n);
    mu.push(1.0);
    mu.extend(x);
    let scale = mu.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let min = mu.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() || min < -1e-10 * scale {
        return Err(StatisticsError::NotIrreducible { value: min });
    }
    mu.iter_mut().for_each(|v| *v = v.max(0.0));
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|v| *v /= total);
    Ok(mu)
}

/// Law of `X(t)` and expected number of jumps in `[0, t]`.
#[derive(Clone, Debug, Serialize)]
pub struct TransientLaw {
    pub t: f64,
    #[serde(skip)]
    pub distribution: DiscreteDistribution,
    pub expected_events: f64,
    /// Largest boundary mass seen along the series.
    pub boundary_mass: f64,
    pub uniformization_rate: f64,
}

/// Transient law by uniformization: `p(t) = sum_k Pois(L t; k) p0 P^k`
/// with `P = I + Q / L`.
pub fn uniformization(
    net: &ReactionNetwork,
    x0: &[u64],
    t: f64,
    caps: &[u64],
) -> Result<TransientLaw, StatisticsError> {
    if x0.len() != net.num_species() || caps.len() != x0.len() {
        return Err(StatisticsError::Mismatch { expected: net.num_species(), got: x0.len().min(caps.len()) });
    }
    let lattice = Lattice::new(caps)?;
    let (edges, out) = lattice.transitions(net)?;
    let lambda = out.iter().copied().fold(0.0, f64::max);
    let mut p = vec![0.0; lattice.size];
    p[lattice.index(x0)] = 1.0;
    if lambda == 0.0 {
        return Ok(TransientLaw {
            t,
            distribution: lattice.distribution(&p),
            expected_events: 0.0,
            boundary_mass: lattice.boundary_mass(&p),
            uniformization_rate: 0.0,
        });
    }
    let lt = lambda * t;
    let pois = Poisson::new(lt).expect("positive rate");
    let k_max = (lt + 12.0 * lt.sqrt() + 30.0).ceil() as u64;
    let mut acc = vec![0.0; lattice.size];
    let mut expected_events = 0.0;
    let mut cdf = 0.0;
    let mut boundary_mass: f64 = 0.0;
    let mut next = vec![0.0; lattice.size];
    for k in 0..=k_max {
        let w = pois.pmf(k);
        cdf += w;
        let tail = (1.0 - cdf).max(0.0);
        let mut flux = 0.0;
        for (s, &ps) in p.iter().enumerate() {
            acc[s] += w * ps;
            flux += ps * out[s];
        }
        // int_0^t p(s) ds = (1/L) sum_k P(Pois(Lt) > k) p_k
        expected_events += tail / lambda * flux;
        if k % 64 == 0 {
            boundary_mass = boundary_mass.max(lattice.boundary_mass(&p));
        }
        for (s, n) in next.iter_mut().enumerate() {
            *n = p[s] * (1.0 - out[s] / lambda);
        }
        for &(i, j, r) in &edges {
            next[j] += p[i] * r / lambda;
        }
        std::mem::swap(&mut p, &mut next);
    }
    Ok(TransientLaw {
        t,
        distribution: lattice.distribution(&acc),
        expected_events,
        boundary_mass,
        uniformization_rate: lambda,
    })
}

/// Strong connectivity of the discrete chain, judged by lattice
/// reachability: all states of `[0, bound/2]^d` must share one strongly
/// connected component of the chain restricted to `[0, bound]^d`.
/// Positive rates are assumed wherever a reaction is enabled. `None` for
/// more than two species.
pub fn lattice_irreducible(net: &ReactionNetwork, bound: u64) -> Option<bool> {
    let d = net.num_species();
    if d == 0 || d > 2 {
        return None;
    }
    let lattice = Lattice::new(&vec![bound; d]).ok()?;
    let mut g = DiGraph::<(), ()>::with_capacity(lattice.size, lattice.size * net.reactions().len());
    let nodes: Vec<_> = (0..lattice.size).map(|_| g.add_node(())).collect();
    for s in 0..lattice.size {
        let x = lattice.state(s);
        for rx in net.reactions() {
            if !rx.enabled(&x) {
                continue;
            }
            let y: Vec<i64> = x.iter().zip(rx.reaction_vector()).map(|(&v, &dv)| v as i64 + dv).collect();
            if y.iter().all(|&v| v >= 0 && v as u64 <= bound) {
                let y: Vec<u64> = y.iter().map(|&v| v as u64).collect();
                g.add_edge(nodes[s], nodes[lattice.index(&y)], ());
            }
        }
    }
    let mut comp = vec![usize::MAX; lattice.size];
    for (c, scc) in tarjan_scc(&g).into_iter().enumerate() {
        for n in scc {
            comp[n.index()] = c;
        }
    }
    let half = bound / 2;
    let inner: Vec<usize> =
        (0..lattice.size).filter(|&s| lattice.state(s).iter().all(|&v| v <= half)).map(|s| comp[s]).collect();
    Some(inner.windows(2).all(|w| w[0] == w[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_network;
    use crate::statistics::PoissonReference;

    #[test]
    fn birth_death_stationary_law_is_poisson() {
        let net = parse_network("A -> 0 @ ma(1.5)\n0 -> A @ ma(3)").unwrap();
        let st = truncated_stationary(&net, &StationaryOptions::default()).unwrap();
        let pois = PoissonReference::new(vec![2.0]).distribution().unwrap();
        assert!(st.distribution().total_variation(&pois) < 1e-10);
        assert!(st.residual < 1e-12);
    }

    #[test]
    fn double_death_chain_is_not_poisson() {
        let net = parse_network("2A -> 0 @ ma(1)\n0 -> A @ ma(8)").unwrap();
        let st = truncated_stationary(&net, &StationaryOptions::default()).unwrap();
        let fano = st.distribution().fano()[0];
        assert!((fano - 1.0).abs() > 1e-3, "fano {fano}");
        // Flux balance: 0 -> A inflow equals twice the 2A -> 0 rate.
        let death = st.expectation(|x| (x[0] * x[0].saturating_sub(1)) as f64);
        assert!((8.0 - 2.0 * death).abs() < 1e-8);
    }

    #[test]
    fn two_state_uniformization_matches_closed_form() {
        let net = parse_network("A -> B @ ma(1)\nB -> A @ ma(2)").unwrap();
        let law = uniformization(&net, &[1, 0], 1.0, &[1, 1]).unwrap();
        // P(A at t) = 2/3 + 1/3 e^{-3t}
        let pa = law.distribution.iter().find(|(x, _)| **x == vec![1, 0]).unwrap().1;
        assert!((pa - (2.0 / 3.0 + (-3.0f64).exp() / 3.0)).abs() < 1e-12);
        // Expected jumps: int_0^1 (P_A(s) * 1 + P_B(s) * 2) ds
        let expected = 4.0 / 3.0 + (1.0 - (-3.0f64).exp()) / 9.0 * (1.0 - 2.0);
        assert!((law.expected_events - expected).abs() < 1e-10, "{}", law.expected_events);
    }

    #[test]
    fn reachability_detects_irreducible_chains() {
        let bd = parse_network("A -> 0 @ ma(1)\n0 -> A @ ma(1)").unwrap();
        assert_eq!(lattice_irreducible(&bd, 40), Some(true));
        let pure_death = parse_network("A -> 0 @ ma(1)").unwrap();
        assert_eq!(lattice_irreducible(&pure_death, 40), Some(false));
        let two = parse_network("Y -> 0 @ ma(1)\n0 -> Y @ ma(1)\n0 -> Z @ ma(1)\nZ -> 0 @ ma(2)").unwrap();
        assert_eq!(lattice_irreducible(&two, 40), Some(true));
    }
}

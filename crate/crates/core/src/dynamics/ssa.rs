//! Exact stochastic simulation (Gillespie direct method).
//!
//! Propensities live in a binary sum tree so that selecting and updating a
//! reaction costs `O(log R)`; after each firing only the reactions whose
//! rates read an affected species are recomputed.

use rand::Rng;
use thiserror::Error;

use crate::model::{Expr, RateError, RateLaw, ReactionNetwork};

pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum SsaError {
    #[error("explosion suspected{}: {events} events reached t = {t} before the horizon", scale_label(*.scale))]
    Explosion { scale: Option<u64>, events: u64, t: f64 },
    #[error("reaction {reaction}: rate evaluated to {value} at t = {t}")]
    InvalidRate { reaction: usize, value: f64, t: f64 },
    #[error("initial state has {got} coordinates, network has {expected} species")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Rate(#[from] RateError),
}

fn scale_label(n: Option<u64>) -> String {
    n.map(|n| format!(" at N = {n}")).unwrap_or_default()
}

/// Streaming consumer of a simulated path.
pub trait Observer {
    fn start(&mut self, _t: f64, _x: &[u64]) {}
    /// Called after reaction `r` fired at time `t`; `x` is the new state.
    fn jump(&mut self, t: f64, x: &[u64], r: usize);
    /// Called once with the horizon (or absorption time clipped to the
    /// horizon) and the final state.
    fn finish(&mut self, _t_end: f64, _x: &[u64]) {}
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn start(&mut self, t: f64, x: &[u64]) {
        self.0.start(t, x);
        self.1.start(t, x);
    }
    fn jump(&mut self, t: f64, x: &[u64], r: usize) {
        self.0.jump(t, x, r);
        self.1.jump(t, x, r);
    }
    fn finish(&mut self, t: f64, x: &[u64]) {
        self.0.finish(t, x);
        self.1.finish(t, x);
    }
}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn start(&mut self, t: f64, x: &[u64]) {
        (**self).start(t, x);
    }
    fn jump(&mut self, t: f64, x: &[u64], r: usize) {
        (**self).jump(t, x, r);
    }
    fn finish(&mut self, t: f64, x: &[u64]) {
        (**self).finish(t, x);
    }
}

#[derive(Clone, Debug)]
pub struct SsaOptions {
    pub max_events: u64,
    /// Scale parameter named in explosion errors.
    pub scale: Option<u64>,
}

impl Default for SsaOptions {
    fn default() -> Self {
        Self { max_events: DEFAULT_MAX_EVENTS, scale: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SsaOutcome {
    pub events: u64,
    /// All rates vanished before the horizon.
    pub absorbed: bool,
    pub final_state: Vec<u64>,
}

#[derive(Clone, Debug)]
enum Kinetics {
    MassAction(f64),
    Expression(Expr),
}

#[derive(Clone, Debug)]
struct Compiled {
    source: Vec<(usize, u64)>,
    delta: Vec<(usize, i64)>,
    kinetics: Kinetics,
}

impl Compiled {
    #[inline]
    fn rate(&self, x: &[u64]) -> f64 {
        for &(i, c) in &self.source {
            if x[i] < c {
                return 0.0;
            }
        }
        match &self.kinetics {
            Kinetics::MassAction(k) => {
                let mut acc = *k;
                for &(i, c) in &self.source {
                    let xi = x[i] as f64;
                    for j in 0..c {
                        acc *= xi - j as f64;
                    }
                }
                acc
            }
            Kinetics::Expression(e) => e.eval_with(&|i| x[i] as f64),
        }
    }
}

/// Binary tree whose leaves are propensities and inner nodes partial sums.
#[derive(Clone, Debug)]
struct SumTree {
    size: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(n: usize) -> Self {
        let size = n.next_power_of_two().max(1);
        Self { size, nodes: vec![0.0; 2 * size] }
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    fn set(&mut self, i: usize, v: f64) {
        let mut k = self.size + i;
        self.nodes[k] = v;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Leaf `i` with `sum_{j<i} a_j <= u < sum_{j<=i} a_j`, never a zero leaf.
    fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.size {
            let left = self.nodes[2 * k];
            if (u < left || self.nodes[2 * k + 1] <= 0.0) && left > 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        k - self.size
    }
}

/// A network prepared for repeated simulation.
#[derive(Clone, Debug)]
pub struct Ssa {
    reactions: Vec<Compiled>,
    /// `deps[r]`: reactions whose rate must be recomputed after `r` fires.
    deps: Vec<Vec<usize>>,
    num_species: usize,
}

impl Ssa {
    pub fn new(net: &ReactionNetwork) -> Self {
        let reactions: Vec<Compiled> = net
            .reactions()
            .iter()
            .map(|rx| Compiled {
                source: rx.source.iter().map(|(i, c)| (i, u64::from(c))).collect(),
                delta: rx.reaction_vector().iter().enumerate().filter(|(_, &d)| d != 0).map(|(i, &d)| (i, d)).collect(),
                kinetics: match &rx.rate {
                    RateLaw::MassAction { kappa, .. } => Kinetics::MassAction(*kappa),
                    RateLaw::Expression(l) => Kinetics::Expression(l.expr.clone()),
                },
            })
            .collect();
        let reads: Vec<Vec<usize>> = net
            .reactions()
            .iter()
            .map(|rx| {
                let mut v: Vec<usize> = rx.source.iter().map(|(i, _)| i).collect();
                if let RateLaw::Expression(l) = &rx.rate {
                    v.extend(l.expr.species_used());
                }
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let deps = reactions
            .iter()
            .map(|r| {
                (0..reads.len()).filter(|&s| r.delta.iter().any(|(i, _)| reads[s].binary_search(i).is_ok())).collect()
            })
            .collect();
        Self { reactions, deps, num_species: net.num_species() }
    }

    pub fn num_species(&self) -> usize {
        self.num_species
    }

    /// Runs one path on `[0, t_end]` from `x0`, streaming it to `obs`.
    pub fn run<R: Rng + ?Sized, O: Observer>(
        &self,
        x0: &[u64],
        t_end: f64,
        rng: &mut R,
        obs: &mut O,
        opts: &SsaOptions,
    ) -> Result<SsaOutcome, SsaError> {
        if x0.len() != self.num_species {
            return Err(SsaError::Dimension { expected: self.num_species, got: x0.len() });
        }
        let mut x = x0.to_vec();
        let mut tree = SumTree::new(self.reactions.len());
        let mut t = 0.0;
        for (r, rx) in self.reactions.iter().enumerate() {
            tree.set(r, checked(r, rx.rate(&x), t)?);
        }
        obs.start(0.0, &x);
        let mut events = 0u64;
        loop {
            let total = tree.total();
            if total <= 0.0 {
                obs.finish(t_end, &x);
                return Ok(SsaOutcome { events, absorbed: true, final_state: x });
            }
            let u: f64 = rng.gen();
            let tau = -(1.0 - u).ln() / total;
            if t + tau > t_end {
                obs.finish(t_end, &x);
                return Ok(SsaOutcome { events, absorbed: false, final_state: x });
            }
            if events >= opts.max_events {
                return Err(SsaError::Explosion { scale: opts.scale, events, t });
            }
            t += tau;
            let r = tree.find(rng.gen::<f64>() * total);
            for &(i, d) in &self.reactions[r].delta {
                x[i] = x[i].checked_add_signed(d).expect("propensity guard keeps counts non-negative");
            }
            for &s in &self.deps[r] {
                tree.set(s, checked(s, self.reactions[s].rate(&x), t)?);
            }
            events += 1;
            obs.jump(t, &x, r);
        }
    }
}

#[inline]
fn checked(reaction: usize, value: f64, t: f64) -> Result<f64, SsaError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(SsaError::InvalidRate { reaction, value, t })
    }
}

/// A recorded path: states after each event, flattened row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub num_species: usize,
    pub t_end: f64,
    pub seed: u64,
    pub absorbed: bool,
    /// `times[0] = 0` is the initial state; later entries are event times.
    pub times: Vec<f64>,
    states: Vec<u64>,
    /// Reaction fired at each time; `None` for the initial state.
    pub reactions: Vec<Option<usize>>,
}

impl Trajectory {
    pub fn constant(x: &[u64], t_end: f64) -> Self {
        Self {
            num_species: x.len(),
            t_end,
            seed: 0,
            absorbed: false,
            times: vec![0.0],
            states: x.to_vec(),
            reactions: vec![None],
        }
    }

    pub fn push(&mut self, t: f64, x: &[u64], r: Option<usize>) {
        self.times.push(t);
        self.states.extend_from_slice(x);
        self.reactions.push(r);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> &[u64] {
        &self.states[k * self.num_species..(k + 1) * self.num_species]
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> &[u64] {
        let k = self.times.partition_point(|&s| s <= t).max(1) - 1;
        self.state(k)
    }

    /// Replays the path into an observer.
    pub fn replay<O: Observer>(&self, obs: &mut O) {
        obs.start(self.times[0], self.state(0));
        for k in 1..self.len() {
            obs.jump(self.times[k], self.state(k), self.reactions[k].unwrap_or(usize::MAX));
        }
        obs.finish(self.t_end, self.state(self.len() - 1));
    }

    /// CSV rows `t,x_1..x_n,reaction_index`, keeping every `stride`-th
    /// event plus the first and last rows.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W, names: &[String], stride: usize) -> std::io::Result<()> {
        let stride = stride.max(1);
        writeln!(w, "t,{},reaction_index", names.join(","))?;
        for k in 0..self.len() {
            if k % stride != 0 && k + 1 != self.len() {
                continue;
            }
            write!(w, "{}", self.times[k])?;
            for v in self.state(k) {
                write!(w, ",{v}")?;
            }
            match self.reactions[k] {
                Some(r) => writeln!(w, ",{r}")?,
                None => writeln!(w, ",")?,
            }
        }
        Ok(())
    }
}

/// Observer that stores the full path.
#[derive(Debug)]
pub struct Recorder {
    pub trajectory: Trajectory,
}

impl Recorder {
    pub fn new(num_species: usize, t_end: f64, seed: u64) -> Self {
        Self {
            trajectory: Trajectory {
                num_species,
                t_end,
                seed,
                absorbed: false,
                times: Vec::new(),
                states: Vec::new(),
                reactions: Vec::new(),
            },
        }
    }
}

impl Observer for Recorder {
    fn start(&mut self, t: f64, x: &[u64]) {
        self.trajectory.push(t, x, None);
    }
    fn jump(&mut self, t: f64, x: &[u64], r: usize) {
        self.trajectory.push(t, x, Some(r));
    }
}

/// Simulates a network from `x0` on `[0, t_end]` with a seeded stream.
pub fn simulate_network(
    net: &ReactionNetwork,
    x0: &[u64],
    t_end: f64,
    seed: u64,
    opts: &SsaOptions,
) -> Result<Trajectory, SsaError> {
    let ssa = Ssa::new(net);
    let mut rng = super::rng::replica_rng(seed, 0);
    let mut rec = Recorder::new(net.num_species(), t_end, seed);
    let out = ssa.run(x0, t_end, &mut rng, &mut rec, opts)?;
    rec.trajectory.absorbed = out.absorbed;
    Ok(rec.trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rng::replica_rng;
    use crate::model::parse_network;

    struct Count(u64);
    impl Observer for Count {
        fn jump(&mut self, _: f64, _: &[u64], _: usize) {
            self.0 += 1;
        }
    }

    #[test]
    fn sum_tree_selects_proportionally_and_skips_zeros() {
        let mut t = SumTree::new(5);
        for (i, v) in [1.0, 0.0, 2.0, 0.0, 1.0].iter().enumerate() {
            t.set(i, *v);
        }
        assert_eq!(t.total(), 4.0);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.0), 2);
        assert_eq!(t.find(2.9), 2);
        assert_eq!(t.find(3.5), 4);
        assert_eq!(t.find(4.0 - 1e-18), 4);
    }

    #[test]
    fn absorbing_initial_state_is_flagged() {
        let net = parse_network("A -> B @ ma(1)").unwrap();
        let tr = simulate_network(&net, &[0, 3], 1.0, 1, &SsaOptions::default()).unwrap();
        assert!(tr.absorbed);
        assert_eq!(tr.len(), 1);
    }

    #[test]
    fn paths_are_reproducible_and_conserve_mass() {
        let net = parse_network("A + B -> 2B @ ma(1)\nB -> A @ ma(1)").unwrap();
        let a = simulate_network(&net, &[5, 50], 2.0, 9, &SsaOptions::default()).unwrap();
        let b = simulate_network(&net, &[5, 50], 2.0, 9, &SsaOptions::default()).unwrap();
        assert_eq!(a, b);
        for k in 0..a.len() {
            let s = a.state(k);
            assert_eq!(s[0] + s[1], 55);
        }
        assert!(a.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn explosion_guard_names_scale() {
        let net = parse_network("A -> 2A @ ma(1)").unwrap();
        let ssa = Ssa::new(&net);
        let opts = SsaOptions { max_events: 100, scale: Some(1000) };
        let err = ssa.run(&[10], 100.0, &mut replica_rng(0, 0), &mut Count(0), &opts).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("N = 1000"), "{msg}");
    }

    #[test]
    fn pure_birth_event_count_mean() {
        let net = parse_network("0 -> A @ ma(3)").unwrap();
        let ssa = Ssa::new(&net);
        let reps = 4000;
        let mut total = 0u64;
        for k in 0..reps {
            let mut c = Count(0);
            ssa.run(&[0], 2.0, &mut replica_rng(5, k), &mut c, &SsaOptions::default()).unwrap();
            total += c.0;
        }
        let mean = total as f64 / reps as f64;
        // Poisson(6): standard error sqrt(6/4000) ~ 0.039.
        assert!((mean - 6.0).abs() < 0.2, "mean {mean}");
    }
}

//! Occupation measures, fixed-time marginals, Poisson references and the
//! distances between them, plus master-equation oracles on truncated
//! lattices.

mod master;
mod poisson;

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::dynamics::ssa::{Observer, Trajectory};
use crate::model::RateError;

pub use master::{
    lattice_irreducible, truncated_stationary, uniformization, StationaryOptions, TransientLaw, TruncatedStationary,
    IRREDUCIBILITY_BOUND,
};
pub use poisson::{DiscreteDistribution, PoissonReference};

/// Smallest ensemble accepted by [`distribution_distance`].
pub const MIN_REPLICAS: u64 = 100;

/// Expected count below which chi-square cells are pooled.
pub const CHI_SQUARE_MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Error)]
pub enum StatisticsError {
    #[error("{got} replicas given, at least {MIN_REPLICAS} required")]
    TooFewReplicas { got: u64 },
    #[error("lattice with {states} states exceeds the supported size")]
    TooManyStates { states: u128 },
    #[error("truncated lattice needs at most {max} discrete species, got {got}")]
    Dimension { got: usize, max: usize },
    #[error("state cap {cap} reached with boundary mass {leakage:e} above tolerance")]
    CapLimit { cap: u64, leakage: f64 },
    #[error("truncated chain is not irreducible from the origin (negative mass {value:e})")]
    NotIrreducible { value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Mismatch { expected: usize, got: usize },
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Serializes a state-keyed map as `[[state, value], ...]`; JSON object
/// keys must be strings.
fn as_pairs<V: Serialize, S: serde::Serializer>(m: &BTreeMap<Vec<u64>, V>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(m.iter())
}

/// Residence time of the projected state over `[0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OccupationMeasure {
    /// Projected species, as indices into the full state.
    pub species: Vec<usize>,
    #[serde(serialize_with = "as_pairs")]
    pub weights: BTreeMap<Vec<u64>, f64>,
    pub t_end: f64,
}

impl OccupationMeasure {
    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Time average of `g` over `[0, T]`.
    pub fn time_average(&self, g: impl Fn(&[u64]) -> f64) -> f64 {
        self.weights.iter().map(|(x, w)| g(x) * w).sum::<f64>() / self.t_end
    }
}

/// Streaming builder for an [`OccupationMeasure`].
pub struct OccupationObserver {
    measure: OccupationMeasure,
    held: Vec<u64>,
    t_prev: f64,
}

impl OccupationObserver {
    pub fn new(species: Vec<usize>, t_end: f64) -> Self {
        Self { measure: OccupationMeasure { species, weights: BTreeMap::new(), t_end }, held: Vec::new(), t_prev: 0.0 }
    }

    pub fn into_measure(self) -> OccupationMeasure {
        self.measure
    }

    fn close(&mut self, t: f64) {
        if t > self.t_prev {
            *self.measure.weights.entry(self.held.clone()).or_insert(0.0) += t - self.t_prev;
        }
    }

    fn hold(&mut self, t: f64, x: &[u64]) {
        self.t_prev = t;
        self.held = self.measure.species.iter().map(|&i| x[i]).collect();
    }
}

impl Observer for OccupationObserver {
    fn start(&mut self, t: f64, x: &[u64]) {
        self.hold(t, x);
    }
    fn jump(&mut self, t: f64, x: &[u64], _r: usize) {
        self.close(t);
        self.hold(t, x);
    }
    fn finish(&mut self, t_end: f64, _x: &[u64]) {
        self.close(t_end);
        self.t_prev = t_end;
    }
}

/// Exact residence-time histogram of the projection of a trajectory.
pub fn occupation_measure(traj: &Trajectory, species: &[usize]) -> OccupationMeasure {
    let mut obs = OccupationObserver::new(species.to_vec(), traj.t_end);
    traj.replay(&mut obs);
    obs.into_measure()
}

/// Reference curve `t -> E[g(J^{z(t)})]`.
pub enum ReferenceCurve<'a> {
    Constant(f64),
    Curve(&'a (dyn Fn(f64) -> f64 + Sync)),
}

impl ReferenceCurve<'_> {
    /// `int_a^b r(s) ds`, by composite Simpson for curves.
    fn integral(&self, a: f64, b: f64, max_step: f64) -> f64 {
        match self {
            ReferenceCurve::Constant(c) => c * (b - a),
            ReferenceCurve::Curve(f) => {
                let pieces = ((b - a) / max_step).ceil().max(1.0) as usize;
                let h = (b - a) / pieces as f64;
                (0..pieces)
                    .map(|k| {
                        let lo = a + k as f64 * h;
                        h / 6.0 * (f(lo) + 4.0 * f(lo + 0.5 * h) + f(lo + h))
                    })
                    .sum()
            }
        }
    }
}

/// Streaming `sup_t |int_0^t (g(x(s)) - r(s)) ds|`.
pub struct TimeAverageResidual<'a, G> {
    species: Vec<usize>,
    g: G,
    reference: ReferenceCurve<'a>,
    max_step: f64,
    held: Vec<u64>,
    g_held: f64,
    t_prev: f64,
    integral: f64,
    pub sup: f64,
}

impl<'a, G: Fn(&[u64]) -> f64> TimeAverageResidual<'a, G> {
    pub fn new(species: Vec<usize>, g: G, reference: ReferenceCurve<'a>, t_end: f64) -> Self {
        Self {
            species,
            g,
            reference,
            max_step: t_end / 1000.0,
            held: Vec::new(),
            g_held: 0.0,
            t_prev: 0.0,
            integral: 0.0,
            sup: 0.0,
        }
    }

    fn close(&mut self, t: f64) {
        if t <= self.t_prev {
            return;
        }
        // The integrand is constant minus the reference on the interval, so
        // for constant references the extremes sit at the endpoints.
        self.integral += self.g_held * (t - self.t_prev) - self.reference.integral(self.t_prev, t, self.max_step);
        self.sup = self.sup.max(self.integral.abs());
    }

    fn hold(&mut self, t: f64, x: &[u64]) {
        self.t_prev = t;
        self.held.clear();
        self.held.extend(self.species.iter().map(|&i| x[i]));
        self.g_held = (self.g)(&self.held);
    }
}

impl<G: Fn(&[u64]) -> f64> Observer for TimeAverageResidual<'_, G> {
    fn start(&mut self, t: f64, x: &[u64]) {
        self.hold(t, x);
    }
    fn jump(&mut self, t: f64, x: &[u64], _r: usize) {
        self.close(t);
        self.hold(t, x);
    }
    fn finish(&mut self, t_end: f64, _x: &[u64]) {
        self.close(t_end);
    }
}

/// `sup_{t<=T} |int_0^t (g(pi(X(s))) - r(s)) ds|` along a recorded path.
///
/// Takes the trajectory rather than its occupation measure: the running
/// integral depends on the order in which states are visited.
pub fn time_average_residual(
    traj: &Trajectory,
    species: &[usize],
    g: impl Fn(&[u64]) -> f64,
    reference: ReferenceCurve<'_>,
) -> f64 {
    let mut obs = TimeAverageResidual::new(species.to_vec(), g, reference, traj.t_end);
    traj.replay(&mut obs);
    obs.sup
}

/// Histogram of projected states across replicas at a fixed time.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EmpiricalMarginal {
    pub t: f64,
    #[serde(serialize_with = "as_pairs")]
    pub counts: BTreeMap<Vec<u64>, u64>,
    pub replicas: u64,
}

impl EmpiricalMarginal {
    pub fn new(t: f64) -> Self {
        Self { t, counts: BTreeMap::new(), replicas: 0 }
    }

    pub fn add(&mut self, x: Vec<u64>) {
        *self.counts.entry(x).or_insert(0) += 1;
        self.replicas += 1;
    }

    pub fn merge(&mut self, other: &EmpiricalMarginal) {
        for (x, c) in &other.counts {
            *self.counts.entry(x.clone()).or_insert(0) += c;
        }
        self.replicas += other.replicas;
    }

    pub fn dim(&self) -> usize {
        self.counts.keys().next().map_or(0, Vec::len)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (x, &c) in &self.counts {
            for (mi, &xi) in m.iter_mut().zip(x) {
                *mi += xi as f64 * c as f64;
            }
        }
        m.iter().map(|v| v / self.replicas as f64).collect()
    }

    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        let mut v = vec![0.0; self.dim()];
        for (x, &c) in &self.counts {
            for (k, &xi) in x.iter().enumerate() {
                v[k] += (xi as f64 - mean[k]).powi(2) * c as f64;
            }
        }
        v.iter().map(|s| s / self.replicas as f64).collect()
    }

    /// Marginal of one coordinate.
    pub fn coordinate(&self, k: usize) -> EmpiricalMarginal {
        let mut out = EmpiricalMarginal::new(self.t);
        for (x, &c) in &self.counts {
            *out.counts.entry(vec![x[k]]).or_insert(0) += c;
        }
        out.replicas = self.replicas;
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionDistance {
    pub total_variation: f64,
    pub chi_square_statistic: f64,
    pub chi_square_dof: usize,
    /// `None` when pooling leaves fewer than two cells.
    pub chi_square_pvalue: Option<f64>,
    /// Largest relative error of the coordinate means (absolute where the
    /// reference mean is zero).
    pub mean_error: f64,
    pub empirical_mean: Vec<f64>,
    pub reference_mean: Vec<f64>,
    /// A single observed state against a reference with mean above 0.1.
    pub degenerate: bool,
    pub replicas: u64,
}

/// Compares an empirical marginal with a reference law. `fitted` is the
/// number of reference parameters estimated from the same sample; it is
/// subtracted from the chi-square degrees of freedom.
pub fn distribution_distance(
    m: &EmpiricalMarginal,
    reference: &DiscreteDistribution,
    fitted: usize,
) -> Result<DistributionDistance, StatisticsError> {
    if m.replicas < MIN_REPLICAS {
        return Err(StatisticsError::TooFewReplicas { got: m.replicas });
    }
    if m.dim() != reference.dim() {
        return Err(StatisticsError::Mismatch { expected: reference.dim(), got: m.dim() });
    }
    let n = m.replicas as f64;

    let mut tv = 0.0;
    let mut covered = 0u64;
    // (observed, expected) per reference state in support order.
    let mut cells: Vec<(f64, f64)> = Vec::with_capacity(reference.len());
    for (x, p) in reference.iter() {
        let c = m.counts.get(x).copied().unwrap_or(0);
        covered += c;
        tv += (c as f64 / n - p).abs();
        cells.push((c as f64, n * p));
    }
    let outside = m.replicas - covered;
    let ref_tail = (1.0 - reference.total()).max(0.0);
    tv += (outside as f64 / n - ref_tail).abs();
    let total_variation = 0.5 * tv;

    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in cells {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= CHI_SQUARE_MIN_EXPECTED {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    acc.0 += outside as f64;
    acc.1 += n * ref_tail;
    match pooled.last_mut() {
        Some(last) if acc.1 < CHI_SQUARE_MIN_EXPECTED => {
            last.0 += acc.0;
            last.1 += acc.1;
        }
        _ => pooled.push(acc),
    }
    let chi_square_statistic: f64 = pooled.iter().filter(|(_, e)| *e > 0.0).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let chi_square_dof = pooled.len().saturating_sub(1 + fitted);
    let chi_square_pvalue = (chi_square_dof > 0)
        .then(|| ChiSquared::new(chi_square_dof as f64).map(|d| d.sf(chi_square_statistic)).unwrap_or(f64::NAN));

    let empirical_mean = m.mean();
    let reference_mean = reference.mean();
    let mean_error = empirical_mean
        .iter()
        .zip(&reference_mean)
        .map(|(e, r)| if *r > 0.0 { (e - r).abs() / r } else { (e - r).abs() })
        .fold(0.0, f64::max);
    let degenerate = m.counts.len() == 1 && reference_mean.iter().sum::<f64>() > 0.1;
    if degenerate {
        log::warn!("degenerate marginal: a single state observed across {} replicas", m.replicas);
    }
    Ok(DistributionDistance {
        total_variation,
        chi_square_statistic,
        chi_square_dof,
        chi_square_pvalue,
        mean_error,
        empirical_mean,
        reference_mean,
        degenerate,
        replicas: m.replicas,
    })
}

/// [`distribution_distance`] against a product-form Poisson law.
pub fn poisson_distance(
    m: &EmpiricalMarginal,
    reference: &PoissonReference,
) -> Result<DistributionDistance, StatisticsError> {
    distribution_distance(m, &reference.distribution()?, 0)
}

/// Product-form Poisson law with the empirical means.
pub fn best_fit_poisson(m: &EmpiricalMarginal) -> PoissonReference {
    PoissonReference::new(m.mean())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupation_of_constant_path_is_single_state() {
        let tr = Trajectory::constant(&[3, 7], 2.5);
        let occ = occupation_measure(&tr, &[0]);
        assert_eq!(occ.weights.len(), 1);
        assert_eq!(occ.weights[&vec![3]], 2.5);
    }

    #[test]
    fn occupation_splits_time_between_states() {
        let mut tr = Trajectory::constant(&[0], 2.0);
        tr.push(1.0, &[1], Some(0));
        let occ = occupation_measure(&tr, &[0]);
        assert_eq!(occ.weights[&vec![0]], 1.0);
        assert_eq!(occ.weights[&vec![1]], 1.0);
        assert_eq!(occ.time_average(|x| x[0] as f64), 0.5);
    }

    #[test]
    fn residual_of_constant_function_vanishes() {
        let mut tr = Trajectory::constant(&[0], 2.0);
        tr.push(0.3, &[5], Some(0));
        tr.push(1.1, &[2], Some(0));
        let r = time_average_residual(&tr, &[0], |_| 4.0, ReferenceCurve::Constant(4.0));
        assert_eq!(r, 0.0);
    }

    #[test]
    fn residual_is_sup_of_running_integral() {
        let mut tr = Trajectory::constant(&[0], 2.0);
        tr.push(1.0, &[4], Some(0));
        // integral of x - 3: -3 at t=1, -2 at t=2
        let r = time_average_residual(&tr, &[0], |x| x[0] as f64, ReferenceCurve::Constant(3.0));
        assert!((r - 3.0).abs() < 1e-15);
        let f = |t: f64| 3.0 + 0.0 * t;
        let r2 = time_average_residual(&tr, &[0], |x| x[0] as f64, ReferenceCurve::Curve(&f));
        assert!((r2 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_pmf_marginal_has_zero_tv() {
        let reference = PoissonReference::new(vec![1.0]);
        let dist = reference.distribution().unwrap();
        let mut m = EmpiricalMarginal::new(1.0);
        // 1e6 replicas with counts proportional to the pmf, rounded.
        let mut states = Vec::new();
        for (x, p) in dist.iter() {
            let c = (p * 1e6).round() as u64;
            if c > 0 {
                states.push((x.clone(), c));
            }
        }
        for (x, c) in states {
            m.counts.insert(x, c);
            m.replicas += c;
        }
        let d = poisson_distance(&m, &reference).unwrap();
        assert!(d.total_variation < 1e-5, "{}", d.total_variation);
        assert!(d.mean_error < 1e-5);
    }

    #[test]
    fn too_few_replicas_is_rejected() {
        let mut m = EmpiricalMarginal::new(0.0);
        m.add(vec![1]);
        assert!(matches!(
            poisson_distance(&m, &PoissonReference::new(vec![1.0])),
            Err(StatisticsError::TooFewReplicas { got: 1 })
        ));
    }

    #[test]
    fn degenerate_marginal_is_flagged() {
        let mut m = EmpiricalMarginal::new(0.0);
        for _ in 0..200 {
            m.add(vec![0]);
        }
        let d = poisson_distance(&m, &PoissonReference::new(vec![2.0])).unwrap();
        assert!(d.degenerate);
        assert!((d.total_variation - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
    }
}

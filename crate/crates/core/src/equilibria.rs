//! Positive equilibria within stoichiometric compatibility classes and
//! sampling-based detection of absolute concentration robustness.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::ode::{integrate_network, OdeOptions};
use crate::dynamics::rng::derive_seed;
use crate::exact;
use crate::model::{monomial, ReactionNetwork};
use crate::structural::stoichiometric_rows;

/// Coordinates below this are treated as lying on the boundary.
pub const BOUNDARY: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct EquilibriumOptions {
    /// Newton stops once the log-coordinate step is below this.
    pub step_tol: f64,
    /// Accept when `|f(z)|_inf < residual_tol * (1 + max_r lambda_r(z))`.
    pub residual_tol: f64,
    pub max_iter: usize,
    pub retries: usize,
    pub seed: u64,
    /// Cumulative ODE horizons tried when Newton stagnates.
    pub ode_horizons: Vec<f64>,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self {
            step_tol: 1e-10,
            residual_tol: 1e-10,
            max_iter: 200,
            retries: 5,
            seed: 0,
            ode_horizons: vec![10.0, 100.0, 1e3, 1e4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumPoint {
    pub concentrations: Vec<f64>,
    pub compatibility_class_anchor: Vec<f64>,
    pub residual_norm: f64,
}

/// Orthonormal basis of the stoichiometric subspace and an integer basis
/// of its orthogonal complement.
struct ClassGeometry {
    subspace: DMatrix<f64>,
    laws: Vec<Vec<f64>>,
}

fn class_geometry(net: &ReactionNetwork) -> ClassGeometry {
    let n = net.num_species();
    let rows = stoichiometric_rows(net);
    let mut m = exact::to_rational(&rows);
    let pivots = exact::rref(&mut m);
    let s = pivots.len();
    let mut basis = DMatrix::<f64>::zeros(n, s);
    for (k, row) in m.iter().take(s).enumerate() {
        for j in 0..n {
            basis[(j, k)] = num::ToPrimitive::to_f64(&row[j]).expect("finite rational");
        }
    }
    let subspace = if s > 0 { basis.qr().q().columns(0, s).into_owned() } else { basis };
    let laws = exact::nullspace(&rows, n)
        .iter()
        .map(|v| v.iter().map(|x| num::ToPrimitive::to_f64(x).expect("finite")).collect())
        .collect();
    ClassGeometry { subspace, laws }
}

fn rates(net: &ReactionNetwork, z: &[f64]) -> Vec<f64> {
    net.reactions().iter().map(|r| r.rate.kappa().expect("mass-action network") * monomial(z, &r.source)).collect()
}

fn rhs(net: &ReactionNetwork, lam: &[f64]) -> Vec<f64> {
    let mut f = vec![0.0; net.num_species()];
    for (rx, l) in net.reactions().iter().zip(lam) {
        for (fi, &xi) in f.iter_mut().zip(rx.reaction_vector()) {
            *fi += xi as f64 * l;
        }
    }
    f
}

/// Scaled residual `|f(z)|_inf / (1 + max_r lambda_r(z))`.
pub fn scaled_residual(net: &ReactionNetwork, z: &[f64]) -> (f64, f64) {
    let lam = rates(net, z);
    let f = rhs(net, &lam);
    let norm = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let lmax = lam.iter().copied().fold(0.0f64, f64::max);
    (norm, norm / (1.0 + lmax))
}

struct Newton<'a> {
    net: &'a ReactionNetwork,
    geo: &'a ClassGeometry,
    targets: Vec<f64>,
    scales: Vec<f64>,
}

impl Newton<'_> {
    fn system(&self, u: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.net.num_species();
        let z: Vec<f64> = u.iter().map(|v| v.exp()).collect();
        let lam = rates(self.net, &z);
        let f = DVector::from_vec(rhs(self.net, &lam));
        // d f / d u = sum_r xi_r lambda_r y_r^T
        let mut jf = DMatrix::<f64>::zeros(n, n);
        for (rx, l) in self.net.reactions().iter().zip(&lam) {
            for (j, y) in rx.source.iter() {
                for (i, &xi) in rx.reaction_vector().iter().enumerate() {
                    if xi != 0 {
                        jf[(i, j)] += xi as f64 * l * f64::from(y);
                    }
                }
            }
        }
        let s = self.geo.subspace.ncols();
        let ut = self.geo.subspace.transpose();
        let mut g = DVector::<f64>::zeros(n);
        let mut jac = DMatrix::<f64>::zeros(n, n);
        if s > 0 {
            g.rows_mut(0, s).copy_from(&(&ut * &f));
            jac.rows_mut(0, s).copy_from(&(&ut * &jf));
        }
        for (k, law) in self.geo.laws.iter().enumerate() {
            let row = s + k;
            let total: f64 = law.iter().zip(&z).map(|(a, b)| a * b).sum();
            g[row] = (total - self.targets[k]) / self.scales[k];
            for j in 0..n {
                jac[(row, j)] = law[j] * z[j] / self.scales[k];
            }
        }
        (g, jac)
    }

    /// Damped Newton in log coordinates; `Some(z)` on convergence.
    fn solve(&self, start: &[f64], opts: &EquilibriumOptions) -> Option<Vec<f64>> {
        let mut u = DVector::from_iterator(start.len(), start.iter().map(|v| v.ln()));
        let (mut g, mut jac) = self.system(&u);
        let mut merit = g.norm_squared();
        for _ in 0..opts.max_iter {
            let mut step = jac.clone().lu().solve(&(-&g))?;
            if !step.iter().all(|v| v.is_finite()) {
                return None;
            }
            let big = step.amax();
            if big > 2.0 {
                step *= 2.0 / big;
            }
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial = &u + &step * lambda;
                let (gt, jt) = self.system(&trial);
                let mt = gt.norm_squared();
                if mt.is_finite() && mt <= merit * (1.0 - 1e-4 * lambda) || mt < 1e-28 {
                    u = trial;
                    g = gt;
                    jac = jt;
                    merit = mt;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            let z: Vec<f64> = u.iter().map(|v| v.exp()).collect();
            if z.iter().any(|&v| v < BOUNDARY) {
                return None;
            }
            let small_step = (&step * lambda).amax() < opts.step_tol;
            if small_step || !accepted {
                let (_, scaled) = scaled_residual(self.net, &z);
                let class_ok = g.rows(self.geo.subspace.ncols(), self.geo.laws.len()).amax() < 1e-10;
                return (scaled < opts.residual_tol && class_ok).then_some(z);
            }
        }
        None
    }
}

/// Finds a positive equilibrium in the compatibility class of `anchor`.
///
/// Newton is tried from the anchor and from perturbed starts; if all
/// attempts stagnate the ODE is integrated from the anchor and each end
/// state is polished by Newton. An unpolished ODE state is never returned.
/// `None` means no positive equilibrium was found, which is a reported
/// outcome rather than an error.
pub fn find_positive_equilibrium(
    net: &ReactionNetwork,
    anchor: &[f64],
    opts: &EquilibriumOptions,
) -> Option<EquilibriumPoint> {
    assert!(net.is_mass_action(), "equilibria are computed for mass-action networks");
    assert!(anchor.iter().all(|&v| v > 0.0), "anchor must be positive");
    let geo = class_geometry(net);
    let targets: Vec<f64> = geo.laws.iter().map(|l| l.iter().zip(anchor).map(|(a, b)| a * b).sum()).collect();
    let scales: Vec<f64> = geo
        .laws
        .iter()
        .zip(&targets)
        .map(|(l, t)| t.abs().max(l.iter().zip(anchor).map(|(a, b)| (a * b).abs()).sum::<f64>()).max(1e-300))
        .collect();
    let newton = Newton { net, geo: &geo, targets, scales };
    let finish = |z: Vec<f64>| {
        let (norm, _) = scaled_residual(net, &z);
        EquilibriumPoint { concentrations: z, compatibility_class_anchor: anchor.to_vec(), residual_norm: norm }
    };
    if let Some(z) = newton.solve(anchor, opts) {
        return Some(finish(z));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.retries {
        let start: Vec<f64> = anchor.iter().map(|&a| a * (rng.gen_range(-1.0..1.0f64)).exp()).collect();
        if let Some(z) = newton.solve(&start, opts) {
            return Some(finish(z));
        }
    }
    let mut z = anchor.to_vec();
    let mut elapsed = 0.0;
    let ode = OdeOptions { max_steps: 200_000, ..OdeOptions::default() };
    for &horizon in &opts.ode_horizons {
        let sol = integrate_network(net, &z, horizon - elapsed, &ode).ok()?;
        elapsed = horizon;
        z = sol.final_state().to_vec();
        if z.iter().any(|&v| v < BOUNDARY) {
            return None;
        }
        if let Some(p) = newton.solve(&z, opts) {
            return Some(finish(p));
        }
    }
    None
}

#[derive(Clone, Debug, Serialize)]
pub struct AcrReport {
    /// Always "numerical evidence": constancy is observed on samples, not proved.
    pub label: &'static str,
    pub acr_species: Vec<usize>,
    pub acr_species_names: Vec<String>,
    /// `(species index, value)` pairs for the ACR species.
    pub acr_values: Vec<(usize, f64)>,
    pub non_degenerate: bool,
    pub equilibria_sampled: usize,
    pub anchors_tried: usize,
    pub equilibria: Vec<EquilibriumPoint>,
    pub warnings: Vec<String>,
}

impl AcrReport {
    pub fn value_of(&self, species: usize) -> Option<f64> {
        self.acr_values.iter().find(|(i, _)| *i == species).map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug)]
pub struct AcrOptions {
    pub num_classes: usize,
    pub seed: u64,
    /// Anchors are log-uniform on `[lo, hi]` per coordinate.
    pub anchor_range: (f64, f64),
    pub rel_tol: f64,
}

impl Default for AcrOptions {
    fn default() -> Self {
        Self { num_classes: 8, seed: 0, anchor_range: (1e-2, 1e2), rel_tol: 1e-6 }
    }
}

/// Samples compatibility classes and reports species whose equilibrium
/// value is the same in all of them.
pub fn detect_acr(net: &ReactionNetwork, opts: &AcrOptions) -> AcrReport {
    assert!(opts.num_classes >= 2, "ACR detection needs at least two classes");
    let n = net.num_species();
    let (lo, hi) = (opts.anchor_range.0.ln(), opts.anchor_range.1.ln());
    let found: Vec<Option<EquilibriumPoint>> = (0..opts.num_classes)
        .into_par_iter()
        .map(|k| {
            let seed = derive_seed(opts.seed, k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let anchor: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi).exp()).collect();
            let eo = EquilibriumOptions { seed, ..EquilibriumOptions::default() };
            find_positive_equilibrium(net, &anchor, &eo)
        })
        .collect();
    let equilibria: Vec<EquilibriumPoint> = found.into_iter().flatten().collect();
    let mut warnings = Vec::new();
    let mut acr_species = Vec::new();
    let mut acr_values = Vec::new();
    if equilibria.is_empty() {
        warnings.push("no positive equilibrium found in any sampled class".to_string());
    } else {
        for i in 0..n {
            let vals: Vec<f64> = equilibria.iter().map(|e| e.concentrations[i]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            if vals.iter().all(|v| (v - mean).abs() <= opts.rel_tol * mean) {
                acr_species.push(i);
                acr_values.push((i, mean));
            }
        }
    }
    let distinct = equilibria.iter().skip(1).any(|e| {
        e.concentrations
            .iter()
            .zip(&equilibria[0].concentrations)
            .any(|(a, b)| (a - b).abs() > opts.rel_tol * a.abs().max(b.abs()))
    });
    if equilibria.len() < 2 || !distinct {
        warnings.push(format!(
            "degenerate: {} equilibria found, fewer than two distinct; ACR is vacuous",
            equilibria.len()
        ));
    }
    let names = net.species_names();
    AcrReport {
        label: "numerical evidence",
        acr_species_names: acr_species.iter().map(|&i| names[i].clone()).collect(),
        acr_species,
        acr_values,
        non_degenerate: distinct,
        equilibria_sampled: equilibria.len(),
        anchors_tried: opts.num_classes,
        equilibria,
        warnings,
    }
}

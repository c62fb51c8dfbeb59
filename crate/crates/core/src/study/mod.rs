//! Ensemble studies over a grid of scale parameters: path distance to the
//! continuous limit, time-averaged residuals of discrete observables and
//! fixed-time marginals against their limiting laws.

mod config;
mod report;

use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::ode::{OdeError, OdeOptions, OdeSolution};
use crate::dynamics::rng::{derive_seed, replica_rng};
use crate::dynamics::ssa::{Observer, Ssa, SsaOptions};
use crate::dynamics::SupDistance;
use crate::equilibria::{detect_acr, AcrOptions};
use crate::model::{parse_network, ParseError, ReactionNetwork};
use crate::multiscale::{
    audit_assumptions, build_scaled_system, render_reductions, AuditOptions, Averaging, ContinuousReduction,
    DiscreteReduction, ScalingError, ScalingSpec, Verdict,
};
use crate::statistics::{
    best_fit_poisson, distribution_distance, truncated_stationary, DiscreteDistribution, EmpiricalMarginal,
    PoissonReference, ReferenceCurve, StationaryOptions, StatisticsError, TimeAverageResidual,
};
use crate::structural::analyze_structure;

pub use config::{AveragingMode, ConfigError, Expectation, ExperimentConfig, Observable, Thresholds, SCHEMA_VERSION};
pub use report::{render_summary, write_outputs, Check, MarginalRow, NRow, ReplicaFailure, StudyReport, StudyVerdict};

/// Points of the tabulated reference curves `t -> E[g(J^{z(t)})]`.
const REFERENCE_GRID: usize = 201;
/// Resamples used to estimate the sampling noise of the total variation.
const NOISE_RESAMPLES: u64 = 20;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}:{0}", path = .1)]
    Parse(ParseError, String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Statistics(#[from] StatisticsError),
    #[error("continuous limit: {0}")]
    Ode(#[from] OdeError),
    #[error("writing outputs: {0}")]
    Io(#[from] std::io::Error),
}

/// Settings that override the config file.
#[derive(Clone, Debug, Default)]
pub struct StudyOverrides {
    pub seed: Option<u64>,
    /// Forces averaging against the stationary distribution.
    pub stationary_averaging: bool,
}

/// Raw per-replica results kept for the CSV outputs.
#[derive(Clone, Debug)]
pub struct ReplicaOutcome {
    pub index: u64,
    pub seed: u64,
    pub events: u64,
    /// Projected marginal state at each marginal time.
    pub snapshots: Vec<Vec<u64>>,
    pub sup_distance: Option<f64>,
    pub residuals: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    pub n: u64,
    pub replicas: Vec<ReplicaOutcome>,
    pub marginals: Vec<EmpiricalMarginal>,
    /// Reference law at each marginal time.
    pub references: Vec<DiscreteDistribution>,
}

/// Everything a study produced.
#[derive(Clone, Debug)]
pub struct StudyRun {
    pub report: StudyReport,
    pub ensembles: Vec<Ensemble>,
    pub ode: Option<OdeSolution>,
    pub continuous_names: Vec<String>,
}

/// Records the projected state at fixed times.
struct Snapshots<'a> {
    times: &'a [f64],
    species: &'a [usize],
    next: usize,
    held: Vec<u64>,
    out: Vec<Vec<u64>>,
}

impl<'a> Snapshots<'a> {
    fn new(times: &'a [f64], species: &'a [usize]) -> Self {
        Self { times, species, next: 0, held: Vec::new(), out: Vec::with_capacity(times.len()) }
    }

    fn flush_before(&mut self, t: f64) {
        while self.next < self.times.len() && self.times[self.next] <= t {
            self.out.push(self.held.clone());
            self.next += 1;
        }
    }

    fn hold(&mut self, x: &[u64]) {
        self.held.clear();
        self.held.extend(self.species.iter().map(|&i| x[i]));
    }
}

impl Observer for Snapshots<'_> {
    fn start(&mut self, _t: f64, x: &[u64]) {
        self.hold(x);
    }
    fn jump(&mut self, t: f64, x: &[u64], _r: usize) {
        self.flush_before(t);
        self.hold(x);
    }
    fn finish(&mut self, _t_end: f64, _x: &[u64]) {
        self.flush_before(f64::INFINITY);
    }
}

type BoxedG = Box<dyn Fn(&[u64]) -> f64 + Sync>;

/// Path observers for the first `path_replicas` replicas.
struct PathObservers<'a> {
    sup: Option<SupDistance<'a>>,
    residuals: Vec<TimeAverageResidual<'a, &'a BoxedG>>,
}

impl Observer for PathObservers<'_> {
    fn start(&mut self, t: f64, x: &[u64]) {
        if let Some(s) = &mut self.sup {
            s.start(t, x);
        }
        self.residuals.iter_mut().for_each(|r| r.start(t, x));
    }
    fn jump(&mut self, t: f64, x: &[u64], r: usize) {
        if let Some(s) = &mut self.sup {
            s.jump(t, x, r);
        }
        self.residuals.iter_mut().for_each(|o| o.jump(t, x, r));
    }
    fn finish(&mut self, t: f64, x: &[u64]) {
        if let Some(s) = &mut self.sup {
            s.finish(t, x);
        }
        self.residuals.iter_mut().for_each(|r| r.finish(t, x));
    }
}

/// Tabulated curve with linear interpolation.
struct Table {
    t_end: f64,
    values: Vec<f64>,
}

impl Table {
    fn eval(&self, t: f64) -> f64 {
        let h = self.t_end / (self.values.len() - 1) as f64;
        let s = (t / h).clamp(0.0, (self.values.len() - 1) as f64);
        let k = (s.floor() as usize).min(self.values.len() - 2);
        let f = s - k as f64;
        self.values[k] * (1.0 - f) + self.values[k + 1] * f
    }

    fn constant(&self) -> Option<f64> {
        let v0 = self.values[0];
        self.values.iter().all(|v| (v - v0).abs() <= 1e-12 * (1.0 + v0.abs())).then_some(v0)
    }
}

/// Limiting law of the discrete species at continuous state `w`.
struct LimitLaw<'a> {
    reduction: &'a ContinuousReduction,
    /// Positions within the discrete species of the marginal species.
    keep: Vec<usize>,
}

impl LimitLaw<'_> {
    fn at(&self, w: &[f64]) -> Result<DiscreteDistribution, StudyError> {
        let d = &self.reduction.discrete;
        match &self.reduction.averaging {
            Averaging::ComplexBalanced => {
                let q = self.reduction.discrete_equilibrium(w)?;
                Ok(PoissonReference::new(self.keep.iter().map(|&k| q[k]).collect()).distribution()?)
            }
            Averaging::Stationary(opts) => {
                let net =
                    d.network_at(w)?.ok_or_else(|| StudyError::Input("discrete system has no reactions".into()))?;
                Ok(truncated_stationary(&net, opts)?.distribution().project(&self.keep))
            }
        }
    }
}

fn species_index(net: &ReactionNetwork, name: &str) -> Result<usize, StudyError> {
    net.species_index(name).ok_or_else(|| StudyError::Input(format!("unknown species `{name}`")))
}

/// Loads the network and builds the scaling description of a config.
pub fn load_spec(cfg: &ExperimentConfig) -> Result<ScalingSpec, StudyError> {
    let path = cfg.network.display().to_string();
    let src = std::fs::read_to_string(&cfg.network)
        .map_err(|e| StudyError::Input(format!("cannot read network {path}: {e}")))?;
    let net = parse_network(&src).map_err(|e| StudyError::Parse(e, path))?;
    let names = net.species_names();
    for key in cfg.alpha.keys().chain(cfg.x0.keys()) {
        species_index(&net, key)?;
    }
    let mut alpha = Vec::with_capacity(names.len());
    let mut x0 = Vec::with_capacity(names.len());
    for s in &names {
        alpha.push(*cfg.alpha.get(s).ok_or_else(|| StudyError::Input(format!("alpha does not assign species {s}")))?);
        x0.push(*cfg.x0.get(s).ok_or_else(|| StudyError::Input(format!("x0 does not assign species {s}")))?);
    }
    Ok(ScalingSpec::new(net, alpha, x0, cfg.n_grid.clone())?)
}

/// Mean and standard deviation of the total variation between the
/// reference and `replicas` independent draws from it.
fn noise_floor(reference: &DiscreteDistribution, replicas: u64, seed: u64) -> (f64, f64) {
    let probs: Vec<f64> = reference.iter().map(|(_, p)| p).collect();
    let states: Vec<&Vec<u64>> = reference.iter().map(|(s, _)| s).collect();
    let Ok(index) = WeightedIndex::new(&probs) else { return (0.0, 0.0) };
    let tvs: Vec<f64> = (0..NOISE_RESAMPLES)
        .map(|k| {
            let mut rng = replica_rng(seed, k);
            let mut m = EmpiricalMarginal::new(0.0);
            for _ in 0..replicas {
                m.add(states[index.sample(&mut rng)].clone());
            }
            let total: u64 = m.counts.values().sum();
            let mut tv = 0.0;
            for (s, p) in reference.iter() {
                tv += (m.counts.get(s).copied().unwrap_or(0) as f64 / total as f64 - p).abs();
            }
            0.5 * tv
        })
        .collect();
    let mean = tvs.iter().sum::<f64>() / tvs.len() as f64;
    let var = tvs.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (tvs.len() - 1) as f64;
    (mean, var.sqrt())
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Runs the study described by `cfg`.
pub fn run_study(cfg: &ExperimentConfig, overrides: &StudyOverrides) -> Result<StudyRun, StudyError> {
    let mut cfg = cfg.clone();
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if overrides.stationary_averaging {
        cfg.averaging = AveragingMode::Stationary;
    }
    cfg.validate()?;
    let spec = load_spec(&cfg)?;
    let net = &spec.network;
    let names = net.species_names();
    let averaging = match cfg.averaging {
        AveragingMode::ComplexBalanced => Averaging::ComplexBalanced,
        AveragingMode::Stationary => Averaging::Stationary(StationaryOptions::default()),
    };

    let structural = analyze_structure(net);
    let acr = net.is_mass_action().then(|| detect_acr(net, &AcrOptions { seed: cfg.seed, ..AcrOptions::default() }));
    let audit = audit_assumptions(
        &spec,
        &AuditOptions { t_end: cfg.t_end, seed: cfg.seed, ..AuditOptions::default() },
        &averaging,
    )?;
    let discrete = DiscreteReduction::build(&spec)?;
    let reduction = ContinuousReduction::build(&discrete, averaging)?;
    let reductions_text = render_reductions(&reduction).to_text();

    let marginal_names = cfg.marginal_species.clone().unwrap_or_else(|| discrete.species_names());
    let mut marginal_species = Vec::new();
    let mut keep = Vec::new();
    for s in &marginal_names {
        let i = species_index(net, s)?;
        let k = discrete
            .species
            .iter()
            .position(|&j| j == i)
            .ok_or_else(|| StudyError::Input(format!("marginal species {s} is not discrete")))?;
        marginal_species.push(i);
        keep.push(k);
    }
    let law = LimitLaw { reduction: &reduction, keep };

    let continuous_names = reduction.species_names();
    let ode = if reduction.species.is_empty() {
        None
    } else {
        Some(reduction.integrate(&reduction.initial_concentrations(), cfg.t_end, &OdeOptions::default())?)
    };
    let z_at = |t: f64| ode.as_ref().map_or_else(Vec::new, |o| o.eval(t));

    // Reference curves E[g(J^{z(t)})] for each observable.
    let mut obs_species = Vec::new();
    let mut tables = Vec::new();
    let grid: Vec<f64> = (0..REFERENCE_GRID).map(|k| cfg.t_end * k as f64 / (REFERENCE_GRID - 1) as f64).collect();
    let laws_on_grid: Vec<DiscreteDistribution> = if cfg.observables.is_empty() {
        Vec::new()
    } else {
        let full = LimitLaw { reduction: &reduction, keep: (0..discrete.species.len()).collect() };
        grid.iter().map(|&t| full.at(&z_at(t))).collect::<Result<_, _>>()?
    };
    for o in &cfg.observables {
        let i = species_index(net, o.species())?;
        let k = discrete
            .species
            .iter()
            .position(|&j| j == i)
            .ok_or_else(|| StudyError::Input(format!("observable species {} is not discrete", o.species())))?;
        obs_species.push(i);
        let values = laws_on_grid.iter().map(|mu| mu.expectation(|x| o.eval(x[k]))).collect();
        tables.push(Table { t_end: cfg.t_end, values });
    }
    let gs: Vec<BoxedG> = cfg
        .observables
        .iter()
        .map(|o| {
            let o = o.clone();
            Box::new(move |x: &[u64]| o.eval(x[0])) as BoxedG
        })
        .collect();
    let curves: Vec<Box<dyn Fn(f64) -> f64 + Sync + '_>> =
        tables.iter().map(|tb| Box::new(move |t: f64| tb.eval(t)) as Box<dyn Fn(f64) -> f64 + Sync>).collect();

    let times = cfg.marginal_times();
    let references: Vec<DiscreteDistribution> = times.iter().map(|&t| law.at(&z_at(t))).collect::<Result<_, _>>()?;

    let mut ensembles = Vec::new();
    for &n in &cfg.n_grid {
        let scaled = build_scaled_system(&spec, n)?;
        let ssa = Ssa::new(&scaled.network);
        let master = derive_seed(cfg.seed, n);
        let ssa_opts = SsaOptions { scale: Some(n), ..SsaOptions::default() };
        log::info!("{}: N = {n}, {} replicas", cfg.name, cfg.replicas);
        let replicas: Vec<ReplicaOutcome> = (0..cfg.replicas)
            .into_par_iter()
            .map(|index| {
                let mut rng = replica_rng(master, index);
                let mut snaps = Snapshots::new(&times, &marginal_species);
                let track = index < cfg.path_replicas;
                let mut paths = PathObservers {
                    sup: (track && ode.is_some())
                        .then(|| SupDistance::new(ode.as_ref().expect("checked"), &spec.alpha, n as f64)),
                    residuals: if track {
                        gs.iter()
                            .zip(&obs_species)
                            .zip(tables.iter().zip(&curves))
                            .map(|((g, &i), (tb, curve))| {
                                let reference = match tb.constant() {
                                    Some(c) => ReferenceCurve::Constant(c),
                                    None => ReferenceCurve::Curve(curve.as_ref()),
                                };
                                TimeAverageResidual::new(vec![i], g, reference, cfg.t_end)
                            })
                            .collect()
                    } else {
                        Vec::new()
                    },
                };
                let result =
                    ssa.run(&scaled.initial_state, cfg.t_end, &mut rng, &mut (&mut snaps, &mut paths), &ssa_opts);
                let seed = derive_seed(master, index);
                match result {
                    Ok(out) => ReplicaOutcome {
                        index,
                        seed,
                        events: out.events,
                        snapshots: snaps.out,
                        sup_distance: paths.sup.map(|s| s.sup),
                        residuals: paths.residuals.iter().map(|r| r.sup).collect(),
                        error: None,
                    },
                    Err(e) => ReplicaOutcome {
                        index,
                        seed,
                        events: 0,
                        snapshots: Vec::new(),
                        sup_distance: None,
                        residuals: Vec::new(),
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect();
        let mut marginals: Vec<EmpiricalMarginal> = times.iter().map(|&t| EmpiricalMarginal::new(t)).collect();
        for r in replicas.iter().filter(|r| r.error.is_none()) {
            for (m, s) in marginals.iter_mut().zip(&r.snapshots) {
                m.add(s.clone());
            }
        }
        ensembles.push(Ensemble { n, replicas, marginals, references: references.clone() });
    }

    let rows = summarize(&cfg, &ensembles)?;
    let mut notes = cfg.notes.clone();
    notes.extend(audit.notes.iter().cloned());
    let failures = ensembles
        .iter()
        .flat_map(|e| {
            e.replicas.iter().filter_map(move |r| {
                r.error.as_ref().map(|err| ReplicaFailure {
                    n: e.n,
                    replica: r.index,
                    seed: r.seed,
                    error: err.clone(),
                })
            })
        })
        .collect();
    let checks = judge(&cfg, &rows, &audit);
    let verdict = if checks.iter().all(|c| c.pass) { StudyVerdict::Pass } else { StudyVerdict::Fail };
    let report = StudyReport {
        name: cfg.name.clone(),
        config: cfg.clone(),
        species: names,
        discrete_species: discrete.species_names(),
        continuous_species: continuous_names.clone(),
        marginal_species: marginal_names,
        structural: serde_json::to_value(&structural).expect("serializable"),
        acr: acr.map(|a| serde_json::to_value(&a).expect("serializable")),
        audit: serde_json::to_value(&audit).expect("serializable"),
        reductions: reductions_text,
        rows,
        checks,
        verdict,
        notes,
        failures,
    };
    Ok(StudyRun { report, ensembles, ode, continuous_names })
}

fn summarize(cfg: &ExperimentConfig, ensembles: &[Ensemble]) -> Result<Vec<NRow>, StudyError> {
    let mut rows = Vec::new();
    for e in ensembles {
        let ok: Vec<&ReplicaOutcome> = e.replicas.iter().filter(|r| r.error.is_none()).collect();
        let sup_distance_median = median(ok.iter().filter_map(|r| r.sup_distance).collect());
        let residual_medians = (0..cfg.observables.len())
            .map(|k| median(ok.iter().filter_map(|r| r.residuals.get(k).copied()).collect()))
            .collect();
        let mut marginals = Vec::new();
        for (k, (m, reference)) in e.marginals.iter().zip(&e.references).enumerate() {
            if m.replicas == 0 {
                continue;
            }
            let dist = distribution_distance(m, reference, 0)?;
            let fit = best_fit_poisson(m).distribution()?;
            let best = distribution_distance(m, &fit, m.dim())?;
            let (floor_mean, floor_sd) = noise_floor(reference, m.replicas, derive_seed(cfg.seed ^ e.n, k as u64));
            marginals.push(MarginalRow {
                t: m.t,
                replicas: m.replicas,
                total_variation: dist.total_variation,
                chi_square_statistic: dist.chi_square_statistic,
                chi_square_dof: dist.chi_square_dof,
                chi_square_pvalue: dist.chi_square_pvalue,
                mean_error: dist.mean_error,
                empirical_mean: dist.empirical_mean,
                reference_mean: dist.reference_mean,
                empirical_fano: m.mean().iter().zip(m.variance()).map(|(mu, v)| v / mu).collect(),
                best_fit_total_variation: best.total_variation,
                noise_floor_mean: floor_mean,
                noise_floor_sd: floor_sd,
                degenerate: dist.degenerate,
            });
        }
        rows.push(NRow {
            n: e.n,
            replicas_ok: ok.len() as u64,
            replicas_failed: (e.replicas.len() - ok.len()) as u64,
            mean_events: ok.iter().map(|r| r.events as f64).sum::<f64>() / ok.len().max(1) as f64,
            sup_distance_median,
            residual_medians,
            marginals,
        });
    }
    Ok(rows)
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn judge(cfg: &ExperimentConfig, rows: &[NRow], audit: &crate::multiscale::AssumptionAudit) -> Vec<Check> {
    let th = &cfg.thresholds;
    let mut checks = Vec::new();
    let stationary = cfg.averaging == AveragingMode::Stationary;
    // In stationary mode complex balance is expected to fail.
    let assumptions = if stationary {
        audit.discrete_fast.verdict.and(audit.limit_exists.verdict)
    } else {
        audit.reduction_verdict()
    };
    checks.push(Check::new(
        "assumptions",
        f64::from(u8::from(assumptions == Verdict::Pass)),
        Some(1.0),
        assumptions == Verdict::Pass,
        format!("{assumptions:?}"),
    ));
    if rows.iter().any(|r| r.replicas_ok == 0) {
        checks.push(Check::new("replicas", 0.0, None, false, "every replica failed at some N".into()));
        return checks;
    }
    let last = rows.last().expect("non-empty grid");

    let sups: Vec<f64> = rows.iter().filter_map(|r| r.sup_distance_median).collect();
    if let (Some(thr), true) = (th.sup_distance, sups.len() == rows.len()) {
        let v = *sups.last().expect("non-empty");
        checks.push(Check::new(
            "sup_distance",
            v,
            Some(thr),
            v < thr,
            "median sup_t |X_c/N - z(t)| at the largest N".into(),
        ));
        checks.push(Check::new(
            "sup_distance_trend",
            sups.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max),
            Some(0.0),
            strictly_decreasing(&sups),
            format!("medians across N: {sups:?}"),
        ));
    }
    for (k, o) in cfg.observables.iter().enumerate() {
        let res: Vec<f64> = rows.iter().filter_map(|r| r.residual_medians[k]).collect();
        if res.len() != rows.len() {
            continue;
        }
        let v = *res.last().expect("non-empty");
        if let Some(thr) = th.residual {
            checks.push(Check::new(
                &format!("residual[{}]", o.label()),
                v,
                Some(thr),
                v < thr,
                "median sup running-integral residual at the largest N".into(),
            ));
        }
        checks.push(Check::new(
            &format!("residual_trend[{}]", o.label()),
            res.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max),
            Some(0.0),
            strictly_decreasing(&res),
            format!("medians across N: {res:?}"),
        ));
    }
    // Every marginal time is judged; each check reports the worst time.
    if let Some(m) = worst_tv(last) {
        let times: Vec<f64> = last.marginals.iter().map(|m| m.t).collect();
        checks.push(Check::new(
            "total_variation",
            m.total_variation,
            Some(th.total_variation),
            m.total_variation < th.total_variation,
            format!("largest over t in {times:?} at N = {} against the limiting law, attained at t = {}", last.n, m.t),
        ));
        // Successive TVs may not increase by more than twice the sampling
        // noise of a TV estimate at this replica count.
        let tvs: Vec<(f64, f64)> =
            rows.iter().filter_map(|r| worst_tv(r).map(|m| (m.total_variation, m.noise_floor_sd))).collect();
        let worst =
            tvs.windows(2).map(|w| w[1].0 - w[0].0 - 2.0 * w[1].1.max(w[0].1)).fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new(
            "total_variation_trend",
            worst,
            Some(0.0),
            worst <= 0.0 || tvs.len() < 2,
            format!("largest TV across N: {:?}", tvs.iter().map(|p| p.0).collect::<Vec<_>>()),
        ));
        if let Some(thr) = th.mean_error {
            let v = last.marginals.iter().map(|m| m.mean_error).fold(0.0, f64::max);
            checks.push(Check::new(
                "mean_error",
                v,
                Some(thr),
                v < thr,
                "largest relative error of the marginal mean".into(),
            ));
        }
        if cfg.expectation == Expectation::NonPoisson {
            let thr = th.min_best_fit_total_variation.unwrap_or(0.0);
            let v = last.marginals.iter().map(|m| m.best_fit_total_variation).fold(f64::INFINITY, f64::min);
            checks.push(Check::new(
                "best_fit_poisson_total_variation",
                v,
                Some(thr),
                v > thr,
                "smallest TV to the Poisson law with the empirical mean must stay above the threshold".into(),
            ));
        }
    }
    checks
}

fn worst_tv(r: &NRow) -> Option<&MarginalRow> {
    r.marginals.iter().max_by(|a, b| a.total_variation.total_cmp(&b.total_variation))
}

/// Loads a config, runs it and writes every output under `out`.
pub fn run_study_file(path: &Path, out: &Path, overrides: &StudyOverrides) -> Result<StudyRun, StudyError> {
    let cfg = ExperimentConfig::load(path)?;
    let run = run_study(&cfg, overrides)?;
    write_outputs(&run, out)?;
    Ok(run)
}

//! Executable checks of the hypotheses under which the reductions describe
//! the large-`N` limit.

use rand::Rng;
use serde::Serialize;

use crate::dynamics::ode::OdeOptions;
use crate::dynamics::rng::replica_rng;
use crate::model::{monomial, RateLaw};
use crate::statistics::{lattice_irreducible, IRREDUCIBILITY_BOUND};
use crate::structural::{certify_complex_balance, ComplexBalanceCertificate};

use super::reduction::{Averaging, ContinuousReduction, DiscreteReduction};
use super::{ScalingError, ScalingSpec};

/// Discrete counts probed by the rate envelope check.
const ENVELOPE_V_MAX: u32 = 64;
/// `N` values probed by the rate envelope check.
const ENVELOPE_N: [f64; 3] = [1e2, 1e3, 1e4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotVerified,
}

impl Verdict {
    pub fn and(self, o: Verdict) -> Verdict {
        match (self, o) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::NotVerified, _) | (_, Verdict::NotVerified) => Verdict::NotVerified,
            _ => Verdict::Pass,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AuditOptions {
    /// Horizon over which the continuous limit must stay positive.
    pub t_end: f64,
    /// Number of log-uniform `w` samples for the complex balance check.
    pub w_samples: usize,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { t_end: 10.0, w_samples: 10, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscreteFastCheck {
    pub verdict: Verdict,
    /// Per discrete species, the reactions changing it with `beta_r = 1`.
    pub witnesses: Vec<(String, Vec<usize>)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BalanceSample {
    pub w: Vec<f64>,
    pub certificate: ComplexBalanceCertificate,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplexBalanceCheck {
    pub verdict: Verdict,
    pub samples: Vec<BalanceSample>,
    /// `None` when reachability was not decided.
    pub irreducible: Option<bool>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitCheck {
    pub verdict: Verdict,
    pub t_end: f64,
    pub min_coordinate: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct StructuralCheck {
    pub verdict: Verdict,
    /// Complexes with two discrete species or a discrete coefficient above 1.
    pub offending_complexes: Vec<String>,
    pub envelopes: Verdict,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionAudit {
    pub discrete_fast: DiscreteFastCheck,
    pub complex_balanced: ComplexBalanceCheck,
    pub limit_exists: LimitCheck,
    pub poisson_structural: StructuralCheck,
    pub notes: Vec<String>,
}

impl AssumptionAudit {
    /// The hypotheses of the averaging theorem, excluding the moment bound.
    pub fn reduction_verdict(&self) -> Verdict {
        self.discrete_fast.verdict.and(self.complex_balanced.verdict).and(self.limit_exists.verdict)
    }

    /// Additionally requires the structural conditions giving Poisson limits.
    pub fn poisson_verdict(&self) -> Verdict {
        self.reduction_verdict().and(self.poisson_structural.verdict)
    }
}

fn check_discrete_fast(spec: &ScalingSpec) -> DiscreteFastCheck {
    let net = &spec.network;
    let names = net.species_names();
    let mut witnesses = Vec::new();
    let mut verdict = Verdict::Pass;
    for s in spec.discrete() {
        let w: Vec<usize> = net
            .reactions()
            .iter()
            .enumerate()
            .filter(|(r, rx)| rx.reaction_vector()[s] != 0 && spec.beta[*r] == 1)
            .map(|(r, _)| r)
            .collect();
        if w.is_empty() {
            verdict = Verdict::Fail;
        }
        witnesses.push((names[s].clone(), w));
    }
    DiscreteFastCheck { verdict, witnesses }
}

/// `w` samples spread log-uniformly over a decade either side of `pi_c(X0)`.
fn sample_ws(spec: &ScalingSpec, opts: &AuditOptions) -> Vec<Vec<f64>> {
    let mut rng = replica_rng(opts.seed, 0);
    let base: Vec<f64> = spec.continuous().iter().map(|&i| spec.x0[i]).collect();
    let mut out = vec![base.clone()];
    while out.len() < opts.w_samples.max(1) {
        out.push(base.iter().map(|&b| b * 10f64.powf(rng.gen_range(-1.0..=1.0))).collect());
    }
    out
}

fn check_complex_balance(d: &DiscreteReduction, opts: &AuditOptions) -> Result<ComplexBalanceCheck, ScalingError> {
    if d.species.is_empty() {
        return Ok(ComplexBalanceCheck {
            verdict: Verdict::Pass,
            samples: Vec::new(),
            irreducible: Some(true),
            detail: "no discrete species".into(),
        });
    }
    let mut samples = Vec::new();
    let mut verdict = Verdict::Pass;
    let mut detail = String::new();
    let mut reference_net = None;
    for w in sample_ws(&d.spec, opts) {
        let Some(net) = d.network_at(&w)? else {
            return Ok(ComplexBalanceCheck {
                verdict: Verdict::Fail,
                samples,
                irreducible: Some(false),
                detail: "discrete system has no reactions".into(),
            });
        };
        let certificate = certify_complex_balance(&net, None);
        if !certificate.holds() && verdict == Verdict::Pass {
            verdict = Verdict::Fail;
            detail = format!("not complex balanced at w = {w:?}");
        }
        reference_net.get_or_insert(net);
        samples.push(BalanceSample { w, certificate });
    }
    let irreducible = reference_net.as_ref().and_then(|n| lattice_irreducible(n, IRREDUCIBILITY_BOUND));
    match irreducible {
        Some(false) => {
            verdict = Verdict::Fail;
            detail = "discrete system is not irreducible on the truncated lattice".into();
        }
        None if verdict == Verdict::Pass => {
            detail = "irreducibility unknown for more than two discrete species".into();
        }
        _ => {}
    }
    if detail.is_empty() {
        detail = format!("complex balanced at {} sampled w", samples.len());
    }
    Ok(ComplexBalanceCheck { verdict, samples, irreducible, detail })
}

fn check_limit(d: &DiscreteReduction, averaging: &Averaging, t_end: f64) -> LimitCheck {
    let fail = |verdict, detail: String| LimitCheck { verdict, t_end, min_coordinate: None, detail };
    let c = match ContinuousReduction::build(d, averaging.clone()) {
        Ok(c) => c,
        Err(e) => return fail(Verdict::NotVerified, format!("continuous system undefined: {e}")),
    };
    if c.species.is_empty() {
        return LimitCheck {
            verdict: Verdict::Pass,
            t_end,
            min_coordinate: None,
            detail: "no continuous species".into(),
        };
    }
    match c.integrate(&c.initial_concentrations(), t_end, &OdeOptions::default()) {
        Ok(sol) if sol.min_coordinate > 0.0 => LimitCheck {
            verdict: Verdict::Pass,
            t_end,
            min_coordinate: Some(sol.min_coordinate),
            detail: "z(t) stays positive".into(),
        },
        Ok(sol) => LimitCheck {
            verdict: Verdict::Fail,
            t_end,
            min_coordinate: Some(sol.min_coordinate),
            detail: "z(t) reaches the boundary".into(),
        },
        Err(e) => fail(Verdict::Fail, format!("integration failed: {e}")),
    }
}

/// Numeric probe of the two rate envelopes for an expression law: the
/// ratio of the scaled rate to `v^{pi_d y}` (times `w^{pi_c y}` for the
/// lower envelope) must stay bounded above and away from zero in `v`.
fn probe_envelopes(spec: &ScalingSpec, r: usize, ws: &[Vec<f64>], lower: bool) -> bool {
    let rx = &spec.network.reactions()[r];
    let discrete = spec.discrete();
    let continuous = spec.continuous();
    let dsource: Vec<(usize, u32)> = rx.source.iter().filter(|&(i, _)| spec.alpha[i] == 0).collect();
    let active = |v: u32| dsource.iter().all(|&(_, c)| v >= c);
    for &n in &ENVELOPE_N {
        for w in ws {
            let wterm = monomial(
                &{
                    let mut z = vec![0.0; spec.network.num_species()];
                    for (k, &i) in continuous.iter().enumerate() {
                        z[i] = w[k];
                    }
                    z
                },
                &rx.source.project(|i| (spec.alpha[i] == 1).then_some(i)),
            );
            let mut ratios = Vec::new();
            for v in 0..=ENVELOPE_V_MAX {
                let mut mixed = vec![0.0; spec.network.num_species()];
                for &i in &discrete {
                    mixed[i] = f64::from(v);
                }
                for (k, &i) in continuous.iter().enumerate() {
                    mixed[i] = w[k];
                }
                let Ok(rate) = spec.scaled_rate(r, &mixed, n) else { return false };
                let vy: f64 = dsource.iter().map(|&(_, c)| f64::from(v).powi(c as i32)).product();
                if vy == 0.0 {
                    if rate.abs() > 1e-12 {
                        return false;
                    }
                    continue;
                }
                ratios.push((v, rate / vy));
            }
            let head = ratios.iter().filter(|(v, _)| *v <= 16).map(|p| p.1);
            let (hmax, hmin) = head.fold((0f64, f64::INFINITY), |(a, b), x| (a.max(x), b.min(x)));
            let tail = ratios.iter().filter(|(v, _)| *v > 16).map(|p| p.1);
            let (tmax, tmin) = tail.fold((0f64, f64::INFINITY), |(a, b), x| (a.max(x), b.min(x)));
            if !(tmax.is_finite() && tmax <= 2.0 * hmax.max(f64::MIN_POSITIVE)) {
                return false;
            }
            if lower {
                let positive = ratios.iter().filter(|(v, _)| active(*v)).all(|p| p.1 > 0.0);
                if !positive || !(tmin >= 0.5 * hmin.min(tmin)) || wterm <= 0.0 {
                    return false;
                }
            }
        }
    }
    true
}

fn check_structural(d: &DiscreteReduction, ws: &[Vec<f64>]) -> StructuralCheck {
    let spec = &d.spec;
    let names = spec.network.species_names();
    let offending_complexes: Vec<String> = spec
        .network
        .complexes()
        .iter()
        .filter(|y| {
            let disc: Vec<u32> = y.iter().filter(|&(i, _)| spec.alpha[i] == 0).map(|(_, c)| c).collect();
            disc.len() > 1 || disc.iter().any(|&c| c > 1)
        })
        .map(|y| y.render(&names))
        .collect();
    let mut envelopes = Verdict::Pass;
    let mut unverified = Vec::new();
    for (r, rx) in spec.network.reactions().iter().enumerate() {
        if let RateLaw::Expression(_) = rx.rate {
            let lower = d.fast.contains(&r);
            if !probe_envelopes(spec, r, ws, lower) {
                envelopes = Verdict::NotVerified;
                unverified.push(r);
            }
        }
    }
    let verdict = if offending_complexes.is_empty() { envelopes } else { Verdict::Fail };
    let detail = match (offending_complexes.is_empty(), unverified.is_empty()) {
        (true, true) => "at most one discrete species per complex, with coefficient 1; rate envelopes hold".into(),
        (false, _) => format!("complexes {} violate the unary condition", offending_complexes.join(", ")),
        (true, false) => format!("rate envelopes not verified for reactions {unverified:?}"),
    };
    StructuralCheck { verdict, offending_complexes, envelopes, detail }
}

/// Runs every check. A discrete system that fails to factor is an error
/// rather than a failed verdict, since no reduction exists to audit.
pub fn audit_assumptions(
    spec: &ScalingSpec,
    opts: &AuditOptions,
    averaging: &Averaging,
) -> Result<AssumptionAudit, ScalingError> {
    let discrete_fast = check_discrete_fast(spec);
    let d = DiscreteReduction::build(spec)?;
    let complex_balanced = check_complex_balance(&d, opts)?;
    let limit_exists = check_limit(&d, averaging, opts.t_end);
    let ws = sample_ws(spec, opts);
    let poisson_structural = check_structural(&d, &ws);

    let mut notes = Vec::new();
    if complex_balanced.verdict == Verdict::Fail {
        notes.push(
            "complex balance fails; rerun with --remark-3-7 to average against the numerically computed \
             stationary distribution of the discrete system"
                .into(),
        );
    }
    if limit_exists.verdict != Verdict::Pass {
        notes.push(
            "z(t) may touch the boundary if the discrete system stays complex balanced with rate constants \
             bounded below on a neighborhood of the trajectory; that alternative is not checked"
                .into(),
        );
    }
    if matches!(averaging, Averaging::Stationary(_)) {
        notes.push("limits averaged against the stationary distribution of the discrete system".into());
    }
    Ok(AssumptionAudit { discrete_fast, complex_balanced, limit_exists, poisson_structural, notes })
}

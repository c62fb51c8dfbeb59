//! Two-scale embedding of a network: discrete species stay O(1), continuous
//! species scale with `N`. Builds the scaled family, the reduced discrete
//! system at frozen continuous concentrations, the averaged continuous
//! system, and checks of the hypotheses under which the reductions
//! describe the `N -> infinity` limit.

pub mod audit;
pub mod reduction;
mod render;

use thiserror::Error;

use crate::model::{Expr, ExpressionLaw, ModelError, RateError, RateLaw, ReactionNetwork};
use crate::statistics::StatisticsError;

pub use audit::{audit_assumptions, AssumptionAudit, AuditOptions, Verdict};
pub use reduction::{Averaging, ContinuousReduction, DiscreteReduction, ReducedReaction};
pub use render::{render_discrete, render_reductions, RenderedReductions};

/// `N` at which undeclared limits are evaluated numerically.
const NUMERIC_LIMIT_N: f64 = 1e7;
/// `N` used to validate declared limits on the probe grid.
const VALIDATION_N: f64 = 1e6;
/// Largest probe grid; bigger grids are thinned with a fixed stride.
const MAX_PROBES: usize = 20_000;

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error("{what} has {got} entries, the network has {expected}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("alpha for species {species} must be 0 or 1, got {value}")]
    InvalidAlpha { species: String, value: u8 },
    #[error("initial value for species {species} must be positive, got {value}")]
    NonPositiveInitial { species: String, value: f64 },
    #[error("N must be at least 1")]
    ZeroScale,
    #[error("unknown species {0}")]
    UnknownSpecies(String),
    #[error("reaction {reaction}: {detail}; declare `scale N^p` and `limit(...)` explicitly")]
    UndeclaredScale { reaction: usize, detail: String },
    #[error("reaction {reaction}: declared limit disagrees with the scaled law by {error:e} at N = {n}")]
    LimitMismatch { reaction: usize, error: f64, n: f64 },
    #[error("assumption on the discrete kinetics violated by reaction {reaction}: {detail}")]
    NotFactorable { reaction: usize, detail: String },
    #[error("discrete system is not complex balanced at w = {w:?}: {detail}")]
    NotComplexBalanced { w: Vec<f64>, detail: String },
    #[error("stationary averaging needs at most 2 discrete species, got {0}")]
    AveragingDimension(usize),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Statistics(#[from] StatisticsError),
}

/// How the limit of `N^{-beta} lambda^N(v, [Nw])` is obtained.
#[derive(Clone, Debug)]
enum LimitLaw {
    MassAction {
        kappa: f64,
    },
    Declared {
        expr: Expr,
    },
    /// Evaluated at a large `N`.
    Numeric {
        expr: Expr,
    },
}

/// The species partition and the data of the scaled family.
#[derive(Clone, Debug)]
pub struct ScalingSpec {
    pub network: ReactionNetwork,
    /// `1` for continuous species, `0` for discrete ones.
    pub alpha: Vec<u8>,
    /// Per reaction, the largest `alpha` over source species.
    pub beta: Vec<u8>,
    /// Limit of `N^{-alpha} X^N(0)`.
    pub x0: Vec<f64>,
    pub n_grid: Vec<u64>,
    /// Per reaction, the `p` in `lambda^N = N^p lambda`.
    exponents: Vec<i32>,
    limits: Vec<LimitLaw>,
}

impl ScalingSpec {
    pub fn new(network: ReactionNetwork, alpha: Vec<u8>, x0: Vec<f64>, n_grid: Vec<u64>) -> Result<Self, ScalingError> {
        let ns = network.num_species();
        if alpha.len() != ns {
            return Err(ScalingError::Dimension { what: "alpha", expected: ns, got: alpha.len() });
        }
        if x0.len() != ns {
            return Err(ScalingError::Dimension { what: "X0", expected: ns, got: x0.len() });
        }
        let names = network.species_names();
        for (i, &a) in alpha.iter().enumerate() {
            if a > 1 {
                return Err(ScalingError::InvalidAlpha { species: names[i].clone(), value: a });
            }
            if !(x0[i] > 0.0) {
                return Err(ScalingError::NonPositiveInitial { species: names[i].clone(), value: x0[i] });
            }
        }
        if n_grid.contains(&0) {
            return Err(ScalingError::ZeroScale);
        }
        let beta: Vec<u8> =
            network.reactions().iter().map(|rx| rx.source.iter().map(|(i, _)| alpha[i]).max().unwrap_or(0)).collect();
        let mut exponents = Vec::with_capacity(beta.len());
        let mut limits = Vec::with_capacity(beta.len());
        for (r, rx) in network.reactions().iter().enumerate() {
            let cont_order: u32 = rx.source.iter().filter(|&(i, _)| alpha[i] == 1).map(|(_, c)| c).sum();
            let default = i32::from(beta[r]) - cont_order as i32;
            match &rx.rate {
                RateLaw::MassAction { kappa, .. } => {
                    exponents.push(default);
                    limits.push(LimitLaw::MassAction { kappa: *kappa });
                }
                RateLaw::Expression(ExpressionLaw { expr, scale, limit }) => {
                    exponents.push(scale.unwrap_or(default));
                    limits.push(match limit {
                        Some(l) => LimitLaw::Declared { expr: l.clone() },
                        None => LimitLaw::Numeric { expr: expr.clone() },
                    });
                }
            }
        }
        let spec = Self { network, alpha, beta, x0, n_grid, exponents, limits };
        spec.validate_expression_limits()?;
        Ok(spec)
    }

    /// Builds a spec from the names of the discrete species and initial
    /// values by species name.
    pub fn with_discrete(
        network: ReactionNetwork,
        discrete: &[&str],
        x0: &[(&str, f64)],
        n_grid: Vec<u64>,
    ) -> Result<Self, ScalingError> {
        let mut alpha = vec![1u8; network.num_species()];
        for d in discrete {
            let i = network.species_index(d).ok_or_else(|| ScalingError::UnknownSpecies(d.to_string()))?;
            alpha[i] = 0;
        }
        let mut init = vec![f64::NAN; network.num_species()];
        for (name, v) in x0 {
            let i = network.species_index(name).ok_or_else(|| ScalingError::UnknownSpecies(name.to_string()))?;
            init[i] = *v;
        }
        Self::new(network, alpha, init, n_grid)
    }

    pub fn discrete(&self) -> Vec<usize> {
        (0..self.alpha.len()).filter(|&i| self.alpha[i] == 0).collect()
    }

    pub fn continuous(&self) -> Vec<usize> {
        (0..self.alpha.len()).filter(|&i| self.alpha[i] == 1).collect()
    }

    /// The `p` in `lambda_r^N = N^p lambda_r`.
    pub fn exponent(&self, r: usize) -> i32 {
        self.exponents[r]
    }

    /// Whether the limit of reaction `r` is computed numerically.
    pub fn has_numeric_limit(&self, r: usize) -> bool {
        matches!(self.limits[r], LimitLaw::Numeric { .. })
    }

    /// Limiting rate `lambda_r(v, w)` at the mixed vector holding counts
    /// for discrete species and concentrations for continuous ones.
    pub fn limit_rate(&self, r: usize, mixed: &[f64]) -> f64 {
        let rx = &self.network.reactions()[r];
        for (i, c) in rx.source.iter() {
            let blocked = if self.alpha[i] == 0 { mixed[i] < f64::from(c) } else { mixed[i] <= 0.0 };
            if blocked {
                return 0.0;
            }
        }
        match &self.limits[r] {
            LimitLaw::MassAction { kappa } => {
                let mut acc = *kappa;
                for (i, c) in rx.source.iter() {
                    if self.alpha[i] == 0 {
                        for k in 0..c {
                            acc *= mixed[i] - f64::from(k);
                        }
                    } else {
                        acc *= mixed[i].powi(c as i32);
                    }
                }
                acc
            }
            LimitLaw::Declared { expr } => expr.eval(mixed),
            LimitLaw::Numeric { expr } => self.scaled_expression(r, expr, mixed, NUMERIC_LIMIT_N),
        }
    }

    /// `N^{-beta} N^p expr(v, [Nw])`.
    fn scaled_expression(&self, r: usize, expr: &Expr, mixed: &[f64], n: f64) -> f64 {
        let x: Vec<f64> =
            mixed.iter().zip(&self.alpha).map(|(&m, &a)| if a == 1 { (n * m).floor() } else { m }).collect();
        let factor = n.powi(self.exponents[r] - i32::from(self.beta[r]));
        factor * expr.eval(&x)
    }

    /// `N^{-beta} lambda^N_r(v, [Nw])` for the scaled family.
    pub fn scaled_rate(&self, r: usize, mixed: &[f64], n: f64) -> Result<f64, RateError> {
        let rx = &self.network.reactions()[r];
        let x: Vec<u64> = mixed
            .iter()
            .zip(&self.alpha)
            .map(|(&m, &a)| if a == 1 { (n * m).floor() as u64 } else { m as u64 })
            .collect();
        if !rx.enabled(&x) {
            return Ok(0.0);
        }
        let base = self.network.evaluate_rate(r, &x)?;
        Ok(base * n.powi(self.exponents[r] - i32::from(self.beta[r])))
    }

    /// Probe points `(v, w)` merged into mixed vectors: `v` over `{0..5}`
    /// per discrete species, `w` over `{0.5, 1, 2}` per continuous species.
    pub fn probe_grid(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .alpha
            .iter()
            .map(|&a| if a == 0 { (0..=5).map(f64::from).collect() } else { vec![0.5, 1.0, 2.0] })
            .collect();
        let total: usize = axes.iter().map(Vec::len).product();
        let stride = total.div_ceil(MAX_PROBES).max(1);
        let mut out = Vec::with_capacity(total / stride + 1);
        let mut idx = vec![0usize; axes.len()];
        for k in 0..total {
            if k % stride == 0 {
                out.push(idx.iter().zip(&axes).map(|(&i, ax)| ax[i]).collect());
            }
            for (d, ax) in idx.iter_mut().zip(&axes) {
                *d += 1;
                if *d < ax.len() {
                    break;
                }
                *d = 0;
            }
        }
        out
    }

    fn validate_expression_limits(&self) -> Result<(), ScalingError> {
        let probes = self.probe_grid();
        for (r, law) in self.limits.iter().enumerate() {
            match law {
                LimitLaw::MassAction { .. } => {}
                LimitLaw::Declared { .. } => {
                    let mut worst: f64 = 0.0;
                    for p in &probes {
                        let scaled = self.scaled_rate(r, p, VALIDATION_N)?;
                        let limit = self.limit_rate(r, p);
                        worst = worst.max((scaled - limit).abs() / (1.0 + limit.abs()));
                    }
                    if !(worst < 1e-3) {
                        let undeclared =
                            matches!(&self.network.reactions()[r].rate, RateLaw::Expression(l) if l.scale.is_none());
                        return Err(if undeclared {
                            ScalingError::UndeclaredScale {
                                reaction: r,
                                detail: format!(
                                    "default exponent N^{} does not reproduce the declared limit (error {worst:e})",
                                    self.exponents[r]
                                ),
                            }
                        } else {
                            ScalingError::LimitMismatch { reaction: r, error: worst, n: VALIDATION_N }
                        });
                    }
                }
                LimitLaw::Numeric { expr } => {
                    for p in &probes {
                        let a = self.scaled_expression(r, expr, p, NUMERIC_LIMIT_N / 10.0);
                        let b = self.scaled_expression(r, expr, p, NUMERIC_LIMIT_N);
                        if !a.is_finite() || !b.is_finite() || (a - b).abs() > 1e-4 * (1.0 + b.abs()) {
                            return Err(ScalingError::UndeclaredScale {
                                reaction: r,
                                detail: format!(
                                    "N^{} lambda(v, [Nw]) does not settle as N grows (probe {p:?})",
                                    self.exponents[r] - i32::from(self.beta[r])
                                ),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Discrete coordinates `round(X0)`, continuous `floor(N X0)`.
    pub fn initial_state(&self, n: u64) -> Vec<u64> {
        self.x0
            .iter()
            .zip(&self.alpha)
            .map(|(&x, &a)| if a == 1 { (n as f64 * x).floor() as u64 } else { x.round() as u64 })
            .collect()
    }
}

/// One member of the scaled family.
#[derive(Clone, Debug)]
pub struct ScaledSystem {
    pub n: u64,
    pub network: ReactionNetwork,
    pub initial_state: Vec<u64>,
    pub alpha: Vec<u8>,
}

/// Rescales every rate by `N^p`: for mass action `p = beta - |pi_c(y)|`,
/// for expression laws the declared exponent.
pub fn build_scaled_system(spec: &ScalingSpec, n: u64) -> Result<ScaledSystem, ScalingError> {
    if n == 0 {
        return Err(ScalingError::ZeroScale);
    }
    let nf = n as f64;
    let rates = spec
        .network
        .reactions()
        .iter()
        .enumerate()
        .map(|(r, rx)| {
            let p = spec.exponents[r];
            let factor = nf.powi(p);
            match &rx.rate {
                RateLaw::MassAction { kappa, expr } => RateLaw::MassAction {
                    kappa: kappa * factor,
                    expr: if p == 0 {
                        expr.clone()
                    } else {
                        Expr::Mul(Box::new(expr.clone()), Box::new(Expr::Num(factor)))
                    },
                },
                RateLaw::Expression(law) => RateLaw::Expression(ExpressionLaw {
                    expr: if p == 0 {
                        law.expr.clone()
                    } else {
                        Expr::Mul(Box::new(Expr::Num(factor)), Box::new(law.expr.clone()))
                    },
                    scale: None,
                    limit: None,
                }),
            }
        })
        .collect();
    Ok(ScaledSystem {
        n,
        network: spec.network.with_rates(rates),
        initial_state: spec.initial_state(n),
        alpha: spec.alpha.clone(),
    })
}

/// Per reaction, the largest `|N^{-beta} lambda^N(v, [Nw]) - lambda(v, w)|`
/// over the probe grid.
pub fn scaling_limit_error(spec: &ScalingSpec, n: u64) -> Result<Vec<f64>, ScalingError> {
    let probes = spec.probe_grid();
    (0..spec.network.reactions().len())
        .map(|r| {
            let mut worst: f64 = 0.0;
            for p in &probes {
                let d = (spec.scaled_rate(r, p, n as f64)? - spec.limit_rate(r, p)).abs();
                worst = worst.max(d);
            }
            Ok(worst)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_network;

    fn simple_spec() -> ScalingSpec {
        let net = parse_network("let k1 = 1\nlet k2 = 2\nA + B -> 2B @ ma(k1)\nB -> A @ ma(k2)").unwrap();
        ScalingSpec::with_discrete(net, &["A"], &[("A", 2.0), ("B", 1.0)], vec![100]).unwrap()
    }

    #[test]
    fn simple_network_keeps_its_constants() {
        let spec = simple_spec();
        assert_eq!(spec.beta, vec![1, 1]);
        let sys = build_scaled_system(&spec, 100).unwrap();
        assert_eq!(sys.network.reactions()[0].rate.kappa(), Some(1.0));
        assert_eq!(sys.network.reactions()[1].rate.kappa(), Some(2.0));
        assert_eq!(sys.initial_state, vec![2, 100]);
    }

    #[test]
    fn unit_scale_is_the_base_system() {
        let spec = simple_spec();
        let sys = build_scaled_system(&spec, 1).unwrap();
        for (a, b) in sys.network.reactions().iter().zip(spec.network.reactions()) {
            assert_eq!(a.rate.kappa(), b.rate.kappa());
        }
        assert_eq!(sys.initial_state, vec![2, 1]);
    }

    #[test]
    fn second_order_continuous_source_is_divided_by_n() {
        let net = parse_network("Xp + Y -> XpY @ ma(3)\nXpY -> Xp + Y @ ma(1)").unwrap();
        let spec = ScalingSpec::with_discrete(net, &[], &[("Xp", 1.0), ("Y", 1.0), ("XpY", 1.0)], vec![10]).unwrap();
        let sys = build_scaled_system(&spec, 10).unwrap();
        assert!((sys.network.reactions()[0].rate.kappa().unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(sys.network.reactions()[1].rate.kappa(), Some(1.0));
    }

    #[test]
    fn scaling_error_shrinks_with_n() {
        let spec = simple_spec();
        let e2 = scaling_limit_error(&spec, 100).unwrap();
        let e4 = scaling_limit_error(&spec, 10_000).unwrap();
        for (a, b) in e2.iter().zip(&e4) {
            assert!(b <= a);
            assert!(*b < 1e-3);
        }
    }

    #[test]
    fn expression_law_needs_declared_exponent() {
        let src = "let k0 = 1\nA + 2B -> 3B @ expr(k0*x[A]*x[B]*(x[B]-1)/(1+x[B])) limit(k0*x[A]*x[B])\nB -> A @ ma(1)";
        let net = parse_network(src).unwrap();
        let err = ScalingSpec::with_discrete(net, &["A"], &[("A", 1.0), ("B", 1.0)], vec![10]).unwrap_err();
        assert!(matches!(err, ScalingError::UndeclaredScale { reaction: 0, .. }), "{err}");

        let src = src.replace("limit(", "scale N^0 limit(");
        let net = parse_network(&src).unwrap();
        let spec = ScalingSpec::with_discrete(net, &["A"], &[("A", 1.0), ("B", 1.0)], vec![10]).unwrap();
        let mixed = [2.0, 1.5];
        assert!((spec.limit_rate(0, &mixed) - 3.0).abs() < 1e-12);
        let e = scaling_limit_error(&spec, 10_000).unwrap();
        assert!(e[0] < 1e-3, "{e:?}");
    }

    #[test]
    fn undeclared_limit_is_evaluated_numerically() {
        let src = "A + B -> 2B @ expr(2*x[A]*x[B])\nB -> A @ ma(1)";
        let net = parse_network(src).unwrap();
        let spec = ScalingSpec::with_discrete(net, &["A"], &[("A", 1.0), ("B", 1.0)], vec![10]).unwrap();
        assert!(spec.has_numeric_limit(0));
        assert!((spec.limit_rate(0, &[3.0, 0.5]) - 3.0).abs() < 1e-6);
    }
}

//! Reaction networks, kinetics, and the text format that describes them.

mod expr;
mod parse;
mod print;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expr::{Expr, ExprDisplay};
pub use parse::{parse_network, ParseError, ParseErrorKind};
pub use print::print_network;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("reaction {reaction}: source and product complexes are identical")]
    SourceEqualsProduct { reaction: usize },
    #[error("reaction {reaction}: rate constant must be positive, got {value}")]
    NonPositiveRateConstant { reaction: usize, value: f64 },
    #[error("species `{0}` declared twice")]
    DuplicateSpecies(String),
    #[error("species `{0}` does not appear in any complex")]
    UnusedSpecies(String),
    #[error("complex refers to species index {index} but the network has {count} species")]
    SpeciesOutOfRange { index: usize, count: usize },
    #[error("network has no reactions")]
    Empty,
}

#[derive(Debug, Error, PartialEq)]
pub enum RateError {
    #[error("reaction {reaction}: rate evaluated to {value} at state {state:?}")]
    InvalidValue { reaction: usize, value: f64, state: Vec<f64> },
    #[error("reaction {reaction}: falling factorial overflows at state {state:?}")]
    Overflow { reaction: usize, state: Vec<u64> },
    #[error("state has {got} coordinates, network has {expected} species")]
    Dimension { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// A non-negative integer combination of species, stored sparsely.
///
/// Only strictly positive coefficients are kept, so structural equality is
/// equality of complexes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Complex {
    coeffs: BTreeMap<usize, u32>,
}

impl Complex {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (i, c) in pairs {
            *coeffs.entry(i).or_insert(0) += c;
        }
        coeffs.retain(|_, c| *c > 0);
        Self { coeffs }
    }

    pub fn from_dense(v: &[u32]) -> Self {
        Self::from_pairs(v.iter().copied().enumerate())
    }

    pub fn coefficient(&self, species: usize) -> u32 {
        self.coeffs.get(&species).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.coeffs.iter().map(|(&i, &c)| (i, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.coeffs.values().sum()
    }

    pub fn to_dense(&self, n: usize) -> Vec<u32> {
        let mut v = vec![0; n];
        for (i, c) in self.iter() {
            v[i] = c;
        }
        v
    }

    /// Keeps the coordinates for which `keep` returns a new index.
    pub fn project(&self, keep: impl Fn(usize) -> Option<usize>) -> Complex {
        Complex::from_pairs(self.iter().filter_map(|(i, c)| keep(i).map(|j| (j, c))))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    /// Human-readable form such as `A + 2B`, or `0` for the empty complex.
    pub fn render(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        self.iter()
            .map(|(i, c)| if c == 1 { names[i].clone() } else { format!("{c}{}", names[i]) })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Rate functions attached to reactions.
#[derive(Clone, Debug, PartialEq)]
pub enum RateLaw {
    /// Stochastic `kappa * x!/(x-y)!`, deterministic `kappa * z^y`.
    /// `expr` is the constant expression the rate constant was written as.
    MassAction {
        kappa: f64,
        expr: Expr,
    },
    Expression(ExpressionLaw),
}

/// A rational-function rate in species counts, with optional scaling
/// metadata used when the network is embedded in a family indexed by `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpressionLaw {
    pub expr: Expr,
    /// Declared `N^p` prefactor of the scaled family.
    pub scale: Option<i32>,
    /// Limit of `N^{-beta} lambda^N(v, [Nw])` as an expression in `(v, w)`.
    pub limit: Option<Expr>,
}

impl RateLaw {
    pub fn mass_action(kappa: f64) -> Self {
        RateLaw::MassAction { kappa, expr: Expr::Num(kappa) }
    }

    pub fn is_mass_action(&self) -> bool {
        matches!(self, RateLaw::MassAction { .. })
    }

    pub fn kappa(&self) -> Option<f64> {
        match self {
            RateLaw::MassAction { kappa, .. } => Some(*kappa),
            RateLaw::Expression(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reaction {
    pub source: Complex,
    pub product: Complex,
    reaction_vector: Vec<i64>,
    pub rate: RateLaw,
}

impl Reaction {
    pub fn new(source: Complex, product: Complex, rate: RateLaw, num_species: usize) -> Self {
        let mut reaction_vector = vec![0i64; num_species];
        for (i, c) in product.iter() {
            reaction_vector[i] += i64::from(c);
        }
        for (i, c) in source.iter() {
            reaction_vector[i] -= i64::from(c);
        }
        Self { source, product, reaction_vector, rate }
    }

    /// `product - source`.
    pub fn reaction_vector(&self) -> &[i64] {
        &self.reaction_vector
    }

    /// Whether the reaction can fire at `x`, i.e. `x >= source`.
    pub fn enabled(&self, x: &[u64]) -> bool {
        self.source.iter().all(|(i, c)| x[i] >= u64::from(c))
    }
}

/// `x!/(x-y)!` for a single coordinate, exact while it fits in `u128`.
pub fn falling_factorial(x: u64, y: u32) -> Option<u128> {
    if x < u64::from(y) {
        return Some(0);
    }
    let mut acc: u128 = 1;
    for k in 0..u64::from(y) {
        acc = acc.checked_mul(u128::from(x - k))?;
    }
    Some(acc)
}

/// `v!/(v-y)!` over a whole complex, in floating point for real-valued `v`.
pub fn falling_factorial_f64(v: &[f64], y: &Complex) -> f64 {
    let mut acc = 1.0;
    for (i, c) in y.iter() {
        for k in 0..c {
            let f = v[i] - f64::from(k);
            if f <= 0.0 {
                return 0.0;
            }
            acc *= f;
        }
    }
    acc
}

/// `z^y` with `0^0 = 1`.
pub fn monomial(z: &[f64], y: &Complex) -> f64 {
    y.iter().map(|(i, c)| z[i].powi(c as i32)).product()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<Species>,
    complexes: Vec<Complex>,
    reactions: Vec<Reaction>,
    /// Source and product complex index of every reaction.
    edges: Vec<(usize, usize)>,
    constants: Vec<(String, f64)>,
}

impl ReactionNetwork {
    /// Builds and validates a network. Complexes are collected in first
    /// appearance order (source before product).
    pub fn new(
        species_names: Vec<String>,
        reactions: Vec<Reaction>,
        constants: Vec<(String, f64)>,
    ) -> Result<Self, ModelError> {
        Self::build(species_names, reactions, constants, false)
    }

    /// Like [`ReactionNetwork::new`] but tolerates species that appear in
    /// no complex; a warning is logged instead.
    pub fn new_allow_unused(
        species_names: Vec<String>,
        reactions: Vec<Reaction>,
        constants: Vec<(String, f64)>,
    ) -> Result<Self, ModelError> {
        Self::build(species_names, reactions, constants, true)
    }

    fn build(
        species_names: Vec<String>,
        reactions: Vec<Reaction>,
        constants: Vec<(String, f64)>,
        allow_unused: bool,
    ) -> Result<Self, ModelError> {
        if reactions.is_empty() {
            return Err(ModelError::Empty);
        }
        let n = species_names.len();
        for (k, name) in species_names.iter().enumerate() {
            if species_names[..k].contains(name) {
                return Err(ModelError::DuplicateSpecies(name.clone()));
            }
        }
        let mut complexes: Vec<Complex> = Vec::new();
        let mut edges = Vec::with_capacity(reactions.len());
        let index_of = |c: &Complex, complexes: &mut Vec<Complex>| {
            if let Some(p) = complexes.iter().position(|x| x == c) {
                p
            } else {
                complexes.push(c.clone());
                complexes.len() - 1
            }
        };
        for (r, rx) in reactions.iter().enumerate() {
            for c in [&rx.source, &rx.product] {
                if let Some(i) = c.max_index() {
                    if i >= n {
                        return Err(ModelError::SpeciesOutOfRange { index: i, count: n });
                    }
                }
            }
            if rx.source == rx.product {
                return Err(ModelError::SourceEqualsProduct { reaction: r });
            }
            if let RateLaw::MassAction { kappa, .. } = rx.rate {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return Err(ModelError::NonPositiveRateConstant { reaction: r, value: kappa });
                }
            }
            let s = index_of(&rx.source, &mut complexes);
            let p = index_of(&rx.product, &mut complexes);
            edges.push((s, p));
        }
        for (i, name) in species_names.iter().enumerate() {
            if !complexes.iter().any(|c| c.coefficient(i) > 0) {
                if allow_unused {
                    log::warn!("species `{name}` does not appear in any complex");
                } else {
                    return Err(ModelError::UnusedSpecies(name.clone()));
                }
            }
        }
        let reactions = reactions
            .into_iter()
            .map(|r| if r.reaction_vector.len() == n { r } else { Reaction::new(r.source, r.product, r.rate, n) })
            .collect();
        let species = species_names.into_iter().enumerate().map(|(index, name)| Species { name, index }).collect();
        Ok(Self { species, complexes, reactions, edges, constants })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn species_names(&self) -> Vec<String> {
        self.species.iter().map(|s| s.name.clone()).collect()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn complexes(&self) -> &[Complex] {
        &self.complexes
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    /// `(source, product)` complex indices per reaction.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn constants(&self) -> &[(String, f64)] {
        &self.constants
    }

    /// The same network with every reaction's rate law replaced.
    pub fn with_rates(&self, rates: Vec<RateLaw>) -> Self {
        assert_eq!(rates.len(), self.reactions.len(), "one rate law per reaction");
        let mut out = self.clone();
        for (rx, rate) in out.reactions.iter_mut().zip(rates) {
            rx.rate = rate;
        }
        out
    }

    pub fn is_mass_action(&self) -> bool {
        self.reactions.iter().all(|r| r.rate.is_mass_action())
    }

    /// Stochastic intensity of reaction `r` at the integer state `x`.
    pub fn evaluate_rate(&self, r: usize, x: &[u64]) -> Result<f64, RateError> {
        self.check_len(x.len())?;
        let rx = &self.reactions[r];
        if !rx.enabled(x) {
            return Ok(0.0);
        }
        match &rx.rate {
            RateLaw::MassAction { kappa, .. } => {
                let mut acc = 1u128;
                for (i, c) in rx.source.iter() {
                    acc = falling_factorial(x[i], c)
                        .and_then(|f| acc.checked_mul(f))
                        .ok_or_else(|| RateError::Overflow { reaction: r, state: x.to_vec() })?;
                }
                Ok(kappa * acc as f64)
            }
            RateLaw::Expression(law) => {
                let value = law.expr.eval_with(&|i| x[i] as f64);
                validate(r, value, || x.iter().map(|&v| v as f64).collect())
            }
        }
    }

    /// Deterministic rate of reaction `r` at concentrations `z`.
    pub fn evaluate_deterministic_rate(&self, r: usize, z: &[f64]) -> Result<f64, RateError> {
        self.check_len(z.len())?;
        let rx = &self.reactions[r];
        match &rx.rate {
            RateLaw::MassAction { kappa, .. } => Ok(kappa * monomial(z, &rx.source)),
            RateLaw::Expression(law) => {
                if rx.source.iter().any(|(i, _)| z[i] <= 0.0) {
                    return Ok(0.0);
                }
                validate(r, law.expr.eval(z), || z.to_vec())
            }
        }
    }

    /// Right-hand side of the deterministic ODE, `sum_r xi_r lambda_r(z)`.
    pub fn deterministic_rhs(&self, z: &[f64], out: &mut [f64]) -> Result<(), RateError> {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (r, rx) in self.reactions.iter().enumerate() {
            let rate = self.evaluate_deterministic_rate(r, z)?;
            for (o, &xi) in out.iter_mut().zip(rx.reaction_vector()) {
                *o += xi as f64 * rate;
            }
        }
        Ok(())
    }

    fn check_len(&self, got: usize) -> Result<(), RateError> {
        if got != self.species.len() {
            Err(RateError::Dimension { expected: self.species.len(), got })
        } else {
            Ok(())
        }
    }
}

fn validate(r: usize, value: f64, state: impl Fn() -> Vec<f64>) -> Result<f64, RateError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(RateError::InvalidValue { reaction: r, value, state: state() })
    }
}

impl fmt::Display for ReactionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_network(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple() -> ReactionNetwork {
        parse_network("A + B -> 2B @ ma(1)\nB -> A @ ma(2)").unwrap()
    }

    #[test]
    fn mass_action_rate_uses_falling_factorials() {
        let net = simple();
        assert_eq!(net.evaluate_rate(0, &[2, 3]).unwrap(), 6.0);
        assert_eq!(net.evaluate_rate(0, &[0, 0]).unwrap(), 0.0);
        assert_eq!(net.evaluate_rate(1, &[0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_rate_is_monomial() {
        let net = simple();
        assert_eq!(net.evaluate_deterministic_rate(0, &[0.5, 2.0]).unwrap(), 1.0);
        let net = parse_network("2A -> B @ ma(3)\n0 -> A @ ma(1.5)").unwrap();
        assert_eq!(net.evaluate_deterministic_rate(0, &[2.0, 7.0]).unwrap(), 12.0);
        assert_eq!(net.evaluate_deterministic_rate(1, &[0.0, 0.0]).unwrap(), 1.5);
    }

    #[test]
    fn expression_rate_and_guard() {
        let net = parse_network(
            "let k0 = 1;\nA + 2B -> 3B @ expr(k0 * x[A] * x[B] * (x[B]-1) / (1 + x[B]))\nB -> C @ ma(1)\nC -> A @ ma(1)",
        )
        .unwrap();
        assert_eq!(net.evaluate_rate(0, &[1, 3, 0]).unwrap(), 1.5);
        assert_eq!(net.evaluate_rate(0, &[1, 1, 0]).unwrap(), 0.0);
        assert_eq!(net.evaluate_rate(0, &[0, 3, 0]).unwrap(), 0.0);
    }

    #[test]
    fn negative_expression_is_an_error() {
        let net = parse_network("A -> B @ expr(x[A] - 5)").unwrap();
        let err = net.evaluate_rate(0, &[1, 0]).unwrap_err();
        assert!(matches!(err, RateError::InvalidValue { reaction: 0, .. }));
    }

    #[test]
    fn falling_factorial_overflow_is_reported() {
        let net = parse_network("30A -> B @ ma(1)").unwrap();
        let err = net.evaluate_rate(0, &[u64::MAX / 2, 0]).unwrap_err();
        assert!(matches!(err, RateError::Overflow { .. }));
    }

    #[test]
    fn reaction_vector_is_product_minus_source() {
        let net = simple();
        assert_eq!(net.reactions()[0].reaction_vector(), &[-1, 1]);
        assert_eq!(net.reactions()[1].reaction_vector(), &[1, -1]);
    }

    #[test]
    fn constructor_rejects_identical_complexes() {
        let a = Complex::from_pairs([(0, 1)]);
        let r = Reaction::new(a.clone(), a, RateLaw::mass_action(1.0), 1);
        let err = ReactionNetwork::new(vec!["A".into()], vec![r], vec![]).unwrap_err();
        assert_eq!(err, ModelError::SourceEqualsProduct { reaction: 0 });
    }
}

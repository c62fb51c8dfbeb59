//! Small rational-function algebra for displaying reduced rates such as
//! `k1*w + k4*w^2` or `(k7*w_XpY + k11*w_XDYp)/(k6*w_Xp)`.
//!
//! Only what rendering needs is implemented: expansion of products, sums
//! over a common denominator, and cancellation of monomial factors.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::model::Expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    /// Named constant, by declaration index.
    Const(usize),
    /// Discrete species count, by species index.
    V(usize),
    /// Continuous species concentration, by species index.
    W(usize),
}

pub type Monomial = BTreeMap<Sym, u32>;

fn w_degree(m: &Monomial) -> u32 {
    m.iter().filter(|(s, _)| matches!(s, Sym::W(_))).map(|(_, e)| e).sum()
}

fn mono_cmp(a: &Monomial, b: &Monomial) -> Ordering {
    w_degree(a).cmp(&w_degree(b)).then_with(|| a.cmp(b))
}

/// Sum of `coefficient * monomial` terms, kept merged and sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    terms: Vec<(Monomial, f64)>,
}

impl Poly {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::term(Monomial::new(), c)
    }

    pub fn sym(s: Sym) -> Self {
        Self::term(Monomial::from([(s, 1)]), 1.0)
    }

    pub fn term(m: Monomial, c: f64) -> Self {
        Self { terms: vec![(m, c)] }.normalized()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_empty() && self.terms[0].1 == 1.0
    }

    fn normalized(mut self) -> Self {
        self.terms.sort_by(|a, b| mono_cmp(&a.0, &b.0));
        let mut out: Vec<(Monomial, f64)> = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms {
            match out.last_mut() {
                Some((lm, lc)) if *lm == m => *lc += c,
                _ => out.push((m, c)),
            }
        }
        out.retain(|(_, c)| *c != 0.0);
        Self { terms: out }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        Poly { terms: self.terms.iter().chain(&o.terms).cloned().collect() }.normalized()
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut terms = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let mut m = ma.clone();
                for (s, e) in mb {
                    *m.entry(*s).or_insert(0) += e;
                }
                terms.push((m, ca * cb));
            }
        }
        Poly { terms }.normalized()
    }

    /// Largest monomial dividing every term.
    fn monomial_gcd(&self) -> Monomial {
        let mut it = self.terms.iter();
        let Some((first, _)) = it.next() else {
            return Monomial::new();
        };
        let mut g = first.clone();
        for (m, _) in it {
            g = g.into_iter().filter_map(|(s, e)| m.get(&s).map(|&f| (s, e.min(f)))).filter(|(_, e)| *e > 0).collect();
        }
        g
    }

    fn divide_monomial(&self, d: &Monomial) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let mut m = m.clone();
                    for (s, e) in d {
                        let v = m.get_mut(s).expect("divisor divides every term");
                        *v -= e;
                        if *v == 0 {
                            m.remove(s);
                        }
                    }
                    (m, *c)
                })
                .collect(),
        }
        .normalized()
    }

    fn scale(&self, k: f64) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }.normalized()
    }

    /// Exponent of `s` if it is the same in every term.
    pub fn uniform_power(&self, s: Sym) -> Option<u32> {
        let mut it = self.terms.iter().map(|(m, _)| m.get(&s).copied().unwrap_or(0));
        let first = it.next()?;
        it.all(|e| e == first).then_some(first)
    }

    pub fn mentions(&self, pred: impl Fn(&Sym) -> bool) -> bool {
        self.terms.iter().any(|(m, _)| m.keys().any(&pred))
    }

    pub fn render(&self, names: &SymNames) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = *c < 0.0;
            let a = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let factors: Vec<String> = m
                .iter()
                .map(|(s, e)| {
                    let base = names.name(*s);
                    if *e == 1 {
                        base
                    } else {
                        format!("{base}^{e}")
                    }
                })
                .collect();
            if factors.is_empty() {
                out.push_str(&format_num(a));
            } else {
                if a != 1.0 {
                    out.push_str(&format_num(a));
                    out.push('*');
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }

    fn factor_count(&self) -> usize {
        match self.terms.as_slice() {
            [(m, c)] => m.len() + usize::from(*c != 1.0),
            _ => 2,
        }
    }
}

fn format_num(v: f64) -> String {
    format!("{v}")
}

/// Names used when rendering symbols.
pub struct SymNames {
    pub constants: Vec<String>,
    pub species: Vec<String>,
    /// Render every `W` as plain `w` (exactly one continuous species).
    pub single_w: bool,
}

impl SymNames {
    fn name(&self, s: Sym) -> String {
        match s {
            Sym::Const(i) => self.constants[i].clone(),
            Sym::V(i) => format!("v_{}", self.species[i]),
            Sym::W(_) if self.single_w => "w".into(),
            Sym::W(i) => format!("w_{}", self.species[i]),
        }
    }
}

/// `num / den` with both sides polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct RatFn {
    pub num: Poly,
    pub den: Poly,
}

impl RatFn {
    pub fn poly(p: Poly) -> Self {
        Self { num: p, den: Poly::constant(1.0) }
    }

    pub fn constant(c: f64) -> Self {
        Self::poly(Poly::constant(c))
    }

    pub fn sym(s: Sym) -> Self {
        Self::poly(Poly::sym(s))
    }

    pub fn monomial(m: Monomial) -> Self {
        Self::poly(Poly::term(m, 1.0))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Cancels common monomial factors and, for a single-term
    /// denominator, its coefficient.
    fn simplified(self) -> Self {
        if self.num.is_zero() {
            return Self::constant(0.0);
        }
        if self.num == self.den {
            return Self::constant(1.0);
        }
        let gn = self.num.monomial_gcd();
        let gd = self.den.monomial_gcd();
        let common: Monomial =
            gn.iter().filter_map(|(s, e)| gd.get(s).map(|f| (*s, (*e).min(*f)))).filter(|(_, e)| *e > 0).collect();
        let mut num = self.num.divide_monomial(&common);
        let mut den = self.den.divide_monomial(&common);
        if den.terms.len() == 1 {
            let c = den.terms[0].1;
            num = num.scale(1.0 / c);
            den = den.scale(1.0 / c);
        }
        Self { num, den }
    }

    pub fn mul(&self, o: &RatFn) -> RatFn {
        // Cancel an exact polynomial factor before expanding.
        if self.den == o.num {
            return RatFn { num: self.num.clone(), den: o.den.clone() }.simplified();
        }
        if o.den == self.num {
            return RatFn { num: o.num.clone(), den: self.den.clone() }.simplified();
        }
        RatFn { num: self.num.mul(&o.num), den: self.den.mul(&o.den) }.simplified()
    }

    pub fn div(&self, o: &RatFn) -> RatFn {
        self.mul(&RatFn { num: o.den.clone(), den: o.num.clone() })
    }

    pub fn add(&self, o: &RatFn) -> RatFn {
        if self.den == o.den {
            return RatFn { num: self.num.add(&o.num), den: self.den.clone() }.simplified();
        }
        RatFn { num: self.num.mul(&o.den).add(&o.num.mul(&self.den)), den: self.den.mul(&o.den) }.simplified()
    }

    pub fn powi(&self, e: i32) -> RatFn {
        let base = if e < 0 { RatFn { num: self.den.clone(), den: self.num.clone() } } else { self.clone() };
        let mut acc = RatFn::constant(1.0);
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    }

    /// Converts an expression; `species` maps species indices to symbols
    /// and `constant` maps constant names to symbols.
    pub fn from_expr(
        e: &Expr,
        species: &dyn Fn(usize) -> Sym,
        constant: &dyn Fn(&str) -> Option<Sym>,
    ) -> Option<RatFn> {
        Some(match e {
            Expr::Num(v) => RatFn::constant(*v),
            Expr::Const { name, value } => match constant(name) {
                Some(s) => RatFn::sym(s),
                None => RatFn::constant(*value),
            },
            Expr::Species(i) => RatFn::sym(species(*i)),
            Expr::Neg(a) => {
                let a = Self::from_expr(a, species, constant)?;
                RatFn { num: a.num.neg(), den: a.den }
            }
            Expr::Add(a, b) => Self::from_expr(a, species, constant)?.add(&Self::from_expr(b, species, constant)?),
            Expr::Sub(a, b) => {
                let b = Self::from_expr(b, species, constant)?;
                Self::from_expr(a, species, constant)?.add(&RatFn { num: b.num.neg(), den: b.den })
            }
            Expr::Mul(a, b) => Self::from_expr(a, species, constant)?.mul(&Self::from_expr(b, species, constant)?),
            Expr::Div(a, b) => {
                let b = Self::from_expr(b, species, constant)?;
                if b.is_zero() {
                    return None;
                }
                Self::from_expr(a, species, constant)?.div(&b)
            }
            Expr::Pow(a, p) => Self::from_expr(a, species, constant)?.powi(*p),
        })
    }

    /// Divides out `prod_i V(i)^{y_i}` when the function has exactly that
    /// dependence on the `V` symbols; `None` otherwise.
    pub fn factor_out_v(&self, y: &[(usize, u32)]) -> Option<RatFn> {
        if self.den.mentions(|s| matches!(s, Sym::V(_))) {
            return None;
        }
        let mut m = Monomial::new();
        for &(i, e) in y {
            if self.num.uniform_power(Sym::V(i)) != Some(e) {
                return None;
            }
            m.insert(Sym::V(i), e);
        }
        let rest = self.num.divide_monomial(&m);
        if rest.mentions(|s| matches!(s, Sym::V(_))) {
            return None;
        }
        Some(RatFn { num: rest, den: self.den.clone() }.simplified())
    }

    pub fn render(&self, names: &SymNames) -> String {
        let num = self.num.render(names);
        if self.den.is_one() {
            return num;
        }
        let num = if self.num.terms.len() > 1 { format!("({num})") } else { num };
        let den = self.den.render(names);
        if self.den.factor_count() > 1 {
            format!("{num}/({den})")
        } else {
            format!("{num}/{den}")
        }
    }
}

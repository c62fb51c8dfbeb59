//! Rational-function expressions over species counts and named constants.

use std::fmt;

/// Expression tree used by non-mass-action rate laws and by constant
/// expressions inside `ma(...)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// A `let`-bound constant. The value is resolved at parse time.
    Const {
        name: String,
        value: f64,
    },
    /// `x[Name]`, the count (or concentration) of species `index`.
    Species(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn constant(name: impl Into<String>, value: f64) -> Self {
        Expr::Const { name: name.into(), value }
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    /// Evaluates the tree with species values supplied by `x`.
    pub fn eval_with(&self, x: &dyn Fn(usize) -> f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Const { value, .. } => *value,
            Expr::Species(i) => x(*i),
            Expr::Neg(a) => -a.eval_with(x),
            Expr::Add(a, b) => a.eval_with(x) + b.eval_with(x),
            Expr::Sub(a, b) => a.eval_with(x) - b.eval_with(x),
            Expr::Mul(a, b) => a.eval_with(x) * b.eval_with(x),
            Expr::Div(a, b) => a.eval_with(x) / b.eval_with(x),
            Expr::Pow(a, p) => a.eval_with(x).powi(*p),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_with(&|i| x[i])
    }

    /// Value of a species-free expression.
    pub fn eval_const(&self) -> f64 {
        self.eval_with(&|_| f64::NAN)
    }

    pub fn references_species(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Species(_)) {
                found = true;
            }
        });
        found
    }

    /// Sorted, deduplicated species indices referenced by the tree.
    pub fn species_used(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Species(i) = e {
                out.push(*i);
            }
        });
        out.sort_unstable();
        out.dedup();
        out
    }

    fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::Pow(a, _) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    /// Rewrites species indices through `map`.
    pub fn remap_species(&self, map: &dyn Fn(usize) -> usize) -> Expr {
        let r = |e: &Expr| Box::new(e.remap_species(map));
        match self {
            Expr::Species(i) => Expr::Species(map(*i)),
            Expr::Neg(a) => Expr::Neg(r(a)),
            Expr::Pow(a, p) => Expr::Pow(r(a), *p),
            Expr::Add(a, b) => Expr::Add(r(a), r(b)),
            Expr::Sub(a, b) => Expr::Sub(r(a), r(b)),
            Expr::Mul(a, b) => Expr::Mul(r(a), r(b)),
            Expr::Div(a, b) => Expr::Div(r(a), r(b)),
            other => other.clone(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    /// Renders the expression in DSL syntax using `names` for species.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, names: &[String]) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool| -> fmt::Result {
            if paren {
                write!(f, "(")?;
                e.write(f, names)?;
                write!(f, ")")
            } else {
                e.write(f, names)
            }
        };
        let p = self.precedence();
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "({v})"),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Const { name, .. } => write!(f, "{name}"),
            Expr::Species(i) => match names.get(*i) {
                Some(n) => write!(f, "x[{n}]"),
                None => write!(f, "x[#{i}]"),
            },
            Expr::Neg(a) => {
                write!(f, "-")?;
                child(f, a, a.precedence() < p)
            }
            Expr::Pow(a, e) => {
                child(f, a, a.precedence() <= p)?;
                write!(f, "^{e}")
            }
            Expr::Add(a, b) | Expr::Mul(a, b) => {
                let op = if matches!(self, Expr::Add(..)) { " + " } else { " * " };
                child(f, a, a.precedence() < p)?;
                write!(f, "{op}")?;
                child(f, b, b.precedence() <= p)
            }
            Expr::Sub(a, b) | Expr::Div(a, b) => {
                let op = if matches!(self, Expr::Sub(..)) { " - " } else { " / " };
                child(f, a, a.precedence() < p)?;
                write!(f, "{op}")?;
                child(f, b, b.precedence() <= p)
            }
        }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.write(f, self.names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_inhibited_rate() {
        // k0 * x[A] * x[B] * (x[B] - 1) / (1 + x[B]) at (1, 3, 0) with k0 = 1
        let e = Expr::Div(
            Box::new(Expr::mul(
                Expr::mul(Expr::mul(Expr::constant("k0", 1.0), Expr::Species(0)), Expr::Species(1)),
                Expr::Sub(Box::new(Expr::Species(1)), Box::new(Expr::num(1.0))),
            )),
            Box::new(Expr::Add(Box::new(Expr::num(1.0)), Box::new(Expr::Species(1)))),
        );
        assert_eq!(e.eval(&[1.0, 3.0, 0.0]), 1.5);
        assert_eq!(e.species_used(), vec![0, 1]);
    }

    #[test]
    fn display_keeps_needed_parentheses() {
        let names = vec!["A".to_string()];
        let e = Expr::Sub(
            Box::new(Expr::num(1.0)),
            Box::new(Expr::Sub(Box::new(Expr::Species(0)), Box::new(Expr::num(2.0)))),
        );
        assert_eq!(e.display(&names).to_string(), "1 - (x[A] - 2)");
        let p = Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::Species(0)), 2)));
        assert_eq!(p.display(&names).to_string(), "-x[A]^2");
    }
}

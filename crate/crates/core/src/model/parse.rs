//! Recursive-descent parser for the `.crn` network format.
//!
//! ```text
//! network   := { stmt (NEWLINE | ";") }
//! stmt      := "let" IDENT "=" expr
//!            | "species" IDENT { "," IDENT }
//!            | complex ("->" | "<->") complex "@" rate
//! complex   := "0" | term { "+" term }
//! term      := [INT] IDENT
//! rate      := "ma(" expr ["," expr] ")"
//!            | law ["," law]
//! law       := "expr(" expr ")" ["scale" "N" "^" ["-"] INT] ["limit(" expr ")"]
//! ```
//!
//! Inside rate expressions `x[Name]` is a species count and bare identifiers
//! are constants. Newlines inside parentheses are ignored.

use std::fmt;

use thiserror::Error;

use super::{Complex, Expr, ExpressionLaw, ModelError, RateLaw, Reaction, ReactionNetwork};

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownSpecies(String),
    UnknownConstant(String),
    NonPositiveConstant { name: String, value: f64 },
    DuplicateConstant(String),
    SourceEqualsProduct,
    Model(ModelError),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::UnknownSpecies(s) => write!(f, "unknown species `{s}`"),
            ParseErrorKind::UnknownConstant(s) => write!(f, "unknown constant `{s}`"),
            ParseErrorKind::NonPositiveConstant { name, value } => {
                write!(f, "rate constant `{name}` must be positive, got {value}")
            }
            ParseErrorKind::DuplicateConstant(s) => write!(f, "constant `{s}` defined twice"),
            ParseErrorKind::SourceEqualsProduct => {
                write!(f, "source and product complexes are identical")
            }
            ParseErrorKind::Model(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Float(f64),
    Arrow,
    BiArrow,
    At,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Semi,
    Newline,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Float(v) => format!("`{v}`"),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
            other => {
                let s = match other {
                    Tok::Arrow => "->",
                    Tok::BiArrow => "<->",
                    Tok::At => "@",
                    Tok::Plus => "+",
                    Tok::Minus => "-",
                    Tok::Star => "*",
                    Tok::Slash => "/",
                    Tok::Caret => "^",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::LBracket => "[",
                    Tok::RBracket => "]",
                    Tok::Comma => ",",
                    Tok::Eq => "=",
                    _ => ";",
                };
                format!("`{s}`")
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut depth = 0i32;
    let err = |line, column, m: String| ParseError { line, column, kind: ParseErrorKind::Syntax(m) };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut push = |tok, n: usize, i: &mut usize, col: &mut usize| {
            out.push(Spanned { tok, line: l0, column: c0 });
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                if depth == 0 {
                    out.push(Spanned { tok: Tok::Newline, line, column: col });
                }
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '-' if chars.get(i + 1) == Some(&'>') => push(Tok::Arrow, 2, &mut i, &mut col),
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                push(Tok::BiArrow, 3, &mut i, &mut col)
            }
            '@' => push(Tok::At, 1, &mut i, &mut col),
            '+' => push(Tok::Plus, 1, &mut i, &mut col),
            '-' => push(Tok::Minus, 1, &mut i, &mut col),
            '*' => push(Tok::Star, 1, &mut i, &mut col),
            '/' => push(Tok::Slash, 1, &mut i, &mut col),
            '^' => push(Tok::Caret, 1, &mut i, &mut col),
            '(' => {
                depth += 1;
                push(Tok::LParen, 1, &mut i, &mut col)
            }
            ')' => {
                depth -= 1;
                push(Tok::RParen, 1, &mut i, &mut col)
            }
            '[' => push(Tok::LBracket, 1, &mut i, &mut col),
            ']' => push(Tok::RBracket, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            '=' => push(Tok::Eq, 1, &mut i, &mut col),
            ';' => push(Tok::Semi, 1, &mut i, &mut col),
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                let mut is_float = false;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    is_float = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        is_float = true;
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let tok = match text.parse::<u64>() {
                    Ok(v) if !is_float => Tok::Int(v),
                    _ => Tok::Float(text.parse().map_err(|_| err(l0, c0, format!("bad number `{text}`")))?),
                };
                col += i - start;
                out.push(Spanned { tok, line: l0, column: c0 });
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                out.push(Spanned { tok: Tok::Ident(chars[start..i].iter().collect()), line: l0, column: c0 });
            }
            other => return Err(err(line, col, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

struct SpeciesRef {
    name: String,
    line: usize,
    column: usize,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    constants: Vec<(String, f64)>,
    species: Vec<String>,
    /// `x[Name]` references, checked once every complex has been seen.
    refs: Vec<SpeciesRef>,
    ref_names: Vec<String>,
}

/// Parses a network description. Species are indexed in order of first
/// appearance (a `species` line fixes the order explicitly).
pub fn parse_network(src: &str) -> Result<ReactionNetwork, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        constants: Vec::new(),
        species: Vec::new(),
        refs: Vec::new(),
        ref_names: Vec::new(),
    };
    let mut raw = Vec::new();
    let mut declared_any = false;
    loop {
        p.skip_separators();
        if p.peek() == &Tok::Eof {
            break;
        }
        let (line, column) = p.here();
        match p.peek().clone() {
            Tok::Ident(k) if k == "let" && matches!(p.peek_at(1), Tok::Ident(_)) && p.peek_at(2) == &Tok::Eq => {
                p.parse_let()?;
            }
            Tok::Ident(k) if k == "species" && matches!(p.peek_at(1), Tok::Ident(_)) && p.peek_at(2) != &Tok::Plus => {
                if !matches!(p.peek_at(2), Tok::Comma | Tok::Newline | Tok::Semi | Tok::Eof) {
                    raw.extend(p.parse_reaction(line, column)?);
                } else {
                    p.bump();
                    declared_any = true;
                    loop {
                        let name = p.ident()?;
                        if !p.species.contains(&name) {
                            p.species.push(name);
                        }
                        if p.peek() == &Tok::Comma {
                            p.bump();
                        } else {
                            break;
                        }
                    }
                }
            }
            _ => raw.extend(p.parse_reaction(line, column)?),
        }
        match p.peek() {
            Tok::Newline | Tok::Semi | Tok::Eof => {}
            other => return Err(p.syntax(format!("expected end of statement, found {}", other.describe()))),
        }
    }
    for r in &p.refs {
        if !p.species.contains(&r.name) {
            return Err(ParseError {
                line: r.line,
                column: r.column,
                kind: ParseErrorKind::UnknownSpecies(r.name.clone()),
            });
        }
    }
    let n = p.species.len();
    let remap = |i: usize| p.species.iter().position(|s| *s == p.ref_names[i]).expect("checked above");
    let mut reactions = Vec::with_capacity(raw.len());
    let mut first_pos = None;
    for (src_c, prod_c, rate, line, column) in raw {
        first_pos.get_or_insert((line, column));
        let rate = match rate {
            RateLaw::Expression(law) => RateLaw::Expression(ExpressionLaw {
                expr: law.expr.remap_species(&remap),
                scale: law.scale,
                limit: law.limit.map(|l| l.remap_species(&remap)),
            }),
            ma => ma,
        };
        reactions.push(Reaction::new(src_c, prod_c, rate, n));
    }
    let build = if declared_any { ReactionNetwork::new_allow_unused } else { ReactionNetwork::new };
    build(p.species.clone(), reactions, p.constants.clone()).map_err(|e| {
        let (line, column) = first_pos.unwrap_or((1, 1));
        ParseError { line, column, kind: ParseErrorKind::Model(e) }
    })
}

type RawReaction = (Complex, Complex, RateLaw, usize, usize);

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.column)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Tok::Newline | Tok::Semi) {
            self.bump();
        }
    }

    fn syntax(&self, m: String) -> ParseError {
        let (line, column) = self.here();
        ParseError { line, column, kind: ParseErrorKind::Syntax(m) }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.syntax(format!("expected {}, found {}", t.describe(), self.peek().describe())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.syntax(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn keyword(&mut self, k: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == k => {
                self.bump();
                Ok(())
            }
            other => Err(self.syntax(format!("expected `{k}`, found {}", other.describe()))),
        }
    }

    fn parse_let(&mut self) -> Result<(), ParseError> {
        self.bump();
        let (line, column) = self.here();
        let name = self.ident()?;
        if self.constants.iter().any(|(n, _)| *n == name) {
            return Err(ParseError { line, column, kind: ParseErrorKind::DuplicateConstant(name) });
        }
        self.expect(Tok::Eq)?;
        let e = self.const_expr()?;
        let value = e.eval_const();
        if !(value > 0.0 && value.is_finite()) {
            return Err(ParseError { line, column, kind: ParseErrorKind::NonPositiveConstant { name, value } });
        }
        self.constants.push((name, value));
        Ok(())
    }

    fn const_expr(&mut self) -> Result<Expr, ParseError> {
        let (line, column) = self.here();
        let e = self.expr()?;
        if e.references_species() {
            return Err(ParseError {
                line,
                column,
                kind: ParseErrorKind::Syntax("species reference in a constant expression".into()),
            });
        }
        Ok(e)
    }

    fn complex(&mut self) -> Result<Complex, ParseError> {
        if self.peek() == &Tok::Int(0) && !matches!(self.peek_at(1), Tok::Ident(_)) {
            self.bump();
            return Ok(Complex::zero());
        }
        let mut pairs = Vec::new();
        loop {
            let coeff = match self.peek() {
                Tok::Int(c) => {
                    let c = *c;
                    self.bump();
                    u32::try_from(c).map_err(|_| self.syntax(format!("coefficient {c} too large")))?
                }
                _ => 1,
            };
            let name = self.ident()?;
            let idx = match self.species.iter().position(|s| *s == name) {
                Some(i) => i,
                None => {
                    self.species.push(name);
                    self.species.len() - 1
                }
            };
            pairs.push((idx, coeff));
            if self.peek() == &Tok::Plus {
                self.bump();
            } else {
                break;
            }
        }
        Ok(Complex::from_pairs(pairs))
    }

    fn parse_reaction(&mut self, line: usize, column: usize) -> Result<Vec<RawReaction>, ParseError> {
        let source = self.complex()?;
        let reversible = match self.bump() {
            Tok::Arrow => false,
            Tok::BiArrow => true,
            other => {
                self.pos -= 1;
                return Err(self.syntax(format!("expected `->` or `<->`, found {}", other.describe())));
            }
        };
        let product = self.complex()?;
        if source == product {
            return Err(ParseError { line, column, kind: ParseErrorKind::SourceEqualsProduct });
        }
        self.expect(Tok::At)?;
        let rates = self.rate(if reversible { 2 } else { 1 })?;
        let mut out = Vec::new();
        let mut rates = rates.into_iter();
        out.push((source.clone(), product.clone(), rates.next().expect("one rate"), line, column));
        if reversible {
            out.push((product, source, rates.next().expect("two rates"), line, column));
        }
        Ok(out)
    }

    fn rate(&mut self, count: usize) -> Result<Vec<RateLaw>, ParseError> {
        let kind = match self.peek() {
            Tok::Ident(s) if s == "ma" || s == "expr" => s.clone(),
            other => return Err(self.syntax(format!("expected `ma(...)` or `expr(...)`, found {}", other.describe()))),
        };
        let mut laws = Vec::new();
        if kind == "ma" {
            self.bump();
            self.expect(Tok::LParen)?;
            for k in 0..count {
                if k > 0 {
                    self.expect(Tok::Comma)?;
                }
                let (line, column) = self.here();
                let e = self.const_expr()?;
                let kappa = e.eval_const();
                if !(kappa > 0.0 && kappa.is_finite()) {
                    let name = e.display(&[]).to_string();
                    return Err(ParseError {
                        line,
                        column,
                        kind: ParseErrorKind::NonPositiveConstant { name, value: kappa },
                    });
                }
                laws.push(RateLaw::MassAction { kappa, expr: e });
            }
            self.expect(Tok::RParen)?;
        } else {
            for k in 0..count {
                if k > 0 {
                    self.expect(Tok::Comma)?;
                }
                laws.push(RateLaw::Expression(self.law()?));
            }
        }
        Ok(laws)
    }

    fn law(&mut self) -> Result<ExpressionLaw, ParseError> {
        self.keyword("expr")?;
        self.expect(Tok::LParen)?;
        let expr = self.expr()?;
        self.expect(Tok::RParen)?;
        let mut scale = None;
        let mut limit = None;
        if matches!(self.peek(), Tok::Ident(s) if s == "scale") {
            self.bump();
            self.keyword("N")?;
            self.expect(Tok::Caret)?;
            let neg = if self.peek() == &Tok::Minus {
                self.bump();
                true
            } else {
                false
            };
            let p = match self.bump() {
                Tok::Int(v) => i32::try_from(v).map_err(|_| self.syntax("scale exponent too large".into()))?,
                other => return Err(self.syntax(format!("expected integer exponent, found {}", other.describe()))),
            };
            scale = Some(if neg { -p } else { p });
        }
        if matches!(self.peek(), Tok::Ident(s) if s == "limit") {
            self.bump();
            self.expect(Tok::LParen)?;
            limit = Some(self.expr()?);
            self.expect(Tok::RParen)?;
        }
        Ok(ExpressionLaw { expr, scale, limit })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == &Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() != &Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let neg = if self.peek() == &Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Int(v) => {
                let p = i32::try_from(v).map_err(|_| self.syntax("exponent too large".into()))?;
                if self.peek() == &Tok::Caret {
                    return Err(self.syntax("chained `^` is ambiguous; add parentheses".into()));
                }
                Ok(Expr::Pow(Box::new(base), if neg { -p } else { p }))
            }
            other => {
                self.pos -= 1;
                Err(self.syntax(format!("expected integer exponent, found {}", other.describe())))
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (line, column) = self.here();
        match self.bump() {
            Tok::Int(v) => Ok(Expr::Num(v as f64)),
            Tok::Float(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) if name == "x" && self.peek() == &Tok::LBracket => {
                self.bump();
                let (line, column) = self.here();
                let sp = self.ident()?;
                self.expect(Tok::RBracket)?;
                let idx = match self.ref_names.iter().position(|s| *s == sp) {
                    Some(i) => i,
                    None => {
                        self.ref_names.push(sp.clone());
                        self.ref_names.len() - 1
                    }
                };
                self.refs.push(SpeciesRef { name: sp, line, column });
                Ok(Expr::Species(idx))
            }
            Tok::Ident(name) => match self.constants.iter().find(|(n, _)| *n == name) {
                Some((_, v)) => Ok(Expr::constant(name, *v)),
                None => Err(ParseError { line, column, kind: ParseErrorKind::UnknownConstant(name) }),
            },
            other => {
                self.pos -= 1;
                Err(self.syntax(format!("expected expression, found {}", other.describe())))
            }
        }
    }
}

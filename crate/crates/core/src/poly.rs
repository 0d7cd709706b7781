//! Multivariate polynomials with exact term arithmetic.
//!
//! Coefficients are doubles; exponent vectors are exact. Terms live in a
//! `BTreeMap` keyed by exponent triple, so iteration order (and therefore
//! printing, hashing of output files, and every downstream computation) is
//! deterministic.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::Error;
use crate::geom::Pt;
use crate::Result;

/// Exponent triple; entries at positions `>= dim` are always zero.
pub type Exps = [u16; 3];

const VAR_NAMES: [&str; 3] = ["x", "y", "z"];

/// Coefficient magnitudes below this fraction of the largest coefficient
/// are treated as cancellation dust after expansions.
const COEF_DUST_REL: f64 = 1e-12;

/// A polynomial in up to three variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Exps, f64>,
}

impl Polynomial {
    /// The zero polynomial in `dim` variables.
    pub fn zero(dim: usize) -> Self {
        assert!((1..=3).contains(&dim), "dimension must be 1, 2, or 3");
        Polynomial { dim, terms: BTreeMap::new() }
    }

    /// The constant polynomial `c`.
    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Polynomial::zero(dim);
        p.add_term(c, [0, 0, 0]);
        p
    }

    /// The coordinate polynomial `x_i`.
    pub fn var(dim: usize, i: usize) -> Self {
        assert!(i < dim, "variable index {i} out of range for dimension {dim}");
        let mut e = [0u16; 3];
        e[i] = 1;
        let mut p = Polynomial::zero(dim);
        p.add_term(1.0, e);
        p
    }

    /// Builds a polynomial from (coefficient, exponents) pairs.
    pub fn from_terms(dim: usize, terms: &[(f64, Exps)]) -> Self {
        let mut p = Polynomial::zero(dim);
        for &(c, e) in terms {
            assert!(
                e.iter().skip(dim).all(|&k| k == 0),
                "exponent uses variable beyond dimension {dim}"
            );
            p.add_term(c, e);
        }
        p
    }

    /// Parses a polynomial such as `x^3 + y^2 - z^2*x^2`.
    ///
    /// Grammar: `+`/`-` sums of `*` products of factors; a factor is a
    /// number (decimal or `a/b` rational), a variable `x|y|z`, or a
    /// parenthesized subexpression, optionally raised to a nonnegative
    /// integer power with `^`.
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        parser::parse(src, dim)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Number of stored (nonzero) terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Iterates over (exponents, coefficient) pairs in key order.
    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &f64)> {
        self.terms.iter()
    }

    /// Total degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as u32).sum())
            .max()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, c: f64, e: Exps) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(e).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&e);
        }
    }

    /// Evaluates at a point of matching dimension.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let mut p = [0.0; 3];
        p[..x.len()].copy_from_slice(x);
        Ok(self.value(p))
    }

    /// Evaluation on the internal point type. Coordinates at positions
    /// `>= dim` are ignored because their exponents are all zero.
    pub fn value(&self, x: Pt) -> f64 {
        let mut acc = 0.0;
        for (&e, &c) in &self.terms {
            let mut t = c;
            for i in 0..3 {
                if e[i] > 0 {
                    t *= x[i].powi(e[i] as i32);
                }
            }
            acc += t;
        }
        acc
    }

    /// Formal partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> Polynomial {
        assert!(i < self.dim);
        let mut out = Polynomial::zero(self.dim);
        for (&e, &c) in &self.terms {
            if e[i] > 0 {
                let mut f = e;
                f[i] -= 1;
                out.add_term(c * e[i] as f64, f);
            }
        }
        out
    }

    /// Formal gradient: the vector of partial derivatives.
    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.dim).map(|i| self.partial(i)).collect()
    }

    /// Gradient value at a point.
    pub fn gradient_value(grad: &[Polynomial], x: Pt) -> Pt {
        let mut g = [0.0; 3];
        for (i, p) in grad.iter().enumerate() {
            g[i] = p.value(x);
        }
        g
    }

    /// Composes with the shift `x -> x + t`, returning `q(y) = p(t + y)`.
    pub fn translate(&self, t: Pt) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (&e, &c) in &self.terms {
            // Expand c * prod_i (y_i + t_i)^{e_i} by binomial coefficients.
            let mut expanded: Vec<(f64, Exps)> = vec![(c, [0, 0, 0])];
            for i in 0..self.dim {
                if e[i] == 0 {
                    continue;
                }
                let n = e[i] as u32;
                let mut next = Vec::with_capacity(expanded.len() * (n as usize + 1));
                for &(cc, ee) in &expanded {
                    let mut binom = 1.0;
                    for k in 0..=n {
                        // binom holds C(n, k) at loop entry.
                        let factor = binom * t[i].powi((n - k) as i32);
                        if factor != 0.0 {
                            let mut f = ee;
                            f[i] += k as u16;
                            next.push((cc * factor, f));
                        }
                        binom = binom * (n - k) as f64 / (k + 1) as f64;
                    }
                }
                expanded = next;
            }
            for (cc, ee) in expanded {
                out.add_term(cc, ee);
            }
        }
        out
    }

    /// Lowest-degree homogeneous part of the translation to `t`, which
    /// governs the local geometry of `{p = 0}` at `t`. Requires `p(t) = 0`
    /// up to roundoff; fails otherwise.
    pub fn initial_form(&self, t: Pt) -> Result<Polynomial> {
        if self.is_zero() {
            return Err(Error::validation("initial form of the zero polynomial"));
        }
        let shifted = self.translate(t);
        let max_c = shifted
            .terms
            .values()
            .fold(0.0f64, |m, &c| m.max(c.abs()));
        let tol = crate::consts::EPS_VAL * max_c.max(1.0);
        if let Some(&c0) = shifted.terms.get(&[0, 0, 0]) {
            if c0.abs() > tol {
                return Err(Error::NotOnVariety { value: c0.abs() });
            }
        }
        let dust = COEF_DUST_REL * max_c;
        let mut cleaned = Polynomial::zero(self.dim);
        for (&e, &c) in &shifted.terms {
            let deg: u32 = e.iter().map(|&k| k as u32).sum();
            if deg > 0 && c.abs() > dust {
                cleaned.add_term(c, e);
            }
        }
        let min_deg = cleaned
            .terms
            .keys()
            .map(|e| e.iter().map(|&k| k as u32).sum::<u32>())
            .min()
            .ok_or_else(|| Error::validation("polynomial vanishes identically near the point"))?;
        let mut out = Polynomial::zero(self.dim);
        for (&e, &c) in &cleaned.terms {
            let deg: u32 = e.iter().map(|&k| k as u32).sum();
            if deg == min_deg {
                out.add_term(c, e);
            }
        }
        Ok(out)
    }

    /// Integer power by repeated multiplication.
    pub fn pow(&self, n: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.dim, 1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Largest absolute coefficient (0 for the zero polynomial).
    pub fn max_abs_coef(&self) -> f64 {
        self.terms.values().fold(0.0f64, |m, &c| m.max(c.abs()))
    }

    /// Upper bound for `|p|` over the ball `B(center, radius)`, obtained by
    /// bounding each term by its coefficient times `(|c_i| + R)^{e_i}`.
    /// Conservative but rigorous; tight for constants and linear forms.
    pub fn sup_bound_on_ball(&self, center: Pt, radius: f64) -> f64 {
        let mut acc = 0.0;
        for (&e, &c) in &self.terms {
            let mut t = c.abs();
            for i in 0..3 {
                if e[i] > 0 {
                    t *= (center[i].abs() + radius).powi(e[i] as i32);
                }
            }
            acc += t;
        }
        acc
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in +");
        let mut out = self.clone();
        for (&e, &c) in &rhs.terms {
            out.add_term(c, e);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in -");
        let mut out = self.clone();
        for (&e, &c) in &rhs.terms {
            out.add_term(-c, e);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in *");
        let mut out = Polynomial::zero(self.dim);
        for (&ea, &ca) in &self.terms {
            for (&eb, &cb) in &rhs.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                out.add_term(ca * cb, e);
            }
        }
        out
    }
}

impl Mul<f64> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (&e, &c) in &self.terms {
            out.add_term(c * s, e);
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self * -1.0
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Highest total degree first, then reverse-lexicographic exponents.
        let mut terms: Vec<(&Exps, &f64)> = self.terms.iter().collect();
        terms.sort_by(|a, b| {
            let da: u32 = a.0.iter().map(|&k| k as u32).sum();
            let db: u32 = b.0.iter().map(|&k| k as u32).sum();
            db.cmp(&da).then(b.0.cmp(a.0))
        });
        for (idx, (e, &c)) in terms.iter().enumerate() {
            let mag = c.abs();
            if idx == 0 {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else if c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let is_const = e.iter().all(|&k| k == 0);
            let mut wrote_factor = false;
            if mag != 1.0 || is_const {
                write!(f, "{mag}")?;
                wrote_factor = true;
            }
            for i in 0..3 {
                if e[i] == 0 {
                    continue;
                }
                if wrote_factor {
                    write!(f, "*")?;
                }
                write!(f, "{}", VAR_NAMES[i])?;
                if e[i] > 1 {
                    write!(f, "^{}", e[i])?;
                }
                wrote_factor = true;
            }
        }
        Ok(())
    }
}

mod parser {
    use super::{Polynomial, VAR_NAMES};
    use crate::error::Error;
    use crate::Result;

    #[derive(Debug, Clone, PartialEq)]
    enum Tok {
        Num(f64, String),
        Var(usize),
        Plus,
        Minus,
        Star,
        Slash,
        Caret,
        LParen,
        RParen,
    }

    fn tok_text(t: &Tok) -> String {
        match t {
            Tok::Num(_, s) => s.clone(),
            Tok::Var(i) => VAR_NAMES[*i].to_string(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
        }
    }

    fn err(token: impl Into<String>, reason: impl Into<String>) -> Error {
        Error::Parse { token: token.into(), reason: reason.into() }
    }

    fn lex(src: &str) -> Result<Vec<Tok>> {
        let mut toks = Vec::new();
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' => i += 1,
                '+' => {
                    toks.push(Tok::Plus);
                    i += 1;
                }
                '-' => {
                    toks.push(Tok::Minus);
                    i += 1;
                }
                '*' => {
                    toks.push(Tok::Star);
                    i += 1;
                }
                '/' => {
                    toks.push(Tok::Slash);
                    i += 1;
                }
                '^' => {
                    toks.push(Tok::Caret);
                    i += 1;
                }
                '(' => {
                    toks.push(Tok::LParen);
                    i += 1;
                }
                ')' => {
                    toks.push(Tok::RParen);
                    i += 1;
                }
                'x' => {
                    toks.push(Tok::Var(0));
                    i += 1;
                }
                'y' => {
                    toks.push(Tok::Var(1));
                    i += 1;
                }
                'z' => {
                    toks.push(Tok::Var(2));
                    i += 1;
                }
                '0'..='9' | '.' => {
                    let start = i;
                    while i < bytes.len()
                        && (bytes[i].is_ascii_digit()
                            || bytes[i] == b'.'
                            || bytes[i] == b'e'
                            || bytes[i] == b'E'
                            || ((bytes[i] == b'+' || bytes[i] == b'-')
                                && i > start
                                && (bytes[i - 1] == b'e' || bytes[i - 1] == b'E')))
                    {
                        i += 1;
                    }
                    let text = &src[start..i];
                    let v: f64 = text
                        .parse()
                        .map_err(|_| err(text, "malformed number"))?;
                    toks.push(Tok::Num(v, text.to_string()));
                }
                other => return Err(err(other.to_string(), "unexpected character")),
            }
        }
        Ok(toks)
    }

    struct P<'a> {
        toks: &'a [Tok],
        pos: usize,
        dim: usize,
    }

    impl<'a> P<'a> {
        fn peek(&self) -> Option<&Tok> {
            self.toks.get(self.pos)
        }

        fn bump(&mut self) -> Option<&Tok> {
            let t = self.toks.get(self.pos);
            self.pos += 1;
            t
        }

        fn expr(&mut self) -> Result<Polynomial> {
            let mut negate = false;
            if let Some(Tok::Minus) = self.peek() {
                self.pos += 1;
                negate = true;
            } else if let Some(Tok::Plus) = self.peek() {
                self.pos += 1;
            }
            let mut acc = self.term()?;
            if negate {
                acc = -&acc;
            }
            while let Some(t) = self.peek() {
                match t {
                    Tok::Plus => {
                        self.pos += 1;
                        let t = self.term()?;
                        acc = &acc + &t;
                    }
                    Tok::Minus => {
                        self.pos += 1;
                        let t = self.term()?;
                        acc = &acc - &t;
                    }
                    _ => break,
                }
            }
            Ok(acc)
        }

        fn term(&mut self) -> Result<Polynomial> {
            let mut acc = self.factor()?;
            while let Some(Tok::Star) = self.peek() {
                self.pos += 1;
                let f = self.factor()?;
                acc = &acc * &f;
            }
            Ok(acc)
        }

        fn exponent(&mut self) -> Result<u32> {
            match self.bump().cloned() {
                Some(Tok::Num(v, text)) => {
                    if v.fract() != 0.0 || v < 0.0 || v > 64.0 {
                        Err(err(text, "exponent must be an integer in 0..=64"))
                    } else {
                        Ok(v as u32)
                    }
                }
                Some(t) => Err(err(tok_text(&t), "expected an integer exponent")),
                None => Err(err("end of input", "expected an integer exponent")),
            }
        }

        fn factor(&mut self) -> Result<Polynomial> {
            let base = match self.bump().cloned() {
                Some(Tok::Num(v, text)) => {
                    // Allow rational literals `a/b`.
                    if let Some(Tok::Slash) = self.peek() {
                        self.pos += 1;
                        match self.bump().cloned() {
                            Some(Tok::Num(d, dtext)) => {
                                if d == 0.0 {
                                    return Err(err(dtext, "division by zero"));
                                }
                                Polynomial::constant(self.dim, v / d)
                            }
                            Some(t) => {
                                return Err(err(tok_text(&t), "expected a number after /"))
                            }
                            None => {
                                return Err(err("end of input", "expected a number after /"))
                            }
                        }
                    } else {
                        let _ = text;
                        Polynomial::constant(self.dim, v)
                    }
                }
                Some(Tok::Var(i)) => {
                    if i >= self.dim {
                        return Err(err(
                            VAR_NAMES[i],
                            format!("variable not available in dimension {}", self.dim),
                        ));
                    }
                    Polynomial::var(self.dim, i)
                }
                Some(Tok::LParen) => {
                    let inner = self.expr()?;
                    match self.bump() {
                        Some(Tok::RParen) => inner,
                        Some(t) => return Err(err(tok_text(t), "expected )")),
                        None => return Err(err("end of input", "expected )")),
                    }
                }
                Some(t) => return Err(err(tok_text(&t), "expected a number, variable, or (")),
                None => return Err(err("end of input", "expected a number, variable, or (")),
            };
            if let Some(Tok::Caret) = self.peek() {
                self.pos += 1;
                let e = self.exponent()?;
                return Ok(base.pow(e));
            }
            Ok(base)
        }
    }

    pub fn parse(src: &str, dim: usize) -> Result<Polynomial> {
        if !(1..=3).contains(&dim) {
            return Err(Error::validation(format!("unsupported dimension {dim}")));
        }
        let toks = lex(src)?;
        if toks.is_empty() {
            return Err(err("end of input", "empty polynomial"));
        }
        let mut p = P { toks: &toks, pos: 0, dim };
        let poly = p.expr()?;
        if p.pos != toks.len() {
            return Err(err(tok_text(&toks[p.pos]), "unexpected trailing token"));
        }
        Ok(poly)
    }
}

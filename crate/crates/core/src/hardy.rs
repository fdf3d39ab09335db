//! Finite sums c * x^a * (log x)^b with exact coefficients.
//!
//! Coefficients are Q-linear combinations of monomials in sqrt2, sqrt3,
//! sqrt5, pi and e, so rationality is a property of the representation and
//! is never guessed from floating point. `phi` is stored as (sqrt5 - 1)/2.
//! Monomials other than 1 are treated as irrational, which assumes nothing
//! like pi^a e^b happens to be rational.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

pub type Q = Ratio<i128>;

fn q(n: i128) -> Q {
    Q::from_integer(n)
}

fn q_to_f64(r: &Q) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn fmt_q(r: &Q) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

const ROOTS: [(u8, i128, &str); 3] = [(1, 2, "sqrt2"), (2, 3, "sqrt3"), (4, 5, "sqrt5")];

/// sqrt2^r2 sqrt3^r3 sqrt5^r5 pi^p e^q with r_i in {0, 1}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Monomial {
    roots: u8,
    pi: i32,
    e: i32,
}

impl Monomial {
    const ONE: Monomial = Monomial { roots: 0, pi: 0, e: 0 };

    fn is_one(&self) -> bool {
        *self == Self::ONE
    }

    fn value(&self) -> f64 {
        let mut v = 1.0;
        for (bit, k, _) in ROOTS {
            if self.roots & bit != 0 {
                v *= (k as f64).sqrt();
            }
        }
        v * std::f64::consts::PI.powi(self.pi) * std::f64::consts::E.powi(self.e)
    }

    fn mul(self, other: Monomial) -> (Q, Monomial) {
        let shared = self.roots & other.roots;
        let mut factor = Q::one();
        for (bit, k, _) in ROOTS {
            if shared & bit != 0 {
                factor *= q(k);
            }
        }
        (
            factor,
            Monomial {
                roots: self.roots ^ other.roots,
                pi: self.pi + other.pi,
                e: self.e + other.e,
            },
        )
    }

    fn inverse(self) -> (Q, Monomial) {
        let mut factor = Q::one();
        for (bit, k, _) in ROOTS {
            if self.roots & bit != 0 {
                factor /= q(k);
            }
        }
        (
            factor,
            Monomial {
                roots: self.roots,
                pi: -self.pi,
                e: -self.e,
            },
        )
    }

    fn label(&self) -> String {
        let mut parts: Vec<String> = ROOTS
            .iter()
            .filter(|(bit, _, _)| self.roots & bit != 0)
            .map(|(_, _, name)| name.to_string())
            .collect();
        for (name, p) in [("pi", self.pi), ("e", self.e)] {
            match p {
                0 => {}
                1 => parts.push(name.to_string()),
                _ => parts.push(format!("{name}^{p}")),
            }
        }
        parts.join("*")
    }
}

/// An exact real coefficient: a rational combination of constant monomials.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Coeff {
    parts: BTreeMap<Monomial, Q>,
}

impl Coeff {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn rational(r: Q) -> Self {
        let mut c = Self::zero();
        c.add_part(Monomial::ONE, r);
        c
    }

    fn monomial(r: Q, m: Monomial) -> Self {
        let mut c = Self::zero();
        c.add_part(m, r);
        c
    }

    fn add_part(&mut self, m: Monomial, r: Q) {
        if r.is_zero() {
            return;
        }
        let slot = self.parts.entry(m).or_insert_with(Q::zero);
        *slot += r;
        if slot.is_zero() {
            self.parts.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.parts.keys().all(Monomial::is_one)
    }

    pub fn rational_part(&self) -> Q {
        self.parts.get(&Monomial::ONE).copied().unwrap_or_else(Q::zero)
    }

    pub fn irrational_part(&self) -> Coeff {
        Coeff {
            parts: self
                .parts
                .iter()
                .filter(|(m, _)| !m.is_one())
                .map(|(m, r)| (*m, *r))
                .collect(),
        }
    }

    pub fn value(&self) -> f64 {
        self.parts.iter().map(|(m, r)| q_to_f64(r) * m.value()).sum()
    }

    pub fn add(&self, other: &Coeff) -> Coeff {
        let mut out = self.clone();
        for (m, r) in &other.parts {
            out.add_part(*m, *r);
        }
        out
    }

    pub fn neg(&self) -> Coeff {
        self.scale(&q(-1))
    }

    pub fn scale(&self, r: &Q) -> Coeff {
        let mut out = Coeff::zero();
        for (m, v) in &self.parts {
            out.add_part(*m, v * r);
        }
        out
    }

    pub fn mul(&self, other: &Coeff) -> Coeff {
        let mut out = Coeff::zero();
        for (ma, ra) in &self.parts {
            for (mb, rb) in &other.parts {
                let (f, m) = ma.mul(*mb);
                out.add_part(m, ra * rb * f);
            }
        }
        out
    }

    fn inverse(&self) -> Option<Coeff> {
        if self.parts.len() != 1 {
            return None;
        }
        let (m, r) = self.parts.iter().next()?;
        let (f, mi) = m.inverse();
        Some(Coeff::monomial(r.recip() * f, mi))
    }

    fn powi(&self, p: i64) -> Option<Coeff> {
        let base = if p < 0 { self.inverse()? } else { self.clone() };
        let mut out = Coeff::rational(Q::one());
        for _ in 0..p.unsigned_abs() {
            out = out.mul(&base);
        }
        Some(out)
    }

    fn is_negative_single(&self) -> bool {
        self.parts.len() == 1 && self.parts.values().next().is_some_and(|r| r.is_negative())
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("0");
        }
        let pieces: Vec<String> = self
            .parts
            .iter()
            .map(|(m, r)| {
                if m.is_one() {
                    fmt_q(r)
                } else if r.is_one() {
                    m.label()
                } else if *r == q(-1) {
                    format!("-{}", m.label())
                } else {
                    format!("{}*{}", fmt_q(r), m.label())
                }
            })
            .collect();
        if pieces.len() == 1 {
            f.write_str(&pieces[0])
        } else {
            write!(f, "({})", pieces.join(" + ").replace("+ -", "- "))
        }
    }
}

#[derive(Clone, Debug)]
pub struct Term {
    coeff: Coeff,
    power: Q,
    log_power: Q,
    value: f64,
}

// `value` is a cache of the coefficient, so it stays out of comparisons
impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.coeff == other.coeff && self.power == other.power && self.log_power == other.log_power
    }
}

impl Eq for Term {}

impl Term {
    fn new(coeff: Coeff, power: Q, log_power: Q) -> Self {
        let value = coeff.value();
        Self {
            coeff,
            power,
            log_power,
            value,
        }
    }

    pub fn coeff(&self) -> &Coeff {
        &self.coeff
    }

    pub fn power(&self) -> Q {
        self.power
    }

    pub fn log_power(&self) -> Q {
        self.log_power
    }

    /// (power, log power): the growth order of the term.
    pub fn order(&self) -> (Q, Q) {
        (self.power, self.log_power)
    }

    pub fn coeff_value(&self) -> f64 {
        self.value
    }

    #[inline]
    fn eval_shape(&self, x: f64, ln_x: f64) -> f64 {
        let a = &self.power;
        let xa = if a.is_zero() {
            1.0
        } else if a.is_one() {
            x
        } else if *a == Q::new(1, 2) {
            x.sqrt()
        } else if a.is_integer() {
            x.powi(*a.numer() as i32)
        } else {
            x.powf(q_to_f64(a))
        };
        let b = &self.log_power;
        let lb = if b.is_zero() {
            1.0
        } else if b.is_integer() {
            ln_x.powi(*b.numer() as i32)
        } else {
            ln_x.powf(q_to_f64(b))
        };
        xa * lb
    }

    fn fmt_shape(&self) -> Option<String> {
        let mut parts = Vec::new();
        if !self.power.is_zero() {
            if self.power.is_one() {
                parts.push("x".to_string());
            } else if self.power.is_integer() && self.power.is_positive() {
                parts.push(format!("x^{}", fmt_q(&self.power)));
            } else {
                parts.push(format!("x^({})", fmt_q(&self.power)));
            }
        }
        if !self.log_power.is_zero() {
            if self.log_power.is_one() {
                parts.push("log(x)".to_string());
            } else if self.log_power.is_integer() && self.log_power.is_positive() {
                parts.push(format!("log(x)^{}", fmt_q(&self.log_power)));
            } else {
                parts.push(format!("log(x)^({})", fmt_q(&self.log_power)));
            }
        }
        (!parts.is_empty()).then(|| parts.join("*"))
    }
}

fn cmp_order(a: &(Q, Q), b: &(Q, Q)) -> Ordering {
    a.0.cmp(&b.0).then(a.1.cmp(&b.1))
}

/// A finite sum of terms, sorted by growth order, largest first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HardyExpr {
    terms: Vec<Term>,
}

impl HardyExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn x() -> Self {
        Self::monomial(Coeff::rational(Q::one()), Q::one(), Q::zero())
    }

    pub fn constant(c: Coeff) -> Self {
        Self::monomial(c, Q::zero(), Q::zero())
    }

    pub fn monomial(coeff: Coeff, power: Q, log_power: Q) -> Self {
        Self::from_terms(vec![(coeff, power, log_power)])
    }

    /// c * x^a with rational c.
    pub fn power(c: Q, a: Q) -> Self {
        Self::monomial(Coeff::rational(c), a, Q::zero())
    }

    fn from_terms(raw: Vec<(Coeff, Q, Q)>) -> Self {
        let mut merged: BTreeMap<(Q, Q), Coeff> = BTreeMap::new();
        for (c, a, b) in raw {
            let slot = merged.entry((a, b)).or_default();
            *slot = slot.add(&c);
        }
        let mut terms: Vec<Term> = merged
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((a, b), c)| Term::new(c, a, b))
            .collect();
        terms.sort_by(|s, t| cmp_order(&t.order(), &s.order()));
        Self { terms }
    }

    fn raw(&self) -> impl Iterator<Item = (Coeff, Q, Q)> + '_ {
        self.terms
            .iter()
            .map(|t| (t.coeff.clone(), t.power, t.log_power))
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn leading(&self) -> Option<&Term> {
        self.terms.first()
    }

    pub fn add(&self, other: &HardyExpr) -> HardyExpr {
        Self::from_terms(self.raw().chain(other.raw()).collect())
    }

    pub fn neg(&self) -> HardyExpr {
        self.scale(&Coeff::rational(q(-1)))
    }

    pub fn sub(&self, other: &HardyExpr) -> HardyExpr {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Coeff) -> HardyExpr {
        Self::from_terms(self.raw().map(|(k, a, b)| (k.mul(c), a, b)).collect())
    }

    pub fn mul(&self, other: &HardyExpr) -> HardyExpr {
        let mut raw = Vec::new();
        for s in &self.terms {
            for t in &other.terms {
                raw.push((
                    s.coeff.mul(&t.coeff),
                    s.power + t.power,
                    s.log_power + t.log_power,
                ));
            }
        }
        Self::from_terms(raw)
    }

    fn single_term_pow(&self, r: Q) -> Option<HardyExpr> {
        if self.terms.len() != 1 {
            return None;
        }
        let t = &self.terms[0];
        let coeff = if t.coeff == Coeff::rational(Q::one()) {
            t.coeff.clone()
        } else if r.is_integer() {
            t.coeff.powi(r.numer().to_i64()?)?
        } else {
            return None;
        };
        Some(Self::monomial(coeff, t.power * r, t.log_power * r))
    }

    /// Raise to a rational power. Defined for x^a log^b shapes, for single
    /// terms with integer r, and for sums with small nonnegative integer r.
    pub fn pow(&self, r: Q) -> Option<HardyExpr> {
        if let Some(e) = self.single_term_pow(r) {
            return Some(e);
        }
        if r.is_integer() && !r.is_negative() && *r.numer() <= 16 {
            let mut out = HardyExpr::constant(Coeff::rational(Q::one()));
            for _ in 0..*r.numer() {
                out = out.mul(self);
            }
            return Some(out);
        }
        None
    }

    fn derivative(&self) -> HardyExpr {
        let mut raw = Vec::new();
        for t in &self.terms {
            if !t.power.is_zero() {
                raw.push((t.coeff.scale(&t.power), t.power - 1, t.log_power));
            }
            if !t.log_power.is_zero() {
                raw.push((t.coeff.scale(&t.log_power), t.power - 1, t.log_power - 1));
            }
        }
        Self::from_terms(raw)
    }

    pub fn differentiate(&self, order: u32) -> Result<HardyExpr> {
        if order == 0 || order > 8 {
            return Err(Error::arg(format!("derivative order {order} outside 1..=8")));
        }
        let mut out = self.derivative();
        for _ in 1..order {
            out = out.derivative();
        }
        Ok(out)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let ln_x = x.ln();
        self.terms.iter().map(|t| t.value * t.eval_shape(x, ln_x)).sum()
    }

    /// e^{2 pi i k h(n)}.
    #[inline]
    pub fn phase(&self, k: i64, n: f64) -> Complex64 {
        crate::numeric::unit_phase(k as f64 * self.eval(n))
    }

    /// True when the expression is exactly x.
    pub fn is_identity(&self) -> bool {
        *self == Self::x()
    }
}

impl fmt::Display for HardyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let negative = t.coeff.is_negative_single();
            let coeff = if negative { t.coeff.neg() } else { t.coeff.clone() };
            let sign = match (i, negative) {
                (0, false) => "",
                (0, true) => "-",
                (_, false) => " + ",
                (_, true) => " - ",
            };
            let body = match (t.fmt_shape(), coeff == Coeff::rational(Q::one())) {
                (None, _) => coeff.to_string(),
                (Some(s), true) => s,
                (Some(s), false) => format!("{coeff}*{s}"),
            };
            write!(f, "{sign}{body}")?;
        }
        Ok(())
    }
}

impl Serialize for HardyExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

// ---------------------------------------------------------------- parsing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Q),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let lit: String = chars[start..i].iter().collect();
            out.push((start, Tok::Num(parse_decimal(&lit, start)?)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::parse(i, format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

fn parse_decimal(lit: &str, pos: usize) -> Result<Q> {
    let bad = || Error::parse(pos, format!("malformed number '{lit}'"));
    let (int, frac) = match lit.split_once('.') {
        Some((i, f)) => (i, f),
        None => (lit, ""),
    };
    if (int.is_empty() && frac.is_empty()) || frac.contains('.') || frac.len() > 18 {
        return Err(bad());
    }
    let int_v: i128 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let frac_v: i128 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let scale = 10i128.pow(frac.len() as u32);
    Ok(Q::new(int_v * scale + frac_v, scale))
}

fn named_constant(name: &str) -> Option<Coeff> {
    let root = |bit| Coeff::monomial(Q::one(), Monomial { roots: bit, pi: 0, e: 0 });
    Some(match name {
        "sqrt2" => root(1),
        "sqrt3" => root(2),
        "sqrt5" => root(4),
        "phi" => root(4).add(&Coeff::rational(q(-1))).scale(&Q::new(1, 2)),
        "pi" => Coeff::monomial(Q::one(), Monomial { roots: 0, pi: 1, e: 0 }),
        "tau" => Coeff::monomial(q(2), Monomial { roots: 0, pi: 1, e: 0 }),
        "e" => Coeff::monomial(Q::one(), Monomial { roots: 0, pi: 0, e: 1 }),
        _ => return None,
    })
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(Error::parse(self.here(), format!("expected '{op}'")))
        }
    }

    fn expr(&mut self) -> Result<HardyExpr> {
        let mut acc = if self.eat_op('-') {
            self.term()?.neg()
        } else {
            self.eat_op('+');
            self.term()?
        };
        loop {
            if self.eat_op('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat_op('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<HardyExpr> {
        let mut acc = self.power()?;
        loop {
            if self.eat_op('*') {
                acc = acc.mul(&self.power()?);
            } else if self.eat_op('/') {
                let at = self.here();
                let d = self.power()?;
                let inv = d
                    .single_term_pow(q(-1))
                    .filter(|_| !d.is_zero())
                    .ok_or_else(|| Error::parse(at, "can only divide by a single nonzero term"))?;
                acc = acc.mul(&inv);
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<HardyExpr> {
        let base = self.primary()?;
        if !self.eat_op('^') {
            return Ok(base);
        }
        let at = self.here();
        let r = self.exponent()?;
        base.pow(r)
            .ok_or_else(|| Error::parse(at, format!("cannot raise this factor to the power {}", fmt_q(&r))))
    }

    fn exponent(&mut self) -> Result<Q> {
        let neg = self.eat_op('-');
        let v = if self.eat_op('(') {
            let inner_neg = self.eat_op('-');
            let mut v = self.number()?;
            if self.eat_op('/') {
                let at = self.here();
                let d = self.number()?;
                if d.is_zero() {
                    return Err(Error::parse(at, "zero denominator"));
                }
                v /= d;
            }
            self.expect_op(')')?;
            if inner_neg {
                -v
            } else {
                v
            }
        } else {
            self.number()?
        };
        Ok(if neg { -v } else { v })
    }

    fn number(&mut self) -> Result<Q> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(v)
            }
            _ => Err(Error::parse(self.here(), "expected a number")),
        }
    }

    fn call_argument(&mut self, name: &str) -> Result<HardyExpr> {
        self.expect_op('(')?;
        let at = self.here();
        let arg = self.expr()?;
        self.expect_op(')')?;
        match name {
            "log" | "ln" if arg.is_identity() => {
                Ok(HardyExpr::monomial(Coeff::rational(Q::one()), Q::zero(), Q::one()))
            }
            "log" | "ln" => Err(Error::parse(at, "log() only accepts x")),
            _ if arg.is_identity() => Ok(HardyExpr::power(Q::one(), Q::new(1, 2))),
            _ => {
                let root = match arg.terms() {
                    [t] if t.order() == (Q::zero(), Q::zero()) => {
                        match t.coeff().rational_part().to_integer() {
                            2 if t.coeff().is_rational() => named_constant("sqrt2"),
                            3 if t.coeff().is_rational() => named_constant("sqrt3"),
                            5 if t.coeff().is_rational() => named_constant("sqrt5"),
                            _ => None,
                        }
                    }
                    _ => None,
                };
                root.map(HardyExpr::constant)
                    .ok_or_else(|| Error::parse(at, "sqrt() accepts x, 2, 3 or 5"))
            }
        }
    }

    fn primary(&mut self) -> Result<HardyExpr> {
        let at = self.here();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(HardyExpr::constant(Coeff::rational(v)))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(HardyExpr::x()),
                    "log" | "ln" | "sqrt" => self.call_argument(&name),
                    other => named_constant(other)
                        .map(HardyExpr::constant)
                        .ok_or_else(|| Error::parse(at, format!("unknown name '{other}'"))),
                }
            }
            Some(Tok::Op(c)) => Err(Error::parse(at, format!("unexpected '{c}'"))),
            None => Err(Error::parse(at, "unexpected end of expression")),
        }
    }
}

pub fn parse_hardy(text: &str) -> Result<HardyExpr> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(Error::parse(0, "empty expression"));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::parse(p.here(), "trailing input"));
    }
    Ok(e)
}

impl FromStr for HardyExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_hardy(s)
    }
}

// ---------------------------------------------------------- classification

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "UD")]
    Ud,
    #[serde(rename = "NotUD")]
    NotUd,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Ud => "UD",
            Verdict::NotUd => "NotUD",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UdScheme {
    /// Cesaro averages of h(theta(n)).
    CesaroTheta,
    /// Log-log averages of h(theta(n)).
    LoglogTheta,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    #[serde(rename = "case")]
    pub case_id: u8,
    pub matched_polynomial: HardyExpr,
    pub residual: HardyExpr,
    pub dominant_residual: Option<String>,
    pub verdict_cesaro: Verdict,
    pub verdict_loglog: Verdict,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    pub case4_constant: Option<f64>,
}

/// Split h = P + R, P the rational polynomial part, then place R's leading
/// growth order against sqrt(x), x and x log x.
pub fn classify_hardy(h: &HardyExpr) -> Result<Classification> {
    if h.is_zero() {
        return Err(Error::arg("cannot classify the zero expression"));
    }
    let mut poly = Vec::new();
    let mut rest = Vec::new();
    for t in h.terms() {
        let p = t.power();
        if p.is_integer() && !p.is_negative() && t.log_power().is_zero() {
            let r = t.coeff().rational_part();
            poly.push((Coeff::rational(r), p, Q::zero()));
            rest.push((t.coeff().irrational_part(), p, Q::zero()));
        } else {
            rest.push((t.coeff().clone(), p, t.log_power()));
        }
    }
    let matched_polynomial = HardyExpr::from_terms(poly);
    let residual = HardyExpr::from_terms(rest);
    let lead = residual.leading().map(Term::order);

    let half = (Q::new(1, 2), Q::zero());
    let linear = (Q::one(), Q::zero());
    let xlogx = (Q::one(), Q::one());
    let log = (Q::zero(), Q::one());
    let case_id = match &lead {
        None => 1,
        Some(o) if cmp_order(o, &half) != Ordering::Greater => 1,
        Some(o) if cmp_order(o, &linear) != Ordering::Greater => 2,
        Some(o) => match cmp_order(o, &xlogx) {
            Ordering::Less => 3,
            Ordering::Equal => 4,
            Ordering::Greater => 5,
        },
    };
    let verdict_cesaro = if matches!(case_id, 2 | 5) {
        Verdict::Ud
    } else {
        Verdict::NotUd
    };
    let verdict_loglog = match &lead {
        Some(o) if cmp_order(o, &log) == Ordering::Greater => Verdict::Ud,
        _ => Verdict::NotUd,
    };
    let case4_constant = (case_id == 4).then(|| residual.terms()[0].coeff_value());
    Ok(Classification {
        case_id,
        dominant_residual: residual.leading().map(|t| HardyExpr::from_terms(vec![(t.coeff.clone(), t.power, t.log_power)]).to_string()),
        matched_polynomial,
        residual,
        verdict_cesaro,
        verdict_loglog,
        case4_constant,
    })
}

pub fn ud_verdict(c: &Classification, scheme: UdScheme) -> Verdict {
    match scheme {
        UdScheme::CesaroTheta => c.verdict_cesaro,
        UdScheme::LoglogTheta => c.verdict_loglog,
    }
}

/// Modulus of (2 pi)^-1/2 * integral of exp(-x^2/2 + i A pi x^2) dx, computed
/// by quadrature on [-12, 12] and cross-checked against (1 + 4 pi^2 A^2)^-1/4.
pub fn fresnel_constant(a: f64) -> Result<f64> {
    let (closed, quad) = fresnel_both(a)?;
    let gap = (closed - quad).abs();
    if gap > 1e-6 {
        return Err(Error::InternalConsistency(format!(
            "Fresnel quadrature {quad} disagrees with closed form {closed} at A = {a}"
        )));
    }
    Ok(closed)
}

/// (closed form, quadrature) for the Fresnel modulus.
pub fn fresnel_both(a: f64) -> Result<(f64, f64)> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::arg(format!("Fresnel parameter must be finite and >= 0, got {a}")));
    }
    use std::f64::consts::PI;
    let closed = (1.0 + 4.0 * PI * PI * a * a).powf(-0.25);
    let integral = quadrature::integrate(
        |x| Complex64::from_polar((-0.5 * x * x).exp(), a * PI * x * x),
        -12.0,
        12.0,
        1e-12,
    )?;
    Ok((closed, integral.norm() / (2.0 * PI).sqrt()))
}

//! Exact rationals, sparse multivariate polynomials and rational functions.
//!
//! Polynomials are stored as a map from exponent vectors to nonzero rational
//! coefficients, ordered graded-lexicographically. Variable 0 is always the
//! homogenizing variable `x0`. Rational functions are kept in a light normal
//! form (integer content and common monomial factors removed) and compared by
//! cross-multiplication, so no multivariate gcd is ever computed.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Rat = BigRational;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MathError {
    #[error("division by the zero function")]
    DivisionByZeroFunction,
    #[error("denominator vanishes at point ({})", .0.join(", "))]
    DenominatorVanishes(Vec<String>),
    #[error("cannot parse rational '{0}'")]
    BadRational(String),
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"-1.25"`.
pub fn parse_rat(s: &str) -> Result<Rat, MathError> {
    let bad = || MathError::BadRational(s.to_string());
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rat::new(p, q));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip_abs = ip.trim_start_matches(['-', '+']);
        let ip_abs = if ip_abs.is_empty() { "0" } else { ip_abs };
        let whole: BigInt = format!("{ip_abs}{fp}").parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), fp.len());
        let r = Rat::new(whole, den);
        return Ok(if neg { -r } else { r });
    }
    let p: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Rat::from_integer(p))
}

pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with `digits` places, used only for `--approx` output.
pub fn approx_rat(r: &Rat, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = (r * Rat::from_integer(scale.clone())).round().to_integer();
    let neg = scaled.is_negative();
    let a = scaled.abs();
    let (ip, fp) = a.div_rem(&scale);
    let mut fs = fp.to_string();
    while fs.len() < digits {
        fs.insert(0, '0');
    }
    format!("{}{}.{}", if neg { "-" } else { "" }, ip, fs)
}

/// Serde helpers for rationals as strings.
pub mod rat_serde {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        value_to_rat(&v).map_err(D::Error::custom)
    }

    pub fn value_to_rat(v: &serde_json::Value) -> Result<Rat, String> {
        match v {
            serde_json::Value::String(s) => parse_rat(s).map_err(|e| e.to_string()),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(int(i))
                } else {
                    parse_rat(&n.to_string()).map_err(|e| e.to_string())
                }
            }
            other => Err(format!("expected rational, got {other}")),
        }
    }
}

/// Serde helpers for `Vec<Rat>`.
pub mod ratvec_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(fmt_rat).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
        let v = Vec::<serde_json::Value>::deserialize(d)?;
        v.iter()
            .map(|x| rat_serde::value_to_rat(x).map_err(D::Error::custom))
            .collect()
    }
}

/// Serde helpers for `Vec<Vec<Rat>>`.
pub mod ratmat_serde {
    use super::*;

    pub fn serialize<S: Serializer>(m: &[Vec<Rat>], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(fmt_rat).collect()).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rat>>, D::Error> {
        let v = Vec::<Vec<serde_json::Value>>::deserialize(d)?;
        v.iter()
            .map(|row| {
                row.iter()
                    .map(|x| rat_serde::value_to_rat(x).map_err(D::Error::custom))
                    .collect()
            })
            .collect()
    }
}

/// Exponent vector with graded-lexicographic ordering.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mono(pub Vec<u32>);

impl Mono {
    pub fn one(n: usize) -> Self {
        Mono(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Mono(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Mono) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn div(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn gcd(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate polynomial with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Mono, Rat>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rat) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Mono::one(nvars), c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, Rat::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index out of range");
        let mut p = Poly::zero(nvars);
        p.terms.insert(Mono::unit(nvars, i), Rat::one());
        p
    }

    /// Linear form `Σ c_i x_i` over all variables.
    pub fn linear(coeffs: &[Rat]) -> Self {
        let n = coeffs.len();
        let mut p = Poly::zero(n);
        for (i, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                p.terms.insert(Mono::unit(n, i), c.clone());
            }
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Mono, Rat)>) -> Self {
        let mut p = Poly::zero(nvars);
        for (m, c) in terms {
            assert_eq!(m.0.len(), nvars, "exponent length mismatch");
            p.add_term(m, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Mono, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Mono) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    pub fn constant_term(&self) -> Rat {
        self.coeff(&Mono::one(self.nvars))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Leading term under graded-lex order.
    pub fn leading(&self) -> Option<(&Mono, &Rat)> {
        self.terms.iter().next_back()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|m| m.degree());
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    pub fn add_term(&mut self, m: Mono, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn mul_mono(&self, m: &Mono) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.mul(m), v.clone())).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(self.nvars);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, point: &[Rat]) -> Rat {
        assert_eq!(point.len(), self.nvars, "point dimension mismatch");
        let mut total = Rat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, e) in point.iter().zip(&m.0) {
                if *e > 0 {
                    t *= num_traits::pow(x.clone(), *e as usize);
                }
            }
            total += t;
        }
        total
    }

    /// Substitutes the constant `value` for variable `i`.
    pub fn substitute(&self, i: usize, value: &Rat) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            let mut k = m.clone();
            k.0[i] = 0;
            let f = if e == 0 { c.clone() } else { c * num_traits::pow(value.clone(), e as usize) };
            out.add_term(k, f);
        }
        out
    }

    /// Substitutes a polynomial for each variable (all in a common ring).
    pub fn compose(&self, images: &[Poly]) -> Poly {
        assert_eq!(images.len(), self.nvars);
        let target = images.first().map(|p| p.nvars).unwrap_or(0);
        let mut out = Poly::zero(target);
        let mut powers: Vec<Vec<Poly>> = images.iter().map(|p| vec![Poly::one(target), p.clone()]).collect();
        for (m, c) in &self.terms {
            let mut t = Poly::constant(target, c.clone());
            for (i, e) in m.0.iter().enumerate() {
                let e = *e as usize;
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e {
                    let next = &powers[i][powers[i].len() - 1] * &images[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][e];
            }
            out = &out + &t;
        }
        out
    }

    /// Returns the monomial dividing every term (zero poly gives `None`).
    pub fn mono_content(&self) -> Option<Mono> {
        let mut it = self.terms.keys();
        let first = it.next()?.clone();
        Some(it.fold(first, |g, m| g.gcd(m)))
    }

    /// Divides every exponent by `m`; caller guarantees divisibility.
    pub fn div_mono(&self, m: &Mono) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.div(m), v.clone())).collect(),
        }
    }

    /// Positive rational `c` such that `self / c` has coprime integer coefficients.
    pub fn content(&self) -> Rat {
        rat_content(self.terms.values())
    }

    /// `self / content`, with positive leading coefficient; returns the scale used.
    pub fn primitive(&self) -> (Rat, Poly) {
        if self.is_zero() {
            return (Rat::one(), self.clone());
        }
        let mut c = self.content();
        if self.leading().map(|(_, v)| v.is_negative()).unwrap_or(false) {
            c = -c;
        }
        (c.clone(), self.scale(&c.recip()))
    }

    /// Exact division by `d`, if `d` divides `self` (graded-lex division).
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        assert!(!d.is_zero(), "exact_div by zero");
        let (lm, lc) = d.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut rem = self.clone();
        let mut q = Poly::zero(self.nvars);
        while let Some((m, c)) = rem.leading().map(|(m, c)| (m.clone(), c.clone())) {
            if !lm.divides(&m) {
                return None;
            }
            let tm = m.div(&lm);
            let tc = &c / &lc;
            rem = &rem - &d.mul_mono(&tm).scale(&tc);
            q.add_term(tm, tc);
        }
        Some(q)
    }

    /// Renders with the given variable names (default `x0, x1, ...`).
    pub fn render(&self, names: Option<&[String]>) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let name = |i: usize| -> String {
            names.and_then(|n| n.get(i).cloned()).unwrap_or_else(|| format!("x{i}"))
        };
        let mut out = String::new();
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors = Vec::new();
            for (i, e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(name(i)),
                    _ => factors.push(format!("{}^{}", name(i), e)),
                }
            }
            if factors.is_empty() {
                out.push_str(&fmt_rat(&a));
            } else {
                if !a.is_one() {
                    out.push_str(&fmt_rat(&a));
                    out.push('*');
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }
}

fn rat_content<'a>(vals: impl Iterator<Item = &'a Rat>) -> Rat {
    let mut g = BigInt::zero();
    let mut l = BigInt::one();
    let mut any = false;
    for v in vals {
        any = true;
        g = g.gcd(v.numer());
        l = l.lcm(v.denom());
    }
    if !any || g.is_zero() {
        return Rat::one();
    }
    Rat::new(g, l)
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(None))
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars, "variable universe mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars, "variable universe mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Rat::one())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars, "variable universe mismatch");
        let mut out = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(String, &Vec<u32>)> =
            self.terms.iter().map(|(m, c)| (fmt_rat(c), &m.0)).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<(serde_json::Value, Vec<u32>)>::deserialize(d)?;
        let nvars = v.first().map(|(_, e)| e.len()).unwrap_or(0);
        let mut p = Poly::zero(nvars);
        for (c, e) in v {
            if e.len() != nvars {
                return Err(D::Error::custom("inconsistent exponent lengths"));
            }
            let c = rat_serde::value_to_rat(&c).map_err(D::Error::custom)?;
            p.add_term(Mono(e), c);
        }
        Ok(p)
    }
}

/// Ratio of polynomials in light normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RfOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl RatFun {
    pub fn new(num: Poly, den: Poly) -> Result<Self, MathError> {
        if den.is_zero() {
            return Err(MathError::DivisionByZeroFunction);
        }
        assert_eq!(num.nvars, den.nvars, "variable universe mismatch");
        Ok(RatFun::normalized(num, den))
    }

    pub fn from_poly(p: Poly) -> Self {
        let n = p.nvars;
        RatFun::normalized(p, Poly::one(n))
    }

    pub fn constant(nvars: usize, c: Rat) -> Self {
        RatFun::from_poly(Poly::constant(nvars, c))
    }

    pub fn zero(nvars: usize) -> Self {
        RatFun { num: Poly::zero(nvars), den: Poly::one(nvars) }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn normalized(num: Poly, den: Poly) -> Self {
        let n = num.nvars;
        if num.is_zero() {
            return RatFun { num, den: Poly::one(n) };
        }
        let c = rat_content(num.terms.values().chain(den.terms.values()));
        let (mut num, mut den) = if c.is_one() {
            (num, den)
        } else {
            let inv = c.recip();
            (num.scale(&inv), den.scale(&inv))
        };
        if let (Some(a), Some(b)) = (num.mono_content(), den.mono_content()) {
            let g = a.gcd(&b);
            if g.degree() > 0 {
                num = num.div_mono(&g);
                den = den.div_mono(&g);
            }
        }
        if den.leading().map(|(_, v)| v.is_negative()).unwrap_or(false) {
            num = -&num;
            den = -&den;
        }
        RatFun { num, den }
    }

    /// Re-applies normalization (idempotent).
    pub fn renormalize(&self) -> Self {
        RatFun::normalized(self.num.clone(), self.den.clone())
    }

    pub fn combine(&self, rhs: &RatFun, op: RfOp) -> Result<RatFun, MathError> {
        rf_combine(self, rhs, op)
    }

    pub fn eval(&self, point: &[Rat]) -> Result<Rat, MathError> {
        rf_eval(self, point)
    }

    pub fn scale(&self, c: &Rat) -> RatFun {
        RatFun::normalized(self.num.scale(c), self.den.clone())
    }

    pub fn substitute(&self, i: usize, value: &Rat) -> Result<RatFun, MathError> {
        RatFun::new(self.num.substitute(i, value), self.den.substitute(i, value))
    }

    pub fn render(&self, names: Option<&[String]>) -> String {
        if self.den.is_constant() && self.den.constant_term().is_one() {
            self.num.render(names)
        } else {
            format!("({})/({})", self.num.render(names), self.den.render(names))
        }
    }
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(None))
    }
}

pub fn rf_combine(lhs: &RatFun, rhs: &RatFun, op: RfOp) -> Result<RatFun, MathError> {
    match op {
        RfOp::Add | RfOp::Sub => {
            let (left, right, den) = if lhs.den == rhs.den {
                (lhs.num.clone(), rhs.num.clone(), lhs.den.clone())
            } else {
                (&lhs.num * &rhs.den, &rhs.num * &lhs.den, &lhs.den * &rhs.den)
            };
            let num = if op == RfOp::Add { &left + &right } else { &left - &right };
            RatFun::new(num, den)
        }
        RfOp::Mul => RatFun::new(&lhs.num * &rhs.num, &lhs.den * &rhs.den),
        RfOp::Div => {
            if rhs.num.is_zero() {
                return Err(MathError::DivisionByZeroFunction);
            }
            RatFun::new(&lhs.num * &rhs.den, &lhs.den * &rhs.num)
        }
    }
}

pub fn rf_equal(lhs: &RatFun, rhs: &RatFun) -> bool {
    if lhs == rhs {
        return true;
    }
    &lhs.num * &rhs.den == &rhs.num * &lhs.den
}

pub fn rf_eval(f: &RatFun, point: &[Rat]) -> Result<Rat, MathError> {
    let d = f.den.eval(point);
    if d.is_zero() {
        return Err(MathError::DenominatorVanishes(point.iter().map(fmt_rat).collect()));
    }
    Ok(f.num.eval(point) / d)
}

/// Dense exact linear algebra on row-major matrices.
pub mod linalg {
    use super::Rat;
    use num_traits::{One, Zero};

    /// Row echelon form in place; returns the pivot columns.
    pub fn row_reduce(m: &mut [Vec<Rat>]) -> Vec<usize> {
        let rows = m.len();
        let cols = m.first().map(|r| r.len()).unwrap_or(0);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
            m.swap(r, p);
            let inv = m[r][c].recip();
            for v in m[r].iter_mut() {
                *v *= &inv;
            }
            for i in 0..rows {
                if i != r && !m[i][c].is_zero() {
                    let f = m[i][c].clone();
                    let (src, dst) = if i < r {
                        let (a, b) = m.split_at_mut(r);
                        (&b[0], &mut a[i])
                    } else {
                        let (a, b) = m.split_at_mut(i);
                        (&a[r], &mut b[0])
                    };
                    for (d, s) in dst.iter_mut().zip(src.iter()) {
                        if !s.is_zero() {
                            *d -= &f * s;
                        }
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(m: &[Vec<Rat>]) -> usize {
        let mut w = m.to_vec();
        row_reduce(&mut w).len()
    }

    /// Solves the square system `a x = b`; `None` when singular.
    pub fn solve(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
        let n = a.len();
        let mut w: Vec<Vec<Rat>> = a
            .iter()
            .zip(b)
            .map(|(row, bi)| {
                assert_eq!(row.len(), n, "solve needs a square matrix");
                let mut r = row.clone();
                r.push(bi.clone());
                r
            })
            .collect();
        let piv = row_reduce(&mut w);
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        Some(w.into_iter().map(|r| r[n].clone()).collect())
    }

    pub fn inverse(a: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
        let n = a.len();
        let mut w: Vec<Vec<Rat>> = a
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
                r
            })
            .collect();
        let piv = row_reduce(&mut w);
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        Some(w.into_iter().map(|r| r[n..].to_vec()).collect())
    }

    pub fn det(a: &[Vec<Rat>]) -> Rat {
        let n = a.len();
        let mut w = a.to_vec();
        let mut d = Rat::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !w[i][c].is_zero()) else { return Rat::zero() };
            if p != c {
                w.swap(p, c);
                d = -d;
            }
            d *= &w[c][c];
            let inv = w[c][c].recip();
            for i in c + 1..n {
                if w[i][c].is_zero() {
                    continue;
                }
                let f = &w[i][c] * &inv;
                for j in c..n {
                    let t = &f * &w[c][j];
                    w[i][j] -= t;
                }
            }
        }
        d
    }

    pub fn mat_mul(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
        let inner = b.len();
        let cols = b.first().map(|r| r.len()).unwrap_or(0);
        a.iter()
            .map(|row| {
                assert_eq!(row.len(), inner, "dimension mismatch");
                (0..cols)
                    .map(|j| {
                        let mut s = Rat::zero();
                        for k in 0..inner {
                            if !row[k].is_zero() && !b[k][j].is_zero() {
                                s += &row[k] * &b[k][j];
                            }
                        }
                        s
                    })
                    .collect()
            })
            .collect()
    }

    pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
        let mut s = Rat::zero();
        for (x, y) in a.iter().zip(b) {
            if !x.is_zero() && !y.is_zero() {
                s += x * y;
            }
        }
        s
    }
}

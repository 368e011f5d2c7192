//! Arithmetic in `F = Q_p(ϖ)` with `ϖ² = p`, at capped absolute precision.
//!
//! An element `x + yϖ` is stored as two `p`-adic components `p^s · U`
//! with `p ∤ U`. The precision `P` is counted in powers of `ϖ`: the element
//! is known modulo `ϖ^P O_F`, which means `x` is known modulo `p^⌈P/2⌉`
//! and `y` modulo `p^⌊P/2⌋`. Anything nonzero that survives that reduction
//! has a certain valuation; everything else is indistinguishable from zero.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::val::Val;

const POW_TABLE: usize = 192;

/// Precision used for coefficients that are exactly zero (absent terms of
/// a polynomial). Only zero may carry it.
pub const EXACT: i64 = i64::MAX / 8;

/// An odd prime together with a table of its powers.
#[derive(Debug)]
pub struct Prime {
    p: u64,
    pows: Vec<BigInt>,
}

impl Prime {
    pub fn new(p: u64) -> Result<Arc<Prime>> {
        if p == 2 {
            return Err(Error::OutOfRange("p = 2 is not supported".into()));
        }
        if !is_prime(p) {
            return Err(Error::InvalidParam(format!("{p} is not prime")));
        }
        let mut pows = Vec::with_capacity(POW_TABLE);
        let mut acc = BigInt::one();
        for _ in 0..POW_TABLE {
            pows.push(acc.clone());
            acc *= p;
        }
        Ok(Arc::new(Prime { p, pows }))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    fn pow(&self, k: i64) -> BigInt {
        debug_assert!(k >= 0);
        match self.pows.get(k as usize) {
            Some(v) => v.clone(),
            None => num_traits::pow(BigInt::from(self.p), k as usize),
        }
    }

    /// `v_p(n)` for a nonzero integer, together with the `p`-free part.
    fn split(&self, n: &BigInt) -> (i64, BigInt) {
        debug_assert!(!n.is_zero());
        let p = BigInt::from(self.p);
        let mut n = n.clone();
        let mut v = 0;
        loop {
            let (q, r) = n.div_rem(&p);
            if !r.is_zero() {
                return (v, n);
            }
            n = q;
            v += 1;
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Legendre's formula: `v_p(n!) = Σ_{i≥1} ⌊n/p^i⌋`.
pub fn vp_factorial(n: u64, p: u64) -> u64 {
    let mut total = 0;
    let mut q = n / p;
    while q > 0 {
        total += q;
        q /= p;
    }
    total
}

/// `v_p(n)` of a nonzero integer.
pub fn vp_int(n: i64, p: u64) -> Option<u32> {
    if n == 0 {
        return None;
    }
    let mut n = n.unsigned_abs();
    let mut v = 0;
    while n.is_multiple_of(p) {
        n /= p;
        v += 1;
    }
    Some(v)
}

/// `p^shift · unit`, zero when `unit == 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Comp {
    shift: i64,
    unit: BigInt,
}

impl Comp {
    fn zero() -> Comp {
        Comp { shift: 0, unit: BigInt::zero() }
    }

    fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    /// Normalizes `p^shift · n` and reduces it modulo `p^cap`.
    fn new(prime: &Prime, shift: i64, n: BigInt, cap: i64) -> Comp {
        if n.is_zero() {
            return Comp::zero();
        }
        let (v, u) = prime.split(&n);
        let shift = shift + v;
        if shift >= cap {
            return Comp::zero();
        }
        let unit = u.mod_floor(&prime.pow(cap - shift));
        Comp { shift, unit }
    }

    fn reduce(&self, prime: &Prime, cap: i64) -> Comp {
        if self.is_zero() || self.shift >= cap {
            return Comp::zero();
        }
        let m = prime.pow(cap - self.shift);
        if self.unit.sign() != num_bigint::Sign::Minus && self.unit < m {
            return self.clone();
        }
        Comp { shift: self.shift, unit: self.unit.mod_floor(&m) }
    }

    fn add(&self, other: &Comp, prime: &Prime, cap: i64) -> Comp {
        if self.is_zero() {
            return other.reduce(prime, cap);
        }
        if other.is_zero() {
            return self.reduce(prime, cap);
        }
        let s = self.shift.min(other.shift);
        let a = &self.unit * prime.pow(self.shift - s);
        let b = &other.unit * prime.pow(other.shift - s);
        Comp::new(prime, s, a + b, cap)
    }

    fn neg(&self, prime: &Prime, cap: i64) -> Comp {
        if self.is_zero() {
            return Comp::zero();
        }
        Comp::new(prime, self.shift, -&self.unit, cap)
    }

    fn mul(&self, other: &Comp, prime: &Prime, cap: i64) -> Comp {
        if self.is_zero() || other.is_zero() {
            return Comp::zero();
        }
        let shift = self.shift + other.shift;
        if shift >= cap {
            return Comp::zero();
        }
        let unit = (&self.unit * &other.unit).mod_floor(&prime.pow(cap - shift));
        Comp { shift, unit }
    }

    fn scaled(&self, k: i64) -> Comp {
        Comp { shift: self.shift + k, unit: self.unit.clone() }
    }

    fn from_ratio(prime: &Prime, r: &BigRational, cap: i64) -> Comp {
        if r.is_zero() {
            return Comp::zero();
        }
        let (vn, n) = prime.split(r.numer());
        let (vd, d) = prime.split(r.denom());
        let shift = vn - vd;
        if shift >= cap {
            return Comp::zero();
        }
        let m = prime.pow(cap - shift);
        let dinv = d.mod_floor(&m).modinv(&m).expect("p-free denominator is invertible");
        Comp { shift, unit: (n * dinv).mod_floor(&m) }
    }

    fn to_ratio(&self, prime: &Prime) -> BigRational {
        if self.is_zero() {
            return BigRational::zero();
        }
        if self.shift >= 0 {
            BigRational::from_integer(&self.unit * prime.pow(self.shift))
        } else {
            BigRational::new(self.unit.clone(), prime.pow(-self.shift))
        }
    }
}

fn cap_x(prec: i64) -> i64 {
    prec.div_euclid(2) + prec.rem_euclid(2)
}

fn cap_y(prec: i64) -> i64 {
    prec.div_euclid(2)
}

/// An element `x + yϖ` of `Q_p(ϖ)` known modulo `ϖ^prec`.
#[derive(Clone)]
pub struct FieldElem {
    prime: Arc<Prime>,
    x: Comp,
    y: Comp,
    prec: i64,
}

impl FieldElem {
    fn build(prime: &Arc<Prime>, x: Comp, y: Comp, prec: i64) -> FieldElem {
        let x = x.reduce(prime, cap_x(prec));
        let y = y.reduce(prime, cap_y(prec));
        FieldElem { prime: prime.clone(), x, y, prec }
    }

    pub fn zero(prime: &Arc<Prime>, prec: i64) -> FieldElem {
        FieldElem { prime: prime.clone(), x: Comp::zero(), y: Comp::zero(), prec }
    }

    /// Zero known to infinite precision.
    pub fn exact_zero(prime: &Arc<Prime>) -> FieldElem {
        FieldElem::zero(prime, EXACT)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.is_zero() && self.prec >= EXACT / 2
    }

    pub fn one(prime: &Arc<Prime>, prec: i64) -> FieldElem {
        FieldElem::from_int(prime, 1, prec)
    }

    pub fn from_int(prime: &Arc<Prime>, n: i64, prec: i64) -> FieldElem {
        let x = Comp::new(prime, 0, BigInt::from(n), cap_x(prec));
        FieldElem { prime: prime.clone(), x, y: Comp::zero(), prec }
    }

    pub fn from_ratio(prime: &Arc<Prime>, r: &BigRational, prec: i64) -> FieldElem {
        FieldElem::from_parts(prime, r, &BigRational::zero(), prec)
    }

    /// `x + yϖ` from exact rationals.
    pub fn from_parts(prime: &Arc<Prime>, x: &BigRational, y: &BigRational, prec: i64) -> FieldElem {
        let cx = Comp::from_ratio(prime, x, cap_x(prec));
        let cy = Comp::from_ratio(prime, y, cap_y(prec));
        FieldElem { prime: prime.clone(), x: cx, y: cy, prec }
    }

    /// `ϖ^e` for any integer `e`.
    pub fn uniformizer_pow(prime: &Arc<Prime>, e: i64, prec: i64) -> FieldElem {
        let m = e.div_euclid(2);
        let one = Comp { shift: m, unit: BigInt::one() };
        if e.rem_euclid(2) == 0 {
            FieldElem::build(prime, one, Comp::zero(), prec)
        } else {
            FieldElem::build(prime, Comp::zero(), one, prec)
        }
    }

    pub fn prime(&self) -> &Arc<Prime> {
        &self.prime
    }

    pub fn p(&self) -> u64 {
        self.prime.p
    }

    /// Absolute precision in half units.
    pub fn prec(&self) -> i64 {
        self.prec
    }

    /// Certain valuation in half units, or `None` if indistinguishable from 0.
    pub fn val(&self) -> Option<i64> {
        let vx = (!self.x.is_zero()).then(|| 2 * self.x.shift);
        let vy = (!self.y.is_zero()).then(|| 2 * self.y.shift + 1);
        match (vx, vy) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Certified lower bound on the valuation: the valuation if certain,
    /// the precision otherwise.
    pub fn val_lower(&self) -> i64 {
        self.val().unwrap_or(self.prec)
    }

    pub fn valuation(&self) -> Val {
        self.val().map(Val::new).unwrap_or(Val::INF)
    }

    /// [`FieldElem::val_lower`] as a [`Val`], `+∞` for exact zeros.
    pub fn val_bound(&self) -> Val {
        match self.val() {
            Some(v) => Val::new(v),
            None if self.prec >= EXACT / 2 => Val::INF,
            None => Val::new(self.prec),
        }
    }

    /// Indistinguishable from zero at the current precision.
    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn eq_at_prec(&self, other: &FieldElem) -> bool {
        (self - other).is_zero()
    }

    /// Lowers the precision; never raises it.
    pub fn with_prec(&self, prec: i64) -> FieldElem {
        let prec = prec.min(self.prec);
        FieldElem::build(&self.prime, self.x.clone(), self.y.clone(), prec)
    }

    fn check_prime(&self, other: &FieldElem) {
        assert_eq!(self.prime.p, other.prime.p, "mixing elements over different primes");
    }

    pub fn mul_int(&self, n: i64) -> FieldElem {
        if n == 0 {
            return FieldElem::exact_zero(&self.prime);
        }
        let v = vp_int(n, self.prime.p).unwrap() as i64;
        let prec = self.prec.saturating_add(2 * v).min(EXACT);
        let pr = &self.prime;
        let k = Comp { shift: 0, unit: BigInt::from(n) };
        let x = self.x.mul(&k, pr, cap_x(prec) + 1);
        let y = self.y.mul(&k, pr, cap_y(prec) + 1);
        FieldElem::build(
            pr,
            Comp::new(pr, x.shift, x.unit, cap_x(prec)),
            Comp::new(pr, y.shift, y.unit, cap_y(prec)),
            prec,
        )
    }

    /// Multiplication by `ϖ^e`; exact, shifts the precision by `e`.
    pub fn mul_uniformizer_pow(&self, e: i64) -> FieldElem {
        let m = e.div_euclid(2);
        let prec = self.prec.saturating_add(e).min(EXACT);
        if e.rem_euclid(2) == 0 {
            FieldElem::build(&self.prime, self.x.scaled(m), self.y.scaled(m), prec)
        } else {
            // (x + yϖ)·ϖ = p·y + x·ϖ
            FieldElem::build(&self.prime, self.y.scaled(m + 1), self.x.scaled(m), prec)
        }
    }

    pub fn inv(&self) -> Result<FieldElem> {
        let v = self.val().ok_or_else(|| Error::PrecisionLoss {
            op: "inverse",
            detail: format!("divisor indistinguishable from 0 at precision {}", Val::new(self.prec)),
        })?;
        let prime = &self.prime;
        let prec = self.prec - 2 * v;
        let (cx, cy) = (cap_x(prec), cap_y(prec));
        let sx = if self.x.is_zero() { cx } else { self.x.shift };
        let sy = if self.y.is_zero() { cy } else { self.y.shift };
        let k = (cx - sx + v).max(cy - sy + v).max(1);
        let ncap = v + k;
        // N(e) = x² - p·y², of valuation exactly v
        let x2 = self.x.mul(&self.x, prime, ncap);
        let y2 = self.y.mul(&self.y, prime, ncap).scaled(1);
        let norm = x2.add(&y2.neg(prime, ncap), prime, ncap);
        debug_assert_eq!(norm.shift, v);
        let m = prime.pow(k);
        let winv =
            norm.unit.mod_floor(&m).modinv(&m).ok_or_else(|| Error::Internal("norm unit not invertible".into()))?;
        let ninv = Comp { shift: -v, unit: winv };
        let x = self.x.mul(&ninv, prime, cx);
        let y = self.y.mul(&ninv, prime, cy).neg(prime, cy);
        Ok(FieldElem { prime: prime.clone(), x, y, prec })
    }

    pub fn div(&self, other: &FieldElem) -> Result<FieldElem> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, e: u32) -> FieldElem {
        let mut result: Option<FieldElem> = None;
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => &r * &base,
                });
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result.unwrap_or_else(|| FieldElem::one(&self.prime, self.prec.max(0)))
    }

    /// The `Q_p`-part as an exact rational representative.
    pub fn x_ratio(&self) -> BigRational {
        self.x.to_ratio(&self.prime)
    }

    /// The `ϖ`-coefficient as an exact rational representative.
    pub fn y_ratio(&self) -> BigRational {
        self.y.to_ratio(&self.prime)
    }

    /// Image in the residue field `F_p` of an element of valuation `≥ 0`.
    pub fn residue(&self) -> Result<u64> {
        if self.prec < 1 {
            return Err(Error::PrecisionLoss { op: "residue", detail: "precision below one ϖ-digit".into() });
        }
        if let Some(v) = self.val() {
            if v < 0 {
                return Err(Error::InvalidParam(format!("element of valuation {} has no residue", Val::new(v))));
            }
        }
        if self.x.is_zero() || self.x.shift > 0 {
            return Ok(0);
        }
        let p = BigInt::from(self.prime.p);
        Ok(self.x.unit.mod_floor(&p).to_u64().expect("residue fits"))
    }

    /// Literal form `x`, `y*w`, or `x + y*w`.
    pub fn to_literal(&self) -> String {
        let x = self.x_ratio();
        let y = self.y_ratio();
        match (x.is_zero(), y.is_zero()) {
            (true, true) => "0".into(),
            (false, true) => x.to_string(),
            (true, false) => format!("{y}*w"),
            (false, false) if y.is_negative() => format!("{x} - {}*w", -y),
            (false, false) => format!("{x} + {y}*w"),
        }
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O(p^{})", self.to_literal(), Val::new(self.prec))
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

impl Serialize for FieldElem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("FieldElem", 4)?;
        st.serialize_field("x", &self.x_ratio().to_string())?;
        st.serialize_field("y", &self.y_ratio().to_string())?;
        st.serialize_field("prec", &Val::new(self.prec))?;
        st.serialize_field("p", &self.prime.p)?;
        st.end()
    }
}

impl<'a> Add<&'a FieldElem> for &'a FieldElem {
    type Output = FieldElem;
    fn add(self, rhs: &FieldElem) -> FieldElem {
        self.check_prime(rhs);
        let prec = self.prec.min(rhs.prec);
        let pr = &self.prime;
        let x = self.x.add(&rhs.x, pr, cap_x(prec));
        let y = self.y.add(&rhs.y, pr, cap_y(prec));
        FieldElem { prime: pr.clone(), x, y, prec }
    }
}

impl<'a> Sub<&'a FieldElem> for &'a FieldElem {
    type Output = FieldElem;
    fn sub(self, rhs: &FieldElem) -> FieldElem {
        self + &(-rhs)
    }
}

impl Neg for &FieldElem {
    type Output = FieldElem;
    fn neg(self) -> FieldElem {
        let pr = &self.prime;
        FieldElem {
            prime: pr.clone(),
            x: self.x.neg(pr, cap_x(self.prec)),
            y: self.y.neg(pr, cap_y(self.prec)),
            prec: self.prec,
        }
    }
}

impl<'a> Mul<&'a FieldElem> for &'a FieldElem {
    type Output = FieldElem;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &FieldElem) -> FieldElem {
        self.check_prime(rhs);
        let prec =
            (self.val_lower().saturating_add(rhs.prec)).min(rhs.val_lower().saturating_add(self.prec)).min(EXACT);
        let pr = &self.prime;
        let (cx, cy) = (cap_x(prec), cap_y(prec));
        // (x1 + y1ϖ)(x2 + y2ϖ) = x1x2 + p·y1y2 + (x1y2 + x2y1)ϖ
        let big = cx.max(cy) + 2;
        let xx = self.x.mul(&rhs.x, pr, cx);
        let yy = self.y.mul(&rhs.y, pr, big).scaled(1);
        let xy = self.x.mul(&rhs.y, pr, cy);
        let yx = self.y.mul(&rhs.x, pr, cy);
        let x = xx.add(&yy, pr, cx);
        let y = xy.add(&yx, pr, cy);
        FieldElem { prime: pr.clone(), x, y, prec }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<FieldElem> for FieldElem {
            type Output = FieldElem;
            fn $m(self, rhs: FieldElem) -> FieldElem {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a FieldElem> for FieldElem {
            type Output = FieldElem;
            fn $m(self, rhs: &FieldElem) -> FieldElem {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for FieldElem {
    type Output = FieldElem;
    fn neg(self) -> FieldElem {
        -&self
    }
}

fn parse_ratio(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational `{s}`"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Splits at top-level `+`/`-`, keeping signs attached to their term.
fn split_terms(s: &str) -> Vec<String> {
    let mut terms = Vec::new();
    let mut cur = String::new();
    let mut prev: Option<char> = None;
    for c in s.chars() {
        if c.is_whitespace() {
            continue;
        }
        if (c == '+' || c == '-') && !cur.is_empty() && !matches!(prev, Some('^') | Some('*') | Some('/')) {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(c);
        prev = Some(c);
    }
    if !cur.is_empty() {
        terms.push(cur);
    }
    terms
}

/// Parses a literal into exact `(x, y)` with value `x + yϖ`.
///
/// Terms are `r`, `r*w^e`, `w^e`, `r*w`, `w`, `p^v`, `r*p^v`, joined by
/// `+`/`-`. Here `r` is an integer or `a/b`, `e` an integer, and `v` an
/// integer or half-integer (`p^v = ϖ^{2v}`).
pub fn parse_literal(s: &str, p: u64) -> Result<(BigRational, BigRational)> {
    let mut x = BigRational::zero();
    let mut y = BigRational::zero();
    let terms = split_terms(s);
    if terms.is_empty() {
        return Err(Error::Parse("empty literal".into()));
    }
    for term in terms {
        let (sign, body) = match term.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, term.strip_prefix('+').unwrap_or(&term)),
        };
        let (coeff, exp) = parse_term(body)?;
        let coeff = coeff * BigRational::from_integer(sign.into());
        let m = exp.div_euclid(2);
        let pm = if m >= 0 {
            BigRational::from_integer(num_traits::pow(BigInt::from(p), m as usize))
        } else {
            BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(p), (-m) as usize))
        };
        if exp.rem_euclid(2) == 0 {
            x += coeff * pm;
        } else {
            y += coeff * pm;
        }
    }
    Ok((x, y))
}

/// One term as `coeff · ϖ^exp`.
fn parse_term(body: &str) -> Result<(BigRational, i64)> {
    let bad = || Error::Parse(format!("bad term `{body}`"));
    let (coeff_str, power) = match body.find(['w', 'p']) {
        None => return Ok((parse_ratio(body)?, 0)),
        Some(0) => ("1", body),
        Some(i) => {
            let c = body[..i].strip_suffix('*').ok_or_else(bad)?;
            (c, &body[i..])
        }
    };
    let coeff = parse_ratio(coeff_str)?;
    let (base, e) = match power.split_once('^') {
        Some((b, e)) => (b, Some(e)),
        None => (power, None),
    };
    let exp = match (base, e) {
        ("w", None) => 1,
        ("w", Some(e)) => e.parse::<i64>().map_err(|_| bad())?,
        ("p", Some(v)) => {
            let v = parse_ratio(v)?;
            let twice = v * BigRational::from_integer(2.into());
            if !twice.is_integer() {
                return Err(Error::Parse(format!("p-exponent must be a half-integer in `{body}`")));
            }
            twice.to_integer().to_i64().ok_or_else(bad)?
        }
        _ => return Err(bad()),
    };
    Ok((coeff, exp))
}

impl FieldElem {
    pub fn parse(prime: &Arc<Prime>, s: &str, prec: i64) -> Result<FieldElem> {
        let (x, y) = parse_literal(s, prime.p)?;
        Ok(FieldElem::from_parts(prime, &x, &y, prec))
    }
}

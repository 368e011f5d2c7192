//! Truncated power series over `F` viewed inside `R_2`.
//!
//! A [`TruncSeries`] keeps coefficients of `u^0..=u^N` and a certified lower
//! bound `tail` on `v_{R_2}` of everything of degree `> N`. Coefficient
//! imprecision is carried by the coefficients themselves, so the pair
//! (coefficients, tail) always yields a certified lower bound on the true
//! valuation.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::padic::{FieldElem, Prime};
use crate::val::{Val, Verdict};

/// Shared truncation window and working precision.
#[derive(Clone, Debug)]
pub struct Ring {
    pub prime: Arc<Prime>,
    /// Truncation degree `N_u`.
    pub n: usize,
    /// Coefficient precision in half units.
    pub prec: i64,
}

impl Ring {
    pub fn new(prime: Arc<Prime>, n: usize, prec: i64) -> Ring {
        Ring { prime, n, prec }
    }

    pub fn p(&self) -> u64 {
        self.prime.p()
    }

    pub fn elem(&self, n: i64) -> FieldElem {
        FieldElem::from_int(&self.prime, n, self.prec)
    }

    pub fn w_pow(&self, e: i64) -> FieldElem {
        FieldElem::uniformizer_pow(&self.prime, e, self.prec)
    }

    pub fn zero(&self) -> TruncSeries {
        TruncSeries::zero(&self.prime, self.n)
    }

    pub fn one(&self) -> TruncSeries {
        self.constant(self.elem(1))
    }

    pub fn constant(&self, c: FieldElem) -> TruncSeries {
        self.monomial(c, 0)
    }

    /// `c·u^d`; degrees past the window become tail.
    pub fn monomial(&self, c: FieldElem, d: usize) -> TruncSeries {
        let mut coeffs = vec![FieldElem::exact_zero(&self.prime); d + 1];
        coeffs[d] = c;
        TruncSeries::from_poly(&self.prime, self.n, coeffs)
    }

    /// `u`.
    pub fn u(&self) -> TruncSeries {
        self.monomial(self.elem(1), 1)
    }

    /// `E = u + p`.
    pub fn e(&self) -> TruncSeries {
        TruncSeries::from_poly(&self.prime, self.n, vec![self.elem(self.p() as i64), self.elem(1)])
    }

    /// `𝔠 = φ(E)/p = 1 + u^p/p`.
    pub fn frak_c(&self) -> TruncSeries {
        let p = self.p() as usize;
        let mut coeffs = vec![FieldElem::exact_zero(&self.prime); p + 1];
        coeffs[0] = self.elem(1);
        coeffs[p] = self.w_pow(-2);
        TruncSeries::from_poly(&self.prime, self.n, coeffs)
    }

    /// `λ₋ = Π_{n≥0} φ^{2n+1}(E)/p` and `λ₊₊ = φ(λ₋)`.
    pub fn lambda_products(&self) -> Result<(TruncSeries, TruncSeries)> {
        let e_over_p = self.e().scale(&self.w_pow(-2));
        let lm = e_over_p.frobenius_product(1, 2)?;
        let lpp = lm.frobenius();
        Ok((lm, lpp))
    }
}

#[derive(Clone)]
pub struct TruncSeries {
    prime: Arc<Prime>,
    coeffs: Vec<FieldElem>,
    tail: Val,
}

impl TruncSeries {
    pub fn zero(prime: &Arc<Prime>, n: usize) -> TruncSeries {
        TruncSeries { prime: prime.clone(), coeffs: vec![FieldElem::exact_zero(prime); n + 1], tail: Val::INF }
    }

    /// A polynomial; terms of degree `> n` are folded into the tail bound.
    pub fn from_poly(prime: &Arc<Prime>, n: usize, mut coeffs: Vec<FieldElem>) -> TruncSeries {
        let mut tail = Val::INF;
        if coeffs.len() > n + 1 {
            for (i, c) in coeffs.iter().enumerate().skip(n + 1) {
                tail = tail.min(c.val_bound() + i as i64);
            }
            coeffs.truncate(n + 1);
        }
        coeffs.resize(n + 1, FieldElem::exact_zero(prime));
        TruncSeries { prime: prime.clone(), coeffs, tail }
    }

    pub fn with_tail(mut self, tail: Val) -> TruncSeries {
        self.tail = self.tail.min(tail);
        self
    }

    pub fn prime(&self) -> &Arc<Prime> {
        &self.prime
    }

    pub fn p(&self) -> u64 {
        self.prime.p()
    }

    /// Truncation degree `N_u`.
    pub fn trunc_deg(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize) -> &FieldElem {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    pub fn tail(&self) -> Val {
        self.tail
    }

    pub fn set_coeff(&mut self, i: usize, c: FieldElem) {
        self.coeffs[i] = c;
    }

    /// Lower bounds `i + v(a_i)` for each retained term.
    fn weights(&self) -> Vec<Val> {
        self.coeffs.iter().enumerate().map(|(i, c)| c.val_bound() + i as i64).collect()
    }

    /// Certified lower bound on `v_{R_2}` and whether it is attained.
    pub fn v_r2(&self) -> (Val, bool) {
        let mut certain = Val::INF;
        let mut uncertain = self.tail;
        for (i, c) in self.coeffs.iter().enumerate() {
            match c.val() {
                Some(v) => certain = certain.min(Val::new(v + i as i64)),
                None => uncertain = uncertain.min(c.val_bound() + i as i64),
            }
        }
        if certain <= uncertain {
            (certain, certain.is_finite())
        } else {
            (uncertain, false)
        }
    }

    pub fn vlow(&self) -> Val {
        self.v_r2().0
    }

    /// `f ∈ H_v`, i.e. `v_{R_2}(f) ≥ v`.
    pub fn in_h(&self, v: Val) -> Verdict {
        let (lo, exact) = self.v_r2();
        Verdict::ge(lo, exact, v)
    }

    /// `f ∈ H_v°`, i.e. `v_{R_2}(f) > v`.
    pub fn in_h_open(&self, v: Val) -> Verdict {
        let (lo, exact) = self.v_r2();
        Verdict::gt(lo, exact, v)
    }

    /// Smallest coefficient precision among retained terms that are not
    /// exactly zero.
    pub fn min_prec(&self) -> i64 {
        self.coeffs.iter().filter(|c| !c.is_exact_zero()).map(|c| c.prec()).min().unwrap_or(crate::padic::EXACT)
    }

    fn check(&self, other: &TruncSeries) {
        assert_eq!(self.coeffs.len(), other.coeffs.len(), "series truncated at different degrees");
        assert_eq!(self.p(), other.p(), "series over different primes");
    }

    pub fn add(&self, other: &TruncSeries) -> TruncSeries {
        self.check(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        TruncSeries { prime: self.prime.clone(), coeffs, tail: self.tail.min(other.tail) }
    }

    pub fn sub(&self, other: &TruncSeries) -> TruncSeries {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> TruncSeries {
        TruncSeries { prime: self.prime.clone(), coeffs: self.coeffs.iter().map(|a| -a).collect(), tail: self.tail }
    }

    pub fn scale(&self, c: &FieldElem) -> TruncSeries {
        let coeffs = self.coeffs.iter().map(|a| a * c).collect();
        TruncSeries { prime: self.prime.clone(), coeffs, tail: self.tail + c.val_bound() }
    }

    pub fn mul(&self, other: &TruncSeries) -> TruncSeries {
        self.check(other);
        let n = self.trunc_deg();
        let zero = FieldElem::exact_zero(&self.prime);
        let mut coeffs = vec![zero; n + 1];
        let nz_b: Vec<usize> = (0..=n).filter(|&j| !other.coeffs[j].is_exact_zero()).collect();
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_exact_zero() {
                continue;
            }
            for &j in &nz_b {
                if i + j > n {
                    break;
                }
                let t = a * &other.coeffs[j];
                coeffs[i + j] = &coeffs[i + j] + &t;
            }
        }
        // products of retained terms landing past the window
        let wa = self.weights();
        let wb = other.weights();
        let mut suffix = vec![Val::INF; n + 2];
        for j in (0..=n).rev() {
            suffix[j] = suffix[j + 1].min(wb[j]);
        }
        let mut tail = Val::INF;
        for (i, w) in wa.iter().enumerate().skip(1) {
            tail = tail.min(*w + suffix[n + 1 - i]);
        }
        let (va, vb) = (self.vlow(), other.vlow());
        tail = tail.min(self.tail + vb).min(other.tail + va).min(self.tail + other.tail);
        TruncSeries { prime: self.prime.clone(), coeffs, tail }
    }

    pub fn pow(&self, e: u32) -> TruncSeries {
        let mut result: Option<TruncSeries> = None;
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.mul(&base),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result.unwrap_or_else(|| {
            let mut one = TruncSeries::zero(&self.prime, self.trunc_deg());
            one.coeffs[0] = FieldElem::one(&self.prime, self.min_prec().min(1 << 20));
            one
        })
    }

    /// `φ(Σ a_i u^i) = Σ a_i u^{p i}`.
    pub fn frobenius(&self) -> TruncSeries {
        let n = self.trunc_deg();
        let p = self.p() as usize;
        let mut coeffs = vec![FieldElem::exact_zero(&self.prime); n + 1];
        let mut tail = self.tail + ((p as i64 - 1) * (n as i64 + 1));
        for (i, a) in self.coeffs.iter().enumerate() {
            if p * i <= n {
                coeffs[p * i] = a.clone();
            } else {
                tail = tail.min(a.val_bound() + (p * i) as i64);
            }
        }
        TruncSeries { prime: self.prime.clone(), coeffs, tail }
    }

    pub fn frobenius_pow(&self, m: u32) -> TruncSeries {
        (0..m).fold(self.clone(), |f, _| f.frobenius())
    }

    /// `N = -u d/du`.
    pub fn n_operator(&self) -> TruncSeries {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, a)| a.mul_int(-(i as i64))).collect();
        TruncSeries { prime: self.prime.clone(), coeffs, tail: self.tail }
    }

    /// `T_{≤d}`; exactly a polynomial.
    pub fn truncate_le(&self, d: usize) -> TruncSeries {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut().skip(d + 1) {
            *c = FieldElem::exact_zero(&self.prime);
        }
        out.tail = Val::INF;
        out
    }

    /// `T_{>d} = f - T_{≤d}`.
    pub fn truncate_gt(&self, d: usize) -> TruncSeries {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut().take(d + 1) {
            *c = FieldElem::exact_zero(&self.prime);
        }
        out
    }

    /// `f·u^k`; terms pushed past the window join the tail.
    pub fn shift_up(&self, k: usize) -> TruncSeries {
        let n = self.trunc_deg();
        let mut coeffs = vec![FieldElem::exact_zero(&self.prime); k.min(n + 1)];
        coeffs.extend(self.coeffs.iter().cloned());
        let mut tail = self.tail + k as i64;
        for (i, c) in coeffs.iter().enumerate().skip(n + 1) {
            tail = tail.min(c.val_bound() + i as i64);
        }
        coeffs.truncate(n + 1);
        TruncSeries { prime: self.prime.clone(), coeffs, tail }
    }

    /// `(f - T_{<k}(f))/u^k`. The top `k` coefficients come from the tail,
    /// so they are stored as zeros whose precision encodes the tail bound.
    pub fn shift_down(&self, k: usize) -> TruncSeries {
        let n = self.trunc_deg();
        let mut coeffs: Vec<FieldElem> = self.coeffs.iter().skip(k).cloned().collect();
        for i in coeffs.len()..=n {
            let c = match self.tail {
                Val::INF => FieldElem::exact_zero(&self.prime),
                Val::NEG_INF => FieldElem::zero(&self.prime, -crate::padic::EXACT),
                t => FieldElem::zero(&self.prime, t.raw() - (i + k) as i64),
            };
            coeffs.push(c);
        }
        TruncSeries { prime: self.prime.clone(), coeffs, tail: self.tail - k as i64 }
    }

    /// Lowers every coefficient to precision at most `prec`.
    pub fn with_prec(&self, prec: i64) -> TruncSeries {
        let coeffs =
            self.coeffs.iter().map(|c| if c.is_exact_zero() { c.clone() } else { c.with_prec(prec) }).collect();
        TruncSeries { prime: self.prime.clone(), coeffs, tail: self.tail }
    }

    /// Inverse of a unit of `R_2`, with an a posteriori tail bound.
    ///
    /// With `h` the truncated inverse and `r = f·h - 1`, `v(r) > 0` makes
    /// `f` a unit and `f^{-1} - h = -h·r·(1+r)^{-1}` has valuation at least
    /// `v(h) + v(r)`.
    pub fn invert_unit(&self) -> Result<TruncSeries> {
        let n = self.trunc_deg();
        let c0inv = self.coeffs[0]
            .inv()
            .map_err(|_| Error::NotUnit(format!("constant term {:?} has no certain valuation", self.coeffs[0])))?;
        let mut h = vec![FieldElem::exact_zero(&self.prime); n + 1];
        h[0] = c0inv.clone();
        let nz: Vec<usize> = (1..=n).filter(|&k| !self.coeffs[k].is_exact_zero()).collect();
        for m in 1..=n {
            let mut acc = FieldElem::exact_zero(&self.prime);
            for &k in &nz {
                if k > m {
                    break;
                }
                if h[m - k].is_exact_zero() {
                    continue;
                }
                acc = &acc + &(&self.coeffs[k] * &h[m - k]);
            }
            h[m] = -(&acc * &c0inv);
        }
        let hs = TruncSeries { prime: self.prime.clone(), coeffs: h, tail: Val::INF };
        let mut r = self.mul(&hs);
        let p0 = r.coeffs[0].prec();
        r.coeffs[0] = &r.coeffs[0] - &FieldElem::one(&self.prime, p0);
        let vr = r.vlow();
        if vr <= Val::ZERO {
            return Err(Error::NotUnit(format!(
                "f·f⁻¹ - 1 has valuation bound {vr} at truncation {n}, not certified > 0"
            )));
        }
        let tail = hs.vlow() + vr;
        Ok(hs.with_tail(tail))
    }

    /// `Π_{k≥0} φ^{offset + step·k}(f)` for `f` with `f(0) = 1`.
    ///
    /// Factors with `p^m ≤ N` are multiplied out. The rest differ from 1 by
    /// `φ^m(g)`, `g = f - 1`, with `v(φ^m(g)) ≥ v(g) + p^m - 1`.
    pub fn frobenius_product(&self, offset: u32, step: u32) -> Result<TruncSeries> {
        let n = self.trunc_deg() as u64;
        let p = self.p();
        if !self.coeffs[0].eq_at_prec(&FieldElem::one(&self.prime, self.coeffs[0].prec())) {
            return Err(Error::Internal("frobenius_product needs constant term 1".into()));
        }
        let mut g = self.clone();
        g.coeffs[0] = FieldElem::exact_zero(&self.prime);
        let vg = g.vlow();
        let mut m = offset;
        let mut factor = self.frobenius_pow(offset);
        let mut prod: Option<TruncSeries> = None;
        while p.checked_pow(m).is_some_and(|q| q <= n) {
            prod = Some(match prod {
                None => factor.clone(),
                Some(acc) => acc.mul(&factor),
            });
            factor = factor.frobenius_pow(step);
            m += step;
        }
        let prod = prod.unwrap_or_else(|| {
            let mut one = TruncSeries::zero(&self.prime, n as usize);
            one.coeffs[0] = FieldElem::one(&self.prime, self.coeffs[0].prec());
            one
        });
        let gain = p.checked_pow(m).map(|q| q as i64 - 1).unwrap_or(i64::MAX / 4);
        let rest = vg + gain;
        if rest <= Val::ZERO {
            return Err(Error::PrecisionLoss {
                op: "frobenius_product",
                detail: format!("omitted factors not certified ≡ 1 (bound {rest})"),
            });
        }
        let tail = prod.vlow() + rest;
        Ok(prod.with_tail(tail))
    }

    /// `v_{R_2}(f - g) > v`.
    pub fn close_to(&self, other: &TruncSeries, v: Val) -> Verdict {
        self.sub(other).in_h_open(v)
    }

    /// Are all retained coefficients indistinguishable from the other's?
    pub fn eq_at_prec(&self, other: &TruncSeries) -> bool {
        self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| a.eq_at_prec(b))
    }
}

impl std::fmt::Debug for TruncSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})u^{i}")?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(tail {})", self.tail)
    }
}

impl Serialize for TruncSeries {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs: BTreeMap<usize, &FieldElem> =
            self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).collect();
        let mut st = s.serialize_struct("TruncSeries", 3)?;
        st.serialize_field("trunc_deg", &self.trunc_deg())?;
        st.serialize_field("coeffs", &coeffs)?;
        st.serialize_field("tail_val", &self.tail)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ring(p: u64, n: usize) -> Ring {
        Ring::new(Prime::new(p).unwrap(), n, 60)
    }

    #[test]
    fn frobenius_examples() {
        let r = ring(5, 30);
        let u = r.u();
        let up = u.frobenius();
        assert!(up.eq_at_prec(&r.monomial(r.elem(1), 5)));
        let c = r.constant(r.elem(7));
        assert!(c.frobenius().eq_at_prec(&c));
        let phi_e = r.e().frobenius();
        assert!(phi_e.eq_at_prec(&r.frak_c().scale(&r.elem(5))));
    }

    #[test]
    fn n_operator_examples() {
        let r = ring(3, 12);
        assert!(r.e().n_operator().eq_at_prec(&r.u().neg()));
        assert!(r.constant(r.elem(4)).n_operator().vlow() == Val::INF);
        let u3 = r.monomial(r.elem(1), 3);
        assert!(u3.n_operator().eq_at_prec(&u3.scale(&r.elem(-3))));
    }

    #[test]
    fn v_r2_examples() {
        for p in [3u64, 5, 7] {
            let r = ring(p, 40);
            assert_eq!(r.constant(r.elem(p as i64)).v_r2(), (Val::new(2), true));
            assert_eq!(r.e().v_r2(), (Val::new(1), true));
            let ep = r.e().pow(p as u32).scale(&r.w_pow(-2));
            assert_eq!(ep.v_r2(), (Val::new(p as i64 - 2), true));
        }
    }

    #[test]
    fn truncation_examples() {
        let r = ring(3, 10);
        let e2 = r.e().pow(2);
        let lo = e2.truncate_le(1);
        let want = TruncSeries::from_poly(&r.prime, 10, vec![r.elem(9), r.elem(6)]);
        assert!(lo.eq_at_prec(&want));
        assert_eq!(lo.tail(), Val::INF);
        assert!(e2.truncate_le(2).eq_at_prec(&e2));
        assert_eq!(e2.truncate_gt(2).vlow(), Val::INF);
        assert!(lo.add(&e2.truncate_gt(1)).eq_at_prec(&e2));
    }

    #[test]
    fn invert_examples() {
        let r = ring(3, 40);
        let one = r.one();
        assert!(one.invert_unit().unwrap().eq_at_prec(&one));
        let c = r.frak_c();
        let ci = c.invert_unit().unwrap();
        // geometric series 1 - u^p/p + u^{2p}/p² - ...
        for k in 0..=40 / 3 {
            let want = r.w_pow(-2 * k as i64).mul_int(if k % 2 == 0 { 1 } else { -1 });
            assert!(ci.coeff(3 * k).eq_at_prec(&want), "k = {k}");
        }
        let prod = c.mul(&ci);
        assert!(prod.eq_at_prec(&one));
        assert!(r.e().invert_unit().is_err(), "E is not a unit of R_2");
    }

    #[test]
    fn lambda_products_bounds() {
        for p in [3u64, 5, 7] {
            let n = (p * p * 2) as usize;
            let r = ring(p, n);
            let (lm, lpp) = r.lambda_products().unwrap();
            assert!(lm.coeff(0).eq_at_prec(&r.elem(1)));
            let pi = p as i64;
            assert_eq!(lm.sub(&r.one()).in_h(Val::new(pi - 2)), Verdict::True);
            assert_eq!(lpp.sub(&r.one()).in_h(Val::new(pi * pi - 2)), Verdict::True);
            let lmi = lm.invert_unit().unwrap();
            assert_eq!(lmi.v_r2(), (Val::ZERO, true));
            assert_eq!(lm.v_r2(), (Val::ZERO, true));
            assert!(lm.tail() > Val::ZERO);
        }
    }

    fn small_series(r: &Ring) -> impl Strategy<Value = TruncSeries> {
        let r = r.clone();
        prop::collection::vec((-30i64..30, -2i64..4), 4).prop_map(move |cs| {
            let coeffs = cs.iter().map(|&(a, e)| r.elem(a).mul_uniformizer_pow(e)).collect();
            TruncSeries::from_poly(&r.prime, r.n, coeffs)
        })
    }

    proptest! {
        #[test]
        fn frobenius_is_multiplicative(
            (f, g) in { let r = ring(3, 24); (small_series(&r), small_series(&r)) }
        ) {
            let lhs = f.mul(&g).frobenius();
            let rhs = f.frobenius().mul(&g.frobenius());
            prop_assert!(lhs.eq_at_prec(&rhs));
        }

        #[test]
        fn n_is_a_derivation(
            (f, g) in { let r = ring(5, 20); (small_series(&r), small_series(&r)) }
        ) {
            let lhs = f.mul(&g).n_operator();
            let rhs = f.n_operator().mul(&g).add(&f.mul(&g.n_operator()));
            prop_assert!(lhs.eq_at_prec(&rhs));
        }

        #[test]
        fn v_r2_is_submultiplicative(
            (f, g) in { let r = ring(3, 24); (small_series(&r), small_series(&r)) }
        ) {
            let (vf, ef) = f.v_r2();
            let (vg, eg) = g.v_r2();
            let (vfg, efg) = f.mul(&g).v_r2();
            prop_assert!(vfg >= vf + vg);
            if ef && eg {
                prop_assert!(efg);
                prop_assert_eq!(vfg, vf + vg);
            }
        }

        #[test]
        fn tail_is_a_lower_bound(
            (f, g) in { let r = ring(3, 6); (small_series(&r), small_series(&r)) }
        ) {
            // the full product computed in a wide window versus a narrow one
            let wide = |s: &TruncSeries| TruncSeries::from_poly(s.prime(), 20, s.coeffs().to_vec());
            let full = wide(&f).mul(&wide(&g));
            let narrow = f.mul(&g);
            let dropped = full.truncate_gt(6);
            prop_assert!(dropped.vlow() >= narrow.tail());
        }
    }
}

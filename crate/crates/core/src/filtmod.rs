//! The rank-2 filtered `(φ, N)`-module `D_{k,𝓛}` and its crystalline limit.
//!
//! Matrices act on column vectors: column `j` holds the coordinates of the
//! image of the `j`-th basis vector.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::cert::Certificate;
use crate::error::{Error, Result};
use crate::padic::{FieldElem, Prime};
use crate::val::{Val, Verdict};

/// A 2×2 matrix over `F`, row-major.
#[derive(Clone, Serialize)]
pub struct Mat2(pub [[FieldElem; 2]; 2]);

impl Mat2 {
    pub fn new(a: FieldElem, b: FieldElem, c: FieldElem, d: FieldElem) -> Mat2 {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity(prime: &Arc<Prime>, prec: i64) -> Mat2 {
        let z = FieldElem::exact_zero(prime);
        Mat2::new(FieldElem::one(prime, prec), z.clone(), z, FieldElem::one(prime, prec))
    }

    pub fn get(&self, r: usize, c: usize) -> &FieldElem {
        &self.0[r][c]
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let e = |r: usize, c: usize| &self.0[r][0] * &o.0[0][c] + &self.0[r][1] * &o.0[1][c];
        Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        let e = |r: usize, c: usize| &self.0[r][c] - &o.0[r][c];
        Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn scale(&self, s: &FieldElem) -> Mat2 {
        let e = |r: usize, c: usize| &self.0[r][c] * s;
        Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn det(&self) -> FieldElem {
        &self.0[0][0] * &self.0[1][1] - &self.0[0][1] * &self.0[1][0]
    }

    pub fn trace(&self) -> FieldElem {
        &self.0[0][0] + &self.0[1][1]
    }

    pub fn inv(&self) -> Result<Mat2> {
        let di = self.det().inv()?;
        let m = &self.0;
        Ok(Mat2::new(&m[1][1] * &di, -(&m[0][1] * &di), -(&m[1][0] * &di), &m[0][0] * &di))
    }

    pub fn apply(&self, v: &[FieldElem; 2]) -> [FieldElem; 2] {
        [&self.0[0][0] * &v[0] + &self.0[0][1] * &v[1], &self.0[1][0] * &v[0] + &self.0[1][1] * &v[1]]
    }

    /// Every entry indistinguishable from zero.
    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(FieldElem::is_zero)
    }

    pub fn eq_at_prec(&self, o: &Mat2) -> bool {
        self.sub(o).is_zero()
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(f, "({}, {}; {}, {})", m[0][0], m[0][1], m[1][0], m[1][1])
    }
}

/// The invariant `𝓛`, or `∞` for the crystalline module.
#[derive(Clone, Debug)]
pub enum Invariant {
    Finite(FieldElem),
    Infinity,
}

impl Invariant {
    pub fn finite(&self) -> Option<&FieldElem> {
        match self {
            Invariant::Finite(l) => Some(l),
            Invariant::Infinity => None,
        }
    }

    pub fn valuation(&self) -> Val {
        match self {
            Invariant::Finite(l) => l.valuation(),
            Invariant::Infinity => Val::NEG_INF,
        }
    }
}

impl Serialize for Invariant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Invariant::Finite(l) => l.serialize(s),
            Invariant::Infinity => s.serialize_str("inf"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisTag {
    E,
    F,
    Custom,
}

#[derive(Clone, Debug, Serialize)]
pub struct FilteredModule {
    #[serde(skip)]
    pub prime: Arc<Prime>,
    pub k: u32,
    pub l: Invariant,
    pub phi: Mat2,
    pub n: Mat2,
    /// Generator of `Fil^i` for `1 ≤ i ≤ jump`.
    pub fil_gen: [FieldElem; 2],
    /// Last index with `Fil^i` a line; `Fil^{jump+1} = 0`.
    pub jump: u32,
    pub basis: BasisTag,
}

impl FilteredModule {
    pub fn p(&self) -> u64 {
        self.prime.p()
    }

    pub fn h(&self) -> u32 {
        self.k - 1
    }
}

/// `D_{k,𝓛}` in the basis `e₁, e₂`; `𝓛 = ∞` gives the crystalline module.
pub fn make_d(prime: &Arc<Prime>, k: u32, l: Invariant, prec: i64) -> Result<FilteredModule> {
    if k < 3 {
        return Err(Error::InvalidParam(format!("weight k = {k} must be at least 3")));
    }
    let w = |e: i64| FieldElem::uniformizer_pow(prime, e, prec);
    let z = || FieldElem::exact_zero(prime);
    let one = FieldElem::one(prime, prec);
    let phi = Mat2::new(w(k as i64), z(), z(), w(k as i64 - 2));
    let (n, fil_gen) = match &l {
        Invariant::Finite(lv) => (Mat2::new(z(), z(), one.clone(), z()), [one, lv.clone()]),
        Invariant::Infinity => (Mat2::new(z(), z(), z(), z()), [one.clone(), one]),
    };
    Ok(FilteredModule { prime: prime.clone(), k, l, phi, n, fil_gen, jump: k - 1, basis: BasisTag::E })
}

/// `a_p = ϖ^{h-1} + ϖ^{h+1}`.
pub fn a_p(prime: &Arc<Prime>, h: u32, prec: i64) -> FieldElem {
    FieldElem::uniformizer_pow(prime, h as i64 - 1, prec) + FieldElem::uniformizer_pow(prime, h as i64 + 1, prec)
}

/// Columns `f₁ = -φ(e₁ + 𝓛e₂)`, `f₂ = e₁ + 𝓛e₂` in `e`-coordinates.
pub fn f_basis_change(d: &FilteredModule) -> Result<Mat2> {
    let l = match &d.l {
        Invariant::Finite(l) if !l.is_zero() => l,
        Invariant::Finite(_) => return Err(Error::UnsupportedBasis("𝓛 = 0: e₁ + 𝓛e₂ is an eigenvector of φ".into())),
        Invariant::Infinity => return Err(Error::UnsupportedBasis("𝓛 = ∞ has N = 0".into())),
    };
    if d.basis != BasisTag::E {
        return Err(Error::UnsupportedBasis("base change starts from the e-basis".into()));
    }
    let f2 = [d.fil_gen[0].clone(), l.clone()];
    let pf2 = d.phi.apply(&f2);
    Ok(Mat2::new(-&pf2[0], f2[0].clone(), -&pf2[1], f2[1].clone()))
}

/// The same module in the basis `f₁, f₂`.
pub fn to_f_basis(d: &FilteredModule) -> Result<FilteredModule> {
    let b = f_basis_change(d)?;
    let bi = b.inv()?;
    let phi = bi.mul(&d.phi).mul(&b);
    let n = bi.mul(&d.n).mul(&b);
    let z = FieldElem::exact_zero(&d.prime);
    let one = FieldElem::one(&d.prime, d.fil_gen[0].prec());
    Ok(FilteredModule { phi, n, fil_gen: [z, one], basis: BasisTag::F, ..d.clone() })
}

/// Closed form of `N` in the `f`-basis:
/// `p/(𝓛(1-p)) · (1, -ϖ^{-h-1}; ϖ^{h+1}, -1)`.
pub fn n_closed_form(prime: &Arc<Prime>, h: u32, l: &FieldElem, prec: i64) -> Result<Mat2> {
    let p = prime.p() as i64;
    let s = FieldElem::from_int(prime, p, prec).div(&l.mul_int(1 - p))?;
    let w = |e: i64| FieldElem::uniformizer_pow(prime, e, prec);
    let one = FieldElem::one(prime, prec);
    Ok(Mat2::new(one.clone(), -w(-(h as i64) - 1), w(h as i64 + 1), -one).scale(&s))
}

/// The monodromy scalars `(a, b, c, d)` with `N(f̂₁) = a f̂₁ + c f̂₂`,
/// `N(f̂₂) = b f̂₁ + d f̂₂`.
pub fn monodromy_scalars(df: &FilteredModule) -> Result<[FieldElem; 4]> {
    if df.basis != BasisTag::F {
        return Err(Error::UnsupportedBasis("monodromy scalars are read in the f-basis".into()));
    }
    let m = &df.n.0;
    Ok([m[0][0].clone(), m[0][1].clone(), m[1][0].clone(), m[1][1].clone()])
}

/// `Nφ = pφN`.
pub fn check_n_phi(d: &FilteredModule) -> Certificate {
    let p = d.p() as i64;
    let lhs = d.n.mul(&d.phi);
    let rhs = d.phi.mul(&d.n);
    let rhs = Mat2::new(rhs.0[0][0].mul_int(p), rhs.0[0][1].mul_int(p), rhs.0[1][0].mul_int(p), rhs.0[1][1].mul_int(p));
    Certificate::from_bool("n_phi_relation", lhs.eq_at_prec(&rhs), format!("{:?} basis", d.basis))
}

fn is_proportional(v: &[FieldElem; 2], w: &[FieldElem; 2]) -> bool {
    (&v[0] * &w[1] - &v[1] * &w[0]).is_zero()
}

/// `t_H` of a line: the largest `i` with the line inside `Fil^i`.
fn t_h_line(d: &FilteredModule, v: &[FieldElem; 2]) -> i64 {
    if is_proportional(v, &d.fil_gen) {
        d.jump as i64
    } else {
        0
    }
}

/// Valuation of the eigenvalue of `φ` on an eigenvector `v`.
fn t_n_line(d: &FilteredModule, v: &[FieldElem; 2]) -> Result<Val> {
    let img = d.phi.apply(v);
    let i = if v[0].is_zero() { 1 } else { 0 };
    Ok(img[i].div(&v[i])?.valuation())
}

/// Weak admissibility: `t_N(D) = t_H(D)` and `t_H(D') ≤ t_N(D')` for every
/// `φ`- and `N`-stable line `D'`.
pub fn weak_admissibility_check(d: &FilteredModule) -> Certificate {
    let name = "weak_admissibility";
    let total_n = d.phi.det().valuation();
    let total_h = Val::from_p_units(d.jump as i64);
    if total_n != total_h {
        return Certificate::from_bool(name, false, format!("t_N(D) = {total_n} but t_H(D) = {total_h}"));
    }
    let prime = &d.prime;
    let prec = d.fil_gen.iter().map(FieldElem::prec).min().unwrap_or(0);
    let one = FieldElem::one(prime, prec);
    let z = FieldElem::exact_zero(prime);
    let lines: Vec<[FieldElem; 2]> = if !d.n.is_zero() {
        // the only N-stable line is ker N, and Nφ = pφN makes it φ-stable
        let m = &d.n.0;
        let v = if m[0][0].is_zero() && m[1][0].is_zero() {
            [one.clone(), z.clone()]
        } else {
            [-&m[0][1], m[0][0].clone()]
        };
        let v = if v[0].is_zero() && v[1].is_zero() { [-&m[1][1], m[1][0].clone()] } else { v };
        vec![v]
    } else if d.phi.0[0][1].is_zero() && d.phi.0[1][0].is_zero() {
        if (&d.phi.0[0][0] - &d.phi.0[1][1]).is_zero() {
            // scalar φ: every line is stable, the filtration line is the worst
            vec![d.fil_gen.clone()]
        } else {
            vec![[one.clone(), z.clone()], [z, one]]
        }
    } else {
        return Certificate::new(name, Verdict::Unknown, "φ-stable lines of a non-diagonal φ are not enumerated");
    };
    let mut details = vec![format!("t_N(D) = t_H(D) = {total_h}")];
    for v in &lines {
        let tn = match t_n_line(d, v) {
            Ok(t) => t,
            Err(e) => return Certificate::new(name, Verdict::Unknown, e.to_string()),
        };
        let th = Val::from_p_units(t_h_line(d, v));
        details.push(format!("line ({}, {}): t_H = {th}, t_N = {tn}", v[0], v[1]));
        if th > tn {
            return Certificate::from_bool(name, false, details.join("; "));
        }
    }
    Certificate::from_bool(name, true, details.join("; "))
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREC: i64 = 60;

    fn setup(p: u64, k: u32, l: &str) -> (Arc<Prime>, FilteredModule) {
        let pr = Prime::new(p).unwrap();
        let lv = FieldElem::parse(&pr, l, PREC).unwrap();
        let d = make_d(&pr, k, Invariant::Finite(lv), PREC).unwrap();
        (pr, d)
    }

    #[test]
    fn e_basis_shape() {
        let (pr, d) = setup(5, 5, "p^-2");
        let w = |e| FieldElem::uniformizer_pow(&pr, e, PREC);
        assert!(d.phi.get(0, 0).eq_at_prec(&w(5)));
        assert!(d.phi.get(1, 1).eq_at_prec(&w(3)));
        assert!(d.n.mul(&d.n).is_zero());
        let dc = make_d(&pr, 5, Invariant::Infinity, PREC).unwrap();
        assert!(dc.n.is_zero());
        assert!(make_d(&pr, 2, Invariant::Infinity, PREC).is_err());
    }

    #[test]
    fn f_basis_phi_and_n() {
        for (p, k, l) in [(3, 4, "p^-2"), (5, 5, "1/7*p^-3"), (7, 8, "3 + p^-1"), (5, 3, "2*w^-3")] {
            let (pr, d) = setup(p, k, l);
            let h = k - 1;
            let df = to_f_basis(&d).unwrap();
            let w = |e: i64| FieldElem::uniformizer_pow(&pr, e, PREC);
            let want_phi =
                Mat2::new(a_p(&pr, h, PREC), -FieldElem::one(&pr, PREC), w(2 * h as i64), FieldElem::exact_zero(&pr));
            assert!(df.phi.eq_at_prec(&want_phi), "φ in f-basis for {p},{k},{l}");
            assert!(df.n.trace().is_zero());
            let lv = d.l.finite().unwrap();
            let closed = n_closed_form(&pr, h, lv, PREC).unwrap();
            assert!(df.n.eq_at_prec(&closed), "N in f-basis for {p},{k},{l}: {:?}", df.n);
            let b = FieldElem::one(&pr, PREC).div(&(w(h as i64 - 1) * lv.mul_int(1 - p as i64))).unwrap();
            assert!(df.n.get(0, 1).eq_at_prec(&-b));
            assert!(check_n_phi(&d).verdict.is_true());
            assert!(check_n_phi(&df).verdict.is_true());
        }
    }

    #[test]
    fn flipped_sign_variant_disagrees() {
        // the variant with +ϖ^{-h-1} in the corner is not N, not even up to sign
        let (pr, d) = setup(5, 5, "p^-3");
        let df = to_f_basis(&d).unwrap();
        let lv = d.l.finite().unwrap();
        let mut flipped = n_closed_form(&pr, 4, lv, PREC).unwrap();
        flipped.0[0][1] = -&flipped.0[0][1];
        assert!(!df.n.eq_at_prec(&flipped));
        let neg = flipped.scale(&FieldElem::from_int(&pr, -1, PREC));
        assert!(!df.n.eq_at_prec(&neg));
    }

    #[test]
    fn base_change_round_trip() {
        let (_, d) = setup(3, 6, "1/2*p^-4");
        let df = to_f_basis(&d).unwrap();
        let b = f_basis_change(&d).unwrap();
        let bi = b.inv().unwrap();
        assert!(b.mul(&df.phi).mul(&bi).eq_at_prec(&d.phi));
        assert!(b.mul(&df.n).mul(&bi).eq_at_prec(&d.n));
        assert_eq!(df.phi.det().valuation(), d.phi.det().valuation());
        assert_eq!(df.phi.det().valuation(), Val::from_p_units(5));
    }

    #[test]
    fn degenerate_invariants_rejected() {
        let (pr, _) = setup(3, 4, "1");
        let d0 = make_d(&pr, 4, Invariant::Finite(FieldElem::zero(&pr, PREC)), PREC).unwrap();
        assert!(matches!(to_f_basis(&d0), Err(Error::UnsupportedBasis(_))));
        let dc = make_d(&pr, 4, Invariant::Infinity, PREC).unwrap();
        assert!(matches!(to_f_basis(&dc), Err(Error::UnsupportedBasis(_))));
    }

    #[test]
    fn admissibility() {
        for k in 3..9 {
            let (pr, d) = setup(5, k, "p^-2");
            assert!(weak_admissibility_check(&d).verdict.is_true());
            assert_eq!(d.phi.det().valuation(), Val::from_p_units(k as i64 - 1));
            let dc = make_d(&pr, k, Invariant::Infinity, PREC).unwrap();
            assert!(weak_admissibility_check(&dc).verdict.is_true());
            // filtration on the ϖ^{k-2}-eigenline with N = 0
            let mut bad = dc.clone();
            bad.fil_gen = [FieldElem::exact_zero(&pr), FieldElem::one(&pr, PREC)];
            bad.basis = BasisTag::Custom;
            let c = weak_admissibility_check(&bad);
            assert_eq!(c.verdict, Verdict::False, "{}", c.detail);
        }
    }
}

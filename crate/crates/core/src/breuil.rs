//! The filtration recursion on the rank-2 Breuil module.
//!
//! Everything here is a polynomial in `E = u + p`, stored in the `E`-basis.
//! With `π = -p` we have `E(π) = 0`, so evaluation at `π` reads off the
//! constant coefficient and division by `E` is a shift.

use std::sync::Arc;

use serde::Serialize;

use crate::cert::Certificate;
use crate::error::{Error, Result};
use crate::padic::{vp_factorial, FieldElem, Prime};
use crate::series::{Ring, TruncSeries};
use crate::val::{Val, Verdict};

/// `Σ y_j E^j`.
#[derive(Clone, Debug)]
pub struct EPoly {
    prime: Arc<Prime>,
    coeffs: Vec<FieldElem>,
}

impl EPoly {
    pub fn zero(prime: &Arc<Prime>) -> EPoly {
        EPoly { prime: prime.clone(), coeffs: Vec::new() }
    }

    pub fn constant(c: FieldElem) -> EPoly {
        EPoly { prime: c.prime().clone(), coeffs: vec![c] }
    }

    /// `c·E^j`.
    pub fn monomial(c: FieldElem, j: usize) -> EPoly {
        let prime = c.prime().clone();
        let mut coeffs = vec![FieldElem::exact_zero(&prime); j];
        coeffs.push(c);
        EPoly { prime, coeffs }
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    /// Coefficient of `E^j`, exact zero past the end.
    pub fn coeff(&self, j: usize) -> FieldElem {
        self.coeffs.get(j).cloned().unwrap_or_else(|| FieldElem::exact_zero(&self.prime))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Value at `u = π`.
    pub fn eval_pi(&self) -> FieldElem {
        self.coeff(0)
    }

    pub fn add(&self, o: &EPoly) -> EPoly {
        let n = self.len().max(o.len());
        EPoly { prime: self.prime.clone(), coeffs: (0..n).map(|j| self.coeff(j) + o.coeff(j)).collect() }
    }

    pub fn sub(&self, o: &EPoly) -> EPoly {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> EPoly {
        EPoly { prime: self.prime.clone(), coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn scale(&self, s: &FieldElem) -> EPoly {
        EPoly { prime: self.prime.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn mul(&self, o: &EPoly) -> EPoly {
        if self.is_empty() || o.is_empty() {
            return EPoly::zero(&self.prime);
        }
        let mut coeffs = vec![FieldElem::exact_zero(&self.prime); self.len() + o.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] = &coeffs[i + j] + &(a * b);
            }
        }
        EPoly { prime: self.prime.clone(), coeffs }
    }

    /// Multiplication by `u = E - p`.
    pub fn mul_u(&self) -> EPoly {
        let p = self.prime.p() as i64;
        let shifted = EPoly { prime: self.prime.clone(), coeffs: self.shifted_up(1) };
        shifted.sub(&EPoly { prime: self.prime.clone(), coeffs: self.coeffs.iter().map(|c| c.mul_int(p)).collect() })
    }

    fn shifted_up(&self, k: usize) -> Vec<FieldElem> {
        let mut v = vec![FieldElem::exact_zero(&self.prime); k];
        v.extend(self.coeffs.iter().cloned());
        v
    }

    /// Division by `E`, which must be exact.
    pub fn div_e(&self) -> Result<EPoly> {
        let c0 = self.coeff(0);
        if !c0.is_zero() {
            return Err(Error::Internal(format!("division by E leaves remainder {c0:?}")));
        }
        Ok(EPoly { prime: self.prime.clone(), coeffs: self.coeffs.iter().skip(1).cloned().collect() })
    }

    /// Are the coefficients of `E^0, …, E^{k-1}` all indistinguishable from 0?
    pub fn divisible_by_e_pow(&self, k: usize) -> bool {
        (0..k).all(|j| self.coeff(j).is_zero())
    }

    /// `N = -u d/du`, using `-u·j E^{j-1} = -j E^j + p j E^{j-1}`.
    pub fn n_operator(&self) -> EPoly {
        let p = self.prime.p() as i64;
        let n = self.len();
        let coeffs = (0..n)
            .map(|j| {
                let here = self.coeff(j).mul_int(-(j as i64));
                let above = self.coeff(j + 1).mul_int(p * (j as i64 + 1));
                here + above
            })
            .collect();
        EPoly { prime: self.prime.clone(), coeffs }
    }

    /// Expansion in powers of `u`.
    pub fn to_series(&self, ring: &Ring) -> TruncSeries {
        let e = ring.e();
        let mut acc = ring.zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&e).add(&ring.constant(c.clone()));
        }
        acc
    }

    /// Value at `u = 0`, i.e. `E = p`.
    pub fn eval_u0(&self) -> FieldElem {
        let p = self.prime.p() as i64;
        let mut acc = FieldElem::exact_zero(&self.prime);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul_int(p) + c;
        }
        acc
    }

    /// Membership in `A_v = {Σ y_j E^j : v_p(y_j) + v_p(j!) + j ≥ v}`.
    pub fn in_a_v(&self, v: Val) -> Verdict {
        let p = self.prime.p();
        Verdict::all(self.coeffs.iter().enumerate().map(|(j, y)| {
            let shift = 2 * vp_factorial(j as u64, p) as i64 + 2 * j as i64;
            Verdict::ge(y.val_bound() + shift, y.val().is_some(), v)
        }))
    }
}

impl Serialize for EPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coeffs.serialize(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FiltrationData {
    pub h: u32,
    pub a: FieldElem,
    pub b: FieldElem,
    pub c: FieldElem,
    pub d: FieldElem,
    /// `x_1, …, x_{h-1}`.
    pub x: Vec<FieldElem>,
    /// `b_1, …, b_{h-1}`.
    #[serde(skip)]
    pub b_seq: Vec<EPoly>,
    /// `d_1, …, d_{h-1}`.
    #[serde(skip)]
    pub d_seq: Vec<EPoly>,
    /// `z_0 = 0, z_1, …, z_{h-1}`.
    #[serde(skip)]
    pub z_partial: Vec<EPoly>,
    pub z: EPoly,
}

impl FiltrationData {
    pub fn x_valuations(&self) -> Vec<Val> {
        self.x.iter().map(FieldElem::valuation).collect()
    }
}

/// Runs the recursion for `x_1, …, x_{h-1}` from the monodromy scalars.
pub fn filtration_recursion(
    h: u32,
    a: &FieldElem,
    b: &FieldElem,
    c: &FieldElem,
    d: &FieldElem,
) -> Result<FiltrationData> {
    if h < 2 {
        return Err(Error::InvalidParam(format!("h = {h} must be at least 2")));
    }
    let prime = a.prime().clone();
    let p = prime.p() as i64;
    let pi = |i: i64| FieldElem::from_int(&prime, -p * i, a.prec());
    let mut b_i = EPoly::constant(b.clone());
    let mut d_i = EPoly::constant(d.clone());
    let mut z_i = EPoly::zero(&prime);
    let mut xs = Vec::new();
    let (mut b_seq, mut d_seq, mut z_partial) = (Vec::new(), Vec::new(), vec![z_i.clone()]);
    for i in 1..h as usize {
        let x_i = b_i.eval_pi().div(&pi(i as i64))?;
        xs.push(x_i.clone());
        b_seq.push(b_i.clone());
        d_seq.push(d_i.clone());
        z_i = z_i.add(&EPoly::monomial(x_i.clone(), i));
        z_partial.push(z_i.clone());
        if i + 1 < h as usize {
            let d_next = d_i.add(&EPoly::monomial(c * &x_i, i));
            let first = EPoly::constant(a.clone()).sub(&z_i.scale(c)).sub(&d_i).scale(&x_i);
            let numer = b_i.sub(&EPoly::constant(x_i.mul_int(i as i64)).mul_u());
            b_i = first.add(&numer.div_e()?);
            d_i = d_next;
        }
    }
    Ok(FiltrationData {
        h,
        a: a.clone(),
        b: b.clone(),
        c: c.clone(),
        d: d.clone(),
        x: xs,
        b_seq,
        d_seq,
        z: z_i,
        z_partial,
    })
}

/// Brute-force check that `f̂₂ + z_{i-1} f̂₁` generates `Fil^i` together with
/// `E^i f̂₁`, for `1 ≤ i ≤ h`.
///
/// `N(f̂₂ + z f̂₁) = (b + N(z) + a z) f̂₁ + (d + c z) f̂₂`, and lying in
/// `S f̂₂^{(i-1)} + S E^{i-1} f̂₁` means `α - β z_{i-2}` is divisible by
/// `E^{i-1}`.
pub fn verify_filtration(data: &FiltrationData) -> Vec<Certificate> {
    let mut certs = Vec::new();
    let h = data.h as usize;
    let prime = data.a.prime().clone();
    let zero = EPoly::zero(&prime);
    for i in 1..=h {
        let z_prev = &data.z_partial[i - 1];
        let ev_ok = z_prev.eval_pi().is_zero();
        certs.push(Certificate::from_bool(format!("ev_pi_f2_{i}"), ev_ok, "ev_π(f̂₂^(i)) = f₂"));
        if i == 1 {
            certs.push(Certificate::from_bool("n_fil_1", true, "Fil⁰ condition is vacuous"));
            continue;
        }
        let alpha = EPoly::constant(data.b.clone()).add(&z_prev.n_operator()).add(&z_prev.scale(&data.a));
        let beta = EPoly::constant(data.d.clone()).add(&z_prev.scale(&data.c));
        let z_pp = if i >= 2 { &data.z_partial[i - 2] } else { &zero };
        let rem = alpha.sub(&beta.mul(z_pp));
        let ok = rem.divisible_by_e_pow(i - 1);
        certs.push(Certificate::from_bool(
            format!("n_fil_{i}"),
            ok,
            format!("N(f̂₂^({i})) ∈ S·f̂₂^({}) + S·E^{}·f̂₁", i - 1, i - 1),
        ));
    }
    certs
}

/// The coefficient bounds on `x_i`.
///
/// `integral_bound`: `v_p(x_i) + v_p(i!) + i ≥ v_p(b)` under `a - d`, `bc`
/// integral. `l_bound`: `v_p(x_j) ≥ v_p(𝓛⁻¹) - (h-1)/2 - v_p(j!) - j`,
/// meaningful when `v_p(𝓛⁻¹) ≥ -1`.
pub fn check_coeff_bounds(data: &FiltrationData, l_val: Option<Val>) -> Vec<Certificate> {
    let p = data.a.p();
    let mut certs = Vec::new();
    let amd = &data.a - &data.d;
    let bc = &data.b * &data.c;
    let hyp = Verdict::ge(amd.val_bound(), amd.val().is_some(), Val::ZERO).and(Verdict::ge(
        bc.val_bound(),
        bc.val().is_some(),
        Val::ZERO,
    ));
    certs.push(Certificate::new(
        "integral_bound_hypotheses",
        hyp,
        format!("v(a-d) ≥ {}, v(bc) ≥ {}", amd.val_bound(), bc.val_bound()),
    ));
    let vb = data.b.val_bound();
    for (idx, x) in data.x.iter().enumerate() {
        let i = idx as i64 + 1;
        let shift = 2 * vp_factorial(i as u64, p) as i64 + 2 * i;
        let lhs = x.val_bound() + shift;
        // an exact lower bound on the right-hand side is needed for False
        let v = if hyp.is_true() {
            Verdict::ge(lhs, x.val().is_some() && data.b.val().is_some(), vb)
        } else {
            Verdict::Unknown
        };
        certs.push(Certificate::new(
            format!("integral_bound_x{i}"),
            v,
            format!("v(x_{i}) + v(i!) + i = {lhs} vs v(b) = {vb}"),
        ));
    }
    if let Some(vl) = l_val {
        let inv = -vl;
        let applies = inv >= Val::from_p_units(-1);
        for (idx, x) in data.x.iter().enumerate() {
            let j = idx as i64 + 1;
            let rhs = inv - (data.h as i64 - 1) - 2 * vp_factorial(j as u64, p) as i64 - 2 * j;
            let v = if applies { Verdict::ge(x.val_bound(), x.val().is_some(), rhs) } else { Verdict::Unknown };
            certs.push(Certificate::new(format!("l_bound_x{j}"), v, format!("v(x_{j}) = {} vs {rhs}", x.val_bound())));
        }
    }
    certs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtmod::{make_d, monodromy_scalars, to_f_basis, Invariant};

    const PREC: i64 = 80;

    fn q(pr: &Arc<Prime>, s: &str) -> FieldElem {
        FieldElem::parse(pr, s, PREC).unwrap()
    }

    fn run(pr: &Arc<Prime>, h: u32, abcd: [&str; 4]) -> FiltrationData {
        let [a, b, c, d] = abcd.map(|s| q(pr, s));
        filtration_recursion(h, &a, &b, &c, &d).unwrap()
    }

    #[test]
    fn small_index_closed_forms() {
        let pr = Prime::new(5).unwrap();
        let data = run(&pr, 4, ["2/3", "7/11", "5", "-1/2"]);
        let (a, b, d) = (q(&pr, "2/3"), q(&pr, "7/11"), q(&pr, "-1/2"));
        let pi = q(&pr, "-5");
        assert!(data.x[0].eq_at_prec(&b.div(&pi).unwrap()));
        let one = q(&pr, "1");
        let x2 = (&b * &(&(&a - &d) - &one)).div(&(pi.pow(2).mul_int(2))).unwrap();
        assert!(data.x[1].eq_at_prec(&x2));
        let z2_0 = data.z_partial[2].eval_u0();
        let want = (&b * &(&(&a - &d) - &one.mul_int(3))).div(&q(&pr, "2")).unwrap();
        assert!(z2_0.eq_at_prec(&want));
    }

    #[test]
    fn x_times_i_pi_is_b_at_pi() {
        let pr = Prime::new(3).unwrap();
        let data = run(&pr, 7, ["1/5", "2", "3/7", "4"]);
        for (k, x) in data.x.iter().enumerate() {
            let i = k as i64 + 1;
            let lhs = x.mul_int(-3 * i);
            assert!(lhs.eq_at_prec(&data.b_seq[k].eval_pi()));
        }
    }

    #[test]
    fn filtration_membership_generic() {
        for (p, h) in [(3, 3), (5, 4), (7, 6), (3, 8)] {
            let pr = Prime::new(p).unwrap();
            let data = run(&pr, h, ["3/2", "-4/7", "2/9", "1/3"]);
            for c in verify_filtration(&data) {
                assert_eq!(c.verdict, Verdict::True, "{} for p={p} h={h}", c.name);
            }
        }
    }

    #[test]
    fn zero_b_gives_zero_x() {
        let pr = Prime::new(5).unwrap();
        let data = run(&pr, 5, ["1", "0", "1", "2"]);
        assert!(data.x.iter().all(FieldElem::is_zero));
        assert!(check_coeff_bounds(&data, None).iter().all(|c| c.verdict.is_true()));
    }

    #[test]
    fn bounds_on_f_basis_scalars() {
        let pr = Prime::new(5).unwrap();
        let l = q(&pr, "p^-3");
        let df = to_f_basis(&make_d(&pr, 5, Invariant::Finite(l.clone()), PREC).unwrap()).unwrap();
        let [a, b, c, d] = monodromy_scalars(&df).unwrap();
        let data = filtration_recursion(4, &a, &b, &c, &d).unwrap();
        assert_eq!(data.x[0].valuation(), Val::new(1));
        let certs = check_coeff_bounds(&data, Some(l.valuation()));
        let l1 = certs.iter().find(|c| c.name == "l_bound_x1").unwrap();
        assert!(l1.verdict.is_true(), "{}", l1.detail);
        assert!(l1.detail.contains("vs 1/2"));
        for c in &certs {
            assert!(c.verdict.is_true(), "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn p3_h3_constant_term() {
        // z(0) = -(1/(4𝓛))(1/𝓛 + 1) for p = h = 3
        let pr = Prime::new(3).unwrap();
        for ls in ["1/2*p^-1", "p^-2", "5*w^-3"] {
            let l = q(&pr, ls);
            let df = to_f_basis(&make_d(&pr, 4, Invariant::Finite(l.clone()), PREC).unwrap()).unwrap();
            let [a, b, c, d] = monodromy_scalars(&df).unwrap();
            let data = filtration_recursion(3, &a, &b, &c, &d).unwrap();
            let one = q(&pr, "1");
            let want = -(&one.div(&l).unwrap() + &one).div(&l.mul_int(4)).unwrap();
            assert!(data.z.eval_u0().eq_at_prec(&want), "{ls}");
        }
    }

    #[test]
    fn a_v_membership() {
        let pr = Prime::new(3).unwrap();
        // E³ has v(1) + v(3!) + 3 = 4
        let e3 = EPoly::monomial(q(&pr, "1"), 3);
        assert_eq!(e3.in_a_v(Val::from_p_units(4)), Verdict::True);
        assert_eq!(e3.in_a_v(Val::new(9)), Verdict::False);
        let prod = e3.mul(&EPoly::monomial(q(&pr, "1/3"), 1));
        assert_eq!(prod.in_a_v(Val::from_p_units(4)), Verdict::True);
    }

    #[test]
    fn e_poly_to_series() {
        let pr = Prime::new(3).unwrap();
        let ring = Ring::new(pr.clone(), 10, PREC);
        let e2 = EPoly::monomial(q(&pr, "1"), 2);
        assert!(e2.to_series(&ring).eq_at_prec(&ring.e().pow(2)));
        let n = e2.n_operator().to_series(&ring);
        assert!(n.eq_at_prec(&ring.e().pow(2).n_operator()));
        assert!(e2.eval_u0().eq_at_prec(&q(&pr, "9")));
    }
}

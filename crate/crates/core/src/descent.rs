//! Normalization of `A` to `(G, -1; E^h, 0)` and descent to an integral
//! polynomial matrix `(P, -1; E^h, 0)`.
//!
//! The descent solves `C·A = T·φ(C)` with `T = (P, -1; E^h, 0)` and
//! `C = (x, y; -E^h φ(y), φ(x) + G φ(y))`, which reduces to
//!
//! ```text
//! G x - φ(E)^h φ²(y) = P φ(x) - E^h y
//! x = φ²(x) + φ(G) φ²(y) - P φ(y)
//! ```
//!
//! Writing `y = -u q φ(x)`, the first line says `P` is the remainder of
//! `(G x - φ(E)^h φ²(y))/φ(x)` on division by `u E^h`, and `q` the quotient.
//! The pair is iterated to a fixed point starting from `x = 1`, `y = 0`;
//! the result is then checked directly, so nothing rests on convergence
//! claims.

use serde::Serialize;

use crate::cert::Certificate;
use crate::error::{Error, Result};
use crate::kisin::{zero_through_window, AEntries, PhiMat};
use crate::padic::FieldElem;
use crate::series::{Ring, TruncSeries};
use crate::val::{Val, Verdict};

/// Estimates on `z` and `ν = -1 + φ(z)(a_p - p^h z)`.
///
/// `shift` raises every threshold (by 2 under the weaker bound on `𝓛`).
/// For `p = h = 3` the sharper `φ(z) ∈ H°_{-1}`, `ν ∈ -1 + H°_1` are added.
pub fn z_estimates(ring: &Ring, h: u32, z: &TruncSeries, nu: &TruncSeries, shift: i64) -> Vec<Certificate> {
    let hi = h as i64;
    let ph = ring.w_pow(2 * hi);
    let pz = z.scale(&ph);
    let phiz = z.frobenius();
    let nu1 = nu.add(&ring.one());
    let v = |s: &TruncSeries| s.vlow().raw();
    let mut certs = vec![
        Certificate::new(
            "z_a_phz",
            pz.in_h_open(Val::new(hi - 1 + shift)),
            format!("v(p^h z) ≥ {} > {}", v(&pz), hi - 1 + shift),
        ),
        Certificate::new(
            "z_b_phiz",
            phiz.in_h_open(Val::new(-2 + shift)),
            format!("v(φ(z)) ≥ {} > {}", v(&phiz), -2 + shift),
        ),
        Certificate::new(
            "z_c_nu",
            nu1.in_h_open(Val::new(hi - 3 + shift)),
            format!("v(ν + 1) ≥ {} > {}", v(&nu1), hi - 3 + shift),
        ),
    ];
    let unit = match nu.invert_unit() {
        Ok(inv) => zero_through_window(&inv.mul(nu).sub(&ring.one())),
        Err(_) => Verdict::False,
    };
    certs.push(Certificate::new("z_d_nu_unit", unit, "ν invertible in R_2"));
    if ring.p() == 3 && h == 3 && shift == 0 {
        certs.push(Certificate::new(
            "z_p3h3_phiz",
            phiz.in_h_open(Val::new(-1)),
            format!("v(φ(z)) ≥ {} > -1", v(&phiz)),
        ));
        certs.push(Certificate::new("z_p3h3_nu", nu1.in_h_open(Val::new(1)), format!("v(ν + 1) ≥ {} > 1", v(&nu1))));
    }
    certs
}

/// `z(0)` for `p = h = 3` in closed form, `-(1/(4𝓛))(1/𝓛 + 1)`, together with
/// the variant with `2𝓛` in the denominator; the two differ by a unit.
pub fn p3h3_z0_certificate(z0: &FieldElem, l: &FieldElem) -> Result<Certificate> {
    let one = FieldElem::one(l.prime(), l.prec());
    let inner = &one.div(l)? + &one;
    let derived = -inner.div(&l.mul_int(4))?;
    let variant = -inner.div(&l.mul_int(2))?;
    let ok = z0.eq_at_prec(&derived) && z0.valuation() == variant.valuation();
    Ok(Certificate::from_bool("z0_p3h3_closed_form", ok, format!("z(0) = {z0}, v(z(0)) = {}", z0.valuation())))
}

#[derive(Clone, Debug, Serialize)]
pub struct Normalized {
    pub g: TruncSeries,
    #[serde(skip)]
    pub c: PhiMat,
    pub certs: Vec<Certificate>,
}

/// Two base changes taking `(μ, ν; E^h, η)` with `det = E^h` to
/// `(G, -1; E^h, 0)`:
/// first `(1, 0; -η/ν, 1)`, then `diag(-(1/ν(0)) ν₋/ν₊, ν₊/ν₋)` with
/// `ν₀ = ν/ν(0)`, `ν₊ = Π φ^{2n}(ν₀)`, `ν₋ = φ(ν₊)`, `ν₊₊ = φ(ν₋)`.
pub fn normalize_to_g(ring: &Ring, h: u32, a: &AEntries) -> Result<Normalized> {
    let nu_inv =
        a.nu.invert_unit()
            .map_err(|e| Error::OutOfRange(format!("ν is not a certified unit of R_2 ({e}); needs h ≥ 3")))?;
    let phi_eta = a.eta.frobenius();
    let phi_nu_inv = a.nu.frobenius().invert_unit()?;
    let top = a.mu.add(&a.nu.mul(&phi_eta).mul(&phi_nu_inv));
    let c1 = PhiMat::new(ring.one(), ring.zero(), a.eta.mul(&nu_inv).neg(), ring.one());

    let nu00 = a.nu.coeff(0).clone();
    let nu00_inv = nu00.inv()?;
    let mut nu0 = a.nu.scale(&nu00_inv);
    nu0.set_coeff(0, FieldElem::one(&ring.prime, nu0.coeff(0).prec()));
    let nu_plus = nu0.frobenius_product(0, 2)?;
    let nu_minus = nu_plus.frobenius();
    let nu_pp = nu_minus.frobenius();
    let nu_plus_inv = nu_plus.invert_unit()?;
    let nu_minus_inv = nu_minus.invert_unit()?;
    let nu_pp_inv = nu_pp.invert_unit()?;
    let d = PhiMat::diag(nu_minus.mul(&nu_plus_inv).scale(&(-&nu00_inv)), nu_plus.mul(&nu_minus_inv));
    let g = top.mul(&nu_minus).mul(&nu_minus).mul(&nu_plus_inv).mul(&nu_pp_inv);
    let c = d.mul(&c1);

    let mut certs = Vec::new();
    let det = a.matrix().det().sub(&a.eh);
    certs.push(Certificate::new("normalize_det_is_e_h", zero_through_window(&det), "det A = E^h"));
    let conj = c.star_conj(&a.matrix())?;
    let target = PhiMat::new(g.clone(), ring.one().neg(), a.eh.clone(), ring.zero());
    let shape = Verdict::all(
        (0..2)
            .flat_map(|r| (0..2).map(move |s| (r, s)))
            .map(|(r, s)| zero_through_window(&conj.get(r, s).sub(target.get(r, s)))),
    );
    certs.push(Certificate::new("normalize_shape", shape, "C ∗_φ A = (G, -1; E^h, 0) through the window"));
    let gm = g.sub(&a.mu);
    certs.push(Certificate::new(
        "g_minus_mu",
        gm.in_h_open(Val::new(h as i64)),
        format!("v(G - μ) ≥ {} > {h}", gm.vlow().raw()),
    ));
    Ok(Normalized { g, c, certs })
}

/// `G ∈ H_{h-1}`, `T_{>h}(G) ∈ H°_{h-1}`, `T_{≤h}(G) ∈ m_F[u]`.
pub fn check_g_hypotheses(g: &TruncSeries, h: u32) -> Vec<Certificate> {
    let hi = h as i64;
    let gt = g.truncate_gt(h as usize);
    let (integral, detail) = integrality(g, h);
    vec![
        Certificate::new("g_a", g.in_h(Val::new(hi - 1)), format!("v(G) ≥ {} ≥ {}", g.vlow().raw(), hi - 1)),
        Certificate::new(
            "g_b",
            gt.in_h_open(Val::new(hi - 1)),
            format!("v(T_>h(G)) ≥ {} > {}", gt.vlow().raw(), hi - 1),
        ),
        Certificate::new("g_c", integral, detail),
    ]
}

/// Every coefficient of `T_{≤h}(f)` in `m_F`.
fn integrality(f: &TruncSeries, h: u32) -> (Verdict, String) {
    let mut verdict = Verdict::True;
    let mut worst = None;
    for i in 0..=h as usize {
        let c = f.coeff(i);
        let v = Verdict::gt(c.val_bound(), c.val().is_some(), Val::ZERO);
        if v != Verdict::True && worst.is_none() {
            worst = Some(format!("coefficient of u^{i} has valuation {}", c.val_bound()));
        }
        verdict = verdict.and(v);
    }
    (verdict, worst.unwrap_or_else(|| "all coefficients have positive valuation".into()))
}

/// Division by `u E^h = u^{h+1}(1 + …)`: returns `(q, P)` with
/// `w = u E^h q + P + r`, `deg P ≤ h`, and the bound on `v(r)`.
fn divide_u_e_h(
    ring: &Ring,
    w: &TruncSeries,
    h: u32,
    goal: Val,
    uhe_low: &TruncSeries,
) -> (TruncSeries, TruncSeries, Val) {
    let hu = h as usize;
    let mut q = ring.zero();
    let mut p = ring.zero();
    let mut r = w.clone();
    let mut last = Val::NEG_INF;
    loop {
        p = p.add(&r.truncate_le(hu));
        let qk = r.truncate_gt(hu).shift_down(hu + 1);
        q = q.add(&qk);
        r = uhe_low.mul(&qk).neg();
        let v = r.vlow();
        if v >= goal || v <= last {
            return (q, p, v);
        }
        last = v;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DescentResult {
    /// Coefficients of `P`, degree `≤ h`.
    pub p_coeffs: Vec<FieldElem>,
    pub p_valuations: Vec<Val>,
    pub rounds: usize,
    /// `v_{R_2}` of the change in `(x, y, P)` per round.
    pub history: Vec<i64>,
    /// Certified lower bound on `v_{R_2}(C ∗_φ A - T)`.
    pub residual: i64,
    pub threshold: i64,
    pub certs: Vec<Certificate>,
    #[serde(skip)]
    pub c: PhiMat,
    #[serde(skip)]
    pub p: TruncSeries,
}

/// The residual threshold: entries of `C ∗_φ A - (P, -1; E^h, 0)` must have
/// `v_{R_2} > 2h + 2`.
pub fn residual_threshold(h: u32) -> i64 {
    2 * h as i64 + 2
}

/// Descends `(G, -1; E^h, 0)` to `(P, -1; E^h, 0)`.
pub fn descend(ring: &Ring, g: &TruncSeries, h: u32, budget: usize) -> Result<DescentResult> {
    let hu = h as usize;
    let tau = residual_threshold(h);
    let goal = Val::new(tau + 4);
    let u = ring.u();
    let eh = ring.e().pow(h);
    let phi_eh = eh.frobenius();
    let uhe_low = u.mul(&eh).sub(&ring.monomial(ring.elem(1), hu + 1));
    let phi_g = g.frobenius();

    let mut xi = ring.zero();
    let mut y = ring.zero();
    let mut p = ring.zero();
    let mut history = Vec::new();
    let mut stall = 0;
    let mut rounds = 0;
    while rounds < budget {
        rounds += 1;
        let x = ring.one().add(&xi);
        let phx = x.frobenius();
        let phx_inv = phx.invert_unit()?;
        let s = g.mul(&x).sub(&phi_eh.mul(&y.frobenius_pow(2)));
        let w = s.mul(&phx_inv);
        let (q, p_new, _) = divide_u_e_h(ring, &w, h, goal, &uhe_low);
        let y_new = u.mul(&q).mul(&phx).neg();
        let xi_new = xi.frobenius_pow(2).add(&phi_g.mul(&y_new.frobenius_pow(2))).sub(&p_new.mul(&y_new.frobenius()));
        let delta = y_new.sub(&y).vlow().min(xi_new.sub(&xi).vlow()).min(p_new.sub(&p).vlow());
        history.push(delta.raw());
        y = y_new;
        xi = xi_new;
        p = p_new;
        if delta >= goal {
            break;
        }
        let improved = history.len() < 2 || delta.raw() > history[history.len() - 2];
        stall = if improved { 0 } else { stall + 1 };
        if stall >= 3 {
            break;
        }
    }

    let x = ring.one().add(&xi);
    let c = PhiMat::new(x.clone(), y.clone(), eh.mul(&y.frobenius()).neg(), x.frobenius().add(&g.mul(&y.frobenius())));
    let a = PhiMat::new(g.clone(), ring.one().neg(), eh.clone(), ring.zero());
    let target = PhiMat::new(p.clone(), ring.one().neg(), eh.clone(), ring.zero());
    let diff = c.star_conj(&a)?.sub(&target);
    let residual = diff.v_r2().0;
    let mut certs = Vec::new();

    let c0_ok = Verdict::all((0..2).flat_map(|r| (0..2).map(move |s| (r, s))).map(|(r, s)| {
        let want = if r == s { FieldElem::one(&ring.prime, ring.prec) } else { FieldElem::exact_zero(&ring.prime) };
        let c0 = c.get(r, s).coeff(0);
        if !(c0 - &want).is_zero() {
            Verdict::False
        } else if c0.prec() < 2 {
            Verdict::Unknown
        } else {
            Verdict::True
        }
    }));
    certs.push(Certificate::new("descent_c0_identity", c0_ok, "C(0) = I"));
    certs.push(Certificate::new(
        "descent_residual",
        Verdict::gt(residual, false, Val::new(tau)),
        format!("v(C ∗_φ A - (P, -1; E^h, 0)) ≥ {} > {tau}", residual.raw()),
    ));
    let bl = diff.get(1, 0).vlow();
    certs.push(Certificate::new(
        "descent_bottom_left_e_h",
        Verdict::gt(bl, false, Val::new(tau)),
        format!("v(bottom-left - E^h) ≥ {}", bl.raw()),
    ));
    let deg_ok = p.coeffs().iter().skip(hu + 1).all(FieldElem::is_exact_zero) && p.tail() == Val::INF;
    certs.push(Certificate::from_bool("descent_deg_p", deg_ok, format!("deg P ≤ {h}")));
    let (integral, detail) = integrality(&p, h);
    certs.push(Certificate::new("descent_p_integral", integral, detail));
    let pg = p.sub(&g.truncate_le(hu));
    certs.push(Certificate::new(
        "descent_p_near_g",
        pg.in_h_open(Val::new(h as i64)),
        format!("v(P - T_≤h(G)) ≥ {} > {h}", pg.vlow().raw()),
    ));
    let monotone = history.windows(2).take_while(|w| w[0] < tau).all(|w| w[1] > w[0] || w[1] >= tau);
    certs.push(Certificate::from_bool("descent_progress", monotone, format!("change per round {:?}", history)));

    let p_coeffs: Vec<FieldElem> = p.coeffs()[..=hu].to_vec();
    Ok(DescentResult {
        p_valuations: p_coeffs.iter().map(FieldElem::valuation).collect(),
        p_coeffs,
        rounds,
        history,
        residual: residual.raw(),
        threshold: tau,
        certs,
        c,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kisin::{build_a, lambdas};
    use crate::padic::Prime;

    #[test]
    fn polynomial_g_is_a_fixed_point() {
        let ring = Ring::new(Prime::new(5).unwrap(), 50, 80);
        let h = 4;
        let g =
            TruncSeries::from_poly(&ring.prime, 50, vec![ring.w_pow(3), ring.w_pow(1), ring.elem(0), ring.w_pow(2)]);
        let d = descend(&ring, &g, h, 100).unwrap();
        assert!(d.p.eq_at_prec(&g));
        assert!(d.c.get(0, 1).coeffs().iter().all(FieldElem::is_zero));
        for c in &d.certs {
            assert_eq!(c.verdict, Verdict::True, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn crystalline_descent() {
        for (p, h, n) in [(5u64, 5u32, 60usize), (3, 3, 60), (7, 4, 98)] {
            let ring = Ring::new(Prime::new(p).unwrap(), n, 80);
            let l = lambdas(&ring).unwrap();
            let a = build_a(&ring, h, &ring.zero(), &l).unwrap();
            let norm = normalize_to_g(&ring, h, &a).unwrap();
            for c in &norm.certs {
                assert_eq!(c.verdict, Verdict::True, "{}: {}", c.name, c.detail);
            }
            for c in check_g_hypotheses(&norm.g, h) {
                assert_eq!(c.verdict, Verdict::True, "({p},{h}) {}: {}", c.name, c.detail);
            }
            let d = descend(&ring, &norm.g, h, 2 * n).unwrap();
            for c in &d.certs {
                assert_eq!(c.verdict, Verdict::True, "({p},{h}) {}: {}", c.name, c.detail);
            }
        }
    }

    fn z_for(ring: &Ring, k: u32, l: &str) -> TruncSeries {
        use crate::breuil::filtration_recursion;
        use crate::filtmod::{make_d, monodromy_scalars, to_f_basis, Invariant};
        let lv = FieldElem::parse(&ring.prime, l, ring.prec).unwrap();
        let df = to_f_basis(&make_d(&ring.prime, k, Invariant::Finite(lv), ring.prec).unwrap()).unwrap();
        let [a, b, c, d] = monodromy_scalars(&df).unwrap();
        filtration_recursion(k - 1, &a, &b, &c, &d).unwrap().z.to_series(ring)
    }

    #[test]
    fn semistable_instances() {
        for (p, k, l, n) in
            [(5u64, 6u32, "p^-3", 60usize), (3, 6, "p^-3", 45), (3, 4, "p^-1", 45), (7, 9, "2*p^-4", 98)]
        {
            let ring = Ring::new(Prime::new(p).unwrap(), n, 80);
            let h = k - 1;
            let z = z_for(&ring, k, l);
            let lam = lambdas(&ring).unwrap();
            let a = build_a(&ring, h, &z, &lam).unwrap();
            for c in z_estimates(&ring, h, &z, &a.nu, 0) {
                assert_eq!(c.verdict, Verdict::True, "({p},{k},{l}) {}: {}", c.name, c.detail);
            }
            let norm = normalize_to_g(&ring, h, &a).unwrap();
            for c in norm.certs.iter().cloned().chain(check_g_hypotheses(&norm.g, h)) {
                assert_eq!(c.verdict, Verdict::True, "({p},{k},{l}) {}: {}", c.name, c.detail);
            }
            let d = descend(&ring, &norm.g, h, 2 * n).unwrap();
            for c in &d.certs {
                assert_eq!(c.verdict, Verdict::True, "({p},{k},{l}) {}: {}", c.name, c.detail);
            }
            assert_eq!(d.p_coeffs.len(), h as usize + 1);
            if p == 3 && k == 4 {
                let lv = FieldElem::parse(&ring.prime, l, ring.prec).unwrap();
                let c = p3h3_z0_certificate(z.coeff(0), &lv).unwrap();
                assert_eq!(c.verdict, Verdict::True, "{}", c.detail);
            }
        }
    }
}

//! Frobenius matrices of Kisin modules over `R_2`.

use serde::Serialize;

use crate::cert::Certificate;
use crate::error::Result;
use crate::filtmod::a_p;
use crate::series::{Ring, TruncSeries};
use crate::val::{Val, Verdict};

/// A 2×2 matrix of series, row-major, acted on semilinearly by `φ`.
#[derive(Clone, Debug, Serialize)]
pub struct PhiMat(pub [[TruncSeries; 2]; 2]);

impl PhiMat {
    pub fn new(a: TruncSeries, b: TruncSeries, c: TruncSeries, d: TruncSeries) -> PhiMat {
        PhiMat([[a, b], [c, d]])
    }

    pub fn diag(a: TruncSeries, d: TruncSeries) -> PhiMat {
        let z = TruncSeries::zero(a.prime(), a.trunc_deg());
        PhiMat::new(a, z.clone(), z, d)
    }

    pub fn identity(ring: &Ring) -> PhiMat {
        PhiMat::diag(ring.one(), ring.one())
    }

    pub fn get(&self, r: usize, c: usize) -> &TruncSeries {
        &self.0[r][c]
    }

    fn map2(&self, o: &PhiMat, f: impl Fn(&TruncSeries, &TruncSeries) -> TruncSeries) -> PhiMat {
        let e = |r: usize, c: usize| f(&self.0[r][c], &o.0[r][c]);
        PhiMat::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn add(&self, o: &PhiMat) -> PhiMat {
        self.map2(o, TruncSeries::add)
    }

    pub fn sub(&self, o: &PhiMat) -> PhiMat {
        self.map2(o, TruncSeries::sub)
    }

    pub fn mul(&self, o: &PhiMat) -> PhiMat {
        let e = |r: usize, c: usize| self.0[r][0].mul(&o.0[0][c]).add(&self.0[r][1].mul(&o.0[1][c]));
        PhiMat::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn frobenius(&self) -> PhiMat {
        let e = |r: usize, c: usize| self.0[r][c].frobenius();
        PhiMat::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn det(&self) -> TruncSeries {
        self.0[0][0].mul(&self.0[1][1]).sub(&self.0[0][1].mul(&self.0[1][0]))
    }

    pub fn inv(&self) -> Result<PhiMat> {
        let di = self.det().invert_unit()?;
        let m = &self.0;
        Ok(PhiMat::new(m[1][1].mul(&di), m[0][1].neg().mul(&di), m[1][0].neg().mul(&di), m[0][0].mul(&di)))
    }

    /// `C ∗_φ A = C·A·φ(C)^{-1}`, with `self = C`.
    pub fn star_conj(&self, a: &PhiMat) -> Result<PhiMat> {
        Ok(self.mul(a).mul(&self.frobenius().inv()?))
    }

    /// Smallest certified `v_{R_2}` among the entries.
    pub fn v_r2(&self) -> (Val, bool) {
        self.0.iter().flatten().map(TruncSeries::v_r2).min_by_key(|(v, _)| *v).unwrap()
    }

    pub fn min_prec(&self) -> i64 {
        self.0.iter().flatten().map(TruncSeries::min_prec).min().unwrap()
    }
}

/// Is `f` zero in every retained degree? `Unknown` when the coefficients
/// carry less than one `p`-digit of precision.
pub fn zero_through_window(f: &TruncSeries) -> Verdict {
    if f.coeffs().iter().any(|c| !c.is_zero()) {
        Verdict::False
    } else if f.min_prec() < 2 {
        Verdict::Unknown
    } else {
        Verdict::True
    }
}

fn identity_cert(name: &str, lhs: &TruncSeries, rhs: &TruncSeries) -> Certificate {
    let d = lhs.sub(rhs);
    let v = zero_through_window(&d);
    let bad = d.coeffs().iter().position(|c| !c.is_zero());
    let detail = match bad {
        Some(i) => format!("mismatch at u^{i}: {}", d.coeff(i)),
        None if d.coeffs().iter().all(|c| c.is_exact_zero()) => format!("exactly equal through u^{}", d.trunc_deg()),
        None => format!("equal through u^{} (coefficient precision ≥ {})", d.trunc_deg(), Val::new(d.min_prec())),
    };
    Certificate::new(name, v, detail)
}

/// `λ₋`, `λ₊₊` and their inverses.
#[derive(Clone, Debug)]
pub struct Lambdas {
    pub minus: TruncSeries,
    pub plus_plus: TruncSeries,
    pub minus_inv: TruncSeries,
    pub plus_plus_inv: TruncSeries,
}

pub fn lambdas(ring: &Ring) -> Result<Lambdas> {
    let (minus, plus_plus) = ring.lambda_products()?;
    let minus_inv = minus.invert_unit()?;
    let plus_plus_inv = plus_plus.invert_unit()?;
    Ok(Lambdas { minus, plus_plus, minus_inv, plus_plus_inv })
}

/// `λ₋ ∈ 1 + H_{p-2}`, `λ₊₊ ∈ 1 + H_{p²-2}`, both units of valuation 0.
pub fn lambda_certificates(ring: &Ring, l: &Lambdas) -> Vec<Certificate> {
    let p = ring.p() as i64;
    let one = ring.one();
    let m1 = l.minus.sub(&one);
    let pp1 = l.plus_plus.sub(&one);
    let mut certs = vec![
        Certificate::new("lambda_minus_near_one", m1.in_h(Val::new(p - 2)), format!("v(λ₋ - 1) ≥ {}", m1.vlow().raw())),
        Certificate::new(
            "lambda_plus_plus_near_one",
            pp1.in_h(Val::new(p * p - 2)),
            format!("v(λ₊₊ - 1) ≥ {}", pp1.vlow().raw()),
        ),
    ];
    let unit_ok = Verdict::all([
        zero_through_window(&l.minus.mul(&l.minus_inv).sub(&one)),
        zero_through_window(&l.plus_plus.mul(&l.plus_plus_inv).sub(&one)),
    ]);
    certs.push(Certificate::new("lambda_units", unit_ok, "λ·λ⁻¹ = 1 through the window"));
    let val0 = |f: &TruncSeries| {
        let (v, exact) = f.v_r2();
        Verdict::from_bool(exact && v == Val::ZERO).and(if exact { Verdict::True } else { Verdict::Unknown })
    };
    let vs = Verdict::all([val0(&l.minus), val0(&l.minus_inv), val0(&l.plus_plus), val0(&l.plus_plus_inv)]);
    certs.push(Certificate::new("lambda_valuation_zero", vs, "v(λ₋^±1) = v(λ₊₊^±1) = 0"));
    certs
}

/// The scalar pieces shared by the builders.
struct Parts {
    ap: TruncSeries,
    ph: TruncSeries,
    eh: TruncSeries,
    c_inv_h: TruncSeries,
    p_minus_h: TruncSeries,
}

fn parts(ring: &Ring, h: u32) -> Result<Parts> {
    let hi = h as i64;
    Ok(Parts {
        ap: ring.constant(a_p(&ring.prime, h, ring.prec)),
        ph: ring.constant(ring.w_pow(2 * hi)),
        eh: ring.e().pow(h),
        c_inv_h: ring.frak_c().invert_unit()?.pow(h),
        p_minus_h: ring.constant(ring.w_pow(-2 * hi)),
    })
}

/// `A' = (a_p - p^h z, p^{-h}𝔠^{-h}(-1 + φ(z)(a_p - p^h z)); E^h p^h, 𝔠^{-h} E^h φ(z))`.
pub fn build_a_prime(ring: &Ring, h: u32, z: &TruncSeries) -> Result<PhiMat> {
    let pt = parts(ring, h)?;
    let top = pt.ap.sub(&pt.ph.mul(z));
    let phiz = z.frobenius();
    let nu = ring.one().neg().add(&phiz.mul(&top));
    let b = pt.p_minus_h.mul(&pt.c_inv_h).mul(&nu);
    let c = pt.eh.mul(&pt.ph);
    let d = pt.c_inv_h.mul(&pt.eh).mul(&phiz);
    Ok(PhiMat::new(top, b, c, d))
}

/// `A' = E^h B^{-1} X φ(B) p^{-h} 𝔠^{-h}` with `B = (E^h, z; 0, 1)`,
/// `X = (a_p, -1; p^h, 0)`, and `E^h B^{-1}` the adjugate of `B`.
pub fn build_a_prime_recipe(ring: &Ring, h: u32, z: &TruncSeries) -> Result<PhiMat> {
    let pt = parts(ring, h)?;
    let adj_b = PhiMat::new(ring.one(), z.neg(), ring.zero(), pt.eh.clone());
    let x = PhiMat::new(pt.ap.clone(), ring.one().neg(), pt.ph.clone(), ring.zero());
    let b = PhiMat::new(pt.eh.clone(), z.clone(), ring.zero(), ring.one());
    let m = adj_b.mul(&x).mul(&b.frobenius());
    let s = pt.p_minus_h.mul(&pt.c_inv_h);
    let e = |r: usize, c: usize| m.get(r, c).mul(&s);
    Ok(PhiMat::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1)))
}

/// `diag(p^h λ₋^h, λ₊₊^h)`.
pub fn lambda_conjugator(ring: &Ring, h: u32, l: &Lambdas) -> PhiMat {
    let ph = ring.w_pow(2 * h as i64);
    PhiMat::diag(l.minus.pow(h).scale(&ph), l.plus_plus.pow(h))
}

/// The normalized entries `(μ, ν; E^h, η)` of `A`.
#[derive(Clone, Debug, Serialize)]
pub struct AEntries {
    pub mu: TruncSeries,
    pub nu: TruncSeries,
    pub eh: TruncSeries,
    pub eta: TruncSeries,
}

impl AEntries {
    pub fn matrix(&self) -> PhiMat {
        PhiMat::new(self.mu.clone(), self.nu.clone(), self.eh.clone(), self.eta.clone())
    }
}

/// `A = ((a_p - p^h z)(λ₋/λ₊₊)^h, -1 + φ(z)(a_p - p^h z); E^h, E^h φ(z)(λ₊₊/λ₋)^h)`.
pub fn build_a(ring: &Ring, h: u32, z: &TruncSeries, l: &Lambdas) -> Result<AEntries> {
    let pt = parts(ring, h)?;
    let top = pt.ap.sub(&pt.ph.mul(z));
    let phiz = z.frobenius();
    let ratio = l.minus.mul(&l.plus_plus_inv).pow(h);
    let ratio_inv = l.plus_plus.mul(&l.minus_inv).pow(h);
    Ok(AEntries {
        mu: top.mul(&ratio),
        nu: ring.one().neg().add(&phiz.mul(&top)),
        eta: pt.eh.mul(&phiz).mul(&ratio_inv),
        eh: pt.eh,
    })
}

/// The crystalline matrix `diag(1, E^h)·X₀·diag(1, 𝔠^{-h})` with
/// `X₀ = (a_p, -1; 1, 0)`.
pub fn crystalline_a(ring: &Ring, h: u32) -> Result<PhiMat> {
    let pt = parts(ring, h)?;
    let lam = PhiMat::diag(ring.one(), pt.eh.clone());
    let x0 = PhiMat::new(pt.ap, ring.one().neg(), ring.one(), ring.zero());
    let cd = PhiMat::diag(ring.one(), pt.c_inv_h);
    Ok(lam.mul(&x0).mul(&cd))
}

/// `diag(λ₋^h, λ₊₊^h)`, which takes the crystalline matrix to
/// `(a_p(λ₋/λ₊₊)^h, -1; E^h, 0)`.
pub fn crystalline_conjugator(h: u32, l: &Lambdas) -> PhiMat {
    PhiMat::diag(l.minus.pow(h), l.plus_plus.pow(h))
}

/// Determinant and two-route certificates for `A'` and `A`.
pub fn matrix_certificates(ring: &Ring, h: u32, z: &TruncSeries, l: &Lambdas) -> Result<Vec<Certificate>> {
    let mut certs = Vec::new();
    let pt = parts(ring, h)?;
    let a1 = build_a_prime(ring, h, z)?;
    let a1r = build_a_prime_recipe(ring, h, z)?;
    for r in 0..2 {
        for c in 0..2 {
            certs.push(identity_cert(&format!("a_prime_recipe_{r}{c}"), a1.get(r, c), a1r.get(r, c)));
        }
    }
    certs.push(identity_cert("det_a_prime", &a1.det(), &pt.eh.mul(&pt.c_inv_h)));
    let a = build_a(ring, h, z, l)?.matrix();
    let conj = lambda_conjugator(ring, h, l).star_conj(&a1)?;
    for r in 0..2 {
        for c in 0..2 {
            certs.push(identity_cert(&format!("a_conjugation_{r}{c}"), a.get(r, c), conj.get(r, c)));
        }
    }
    certs.push(identity_cert("det_a", &a.det(), &pt.eh));
    Ok(certs)
}

/// `det(cryst) = 𝔠^{-h} E^h`, and the conjugated form is
/// `(a_p(λ₋/λ₊₊)^h, -1; E^h, 0)`.
pub fn crystalline_certificates(ring: &Ring, h: u32, l: &Lambdas) -> Result<(PhiMat, Vec<Certificate>)> {
    let pt = parts(ring, h)?;
    let a = crystalline_a(ring, h)?;
    let mut certs = vec![identity_cert("crystalline_det", &a.det(), &pt.eh.mul(&pt.c_inv_h))];
    let conj = crystalline_conjugator(h, l).star_conj(&a)?;
    let zero = ring.zero();
    let shaped = build_a(ring, h, &zero, l)?;
    let want = PhiMat::new(shaped.mu, ring.one().neg(), pt.eh, ring.zero());
    for r in 0..2 {
        for c in 0..2 {
            certs.push(identity_cert(&format!("crystalline_shape_{r}{c}"), conj.get(r, c), want.get(r, c)));
        }
    }
    Ok((want, certs))
}

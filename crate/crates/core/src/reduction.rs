//! Reduction of `(P, -1; E^h, 0)` modulo `m_F` and the resulting label.

use serde::Serialize;

use crate::cert::Certificate;
use crate::error::Result;
use crate::padic::{vp_factorial, FieldElem};
use crate::val::Val;

/// A 2×2 matrix over `F_p[[u]]` whose entries are polynomials, stored as
/// coefficient lists (lowest degree first) of residues in `0..p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResidueMatrix {
    pub p: u64,
    pub entries: [[Vec<u64>; 2]; 2],
}

impl ResidueMatrix {
    /// `(0, -1; u^h, 0)`.
    pub fn standard(p: u64, h: u32) -> ResidueMatrix {
        let mut uh = vec![0; h as usize + 1];
        uh[h as usize] = 1;
        ResidueMatrix { p, entries: [[vec![], vec![p - 1]], [uh, vec![]]] }
    }

    fn trim(mut v: Vec<u64>) -> Vec<u64> {
        while v.last() == Some(&0) {
            v.pop();
        }
        v
    }

    /// `diag(a, b) · M · diag(a, b)^{-1}`; Frobenius fixes constants in `F_p`.
    pub fn conjugate_diag(&self, a: u64, b: u64) -> ResidueMatrix {
        let p = self.p;
        let inv = |x: u64| pow_mod(x, p - 2, p);
        let s = [a % p, b % p];
        let mut entries = self.entries.clone();
        for (r, row) in entries.iter_mut().enumerate() {
            for (c, e) in row.iter_mut().enumerate() {
                let f = s[r] * inv(s[c]) % p;
                *e = Self::trim(e.iter().map(|x| x * f % p).collect());
            }
        }
        ResidueMatrix { p, entries }
    }

    /// Degree of the bottom-left entry if it is a monomial.
    fn bottom_left_degree(&self) -> Option<usize> {
        let e = &self.entries[1][0];
        let nz: Vec<usize> = e.iter().enumerate().filter(|(_, &x)| x != 0).map(|(i, _)| i).collect();
        (nz.len() == 1).then(|| nz[0])
    }

    /// Entries with residues shown in `(-p/2, p/2)`.
    pub fn to_text(&self) -> String {
        let p = self.p;
        let sym = |c: u64| if c > p / 2 { format!("-{}", p - c) } else { c.to_string() };
        let show = |v: &Vec<u64>| {
            if v.is_empty() {
                return "0".to_string();
            }
            v.iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(i, &c)| match (i, c) {
                    (0, _) => sym(c),
                    (1, 1) => "u".to_string(),
                    (_, 1) => format!("u^{i}"),
                    (1, _) => format!("{}*u", sym(c)),
                    _ => format!("{}*u^{i}", sym(c)),
                })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        format!(
            "({}, {}; {}, {})",
            show(&self.entries[0][0]),
            show(&self.entries[0][1]),
            show(&self.entries[1][0]),
            show(&self.entries[1][1])
        )
    }
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// Reduces `(P, -1; E^h, 0)`; `E ≡ u`. Fails if a coefficient of `P` is not integral.
pub fn reduce_mod_p(p: u64, h: u32, p_coeffs: &[FieldElem]) -> Result<ResidueMatrix> {
    let top = p_coeffs.iter().map(FieldElem::residue).collect::<Result<Vec<u64>>>()?;
    let mut m = ResidueMatrix::standard(p, h);
    m.entries[0][0] = ResidueMatrix::trim(top);
    Ok(m)
}

/// The label of a residue matrix. Anything other than the companion shape
/// is echoed back unrecognized.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Classification {
    Induced {
        /// `Ind(ω₂^h · χ)`.
        label: String,
        /// Exponents of `ω₂` on inertia, mod `p² - 1`.
        weights: (u64, u64),
        /// `det = ω^e` up to unramified twist, `e = h mod (p - 1)`.
        det_exponent: u64,
        irreducible: bool,
    },
    Unrecognized {
        matrix: String,
    },
}

impl Classification {
    pub fn label(&self) -> &str {
        match self {
            Classification::Induced { label, .. } => label,
            Classification::Unrecognized { .. } => "unrecognized",
        }
    }
}

/// Label of a residue matrix of the form `(0, -c; c' u^h, 0)`: `φ²` then
/// scales `e₁` by `u^{h(p+1)}` times a unit.
pub fn classify(m: &ResidueMatrix) -> Classification {
    let p = m.p;
    let zero_diag = m.entries[0][0].is_empty() && m.entries[1][1].is_empty();
    let unit_tr = m.entries[0][1].len() == 1 && m.entries[0][1][0] != 0;
    let h = match (zero_diag, unit_tr, m.bottom_left_degree()) {
        (true, true, Some(h)) => h as u64,
        _ => return Classification::Unrecognized { matrix: m.to_text() },
    };
    let q = p * p - 1;
    Classification::Induced {
        label: format!("Ind(ω₂^{h} · χ)"),
        weights: (h % q, (p * h) % q),
        det_exponent: h % (p - 1),
        irreducible: h % (p + 1) != 0,
    }
}

/// Which bound on `𝓛` is being used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Strong,
    Weak,
}

/// Lower bound on `-v(𝓛)` (ϖ-units, strict) for the given kind.
pub fn bound_threshold(p: u64, h: u32, kind: BoundKind) -> i64 {
    let base = h as i64 - 1 + 2 * vp_factorial(h as u64 - 1, p) as i64;
    match kind {
        BoundKind::Strong => base - 2,
        BoundKind::Weak => base,
    }
}

/// Whether `v(𝓛)` satisfies the bound; `v(𝓛)` in ϖ-units.
pub fn theorem_bound(p: u64, h: u32, l_val: Val, kind: BoundKind) -> bool {
    match l_val.finite() {
        Some(v) => -v > bound_threshold(p, h, kind),
        None => false,
    }
}

/// The strong bound written via `k`, `2 - k/2 - v_p((k-2)!)`, agrees with the
/// one written via `h` (both doubled to ϖ-units).
pub fn bound_identity(p: u64, k: u32) -> Certificate {
    let h = k - 1;
    let via_k = 4 - k as i64 - 2 * vp_factorial(k as u64 - 2, p) as i64;
    let via_h = -bound_threshold(p, h, BoundKind::Strong);
    Certificate::from_bool(
        "bound_identity",
        via_k == via_h,
        format!("2·(2 - k/2 - v_p((k-2)!)) = {via_k}, -(h-1) + 2 - 2v_p((h-1)!) = {via_h}"),
    )
}

//! Single runs and sweeps of the whole pipeline, with precision escalation
//! and a versioned report.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::breuil::{check_coeff_bounds, filtration_recursion, verify_filtration};
use crate::cert::Certificate;
use crate::descent::{check_g_hypotheses, descend, normalize_to_g, p3h3_z0_certificate, z_estimates, DescentResult};
use crate::error::{Error, Result};
use crate::filtmod::{
    check_n_phi, make_d, monodromy_scalars, n_closed_form, to_f_basis, weak_admissibility_check, Invariant,
};
use crate::kisin::{build_a, crystalline_certificates, lambda_certificates, lambdas, matrix_certificates};
use crate::padic::{FieldElem, Prime};
use crate::reduction::{
    bound_identity, bound_threshold, classify, reduce_mod_p, BoundKind, Classification, ResidueMatrix,
};
use crate::series::{Ring, TruncSeries};
use crate::val::{Val, Verdict};

pub const SCHEMA: u32 = 1;
/// Retries after the first attempt, each doubling `N_u` and adding
/// `10 + ⌈N_u/p⌉` to `M`.
pub const MAX_ESCALATIONS: u32 = 2;

/// How `𝓛` was given.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LSpec {
    Literal(String),
    /// `v_p(𝓛)` only; run with `ϖ^{2v}`.
    Valuation(Ratio<i64>),
    Infinity,
}

impl LSpec {
    pub fn parse_valuation(s: &str) -> Result<LSpec> {
        let s = s.trim();
        let r = match s.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| Error::Parse(format!("bad valuation `{s}`")))?;
                let d: i64 = d.trim().parse().map_err(|_| Error::Parse(format!("bad valuation `{s}`")))?;
                if d == 0 {
                    return Err(Error::Parse(format!("bad valuation `{s}`")));
                }
                Ratio::new(n, d)
            }
            None => Ratio::from_integer(s.parse().map_err(|_| Error::Parse(format!("bad valuation `{s}`")))?),
        };
        if (r * 2).denom() != &1 {
            return Err(Error::InvalidParam(format!("v(𝓛) = {r} is not in (1/2)Z")));
        }
        Ok(LSpec::Valuation(r))
    }

    pub fn parse_literal(s: &str) -> LSpec {
        match s.trim() {
            "inf" | "infinity" | "∞" => LSpec::Infinity,
            t => LSpec::Literal(t.to_string()),
        }
    }

    /// The literal actually run.
    fn literal(&self) -> Option<String> {
        match self {
            LSpec::Literal(s) => Some(s.clone()),
            LSpec::Valuation(r) => Some(format!("w^{}", (r * 2).to_integer())),
            LSpec::Infinity => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub p: u64,
    pub k: u32,
    pub l: LSpec,
    /// Working precision `M` in `p`-units.
    pub prec: Option<i64>,
    /// Truncation degree `N_u`.
    pub deg_u: Option<usize>,
    pub weak_bound: bool,
}

impl RunConfig {
    pub fn new(p: u64, k: u32, l: LSpec) -> RunConfig {
        RunConfig { p, k, l, prec: None, deg_u: None, weak_bound: false }
    }
}

/// The largest of `2h + 2⌈|v_p(𝓛)|⌉ + 10`; `5h + 6`, which covers the loss
/// to the denominators of `z` when `|v(𝓛)|` is small; and `p²/2 + 2`, so that
/// unknown digits of constant terms do not hide `λ₊₊ ∈ 1 + H_{p²-2}`.
pub fn default_prec(p: u64, h: u32, l_val: Val) -> i64 {
    let v = l_val.finite().map_or(0, |n| n.abs());
    let h = h as i64;
    (2 * h + 2 * ((v + 1) / 2) + 10).max(5 * h + 6).max((p * p) as i64 / 2 + 2)
}

/// `N_u ≥ max(p², 2ph, 30)`.
pub fn default_deg_u(p: u64, h: u32) -> usize {
    (p * p).max(2 * p * h as u64).max(30) as usize
}

#[derive(Clone, Debug, Serialize)]
pub struct LEcho {
    pub source: &'static str,
    pub literal: Option<String>,
    pub valuation: Val,
    /// Intermediate values depend on the representative chosen for `𝓛`.
    pub representative_dependent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub p: u64,
    pub k: u32,
    pub h: u32,
    pub l: LEcho,
    pub prec: i64,
    pub deg_u: usize,
    pub weak_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    /// `v_p(𝓛⁻¹)` must exceed this.
    pub threshold: Val,
    pub l_inverse_valuation: Val,
    pub holds: bool,
    /// Whether the run's conclusions are asserted rather than only reported.
    pub asserted_scope: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertEntry {
    pub name: String,
    pub status: &'static str,
    pub asserted: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub name: &'static str,
    pub certificates: Vec<CertEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GSummary {
    /// `v_{R_2}` lower bound, integer scale (`i + 2v_p(a_i)`).
    pub v_r2: i64,
    /// Valuations of the coefficients of `T_{≤h}(G)`.
    pub low_valuations: Vec<Val>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DescentSummary {
    pub p_coeffs: Vec<String>,
    pub p_valuations: Vec<Val>,
    pub rounds: usize,
    pub history: Vec<i64>,
    pub residual: i64,
    pub threshold: i64,
}

impl From<&DescentResult> for DescentSummary {
    fn from(d: &DescentResult) -> Self {
        DescentSummary {
            p_coeffs: d.p_coeffs.iter().map(FieldElem::to_literal).collect(),
            p_valuations: d.p_valuations.clone(),
            rounds: d.rounds,
            history: d.history.clone(),
            residual: d.residual,
            threshold: d.threshold,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionSummary {
    pub matrix: String,
    pub classification: Classification,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PathSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<GSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descent: Option<DescentSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Escalation {
    pub prec: i64,
    pub deg_u: usize,
    /// Asserted certificates left unknown at this precision.
    pub unknown: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub config: ConfigEcho,
    pub bound: BoundReport,
    pub verdict: Verdict,
    pub exit_code: i32,
    pub escalations: Vec<Escalation>,
    pub x_valuations: Vec<Val>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z0: Option<String>,
    pub semistable: PathSummary,
    pub crystalline: PathSummary,
    pub stages: Vec<Stage>,
    pub timings_ms: BTreeMap<String, u128>,
}

impl RunReport {
    pub fn certificates(&self) -> impl Iterator<Item = &CertEntry> {
        self.stages.iter().flat_map(|s| s.certificates.iter())
    }

    pub fn certificate(&self, name: &str) -> Option<&CertEntry> {
        self.certificates().find(|c| c.name == name)
    }

    pub fn label(&self) -> Option<&str> {
        self.semistable.reduction.as_ref().map(|r| r.classification.label())
    }
}

struct StageBuilder {
    name: &'static str,
    certs: Vec<Certificate>,
    error: Option<Error>,
}

impl StageBuilder {
    fn new(name: &'static str) -> Self {
        StageBuilder { name, certs: Vec::new(), error: None }
    }

    fn push(&mut self, c: Certificate, asserted: bool) {
        self.certs.push(if asserted { c } else { c.advisory() });
    }

    fn extend(&mut self, cs: impl IntoIterator<Item = Certificate>, asserted: bool) {
        for c in cs {
            self.push(c, asserted);
        }
    }

    /// Records a stage failure as a certificate: unknown if more precision
    /// could help, false otherwise.
    fn fail(&mut self, e: Error, asserted: bool) {
        let v = match e {
            Error::PrecisionLoss { .. } | Error::NoConvergence { .. } => Verdict::Unknown,
            _ => Verdict::False,
        };
        self.push(Certificate::new(format!("{}_completed", self.name), v, e.to_string()), asserted);
        self.error = Some(e);
    }
}

struct Attempt {
    stages: Vec<StageBuilder>,
    x_valuations: Vec<Val>,
    z0: Option<String>,
    semistable: PathSummary,
    crystalline: PathSummary,
    timings: BTreeMap<String, u128>,
}

struct Ctx {
    prime: Arc<Prime>,
    h: u32,
    l: Option<FieldElem>,
    l_val: Val,
    weak: bool,
    bound: bool,
    asserted: bool,
}

fn timed<T>(timings: &mut BTreeMap<String, u128>, name: &str, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let r = f();
    *timings.entry(name.to_string()).or_default() += t.elapsed().as_millis();
    r
}

fn g_summary(g: &TruncSeries, h: u32) -> GSummary {
    GSummary {
        v_r2: g.vlow().raw(),
        low_valuations: g.coeffs()[..=h as usize].iter().map(FieldElem::valuation).collect(),
    }
}

/// Normalized `G` through descent and reduction; shared by both paths.
fn finish_path(ring: &Ring, h: u32, g: &TruncSeries, asserted: bool, stage: &mut StageBuilder, out: &mut PathSummary) {
    let ghyp = check_g_hypotheses(g, h);
    let hyp_ok = Verdict::all(ghyp.iter().map(|c| c.verdict));
    out.g = Some(g_summary(g, h));
    stage.extend(ghyp, asserted);
    if asserted && hyp_ok != Verdict::True {
        stage.push(
            Certificate::new("descent_preconditions", hyp_ok, "refusing to descend without certified hypotheses on G"),
            true,
        );
        return;
    }
    let d = match descend(ring, g, h, 2 * ring.n) {
        Ok(d) => d,
        Err(e) => return stage.fail(e, asserted),
    };
    out.descent = Some(DescentSummary::from(&d));
    let integral = d.certs.iter().find(|c| c.name == "descent_p_integral").map(|c| c.verdict);
    stage.extend(d.certs.iter().cloned(), asserted);
    if integral != Some(Verdict::True) {
        stage.push(
            Certificate::new("reduction_refused", integral.unwrap_or(Verdict::Unknown), "P is not certified integral"),
            asserted,
        );
        return;
    }
    match reduce_mod_p(ring.p(), h, &d.p_coeffs) {
        Ok(m) => {
            let standard = m == ResidueMatrix::standard(ring.p(), h);
            stage.push(Certificate::from_bool("reduction_standard_form", standard, m.to_text()), asserted);
            let classification = classify(&m);
            let induced = matches!(classification, Classification::Induced { .. });
            stage
                .push(Certificate::from_bool("reduction_label", induced, classification.label().to_string()), asserted);
            out.reduction = Some(ReductionSummary { matrix: m.to_text(), classification });
        }
        Err(e) => stage.fail(e, asserted),
    }
}

fn semistable_path(ctx: &Ctx, ring: &Ring, k: u32, l: &FieldElem, att: &mut Attempt) {
    let h = ctx.h;
    let prime = &ctx.prime;
    let t = &mut att.timings;

    let mut fm = StageBuilder::new("filtered_module");
    let df = timed(t, "filtered_module", || -> Result<_> {
        let d = make_d(prime, k, Invariant::Finite(l.clone()), ring.prec)?;
        fm.push(check_n_phi(&d), true);
        fm.push(weak_admissibility_check(&d), true);
        let df = to_f_basis(&d)?;
        let mut c = check_n_phi(&df);
        c.name = "n_phi_relation_f_basis".into();
        fm.push(c, true);
        let closed = n_closed_form(prime, h, l, ring.prec)?;
        fm.push(Certificate::from_bool("n_closed_form", closed.eq_at_prec(&df.n), "N in the f-basis"), true);
        Ok(df)
    });
    let df = match df {
        Ok(df) => df,
        Err(e) => {
            fm.fail(e, true);
            att.stages.push(fm);
            return;
        }
    };
    att.stages.push(fm);

    let mut br = StageBuilder::new("breuil");
    let data = timed(t, "breuil", || -> Result<_> {
        let [a, b, c, d] = monodromy_scalars(&df)?;
        let data = filtration_recursion(h, &a, &b, &c, &d)?;
        br.extend(verify_filtration(&data), true);
        let l_inv_ok = -ctx.l_val >= Val::from_p_units(-1);
        let bounds = check_coeff_bounds(&data, Some(ctx.l_val));
        let hyp = bounds.iter().any(|c| c.name == "integral_bound_hypotheses" && c.verdict.is_true());
        for c in bounds {
            let asserted = if c.name == "integral_bound_hypotheses" {
                false
            } else if c.name.starts_with("integral_bound") {
                hyp
            } else {
                l_inv_ok
            };
            br.push(c, asserted);
        }
        if ring.p() == 3 && h == 3 {
            br.push(p3h3_z0_certificate(&data.z.eval_u0(), l)?, true);
        }
        Ok(data)
    });
    let data = match data {
        Ok(d) => d,
        Err(e) => {
            br.fail(e, true);
            att.stages.push(br);
            return;
        }
    };
    att.x_valuations = data.x_valuations();
    att.z0 = Some(data.z.eval_u0().to_literal());
    att.stages.push(br);

    let mut ki = StageBuilder::new("kisin");
    let built = timed(t, "kisin", || -> Result<_> {
        let z = data.z.to_series(ring);
        let lam = lambdas(ring)?;
        ki.extend(lambda_certificates(ring, &lam), true);
        ki.extend(matrix_certificates(ring, h, &z, &lam)?, true);
        let a = build_a(ring, h, &z, &lam)?;
        Ok((z, a))
    });
    let (z, a) = match built {
        Ok(x) => x,
        Err(e) => {
            ki.fail(e, true);
            att.stages.push(ki);
            return;
        }
    };
    att.stages.push(ki);

    let mut es = StageBuilder::new("estimates");
    let shift = if ctx.weak { 2 } else { 0 };
    let norm = timed(t, "estimates", || {
        es.extend(z_estimates(ring, h, &z, &a.nu, shift), ctx.asserted);
        normalize_to_g(ring, h, &a)
    });
    let norm = match norm {
        Ok(n) => n,
        Err(e) => {
            es.fail(e, ctx.asserted);
            att.stages.push(es);
            return;
        }
    };
    for c in norm.certs {
        // inverting ν is only controlled inside the theorem's range
        let asserted = c.name == "normalize_det_is_e_h" || ctx.asserted;
        es.push(c, asserted);
    }
    att.stages.push(es);

    let mut ds = StageBuilder::new("descent");
    timed(t, "descent", || finish_path(ring, h, &norm.g, ctx.asserted, &mut ds, &mut att.semistable));
    att.stages.push(ds);
}

fn crystalline_path(ctx: &Ctx, ring: &Ring, att: &mut Attempt) {
    let h = ctx.h;
    let mut cs = StageBuilder::new("crystalline");
    let t = &mut att.timings;
    timed(t, "crystalline", || {
        let res = lambdas(ring).and_then(|lam| crystalline_certificates(ring, h, &lam));
        match res {
            Ok((a, certs)) => {
                cs.extend(certs, true);
                finish_path(ring, h, a.get(0, 0), true, &mut cs, &mut att.crystalline);
            }
            Err(e) => cs.fail(e, true),
        }
    });
    if let (Some(s), Some(c)) = (&att.semistable.reduction, &att.crystalline.reduction) {
        cs.push(
            Certificate::from_bool(
                "labels_agree",
                s.classification == c.classification,
                format!("{} vs {}", s.classification.label(), c.classification.label()),
            ),
            ctx.asserted,
        );
    }
    att.stages.push(cs);
}

fn attempt(cfg: &RunConfig, ctx: &Ctx, prec: i64, deg_u: usize) -> Attempt {
    let ring = Ring::new(ctx.prime.clone(), deg_u, 2 * prec);
    let mut att = Attempt {
        stages: Vec::new(),
        x_valuations: Vec::new(),
        z0: None,
        semistable: PathSummary::default(),
        crystalline: PathSummary::default(),
        timings: BTreeMap::new(),
    };
    let mut bs = StageBuilder::new("bound");
    bs.push(bound_identity(ctx.prime.p(), cfg.k), true);
    let kind = if ctx.weak { BoundKind::Weak } else { BoundKind::Strong };
    bs.push(
        Certificate::from_bool(
            "theorem_bound",
            ctx.bound,
            format!(
                "v_p(𝓛⁻¹) = {} vs {} bound {}",
                -ctx.l_val,
                kind_name(kind),
                Val::new(bound_threshold(ctx.prime.p(), ctx.h, kind))
            ),
        ),
        false,
    );
    att.stages.push(bs);
    if let Some(l) = &ctx.l {
        let l = l.with_prec(ring.prec);
        semistable_path(ctx, &ring, cfg.k, &l, &mut att);
    }
    crystalline_path(ctx, &ring, &mut att);
    att
}

fn kind_name(k: BoundKind) -> &'static str {
    match k {
        BoundKind::Strong => "strong",
        BoundKind::Weak => "weak",
    }
}

fn asserted_unknowns(stages: &[StageBuilder]) -> Vec<String> {
    stages
        .iter()
        .flat_map(|s| s.certs.iter())
        .filter(|c| c.asserted && c.verdict == Verdict::Unknown)
        .map(|c| c.name.clone())
        .collect()
}

/// Runs one instance. Errors are only returned for configurations outside
/// the supported range; everything else lands in the report.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport> {
    if cfg.p == 2 {
        return Err(Error::OutOfRange("p = 2 is not supported".into()));
    }
    let prime = Prime::new(cfg.p)?;
    if cfg.k < 3 {
        return Err(Error::OutOfRange(format!("k = {} must be at least 3", cfg.k)));
    }
    let h = cfg.k - 1;
    if cfg.p == 3 && h == 2 && !cfg.weak_bound {
        return Err(Error::OutOfRange("p = 3 needs h ≥ 3 under the strong bound; pass --weak-bound".into()));
    }
    let l = match cfg.l.literal() {
        Some(s) => {
            let l = FieldElem::parse(&prime, &s, 1 << 20)?;
            if l.is_zero() {
                return Err(Error::OutOfRange("𝓛 = 0 is not supported".into()));
            }
            Some(l)
        }
        None => None,
    };
    let l_val = l.as_ref().map_or(Val::INF, FieldElem::valuation);
    let kind = if cfg.weak_bound { BoundKind::Weak } else { BoundKind::Strong };
    let threshold = bound_threshold(cfg.p, h, kind);
    let bound = match l_val.finite() {
        Some(v) => -v > threshold,
        None => true,
    };
    let scope = bound && (h >= 4 || (cfg.p == 3 && h == 3) || cfg.weak_bound);
    let ctx = Ctx { prime: prime.clone(), h, l: l.clone(), l_val, weak: cfg.weak_bound, bound, asserted: scope };

    let mut prec = cfg.prec.unwrap_or_else(|| default_prec(cfg.p, h, l_val));
    let mut deg_u = cfg.deg_u.unwrap_or_else(|| default_deg_u(cfg.p, h));
    let mut escalations = Vec::new();
    let mut timings: BTreeMap<String, u128> = BTreeMap::new();
    let att = loop {
        let att = attempt(cfg, &ctx, prec, deg_u);
        for (k, v) in &att.timings {
            *timings.entry(k.clone()).or_default() += v;
        }
        let unknown = asserted_unknowns(&att.stages);
        if unknown.is_empty() || escalations.len() as u32 >= MAX_ESCALATIONS {
            break att;
        }
        escalations.push(Escalation { prec, deg_u, unknown });
        // coefficients of the λ products lose about 2/p digits per degree
        prec += 10 + (deg_u as i64 + cfg.p as i64 - 1) / cfg.p as i64;
        deg_u *= 2;
    };

    let all: Vec<&Certificate> = att.stages.iter().flat_map(|s| s.certs.iter()).collect();
    let verdict = Verdict::all(all.iter().filter(|c| c.asserted).map(|c| c.verdict));
    let exit_code = match verdict {
        Verdict::True => 0,
        Verdict::False => 1,
        Verdict::Unknown => 3,
    };
    let stages = att
        .stages
        .into_iter()
        .map(|s| Stage {
            name: s.name,
            certificates: s
                .certs
                .into_iter()
                .map(|c| CertEntry {
                    status: match c.verdict {
                        Verdict::True => "true",
                        Verdict::False => "false",
                        Verdict::Unknown => "unknown-final",
                    },
                    name: c.name,
                    asserted: c.asserted,
                    detail: c.detail,
                })
                .collect(),
            error: s.error.map(|e| e.to_string()),
        })
        .collect();
    let (source, literal) = match &cfg.l {
        LSpec::Literal(s) => ("literal", Some(s.clone())),
        LSpec::Valuation(_) => ("valuation", cfg.l.literal()),
        LSpec::Infinity => ("infinity", None),
    };
    Ok(RunReport {
        schema: SCHEMA,
        config: ConfigEcho {
            p: cfg.p,
            k: cfg.k,
            h,
            l: LEcho {
                source,
                literal,
                valuation: l_val,
                representative_dependent: matches!(cfg.l, LSpec::Valuation(_)),
            },
            prec,
            deg_u,
            weak_bound: cfg.weak_bound,
        },
        bound: BoundReport {
            kind,
            threshold: Val::new(threshold),
            l_inverse_valuation: -l_val,
            holds: bound,
            asserted_scope: scope,
        },
        verdict,
        exit_code,
        escalations,
        x_valuations: att.x_valuations,
        z0: att.z0,
        semistable: att.semistable,
        crystalline: att.crystalline,
        stages,
        timings_ms: timings,
    })
}

/// A grid `p ∈ ps`, `k ∈ ks`, `v_p(𝓛) ∈ vs`, written `p=3,5;k=4..8;v=-4..-1`.
/// Items are integers, inclusive ranges `a..b` with optional step `a..b:s`,
/// and for `v` also halves like `-3/2`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepSpec {
    pub ps: Vec<u64>,
    pub ks: Vec<u32>,
    pub vs: Vec<Ratio<i64>>,
}

fn parse_int_items(s: &str) -> Result<Vec<i64>> {
    let bad = || Error::Parse(format!("bad sweep item list `{s}`"));
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((a, rest)) = item.split_once("..") {
            let (b, step) = match rest.split_once(':') {
                Some((b, st)) => (b, st.trim().parse::<i64>().map_err(|_| bad())?),
                None => (rest, 1),
            };
            let a: i64 = a.trim().parse().map_err(|_| bad())?;
            let b: i64 = b.trim().parse().map_err(|_| bad())?;
            if step <= 0 {
                return Err(bad());
            }
            out.extend((a..=b).step_by(step as usize));
        } else {
            out.push(item.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

impl SweepSpec {
    pub fn parse(s: &str) -> Result<SweepSpec> {
        let mut spec = SweepSpec::default();
        for part in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, val) =
                part.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=values in `{part}`")))?;
            match key.trim() {
                "p" => {
                    for v in parse_int_items(val)? {
                        spec.ps.push(u64::try_from(v).map_err(|_| Error::Parse(format!("bad prime {v}")))?);
                    }
                }
                "k" => {
                    for v in parse_int_items(val)? {
                        spec.ks.push(u32::try_from(v).map_err(|_| Error::Parse(format!("bad weight {v}")))?);
                    }
                }
                "v" => {
                    for item in val.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                        if item.contains('/') {
                            match LSpec::parse_valuation(item)? {
                                LSpec::Valuation(r) => spec.vs.push(r),
                                _ => unreachable!(),
                            }
                        } else {
                            spec.vs.extend(parse_int_items(item)?.into_iter().map(Ratio::from_integer));
                        }
                    }
                }
                other => return Err(Error::Parse(format!("unknown sweep key `{other}`"))),
            }
        }
        Ok(spec)
    }

    pub fn cells(&self) -> Vec<(u64, u32, Ratio<i64>)> {
        let mut out = Vec::new();
        for &p in &self.ps {
            for &k in &self.ks {
                for &v in &self.vs {
                    out.push((p, k, v));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepCell {
    pub p: u64,
    pub k: u32,
    pub v: String,
    pub exit_code: i32,
    pub bound: Option<bool>,
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<RunReport>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SweepSummary {
    pub cells: usize,
    pub bound_satisfied: usize,
    pub certified: usize,
    pub failures: usize,
    pub unknown: usize,
    pub out_of_range: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub schema: u32,
    pub summary: SweepSummary,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    /// 1 if any cell failed, else 3 if any stayed unknown, else 0.
    /// Out-of-range cells are recorded but do not count.
    pub fn exit_code(&self) -> i32 {
        if self.summary.failures > 0 {
            1
        } else if self.summary.unknown > 0 {
            3
        } else {
            0
        }
    }
}

/// Runs every cell of the grid in parallel; `base` supplies `prec`, `deg_u`
/// and the bound flag.
pub fn sweep(spec: &SweepSpec, base: &RunConfig) -> SweepReport {
    let cells: Vec<SweepCell> = spec
        .cells()
        .into_par_iter()
        .map(|(p, k, v)| {
            let cfg = RunConfig { p, k, l: LSpec::Valuation(v), ..base.clone() };
            match run_pipeline(&cfg) {
                Ok(r) => SweepCell {
                    p,
                    k,
                    v: v.to_string(),
                    exit_code: r.exit_code,
                    bound: Some(r.bound.holds),
                    label: r.label().map(str::to_string),
                    error: None,
                    report: Some(r),
                },
                Err(e) => SweepCell {
                    p,
                    k,
                    v: v.to_string(),
                    exit_code: 2,
                    bound: None,
                    label: None,
                    error: Some(e.to_string()),
                    report: None,
                },
            }
        })
        .collect();
    let mut summary = SweepSummary { cells: cells.len(), ..Default::default() };
    for c in &cells {
        summary.bound_satisfied += usize::from(c.bound == Some(true));
        match c.exit_code {
            0 => summary.certified += 1,
            1 => summary.failures += 1,
            2 => summary.out_of_range += 1,
            _ => summary.unknown += 1,
        }
    }
    SweepReport { schema: SCHEMA, summary, cells }
}

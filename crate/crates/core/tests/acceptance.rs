//! One PASS/FAIL line per acceptance criterion.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use ssred_core::breuil::{check_coeff_bounds, filtration_recursion, verify_filtration, FiltrationData};
use ssred_core::filtmod::{make_d, monodromy_scalars, to_f_basis, Invariant};
use ssred_core::pipeline::{run_pipeline, sweep, LSpec, RunConfig, RunReport, SweepSpec};
use ssred_core::reduction::{bound_identity, theorem_bound, BoundKind, Classification, ResidueMatrix};
use ssred_core::{FieldElem, Prime, Val};

/// Recursion oracle grid must finish within this.
const RECURSION_BUDGET: Duration = Duration::from_secs(10);
/// Per-instance wall time at default `N_u`, `M`.
const INSTANCE_BUDGET: Duration = Duration::from_secs(60);
/// Minimum size of the recursion grid.
const MIN_GRID: usize = 50;
const PREC: i64 = 120;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

struct Instance {
    data: FiltrationData,
    /// `v(𝓛)` for instances built from `D_{k,𝓛}`.
    l_val: Option<Val>,
}

fn recursion_grid() -> Vec<Instance> {
    let rational = [["2/3", "7/11", "5", "-1/2"], ["1", "3/5", "-2/7", "4"], ["-3", "1/2", "9/4", "1/3"]];
    let ls = ["p^-3", "2*w^-5", "p^-1"];
    let mut out = Vec::new();
    for p in [3u64, 5, 7] {
        let prime = Prime::new(p).unwrap();
        let q = |s: &str| FieldElem::parse(&prime, s, PREC).unwrap();
        for h in 2..=8u32 {
            for abcd in rational {
                let [a, b, c, d] = abcd.map(q);
                out.push(Instance { data: filtration_recursion(h, &a, &b, &c, &d).unwrap(), l_val: None });
            }
            for l in ls {
                let lv = q(l);
                let d = make_d(&prime, h + 1, Invariant::Finite(lv.clone()), PREC).unwrap();
                let df = to_f_basis(&d).unwrap();
                let [a, b, c, dd] = monodromy_scalars(&df).unwrap();
                out.push(Instance {
                    data: filtration_recursion(h, &a, &b, &c, &dd).unwrap(),
                    l_val: Some(lv.valuation()),
                });
            }
        }
    }
    out
}

fn prime_of(d: &FiltrationData) -> Arc<Prime> {
    d.a.prime().clone()
}

fn criterion_1(grid: &[Instance], elapsed: Duration) -> Outcome {
    let mut bad = Vec::new();
    for inst in grid {
        let d = &inst.data;
        let prime = prime_of(d);
        let pi = FieldElem::from_int(&prime, -(prime.p() as i64), PREC);
        let one = FieldElem::one(&prime, PREC);
        let two = FieldElem::from_int(&prime, 2, PREC);
        let x1 = d.b.div(&pi).unwrap();
        let mut ok = d.x[0].eq_at_prec(&x1);
        if d.h >= 3 {
            let amd = &d.a - &d.d;
            let x2 = (&d.b * &(&amd - &one)).div(&(&pi.pow(2) * &two)).unwrap();
            let z20 = (&d.b * &(&amd - &one.mul_int(3))).div(&two).unwrap();
            ok &= d.x[1].eq_at_prec(&x2) && d.z_partial[2].eval_u0().eq_at_prec(&z20);
        }
        if !ok {
            bad.push(format!("p={} h={}", prime.p(), d.h));
        }
    }
    outcome(
        bad.is_empty() && grid.len() >= MIN_GRID && elapsed < RECURSION_BUDGET,
        format!("{} instances in {:?}, mismatches {:?}", grid.len(), elapsed, bad),
    )
}

fn criterion_2(grid: &[Instance]) -> Outcome {
    let failing: Vec<String> =
        grid.iter().flat_map(|i| verify_filtration(&i.data)).filter(|c| !c.verdict.is_true()).map(|c| c.name).collect();
    outcome(failing.is_empty(), format!("{} instances, failing {:?}", grid.len(), failing))
}

fn criterion_3(grid: &[Instance]) -> Outcome {
    let (mut checked, mut bad) = (0, Vec::new());
    for inst in grid {
        let certs = check_coeff_bounds(&inst.data, inst.l_val);
        let hyp = certs.iter().any(|c| c.name == "integral_bound_hypotheses" && c.verdict.is_true());
        let l_applies = inst.l_val.is_some_and(|v| -v >= Val::from_p_units(-1));
        for c in certs {
            let applies =
                if c.name.starts_with("integral_bound_x") { hyp } else { c.name.starts_with("l_bound") && l_applies };
            if applies {
                checked += 1;
                if !c.verdict.is_true() {
                    bad.push(format!("{} ({})", c.name, c.detail));
                }
            }
        }
    }
    outcome(bad.is_empty() && checked > 0, format!("{checked} bound checks, failing {bad:?}"))
}

fn in_scope(r: &RunReport) -> bool {
    r.bound.asserted_scope
}

fn stage_certs<'a>(r: &'a RunReport, stage: &str) -> Vec<&'a ssred_core::pipeline::CertEntry> {
    r.stages.iter().filter(|s| s.name == stage).flat_map(|s| s.certificates.iter()).collect()
}

fn criterion_4(reports: &[RunReport]) -> Outcome {
    let mut bad = Vec::new();
    for r in reports {
        for c in stage_certs(r, "kisin").into_iter().chain(stage_certs(r, "crystalline")) {
            let identity = c.name.starts_with("a_prime_recipe")
                || c.name.starts_with("a_conjugation")
                || c.name.starts_with("det_")
                || c.name.starts_with("crystalline_");
            if identity && c.status != "true" {
                bad.push(format!("({},{},{}) {}", r.config.p, r.config.k, r.config.l.valuation, c.name));
            }
        }
    }
    outcome(bad.is_empty(), format!("{} instances, failing {:?}", reports.len(), bad))
}

fn criterion_5(reports: &[RunReport]) -> Outcome {
    let wanted = ["lambda_", "z_", "g_minus_mu", "g_a", "g_b", "g_c"];
    let (mut n, mut sharpened, mut bad) = (0, 0, Vec::new());
    for r in reports.iter().filter(|r| in_scope(r)) {
        n += 1;
        let certs: Vec<_> = r.certificates().filter(|c| wanted.iter().any(|w| c.name.starts_with(w))).collect();
        sharpened += usize::from(certs.iter().any(|c| c.name == "z_p3h3_phiz"));
        for c in certs {
            if c.status != "true" {
                bad.push(format!("({},{},{}) {}", r.config.p, r.config.k, r.config.l.valuation, c.name));
            }
        }
    }
    outcome(
        bad.is_empty() && n > 0 && sharpened > 0,
        format!("{n} compliant instances ({sharpened} with p = h = 3), failing {bad:?}"),
    )
}

fn descent_ok(r: &RunReport, stage: &str) -> Result<(), String> {
    let names = [
        "descent_c0_identity",
        "descent_residual",
        "descent_bottom_left_e_h",
        "descent_deg_p",
        "descent_p_integral",
        "descent_p_near_g",
    ];
    let certs = stage_certs(r, stage);
    for n in names {
        match certs.iter().find(|c| c.name == n) {
            Some(c) if c.status == "true" => {}
            Some(c) => return Err(format!("{stage}/{n} is {}", c.status)),
            None => return Err(format!("{stage}/{n} missing")),
        }
    }
    Ok(())
}

fn criterion_6(reports: &[RunReport], slowest: Duration) -> Outcome {
    let mut bad = Vec::new();
    let mut n = 0;
    for r in reports {
        if in_scope(r) {
            n += 1;
            if let Err(e) = descent_ok(r, "descent") {
                bad.push(format!("({},{},{}) {e}", r.config.p, r.config.k, r.config.l.valuation));
            }
        }
        if let Err(e) = descent_ok(r, "crystalline") {
            bad.push(format!("({},{},∞) {e}", r.config.p, r.config.k));
        }
    }
    outcome(
        bad.is_empty() && n > 0 && slowest < INSTANCE_BUDGET,
        format!("{n} compliant instances plus crystalline paths, slowest {slowest:?}, failing {bad:?}"),
    )
}

fn expected(p: u64, h: u32) -> Classification {
    let h = h as u64;
    Classification::Induced {
        label: format!("Ind(ω₂^{h} · χ)"),
        weights: (h % (p * p - 1), (p * h) % (p * p - 1)),
        det_exponent: h % (p - 1),
        irreducible: !h.is_multiple_of(p + 1),
    }
}

fn criterion_7(reports: &[RunReport]) -> Outcome {
    let mut bad = Vec::new();
    let mut n = 0;
    for r in reports.iter().filter(|r| in_scope(r)) {
        n += 1;
        let (p, h) = (r.config.p, r.config.h);
        let std = ResidueMatrix::standard(p, h).to_text();
        let want = expected(p, h);
        for (name, path) in [("semistable", &r.semistable), ("crystalline", &r.crystalline)] {
            match &path.reduction {
                Some(red) if red.matrix == std && red.classification == want => {}
                other => bad.push(format!("({p},{},{}) {name}: {other:?}", r.config.k, r.config.l.valuation)),
            }
        }
    }
    outcome(bad.is_empty() && n > 0, format!("{n} compliant instances, failing {bad:?}"))
}

fn criterion_8() -> Outcome {
    let pv = Val::from_p_units;
    let vectors = [
        theorem_bound(3, 5, pv(-3), BoundKind::Strong),
        !theorem_bound(3, 5, pv(-2), BoundKind::Strong),
        theorem_bound(3, 3, pv(-1), BoundKind::Strong),
    ];
    let mut identity = 0;
    let mut bad = Vec::new();
    for p in [3u64, 5, 7, 11, 13] {
        for k in 3..=40u32 {
            identity += 1;
            if !bound_identity(p, k).verdict.is_true() {
                bad.push((p, k));
            }
        }
    }
    outcome(
        vectors.iter().all(|&b| b) && bad.is_empty(),
        format!("vectors {vectors:?}, identity on {identity} (p,k), failing {bad:?}"),
    )
}

fn criterion_9() -> Outcome {
    // v_p(𝓛⁻¹) > (h-1)/2 + v_p((h-1)!) = 1/2 for h = 2
    let mut bad = Vec::new();
    let vs = [Ratio::new(-1, 1), Ratio::new(-3, 2), Ratio::new(-2, 1), Ratio::new(-3, 1)];
    for v in vs {
        let mut cfg = RunConfig::new(3, 3, LSpec::Valuation(v));
        cfg.weak_bound = true;
        match run_pipeline(&cfg) {
            Ok(r) => {
                let failing: Vec<_> =
                    r.certificates().filter(|c| c.asserted && c.status != "true").map(|c| c.name.clone()).collect();
                let complete = r.semistable.reduction.is_some() && r.bound.holds && r.bound.asserted_scope;
                if r.exit_code != 0 || !failing.is_empty() || !complete {
                    bad.push(format!("v={v}: exit {} failing {failing:?}", r.exit_code));
                }
            }
            Err(e) => bad.push(format!("v={v}: {e}")),
        }
    }
    let refused = run_pipeline(&RunConfig::new(3, 3, LSpec::Valuation(Ratio::from_integer(-2)))).is_err();
    outcome(
        bad.is_empty() && refused,
        format!("{} weak-bound runs, strong-bound refusal {refused}, failing {bad:?}", vs.len()),
    )
}

fn criterion_10() -> Outcome {
    let r = match run_pipeline(&RunConfig::new(3, 6, LSpec::Valuation(Ratio::from_integer(-2)))) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let integrality = r.certificate("descent_p_integral");
    let not_asserted = integrality.is_none_or(|c| !c.asserted);
    let downstream_quiet = stage_certs(&r, "descent").iter().all(|c| !c.asserted);
    outcome(
        !r.bound.holds && !r.bound.asserted_scope && not_asserted && downstream_quiet,
        format!(
            "bound {}, P-integrality observed as {:?} (asserted: {})",
            r.bound.holds,
            integrality.map(|c| c.status),
            integrality.is_some_and(|c| c.asserted)
        ),
    )
}

fn main() {
    let t = Instant::now();
    let grid = recursion_grid();
    let recursion_time = t.elapsed();

    let spec = SweepSpec::parse("p=3,5,7;k=4..9;v=-5..-2,-5/2").unwrap();
    let base = RunConfig::new(3, 4, LSpec::Infinity);
    let report = sweep(&spec, &base);
    let reports: Vec<RunReport> = report.cells.into_iter().filter_map(|c| c.report).collect();
    let slowest = reports
        .iter()
        .map(|r| Duration::from_millis(r.timings_ms.values().sum::<u128>() as u64))
        .max()
        .unwrap_or_default();

    let results = [
        criterion_1(&grid, recursion_time),
        criterion_2(&grid),
        criterion_3(&grid),
        criterion_4(&reports),
        criterion_5(&reports),
        criterion_6(&reports, slowest),
        criterion_7(&reports),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ];
    for (i, r) in results.iter().enumerate() {
        println!("{} criterion {}: {}", if r.ok { "PASS" } else { "FAIL" }, i + 1, r.detail);
    }
    let failed = results.iter().filter(|r| !r.ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

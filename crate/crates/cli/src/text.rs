use std::fmt::Write;

use ssred_core::pipeline::{PathSummary, RunReport, SweepReport};

fn path(out: &mut String, name: &str, s: &PathSummary) {
    if let Some(g) = &s.g {
        let vals: Vec<String> = g.low_valuations.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{name}: v_R2(G) ≥ {}, v(T≤h G) = [{}]", g.v_r2, vals.join(", "));
    }
    if let Some(d) = &s.descent {
        let vals: Vec<String> = d.p_valuations.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(
            out,
            "{name}: P valuations [{}], residual ≥ {} (> {}), {} rounds",
            vals.join(", "),
            d.residual,
            d.threshold,
            d.rounds
        );
    }
    if let Some(r) = &s.reduction {
        let _ = writeln!(out, "{name}: {} ⇒ {}", r.matrix, r.classification.label());
    }
}

pub fn run(r: &RunReport) -> String {
    let mut out = String::new();
    let c = &r.config;
    let l = c.l.literal.as_deref().unwrap_or("∞");
    let _ = writeln!(out, "p = {}, k = {}, h = {}, 𝓛 = {} (v = {})", c.p, c.k, c.h, l, c.l.valuation);
    if c.l.representative_dependent {
        let _ = writeln!(out, "note: 𝓛 given by valuation only; intermediate values depend on the representative");
    }
    let _ = writeln!(out, "M = {}, N_u = {}, escalations = {}", c.prec, c.deg_u, r.escalations.len());
    let b = &r.bound;
    let _ = writeln!(
        out,
        "bound ({:?}): v(𝓛⁻¹) = {} > {} is {}; asserted scope: {}",
        b.kind, b.l_inverse_valuation, b.threshold, b.holds, b.asserted_scope
    );
    if !r.x_valuations.is_empty() {
        let xs: Vec<String> = r.x_valuations.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "v(x_i) = [{}]", xs.join(", "));
    }
    path(&mut out, "semistable", &r.semistable);
    path(&mut out, "crystalline", &r.crystalline);
    for s in &r.stages {
        let _ = writeln!(out, "[{}]", s.name);
        for c in &s.certificates {
            let mark = if c.asserted { "" } else { " (reported)" };
            let _ = writeln!(out, "  {:<32} {:<13}{mark} {}", c.name, c.status, c.detail);
        }
    }
    let _ = writeln!(out, "verdict: {} (exit {})", r.verdict, r.exit_code);
    out
}

pub fn sweep(r: &SweepReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>3} {:>3} {:>6} {:>6} {:>5}  label", "p", "k", "v", "bound", "exit");
    for c in &r.cells {
        let bound = c.bound.map_or("-".to_string(), |b| b.to_string());
        let label = c.label.as_deref().or(c.error.as_deref()).unwrap_or("-");
        let _ = writeln!(out, "{:>3} {:>3} {:>6} {:>6} {:>5}  {label}", c.p, c.k, c.v, bound, c.exit_code);
    }
    let s = &r.summary;
    let _ = writeln!(
        out,
        "{} cells, {} within the bound, {} certified, {} failed, {} unknown, {} out of range",
        s.cells, s.bound_satisfied, s.certified, s.failures, s.unknown, s.out_of_range
    );
    out
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use ssred_core::pipeline::{run_pipeline, sweep, LSpec, RunConfig, SweepSpec};
use ssred_core::Error;

mod text;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// Certify the mod-p reduction of a semi-stable representation D_{k,𝓛}.
///
/// Exit codes: 0 all asserted certificates true, 1 a certificate failed,
/// 2 out of range, 3 precision exhausted.
#[derive(Parser, Debug)]
#[command(name = "ssred", version)]
struct Args {
    /// Odd prime p.
    #[arg(long)]
    p: Option<u64>,
    /// Weight k ≥ 3 (h = k - 1).
    #[arg(long)]
    k: Option<u32>,
    /// 𝓛 as a literal, e.g. `p^-3`, `2*w^-7`, `1/7*p^-2 + 3`, or `inf`.
    #[arg(long = "L", allow_hyphen_values = true, conflicts_with = "l_val")]
    l: Option<String>,
    /// Only v_p(𝓛), e.g. `-3` or `-5/2`; runs with 𝓛 = ϖ^{2v}.
    #[arg(long = "L-val", allow_hyphen_values = true)]
    l_val: Option<String>,
    /// Working precision M in p-adic digits.
    #[arg(long)]
    prec: Option<i64>,
    /// Truncation degree N_u in u.
    #[arg(long = "deg-u")]
    deg_u: Option<usize>,
    /// Use the weaker bound on 𝓛, which also admits p = 3, h = 2.
    #[arg(long = "weak-bound")]
    weak_bound: bool,
    /// Grid such as `p=3,5;k=4..8;v=-4..-1` (v is v_p(𝓛)).
    #[arg(long, conflicts_with_all = ["p", "k", "l", "l_val"])]
    sweep: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn emit(args: &Args, body: String) -> anyhow::Result<()> {
    match &args.out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn real_main(args: &Args) -> anyhow::Result<u8> {
    let mut base = RunConfig::new(args.p.unwrap_or(3), args.k.unwrap_or(4), LSpec::Infinity);
    base.prec = args.prec;
    base.deg_u = args.deg_u;
    base.weak_bound = args.weak_bound;

    if let Some(spec) = &args.sweep {
        let spec = match SweepSpec::parse(spec) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return Ok(2);
            }
        };
        let report = sweep(&spec, &base);
        let body = match args.format {
            Format::Json => serde_json::to_string_pretty(&report)? + "\n",
            Format::Text => text::sweep(&report),
        };
        emit(args, body)?;
        return Ok(report.exit_code() as u8);
    }

    let (Some(_), Some(_)) = (args.p, args.k) else {
        bail!("--p and --k are required unless --sweep is given");
    };
    base.l = match (&args.l, &args.l_val) {
        (Some(l), None) => LSpec::parse_literal(l),
        (None, Some(v)) => match LSpec::parse_valuation(v) {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: {e}");
                return Ok(2);
            }
        },
        _ => bail!("exactly one of --L and --L-val is required"),
    };
    match run_pipeline(&base) {
        Ok(report) => {
            let body = match args.format {
                Format::Json => serde_json::to_string_pretty(&report)? + "\n",
                Format::Text => text::run(&report),
            };
            emit(args, body)?;
            Ok(report.exit_code as u8)
        }
        Err(e @ (Error::OutOfRange(_) | Error::InvalidParam(_) | Error::Parse(_))) => {
            eprintln!("refused: {e}");
            Ok(2)
        }
        Err(e) => Err(e.into()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match real_main(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use dce_cli::checks::*;
use dce_cli::commands;
use dce_cli::config::{RawConfig, RunConfig};
use dce_cli::table::ParsedCsv;
use dce_core::geometry::{MetricOrder, ModeIndex};
use dce_core::observables::{n_final, n_fundamental, proper_time_for};
use dce_core::oracle::OracleOptions;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn flat_parametric_limit() -> Result<Outcome, Box<dyn std::error::Error>> {
    let start = Instant::now();
    let closed = n_fundamental(0.1, 0.0, 0.0);
    let closed_time = start.elapsed();
    let closed_ok = format!("{closed:.7}") == "0.0100000" && closed_time.as_secs_f64() < 1e-3;
    let p = pipeline_fundamental(16, 0.1, 1e-3, true)?;
    let p_rel = rel(p.value, 0.01);
    let p_ok = p_rel <= 1e-2 && p.elapsed.as_secs_f64() < 1.0;
    let o = oracle_fundamental(16, 0.05, 1e-3, &OracleOptions::default())?;
    let o_rel = rel(o.n, 0.05 * 0.05);
    let o_ok = o_rel <= 2e-2 && o.elapsed.as_secs_f64() < 60.0;
    Ok(outcome(
        closed_ok && p_ok && o_ok,
        format!(
            "closed {closed:.7} in {closed_time:?} [{}]; pipeline {:.6e} rel {p_rel:.3e} in {:.2?} [{}]; \
             oracle {:.6e} rel {o_rel:.3e} in {:.2?} [{}]",
            ok(closed_ok),
            p.value,
            p.elapsed,
            ok(p_ok),
            o.n,
            o.elapsed,
            ok(o_ok)
        ),
    ))
}

fn gradient_sweep() -> Result<Outcome, Box<dyn std::error::Error>> {
    let mut raw = RawConfig::default();
    for s in ["axis=gamma_a_p", "start=0", "stop=0.1", "step=0.01", "chi=0", "tau_p=0.1"] {
        raw.set(s, "acceptance")?;
    }
    let table = commands::sweep(&RunConfig::resolve(&raw)?)?;
    let csv = ParsedCsv::parse(&table.render()).ok_or("unparsable sweep output")?;
    let g = csv.column_f64("sweep_gamma_a_p").ok_or("missing axis column")?;
    let n = csv.column_f64("n_closed").ok_or("missing n_closed")?;
    let worst = g.iter().zip(&n).map(|(g, n)| rel(*n, (1.0 - 2.0 * g).powi(2) * 0.01)).fold(0.0, f64::max);
    let step = largest_step(&n);
    Ok(outcome(
        g.len() == 11 && worst <= 1e-12 && step < 0.0,
        format!("{} rows, max rel {worst:.3e}, largest step {step:.3e}", g.len()),
    ))
}

fn axial_trend() -> Result<Outcome, Box<dyn std::error::Error>> {
    let mut parts = Vec::new();
    let mut passed = true;
    for g in [0.0, 0.05, 0.1] {
        let v = transverse_trend(0.0, g)?;
        passed &= largest_step(&v) < 0.0;
        parts.push(format!("gamma_a_p {g}: {:.4e} {:.4e} {:.4e}", v[0], v[1], v[2]));
    }
    Ok(outcome(passed, parts.join("; ")))
}

/// Same closed form along (n_x,1,1), the family where |n| grows transversally.
fn transverse_trend_supplement() -> Result<String, Box<dyn std::error::Error>> {
    let mut parts = Vec::new();
    for g in [0.0, 0.05, 0.1] {
        let v: Vec<f64> = (1..=3)
            .map(|x| {
                let k = ModeIndex::new(x, 1, 1)?;
                Ok(n_final(&k, 0.1 / k.norm(), 0.0, g))
            })
            .collect::<dce_core::Result<_>>()?;
        parts.push(format!("gamma_a_p {g}: {} ({:.4e} {:.4e} {:.4e})", ok(largest_step(&v) < 0.0), v[0], v[1], v[2]));
    }
    Ok(parts.join("; "))
}

fn proper_units_invariance() -> Result<Outcome, Box<dyn std::error::Error>> {
    let mut worst = 0.0f64;
    for nz in 1..=3 {
        let a = resonant_in_proper_units(0.0, nz, 1e-3, proper_time_for(0.1, 1e-3, 1.0), 1.0)?;
        let b = resonant_in_proper_units(1e-3, nz, 1e-3, proper_time_for(0.1, 1e-3, 1.0), 1.0)?;
        worst = worst.max(rel(b, a));
    }
    Ok(outcome(worst <= 1e-8, format!("max rel {worst:.3e} over n_z 1..3")))
}

fn algebraic_consistency() -> Result<Outcome, Box<dyn std::error::Error>> {
    let worst = fundamental_vs_final(5);
    let corner = (n_final(&ModeIndex::FUNDAMENTAL, 0.1, 0.0, 0.0), n_fundamental(0.1, 0.0, 0.0));
    Ok(outcome(
        worst <= 1e-12,
        format!("max rel {worst:.3e}; at chi = gamma_a_p = 0: general {:.6e}, fundamental {:.6e}", corner.0, corner.1),
    ))
}

fn expansion_coefficients() -> Result<Outcome, Box<dyn std::error::Error>> {
    let worst = lambda_agreement(8, 20)?;
    Ok(outcome(worst <= 1e-6, format!("max rel {worst:.3e} over 64 pairs x 20 times")))
}

fn mode_suites() -> Result<Outcome, Box<dyn std::error::Error>> {
    let mut ortho = 0.0f64;
    let mut edge = 0.0f64;
    let cases = [
        (0.0, 0.0, MetricOrder::First),
        (1e-3, 0.0, MetricOrder::First),
        (0.0, 1e-3, MetricOrder::Second),
        (1e-3, 1e-2, MetricOrder::Second),
    ];
    for (chi, ga, order) in cases {
        let s = solver(1.0, chi, ga, order)?;
        ortho = ortho.max(orthonormality(&s, 8)?);
        edge = edge.max(boundary(&s, 8)?);
    }
    Ok(outcome(ortho <= 1e-6 && edge <= 1e-10, format!("identity deviation {ortho:.3e}, boundary {edge:.3e}")))
}

fn oracle_unitarity() -> Result<Outcome, Box<dyn std::error::Error>> {
    let d = [4, 8, 16]
        .iter()
        .map(|&nz| oracle_fundamental(nz, 0.05, 1e-3, &tight_oracle()).map(|o| o.defect))
        .collect::<dce_core::Result<Vec<_>>>()?;
    let bounded = d[2] <= 1e-6;
    let monotone = largest_step(&d) < 0.0;
    Ok(outcome(
        bounded && monotone,
        format!(
            "defect n_z 4/8/16: {:.3e} {:.3e} {:.3e}; bound [{}], monotone [{}]",
            d[0],
            d[1],
            d[2],
            ok(bounded),
            ok(monotone)
        ),
    ))
}

fn order_scaling() -> Result<Outcome, Box<dyn std::error::Error>> {
    let eps = [1e-3, 5e-4, 2.5e-4];
    let t = proper_time_for(0.05, 1e-3, 1.0);
    let gaps = eps.iter().map(|&e| first_order_gap(e, t, 16)).collect::<dce_core::Result<Vec<_>>>()?;
    let slope = log_slope(&eps, &gaps);
    Ok(outcome(
        (1.8..=2.2).contains(&slope),
        format!("slope {slope:.4} at t = {t:.2}; gaps {:.3e} {:.3e} {:.3e}", gaps[0], gaps[1], gaps[2]),
    ))
}

fn second_order_frequency() -> Result<Outcome, Box<dyn std::error::Error>> {
    let r = [quantization_ratio(1e-3, 8)?, quantization_ratio(1e-2, 8)?];
    Ok(outcome(
        r.iter().all(|&x| x <= 10.0),
        format!("max rel deviation / (gamma a0)^2: {:.3} at 1e-3, {:.3} at 1e-2 (bound 10)", r[0], r[1]),
    ))
}

fn ok(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

type Criterion = fn() -> Result<Outcome, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("flat-space parametric limit", flat_parametric_limit),
        ("fundamental number against the gradient (sweep)", gradient_sweep),
        ("general formula decreasing along (1,1,n_z)", axial_trend),
        ("first-order invariance in proper units", proper_units_invariance),
        ("general formula at (1,1,1) equals fundamental formula", algebraic_consistency),
        ("expansion coefficients closed form vs numeric", expansion_coefficients),
        ("orthonormality and boundary values", mode_suites),
        ("oracle unitarity", oracle_unitarity),
        ("first-order error scales as eps^2", order_scaling),
        ("second-order quantisation root", second_order_frequency),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match run() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!("criterion {:>2} {} {name}: {detail} ({:.1?})", i + 1, ok(passed), start.elapsed());
        if i == 2 {
            match transverse_trend_supplement() {
                Ok(s) => println!("   supplement  along (n_x,1,1): {s}"),
                Err(e) => println!("   supplement  error: {e}"),
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

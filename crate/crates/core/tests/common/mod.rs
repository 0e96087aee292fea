#![allow(dead_code)]

//! Test-side oracles that share no code with the library.

use oppq_core::precision::PrecisionContext;
use oppq_core::problems::{Family, ProblemSpec};
use oppq_core::quantizer::{EnergyRoot, Method, Parity, Quantizer};
use oppq_core::problems::WeightSpec;

/// Potential `V(x)` in hardware precision.
pub fn potential(problem: &ProblemSpec) -> Box<dyn Fn(f64) -> f64> {
    match problem.family() {
        Family::Harmonic => Box::new(|x: f64| x * x),
        Family::Rational => Box::new(|x: f64| {
            let d = 3.0 + 2.0 * x * x;
            x * x - 48.0 / (d * d)
        }),
        Family::Sextic { a, b } => {
            let a: f64 = a.as_str().parse().unwrap();
            let b: f64 = b.as_str().parse().unwrap();
            Box::new(move |x: f64| {
                let x2 = x * x;
                a * x2 + b * x2 * x2 + x2 * x2 * x2
            })
        }
    }
}

/// `ψ(L)` for `−ψ'' + Vψ = Eψ` started from the origin with the parity's
/// initial data, by classical RK4.
fn shoot(v: &dyn Fn(f64) -> f64, e: f64, parity: Parity, end: f64, steps: usize) -> f64 {
    let h = end / steps as f64;
    let (mut y, mut dy) = match parity {
        Parity::Even => (1.0, 0.0),
        Parity::Odd => (0.0, 1.0),
    };
    let f = |x: f64, y: f64| (v(x) - e) * y;
    let mut x = 0.0;
    for _ in 0..steps {
        let k1y = dy;
        let k1d = f(x, y);
        let k2y = dy + 0.5 * h * k1d;
        let k2d = f(x + 0.5 * h, y + 0.5 * h * k1y);
        let k3y = dy + 0.5 * h * k2d;
        let k3d = f(x + 0.5 * h, y + 0.5 * h * k2y);
        let k4y = dy + h * k3d;
        let k4d = f(x + h, y + h * k3y);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        dy += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        x += h;
    }
    y
}

/// Eigenvalue of the given parity inside `[lo, hi]`, where `ψ(L)` must
/// change sign exactly once.
pub fn shooting_eigenvalue(problem: &ProblemSpec, parity: Parity, lo: f64, hi: f64) -> f64 {
    let v = potential(problem);
    let end = match problem.family() {
        Family::Sextic { .. } => 3.6,
        _ => 7.5,
    };
    let steps = 40_000;
    let (mut a, mut b) = (lo, hi);
    let fa = shoot(&*v, a, parity, end, steps);
    let fb = shoot(&*v, b, parity, end, steps);
    assert!(fa * fb < 0.0, "no sign change of ψ(L) on [{lo}, {hi}]");
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let fm = shoot(&*v, m, parity, end, steps);
        if fm * fa > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn scan(
    problem: ProblemSpec,
    weight: WeightSpec,
    method: Method,
    n: usize,
    window: (&str, &str),
    ctx: &PrecisionContext,
) -> (Quantizer, Vec<EnergyRoot>) {
    let q = Quantizer::new(problem, weight, method, n, ctx.clone()).unwrap();
    let roots = q
        .scan_spectrum(
            &ctx.parse(window.0).unwrap(),
            &ctx.parse(window.1).unwrap(),
            &ctx.parse("0.05").unwrap(),
            &ctx.parse("1e-12").unwrap(),
        )
        .unwrap();
    (q, roots)
}

pub fn energies(roots: &[EnergyRoot]) -> Vec<f64> {
    roots.iter().map(|r| r.energy.to_f64()).collect()
}

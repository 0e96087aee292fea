//! The oracle and invariant battery behind `oppq validate`.

use oppq_core::orthopoly::OrthoBasis;
use oppq_core::precision::{integrate_line, PrecisionContext};
use oppq_core::problems::{ground_state_value, ProblemSpec, TaylorVariant, WeightSpec};
use oppq_core::quantizer::Method;
use oppq_core::quantizer::Quantizer;
use rug::ops::Pow;
use rug::Float;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub measured: Option<String>,
    pub tolerance: String,
    pub error: Option<String>,
    pub precision_failure: bool,
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub decimal_digits: u32,
    pub order: usize,
    pub taylor_variant: &'static str,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn outcome(&self) -> Result<(), CliError> {
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        if failed == 0 {
            return Ok(());
        }
        let precision = self.checks.iter().any(|c| c.precision_failure);
        Err(CliError::ChecksFailed { failed, total: self.checks.len(), precision })
    }
}

fn check(name: &'static str, tolerance: &Float, run: impl FnOnce() -> oppq_core::Result<Float>) -> Check {
    let tol = format!("{:.1e}", tolerance.to_f64());
    match run() {
        Ok(v) => Check {
            name,
            pass: v <= *tolerance,
            measured: Some(format!("{:.3e}", v)),
            tolerance: tol,
            error: None,
            precision_failure: false,
        },
        Err(e) => Check {
            name,
            pass: false,
            measured: None,
            tolerance: tol,
            precision_failure: matches!(e, oppq_core::Error::Precision { .. }),
            error: Some(e.to_string()),
        },
    }
}

/// Quadrature moments of `e^{−x²/2}/(1 + 2x²/3)` against the moment recursion at `E = −3`.
fn quadrature_recursion(ctx: &PrecisionContext) -> oppq_core::Result<Float> {
    let bits = ctx.bits();
    let mut mu = Vec::new();
    for p in 0..=16u32 {
        if p % 2 == 1 {
            mu.push(ctx.zero());
            continue;
        }
        let target = ctx.digits().saturating_sub(10).clamp(20, 40);
        mu.push(integrate_line(|x: &Float| Float::with_val(x.prec(), x.pow(p)) * ground_state_value(x, ctx), target, ctx)?);
    }
    let generated = ProblemSpec::rational().moment_table(&ctx.real(-3), 16, ctx)?.moments(&mu[..6])?;
    let mut worst = ctx.zero();
    for p in 6..=16 {
        let rel = Float::with_val(bits, &generated[p] - &mu[p]).abs() / Float::with_val(bits, mu[p].abs_ref()).max(&ctx.one());
        worst = worst.max(&rel);
    }
    Ok(worst)
}

/// Rational Taylor recursion at `E = −3` against `(−2/3)^k`.
fn taylor_oracle(ctx: &PrecisionContext, variant: TaylorVariant) -> oppq_core::Result<Float> {
    let c = ProblemSpec::rational()
        .taylor_table(&WeightSpec::GaussianHalf, &ctx.real(-3), 21, variant, ctx)?
        .coefficients(&ctx.one(), &ctx.zero());
    let ratio = Float::with_val(ctx.bits(), -2) / 3u32;
    let mut worst = ctx.zero();
    for k in 0..=10u32 {
        let exact = Float::with_val(ctx.bits(), (&ratio).pow(k));
        worst = worst.max(&Float::with_val(ctx.bits(), &c[2 * k as usize] - &exact).abs());
    }
    Ok(worst)
}

fn orthonormality(n: usize, ctx: &PrecisionContext) -> oppq_core::Result<Float> {
    let mut worst = ctx.zero();
    for w in ["gaussian", "freud4", "ground-state"] {
        let s = WeightSpec::parse(w)?.moments(2 * n, ctx)?;
        worst = worst.max(&OrthoBasis::build(&s, n, ctx)?.orthonormality_residual());
    }
    Ok(worst)
}

/// Number of non-positive leading Hankel minors (0 means positive definite).
fn hankel(n: usize, ctx: &PrecisionContext) -> oppq_core::Result<Float> {
    let mut bad = 0u32;
    for w in ["gaussian", "freud4", "freud4:b=-2", "ground-state"] {
        let s = WeightSpec::parse(w)?.moments(2 * n, ctx)?;
        bad += s.hankel_minors(n, ctx)?.iter().filter(|m| m.sign != 1).count() as u32;
    }
    Ok(ctx.real(bad))
}

/// Lowest four oscillator levels from every method against `{1, 3, 5, 7}`.
fn harmonic(ctx: &PrecisionContext) -> oppq_core::Result<Float> {
    let mut worst = ctx.zero();
    for method in Method::ALL {
        let q = Quantizer::new(ProblemSpec::harmonic(), WeightSpec::GaussianHalf, method, 20, *ctx)?;
        let roots = q.scan_spectrum(&ctx.zero(), &ctx.real(8), &ctx.parse("0.05")?, &ctx.parse("1e-12")?)?;
        if roots.len() < 4 {
            return Err(oppq_core::Error::NonConvergence(format!("{method}: only {} levels below 8", roots.len())));
        }
        for (k, r) in roots.iter().take(4).enumerate() {
            worst = worst.max(&Float::with_val(ctx.bits(), &r.energy - (2 * k + 1) as u32).abs());
        }
    }
    Ok(worst)
}

pub fn run(ctx: &PrecisionContext, order: usize, variant: TaylorVariant) -> ValidationReport {
    let half = ctx.pow10(-(ctx.digits() as i32) / 2);
    let checks = vec![
        check("moment_recursion_quadrature", &ctx.pow10(-20), || quadrature_recursion(ctx)),
        check("taylor_series_oracle", &ctx.zero_threshold(5), || taylor_oracle(ctx, variant)),
        check("orthonormality", &half, || orthonormality(order, ctx)),
        check("hankel_positivity", &ctx.zero(), || hankel(order.min(30), ctx)),
        check("harmonic_end_to_end", &ctx.pow10(-10), || harmonic(ctx)),
    ];
    ValidationReport {
        decimal_digits: ctx.digits(),
        order,
        taylor_variant: match variant {
            TaylorVariant::Standard => "standard",
            TaylorVariant::Legacy3n => "legacy",
        },
        pass: checks.iter().all(|c| c.pass),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_run_passes() {
        let ctx = PrecisionContext::for_order(20);
        let report = run(&ctx, 20, TaylorVariant::Standard);
        assert!(report.pass, "{report:?}");
        assert!(report.outcome().is_ok());
    }

    #[test]
    fn legacy_coefficient_fails_only_the_oracle() {
        let ctx = PrecisionContext::for_order(20);
        let report = run(&ctx, 20, TaylorVariant::Legacy3n);
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        assert_eq!(failed, vec!["taylor_series_oracle"]);
        assert_eq!(report.outcome().unwrap_err().exit_code(), crate::error::EXIT_FAILURE);
    }
}

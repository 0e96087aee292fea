//! Quadrature over the whole real line for smooth, rapidly decaying
//! integrands.
//!
//! The trapezoidal rule on a uniform grid converges geometrically in `1/h`
//! for integrands analytic in a strip around the real axis, so halving the
//! step roughly doubles the number of correct digits. Two successive levels
//! are compared to certify the result.

use rayon::prelude::*;
use rug::Float;

use super::PrecisionContext;
use crate::error::{Error, Result};

const MAX_LEVELS: u32 = 18;
const MAX_CUTOFF_DOUBLINGS: u32 = 24;

/// `∫ f(x) dx` over the real line, correct to `target_digits` relative digits.
pub fn integrate_line<F>(f: F, target_digits: u32, ctx: &PrecisionContext) -> Result<Float>
where
    F: Fn(&Float) -> Float + Sync,
{
    let work = PrecisionContext::new(ctx.digits().max(target_digits) + 10)?;
    let bits = work.bits();
    let eval = |x: &Float| Float::with_val(bits, f(x));

    let mut scale = Float::new(bits);
    for probe in [0.0, 0.5, -0.5, 1.0, -1.0] {
        let v = eval(&work.real(probe)).abs();
        if v > scale {
            scale = v;
        }
    }
    if scale.is_zero() {
        return Ok(ctx.zero());
    }

    let tail = Float::with_val(bits, &scale * work.pow10(-(target_digits as i32) - 8));
    let negligible = |x: &Float| {
        let neg = Float::with_val(bits, -x);
        eval(x).abs() <= tail && eval(&neg).abs() <= tail
    };
    let mut cutoff = work.real(1);
    let mut doublings = 0;
    while !negligible(&cutoff) {
        cutoff *= 2u32;
        doublings += 1;
        if doublings > MAX_CUTOFF_DOUBLINGS {
            return Err(Error::NonConvergence("integrand does not decay".into()));
        }
    }
    // shrink the cutoff toward the decay point
    let mut inside = Float::with_val(bits, &cutoff / 2u32);
    for _ in 0..30 {
        let mid = Float::with_val(bits, &inside + &cutoff) / 2u32;
        if negligible(&mid) {
            cutoff = mid;
        } else {
            inside = mid;
        }
    }

    let target = work.pow10(-(target_digits as i32));
    let mut h = work.real(0.5);
    let mut nodes = node_count(&cutoff, &h);
    let mut sum: Float = (-nodes..=nodes)
        .into_par_iter()
        .map(|k| eval(&Float::with_val(bits, &h * k)))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Float::new(bits), |acc, v| acc + v);
    let mut estimate = Float::with_val(bits, &sum * &h);

    for _ in 0..MAX_LEVELS {
        h /= 2u32;
        nodes *= 2;
        let odd: Vec<Float> = (-nodes..=nodes)
            .into_par_iter()
            .filter(|k| k % 2 != 0)
            .map(|k| eval(&Float::with_val(bits, &h * k)))
            .collect();
        for v in odd {
            sum += v;
        }
        let refined = Float::with_val(bits, &sum * &h);
        let diff = Float::with_val(bits, &refined - &estimate).abs();
        let bound = Float::with_val(bits, &target * refined.clone().abs());
        estimate = refined;
        if diff <= bound {
            return Ok(Float::with_val(ctx.bits(), estimate));
        }
    }
    Err(Error::NonConvergence(format!(
        "trapezoidal refinement did not reach {target_digits} digits"
    )))
}

fn node_count(cutoff: &Float, h: &Float) -> i64 {
    Float::with_val(cutoff.prec(), cutoff / h)
        .ceil()
        .to_f64() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let ctx = PrecisionContext::new(60).unwrap();
        let v = integrate_line(|x| (-Float::with_val(x.prec(), x.square_ref()) / 2u32).exp(), 60, &ctx)
            .unwrap();
        let exact = (ctx.real(2) * ctx.real(rug::float::Constant::Pi)).sqrt();
        assert!((v - exact).abs() < ctx.pow10(-58));
    }

    #[test]
    fn non_decaying_integrand_is_rejected() {
        let ctx = PrecisionContext::new(30).unwrap();
        let err = integrate_line(|x| Float::with_val(x.prec(), 1), 30, &ctx).unwrap_err();
        assert!(matches!(err, Error::NonConvergence(_)));
    }
}

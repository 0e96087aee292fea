//! Arbitrary-precision scalars and the numerical kernels built on them.
//!
//! Every real number in the crate is an MPFR [`Float`] whose precision is set
//! by a [`PrecisionContext`]. Contexts are expressed in decimal digits; the
//! binary precision carries a few guard bits on top.

mod linalg;
mod quadrature;
mod roots;

pub use linalg::{det_sign_log, null_vector, null_vector_in, null_vector_with_threshold, Matrix, SignLogDet};
pub use quadrature::integrate_line;
pub use roots::{bisect, bracket_roots, Bracket, Refined};

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};

/// Arbitrary-precision real.
pub type BigReal = rug::Float;
/// Arbitrary-precision complex number.
pub type BigComplex = rug::Complex;

/// Smallest working precision accepted by the kernel.
pub const MIN_DIGITS: u32 = 30;

const GUARD_BITS: u32 = 16;

/// Working precision for every real derived under it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrecisionContext {
    digits: u32,
}

impl PrecisionContext {
    pub fn new(decimal_digits: u32) -> Result<Self> {
        if decimal_digits < MIN_DIGITS {
            return Err(Error::Config(format!(
                "decimal_digits must be at least {MIN_DIGITS}, got {decimal_digits}"
            )));
        }
        Ok(Self { digits: decimal_digits })
    }

    /// Default precision for truncation order `n`: `max(50, 3n)` digits.
    pub fn for_order(n: usize) -> Self {
        Self { digits: default_digits(n) }
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Binary precision used for MPFR values.
    pub fn bits(&self) -> u32 {
        (f64::from(self.digits) * std::f64::consts::LOG2_10).ceil() as u32 + GUARD_BITS
    }

    pub fn doubled(&self) -> Self {
        Self { digits: self.digits * 2 }
    }

    /// Same context with `extra` more digits.
    pub fn widened(&self, extra: u32) -> Self {
        Self { digits: self.digits + extra }
    }

    pub fn zero(&self) -> Float {
        Float::new(self.bits())
    }

    pub fn one(&self) -> Float {
        Float::with_val(self.bits(), 1)
    }

    pub fn real<T>(&self, value: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(self.bits(), value)
    }

    /// Parses a decimal literal at full working precision.
    pub fn parse(&self, text: &str) -> Result<Float> {
        let parsed = Float::parse(text.trim())
            .map_err(|e| Error::Config(format!("invalid number {text:?}: {e}")))?;
        Ok(Float::with_val(self.bits(), parsed))
    }

    /// `10^exponent` at working precision.
    pub fn pow10(&self, exponent: i32) -> Float {
        let ten = Float::with_val(self.bits(), 10);
        ten.pow(exponent)
    }

    /// `10^(-digits + guard)`, the level below which a value is treated as zero.
    pub fn zero_threshold(&self, guard: u32) -> Float {
        self.pow10(guard as i32 - self.digits as i32)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self { digits: 50 }
    }
}

pub fn default_digits(n: usize) -> u32 {
    (3 * n as u32).max(50)
}

/// Rounds `x` to `sig` significant decimal digits in scientific notation.
pub fn format_sig(x: &Float, sig: usize) -> String {
    format!("{:.*e}", sig.max(1), x)
}

/// Fixed-point rendering with `decimals` digits after the point.
pub fn format_fixed(x: &Float, decimals: usize) -> String {
    let zero = || format!("{:.*}", decimals, 0.0);
    if x.is_zero() {
        return zero();
    }
    // the decimal exponent can shift by one after rounding, so iterate
    let (_, _, lead) = x.to_sign_string_exp(10, Some(1));
    let mut sig = lead.unwrap_or(0) + decimals as i32;
    let (negative, mut digits, exp) = loop {
        if sig <= 0 {
            return zero();
        }
        let (negative, digits, exp) = x.to_sign_string_exp(10, Some(sig as usize));
        let exp = exp.unwrap_or(0);
        let wanted = exp + decimals as i32;
        if wanted >= sig || wanted <= 0 {
            break (negative, digits, exp);
        }
        sig = wanted;
    };
    while (digits.len() as i32) < exp + decimals as i32 {
        digits.push('0');
    }
    let (int_part, frac_part) = if exp > 0 {
        let (i, f) = digits.split_at(exp as usize);
        (i.to_string(), f.to_string())
    } else {
        ("0".to_string(), "0".repeat((-exp) as usize) + &digits)
    };
    let frac: String = frac_part.chars().take(decimals).collect();
    let sign = if negative { "-" } else { "" };
    if decimals == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_low_precision() {
        assert!(PrecisionContext::new(29).is_err());
        assert_eq!(PrecisionContext::new(30).unwrap().digits(), 30);
    }

    #[test]
    fn sig_digits_count() {
        let ctx = PrecisionContext::new(50).unwrap();
        let third = ctx.one() / 3u32;
        assert_eq!(format_sig(&third, 6), "3.33333e-1");
        assert_eq!(format_sig(&ctx.real(-2), 3), "-2.00e0");
    }

    #[test]
    fn default_digits_floor_and_slope() {
        assert_eq!(PrecisionContext::for_order(10).digits(), 50);
        assert_eq!(PrecisionContext::for_order(100).digits(), 300);
    }

    #[test]
    fn values_carry_context_precision() {
        let ctx = PrecisionContext::new(100).unwrap();
        let x = ctx.parse("0.1").unwrap();
        assert!(x.prec() >= 333);
        let tenth = Float::with_val(ctx.bits(), 1) / 10u32;
        assert_eq!(x, tenth);
    }

    #[test]
    fn fixed_format_rounds() {
        let ctx = PrecisionContext::default();
        let x = ctx.parse("-2.9999964634").unwrap();
        assert_eq!(format_fixed(&x, 9), "-2.999996463");
        assert_eq!(format_fixed(&ctx.parse("0.0000123456").unwrap(), 6), "0.000012");
        assert_eq!(format_fixed(&ctx.parse("9.9999999996").unwrap(), 9), "10.000000000");
        assert_eq!(format_fixed(&ctx.parse("-21.3233946942").unwrap(), 9), "-21.323394694");
        assert_eq!(format_fixed(&ctx.zero(), 3), "0.000");
    }
}

//! Sign-change bracketing on a uniform grid and midpoint bisection.

use rayon::prelude::*;
use rug::Float;

use super::SignLogDet;
use crate::error::{Error, Result};

/// Closed energy interval `[lo, hi]` across which a sign change was seen.
#[derive(Clone, Debug, PartialEq)]
pub struct Bracket {
    pub lo: Float,
    pub hi: Float,
}

impl Bracket {
    pub fn new(lo: Float, hi: Float) -> Self {
        Self { lo, hi }
    }

    pub fn degenerate(at: Float) -> Self {
        Self { lo: at.clone(), hi: at }
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Float {
        Float::with_val(self.prec(), &self.hi - &self.lo)
    }

    pub fn midpoint(&self) -> Float {
        let mut m = Float::with_val(self.prec(), &self.lo + &self.hi);
        m /= 2u32;
        m
    }

    fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }
}

/// A refined root together with the width of its final bracket.
#[derive(Clone, Debug, PartialEq)]
pub struct Refined {
    pub value: Float,
    pub width: Float,
}

/// Samples `f` at `lo, lo + step, …` (plus `hi` itself) and returns every
/// consecutive pair across which the sign changes. Samples with sign 0 are
/// returned as degenerate brackets.
///
/// Samples are evaluated in parallel; the result depends only on the grid.
pub fn bracket_roots<F>(f: F, lo: &Float, hi: &Float, step: &Float) -> Result<Vec<Bracket>>
where
    F: Fn(&Float) -> Result<SignLogDet> + Sync,
{
    if lo >= hi {
        return Err(Error::Precondition(format!("empty window [{lo}, {hi}]")));
    }
    if *step <= 0 {
        return Err(Error::Precondition("scan step must be positive".into()));
    }
    let prec = lo.prec().max(hi.prec()).max(step.prec());
    let span = Float::with_val(prec, hi - lo);
    let count = Float::with_val(prec, &span / step)
        .floor()
        .to_u32_saturating()
        .ok_or_else(|| Error::Precondition("scan grid too large".into()))?;
    let mut grid: Vec<Float> = (0..=count)
        .map(|k| Float::with_val(prec, lo + Float::with_val(prec, step * k)))
        .collect();
    if grid.last().is_some_and(|last| last < hi) {
        grid.push(Float::with_val(prec, hi));
    }

    let signs: Vec<i8> = grid
        .par_iter()
        .map(|e| f(e).map(|d| d.sign))
        .collect::<Result<_>>()?;

    let mut brackets = Vec::new();
    for k in 0..grid.len() {
        if signs[k] == 0 {
            brackets.push(Bracket::degenerate(grid[k].clone()));
        } else if k + 1 < grid.len() && signs[k + 1] != 0 && signs[k] != signs[k + 1] {
            brackets.push(Bracket::new(grid[k].clone(), grid[k + 1].clone()));
        }
    }
    Ok(brackets)
}

/// Midpoint bisection of a sign-change bracket down to width `tol`.
pub fn bisect<F>(f: F, bracket: &Bracket, tol: &Float) -> Result<Refined>
where
    F: Fn(&Float) -> Result<SignLogDet>,
{
    let prec = bracket.prec();
    if bracket.is_degenerate() {
        return Ok(Refined { value: bracket.lo.clone(), width: Float::new(prec) });
    }
    let (mut lo, mut hi) = (bracket.lo.clone(), bracket.hi.clone());
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let sign_lo = f(&lo)?.sign;
    if sign_lo == 0 {
        return Ok(Refined { value: lo, width: Float::new(prec) });
    }
    let sign_hi = f(&hi)?.sign;
    if sign_hi == 0 {
        return Ok(Refined { value: hi, width: Float::new(prec) });
    }
    if sign_lo == sign_hi {
        return Err(Error::Precondition(format!(
            "no sign change across [{}, {}]",
            lo.to_f64(),
            hi.to_f64()
        )));
    }
    loop {
        let width = Float::with_val(prec, &hi - &lo);
        if width <= *tol {
            let mut mid = Float::with_val(prec, &lo + &hi);
            mid /= 2u32;
            return Ok(Refined { value: mid, width });
        }
        let mut mid = Float::with_val(prec, &lo + &hi);
        mid /= 2u32;
        if mid == lo || mid == hi {
            // bracket is at the resolution of the working precision
            return Ok(Refined { value: mid, width });
        }
        match f(&mid)?.sign {
            0 => return Ok(Refined { value: mid, width: Float::new(prec) }),
            s if s == sign_lo => lo = mid,
            _ => hi = mid,
        }
    }
}

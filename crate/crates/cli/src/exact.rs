//! Closed-form states used as references in reconstruction output.

use oppq_core::precision::PrecisionContext;
use oppq_core::problems::{ground_state_value, Family, ProblemSpec, WeightSpec};
use oppq_core::reconstructor::PoleSum;
use rug::Float;

/// Harmonic levels are exact at any order.
const MATCH: f64 = 1e-6;
/// The rational ground level is the only one near −3; truncated runs sit a little off it.
const RATIONAL_MATCH: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exact {
    /// `H_k(x) e^{−x²/2}` at `E = 2k + 1`.
    Harmonic(usize),
    /// `e^{−x²/2} / (1 + 2x²/3)` at `E = −3`.
    RationalGround,
}

impl Exact {
    pub fn identify(problem: &ProblemSpec, energy: &Float) -> Option<Self> {
        let e = energy.to_f64();
        match problem.family() {
            Family::Harmonic => {
                let k = ((e - 1.0) / 2.0).round();
                (k >= 0.0 && (e - (2.0 * k + 1.0)).abs() < MATCH).then_some(Exact::Harmonic(k as usize))
            }
            Family::Rational => ((e + 3.0).abs() < RATIONAL_MATCH).then_some(Exact::RationalGround),
            Family::Sextic { .. } => None,
        }
    }

    pub fn psi(&self, x: &Float, ctx: &PrecisionContext) -> Float {
        match self {
            Exact::Harmonic(k) => {
                let h = hermite(*k, ctx);
                let mut acc = ctx.zero();
                for c in h.iter().rev() {
                    acc *= x;
                    acc += c;
                }
                acc * (-Float::with_val(ctx.bits(), x.square_ref()) / 2u32).exp()
            }
            Exact::RationalGround => ground_state_value(x, ctx),
        }
    }

    /// Taylor coefficients of `Ψ/R` about 0 with the lowest one scaled to 1,
    /// when `R` makes them elementary.
    pub fn taylor(&self, weight: &WeightSpec, k: usize, ctx: &PrecisionContext) -> Option<Vec<Float>> {
        let mut d = vec![ctx.zero(); k + 1];
        match (self, weight) {
            (Exact::Harmonic(level), WeightSpec::GaussianHalf) => {
                let h = hermite(*level, ctx);
                let lead = &h[level % 2];
                for (n, c) in h.iter().enumerate().take(k + 1) {
                    d[n] = Float::with_val(ctx.bits(), c / lead);
                }
            }
            (Exact::RationalGround, WeightSpec::GaussianHalf) => {
                let ratio = Float::with_val(ctx.bits(), -2) / 3u32;
                let mut term = ctx.one();
                for n in (0..=k).step_by(2) {
                    d[n] = term.clone();
                    term *= &ratio;
                }
            }
            (Exact::RationalGround, WeightSpec::RationalGroundState) => d[0] = ctx.one(),
            _ => return None,
        }
        Some(d)
    }

    /// `Ψ/R` continued into the complex plane, for convergence maps.
    pub fn pole_sum(&self, weight: &WeightSpec, ctx: &PrecisionContext) -> Option<PoleSum> {
        match (self, weight) {
            (Exact::RationalGround, WeightSpec::GaussianHalf) => Some(PoleSum::rational_ground_state(ctx)),
            _ => None,
        }
    }
}

/// Coefficients of the physicists' Hermite polynomial `H_k`.
fn hermite(k: usize, ctx: &PrecisionContext) -> Vec<Float> {
    let mut prev = vec![ctx.one()];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![ctx.zero(), ctx.real(2)];
    for n in 1..k {
        // H_{n+1} = 2x H_n − 2n H_{n−1}
        let mut next = vec![ctx.zero(); n + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += Float::with_val(ctx.bits(), c * 2u32);
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= Float::with_val(ctx.bits(), c * (2 * n) as u32);
        }
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_three() {
        let ctx = PrecisionContext::new(40).unwrap();
        let h: Vec<f64> = hermite(3, &ctx).iter().map(Float::to_f64).collect();
        assert_eq!(h, vec![0.0, -12.0, 0.0, 8.0]);
    }

    #[test]
    fn identification() {
        let ctx = PrecisionContext::new(40).unwrap();
        assert_eq!(Exact::identify(&ProblemSpec::harmonic(), &ctx.real(5)), Some(Exact::Harmonic(2)));
        assert_eq!(Exact::identify(&ProblemSpec::harmonic(), &ctx.real(4)), None);
        assert_eq!(Exact::identify(&ProblemSpec::rational(), &ctx.real(-3)), Some(Exact::RationalGround));
        assert_eq!(Exact::identify(&ProblemSpec::sextic("-3", "0").unwrap(), &ctx.zero()), None);
    }

    #[test]
    fn rational_taylor_is_geometric() {
        let ctx = PrecisionContext::new(40).unwrap();
        let d = Exact::RationalGround.taylor(&WeightSpec::GaussianHalf, 4, &ctx).unwrap();
        let v: Vec<f64> = d.iter().map(Float::to_f64).collect();
        assert!((v[2] + 2.0 / 3.0).abs() < 1e-15 && (v[4] - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!((v[1], v[3]), (0.0, 0.0));
        assert!(Exact::RationalGround.taylor(&WeightSpec::parse("freud4").unwrap(), 4, &ctx).is_none());
    }
}

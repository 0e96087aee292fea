//! Polynomials orthonormal under a weight known only through its moments.
//!
//! `P_j(x) = Σ_{i≤j} Ξ_i^{(j)} x^i` with `∫ P_a P_b R = δ_ab`. The basis is
//! built by modified Gram-Schmidt over the monomials in the inner product
//! `⟨x^i, x^k⟩ = s_{i+k}`, with a second orthogonalisation pass.

use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::precision::PrecisionContext;
use crate::problems::WeightMoments;

/// Digits that must survive the cancellation in a squared norm.
const NORM_GUARD_DIGITS: u32 = 10;

/// Orthonormal polynomial family up to degree `N`.
#[derive(Clone, Debug)]
pub struct OrthoBasis {
    /// `xi[j][i] = Ξ_i^{(j)}` for `i ≤ j`.
    xi: Vec<Vec<Float>>,
    moments: WeightMoments,
    even: bool,
}

impl OrthoBasis {
    /// Builds `P_0..P_N`; needs weight moments through order `2N`.
    pub fn build(moments: &WeightMoments, n: usize, ctx: &PrecisionContext) -> Result<Self> {
        if moments.max_order() < 2 * n {
            return Err(Error::Dimension(format!(
                "degree {n} basis needs weight moments through {}, have {}",
                2 * n,
                moments.max_order()
            )));
        }
        let bits = ctx.bits();
        let s: Vec<Float> = moments.as_slice().iter().map(|v| Float::with_val(bits, v)).collect();
        if s[0] <= 0 {
            return Err(Error::Precondition("s_0 must be positive".into()));
        }
        let even = moments.is_even();
        let guard = ctx.pow10(NORM_GUARD_DIGITS as i32 - ctx.digits() as i32);

        let mut xi: Vec<Vec<Float>> = Vec::with_capacity(n + 1);
        // proj[k][i] = ⟨x^i, P_k⟩ for i = 0..=n
        let mut proj: Vec<Vec<Float>> = Vec::with_capacity(n + 1);

        for j in 0..=n {
            let mut v = vec![Float::new(bits); j + 1];
            v[j] = Float::with_val(bits, 1);
            for _pass in 0..2 {
                for k in 0..j {
                    if even && (j + k) % 2 == 1 {
                        continue;
                    }
                    let mut c = Float::new(bits);
                    for (vi, gi) in v.iter().zip(&proj[k]) {
                        if !vi.is_zero() {
                            c += Float::with_val(bits, vi * gi);
                        }
                    }
                    if c.is_zero() {
                        continue;
                    }
                    for (vi, xk) in v.iter_mut().zip(&xi[k]) {
                        if !xk.is_zero() {
                            *vi -= Float::with_val(bits, &c * xk);
                        }
                    }
                }
            }
            if even {
                for (i, vi) in v.iter_mut().enumerate() {
                    if (i + j) % 2 == 1 {
                        *vi = Float::new(bits);
                    }
                }
            }

            let norm2 = quadratic_form(&v, &v, &s, 0);
            let floor = Float::with_val(bits, &s[2 * j] * &guard);
            if norm2 <= floor {
                return Err(Error::Precision {
                    degree: j,
                    detail: format!(
                        "squared norm {:.3e} lost all significant digits (moment s_{} = {:.3e})",
                        norm2.to_f64(),
                        2 * j,
                        s[2 * j].to_f64()
                    ),
                });
            }
            let inv = norm2.sqrt().recip();
            for vi in &mut v {
                *vi *= &inv;
            }
            let g: Vec<Float> = (0..=n)
                .map(|i| {
                    let mut acc = Float::new(bits);
                    for (l, c) in v.iter().enumerate() {
                        if !c.is_zero() {
                            acc += Float::with_val(bits, c * &s[i + l]);
                        }
                    }
                    acc
                })
                .collect();
            xi.push(v);
            proj.push(g);
        }
        Ok(Self { xi, moments: moments.clone(), even })
    }

    /// Highest degree `N`.
    pub fn degree(&self) -> usize {
        self.xi.len() - 1
    }

    /// `Ξ_i^{(j)}`, zero when `i > j`.
    pub fn coefficient(&self, i: usize, j: usize) -> Float {
        match self.xi[j].get(i) {
            Some(c) => c.clone(),
            None => Float::new(self.xi[j][0].prec()),
        }
    }

    /// Coefficients of `P_j` in ascending powers.
    pub fn polynomial(&self, j: usize) -> &[Float] {
        &self.xi[j]
    }

    pub fn moments(&self) -> &WeightMoments {
        &self.moments
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    fn check_degree(&self, j: usize) -> Result<()> {
        if j > self.degree() {
            return Err(Error::Dimension(format!(
                "degree {j} outside basis of degree {}",
                self.degree()
            )));
        }
        Ok(())
    }

    /// `⟨P_a | R | P_b⟩` evaluated from the weight moments.
    pub fn inner_product(&self, a: usize, b: usize) -> Result<Float> {
        self.check_degree(a)?;
        self.check_degree(b)?;
        Ok(quadratic_form(&self.xi[a], &self.xi[b], self.moments.as_slice(), 0))
    }

    /// `∫ x^p P_n(x) R(x) dx`.
    pub fn monomial_projection(&self, p: usize, n: usize) -> Result<Float> {
        self.check_degree(n)?;
        if p + n > self.moments.max_order() {
            return Err(Error::Dimension(format!(
                "⟨x^{p}, P_{n}⟩ needs weight moment s_{}",
                p + n
            )));
        }
        let s = self.moments.as_slice();
        let prec = self.xi[n][0].prec();
        let mut acc = Float::new(prec);
        for (i, c) in self.xi[n].iter().enumerate() {
            if !c.is_zero() {
                acc += Float::with_val(prec, c * &s[p + i]);
            }
        }
        Ok(acc)
    }

    /// `⟨x P_a | R | P_b⟩`, the recurrence (Jacobi) matrix entry.
    pub fn shifted_inner_product(&self, a: usize, b: usize) -> Result<Float> {
        self.check_degree(a)?;
        self.check_degree(b)?;
        if a + b + 1 > self.moments.max_order() {
            return Err(Error::Dimension(format!("needs weight moment s_{}", a + b + 1)));
        }
        Ok(quadratic_form(&self.xi[a], &self.xi[b], self.moments.as_slice(), 1))
    }

    /// `P_j(z)` by Horner's rule.
    pub fn eval(&self, j: usize, z: &Complex) -> Result<Complex> {
        self.check_degree(j)?;
        let prec = self.xi[j][0].prec();
        let mut acc = Complex::new(prec);
        for c in self.xi[j].iter().rev() {
            acc *= z;
            acc += c;
        }
        Ok(acc)
    }

    /// `P_j(x)` at a real point.
    pub fn eval_real(&self, j: usize, x: &Float) -> Result<Float> {
        self.check_degree(j)?;
        Ok(horner(&self.xi[j], x))
    }

    /// Maximum of `|⟨P_a, P_b⟩ − δ_ab|` over the whole basis.
    pub fn orthonormality_residual(&self) -> Float {
        let n = self.degree();
        let prec = self.xi[0][0].prec();
        let mut worst = Float::new(prec);
        for a in 0..=n {
            for b in a..=n {
                let mut g = quadratic_form(&self.xi[a], &self.xi[b], self.moments.as_slice(), 0);
                if a == b {
                    g -= 1u32;
                }
                let g = g.abs();
                if g > worst {
                    worst = g;
                }
            }
        }
        worst
    }
}

pub(crate) fn horner(coeffs: &[Float], x: &Float) -> Float {
    let prec = coeffs.first().map_or(x.prec(), Float::prec);
    let mut acc = Float::new(prec);
    for c in coeffs.iter().rev() {
        acc *= x;
        acc += c;
    }
    acc
}

/// `Σ_{i,l} a_i b_l s_{i+l+shift}`.
fn quadratic_form(a: &[Float], b: &[Float], s: &[Float], shift: usize) -> Float {
    let prec = a.first().map_or(64, Float::prec);
    let mut total = Float::new(prec);
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        let mut row = Float::new(prec);
        for (l, bl) in b.iter().enumerate() {
            if !bl.is_zero() {
                row += Float::with_val(prec, bl * &s[i + l + shift]);
            }
        }
        total += row * ai;
    }
    total
}

//! Dense elimination over MPFR reals: determinant sign/log-magnitude and
//! kernel extraction.

use std::ops::{Index, IndexMut};

use rug::Float;

use super::PrecisionContext;
use crate::error::{Error, Result};

/// Dense row-major matrix of arbitrary-precision reals.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Float>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize, ctx: &PrecisionContext) -> Self {
        Self { rows, cols, data: vec![ctx.zero(); rows * cols] }
    }

    pub fn identity(n: usize, ctx: &PrecisionContext) -> Self {
        let mut m = Self::zeros(n, n, ctx);
        for i in 0..n {
            m[(i, i)] = ctx.one();
        }
        m
    }

    /// Builds a matrix from rows; all rows must have the same length.
    pub fn from_rows(rows: Vec<Vec<Float>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let n = rows.len();
        Ok(Self { rows: n, cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, r: usize) -> &[Float] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn row_mut(&mut self, r: usize) -> &mut [Float] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + a, r * self.cols + b);
            }
        }
    }

    /// Submatrix keeping the listed rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let data = rows
            .iter()
            .flat_map(|&r| cols.iter().map(move |&c| self[(r, c)].clone()))
            .collect();
        Self { rows: rows.len(), cols: cols.len(), data }
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let prec = self.data.first().map_or(64, Float::prec);
        let mut out = Vec::with_capacity(self.rows * other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = Float::new(prec);
                for k in 0..self.cols {
                    acc += &self[(r, k)] * &other[(k, c)];
                }
                out.push(acc);
            }
        }
        Ok(Matrix { rows: self.rows, cols: other.cols, data: out })
    }

    pub fn mul_vec(&self, v: &[Float]) -> Result<Vec<Float>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let prec = self.data.first().map_or(64, Float::prec);
        Ok((0..self.rows)
            .map(|r| {
                let mut acc = Float::new(prec);
                for (a, x) in self.row(r).iter().zip(v) {
                    acc += a * x;
                }
                acc
            })
            .collect())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> Float {
        max_abs(&self.data)
    }

    /// Divides every row by its largest absolute entry and returns the
    /// natural-log sum of the scale factors. Zero rows are left alone and
    /// reported through the second return value.
    fn equilibrate_rows(&mut self) -> (Float, bool) {
        let prec = self.data.first().map_or(64, Float::prec);
        let mut log = Float::new(prec);
        let mut has_zero_row = false;
        for r in 0..self.rows {
            let scale = max_abs(self.row(r));
            if scale.is_zero() {
                has_zero_row = true;
                continue;
            }
            log += scale.clone().ln();
            for x in self.row_mut(r) {
                *x /= &scale;
            }
        }
        (log, has_zero_row)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Float;

    fn index(&self, (r, c): (usize, usize)) -> &Float {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Float {
        &mut self.data[r * self.cols + c]
    }
}

pub(crate) fn max_abs(values: &[Float]) -> Float {
    let prec = values.first().map_or(64, Float::prec);
    let mut best = Float::new(prec);
    for v in values {
        if v.cmp_abs(&best) == Some(std::cmp::Ordering::Greater) {
            best = v.clone().abs();
        }
    }
    best
}

/// Determinant as sign and natural log of the magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct SignLogDet {
    /// −1, 0 or +1.
    pub sign: i8,
    /// `ln |det|`; `None` when `sign == 0`.
    pub log_magnitude: Option<Float>,
}

impl SignLogDet {
    pub fn singular() -> Self {
        Self { sign: 0, log_magnitude: None }
    }

    pub fn is_singular(&self) -> bool {
        self.sign == 0
    }

    /// Product of two determinants.
    pub fn combine(&self, other: &SignLogDet) -> SignLogDet {
        match (&self.log_magnitude, &other.log_magnitude) {
            (Some(a), Some(b)) if self.sign != 0 && other.sign != 0 => SignLogDet {
                sign: self.sign * other.sign,
                log_magnitude: Some(Float::with_val(a.prec().max(b.prec()), a + b)),
            },
            _ => SignLogDet::singular(),
        }
    }
}

/// Sign and log-magnitude of `det(matrix)` by row-equilibrated, partially
/// pivoted elimination.
///
/// A pivot below `10^(-digits+10)` (relative to its row's original maximum)
/// makes the matrix numerically singular and yields sign 0.
pub fn det_sign_log(matrix: &Matrix, ctx: &PrecisionContext) -> Result<SignLogDet> {
    if !matrix.is_square() {
        return Err(Error::Dimension(format!(
            "determinant of a non-square {}x{} matrix",
            matrix.rows, matrix.cols
        )));
    }
    let n = matrix.rows;
    if n == 0 {
        return Ok(SignLogDet { sign: 1, log_magnitude: Some(ctx.zero()) });
    }
    let mut a = matrix.clone();
    let (mut log, zero_row) = a.equilibrate_rows();
    if zero_row {
        return Ok(SignLogDet::singular());
    }
    let threshold = ctx.zero_threshold(10);
    let mut sign: i8 = 1;
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[(i, k)].cmp_abs(&a[(p, k)]) == Some(std::cmp::Ordering::Greater) {
                p = i;
            }
        }
        if a[(p, k)].cmp_abs(&threshold) != Some(std::cmp::Ordering::Greater) {
            return Ok(SignLogDet::singular());
        }
        if p != k {
            a.swap_rows(p, k);
            sign = -sign;
        }
        let pivot = a[(k, k)].clone();
        if pivot.is_sign_negative() {
            sign = -sign;
        }
        log += pivot.clone().abs().ln();
        eliminate_below(&mut a, k, &pivot);
    }
    Ok(SignLogDet { sign, log_magnitude: Some(log) })
}

fn eliminate_below(a: &mut Matrix, k: usize, pivot: &Float) {
    let n = a.rows;
    let cols = a.cols;
    for i in k + 1..n {
        if a[(i, k)].is_zero() {
            continue;
        }
        let factor = Float::with_val(pivot.prec(), &a[(i, k)] / pivot);
        for c in k + 1..cols {
            let t = Float::with_val(pivot.prec(), &factor * &a[(k, c)]);
            a[(i, c)] -= t;
        }
        a[(i, k)] = Float::new(pivot.prec());
    }
}

/// Kernel vector with the default singularity threshold `10^(-digits/2)`.
pub fn null_vector(matrix: &Matrix, ctx: &PrecisionContext) -> Result<Vec<Float>> {
    let threshold = ctx.pow10(-(ctx.digits() as i32) / 2);
    null_vector_with_threshold(matrix, ctx, &threshold)
}

/// Kernel vector of a numerically singular square matrix.
///
/// Uses row-equilibrated elimination with full pivoting. The first pivot
/// below `threshold` ends the elimination; its column becomes the free
/// variable. The result is scaled so its largest-magnitude component is +1,
/// and the residual `|A v|_inf / |A|_inf` must not exceed `10^(-digits/2)`.
pub fn null_vector_with_threshold(
    matrix: &Matrix,
    ctx: &PrecisionContext,
    threshold: &Float,
) -> Result<Vec<Float>> {
    let noise = Float::with_val(ctx.bits(), matrix.max_abs() * ctx.zero_threshold(10));
    kernel(matrix, ctx, threshold, &matrix.max_abs(), &noise)
}

/// Kernel of a diagonal block cut from a larger system of magnitude `scale`.
///
/// Near a root some rows of the block can vanish as a whole, linearly in the
/// energy offset. Rows below `scale · 10^(-digits/2)` are treated as zero, and
/// the residual is measured against `scale`.
pub fn null_vector_in(matrix: &Matrix, scale: &Float, ctx: &PrecisionContext) -> Result<Vec<Float>> {
    let threshold = ctx.pow10(-(ctx.digits() as i32) / 2);
    let scale = Float::with_val(ctx.bits(), scale.abs_ref()).max(&matrix.max_abs());
    let floor = Float::with_val(ctx.bits(), &scale * &threshold);
    kernel(matrix, ctx, &threshold, &scale, &floor)
}

fn kernel(matrix: &Matrix, ctx: &PrecisionContext, threshold: &Float, norm: &Float, floor: &Float) -> Result<Vec<Float>> {
    if !matrix.is_square() {
        return Err(Error::Dimension(format!(
            "kernel of a non-square {}x{} matrix",
            matrix.rows, matrix.cols
        )));
    }
    let n = matrix.rows;
    if n == 0 {
        return Err(Error::Dimension("kernel of an empty matrix".into()));
    }
    let mut a = matrix.clone();
    // rows at rounding level would be blown up to unit size by equilibration
    for r in 0..n {
        if max_abs(a.row(r)) <= *floor {
            for x in a.row_mut(r) {
                *x = Float::new(ctx.bits());
            }
        }
    }
    a.equilibrate_rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rank = n;
    let mut smallest = ctx.zero();
    for k in 0..n {
        let (mut p, mut q) = (k, k);
        for i in k..n {
            for j in k..n {
                if a[(i, j)].cmp_abs(&a[(p, q)]) == Some(std::cmp::Ordering::Greater) {
                    p = i;
                    q = j;
                }
            }
        }
        smallest = a[(p, q)].clone().abs();
        if smallest.cmp_abs(threshold) == Some(std::cmp::Ordering::Less) {
            rank = k;
            break;
        }
        a.swap_rows(p, k);
        a.swap_cols(q, k);
        perm.swap(q, k);
        let pivot = a[(k, k)].clone();
        eliminate_below(&mut a, k, &pivot);
    }
    if rank == n {
        return Err(Error::NoKernel {
            pivot: format!("{:.3e}", smallest.to_f64()),
            threshold: format!("{:.3e}", threshold.to_f64()),
        });
    }

    let prec = ctx.bits();
    let mut x = vec![Float::new(prec); n];
    x[rank] = Float::with_val(prec, 1);
    for i in (0..rank).rev() {
        let mut acc = Float::new(prec);
        for j in i + 1..=rank {
            acc += &a[(i, j)] * &x[j];
        }
        x[i] = -acc / &a[(i, i)];
    }
    let mut v = vec![Float::new(prec); n];
    for (slot, value) in perm.iter().zip(x) {
        v[*slot] = value;
    }

    let mut lead = 0;
    for i in 1..n {
        if v[i].cmp_abs(&v[lead]) == Some(std::cmp::Ordering::Greater) {
            lead = i;
        }
    }
    let scale = v[lead].clone();
    for x in &mut v {
        *x /= &scale;
    }

    if !norm.is_zero() {
        let residual = max_abs(&matrix.mul_vec(&v)?) / norm;
        let bound = ctx.pow10(-(ctx.digits() as i32) / 2);
        if residual > bound {
            return Err(Error::NoKernel {
                pivot: format!("residual {:.3e}", residual.to_f64()),
                threshold: format!("{:.3e}", bound.to_f64()),
            });
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(50).unwrap()
    }

    fn mat(rows: &[&[i32]]) -> Matrix {
        let c = ctx();
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| c.real(x)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn vanishing_row_of_a_block_is_dropped() {
        let c = ctx();
        let tiny = c.pow10(-40);
        let m = Matrix::from_rows(vec![
            vec![c.one(), -c.one()],
            vec![tiny.clone(), Float::with_val(c.bits(), &tiny * 2u32)],
        ])
        .unwrap();
        assert!(matches!(null_vector(&m, &c), Err(Error::NoKernel { .. })));
        let v = null_vector_in(&m, &c.one(), &c).unwrap();
        assert_eq!((v[0].to_f64(), v[1].to_f64()), (1.0, 1.0));
        assert!(null_vector_in(&mat(&[&[1, 0], &[0, 1]]), &c.real(10), &c).is_err());
    }

    #[test]
    fn identity_has_unit_determinant() {
        let d = det_sign_log(&Matrix::identity(3, &ctx()), &ctx()).unwrap();
        assert_eq!(d.sign, 1);
        assert!(d.log_magnitude.unwrap().is_zero());
    }

    #[test]
    fn diagonal_log_is_log_of_product() {
        let d = det_sign_log(&mat(&[&[2, 0], &[0, 3]]), &ctx()).unwrap();
        assert_eq!(d.sign, 1);
        let expected = ctx().real(6).ln();
        let err = (d.log_magnitude.unwrap() - expected).abs();
        assert!(err < ctx().pow10(-45));
    }

    #[test]
    fn negative_determinant_sign() {
        let d = det_sign_log(&mat(&[&[0, 1], &[1, 0]]), &ctx()).unwrap();
        assert_eq!(d.sign, -1);
        let d = det_sign_log(&mat(&[&[-4, 1], &[2, 3]]), &ctx()).unwrap();
        assert_eq!(d.sign, -1);
    }

    #[test]
    fn rank_one_is_singular() {
        assert_eq!(det_sign_log(&mat(&[&[1, 2], &[2, 4]]), &ctx()).unwrap().sign, 0);
        assert_eq!(det_sign_log(&mat(&[&[0, 0], &[1, 4]]), &ctx()).unwrap().sign, 0);
    }

    #[test]
    fn non_square_is_dimension_error() {
        let m = mat(&[&[1, 2, 3], &[4, 5, 6]]);
        assert!(matches!(det_sign_log(&m, &ctx()), Err(Error::Dimension(_))));
        assert!(matches!(null_vector(&m, &ctx()), Err(Error::Dimension(_))));
    }

    #[test]
    fn kernel_of_ones() {
        let v = null_vector(&mat(&[&[1, 1], &[1, 1]]), &ctx()).unwrap();
        assert_eq!(v[0], 1);
        assert_eq!(v[1], -1);
    }

    #[test]
    fn kernel_of_zero_matrix() {
        let v = null_vector(&mat(&[&[0, 0], &[0, 0]]), &ctx()).unwrap();
        assert_eq!(max_abs(&v), 1);
    }

    #[test]
    fn kernel_of_rank_two_3x3() {
        let m = mat(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]);
        let v = null_vector(&m, &ctx()).unwrap();
        // kernel is span (1, -2, 1); largest component scaled to +1
        let tol = ctx().pow10(-45);
        assert_eq!(v[1], 1);
        assert!((v[0].clone() + 0.5f64).abs() < tol);
        assert!((v[2].clone() + 0.5f64).abs() < tol);
    }

    #[test]
    fn regular_matrix_has_no_kernel() {
        let err = null_vector(&mat(&[&[2, 1], &[1, 3]]), &ctx()).unwrap_err();
        assert!(matches!(err, Error::NoKernel { .. }));
    }

    #[test]
    fn wildly_scaled_rows_do_not_fake_singularity() {
        let c = ctx();
        let big = c.pow10(200);
        let tiny = c.pow10(-200);
        let m = Matrix::from_rows(vec![
            vec![big.clone(), Float::with_val(c.bits(), &big * 2u32)],
            vec![Float::with_val(c.bits(), &tiny * 3u32), tiny.clone()],
        ])
        .unwrap();
        let d = det_sign_log(&m, &c).unwrap();
        assert_eq!(d.sign, -1);
        // det = big*tiny*(1 - 6) = -5
        let err = (d.log_magnitude.unwrap() - c.real(5).ln()).abs();
        assert!(err < c.pow10(-40));
    }
}

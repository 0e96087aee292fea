//! States at quantized energies: missing moments, projection coefficients
//! `Ω_n`, pointwise evaluation and convergence diagnostics.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::orthopoly::OrthoBasis;
use crate::precision::{bisect, null_vector_in, Bracket, PrecisionContext};
use crate::problems::{ProblemSpec, WeightSpec};
use crate::quantizer::{EnergyRoot, Method, Parity, Quantizer};

/// A state expanded as `Ψ_N = Σ_{n≤N} Ω_n P_n R`.
#[derive(Clone, Debug)]
pub struct ReconstructedState {
    pub energy: Float,
    pub method: Method,
    /// Truncation order of the quantizer that produced the state.
    pub order: usize,
    pub missing_moments: Vec<Float>,
    pub c0: Float,
    pub c1: Float,
    /// `μ_0..μ_K` with `K` the highest `Ω` index.
    pub mu: Vec<Float>,
    /// `Ω_0..Ω_K`.
    pub omega: Vec<Float>,
    pub parity: Option<Parity>,
    problem: ProblemSpec,
    weight: WeightSpec,
    basis: Arc<OrthoBasis>,
    ctx: PrecisionContext,
}

impl ReconstructedState {
    /// Builds the state from explicit missing moments at `energy`.
    pub fn from_missing_moments(
        quantizer: &Quantizer,
        energy: &Float,
        missing: Vec<Float>,
        local: Option<(Float, Float)>,
    ) -> Result<Self> {
        let basis = quantizer
            .basis()
            .ok_or_else(|| Error::Precondition("reconstruction needs an OPPQ or global-local quantizer".into()))?
            .clone();
        let ctx = quantizer.context().clone();
        let top = quantizer.top_order();
        let table = quantizer.problem().moment_table(energy, top, &ctx)?;
        let mu = table.moments(&missing)?;
        let omega = crate::quantizer::omega_forms(&basis, &table)?.omegas(&missing)?;
        let d = taylor_from_omega(&basis, &omega, top);
        let (c0, c1) = match local {
            Some(pair) => pair,
            None => (d[0].clone(), d.get(1).cloned().unwrap_or_else(|| ctx.zero())),
        };
        Ok(Self {
            energy: Float::with_val(ctx.bits(), energy),
            method: quantizer.method(),
            order: quantizer.order(),
            missing_moments: missing,
            c0,
            c1,
            mu,
            omega,
            parity: None,
            problem: quantizer.problem().clone(),
            weight: quantizer.weight().clone(),
            basis,
            ctx,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn weight(&self) -> &WeightSpec {
        &self.weight
    }

    pub fn basis(&self) -> &Arc<OrthoBasis> {
        &self.basis
    }

    pub fn context(&self) -> &PrecisionContext {
        &self.ctx
    }

    /// Highest `Ω` index.
    pub fn top_order(&self) -> usize {
        self.omega.len() - 1
    }

    /// `max_{K−w<n≤K} |Ω_n| / max_n |Ω_n|` over the last `width` coefficients.
    pub fn omega_tail_ratio(&self, width: usize) -> Float {
        let bits = self.ctx.bits();
        let k = self.omega.len();
        let max_all = max_abs(&self.omega, bits);
        let tail = max_abs(&self.omega[k.saturating_sub(width)..], bits);
        if max_all.is_zero() {
            return max_all;
        }
        tail / max_all
    }

    /// Copy with `Ω` rescaled by `factor`.
    fn scaled(&self, factor: &Float) -> Self {
        let bits = self.ctx.bits();
        let scale = |v: &Float| Float::with_val(bits, v * factor);
        Self {
            missing_moments: self.missing_moments.iter().map(scale).collect(),
            c0: scale(&self.c0),
            c1: scale(&self.c1),
            mu: self.mu.iter().map(scale).collect(),
            omega: self.omega.iter().map(scale).collect(),
            ..self.clone()
        }
    }

    /// Rescaled so the Taylor coefficient `d_0` (or `d_1` for odd states) is 1.
    pub fn normalized_at_origin(&self) -> Result<Self> {
        let d = taylor_from_omega(&self.basis, &self.omega, self.top_order());
        let pivot = origin_pivot(&d, &self.ctx)?;
        Ok(self.scaled(&Float::with_val(self.ctx.bits(), 1u32 / &d[pivot])))
    }
}

/// Index of the first coefficient that fixes the normalization at the origin.
fn origin_pivot(d: &[Float], ctx: &PrecisionContext) -> Result<usize> {
    let scale = max_abs(d, ctx.bits());
    let tiny = Float::with_val(ctx.bits(), &scale * ctx.pow10(-(ctx.digits() as i32) / 2));
    if d[0].clone().abs() > tiny {
        Ok(0)
    } else if d.len() > 1 && d[1].clone().abs() > tiny {
        Ok(1)
    } else {
        Err(Error::Precondition("state vanishes to first order at the origin".into()))
    }
}

fn max_abs(values: &[Float], bits: u32) -> Float {
    let mut m = Float::new(bits);
    for v in values {
        let a = Float::with_val(bits, v.abs_ref());
        if a > m {
            m = a;
        }
    }
    m
}

/// `d_i = Σ_{n=i}^{K} Ξ_i^{(n)} Ω_n` for `i = 0..=K`.
fn taylor_from_omega(basis: &OrthoBasis, omega: &[Float], k: usize) -> Vec<Float> {
    let bits = omega[0].prec();
    let mut d = vec![Float::new(bits); k + 1];
    for (n, w) in omega.iter().enumerate().take(k + 1) {
        if w.is_zero() {
            continue;
        }
        for (i, xi) in basis.polynomial(n).iter().enumerate() {
            if !xi.is_zero() {
                d[i] += Float::with_val(bits, xi * w);
            }
        }
    }
    d
}

/// Extracts the state at a scanned root. The root is first bisected down to
/// width `10^(−3·digits/4)` so the kernel is numerically exact.
pub fn solve_state(quantizer: &Quantizer, root: &EnergyRoot) -> Result<ReconstructedState> {
    let parity = root.parity;
    let ctx = quantizer.context();
    let tol = ctx.pow10(-(3 * ctx.digits() as i32) / 4);
    let half = Float::with_val(ctx.bits(), &root.bracket_width / 2u32);
    let bracket = if half.is_zero() {
        Bracket::degenerate(root.energy.clone())
    } else {
        Bracket::new(
            Float::with_val(ctx.bits(), &root.energy - &half),
            Float::with_val(ctx.bits(), &root.energy + &half),
        )
    };
    let energy = match parity {
        Some(p) => bisect(|e: &Float| quantizer.sector_determinant(e, p), &bracket, &tol)?.value,
        None => bisect(|e: &Float| quantizer.determinant_at(e), &bracket, &tol)?.value,
    };
    solve_state_at(quantizer, &energy, parity)
}

/// Extracts the state at an energy already on a root, from the full system
/// or from one parity block.
pub fn solve_state_at(quantizer: &Quantizer, energy: &Float, parity: Option<Parity>) -> Result<ReconstructedState> {
    if quantizer.method() == Method::Hill {
        return Err(Error::Precondition("Hill roots carry no moment representation".into()));
    }
    let ctx = quantizer.context();
    let system = quantizer.build_matrix(energy)?;
    let width = system.entries.cols();
    let mut unknowns = vec![ctx.zero(); width];
    match parity {
        Some(p) => {
            let kernel = null_vector_in(&system.block(p), &system.entries.max_abs(), ctx)?;
            for (col, v) in system.unknowns(p).into_iter().zip(kernel) {
                unknowns[col] = v;
            }
        }
        None => unknowns = null_vector_in(&system.entries, &system.entries.max_abs(), ctx)?,
    }
    let ms = quantizer.problem().missing_moment_order();
    let missing: Vec<Float> = unknowns[..=ms].to_vec();
    let local = match quantizer.method() {
        Method::GlobalLocal => Some((unknowns[ms + 1].clone(), unknowns[ms + 2].clone())),
        _ => None,
    };
    let mut state = ReconstructedState::from_missing_moments(quantizer, energy, missing, local)?;
    state.parity = parity;
    Ok(state)
}

/// `Ψ_N(x) = Σ_n Ω_n P_n(x) R(x)` at real points.
pub fn evaluate_wavefunction(state: &ReconstructedState, points: &[Float]) -> Result<Vec<Float>> {
    let ctx = &state.ctx;
    points
        .par_iter()
        .map(|x| {
            let r = state
                .weight
                .value(x, ctx)
                .ok_or_else(|| Error::Precondition(format!("weight {} has no closed form", state.weight.id())))?;
            let mut acc = ctx.zero();
            for (n, w) in state.omega.iter().enumerate() {
                if !w.is_zero() {
                    acc += Float::with_val(ctx.bits(), w * &state.basis.eval_real(n, x)?);
                }
            }
            Ok(acc * r)
        })
        .collect()
}

/// Taylor coefficients of `Ψ_N / R` about the origin.
#[derive(Clone, Debug)]
pub struct TaylorReconstruction {
    pub coefficients: Vec<Float>,
    /// Normalized by `d_1 = 1` because `d_0` vanishes.
    pub odd: bool,
}

/// `d_0..d_K`, normalized so `d_0 = 1` (or `d_1 = 1` for odd states).
pub fn reconstruction_taylor(state: &ReconstructedState, k: usize) -> Result<TaylorReconstruction> {
    let top = state.top_order();
    if k > top {
        return Err(Error::Dimension(format!("Taylor order {k} exceeds expansion order {top}")));
    }
    let d = taylor_from_omega(&state.basis, &state.omega, top);
    let pivot = origin_pivot(&d, &state.ctx)?;
    let bits = state.ctx.bits();
    let coefficients = d[..=k].iter().map(|v| Float::with_val(bits, v / &d[pivot])).collect();
    Ok(TaylorReconstruction { coefficients, odd: pivot == 1 })
}

/// `|∫ x^p Ψ_N − μ_p| / (1 + |μ_p|)` for `p = 0..=max_p`.
pub fn moment_residuals(state: &ReconstructedState, max_p: usize) -> Result<Vec<Float>> {
    let ctx = &state.ctx;
    let bits = ctx.bits();
    let top = state.top_order();
    let s = state.basis.moments();
    if max_p + top > s.max_order() {
        return Err(Error::Dimension(format!(
            "moment {max_p} of Ψ_N needs weight moments through {}, have {}",
            max_p + top,
            s.max_order()
        )));
    }
    let mu = if max_p <= top {
        state.mu.clone()
    } else {
        state.problem.moment_table(&state.energy, max_p, ctx)?.moments(&state.missing_moments)?
    };
    let d = taylor_from_omega(&state.basis, &state.omega, top);
    Ok((0..=max_p)
        .map(|p| {
            let mut integral = Float::new(bits);
            for (i, di) in d.iter().enumerate() {
                if !di.is_zero() {
                    integral += Float::with_val(bits, di * s.get(p + i));
                }
            }
            let diff = (integral - &mu[p]).abs();
            diff / (Float::with_val(bits, mu[p].abs_ref()) + 1u32)
        })
        .collect())
}

/// Largest relative residual of `∫ x^p Ψ_N = μ_p` for `p ≤ K`.
pub fn verify_moment_match(state: &ReconstructedState) -> Result<Float> {
    let res = moment_residuals(state, state.top_order())?;
    Ok(max_abs(&res, state.ctx.bits()))
}

/// Per-point, per-order classification of partial sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointStatus {
    Converged,
    Diverging,
    Singular,
    /// Neither settled nor growing.
    Unsettled,
}

impl PointStatus {
    pub fn id(&self) -> &'static str {
        match self {
            PointStatus::Converged => "converged",
            PointStatus::Diverging => "diverging",
            PointStatus::Singular => "singular",
            PointStatus::Unsettled => "unsettled",
        }
    }
}

impl fmt::Display for PointStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Orders between the partial sums compared by the classification rule.
pub const ORDER_STEP: usize = 20;
const CONVERGED_REL: f64 = 1e-3;
const GROWTH_FACTOR: u32 = 10;
const POLE_DISTANCE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct MapEntry {
    pub value: Complex,
    pub status: PointStatus,
    pub abs_error: Option<Float>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceMap {
    pub points: Vec<Complex>,
    pub orders: Vec<usize>,
    /// `entries[point][order_index]`.
    pub entries: Vec<Vec<MapEntry>>,
}

impl ConvergenceMap {
    pub fn entry(&self, point: usize, order_index: usize) -> &MapEntry {
        &self.entries[point][order_index]
    }

    /// Fraction of grid points classified converged at `orders[order_index]`.
    pub fn converged_fraction(&self, order_index: usize) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        let hits = self
            .entries
            .iter()
            .filter(|e| e[order_index].status == PointStatus::Converged)
            .count();
        hits as f64 / self.points.len() as f64
    }
}

/// A function with simple poles, `f(z) = Σ_k r_k / (z − p_k)`, used as exact
/// reference and for Taylor-disk comparisons.
#[derive(Clone, Debug)]
pub struct PoleSum {
    pub terms: Vec<(Complex, Complex)>,
}

impl PoleSum {
    /// `1/(1 + 2z²/3)`, the rational ground state divided by `e^{−x²/2}`.
    pub fn rational_ground_state(ctx: &PrecisionContext) -> Self {
        let bits = ctx.bits();
        let a = (ctx.real(3) / 2u32).sqrt();
        let pole = Complex::with_val(bits, (0, a.clone()));
        // (3/2)/(2ia) at +ia and its negative at −ia
        let residue = Complex::with_val(bits, (0, -(ctx.real(3) / 4u32) / a));
        let conj_res = Complex::with_val(bits, -&residue);
        let conj_pole = Complex::with_val(bits, -&pole);
        Self { terms: vec![(residue, pole), (conj_res, conj_pole)] }
    }

    pub fn poles(&self) -> Vec<Complex> {
        self.terms.iter().map(|(_, p)| p.clone()).collect()
    }

    pub fn value(&self, z: &Complex) -> Complex {
        let prec = z.prec().0;
        let mut acc = Complex::new(prec);
        for (r, p) in &self.terms {
            acc += Complex::with_val(prec, r / Complex::with_val(prec, z - p));
        }
        acc
    }

    /// Degree-`m` Taylor partial sum about the real point `center`.
    pub fn taylor_partial_sum(&self, center: &Float, z: &Complex, m: usize) -> Complex {
        let prec = z.prec().0;
        let dz = Complex::with_val(prec, z - center);
        let mut acc = Complex::new(prec);
        for (r, p) in &self.terms {
            // r/(z − p) = −r/(p − c) · Σ_k ((z − c)/(p − c))^k
            let pc = Complex::with_val(prec, p - center);
            let ratio = Complex::with_val(prec, &dz / &pc);
            let mut term = Complex::with_val(prec, r / &pc);
            let mut sum = Complex::new(prec);
            for _ in 0..=m {
                sum += &term;
                term *= &ratio;
            }
            acc -= sum;
        }
        acc
    }

    fn near_pole(&self, z: &Complex) -> bool {
        self.terms.iter().any(|(_, p)| {
            let d = Complex::with_val(z.prec().0, z - p);
            Float::with_val(53, d.abs_ref()).to_f64() < POLE_DISTANCE
        })
    }
}

/// Classifies order `M` from the partial sums at `M`, `M − 20` and `M − 40`.
fn classify(s_m: &Complex, s_m20: Option<&Complex>, s_m40: Option<&Complex>) -> PointStatus {
    let prec = s_m.prec().0;
    let Some(s_m20) = s_m20 else {
        return PointStatus::Unsettled;
    };
    let delta = Float::with_val(prec, Complex::with_val(prec, s_m - s_m20).abs_ref());
    let size = Float::with_val(prec, s_m.abs_ref()) + 1u32;
    if delta <= size * CONVERGED_REL {
        return PointStatus::Converged;
    }
    if let Some(s_m40) = s_m40 {
        let prev = Float::with_val(prec, Complex::with_val(prec, s_m20 - s_m40).abs_ref());
        if delta >= prev * GROWTH_FACTOR {
            return PointStatus::Diverging;
        }
    }
    PointStatus::Unsettled
}

/// Orders whose partial sums the rule needs for each requested order.
fn needed_orders(orders: &[usize]) -> Vec<usize> {
    let mut all: Vec<usize> = orders
        .iter()
        .flat_map(|&m| [Some(m), m.checked_sub(ORDER_STEP), m.checked_sub(2 * ORDER_STEP)])
        .flatten()
        .collect();
    all.sort_unstable();
    all.dedup();
    all
}

fn check_orders(orders: &[usize], limit: usize) -> Result<()> {
    if orders.is_empty() || orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("orders must be non-empty and strictly ascending".into()));
    }
    if let Some(&m) = orders.last() {
        if m > limit {
            return Err(Error::Dimension(format!("order {m} exceeds available order {limit}")));
        }
    }
    Ok(())
}

fn build_map<F>(grid: &[Complex], orders: &[usize], exact: Option<&PoleSum>, partial: F) -> ConvergenceMap
where
    F: Fn(&Complex, usize) -> Complex + Sync,
{
    let needed = needed_orders(orders);
    let entries = grid
        .par_iter()
        .map(|z| {
            let singular = exact.is_some_and(|e| e.near_pole(z));
            let sums: Vec<Complex> = needed.iter().map(|&m| partial(z, m)).collect();
            let lookup = |m: Option<usize>| m.and_then(|m| needed.binary_search(&m).ok()).map(|i| &sums[i]);
            let reference = if singular { None } else { exact.map(|e| e.value(z)) };
            orders
                .iter()
                .map(|&m| {
                    let value = lookup(Some(m)).expect("order evaluated").clone();
                    let status = if singular {
                        PointStatus::Singular
                    } else {
                        classify(&value, lookup(m.checked_sub(ORDER_STEP)), lookup(m.checked_sub(2 * ORDER_STEP)))
                    };
                    let abs_error = reference.as_ref().map(|r| {
                        let prec = value.prec().0;
                        Float::with_val(prec, Complex::with_val(prec, &value - r).abs_ref())
                    });
                    MapEntry { value, status, abs_error }
                })
                .collect()
        })
        .collect();
    ConvergenceMap { points: grid.to_vec(), orders: orders.to_vec(), entries }
}

/// Partial sums `S_M(z) = Σ_{n≤M} Ω_n P_n(z)` of `Ψ_N / R`, normalized so the
/// full expansion has `d_0 = 1`, classified at each requested order.
pub fn convergence_map(
    state: &ReconstructedState,
    grid: &[Complex],
    orders: &[usize],
    exact: Option<&PoleSum>,
) -> Result<ConvergenceMap> {
    check_orders(orders, state.top_order())?;
    let state = state.normalized_at_origin()?;
    let bits = state.ctx.bits();
    let mut by_order = std::collections::BTreeMap::new();
    for m in needed_orders(orders) {
        let d = taylor_from_omega(&state.basis, &state.omega[..=m], m);
        by_order.insert(m, d);
    }
    let grid: Vec<Complex> = grid.iter().map(|z| Complex::with_val(bits, z)).collect();
    Ok(build_map(&grid, orders, exact, |z, m| {
        let mut acc = Complex::new(bits);
        for c in by_order[&m].iter().rev() {
            acc *= z;
            acc += c;
        }
        acc
    }))
}

/// The same classification for Taylor partial sums of `exact` about `center`.
pub fn taylor_disk_map(
    exact: &PoleSum,
    center: &Float,
    grid: &[Complex],
    orders: &[usize],
    ctx: &PrecisionContext,
) -> Result<ConvergenceMap> {
    check_orders(orders, usize::MAX)?;
    let grid: Vec<Complex> = grid.iter().map(|z| Complex::with_val(ctx.bits(), z)).collect();
    Ok(build_map(&grid, orders, Some(exact), |z, m| exact.taylor_partial_sum(center, z, m)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(60).unwrap()
    }

    fn c(ctx: &PrecisionContext, re: f64, im: f64) -> Complex {
        Complex::with_val(ctx.bits(), (re, im))
    }

    #[test]
    fn pole_sum_matches_closed_form() {
        let ctx = ctx();
        let f = PoleSum::rational_ground_state(&ctx);
        let z = c(&ctx, 0.7, 0.3);
        let expect = crate::problems::ground_state_ratio(&z, &ctx).unwrap();
        let diff = Complex::with_val(ctx.bits(), f.value(&z) - expect);
        assert!(Float::with_val(53, diff.abs_ref()).to_f64() < 1e-50);
    }

    #[test]
    fn taylor_partial_sum_at_center_is_exact() {
        let ctx = ctx();
        let f = PoleSum::rational_ground_state(&ctx);
        let x0 = ctx.real(1.4);
        let z = Complex::with_val(ctx.bits(), &x0);
        let diff = Complex::with_val(ctx.bits(), f.taylor_partial_sum(&x0, &z, 0) - f.value(&z));
        assert!(Float::with_val(53, diff.abs_ref()).to_f64() < 1e-50);
    }

    #[test]
    fn taylor_partial_sum_converges_inside_disk() {
        let ctx = ctx();
        let f = PoleSum::rational_ground_state(&ctx);
        let x0 = ctx.real(1.4);
        let z = c(&ctx, 1.0, 0.2);
        let diff = Complex::with_val(ctx.bits(), f.taylor_partial_sum(&x0, &z, 200) - f.value(&z));
        assert!(Float::with_val(53, diff.abs_ref()).to_f64() < 1e-20);
    }

    #[test]
    fn classification_rule() {
        let ctx = ctx();
        let one = c(&ctx, 1.0, 0.0);
        let close = c(&ctx, 1.0005, 0.0);
        assert_eq!(classify(&close, Some(&one), None), PointStatus::Converged);
        let far = c(&ctx, 100.0, 0.0);
        let mid = c(&ctx, 2.0, 0.0);
        assert_eq!(classify(&far, Some(&mid), Some(&one)), PointStatus::Diverging);
        let wobble = c(&ctx, 3.0, 0.0);
        assert_eq!(classify(&wobble, Some(&mid), Some(&one)), PointStatus::Unsettled);
        assert_eq!(classify(&wobble, None, None), PointStatus::Unsettled);
    }

    #[test]
    fn needed_orders_are_sorted_and_unique() {
        assert_eq!(needed_orders(&[20, 60]), vec![0, 20, 40, 60]);
        assert_eq!(needed_orders(&[10]), vec![10]);
    }

    #[test]
    fn orders_must_ascend() {
        assert!(check_orders(&[20, 20], 100).is_err());
        assert!(check_orders(&[], 100).is_err());
        assert!(matches!(check_orders(&[20, 200], 100), Err(Error::Dimension(_))));
    }

    #[test]
    fn singular_points_flagged() {
        let ctx = ctx();
        let f = PoleSum::rational_ground_state(&ctx);
        let pole = f.poles()[0].clone();
        let map = taylor_disk_map(&f, &ctx.real(1.4), &[pole], &[20], &ctx).unwrap();
        assert_eq!(map.entry(0, 0).status, PointStatus::Singular);
        assert!(map.entry(0, 0).abs_error.is_none());
    }
}

//! Built-in potentials, reference weights, and the recursions that tie them
//! to power moments and Taylor coefficients.
//!
//! Three potential families are available:
//!
//! * `harmonic`: `V = x²`, spectrum `2n + 1`, one missing moment per parity.
//! * `sextic:a=..,b=..`: `V = a x² + b x⁴ + x⁶`.
//! * `rational`: `V = x² − 48/(3 + 2x²)²`, exact ground state at `E = −3`.
//!
//! The moment equation expresses every `μ_p = ∫ x^p ψ` through the missing
//! moments `μ_0..μ_{m_s}` with energy-dependent coefficients `M_{p,ℓ}(E)`.
//! The Taylor recursion does the same for the coefficients `c_n` of `ψ/R`
//! around the origin, seeded by `c_0` and `c_1`.

use std::fmt;

use rug::float::Constant;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::precision::{integrate_line, PrecisionContext};

/// A potential or weight parameter, kept as its decimal literal so it can be
/// materialised exactly at any working precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coefficient(String);

impl Coefficient {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        Float::parse(text).map_err(|e| Error::Config(format!("invalid coefficient {text:?}: {e}")))?;
        Ok(Self(text.to_string()))
    }

    pub fn zero() -> Self {
        Self("0".into())
    }

    pub fn value(&self, ctx: &PrecisionContext) -> Float {
        ctx.parse(&self.0).expect("validated at construction")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    Harmonic,
    Sextic { a: Coefficient, b: Coefficient },
    Rational,
}

/// A one-dimensional potential together with its recursions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemSpec {
    family: Family,
}

/// Which form of the `c_n` coefficient the rational Taylor recursion uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TaylorVariant {
    /// `−3(13 + 3E + 2n(2n − 5))`, obtained by expanding
    /// `(3 + 2x²)²(−f″ + 2x f′ + (1 − E) f) − 48 f = 0`.
    #[default]
    Standard,
    /// `−3(13 + 3E + 2n(3n − 5))`. Inconsistent with the exact ground state;
    /// kept only to demonstrate the discrepancy.
    Legacy3n,
}

impl ProblemSpec {
    pub fn harmonic() -> Self {
        Self { family: Family::Harmonic }
    }

    pub fn rational() -> Self {
        Self { family: Family::Rational }
    }

    pub fn sextic(a: &str, b: &str) -> Result<Self> {
        Ok(Self {
            family: Family::Sextic { a: Coefficient::parse(a)?, b: Coefficient::parse(b)? },
        })
    }

    /// Parses `harmonic`, `rational`, or `sextic:a=<a>,b=<b>` (`b` defaults to 0).
    pub fn parse(id: &str) -> Result<Self> {
        let id = id.trim();
        match id {
            "harmonic" => return Ok(Self::harmonic()),
            "rational" => return Ok(Self::rational()),
            _ => {}
        }
        if let Some(params) = id.strip_prefix("sextic:") {
            let params = parse_params(params, &["a", "b"])?;
            let a = params[0]
                .clone()
                .ok_or_else(|| Error::Config("sextic problem needs a=<value>".into()))?;
            let b = params[1].clone().unwrap_or_else(Coefficient::zero);
            return Ok(Self { family: Family::Sextic { a, b } });
        }
        Err(Error::Config(format!(
            "unknown problem {id:?}; expected one of: harmonic, rational, sextic:a=<a>,b=<b>"
        )))
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn id(&self) -> String {
        match &self.family {
            Family::Harmonic => "harmonic".into(),
            Family::Rational => "rational".into(),
            Family::Sextic { a, b } => format!("sextic:a={a},b={b}"),
        }
    }

    /// Index of the last missing moment, `m_s`.
    pub fn missing_moment_order(&self) -> usize {
        match self.family {
            Family::Harmonic => 1,
            Family::Sextic { .. } | Family::Rational => 5,
        }
    }

    pub fn is_parity_symmetric(&self) -> bool {
        true
    }

    /// The weight whose Taylor recursion is built in for this family.
    pub fn matched_weight(&self) -> WeightSpec {
        match &self.family {
            Family::Harmonic | Family::Rational => WeightSpec::GaussianHalf,
            Family::Sextic { b, .. } => WeightSpec::FreudQuartic { b: b.clone() },
        }
    }

    /// Default scan window and step.
    pub fn default_window(&self) -> (&'static str, &'static str, &'static str) {
        match self.family {
            Family::Harmonic => ("0", "12", "0.1"),
            Family::Rational => ("-5", "10", "0.05"),
            Family::Sextic { .. } => ("-30", "15", "0.05"),
        }
    }

    /// Recursion terms `(coefficient, source row)` producing moment row `row`
    /// (only called for `row > m_s`). Sources with negative index carry a
    /// vanishing `p(p − 1)` prefactor and contribute zero.
    fn moment_terms(&self, row: usize, energy: &Float, ctx: &PrecisionContext) -> Vec<(Float, isize)> {
        let bits = ctx.bits();
        let e = energy;
        match &self.family {
            Family::Harmonic => {
                let p = row as i64 - 2;
                vec![
                    (Float::with_val(bits, e), p as isize),
                    (ctx.real(p * (p - 1)), p as isize - 2),
                ]
            }
            Family::Sextic { a, b } => {
                let p = row as i64 - 6;
                vec![
                    (Float::with_val(bits, e), p as isize),
                    (ctx.real(p * (p - 1)), p as isize - 2),
                    (-a.value(ctx), p as isize + 2),
                    (-b.value(ctx), p as isize + 4),
                ]
            }
            Family::Rational => {
                let p = row as i64 - 6;
                let e3 = Float::with_val(bits, e * 3u32);
                let c4 = Float::with_val(bits, e - 3u32);
                let c2 = ctx.real(p * (p + 7)) + &e3 + ctx.real(39) / 4u32;
                let c0 = ctx.real(3 * p * (p + 3)) + Float::with_val(bits, e * 9u32) / 4u32 + 18u32;
                let cm2 = ctx.real(9 * p * (p - 1)) / 4u32;
                vec![
                    (c4, p as isize + 4),
                    (c2, p as isize + 2),
                    (c0, p as isize),
                    (cm2, p as isize - 2),
                ]
            }
        }
    }

    /// Moment-transfer table `M_{p,ℓ}(E)` for `p = 0..=n`.
    pub fn moment_table(&self, energy: &Float, n: usize, ctx: &PrecisionContext) -> Result<MomentTable> {
        let ms = self.missing_moment_order();
        if n < ms {
            return Err(Error::Dimension(format!("moment table order {n} is below m_s = {ms}")));
        }
        let bits = ctx.bits();
        let mut rows: Vec<Vec<Float>> = Vec::with_capacity(n + 1);
        for p in 0..=ms {
            let mut row = vec![Float::new(bits); ms + 1];
            row[p] = Float::with_val(bits, 1);
            rows.push(row);
        }
        for r in ms + 1..=n {
            let mut row = vec![Float::new(bits); ms + 1];
            for (coef, src) in self.moment_terms(r, energy, ctx) {
                if src < 0 {
                    debug_assert!(coef.is_zero());
                    continue;
                }
                if coef.is_zero() {
                    continue;
                }
                for (acc, m) in row.iter_mut().zip(&rows[src as usize]) {
                    if !m.is_zero() {
                        *acc += Float::with_val(bits, &coef * m);
                    }
                }
            }
            rows.push(row);
        }
        Ok(MomentTable { energy: Float::with_val(bits, energy), rows })
    }

    fn weight_matches(&self, weight: &WeightSpec, ctx: &PrecisionContext) -> bool {
        match (&self.family, weight) {
            (Family::Harmonic | Family::Rational, WeightSpec::GaussianHalf) => true,
            (Family::Sextic { b, .. }, WeightSpec::FreudQuartic { b: wb }) => b.value(ctx) == wb.value(ctx),
            _ => false,
        }
    }

    /// Taylor-transfer table `T_{n,0}(E)`, `T_{n,1}(E)` for the coefficients of
    /// `ψ/R` with `R` the family's matched weight.
    pub fn taylor_table(
        &self,
        weight: &WeightSpec,
        energy: &Float,
        n: usize,
        variant: TaylorVariant,
        ctx: &PrecisionContext,
    ) -> Result<TaylorTable> {
        if !self.weight_matches(weight, ctx) {
            return Err(Error::Config(format!(
                "no Taylor recursion for problem {} with weight {}; use weight {}",
                self.id(),
                weight.id(),
                self.matched_weight().id()
            )));
        }
        let bits = ctx.bits();
        let mut rows: Vec<[Float; 2]> = Vec::with_capacity(n + 1);
        rows.push([Float::with_val(bits, 1), Float::new(bits)]);
        if n >= 1 {
            rows.push([Float::new(bits), Float::with_val(bits, 1)]);
        }
        for k in 2..=n {
            let mut next = [Float::new(bits), Float::new(bits)];
            for (coef, src) in self.taylor_terms(k, energy, variant, ctx) {
                if src < 0 {
                    continue;
                }
                for col in 0..2 {
                    let t = &rows[src as usize][col];
                    if !t.is_zero() {
                        next[col] += Float::with_val(bits, &coef * t);
                    }
                }
            }
            rows.push(next);
        }
        Ok(TaylorTable { energy: Float::with_val(bits, energy), rows })
    }

    /// Terms `(coefficient, source index)` giving `c_k` for `k ≥ 2`.
    fn taylor_terms(
        &self,
        k: usize,
        energy: &Float,
        variant: TaylorVariant,
        ctx: &PrecisionContext,
    ) -> Vec<(Float, isize)> {
        let bits = ctx.bits();
        let n = k as i64 - 2;
        let e = energy;
        let ni = n as isize;
        match &self.family {
            Family::Harmonic => {
                let d = ctx.real((n + 1) * (n + 2));
                let c = (ctx.real(2 * n + 1) - e) / d;
                vec![(c, ni)]
            }
            Family::Sextic { a, b } => {
                let d = ctx.real((n + 1) * (n + 2));
                let b = b.value(ctx);
                let b2 = Float::with_val(bits, b.square_ref()) / 4u32;
                let cm2 = (a.value(ctx) + ctx.real(2 * n - 1) - b2) / &d;
                let half = ctx.real(n) + 0.5f64;
                let c0 = (Float::with_val(bits, &b * &half) - e) / &d;
                vec![(cm2, ni - 2), (c0, ni)]
            }
            Family::Rational => {
                let d = ctx.real(9 * (n + 1) * (n + 2));
                let e3 = Float::with_val(bits, e * 3u32);
                let cm4 = (ctx.real(2 * n - 7) - e) * 4u32 / &d;
                let cm2 = (ctx.real(n * (11 - n) - 15) - &e3) * 4u32 / &d;
                let quad = match variant {
                    TaylorVariant::Standard => 2 * n * (2 * n - 5),
                    TaylorVariant::Legacy3n => 2 * n * (3 * n - 5),
                };
                let c0 = -(ctx.real(13 + quad) + &e3) * 3u32 / &d;
                vec![(cm4, ni - 4), (cm2, ni - 2), (c0, ni)]
            }
        }
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Moment-transfer coefficients at one energy: `μ_p = Σ_ℓ M_{p,ℓ} μ_ℓ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub energy: Float,
    rows: Vec<Vec<Float>>,
}

impl MomentTable {
    /// Row `M_{p,·}`.
    pub fn row(&self, p: usize) -> &[Float] {
        &self.rows[p]
    }

    pub fn entry(&self, p: usize, l: usize) -> &Float {
        &self.rows[p][l]
    }

    /// Highest moment order `N`.
    pub fn order(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }

    /// All moments `μ_0..μ_N` generated from the missing moments.
    pub fn moments(&self, missing: &[Float]) -> Result<Vec<Float>> {
        if missing.len() != self.width() {
            return Err(Error::Dimension(format!(
                "expected {} missing moments, got {}",
                self.width(),
                missing.len()
            )));
        }
        let prec = self.energy.prec();
        Ok(self
            .rows
            .iter()
            .map(|row| {
                let mut acc = Float::new(prec);
                for (m, mu) in row.iter().zip(missing) {
                    if !m.is_zero() {
                        acc += Float::with_val(prec, m * mu);
                    }
                }
                acc
            })
            .collect())
    }
}

/// Taylor-transfer coefficients at one energy: `c_n = T_{n,0} c_0 + T_{n,1} c_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorTable {
    pub energy: Float,
    rows: Vec<[Float; 2]>,
}

impl TaylorTable {
    pub fn entry(&self, n: usize, seed: usize) -> &Float {
        &self.rows[n][seed]
    }

    pub fn order(&self) -> usize {
        self.rows.len() - 1
    }

    /// Coefficients `c_0..c_N` for the given seeds.
    pub fn coefficients(&self, c0: &Float, c1: &Float) -> Vec<Float> {
        let prec = self.energy.prec();
        self.rows
            .iter()
            .map(|[t0, t1]| Float::with_val(prec, t0 * c0) + Float::with_val(prec, t1 * c1))
            .collect()
    }
}

/// Positive reference function `R(x)` multiplying the polynomial expansion.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    /// `e^{−x²/2}`
    GaussianHalf,
    /// `e^{−(x⁴ + b x²)/4}`
    FreudQuartic { b: Coefficient },
    /// `e^{−x²/2} / (1 + 2x²/3)`, the rational problem's ground state.
    RationalGroundState,
    /// A weight known only through the listed power moments `s_0, s_1, …`.
    MomentsOnly(Vec<Float>),
}

impl WeightSpec {
    /// Parses `gaussian`, `freud4:b=<b>` (`b` defaults to 0), or `ground-state`.
    pub fn parse(id: &str) -> Result<Self> {
        let id = id.trim();
        match id {
            "gaussian" => return Ok(Self::GaussianHalf),
            "ground-state" => return Ok(Self::RationalGroundState),
            "freud4" => return Ok(Self::FreudQuartic { b: Coefficient::zero() }),
            _ => {}
        }
        if let Some(params) = id.strip_prefix("freud4:") {
            let params = parse_params(params, &["b"])?;
            let b = params[0].clone().unwrap_or_else(Coefficient::zero);
            return Ok(Self::FreudQuartic { b });
        }
        Err(Error::Config(format!(
            "unknown weight {id:?}; expected one of: gaussian, freud4:b=<b>, ground-state"
        )))
    }

    pub fn id(&self) -> String {
        match self {
            Self::GaussianHalf => "gaussian".into(),
            Self::FreudQuartic { b } => format!("freud4:b={b}"),
            Self::RationalGroundState => "ground-state".into(),
            Self::MomentsOnly(_) => "moments-only".into(),
        }
    }

    /// `R(x)` in closed form; `None` for moment-only weights.
    pub fn value(&self, x: &Float, ctx: &PrecisionContext) -> Option<Float> {
        let bits = ctx.bits();
        let x2 = Float::with_val(bits, x.square_ref());
        match self {
            Self::GaussianHalf => Some((-x2 / 2u32).exp()),
            Self::FreudQuartic { b } => {
                let x4 = Float::with_val(bits, x2.square_ref());
                let arg = x4 + b.value(ctx) * x2;
                Some((-arg / 4u32).exp())
            }
            Self::RationalGroundState => Some(ground_state_value(x, ctx)),
            Self::MomentsOnly(_) => None,
        }
    }

    /// Power moments `s_p = ∫ x^p R(x) dx` for `p = 0..=max_order`.
    pub fn moments(&self, max_order: usize, ctx: &PrecisionContext) -> Result<WeightMoments> {
        let bits = ctx.bits();
        let mut s = vec![Float::new(bits); max_order + 1];
        match self {
            Self::GaussianHalf => {
                let gauss = gaussian_moments(max_order, ctx);
                s = gauss;
            }
            Self::FreudQuartic { b } => {
                let b = b.value(ctx);
                let quartic = {
                    let b = b.clone();
                    move |x: &Float| {
                        let x2 = Float::with_val(x.prec(), x.square_ref());
                        let x4 = Float::with_val(x.prec(), x2.square_ref());
                        (-(x4 + Float::with_val(x.prec(), &b * &x2)) / 4u32).exp()
                    }
                };
                s[0] = integrate_line(&quartic, ctx.digits(), ctx)?;
                if max_order >= 2 {
                    s[2] = integrate_line(
                        |x: &Float| Float::with_val(x.prec(), x.square_ref()) * quartic(x),
                        ctx.digits(),
                        ctx,
                    )?;
                }
                let half_b = Float::with_val(bits, &b / 2u32);
                for p in (4..=max_order).step_by(2) {
                    let lower = Float::with_val(bits, &s[p - 4] * (p as u32 - 3));
                    s[p] = lower - Float::with_val(bits, &half_b * &s[p - 2]);
                }
            }
            Self::RationalGroundState => {
                let gauss = gaussian_moments(max_order, ctx);
                s[0] = integrate_line(|x| ground_state_at(x, x.prec()), ctx.digits(), ctx)?;
                for p in (2..=max_order).step_by(2) {
                    let diff = Float::with_val(bits, &gauss[p - 2] - &s[p - 2]);
                    s[p] = diff * 3u32 / 2u32;
                }
            }
            Self::MomentsOnly(values) => {
                if values.len() <= max_order {
                    return Err(Error::Dimension(format!(
                        "weight has {} explicit moments, {} requested",
                        values.len(),
                        max_order + 1
                    )));
                }
                s = values[..=max_order].iter().map(|v| Float::with_val(bits, v)).collect();
            }
        }
        Ok(WeightMoments { values: s })
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

fn gaussian_moments(max_order: usize, ctx: &PrecisionContext) -> Vec<Float> {
    let bits = ctx.bits();
    let mut s = vec![Float::new(bits); max_order + 1];
    s[0] = (ctx.real(Constant::Pi) * 2u32).sqrt();
    for p in (2..=max_order).step_by(2) {
        s[p] = Float::with_val(bits, &s[p - 2] * (p as u32 - 1));
    }
    s
}

/// Power moments `s_p` of a weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMoments {
    values: Vec<Float>,
}

impl WeightMoments {
    pub fn new(values: Vec<Float>) -> Result<Self> {
        if values.is_empty() || values[0] <= 0 {
            return Err(Error::Precondition("s_0 must be positive".into()));
        }
        Ok(Self { values })
    }

    pub fn get(&self, p: usize) -> &Float {
        &self.values[p]
    }

    pub fn as_slice(&self) -> &[Float] {
        &self.values
    }

    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    /// True when every odd moment is exactly zero.
    pub fn is_even(&self) -> bool {
        self.values.iter().skip(1).step_by(2).all(Float::is_zero)
    }

    /// Leading principal minors `det[s_{i+j}]_{0≤i,j≤k}` for `k = 0..=max_k`.
    pub fn hankel_minors(&self, max_k: usize, ctx: &PrecisionContext) -> Result<Vec<crate::precision::SignLogDet>> {
        if 2 * max_k > self.max_order() {
            return Err(Error::Dimension(format!(
                "Hankel order {max_k} needs moments through {}",
                2 * max_k
            )));
        }
        (0..=max_k)
            .map(|k| {
                let rows = (0..=k)
                    .map(|i| (0..=k).map(|j| self.values[i + j].clone()).collect())
                    .collect();
                crate::precision::det_sign_log(&crate::precision::Matrix::from_rows(rows)?, ctx)
            })
            .collect()
    }
}

/// Exact rational-problem ground state `e^{−x²/2}/(1 + 2x²/3)` at a real point.
pub fn ground_state_value(x: &Float, ctx: &PrecisionContext) -> Float {
    ground_state_at(x, ctx.bits())
}

fn ground_state_at(x: &Float, bits: u32) -> Float {
    let x2 = Float::with_val(bits, x.square_ref());
    let denom = Float::with_val(bits, &x2 * 2u32) / 3u32 + 1u32;
    (-x2 / 2u32).exp() / denom
}

/// `Ψ_gr / R` for `R = e^{−x²/2}`, i.e. `1/(1 + 2z²/3)`, at a complex point.
pub fn ground_state_ratio(z: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let bits = ctx.bits();
    let z2 = Complex::with_val(bits, z.square_ref());
    let denom = z2 * 2u32 / 3u32 + 1u32;
    let size = Float::with_val(bits, denom.abs_ref());
    if size <= ctx.zero_threshold(10) {
        return Err(Error::Singular(format!(
            "1 + 2z²/3 vanishes at z = {} (poles at ±i√(3/2))",
            Complex::with_val(53, z)
        )));
    }
    Ok(Complex::with_val(bits, 1) / denom)
}

/// Exact ground state at a complex point.
pub fn ground_state_value_complex(z: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let bits = ctx.bits();
    let ratio = ground_state_ratio(z, ctx)?;
    let gauss = (-Complex::with_val(bits, z.square_ref()) / 2u32).exp();
    Ok(ratio * gauss)
}

/// Poles of the rational ground state, `±i√(3/2)`.
pub fn rational_ground_state_poles(ctx: &PrecisionContext) -> [Complex; 2] {
    let bits = ctx.bits();
    let a = (ctx.real(3) / 2u32).sqrt();
    [
        Complex::with_val(bits, (0, a.clone())),
        Complex::with_val(bits, (0, -a)),
    ]
}

/// Parses `key=value,key=value` against an ordered list of known keys.
fn parse_params(text: &str, keys: &[&str]) -> Result<Vec<Option<Coefficient>>> {
    let mut out = vec![None; keys.len()];
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {part:?}")))?;
        let slot = keys
            .iter()
            .position(|k| *k == key.trim())
            .ok_or_else(|| Error::Config(format!("unknown parameter {key:?}")))?;
        out[slot] = Some(Coefficient::parse(value)?);
    }
    Ok(out)
}

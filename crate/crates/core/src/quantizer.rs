//! Energy quantization from determinantal conditions.
//!
//! * **OPPQ**: the projection coefficients `Ω_n`, linear in the missing
//!   moments, must vanish for `N ≤ n ≤ N + m_s`.
//! * **Global-local**: the Taylor coefficients of the truncated expansion,
//!   `Σ_{j=n}^{N} Ξ_n^{(j)} Ω_j`, must equal the Frobenius coefficients
//!   `T_{n,0} c_0 + T_{n,1} c_1` for `n = 0..=m_s+2`.
//! * **Hill**: the Frobenius series is truncated, `c_N(E) = 0`, per parity
//!   sector.
//!
//! For parity-symmetric problems every system splits into an even and an odd
//! block. Spectra are scanned per block so that near-degenerate pairs of
//! opposite parity are never lost between two grid points.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use rug::Float;

use crate::error::{Error, Result};
use crate::orthopoly::OrthoBasis;
use crate::precision::{bisect, bracket_roots, det_sign_log, Bracket, Matrix, PrecisionContext, SignLogDet};
use crate::problems::{MomentTable, ProblemSpec, TaylorVariant, WeightSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Oppq,
    GlobalLocal,
    Hill,
}

impl Method {
    pub fn id(&self) -> &'static str {
        match self {
            Method::Oppq => "oppq",
            Method::GlobalLocal => "global_local",
            Method::Hill => "hill",
        }
    }

    pub const ALL: [Method; 3] = [Method::Oppq, Method::GlobalLocal, Method::Hill];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "oppq" => Ok(Method::Oppq),
            "global_local" | "global-local" => Ok(Method::GlobalLocal),
            "hill" => Ok(Method::Hill),
            other => Err(Error::Config(format!(
                "unknown method {other:?}; expected one of: oppq, global_local, hill"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(index: usize) -> Self {
        if index % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }

    /// Largest order `≤ n` belonging to this sector.
    pub fn sector_order(&self, n: usize) -> usize {
        if Parity::of(n) == *self {
            n
        } else {
            n.saturating_sub(1)
        }
    }
}

/// `Ω_j = Σ_ℓ W_{j,ℓ}(E) μ_ℓ` with `W = Ξ · M`.
#[derive(Clone, Debug)]
pub struct OmegaForms {
    pub energy: Float,
    w: Vec<Vec<Float>>,
}

impl OmegaForms {
    pub fn entry(&self, j: usize, l: usize) -> &Float {
        &self.w[j][l]
    }

    pub fn row(&self, j: usize) -> &[Float] {
        &self.w[j]
    }

    pub fn order(&self) -> usize {
        self.w.len() - 1
    }

    /// `Ω_0..Ω_N` for the given missing moments.
    pub fn omegas(&self, missing: &[Float]) -> Result<Vec<Float>> {
        if missing.len() != self.w[0].len() {
            return Err(Error::Dimension(format!(
                "expected {} missing moments, got {}",
                self.w[0].len(),
                missing.len()
            )));
        }
        let prec = self.energy.prec();
        Ok(self.w.iter().map(|row| dot(row, missing, prec)).collect())
    }
}

/// Projection forms for `j = 0..=N` where `N` is the moment table's order.
pub fn omega_forms(basis: &OrthoBasis, table: &MomentTable) -> Result<OmegaForms> {
    let n = table.order();
    if basis.degree() < n {
        return Err(Error::Dimension(format!(
            "basis degree {} below moment order {n}",
            basis.degree()
        )));
    }
    let prec = table.energy.prec();
    let w = (0..=n).map(|j| omega_row(basis, table, j, prec)).collect();
    Ok(OmegaForms { energy: table.energy.clone(), w })
}

fn omega_row(basis: &OrthoBasis, table: &MomentTable, j: usize, prec: u32) -> Vec<Float> {
    let width = table.width();
    let mut row = vec![Float::new(prec); width];
    for (i, xi) in basis.polynomial(j).iter().enumerate() {
        if xi.is_zero() {
            continue;
        }
        for (acc, m) in row.iter_mut().zip(table.row(i)) {
            if !m.is_zero() {
                *acc += Float::with_val(prec, xi * m);
            }
        }
    }
    row
}

fn dot(a: &[Float], b: &[Float], prec: u32) -> Float {
    let mut acc = Float::new(prec);
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += Float::with_val(prec, x * y);
        }
    }
    acc
}

/// The energy-dependent linear system of one method.
#[derive(Clone, Debug)]
pub struct QuantizationMatrix {
    pub method: Method,
    pub energy: Float,
    pub entries: Matrix,
    row_parity: Vec<Parity>,
    col_parity: Vec<Parity>,
}

impl QuantizationMatrix {
    /// Rows and columns of one parity, which form a closed block.
    pub fn block(&self, parity: Parity) -> Matrix {
        let rows: Vec<usize> = (0..self.row_parity.len()).filter(|&r| self.row_parity[r] == parity).collect();
        let cols: Vec<usize> = (0..self.col_parity.len()).filter(|&c| self.col_parity[c] == parity).collect();
        self.entries.select(&rows, &cols)
    }

    /// Column indices of the unknowns belonging to `parity`.
    pub fn unknowns(&self, parity: Parity) -> Vec<usize> {
        (0..self.col_parity.len()).filter(|&c| self.col_parity[c] == parity).collect()
    }
}

/// A refined root of a quantization determinant.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRoot {
    pub energy: Float,
    pub method: Method,
    pub order: usize,
    pub bracket_width: Float,
    /// Position in the ascending spectrum of its scan.
    pub level_index: usize,
    /// Sector the root was found in, when scanned per parity.
    pub parity: Option<Parity>,
}

/// One method applied to one problem/weight pair at truncation order `N`.
#[derive(Clone, Debug)]
pub struct Quantizer {
    problem: ProblemSpec,
    weight: WeightSpec,
    method: Method,
    order: usize,
    ctx: PrecisionContext,
    basis: Option<Arc<OrthoBasis>>,
    /// `K_{n,i} = Σ_{j=max(n,i)}^{N} Ξ_n^{(j)} Ξ_i^{(j)}` for the global-local rows.
    kernel: Vec<Vec<Float>>,
    variant: TaylorVariant,
}

impl Quantizer {
    /// Builds weight moments and the orthonormal basis as the method needs.
    pub fn new(
        problem: ProblemSpec,
        weight: WeightSpec,
        method: Method,
        order: usize,
        ctx: PrecisionContext,
    ) -> Result<Self> {
        let basis = match method {
            Method::Hill => None,
            Method::Oppq | Method::GlobalLocal => {
                let top = top_order(&problem, method, order);
                let moments = weight.moments(2 * top + 2, &ctx)?;
                Some(Arc::new(OrthoBasis::build(&moments, top, &ctx)?))
            }
        };
        Self::assemble(problem, weight, method, order, ctx, basis)
    }

    /// Reuses a basis of degree at least [`Quantizer::top_order`] (for sweeps over `N`).
    pub fn with_basis(
        problem: ProblemSpec,
        weight: WeightSpec,
        method: Method,
        order: usize,
        basis: Arc<OrthoBasis>,
        ctx: PrecisionContext,
    ) -> Result<Self> {
        let top = top_order(&problem, method, order);
        if basis.degree() < top {
            return Err(Error::Dimension(format!("basis degree {} below {top}", basis.degree())));
        }
        Self::assemble(problem, weight, method, order, ctx, Some(basis))
    }

    fn assemble(
        problem: ProblemSpec,
        weight: WeightSpec,
        method: Method,
        order: usize,
        ctx: PrecisionContext,
        basis: Option<Arc<OrthoBasis>>,
    ) -> Result<Self> {
        let ms = problem.missing_moment_order();
        match method {
            Method::Oppq if order == 0 => {
                return Err(Error::Precondition("truncation order must be positive".into()));
            }
            Method::GlobalLocal if order <= ms + 2 => {
                return Err(Error::Precondition(format!(
                    "truncation order {order} must exceed m_s + 2 = {}",
                    ms + 2
                )));
            }
            Method::Hill if order < 2 => {
                return Err(Error::Precondition("Hill truncation order must be at least 2".into()));
            }
            _ => {}
        }
        if matches!(method, Method::GlobalLocal | Method::Hill) {
            // validates the weight/family pairing
            problem.taylor_table(&weight, &ctx.zero(), 0, TaylorVariant::Standard, &ctx)?;
        }
        if method != Method::Hill && !problem.is_parity_symmetric() {
            return Err(Error::Config("only parity-symmetric problems are supported".into()));
        }
        let mut kernel = Vec::new();
        if method == Method::GlobalLocal {
            let basis = basis.as_ref().expect("basis present for global-local");
            let bits = ctx.bits();
            for n in 0..=ms + 2 {
                let row = (0..=order)
                    .map(|i| {
                        let mut acc = Float::new(bits);
                        for j in n.max(i)..=order {
                            let p = basis.polynomial(j);
                            if !p[n].is_zero() && !p[i].is_zero() {
                                acc += Float::with_val(bits, &p[n] * &p[i]);
                            }
                        }
                        acc
                    })
                    .collect();
                kernel.push(row);
            }
        }
        Ok(Self { problem, weight, method, order, ctx, basis, kernel, variant: TaylorVariant::Standard })
    }

    pub fn with_taylor_variant(mut self, variant: TaylorVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn weight(&self) -> &WeightSpec {
        &self.weight
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Highest `Ω` index entering the system: `N + m_s` for OPPQ, `N` otherwise.
    pub fn top_order(&self) -> usize {
        top_order(&self.problem, self.method, self.order)
    }

    pub fn context(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn basis(&self) -> Option<&Arc<OrthoBasis>> {
        self.basis.as_ref()
    }

    pub fn taylor_variant(&self) -> TaylorVariant {
        self.variant
    }

    /// `Ω` forms for `j = 0..=top_order` at `energy`.
    pub fn omega_forms(&self, energy: &Float) -> Result<OmegaForms> {
        let basis = self.require_basis()?;
        let table = self.problem.moment_table(energy, self.top_order(), &self.ctx)?;
        omega_forms(basis, &table)
    }

    fn require_basis(&self) -> Result<&Arc<OrthoBasis>> {
        self.basis
            .as_ref()
            .ok_or_else(|| Error::Precondition("the Hill method has no polynomial basis".into()))
    }

    /// The full system at `energy`. For Hill this is `diag(c_N^even, c_N^odd)`.
    pub fn build_matrix(&self, energy: &Float) -> Result<QuantizationMatrix> {
        let ms = self.problem.missing_moment_order();
        let ctx = &self.ctx;
        match self.method {
            Method::Oppq => {
                let basis = self.require_basis()?;
                let top = self.top_order();
                let table = self.problem.moment_table(energy, top, ctx)?;
                let rows: Vec<usize> = (self.order..=top).collect();
                let entries = Matrix::from_rows(
                    rows.iter().map(|&j| omega_row(basis, &table, j, ctx.bits())).collect(),
                )?;
                Ok(QuantizationMatrix {
                    method: self.method,
                    energy: energy.clone(),
                    entries,
                    row_parity: rows.iter().map(|&r| Parity::of(r)).collect(),
                    col_parity: (0..=ms).map(Parity::of).collect(),
                })
            }
            Method::GlobalLocal => {
                let table = self.problem.moment_table(energy, self.order, ctx)?;
                let taylor = self.problem.taylor_table(&self.weight, energy, ms + 2, self.variant, ctx)?;
                let bits = ctx.bits();
                let rows = (0..=ms + 2)
                    .map(|n| {
                        let mut row = vec![Float::new(bits); ms + 3];
                        for (i, k) in self.kernel[n].iter().enumerate() {
                            if k.is_zero() {
                                continue;
                            }
                            for (acc, m) in row.iter_mut().zip(table.row(i)) {
                                if !m.is_zero() {
                                    *acc += Float::with_val(bits, k * m);
                                }
                            }
                        }
                        row[ms + 1] = -taylor.entry(n, 0).clone();
                        row[ms + 2] = -taylor.entry(n, 1).clone();
                        row
                    })
                    .collect();
                let mut col_parity: Vec<Parity> = (0..=ms).map(Parity::of).collect();
                col_parity.extend([Parity::Even, Parity::Odd]);
                Ok(QuantizationMatrix {
                    method: self.method,
                    energy: energy.clone(),
                    entries: Matrix::from_rows(rows)?,
                    row_parity: (0..=ms + 2).map(Parity::of).collect(),
                    col_parity,
                })
            }
            Method::Hill => {
                let mut entries = Matrix::zeros(2, 2, ctx);
                entries[(0, 0)] = self.hill_coefficient(energy, Parity::Even)?;
                entries[(1, 1)] = self.hill_coefficient(energy, Parity::Odd)?;
                Ok(QuantizationMatrix {
                    method: self.method,
                    energy: energy.clone(),
                    entries,
                    row_parity: vec![Parity::Even, Parity::Odd],
                    col_parity: vec![Parity::Even, Parity::Odd],
                })
            }
        }
    }

    /// The block of one parity sector (Hill: the 1×1 matrix `c_N(E)`).
    pub fn sector_matrix(&self, energy: &Float, parity: Parity) -> Result<Matrix> {
        if self.method == Method::Hill {
            let c = self.hill_coefficient(energy, parity)?;
            return Matrix::from_rows(vec![vec![c]]);
        }
        Ok(self.build_matrix(energy)?.block(parity))
    }

    /// `c_N(E)` for the sector's seeds (`c_0 = 1` or `c_1 = 1`) with `N` the
    /// largest order of that parity not above the truncation order. MPFR's
    /// exponent range absorbs the growth of the sequence, so no rescaling.
    pub fn hill_coefficient(&self, energy: &Float, parity: Parity) -> Result<Float> {
        let n = parity.sector_order(self.order);
        let table = self.problem.taylor_table(&self.weight, energy, n, self.variant, &self.ctx)?;
        let seed = match parity {
            Parity::Even => 0,
            Parity::Odd => 1,
        };
        Ok(table.entry(n, seed).clone())
    }

    /// `det` of the full system.
    pub fn determinant_at(&self, energy: &Float) -> Result<SignLogDet> {
        det_sign_log(&self.build_matrix(energy)?.entries, &self.ctx)
    }

    /// `det` of one parity block.
    pub fn sector_determinant(&self, energy: &Float, parity: Parity) -> Result<SignLogDet> {
        det_sign_log(&self.sector_matrix(energy, parity)?, &self.ctx)
    }

    /// All roots in `[lo, hi]` on a grid of spacing `step`, bisected to `tol`,
    /// sorted ascending. An empty spectrum is a valid result.
    pub fn scan_spectrum(&self, lo: &Float, hi: &Float, step: &Float, tol: &Float) -> Result<Vec<EnergyRoot>> {
        let mut roots = Vec::new();
        for parity in [Parity::Even, Parity::Odd] {
            let f = |e: &Float| self.sector_determinant(e, parity);
            let brackets = bracket_roots(f, lo, hi, step)?;
            let refined: Vec<_> = brackets
                .par_iter()
                .map(|b| bisect(f, b, tol))
                .collect::<Result<_>>()?;
            roots.extend(refined.into_iter().map(|r| EnergyRoot {
                energy: r.value,
                method: self.method,
                order: self.order,
                bracket_width: r.width,
                level_index: 0,
                parity: Some(parity),
            }));
        }
        roots.sort_by(|a, b| a.energy.partial_cmp(&b.energy).expect("finite energies"));
        for (i, r) in roots.iter_mut().enumerate() {
            r.level_index = i;
        }
        Ok(roots)
    }

    /// Bisects a root's sector determinant further, to width `tol`.
    pub fn refine_root(&self, root: &EnergyRoot, tol: &Float) -> Result<EnergyRoot> {
        let parity = root
            .parity
            .ok_or_else(|| Error::Precondition("root carries no parity sector".into()))?;
        let prec = self.ctx.bits();
        let half = Float::with_val(prec, &root.bracket_width / 2u32);
        let bracket = Bracket::new(
            Float::with_val(prec, &root.energy - &half),
            Float::with_val(prec, &root.energy + &half),
        );
        let f = |e: &Float| self.sector_determinant(e, parity);
        let refined = bisect(f, &bracket, tol)?;
        Ok(EnergyRoot { energy: refined.value, bracket_width: refined.width, ..root.clone() })
    }
}

fn top_order(problem: &ProblemSpec, method: Method, order: usize) -> usize {
    match method {
        Method::Oppq => order + problem.missing_moment_order(),
        _ => order,
    }
}

/// Status of one tracked level across increasing `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrackStatus {
    /// Present in the last run and moved less than the convergence tolerance.
    Converged,
    /// Present in the last run but still moving.
    Drifting,
    /// Disappeared before the last run.
    Lost,
}

impl TrackStatus {
    pub fn id(&self) -> &'static str {
        match self {
            TrackStatus::Converged => "converged",
            TrackStatus::Drifting => "drifting",
            TrackStatus::Lost => "lost",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LevelTrack {
    pub entries: Vec<EnergyRoot>,
    pub status: TrackStatus,
}

impl LevelTrack {
    pub fn last(&self) -> &EnergyRoot {
        self.entries.last().expect("tracks are never empty")
    }

    pub fn parity(&self) -> Option<Parity> {
        self.entries[0].parity
    }
}

/// Roots of successive runs linked into per-level tracks.
#[derive(Clone, Debug)]
pub struct ConvergenceTrack {
    pub orders: Vec<usize>,
    pub tracks: Vec<LevelTrack>,
}

impl ConvergenceTrack {
    /// Tracks still alive at the last run, sorted by final energy.
    pub fn surviving(&self) -> Vec<&LevelTrack> {
        self.tracks.iter().filter(|t| t.status != TrackStatus::Lost).collect()
    }
}

/// Links roots of consecutive runs (ordered by increasing `N`) by nearest
/// neighbour within `match_tol`, never across parity sectors.
pub fn track_convergence(runs: &[Vec<EnergyRoot>], match_tol: f64, conv_tol: f64) -> Result<ConvergenceTrack> {
    if runs.len() < 2 {
        return Err(Error::Precondition("convergence tracking needs at least two runs".into()));
    }
    let orders: Vec<usize> = runs.iter().map(|r| r.first().map_or(0, |x| x.order)).collect();
    let mut tracks: Vec<(Vec<EnergyRoot>, usize)> =
        runs[0].iter().map(|r| (vec![r.clone()], 0)).collect();

    for (k, run) in runs.iter().enumerate().skip(1) {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (t, (entries, last_run)) in tracks.iter().enumerate() {
            if *last_run != k - 1 {
                continue;
            }
            let prev = entries.last().expect("non-empty");
            for (r, root) in run.iter().enumerate() {
                if let (Some(a), Some(b)) = (prev.parity, root.parity) {
                    if a != b {
                        continue;
                    }
                }
                let d = Float::with_val(53, &root.energy - &prev.energy).abs().to_f64();
                if d <= match_tol {
                    pairs.push((d, t, r));
                }
            }
        }
        pairs.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let mut track_used = vec![false; tracks.len()];
        let mut root_used = vec![false; run.len()];
        for (_, t, r) in pairs {
            if track_used[t] || root_used[r] {
                continue;
            }
            track_used[t] = true;
            root_used[r] = true;
            tracks[t].0.push(run[r].clone());
            tracks[t].1 = k;
        }
        for (r, root) in run.iter().enumerate() {
            if !root_used[r] {
                tracks.push((vec![root.clone()], k));
            }
        }
    }

    let last = runs.len() - 1;
    let mut out: Vec<LevelTrack> = tracks
        .into_iter()
        .map(|(entries, last_run)| {
            let status = if last_run != last {
                TrackStatus::Lost
            } else if entries.len() >= 2 {
                let n = entries.len();
                let d = Float::with_val(53, &entries[n - 1].energy - &entries[n - 2].energy).abs();
                if d.to_f64() < conv_tol {
                    TrackStatus::Converged
                } else {
                    TrackStatus::Drifting
                }
            } else {
                TrackStatus::Drifting
            };
            LevelTrack { entries, status }
        })
        .collect();
    out.sort_by(|a, b| a.last().energy.partial_cmp(&b.last().energy).expect("finite"));
    Ok(ConvergenceTrack { orders, tracks: out })
}

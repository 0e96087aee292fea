//! `solve`, `reconstruct`, `map` and `moments`.

use std::collections::HashMap;
use std::fmt::Write as _;

use oppq_core::quantizer::{track_convergence, EnergyRoot, Method, Quantizer};
use oppq_core::reconstructor::{
    convergence_map, evaluate_wavefunction, reconstruction_taylor, solve_state, taylor_disk_map, verify_moment_match,
    ConvergenceMap, ReconstructedState,
};
use rug::{Complex, Float};

use crate::config::{parse_orders, parse_pair, RunConfig, Settings};
use crate::error::CliError;
use crate::exact::Exact;
use crate::output::{render_table, short, sig, write_csv, TableBlock};

/// What a command prints on success.
pub struct Report {
    pub text: String,
}

fn scan_bounds(cfg: &RunConfig) -> Result<[Float; 4], CliError> {
    let ctx = &cfg.ctx;
    Ok([ctx.parse(&cfg.window.0)?, ctx.parse(&cfg.window.1)?, ctx.parse(&cfg.step)?, ctx.parse(&cfg.tol)?])
}

/// Quantizers for every order of the sweep, sharing one basis.
fn sweep(cfg: &RunConfig, method: Method) -> Result<Vec<Quantizer>, CliError> {
    let top = cfg.top_order();
    let base = Quantizer::new(cfg.problem.clone(), cfg.weight.clone(), method, top, cfg.ctx)?;
    let mut out = Vec::with_capacity(cfg.orders.len());
    for &n in &cfg.orders {
        let q = match base.basis() {
            _ if n == top => base.clone(),
            Some(b) => Quantizer::with_basis(cfg.problem.clone(), cfg.weight.clone(), method, n, b.clone(), cfg.ctx)?,
            None => Quantizer::new(cfg.problem.clone(), cfg.weight.clone(), method, n, cfg.ctx)?,
        };
        out.push(q);
    }
    Ok(out)
}

pub fn solve(cfg: &RunConfig, s: &Settings) -> Result<Report, CliError> {
    let levels: usize = s.parsed("levels", 4)?;
    let match_tol: f64 = s.parsed("match_tol", 0.5)?;
    let conv_tol: f64 = s.parsed("conv_tol", 1e-6)?;
    let [lo, hi, step, tol] = scan_bounds(cfg)?;

    let mut rows = Vec::new();
    let mut blocks = Vec::new();
    for &method in &cfg.methods {
        let runs = sweep(cfg, method)?
            .iter()
            .map(|q| q.scan_spectrum(&lo, &hi, &step, &tol))
            .collect::<Result<Vec<_>, _>>()?;
        let mut status: HashMap<(usize, usize), &'static str> = HashMap::new();
        if runs.len() >= 2 {
            for track in track_convergence(&runs, match_tol, conv_tol)?.tracks {
                for r in &track.entries {
                    status.insert((r.order, r.level_index), track.status.id());
                }
            }
        }
        for (n, run) in cfg.orders.iter().zip(&runs) {
            for r in run {
                rows.push(vec![
                    method.id().to_string(),
                    cfg.problem.id(),
                    cfg.weight.id(),
                    n.to_string(),
                    r.level_index.to_string(),
                    sig(&r.energy),
                    short(&r.bracket_width),
                    status.get(&(*n, r.level_index)).copied().unwrap_or("single").to_string(),
                ]);
            }
        }
        blocks.push(TableBlock {
            title: format!("{}  problem {}  weight {}", method.id(), cfg.problem.id(), cfg.weight.id()),
            rows: cfg
                .orders
                .iter()
                .zip(&runs)
                .map(|(n, run)| (*n, run.iter().take(levels).map(|r| Some(r.energy.clone())).collect()))
                .collect(),
        });
    }
    let header = ["method", "problem_id", "weight_id", "N", "level_index", "energy_30digits", "bracket_width", "status"];
    write_csv(&cfg.out, "spectrum.csv", &header, &rows)?;
    let table = render_table(&blocks, levels);
    std::fs::write(cfg.out.join("spectrum.txt"), &table)?;
    Ok(Report { text: table })
}

/// Scans at the top order and picks the requested level.
fn locate(cfg: &RunConfig, s: &Settings) -> Result<(Quantizer, EnergyRoot), CliError> {
    let method = cfg.single_method()?;
    if method == Method::Hill {
        return Err(CliError::Usage("hill roots carry no moments to reconstruct from; use oppq or global_local".into()));
    }
    let q = Quantizer::new(cfg.problem.clone(), cfg.weight.clone(), method, cfg.top_order(), cfg.ctx)?;
    let [lo, hi, step, tol] = scan_bounds(cfg)?;
    let roots = q.scan_spectrum(&lo, &hi, &step, &tol)?;
    let listing = || {
        let found: Vec<String> = roots.iter().map(|r| format!("{}: {:.9}", r.level_index, r.energy.to_f64())).collect();
        if found.is_empty() {
            "none in the scan window".to_string()
        } else {
            found.join(", ")
        }
    };
    let root = if let Some(e) = s.get("energy") {
        let e = cfg.ctx.parse(e)?;
        roots
            .iter()
            .min_by(|a, b| {
                let da = Float::with_val(53, &a.energy - &e).abs();
                let db = Float::with_val(53, &b.energy - &e).abs();
                da.partial_cmp(&db).expect("finite")
            })
            .ok_or_else(|| CliError::NotFound(format!("no level near E = {e:.9}; available: {}", listing())))?
    } else {
        let k: usize = s.parsed("level", 0)?;
        roots
            .get(k)
            .ok_or_else(|| CliError::NotFound(format!("level {k} not found; available levels {}", listing())))?
    }
    .clone();
    Ok((q, root))
}

pub fn reconstruct(cfg: &RunConfig, s: &Settings) -> Result<Report, CliError> {
    let (q, root) = locate(cfg, s)?;
    let state = solve_state(&q, &root)?;
    let ctx = &cfg.ctx;
    let exact = Exact::identify(&cfg.problem, &state.energy);

    let (xlo, xhi) = parse_pair(s.get("xrange").unwrap_or("-4,4"), "xrange")?;
    let (xlo, xhi) = (ctx.parse(&xlo)?, ctx.parse(&xhi)?);
    let points: usize = s.parsed("points", 161)?;
    if points < 2 {
        return Err(CliError::Usage("points must be at least 2".into()));
    }
    let xs: Vec<Float> = (0..points)
        .map(|i| {
            let t = Float::with_val(ctx.bits(), &xhi - &xlo) * i as u32 / (points - 1) as u32;
            t + &xlo
        })
        .collect();
    let psi = evaluate_wavefunction(&state, &xs)?;
    let mut rows = Vec::with_capacity(points);
    let mut max_err: Option<Float> = None;
    match exact {
        Some(ex) => {
            let reference: Vec<Float> = xs.iter().map(|x| ex.psi(x, ctx)).collect();
            let kappa = alignment(&psi, &reference, ctx);
            for ((x, p), r) in xs.iter().zip(&psi).zip(&reference) {
                let aligned = Float::with_val(ctx.bits(), p * &kappa);
                let err = Float::with_val(ctx.bits(), &aligned - r).abs();
                if max_err.as_ref().is_none_or(|m| err > *m) {
                    max_err = Some(err.clone());
                }
                rows.push(vec![sig(x), sig(&aligned), sig(r), short(&err)]);
            }
        }
        None => {
            // scale to the origin normalization so output does not depend on the kernel pivot
            let normed = state.normalized_at_origin()?;
            for (x, p) in xs.iter().zip(evaluate_wavefunction(&normed, &xs)?) {
                rows.push(vec![sig(x), sig(&p), String::new(), String::new()]);
            }
        }
    }
    write_csv(&cfg.out, "wavefunction.csv", &["x", "psi_N", "exact", "abs_error"], &rows)?;

    let k: usize = s.parsed("taylor_order", 12)?;
    let k = k.min(state.top_order());
    let d = reconstruction_taylor(&state, k)?;
    let exact_d = exact.and_then(|ex| ex.taylor(&cfg.weight, k, ctx));
    let taylor_rows: Vec<Vec<String>> = d
        .coefficients
        .iter()
        .enumerate()
        .map(|(n, c)| vec![n.to_string(), sig(c), exact_d.as_ref().map_or_else(String::new, |e| sig(&e[n]))])
        .collect();
    write_csv(&cfg.out, "taylor.csv", &["n", "d_n", "exact"], &taylor_rows)?;

    write_omega(cfg, &state)?;
    let residual = verify_moment_match(&state)?;
    let ms = cfg.problem.missing_moment_order();

    let mut text = String::new();
    let _ = writeln!(text, "method            {}", state.method.id());
    let _ = writeln!(text, "N                 {}", state.order);
    let _ = writeln!(text, "level             {}", root.level_index);
    let _ = writeln!(text, "energy            {}", sig(&state.energy));
    let _ = writeln!(text, "parity            {}", state.parity.map_or("mixed", |p| p.id()));
    let _ = writeln!(text, "moment residual   {} (bound 1e-{})", short(&residual), ctx.digits() / 2);
    let _ = writeln!(text, "omega tail ratio  {}", short(&state.omega_tail_ratio(ms + 1)));
    let _ = writeln!(text, "taylor            d_0..d_{k}{}", if d.odd { " (odd, d_1 = 1)" } else { "" });
    if let Some(m) = max_err {
        let _ = writeln!(text, "max |psi - exact| {}", short(&m));
    }
    Ok(Report { text })
}

/// Least-squares `κ` minimizing `Σ (κ ψ − ref)²`.
fn alignment(psi: &[Float], reference: &[Float], ctx: &oppq_core::precision::PrecisionContext) -> Float {
    let mut num = ctx.zero();
    let mut den = ctx.zero();
    for (p, r) in psi.iter().zip(reference) {
        num += Float::with_val(ctx.bits(), p * r);
        den += Float::with_val(ctx.bits(), p.square_ref());
    }
    if den.is_zero() {
        return ctx.one();
    }
    num / den
}

fn write_omega(cfg: &RunConfig, state: &ReconstructedState) -> Result<(), CliError> {
    let bits = cfg.ctx.bits();
    let normed = state.normalized_at_origin()?;
    let max = normed.omega.iter().fold(Float::new(bits), |m, w| m.max(&Float::with_val(bits, w.abs_ref())));
    let rows: Vec<Vec<String>> = normed
        .omega
        .iter()
        .enumerate()
        .map(|(n, w)| {
            let ratio = if max.is_zero() { Float::new(bits) } else { Float::with_val(bits, w.abs_ref()) / &max };
            vec![n.to_string(), sig(w), short(&ratio)]
        })
        .collect();
    write_csv(&cfg.out, "omega.csv", &["n", "omega_n", "relative_magnitude"], &rows)?;
    Ok(())
}

fn grid_axis(text: &str, key: &str, count: usize, ctx: &oppq_core::precision::PrecisionContext) -> Result<Vec<Float>, CliError> {
    let (lo, hi) = parse_pair(text, key)?;
    let (lo, hi) = (ctx.parse(&lo)?, ctx.parse(&hi)?);
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count)
        .map(|i| Float::with_val(ctx.bits(), &hi - &lo) * i as u32 / (count - 1) as u32 + &lo)
        .collect())
}

fn map_rows(map: &ConvergenceMap) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (p, z) in map.points.iter().enumerate() {
        for (k, order) in map.orders.iter().enumerate() {
            let e = map.entry(p, k);
            rows.push(vec![
                format!("{:.6}", z.real().to_f64()),
                format!("{:.6}", z.imag().to_f64()),
                order.to_string(),
                e.status.id().to_string(),
                e.abs_error.as_ref().map_or_else(String::new, short),
            ]);
        }
    }
    rows
}

pub fn map(cfg: &RunConfig, s: &Settings) -> Result<Report, CliError> {
    let orders = parse_orders(s.get("orders").unwrap_or("20,60,100,140"))?;
    let (q, root) = locate(cfg, s)?;
    let state = solve_state(&q, &root)?;
    let ctx = &cfg.ctx;

    let (nx, ny) = parse_pair(s.get("grid").unwrap_or("41,17"), "grid")?;
    let parse_count = |t: &str| t.parse::<usize>().ok().filter(|n| *n > 0).ok_or_else(|| CliError::Usage(format!("grid: bad count {t:?}")));
    let re = grid_axis(s.get("re").unwrap_or("-5,5"), "re", parse_count(&nx)?, ctx)?;
    let im = grid_axis(s.get("im").unwrap_or("-2,2"), "im", parse_count(&ny)?, ctx)?;
    let grid: Vec<Complex> = im
        .iter()
        .flat_map(|y| re.iter().map(move |x| Complex::with_val(ctx.bits(), (x, y))))
        .collect();

    let exact = Exact::identify(&cfg.problem, &state.energy).and_then(|ex| ex.pole_sum(&cfg.weight, ctx));
    let map = convergence_map(&state, &grid, &orders, exact.as_ref())?;
    let header = ["re", "im", "order", "status", "abs_error"];
    write_csv(&cfg.out, "map.csv", &header, &map_rows(&map))?;

    let mut text = String::new();
    let _ = writeln!(text, "energy {}  N {}  grid {} x {}", sig(&state.energy), state.order, re.len(), im.len());
    let _ = writeln!(text, "{:>6} {:>12} {:>12}", "order", "expansion", "taylor");
    let disk = match &exact {
        Some(f) => {
            let center = ctx.parse(s.get("center").unwrap_or("1.4"))?;
            let disk = taylor_disk_map(f, &center, &grid, &orders, ctx)?;
            write_csv(&cfg.out, "taylor_map.csv", &header, &map_rows(&disk))?;
            Some(disk)
        }
        None => None,
    };
    for (k, m) in orders.iter().enumerate() {
        let t = disk.as_ref().map_or_else(|| "-".to_string(), |d| format!("{:.4}", d.converged_fraction(k)));
        let _ = writeln!(text, "{m:>6} {:>12.4} {t:>12}", map.converged_fraction(k));
    }
    Ok(Report { text })
}

pub fn moments(cfg: &RunConfig) -> Result<Report, CliError> {
    let top = cfg.top_order();
    let s = cfg.weight.moments(top, &cfg.ctx)?;
    let rows: Vec<Vec<String>> = s.as_slice().iter().enumerate().map(|(p, v)| vec![p.to_string(), sig(v)]).collect();
    let path = write_csv(&cfg.out, "moments.csv", &["p", "s_p"], &rows)?;
    Ok(Report { text: format!("{} moments of {} written to {}\n", top + 1, cfg.weight.id(), path.display()) })
}

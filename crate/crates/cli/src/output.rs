//! CSV files and the plain-text spectrum table.

use std::fs;
use std::path::{Path, PathBuf};

use oppq_core::precision::{format_fixed, format_sig};
use rug::Float;

use crate::error::CliError;

pub const ENERGY_DIGITS: usize = 30;
pub const TABLE_DECIMALS: usize = 9;

pub fn sig(x: &Float) -> String {
    format_sig(x, ENERGY_DIGITS)
}

pub fn short(x: &Float) -> String {
    format_sig(x, 6)
}

/// Writes `rows` under `header` to `dir/name`, creating `dir`.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(path)
}

/// One block of the table: rows are `N`, columns `E_0..E_{k−1}`.
pub struct TableBlock {
    pub title: String,
    pub rows: Vec<(usize, Vec<Option<Float>>)>,
}

pub fn render_table(blocks: &[TableBlock], levels: usize) -> String {
    let width = TABLE_DECIMALS + 6;
    let mut out = String::new();
    let mut header = format!("{:>5}", "N");
    for k in 0..levels {
        header.push_str(&format!(" {:>width$}", format!("E_{k}")));
    }
    for b in blocks {
        out.push_str(&b.title);
        out.push('\n');
        out.push_str(&header);
        out.push('\n');
        out.push_str(&"-".repeat(header.len()));
        out.push('\n');
        for (n, energies) in &b.rows {
            out.push_str(&format!("{n:>5}"));
            for k in 0..levels {
                let cell = energies.get(k).cloned().flatten().map_or_else(|| "-".to_string(), |e| format_fixed(&e, TABLE_DECIMALS));
                out.push_str(&format!(" {cell:>width$}"));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

//! Run configuration: INI file values overlaid by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;
use oppq_core::precision::{default_digits, PrecisionContext};
use oppq_core::problems::{ProblemSpec, WeightSpec};
use oppq_core::quantizer::Method;

use crate::error::CliError;

/// Flat `key → value` settings for one command.
///
/// Keys from the file's general section are read first, then those of the
/// section named after the command, then flags.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>, command: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        if let Some(path) = path {
            let ini = Ini::load_from_file(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            for section in [None, Some(command)] {
                if let Some(props) = ini.section(section) {
                    for (k, v) in props.iter() {
                        values.insert(normalize_key(k), v.trim().to_string());
                    }
                }
            }
        }
        Ok(Self { values })
    }

    pub fn set(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.values.insert(normalize_key(key), v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(false),
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" | "on" => Ok(true),
                "0" | "false" | "no" | "off" => Ok(false),
                _ => Err(CliError::Usage(format!("{key}: expected a boolean, got {v:?}"))),
            },
        }
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| CliError::Usage(format!("{key}: cannot parse {v:?}"))),
        }
    }
}

fn normalize_key(k: &str) -> String {
    let k = k.trim().replace('-', "_");
    if k == "N" {
        k
    } else {
        k.to_ascii_lowercase()
    }
}

/// Everything a command needs to run, validated.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub weight: WeightSpec,
    pub methods: Vec<Method>,
    /// Strictly ascending truncation orders.
    pub orders: Vec<usize>,
    pub window: (String, String),
    pub step: String,
    pub tol: String,
    pub ctx: PrecisionContext,
    pub out: PathBuf,
    pub warnings: Vec<String>,
}

pub struct Defaults {
    pub method: Method,
    pub orders: &'static str,
}

impl RunConfig {
    pub fn from_settings(s: &Settings, defaults: Defaults) -> Result<Self, CliError> {
        let problem = ProblemSpec::parse(s.get("problem").unwrap_or("rational")).map_err(usage)?;
        let weight = match s.get("weight") {
            Some(w) => WeightSpec::parse(w).map_err(usage)?,
            None => problem.matched_weight(),
        };
        let methods = match s.get("method") {
            None => vec![defaults.method],
            Some(list) => list
                .split(',')
                .map(|m| m.trim().parse::<Method>().map_err(usage))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let orders = parse_orders(s.get("N").unwrap_or(defaults.orders))?;
        let (lo, hi, step) = problem.default_window();
        let window = match s.get("window") {
            Some(w) => parse_pair(w, "window")?,
            None => (lo.to_string(), hi.to_string()),
        };
        let step = s.get("step").unwrap_or(step).to_string();
        let tol = s.get("tol").unwrap_or("1e-12").to_string();

        let mut warnings = Vec::new();
        let top = *orders.last().expect("orders are non-empty");
        let recommended = default_digits(top);
        let ctx = match s.get("digits") {
            None => PrecisionContext::for_order(top),
            Some(d) => {
                let d: u32 = d.parse().map_err(|_| CliError::Usage(format!("digits: cannot parse {d:?}")))?;
                if d < recommended {
                    warnings.push(format!(
                        "decimal_digits {d} is below the recommended {recommended} for N = {top}"
                    ));
                }
                PrecisionContext::new(d).map_err(usage)?
            }
        };
        // every numeric setting must parse at working precision
        for (key, v) in [("window", &window.0), ("window", &window.1), ("step", &step), ("tol", &tol)] {
            ctx.parse(v).map_err(|e| CliError::Usage(format!("{key}: {e}")))?;
        }
        let out = PathBuf::from(s.get("out").unwrap_or("oppq-out"));
        Ok(Self { problem, weight, methods, orders, window, step, tol, ctx, out, warnings })
    }

    /// The single method for commands that work on one state.
    pub fn single_method(&self) -> Result<Method, CliError> {
        match self.methods.as_slice() {
            [m] => Ok(*m),
            _ => Err(CliError::Usage("this command takes exactly one method".into())),
        }
    }

    pub fn top_order(&self) -> usize {
        *self.orders.last().expect("orders are non-empty")
    }
}

fn usage(e: oppq_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

/// `40`, `20,40,60` or `lo..hi:step` (step defaults to 1).
pub fn parse_orders(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("N: cannot parse {text:?}; use 40, 20,40,60 or 20..100:20"));
    let orders: Vec<usize> = if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        let step: usize = step.trim().parse().map_err(|_| bad())?;
        if step == 0 {
            return Err(bad());
        }
        (lo..=hi).step_by(step).collect()
    } else {
        text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if orders.is_empty() || orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(format!("N: {text:?} must list strictly ascending orders")));
    }
    if orders[0] == 0 {
        return Err(CliError::Usage("N: orders must be positive".into()));
    }
    Ok(orders)
}

/// `lo,hi` or `lo:hi`.
pub fn parse_pair(text: &str, key: &str) -> Result<(String, String), CliError> {
    let (a, b) = text
        .split_once(',')
        .or_else(|| text.split_once(':'))
        .ok_or_else(|| CliError::Usage(format!("{key}: expected lo,hi, got {text:?}")))?;
    Ok((a.trim().to_string(), b.trim().to_string()))
}

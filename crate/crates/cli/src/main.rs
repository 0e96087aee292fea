mod commands;
mod config;
mod error;
mod exact;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use oppq_core::precision::PrecisionContext;
use oppq_core::problems::TaylorVariant;
use oppq_core::quantizer::Method;

use config::{Defaults, RunConfig, Settings};
use error::{CliError, EXIT_USAGE};

/// Bound-state energies and wavefunctions from power-moment recursions.
#[derive(Parser)]
#[command(name = "oppq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan spectra over a sweep of truncation orders.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Energies per row of the printed table.
        #[arg(long)]
        levels: Option<String>,
        /// Largest jump linking a level between consecutive orders.
        #[arg(long = "match-tol")]
        match_tol: Option<String>,
        /// Last-step change below which a level counts as converged.
        #[arg(long = "conv-tol")]
        conv_tol: Option<String>,
    },
    /// Rebuild one state: wavefunction samples, Taylor coefficients, Ω profile.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pick: Pick,
        /// Sample interval `lo,hi`.
        #[arg(long, allow_hyphen_values = true)]
        xrange: Option<String>,
        #[arg(long)]
        points: Option<String>,
        #[arg(long = "taylor-order")]
        taylor_order: Option<String>,
    },
    /// Classify partial sums over a grid in the complex plane.
    Map {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pick: Pick,
        /// Partial-sum orders, e.g. `20,60,100,140`.
        #[arg(long)]
        orders: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        re: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        im: Option<String>,
        /// Points along the real and imaginary axes, `nx,ny`.
        #[arg(long)]
        grid: Option<String>,
        /// Expansion point of the Taylor comparison.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
    },
    /// Dump weight moments `s_0..s_N`.
    Moments {
        #[command(flatten)]
        common: Common,
    },
    /// Run the oracle battery and print a JSON report.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Use the `2n(3n − 5)` rational Taylor coefficient instead of `2n(2n − 5)`.
        #[arg(long = "legacy-taylor")]
        legacy_taylor: bool,
    },
}

#[derive(Args)]
struct Common {
    /// `harmonic`, `rational` or `sextic:a=<a>,b=<b>`.
    #[arg(long)]
    problem: Option<String>,
    /// `gaussian`, `freud4:b=<b>` or `ground-state`.
    #[arg(long)]
    weight: Option<String>,
    /// `oppq`, `global_local`, `hill`; comma-separated for `solve`.
    #[arg(long)]
    method: Option<String>,
    /// Truncation orders: `40`, `20,40` or `20..100:20`.
    #[arg(long = "N")]
    n: Option<String>,
    /// Energy scan window `lo,hi`.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long)]
    step: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Decimal digits of working precision.
    #[arg(long)]
    digits: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// INI file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Pick {
    /// Index in the ascending spectrum.
    #[arg(long)]
    level: Option<String>,
    /// Pick the level closest to this energy.
    #[arg(long, allow_hyphen_values = true)]
    energy: Option<String>,
}

impl Common {
    fn settings(self, command: &str) -> Result<Settings, CliError> {
        let mut s = Settings::load(self.config.as_deref(), command)?;
        for (k, v) in [
            ("problem", self.problem),
            ("weight", self.weight),
            ("method", self.method),
            ("N", self.n),
            ("window", self.window),
            ("step", self.step),
            ("tol", self.tol),
            ("digits", self.digits),
            ("out", self.out),
        ] {
            s.set(k, v);
        }
        Ok(s)
    }
}

impl Pick {
    fn apply(self, s: &mut Settings) {
        s.set("level", self.level);
        s.set("energy", self.energy);
    }
}

fn config(s: &Settings, method: Method, orders: &'static str) -> Result<RunConfig, CliError> {
    let cfg = RunConfig::from_settings(s, Defaults { method, orders })?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Solve { common, levels, match_tol, conv_tol } => {
            let mut s = common.settings("solve")?;
            s.set("levels", levels);
            s.set("match_tol", match_tol);
            s.set("conv_tol", conv_tol);
            let cfg = config(&s, Method::Oppq, "20..100:20")?;
            Ok(commands::solve(&cfg, &s)?.text)
        }
        Command::Reconstruct { common, pick, xrange, points, taylor_order } => {
            let mut s = common.settings("reconstruct")?;
            pick.apply(&mut s);
            s.set("xrange", xrange);
            s.set("points", points);
            s.set("taylor_order", taylor_order);
            let cfg = config(&s, Method::Oppq, "80")?;
            Ok(commands::reconstruct(&cfg, &s)?.text)
        }
        Command::Map { common, pick, orders, re, im, grid, center } => {
            let mut s = common.settings("map")?;
            pick.apply(&mut s);
            for (k, v) in [("orders", orders), ("re", re), ("im", im), ("grid", grid), ("center", center)] {
                s.set(k, v);
            }
            let cfg = config(&s, Method::Oppq, "140")?;
            Ok(commands::map(&cfg, &s)?.text)
        }
        Command::Moments { common } => {
            let s = common.settings("moments")?;
            let cfg = config(&s, Method::Oppq, "40")?;
            Ok(commands::moments(&cfg)?.text)
        }
        Command::Validate { common, legacy_taylor } => {
            let mut s = common.settings("validate")?;
            if legacy_taylor {
                s.set("legacy_taylor", Some("true".into()));
            }
            let orders = config::parse_orders(s.get("N").unwrap_or("100"))?;
            let order = *orders.last().expect("non-empty");
            let ctx = match s.get("digits") {
                None => PrecisionContext::for_order(order),
                Some(d) => {
                    let d: u32 = d.parse().map_err(|_| CliError::Usage(format!("digits: cannot parse {d:?}")))?;
                    PrecisionContext::new(d)?
                }
            };
            let variant = if s.flag("legacy_taylor")? { TaylorVariant::Legacy3n } else { TaylorVariant::Standard };
            let report = validate::run(&ctx, order, variant);
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            if let Some(out) = s.get("out") {
                std::fs::create_dir_all(out)?;
                std::fs::write(PathBuf::from(out).join("validate.json"), format!("{json}\n"))?;
            }
            println!("{json}");
            report.outcome()?;
            Ok(String::new())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let start = Instant::now();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            eprintln!("done in {:.1}s", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}


use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use takagi::{Error, PowerParam};

mod commands;
mod plot;

#[derive(Parser, Debug)]
#[command(
    name = "takagi",
    version,
    about = "Certified values, exact forms and maxima of S_p(x) = sum (T0(2^n x)/2^n)^p"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Absolute error target for each evaluation
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,
    /// Working precision ceiling in mantissa bits (53 = plain f64)
    #[arg(long, global = true, env = "TAKAGI_PRECISION_BITS", default_value_t = 128)]
    pub precision_bits: u32,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to this file (or directory, for several plot curves)
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Closed,
    Bracket,
    Bb,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certified S_p(x); x may be `a/b`, an integer or a decimal
    Eval {
        #[arg(long)]
        p: PowerParam,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Closed form of S_p at a rational `a/b`, and its value when --p is given
    Exact {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long)]
        p: Option<PowerParam>,
    },
    /// Global maximum for 0 < p < 1
    Max {
        #[arg(long)]
        p: PowerParam,
        #[arg(long, value_enum, default_value_t = Method::All)]
        method: Method,
        /// Localisation target for branch-and-bound
        #[arg(long, default_value_t = 1e-6)]
        x_tol: f64,
        /// Bracketing depth
        #[arg(long, default_value_t = 30)]
        n: u32,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        /// Prune with the Hölder bound only
        #[arg(long)]
        holder_only: bool,
    },
    /// Nested-interval trace around 1/3 (rows n = 0..=N)
    Bracket {
        #[arg(long)]
        p: PowerParam,
        #[arg(long, default_value_t = 30)]
        n: u32,
    },
    /// Hölder modulus check over log-uniform pairs
    Holder {
        #[arg(long)]
        p: PowerParam,
        /// Number of pairs (defaults to --samples)
        #[arg(long)]
        pairs: Option<usize>,
        /// Gaps range down to 2^-max_log2
        #[arg(long, default_value_t = 40.0)]
        max_log2: f64,
    },
    /// Functional equations, bounds and lemma checks
    Verify {
        #[arg(long)]
        p: PowerParam,
    },
    /// Curve data `x,value,error_radius` on [0, 1]
    Plot {
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<PowerParam>,
        #[arg(long, default_value_t = 4096)]
        points: usize,
        /// Also render an SVG of the curves
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

/// Exit status for a library error.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::InvalidInput(_) | Error::Parse(_) => 2,
        Error::Consistency(_) => 1,
        Error::Precision(_) | Error::Resource(_) | Error::BudgetExhausted { .. } | Error::Overflow(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.common;
    let res = match cli.command {
        Command::Eval { p, x } => commands::eval(c, &p, &x),
        Command::Exact { x, p } => commands::exact(c, &x, p.as_ref()),
        Command::Max { p, method, x_tol, n, budget, holder_only } => {
            commands::max(c, &p, method, x_tol, n, budget, holder_only)
        }
        Command::Bracket { p, n } => commands::bracket(c, &p, n),
        Command::Holder { p, pairs, max_log2 } => commands::holder(c, &p, pairs.unwrap_or(c.samples), max_log2),
        Command::Verify { p } => commands::verify(c, &p),
        Command::Plot { p, points, svg } => plot::run(c, &p, points, svg.as_deref()),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::BudgetExhausted { best, .. } = &e {
                eprintln!("best so far: argmax {:?} value {}", best.argmax_points, best.max_value);
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

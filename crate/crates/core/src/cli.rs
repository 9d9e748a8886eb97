//! Command-line front end.
//!
//! Every invocation prints exactly one JSON document on stdout:
//! `{"status":"ok","payload":...}` or
//! `{"status":"error","error":{"code":...,"message":...}}`. Floats are printed
//! with 17 significant digits, so repeated runs are byte-identical. Timing
//! goes to stderr. Exit status is 0 on success, 1 on a domain error and 2 on
//! a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Once;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::adder_code::{code_to_strategy, is_uniquely_decodable, strategy_to_code, FeedbackCode, Strategy};
use crate::capacity_opt::{
    belokopytov_certificate, feasibility_grid, optimize_with, weighted_optimize, OptimizeOptions,
};
use crate::coupling::{closed_form_branch, coupling_box, eval_m, joint, phi, phi_prime, solve_c, Method};
use crate::entropy::constants;
use crate::feasibility::feasibility;
use crate::fixed_point::{solve_x_star, Mixture};
use crate::group_testing::{
    bounds, exact_t, exact_t_nn, greedy_strategy, table, CandidateState, TableOptions, Variant,
};
use crate::lagrangian::{theorem_bound, verify};
use crate::{Error, Result};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "ARTIFACT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "adder-capacity", version, about = "Zero-error capacity of the binary adder channel with feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print δ, r, λ* and the capacity.
    Constants,
    /// Coupling solver.
    #[command(subcommand)]
    Coupling(CouplingCmd),
    /// Sweep φ_{a,b} and its derivative over [0, 1].
    Phi {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Write the sweep as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fixed point x* of a mixture.
    FixedPoint(MixArgs),
    /// Constraint gap of a mixture.
    Feasibility {
        #[command(flatten)]
        mix: MixArgs,
        /// Also minimize the gap over a grid with this many points per box.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Capacity certificate and optimizer.
    #[command(subcommand)]
    Capacity(CapacityCmd),
    /// Upper bound from the Lagrangian.
    #[command(subcommand)]
    Lagrangian(LagrangianCmd),
    /// Feedback codes and strategies.
    #[command(subcommand)]
    Code(CodeCmd),
    /// Group testing for two defectives.
    #[command(subcommand)]
    Gtest(GtestCmd),
}

#[derive(Subcommand, Debug)]
enum CouplingCmd {
    /// Solve for c_{a,b}(x).
    Eval {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        x: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Closed)]
        method: MethodArg,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    Closed,
    Bisect,
}

#[derive(Args, Debug)]
struct MixArgs {
    /// Weights, comma separated. Defaults to (1) for one component.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    a: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    b: Vec<f64>,
    /// JSON file with fields p, a, b instead of the flags.
    #[arg(long, conflicts_with_all = ["p", "a", "b"])]
    config: Option<PathBuf>,
}

#[derive(Deserialize)]
struct MixConfig {
    #[serde(default)]
    p: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Subcommand, Debug)]
enum CapacityCmd {
    /// Maximize the average rate over feasible mixtures.
    Optimize {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Ignore the constraint (diagnostic).
        #[arg(long)]
        no_feasibility: bool,
        /// Write the single-component feasibility grid as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certificate at the symmetric optimum.
    Belokopytov,
    /// Exploratory weighted-rate optimum (conjectural).
    Weighted {
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        c2: f64,
    },
}

#[derive(Subcommand, Debug)]
enum LagrangianCmd {
    /// Candidate maxima of the Lagrangian at a multiplier.
    Bound {
        #[arg(long)]
        lambda: f64,
    },
    /// Check that the bound at λ* equals the capacity.
    Verify,
}

#[derive(Subcommand, Debug)]
enum CodeCmd {
    /// Check unique decodability of a code file.
    Check {
        #[arg(long)]
        file: PathBuf,
    },
    /// Convert a strategy file to a code.
    FromStrategy {
        #[arg(long)]
        file: PathBuf,
    },
    /// Convert a code file to a strategy.
    ToStrategy {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum VariantArg {
    Single,
    Two,
}

#[derive(Subcommand, Debug)]
enum GtestCmd {
    /// Exact t(n).
    Exact {
        #[arg(long)]
        n: usize,
        /// Write the witness strategy as JSON.
        #[arg(long)]
        tree: Option<PathBuf>,
    },
    /// Exact t(n, n).
    ExactNn {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        tree: Option<PathBuf>,
    },
    /// Greedy strategy depth.
    Greedy {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = VariantArg::Single)]
        variant: VariantArg,
        #[arg(long)]
        tree: Option<PathBuf>,
    },
    /// Exact, greedy and reference values for n = 2..=n_max.
    Table {
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value_t = 9)]
        exact_max: usize,
        #[arg(long, default_value_t = 6)]
        exact_nn_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub code: String,
    pub message: String,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandResult {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
    /// Wall time; reported on stderr only.
    #[serde(skip)]
    pub elapsed_ms: f64,
    #[serde(skip)]
    pub exit_code: i32,
    /// Help or version text requested with `--help` / `--version`.
    #[serde(skip)]
    pub help: Option<String>,
}

impl CommandResult {
    fn ok(payload: Value) -> Self {
        CommandResult {
            status: Status::Ok,
            payload: Some(payload),
            error: None,
            elapsed_ms: 0.0,
            exit_code: 0,
            help: None,
        }
    }

    fn err(code: &str, message: String, exit_code: i32) -> Self {
        CommandResult {
            status: Status::Error,
            payload: None,
            error: Some(ErrorRecord {
                code: code.to_string(),
                message,
            }),
            elapsed_ms: 0.0,
            exit_code,
            help: None,
        }
    }

    /// The stdout document.
    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

/// Formatter printing every float as `{:.16e}` (17 significant digits).
struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize with the fixed-digit float format.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits);
    value
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

fn configure_threads() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        if let Some(n) = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            // Fails only if a global pool already exists; keep that one.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    });
}

/// Parse `argv` (program name first) and run the command.
pub fn dispatch<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    configure_threads();
    let start = Instant::now();
    let mut result = match Cli::try_parse_from(argv) {
        Ok(cli) => match execute(cli.command) {
            Ok(payload) => CommandResult::ok(payload),
            Err(e) => CommandResult::err(e.code(), e.to_string(), 1),
        },
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let mut r = CommandResult::ok(Value::Null);
                r.help = Some(e.render().to_string());
                r
            }
            _ => CommandResult::err("usage_error", e.render().to_string(), 2),
        },
    };
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    result
}

/// Entry point for the binary: dispatch, print, return the exit status.
pub fn run() -> i32 {
    let result = dispatch(std::env::args_os());
    if let Some(help) = &result.help {
        print!("{help}");
        return result.exit_code;
    }
    println!("{}", result.to_json());
    eprintln!("elapsed_ms={:.3}", result.elapsed_ms);
    result.exit_code
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn mixture(args: MixArgs) -> Result<Mixture> {
    let (mut p, a, b) = match &args.config {
        Some(path) => {
            let cfg: MixConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
            (cfg.p, cfg.a, cfg.b)
        }
        None => (args.p, args.a, args.b),
    };
    if p.is_empty() && a.len() == 1 {
        p = vec![1.0];
    }
    Mixture::new(p, a, b)
}

fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn opt_csv<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn execute(cmd: Command) -> Result<Value> {
    match cmd {
        Command::Constants => {
            let k = constants();
            Ok(json!({
                "delta": k.delta,
                "r": k.r_const,
                "lambda_star": k.lambda_star,
                "capacity": k.capacity,
                "a_star": k.a_star(),
                "c_star": k.c_star(),
            }))
        }
        Command::Coupling(CouplingCmd::Eval { a, b, x, method }) => {
            let m = match method {
                MethodArg::Closed => Method::Closed,
                MethodArg::Bisect => Method::Bisect,
            };
            let c = solve_c(a, b, x, m)?;
            Ok(json!({
                "a": a,
                "b": b,
                "x": x,
                "method": m,
                "c": c,
                "residual": eval_m(a, b, c, x)?,
                "box": coupling_box(a, b)?,
                "branch": closed_form_branch(a, b, x)?,
                "joint": joint(a, b, c)?,
                "phi": phi(a, b, x)?,
                "phi_prime": phi_prime(a, b, x)?,
            }))
        }
        Command::Phi { a, b, points, out } => {
            if points < 2 {
                return Err(Error::domain("points must be at least 2"));
            }
            let mut rows = Vec::with_capacity(points);
            for k in 0..points {
                let x = k as f64 / (points - 1) as f64;
                rows.push((x, solve_c(a, b, x, Method::Closed)?, phi(a, b, x)?, phi_prime(a, b, x)?));
            }
            if let Some(path) = out {
                write_csv(
                    &path,
                    "x,c,phi,phi_prime",
                    rows.iter().map(|r| format!("{},{},{},{}", r.0, r.1, r.2, r.3)),
                )?;
            }
            let pts: Vec<Value> = rows
                .iter()
                .map(|r| json!({"x": r.0, "c": r.1, "phi": r.2, "phi_prime": r.3}))
                .collect();
            Ok(json!({"a": a, "b": b, "points": pts}))
        }
        Command::FixedPoint(args) => {
            let mix = mixture(args)?;
            to_value(&solve_x_star(&mix)?)
        }
        Command::Feasibility { mix, grid } => {
            let mix = mixture(mix)?;
            to_value(&feasibility(&mix, grid)?)
        }
        Command::Capacity(CapacityCmd::Optimize {
            n,
            restarts,
            seed,
            no_feasibility,
            out,
        }) => {
            let res = optimize_with(&OptimizeOptions {
                n,
                restarts,
                seed,
                enforce_feasibility: !no_feasibility,
                ..OptimizeOptions::default()
            })?;
            if let Some(path) = out {
                let grid = feasibility_grid(200)?;
                write_csv(
                    &path,
                    "a,b,gap,objective",
                    grid.iter()
                        .map(|r| format!("{},{},{},{}", r.a, r.b, opt_csv(r.gap), r.objective)),
                )?;
            }
            to_value(&res)
        }
        Command::Capacity(CapacityCmd::Belokopytov) => to_value(&belokopytov_certificate()?),
        Command::Capacity(CapacityCmd::Weighted { c1, c2 }) => to_value(&weighted_optimize(c1, c2)?),
        Command::Lagrangian(LagrangianCmd::Bound { lambda }) => to_value(&theorem_bound(lambda)?),
        Command::Lagrangian(LagrangianCmd::Verify) => to_value(&verify()?),
        Command::Code(CodeCmd::Check { file }) => {
            let code = FeedbackCode::from_json(&fs::read_to_string(file)?)?;
            let d = is_uniquely_decodable(&code)?;
            Ok(json!({
                "m1": code.m1,
                "m2": code.m2,
                "n_uses": code.n_uses,
                "uniquely_decodable": d.uniquely_decodable,
                "counterexample": d.counterexample,
            }))
        }
        Command::Code(CodeCmd::FromStrategy { file }) => {
            let s = Strategy::from_json(&fs::read_to_string(file)?)?;
            to_value(&strategy_to_code(&s)?)
        }
        Command::Code(CodeCmd::ToStrategy { file }) => {
            let code = FeedbackCode::from_json(&fs::read_to_string(file)?)?;
            to_value(&code_to_strategy(&code)?)
        }
        Command::Gtest(cmd) => gtest(cmd),
    }
}

fn write_tree(path: Option<PathBuf>, s: &Strategy) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, s.to_json()?)?;
    }
    Ok(())
}

fn gtest(cmd: GtestCmd) -> Result<Value> {
    match cmd {
        GtestCmd::Exact { n, tree } => {
            let r = exact_t(n)?;
            write_tree(tree, &r.tree)?;
            let info = bounds(n, Variant::SingleSet)?;
            let mut v = to_value(&r)?;
            v["info_lower"] = json!(info.info_lower);
            Ok(v)
        }
        GtestCmd::ExactNn { n, tree } => {
            let r = exact_t_nn(n)?;
            write_tree(tree, &r.tree)?;
            let info = bounds(n, Variant::TwoSets)?;
            let mut v = to_value(&r)?;
            v["info_lower"] = json!(info.info_lower);
            Ok(v)
        }
        GtestCmd::Greedy { n, variant, tree } => {
            let (state, var) = match variant {
                VariantArg::Single => (CandidateState::full_single(n)?, Variant::SingleSet),
                VariantArg::Two => (CandidateState::full_two(n, n)?, Variant::TwoSets),
            };
            let s = greedy_strategy(&state)?;
            write_tree(tree, &s)?;
            Ok(json!({
                "variant": var,
                "n": n,
                "depth": s.depth,
                "info_lower": bounds(n, var)?.info_lower,
                "tree": s,
            }))
        }
        GtestCmd::Table {
            n_max,
            exact_max,
            exact_nn_max,
            out,
        } => {
            let rows = table(&TableOptions {
                n_max,
                exact_max,
                exact_nn_max,
            })?;
            if let Some(path) = out {
                write_csv(
                    &path,
                    "n,info_lower,exact_t,exact_t_nn,greedy,ratio_to_log2n,asymptotic_constant",
                    rows.iter().map(|r| {
                        format!(
                            "{},{},{},{},{},{},{}",
                            r.n,
                            r.info_lower,
                            opt_csv(r.exact_t),
                            opt_csv(r.exact_t_nn),
                            r.greedy,
                            r.ratio_to_log2n,
                            r.asymptotic_constant
                        )
                    }),
                )?;
            }
            Ok(json!({
                "rows": rows,
                "asymptotic_constant": 1.0 / constants().capacity,
                "note": "t(n)/log2(n) is reported for reference only; no convergence is asserted",
            }))
        }
    }
}

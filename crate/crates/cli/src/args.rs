use std::path::PathBuf;

use clap::{ArgAction, ArgMatches, Args, CommandFactory, Parser, Subcommand};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "bottomup",
    version,
    about = "Bottom-up consonant closed testing"
)]
pub struct Cli {
    /// Flat `key = value` file of subcommand flags; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads. Affects wall time only.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    /// Log more (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Calibrate a threshold table.
    #[command(args_override_self = true)]
    Calibrate(CalibrateArgs),
    /// Apply a procedure to a CSV of p-value families.
    #[command(args_override_self = true)]
    Apply(ApplyArgs),
    /// Estimate FWER and TPR by simulation.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Tabulate K = 3 decisions on a lattice.
    #[command(args_override_self = true)]
    Region(RegionArgs),
    /// Exact power for a piecewise-constant alternative.
    #[command(args_override_self = true)]
    Exact(ExactArgs),
    /// Shift at which Bonferroni reaches a target power.
    #[command(args_override_self = true)]
    SolveTheta(SolveThetaArgs),
    /// Discovery summaries and cross-tabulations over a CSV of families.
    #[command(args_override_self = true)]
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Exchangeable objective: single, mix or avg.
    #[arg(long)]
    pub objective: String,
    /// Design shift of the normal alternative (≤ 0).
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Monte Carlo draws per level.
    #[arg(long, default_value_t = 100_000)]
    pub b: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// `bu` for bottom-up thresholds, `simes` for the last-step improved Hommel threshold.
    #[arg(long, default_value = "bu")]
    pub suite: String,
    /// Output file; stdout if absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ApplyArgs {
    /// CSV with header `family_id,p1,...,pK`.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Threshold table from `calibrate`.
    #[arg(
        long,
        conflicts_with = "procedure",
        required_unless_present = "procedure"
    )]
    pub thresholds: Option<PathBuf>,
    /// Procedure descriptor `name[:theta]`, calibrated in-run if needed.
    #[arg(long)]
    pub procedure: Option<String>,
    /// Level for `--procedure`; must match the table when given with `--thresholds`.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub b: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also print the discovery summary to stdout.
    #[arg(long)]
    pub summary: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Shift of the data-generating alternative.
    #[arg(long, allow_negative_numbers = true)]
    pub theta_true: f64,
    /// False-null settings, e.g. `0..10,mix`.
    #[arg(long)]
    pub k1: String,
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Comma-separated procedure descriptors.
    #[arg(long)]
    pub procedures: String,
    /// Calibration draws for procedures that need them.
    #[arg(long, default_value_t = 100_000)]
    pub b: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RegionArgs {
    #[arg(long)]
    pub procedure: String,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Hold one coordinate fixed, e.g. `p3=0.03`.
    #[arg(long)]
    pub fix: Option<String>,
    /// Lattice points per free axis.
    #[arg(long, default_value_t = 200)]
    pub res: usize,
    #[arg(long, default_value_t = 0.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.5)]
    pub hi: f64,
    #[arg(long, default_value_t = 100_000)]
    pub b: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[arg(long, default_value = "s3")]
    pub preset: String,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveThetaArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub k: usize,
    /// Target Bonferroni power per false null.
    #[arg(long)]
    pub power: f64,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// Comma-separated procedure descriptors.
    #[arg(long)]
    pub procedures: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100_000)]
    pub b: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Summary CSV; stdout if absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Long-form cross-tabulation CSV.
    #[arg(long)]
    pub crosstab: Option<PathBuf>,
}

/// Flags that never change an output's content.
const NOT_ECHOED: &[&str] = &[
    "config", "workers", "verbose", "output", "crosstab", "help", "version",
];

/// `<subcommand> --flag=value ...` with every effective flag, defaults and
/// config-file values included, in declaration order.
pub fn echo(name: &str, m: &ArgMatches) -> String {
    let cmd = Cli::command();
    let sub = cmd
        .find_subcommand(name)
        .expect("matched subcommand exists");
    let mut out = vec![name.to_string()];
    for arg in sub.get_arguments() {
        let id = arg.get_id().as_str();
        if NOT_ECHOED.contains(&id) {
            continue;
        }
        let long = arg.get_long().unwrap_or(id);
        if arg.get_action().takes_values() {
            if let Some(vals) = m.get_raw(id) {
                let v: Vec<String> = vals.map(|v| v.to_string_lossy().into_owned()).collect();
                out.push(format!("--{long}={}", quote(&v.join(","))));
            }
        } else if m.get_flag(id) {
            out.push(format!("--{long}"));
        }
    }
    out.join(" ")
}

fn quote(v: &str) -> String {
    if v.is_empty()
        || v.chars()
            .any(|c| c.is_whitespace() || "'\"\\$`".contains(c))
    {
        format!("'{}'", v.replace('\'', r"'\''"))
    } else {
        v.to_string()
    }
}

/// Comment line heading every CSV output.
pub fn header_line(echo: &str) -> String {
    format!("# bottomup {VERSION} {echo}\n")
}

/// Provenance stored in JSON outputs.
pub fn generator(echo: &str) -> serde_json::Value {
    serde_json::json!({ "tool": "bottomup", "version": VERSION, "command": echo })
}

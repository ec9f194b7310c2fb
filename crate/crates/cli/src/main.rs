mod commands;
mod params;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spreadlab::{Error, ErrorClass};

use crate::params::{parse_sample_spec, EnsembleFlags};

#[derive(Debug, Parser)]
#[command(name = "spreadlab", version, about = "Experiments on sparse biregular sign matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a signed biregular matrix and write it in BIREG format.
    Sample(SampleArgs),
    /// Run the kernel-projection attack and print the witness.
    Attack(AttackArgs),
    /// Extreme singular values and the band slack.
    Spectrum(SpectrumArgs),
    /// Certify and probe lp restricted isometry.
    RipCheck(RipArgs),
    /// Compressibility and distortion of a vector.
    SpreadCheck(SpreadArgs),
    /// Run attack or spectrum over sizes and seeds; emits CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MatrixSource {
    /// Read the matrix from a BIREG file.
    #[arg(long, conflicts_with_all = ["sample", "n", "m", "s", "t", "alpha"])]
    pub matrix: Option<String>,
    /// Sample with `n,m,s,t,seed`.
    #[arg(long, conflicts_with_all = ["n", "m", "s", "t", "alpha", "seed"])]
    pub sample: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    /// Aspect ratio m/n = t/s; resolved to integer m and t.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl MatrixSource {
    pub fn flags(&self) -> spreadlab::Result<EnsembleFlags> {
        match &self.sample {
            Some(spec) => parse_sample_spec(spec),
            None => Ok(EnsembleFlags {
                n: self.n,
                m: self.m,
                s: self.s,
                t: self.t,
                alpha: self.alpha,
                seed: self.seed,
            }),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub src: MatrixSource,
    /// Output BIREG path.
    #[arg(long)]
    pub out: String,
    /// Also write the JSON report here (default: stdout).
    #[arg(long)]
    pub report: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct AttackArgs {
    #[command(flatten)]
    pub src: MatrixSource,
    #[arg(long, default_value_t = 8)]
    pub max_ell: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Roots at the largest acyclic radius to try.
    #[arg(long, default_value_t = 1)]
    pub candidates: usize,
    #[arg(long)]
    pub report: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Dense,
    Iterative,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub src: MatrixSource,
    #[arg(long, value_enum, default_value_t = MethodArg::Iterative)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub report: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Args, Serialize)]
pub struct RipArgs {
    #[command(flatten)]
    pub src: MatrixSource,
    /// Plain BIGRAPH expander to run through degree bounding first.
    #[arg(long, conflicts_with_all = ["matrix", "sample"])]
    pub graph: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    pub mode: ModeArg,
    /// RIP distortion to certify; omitted means probe only.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Claimed unique-expansion parameters (with --graph).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Take the random-ensemble expansion `(c·α²/t⁴, 2/t)` on trust instead
    /// of measuring it.
    #[arg(long, conflicts_with_all = ["graph", "mu"])]
    pub assume_random: bool,
    /// The constant `c` used by --assume-random.
    #[arg(long, default_value_t = 0.5 * (-3f64).exp())]
    pub expansion_c: f64,
    #[arg(long, default_value_t = 1 << 20)]
    pub budget: u64,
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub probe_seed: u64,
    #[arg(long)]
    pub report: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SpreadArgs {
    /// Whitespace-separated numbers, or a witness JSON with a `values` field.
    #[arg(long)]
    pub vector: String,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long)]
    pub report: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Attack,
    Spectrum,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub kind: SweepKind,
    /// Comma-separated column counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub s: usize,
    #[arg(long, conflicts_with = "t")]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub t: Option<usize>,
    /// Number of seeds, run as 0..seeds.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 8)]
    pub max_ell: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Attack roots per instance.
    #[arg(long, default_value_t = 1)]
    pub candidates: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Iterative)]
    pub method: MethodArg,
    /// CSV output path (default: stdout).
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub report: Option<String>,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    class: &'a str,
    message: String,
    exit_code: u8,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config | ErrorClass::Io => 2,
        ErrorClass::Budget => 3,
        ErrorClass::Numerical => 4,
    }
}

fn class_name(class: ErrorClass) -> &'static str {
    match class {
        ErrorClass::Config => "config",
        ErrorClass::Budget => "budget",
        ErrorClass::Numerical => "numerical",
        ErrorClass::Io => "io",
    }
}

fn emit_error(kind: &str, class: &str, message: String, code: u8) -> ExitCode {
    let body = ErrorReport {
        error: ErrorBody {
            kind,
            class,
            message,
            exit_code: code,
        },
    };
    eprintln!("{}", serde_json::to_string(&body).expect("error report serializes"));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return emit_error("Usage", "config", e.to_string().trim().to_string(), 2);
        }
    };
    let result = match &cli.command {
        Command::Sample(a) => commands::sample(a, &argv),
        Command::Attack(a) => commands::attack(a, &argv),
        Command::Spectrum(a) => commands::spectrum(a, &argv),
        Command::RipCheck(a) => commands::rip_check(a, &argv),
        Command::SpreadCheck(a) => commands::spread_check(a, &argv),
        Command::Sweep(a) => commands::sweep(a, &argv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_failure(&e),
    }
}

fn report_failure(e: &Error) -> ExitCode {
    let class = e.class();
    emit_error(e.kind(), class_name(class), e.to_string(), exit_code(class))
}

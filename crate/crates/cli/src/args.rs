use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;

use belldisc_core::protocols::{BuildMode, ProtocolId};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "belldisc",
    version,
    about = "Bell-like state discrimination with linear optics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one protocol instance and write its discrimination report.
    Run(RunArgs),
    /// Sweep a state angle and compare against the closed-form success.
    Sweep(SweepArgs),
    /// Regenerate the summary table from fresh runs.
    Table(TableArgs),
    /// Search a triangular beam-splitter mesh for the best analyzer.
    Optimize(OptimizeArgs),
    /// Write the full circuit of a protocol instance as JSON.
    Export(ExportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    /// Aligned plain-text table (`table` only).
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct ProtocolArgs {
    /// Protocol id, e.g. hyper_momentum, timebin, ancilla, sfg.
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: ProtocolId,
    /// State angle for single-angle protocols. Accepts `pi/4`-style values.
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// First angle of the two-angle protocols (ancilla, sfg).
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub theta1: Option<f64>,
    /// Second angle of the two-angle protocols.
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub theta2: Option<f64>,
    /// `circuit` evolves the inputs; `literal` starts from the reference outputs.
    #[arg(long, default_value = "circuit", value_parser = parse_mode)]
    pub mode: BuildMode,
    /// Number of ancilla pairs (ancilla protocol only).
    #[arg(long, default_value_t = 1)]
    pub pairs: usize,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Comma-separated priors, one per input state.
    #[arg(long, value_parser = parse_priors)]
    pub priors: Option<Priors>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Interior grid `start:end:points`; endpoints are never sampled.
    #[arg(long, default_value = "0:pi/2:64", value_parser = parse_sweep)]
    pub sweep: SweepSpec,
    #[arg(long, value_parser = parse_priors)]
    pub priors: Option<Priors>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// Bell-like angle of the dual-rail inputs; `pi/4` gives Bell states.
    #[arg(long, default_value = "pi/4", value_parser = parse_angle)]
    pub theta: f64,
    /// Number of interferometer modes (at least 4).
    #[arg(long, default_value_t = 4)]
    pub modes: usize,
    /// Objective evaluations shared by all restarts.
    #[arg(long, default_value_t = 20_000)]
    pub budget: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Priors(pub Vec<f64>);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl SweepSpec {
    /// `points` equally spaced values strictly inside `(start, end)`.
    pub fn grid(&self) -> Vec<f64> {
        let step = (self.end - self.start) / (self.points + 1) as f64;
        (1..=self.points)
            .map(|k| self.start + step * k as f64)
            .collect()
    }
}

fn parse_protocol(s: &str) -> Result<ProtocolId, String> {
    s.parse().map_err(|e: belldisc_core::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<BuildMode, String> {
    s.parse().map_err(|e: belldisc_core::Error| e.to_string())
}

/// Parses a float or a multiple of π written as `pi`, `pi/4`, `3pi/8`, `0.5*pi`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let bad = || format!("cannot read {s:?} as an angle");
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim().parse::<f64>().map_err(|_| bad())?),
        None => (t, 1.0),
    };
    let coeff = num
        .strip_suffix("pi")
        .ok_or_else(bad)?
        .trim_end_matches('*')
        .trim();
    let coeff = if coeff.is_empty() {
        1.0
    } else if coeff == "-" {
        -1.0
    } else {
        coeff.parse::<f64>().map_err(|_| bad())?
    };
    if den == 0.0 {
        return Err(bad());
    }
    Ok(coeff * PI / den)
}

fn parse_priors(s: &str) -> Result<Priors, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("cannot read prior {p:?}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Priors)
}

fn parse_sweep(s: &str) -> Result<SweepSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, end, points] = parts[..] else {
        return Err(format!("expected start:end:points, got {s:?}"));
    };
    let spec = SweepSpec {
        start: parse_angle(start)?,
        end: parse_angle(end)?,
        points: points
            .trim()
            .parse()
            .map_err(|_| format!("cannot read point count {points:?}"))?,
    };
    if spec.points < 2 {
        return Err("a sweep needs at least 2 points".into());
    }
    if !(spec.start >= 0.0 && spec.start < spec.end && spec.end <= FRAC_PI_2 + 1e-15) {
        return Err(format!(
            "sweep range [{}, {}] must satisfy 0 ≤ start < end ≤ π/2",
            spec.start, spec.end
        ));
    }
    Ok(spec)
}

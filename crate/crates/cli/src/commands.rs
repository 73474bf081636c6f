use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use belldisc_core::discrimination::{closed_form, Formula, TAU_ZERO, TIMEBIN_EXCLUSION};
use belldisc_core::optimizer::{dual_rail_bell_like, optimize, OptimizeConfig};
use belldisc_core::protocols::{build, BuildMode, Params, ProtocolId, ProtocolRun, Verification};
use belldisc_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{ExportArgs, Format, OptimizeArgs, ProtocolArgs, RunArgs, SweepArgs, TableArgs};

/// Largest tolerated gap between the optimizer's objective and the
/// independently recomputed success.
const RECOMPUTE_TOL: f64 = 1e-12;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters outside a protocol's domain.
    Usage(String),
    /// The simulation ran but its output failed a consistency check.
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::Parameter(_)
            | Error::Domain(_)
            | Error::Input(_)
            | Error::Parse { .. }
            | Error::Shape(_)
            | Error::Binding(_) => CliError::Usage(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Fixed-precision rendering so that CSV output is byte-stable.
fn num(v: f64) -> String {
    let v = if v.abs() < 5e-13 { 0.0 } else { v };
    format!("{v:.12}")
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn csv_bytes(rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("output values always serialize");
    text.push('\n');
    text.into_bytes()
}

fn format_or(requested: Option<Format>, default: Format, allowed: &[Format]) -> CliResult<Format> {
    let f = requested.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::Usage(format!(
            "format {f:?} is not available for this command"
        )))
    }
}

fn params_from(args: &ProtocolArgs) -> CliResult<Params> {
    let id = args.protocol;
    let params = if id.takes_two_angles() {
        let (t1, t2) = match (args.theta, args.theta1, args.theta2) {
            (Some(t), None, None) => (t, t),
            (None, Some(a), Some(b)) => (a, b),
            _ => {
                return Err(CliError::Usage(format!(
                    "{id} needs --theta1 and --theta2 (or a shared --theta)"
                )))
            }
        };
        Params::angles(t1, t2)
    } else {
        if args.theta1.is_some() || args.theta2.is_some() {
            return Err(CliError::Usage(format!("{id} takes a single --theta")));
        }
        let theta = args
            .theta
            .ok_or_else(|| CliError::Usage(format!("{id} needs --theta")))?;
        Params::theta(theta)
    };
    if args.pairs != 1 && id != ProtocolId::Ancilla {
        return Err(CliError::Usage(
            "--pairs applies to the ancilla protocol only".into(),
        ));
    }
    Ok(params.with_pairs(args.pairs))
}

/// Reference success formula for an instance, if one exists.
fn closed_form_for(id: ProtocolId, params: &Params) -> CliResult<Option<f64>> {
    let value = match id {
        ProtocolId::HyperMomentum => closed_form(Formula::HyperMomentum, &[params.single()?])?,
        ProtocolId::HyperPolarization => {
            closed_form(Formula::HyperPolarization, &[params.single()?])?
        }
        ProtocolId::HyperOam => closed_form(Formula::HyperOam, &[params.single()?])?,
        ProtocolId::Timebin => closed_form(Formula::Timebin, &[params.single()?])?,
        ProtocolId::Sfg => {
            let (t1, t2) = params.pair()?;
            closed_form(Formula::Sfg, &[t1, t2])?
        }
        ProtocolId::Ancilla if params.pairs == 1 => {
            let (t1, t2) = params.pair()?;
            if t1 == t2 {
                closed_form(Formula::AncillaEqual, &[t2])?
            } else {
                closed_form(Formula::AncillaGeneral, &[t1, t2])?
            }
        }
        ProtocolId::Ancilla | ProtocolId::Baseline => return Ok(None),
    };
    Ok(Some(value))
}

fn run_instance(
    id: ProtocolId,
    params: &Params,
    mode: BuildMode,
    priors: Option<&[f64]>,
) -> CliResult<(ProtocolRun, Verification)> {
    let instance = build(id, params, mode)?;
    let run = instance.run(priors)?;
    Ok((run, instance.verification))
}

/// Checks that every event claimed as a signature really excludes the
/// other inputs.
fn check_soundness(run: &ProtocolRun) -> CliResult<()> {
    let cross = run.report.max_cross_probability();
    if cross >= TAU_ZERO {
        return Err(CliError::Validation(format!(
            "an unambiguous event has cross probability {cross:e}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct RunOutput<'a> {
    protocol: ProtocolId,
    params: Params,
    mode: BuildMode,
    verification: Verification,
    closed_form: Option<f64>,
    discarded: &'a [f64],
    report: &'a belldisc_core::discrimination::DiscriminationReport,
}

pub fn run(args: &RunArgs) -> CliResult<()> {
    let format = format_or(
        args.output.format,
        Format::Json,
        &[Format::Json, Format::Csv],
    )?;
    let id = args.protocol.protocol;
    let params = params_from(&args.protocol)?;
    let priors = args.priors.as_ref().map(|p| p.0.as_slice());
    let cf = closed_form_for(id, &params)?;
    let (run, verification) = run_instance(id, &params, args.protocol.mode, priors)?;

    let bytes = match format {
        Format::Json => json_bytes(&RunOutput {
            protocol: id,
            params,
            mode: args.protocol.mode,
            verification,
            closed_form: cf,
            discarded: &run.discarded,
            report: &run.report,
        }),
        _ => {
            let report = &run.report;
            let mut rows = Vec::new();
            let mut header = vec!["event".to_string()];
            header.extend(report.inputs.iter().cloned());
            header.push("unambiguous_for".into());
            rows.push(header);
            for row in &report.event_table {
                let mut r = vec![row.event.clone()];
                r.extend(row.probabilities.iter().map(|&p| num(p)));
                r.push(
                    row.unambiguous_for
                        .map(|i| report.inputs[i].clone())
                        .unwrap_or_default(),
                );
                rows.push(r);
            }
            let mut per_state = vec!["per_state_success".to_string()];
            per_state.extend(report.per_state_success.iter().map(|&p| num(p)));
            rows.push(per_state);
            rows.push(vec![
                "success_probability".into(),
                num(report.success_probability),
            ]);
            rows.push(vec!["closed_form".into(), cf.map(num).unwrap_or_default()]);
            csv_bytes(&rows)?
        }
    };
    emit(args.output.out.as_deref(), &bytes)?;

    check_soundness(&run)?;
    if let Verification::Unverified { residual } = verification {
        return Err(CliError::Validation(format!(
            "circuit output deviates from the reference expansion by {residual:e}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    theta: f64,
    achieved: f64,
    closed_form: Option<f64>,
    abs_diff: Option<f64>,
}

#[derive(Serialize)]
struct SweepOutput {
    protocol: ProtocolId,
    swept: &'static str,
    rows: Vec<SweepRow>,
    max_abs_diff: Option<f64>,
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let format = format_or(
        args.output.format,
        Format::Csv,
        &[Format::Json, Format::Csv],
    )?;
    let pa = &args.protocol;
    let id = pa.protocol;
    if pa.pairs != 1 && id != ProtocolId::Ancilla {
        return Err(CliError::Usage(
            "--pairs applies to the ancilla protocol only".into(),
        ));
    }
    let (swept, make): (&'static str, Box<dyn Fn(f64) -> Params + Sync>) = if id.takes_two_angles()
    {
        match (pa.theta, pa.theta1, pa.theta2) {
            (None, None, None) => ("theta1=theta2", Box::new(|t| Params::angles(t, t))),
            (None, Some(a), None) => ("theta2", Box::new(move |t| Params::angles(a, t))),
            (None, None, Some(b)) => ("theta1", Box::new(move |t| Params::angles(t, b))),
            _ => {
                return Err(CliError::Usage(
                    "fix at most one of --theta1/--theta2 during a sweep".into(),
                ))
            }
        }
    } else {
        if pa.theta.is_some() || pa.theta1.is_some() || pa.theta2.is_some() {
            return Err(CliError::Usage(format!("{id} sweeps its only angle")));
        }
        ("theta", Box::new(Params::theta))
    };

    let mut grid = args.sweep.grid();
    if id == ProtocolId::Timebin {
        grid.retain(|t| (t - FRAC_PI_4).abs() >= TIMEBIN_EXCLUSION);
    }
    let priors = args.priors.as_ref().map(|p| p.0.as_slice());
    let rows = grid
        .par_iter()
        .map(|&theta| {
            let params = make(theta).with_pairs(pa.pairs);
            let cf = closed_form_for(id, &params)?;
            let (run, _) = run_instance(id, &params, pa.mode, priors)?;
            check_soundness(&run)?;
            let achieved = run.report.success_probability;
            Ok(SweepRow {
                theta,
                achieved,
                closed_form: cf,
                abs_diff: cf.map(|c| (achieved - c).abs()),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let max_abs_diff = rows
        .iter()
        .filter_map(|r| r.abs_diff)
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));

    let bytes = match format {
        Format::Json => json_bytes(&SweepOutput {
            protocol: id,
            swept,
            rows,
            max_abs_diff,
        }),
        _ => {
            let mut out = vec![vec![
                swept.to_string(),
                "achieved".into(),
                "closed_form".into(),
                "abs_diff".into(),
            ]];
            for r in &rows {
                out.push(vec![
                    num(r.theta),
                    num(r.achieved),
                    r.closed_form.map(num).unwrap_or_default(),
                    r.abs_diff.map(sci).unwrap_or_default(),
                ]);
            }
            out.push(vec![
                "max_abs_diff".into(),
                String::new(),
                String::new(),
                max_abs_diff.map(sci).unwrap_or_default(),
            ]);
            csv_bytes(&out)?
        }
    };
    emit(args.output.out.as_deref(), &bytes)
}

/// One line of the summary table.
#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub system: &'static str,
    pub ancillary: &'static str,
    pub protocol: ProtocolId,
    /// Bell-state value quoted from earlier schemes.
    pub bell_cited: &'static str,
    /// This artifact's success at θ = π/4, when the protocol admits it.
    pub bell_achieved: Option<f64>,
    pub bell_like_cited: &'static str,
    pub bell_like_achieved: f64,
    pub bell_like_theta: f64,
}

const TABLE_SPEC: [(&str, &str, ProtocolId, &str, &str); 6] = [
    (
        "Polarisation DOF",
        "Spatial DOF",
        ProtocolId::HyperPolarization,
        "100%",
        "50%",
    ),
    (
        "Spatial DOF",
        "Polarisation DOF",
        ProtocolId::HyperMomentum,
        "100%",
        "50%",
    ),
    (
        "Polarisation DOF",
        "OAM DOF",
        ProtocolId::HyperOam,
        "100%",
        "50%",
    ),
    (
        "Polarisation DOF",
        "Time DOF",
        ProtocolId::Timebin,
        "100%",
        ">25% <50%",
    ),
    (
        "Extra ancillary",
        "photon pair",
        ProtocolId::Ancilla,
        "75%",
        ">25% (depends on angles)",
    ),
    ("Using SFG", "", ProtocolId::Sfg, "100%", "100%"),
];

fn params_at(id: ProtocolId, theta: f64) -> Params {
    if id.takes_two_angles() {
        Params::angles(theta, theta)
    } else {
        Params::theta(theta)
    }
}

/// Recomputes every row: the Bell column at θ = π/4, the Bell-like
/// column at θ = π/6.
pub fn table_rows() -> CliResult<Vec<TableRow>> {
    let bell_like_theta = PI / 6.0;
    TABLE_SPEC
        .par_iter()
        .map(|&(system, ancillary, id, bell_cited, bell_like_cited)| {
            let bell_achieved =
                match run_instance(id, &params_at(id, FRAC_PI_4), BuildMode::Circuit, None) {
                    Ok((run, _)) => Some(run.report.success_probability),
                    Err(CliError::Usage(_)) => None,
                    Err(e) => return Err(e),
                };
            let (run, _) = run_instance(
                id,
                &params_at(id, bell_like_theta),
                BuildMode::Circuit,
                None,
            )?;
            check_soundness(&run)?;
            Ok(TableRow {
                system,
                ancillary,
                protocol: id,
                bell_cited,
                bell_achieved,
                bell_like_cited,
                bell_like_achieved: run.report.success_probability,
                bell_like_theta,
            })
        })
        .collect()
}

fn render_text(rows: &[TableRow]) -> String {
    let header = [
        "System qubits",
        "Ancillary qubits",
        "Bell (cited)",
        "Bell (achieved, θ=π/4)",
        "Bell-like (cited)",
        "Bell-like (achieved, θ=π/6)",
    ];
    let body: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.system.to_string(),
                r.ancillary.to_string(),
                format!("{} [cited]", r.bell_cited),
                r.bell_achieved
                    .map(|v| format!("{:.4}", v))
                    .unwrap_or_else(|| "n/a (outside domain)".into()),
                r.bell_like_cited.to_string(),
                format!("{:.4}", r.bell_like_achieved),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let rule = format!(
        "+{}+\n",
        widths
            .iter()
            .map(|&w| "-".repeat(w + 2))
            .collect::<Vec<_>>()
            .join("+")
    );
    let mut out = rule.clone();
    out.push_str(&line(&header.map(String::from)));
    out.push_str(&rule);
    for row in &body {
        out.push_str(&line(row));
    }
    out.push_str(&rule);
    out
}

pub fn table(args: &TableArgs) -> CliResult<()> {
    let format = format_or(
        args.output.format,
        Format::Text,
        &[Format::Text, Format::Csv, Format::Json],
    )?;
    let rows = table_rows()?;
    let bytes = match format {
        Format::Text => render_text(&rows).into_bytes(),
        Format::Json => json_bytes(&rows),
        Format::Csv => {
            let mut out = vec![[
                "system",
                "ancillary",
                "protocol",
                "bell_cited",
                "bell_achieved",
                "bell_like_cited",
                "bell_like_achieved",
            ]
            .map(String::from)
            .to_vec()];
            for r in &rows {
                out.push(vec![
                    r.system.into(),
                    r.ancillary.into(),
                    r.protocol.name().into(),
                    format!("{} [cited]", r.bell_cited),
                    r.bell_achieved.map(num).unwrap_or_default(),
                    r.bell_like_cited.into(),
                    num(r.bell_like_achieved),
                ]);
            }
            csv_bytes(&out)?
        }
    };
    emit(args.output.out.as_deref(), &bytes)
}

pub fn optimize_cmd(args: &OptimizeArgs) -> CliResult<()> {
    let format = format_or(
        args.output.format,
        Format::Json,
        &[Format::Json, Format::Csv],
    )?;
    let inputs = dual_rail_bell_like(args.theta)?;
    let mut config = OptimizeConfig::new(args.modes, args.budget, args.seed);
    if let Some(r) = args.restarts {
        config.restarts = r;
    }
    let result = optimize(&inputs, None, &config)?;
    let bytes = match format {
        Format::Json => {
            let mut text = result.to_json();
            text.push('\n');
            text.into_bytes()
        }
        _ => {
            let mut rows = vec![["restart", "evaluations", "success", "best_so_far"]
                .map(String::from)
                .to_vec()];
            for t in &result.trace {
                rows.push(vec![
                    t.restart.to_string(),
                    t.evaluations.to_string(),
                    num(t.success),
                    num(t.best_so_far),
                ]);
            }
            rows.push(vec!["success".into(), num(result.success)]);
            rows.push(vec![
                "recomputed_success".into(),
                num(result.recomputed_success),
            ]);
            rows.push(vec!["evaluations".into(), result.evaluations.to_string()]);
            csv_bytes(&rows)?
        }
    };
    emit(args.output.out.as_deref(), &bytes)?;
    let gap = (result.success - result.recomputed_success).abs();
    if gap > RECOMPUTE_TOL {
        return Err(CliError::Validation(format!(
            "objective and recomputed success differ by {gap:e}"
        )));
    }
    Ok(())
}

pub fn export(args: &ExportArgs) -> CliResult<()> {
    let params = params_from(&args.protocol)?;
    let instance = build(args.protocol.protocol, &params, args.protocol.mode)?;
    let mut text = instance.full_circuit().to_json();
    text.push('\n');
    emit(args.out.as_deref(), text.as_bytes())
}

//! Command dispatch and report emission.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use cswire::correlation::{correlation_series, named_observable, within_bound, CorrelationSeries};
use cswire::download::{download, DownloadOptions, DownloadTrace, Rotation};
use cswire::io::{
    format_real, parse_matrix_json, parse_mps_json, parse_preset_spec, parse_program_json, series_csv, to_json,
    traces_jsonl,
};
use cswire::mps::{MpsChain, PRESET_NAMES};
use cswire::oracle::{compare_with_oracle, OracleComparison};
use cswire::pauli::Ket;
use cswire::sim::{check_condition, measured_form, run_program, ConditionReport, MeasuredForm, MeasurementBasis, ProgramStep};
use cswire::transfer::{
    analyze, correlation_length, detect_finite_depolarizing, ClassificationResult, ClassifyOptions, CorrelationLength,
};
use serde::Serialize;

use super::{Command, Format, Output, Source};

/// Fidelity below `1 − FIDELITY_TOL` counts as a failed download.
const FIDELITY_TOL: f64 = 1e-9;
/// Largest accepted j-independence residual and oracle deviation.
const EXACT_TOL: f64 = 1e-10;

#[derive(Debug)]
pub enum CliError {
    Core(cswire::Error),
    Io { path: String, message: String },
    Format { command: &'static str, format: Format },
}

impl CliError {
    /// 2 for unreadable or unparsable input, 3 for validation failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(cswire::Error::Parse(_)) | CliError::Io { .. } | CliError::Format { .. } => 2,
            CliError::Core(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, message } => write!(f, "{path}: {message}"),
            CliError::Format { command, format } => write!(f, "{command} does not support the {format:?} format"),
        }
    }
}

impl From<cswire::Error> for CliError {
    fn from(e: cswire::Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Load and validate a chain from a preset spec or an MPS file.
pub fn load_mps(src: &Source) -> Result<(String, MpsChain)> {
    if let Some(spec) = &src.preset {
        return load_preset(spec);
    }
    if let Some(path) = &src.input {
        return load_file(path, src.tol);
    }
    match &src.source {
        Some(s) if s.starts_with("preset:") => load_preset(s),
        Some(s) => load_file(Path::new(s), src.tol),
        None => Err(cswire::Error::Parse("no input given: pass a preset spec or a file path".into()).into()),
    }
}

fn load_preset(spec: &str) -> Result<(String, MpsChain)> {
    let p = parse_preset_spec(spec)?;
    Ok((spec.to_string(), p.chain()?))
}

fn load_file(path: &Path, tol: f64) -> Result<(String, MpsChain)> {
    let chain = parse_mps_json(&read(path)?)?.to_chain(tol)?;
    Ok((path.display().to_string(), chain))
}

fn emit(output: &Output, bytes: &str) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io { path: "<stdout>".into(), message: e.to_string() })
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = to_json(value, true)?;
    s.push('\n');
    Ok(s)
}

fn reals(xs: &[f64]) -> String {
    xs.iter().map(|x| format_real(*x)).collect::<Vec<_>>().join(", ")
}

fn ket_text(k: &Ket) -> String {
    let z = |c: &cswire::C64| format!("({}, {})", format_real(c.re), format_real(c.im));
    format!("[{}, {}]", z(&k[0]), z(&k[1]))
}

pub fn run(command: Command) -> Result<u8> {
    match command {
        Command::Analyze { source, output, lmax } => cmd_analyze(&source, &output, lmax),
        Command::Simulate { source, output, seed, shots, program } => {
            cmd_simulate(&source, &output, seed, shots, program.as_deref())
        }
        Command::Correlate { source, output, site, rmax, obs_a, obs_b } => {
            cmd_correlate(&source, &output, site, rmax, &obs_a, &obs_b)
        }
        Command::VerifyProjective { source, output, site } => cmd_verify(&source, &output, site),
        Command::Download { source, output, seed, rotation, skip_rotation } => {
            let rotation = if skip_rotation { "skip".to_string() } else { rotation };
            cmd_download(&source, &output, seed, &rotation)
        }
        Command::Oracle { source, output } => cmd_oracle(&source, &output),
        Command::Presets { output } => cmd_presets(&output),
    }
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    command: &'static str,
    source: &'a str,
    n: usize,
    d: usize,
    classification: &'a ClassificationResult,
    correlation_length: &'a CorrelationLength,
    measured_form: Option<&'a MeasuredForm>,
}

fn cmd_analyze(src: &Source, output: &Output, lmax: usize) -> Result<u8> {
    let (name, chain) = load_mps(src)?;
    let opts = ClassifyOptions { tol: src.tol, ..ClassifyOptions::default() };
    let r = analyze(chain.kraus(), lmax, &opts)?;
    let xi = correlation_length(chain.kraus(), src.tol)?;
    let form = measured_form(chain.kraus(), src.tol).ok();
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => json(&AnalyzeReport {
            command: "analyze",
            source: &name,
            n: chain.n(),
            d: chain.d(),
            classification: &r,
            correlation_length: &xi,
            measured_form: form.as_ref(),
        })?,
        Format::Text => {
            let mut t = format!("source: {name} (n = {}, d = {})\n", chain.n(), chain.d());
            t += &format!("verdict: {}\n", r.verdict);
            if let Some(v) = r.theorem_verdict {
                t += &format!("theorem verdict: {v}\n");
            }
            if let Some(u3) = r.u3 {
                t += &format!("u3: {u3:+}\n");
            }
            if let Some(rate) = r.decay_rate {
                t += &format!("decay rate: {}\n", format_real(rate));
            }
            if !r.phases.is_empty() {
                t += &format!("phases: {}\n", reals(&r.phases));
            }
            t += &format!("block norm: {}\n", format_real(r.evidence.block_norm));
            t += &format!("spectral radius: {}\n", format_real(xi.lambda));
            t += &format!("correlation length: {}\n", format_real(xi.xi));
            t += &format!("marginal: {}\n", r.marginal);
            t
        }
        format => return Err(CliError::Format { command: "analyze", format }),
    };
    emit(output, &text)?;
    Ok(0)
}

fn cmd_simulate(src: &Source, output: &Output, seed: u64, shots: u64, program: Option<&Path>) -> Result<u8> {
    let (_, chain) = load_mps(src)?;
    let program = match program {
        Some(path) => parse_program_json(&read(path)?, src.tol)?,
        None => (1..=chain.n())
            .map(|site| ProgramStep { site, basis: MeasurementBasis::computational(chain.d()) })
            .collect(),
    };
    let traces = run_program(&chain, &program, seed, shots)?;
    let text = match output.format.unwrap_or(Format::Jsonl) {
        Format::Jsonl => traces_jsonl(&traces)?,
        Format::Json => json(&traces)?,
        format => return Err(CliError::Format { command: "simulate", format }),
    };
    emit(output, &text)?;
    Ok(0)
}

fn observable(spec: &str, d: usize) -> Result<cswire::DMatrix<cswire::C64>> {
    match named_observable(spec, d) {
        Some(m) => Ok(m),
        None => Ok(parse_matrix_json(&read(Path::new(spec))?)?),
    }
}

#[derive(Serialize)]
struct CorrelateReport<'a> {
    command: &'static str,
    source: &'a str,
    obs_a: &'a str,
    obs_b: &'a str,
    series: &'a CorrelationSeries,
}

fn cmd_correlate(
    src: &Source,
    output: &Output,
    site: usize,
    rmax: Option<usize>,
    obs_a: &str,
    obs_b: &str,
) -> Result<u8> {
    let (name, chain) = load_mps(src)?;
    let a = observable(obs_a, chain.d())?;
    let b = observable(obs_b, chain.d())?;
    let rmax = rmax.unwrap_or_else(|| chain.n().saturating_sub(site).min(10));
    let series = correlation_series(&chain, &a, &b, site, rmax)?;
    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Csv => series_csv(&series),
        Format::Json => json(&CorrelateReport { command: "correlate", source: &name, obs_a, obs_b, series: &series })?,
        format => return Err(CliError::Format { command: "correlate", format }),
    };
    emit(output, &text)?;
    let exceeded = series.connected.iter().zip(&series.bound).any(|(c, b)| b.is_finite() && !within_bound(*c, *b));
    Ok(if exceeded { 1 } else { 0 })
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    command: &'static str,
    source: &'a str,
    measured_form: &'a MeasuredForm,
    sites: &'a [ConditionReport],
    holds: bool,
}

fn cmd_verify(src: &Source, output: &Output, site: Option<usize>) -> Result<u8> {
    let (name, chain) = load_mps(src)?;
    let form = measured_form(chain.kraus(), src.tol)?;
    let sites: Vec<usize> = match site {
        Some(k) => vec![k],
        None => (1..=chain.n()).collect(),
    };
    let rows = sites.iter().map(|&k| check_condition(&chain, k, src.tol)).collect::<cswire::Result<Vec<_>>>()?;
    let holds = rows.iter().all(|r| r.holds);
    let text = match output.format.unwrap_or(Format::Text) {
        Format::Text => {
            let mut t = format!("source: {name}\nsite f0 f1 |f0-f1| holds\n");
            for r in &rows {
                t += &format!(
                    "{} {} {} {} {}\n",
                    r.site,
                    format_real(r.f0),
                    format_real(r.f1),
                    format_real((r.f0 - r.f1).abs()),
                    r.holds
                );
            }
            t
        }
        Format::Csv => {
            let mut t = String::from("site,f0,f1,holds\n");
            for r in &rows {
                t += &format!("{},{},{},{}\n", r.site, format_real(r.f0), format_real(r.f1), r.holds);
            }
            t
        }
        Format::Json => json(&VerifyReport {
            command: "verify-projective",
            source: &name,
            measured_form: &form,
            sites: &rows,
            holds,
        })?,
        format => return Err(CliError::Format { command: "verify-projective", format }),
    };
    emit(output, &text)?;
    Ok(if holds { 0 } else { 1 })
}

#[derive(Serialize)]
struct DownloadReport<'a> {
    command: &'static str,
    source: &'a str,
    seed: u64,
    rotation: &'a str,
    trace: &'a DownloadTrace,
    faithful: bool,
}

fn cmd_download(src: &Source, output: &Output, seed: u64, rotation: &str) -> Result<u8> {
    let (name, chain) = load_mps(src)?;
    let rot = match rotation {
        "identity" => Rotation::Identity,
        "skip" => Rotation::Skip,
        path => Rotation::Program(parse_program_json(&read(Path::new(path))?, src.tol)?),
    };
    let opts = DownloadOptions { rotation: rot, tol: src.tol, ..DownloadOptions::default() };
    let trace = download(&chain, seed, &opts)?;
    let faithful = trace.fidelity >= 1.0 - FIDELITY_TOL
        && trace.j_independence_residual.is_none_or(|r| r <= EXACT_TOL);
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => json(&DownloadReport { command: "download", source: &name, seed, rotation, trace: &trace, faithful })?,
        Format::Text => {
            let mut t = format!("source: {name}\n");
            t += &format!("psi: {}\n", ket_text(&trace.psi));
            t += &format!("site: {}\nattempts: {}\nk': {}\n", trace.site, trace.attempts, trace.k_prime);
            t += &format!("rotation verified: {}\n", trace.rotation_verified);
            t += &format!("final outcome: {}\n", trace.final_outcome);
            t += &format!("fidelity: {}\n", format_real(trace.fidelity));
            if let Some(r) = trace.j_independence_residual {
                t += &format!("j-independence residual: {}\n", format_real(r));
            }
            t += &format!("faithful: {faithful}\n");
            t
        }
        format => return Err(CliError::Format { command: "download", format }),
    };
    emit(output, &text)?;
    Ok(if faithful { 0 } else { 1 })
}

#[derive(Serialize)]
struct OracleReport<'a> {
    command: &'static str,
    source: &'a str,
    n: usize,
    d: usize,
    comparison: &'a OracleComparison,
    within_tolerance: bool,
}

fn cmd_oracle(src: &Source, output: &Output) -> Result<u8> {
    let (name, chain) = load_mps(src)?;
    let c = compare_with_oracle(&chain)?;
    let ok = c.max_deviation <= EXACT_TOL;
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => json(&OracleReport {
            command: "oracle",
            source: &name,
            n: chain.n(),
            d: chain.d(),
            comparison: &c,
            within_tolerance: ok,
        })?,
        Format::Text => format!(
            "source: {name}\nquantity transfer-vs-oracle max deviation\nnormalization {}\nmarginals {}\ncorrelators {}\nmax {}\n",
            format_real(c.normalization),
            format_real(c.marginals),
            format_real(c.correlators),
            format_real(c.max_deviation)
        ),
        format => return Err(CliError::Format { command: "oracle", format }),
    };
    emit(output, &text)?;
    Ok(if ok { 0 } else { 1 })
}

#[derive(Serialize)]
struct PresetInfo {
    name: &'static str,
    d: usize,
    left: Ket,
    right: Ket,
    finite_depolarizing_length: Option<usize>,
}

fn cmd_presets(output: &Output) -> Result<u8> {
    let infos = PRESET_NAMES
        .iter()
        .map(|&name| {
            let p = parse_preset_spec(name)?;
            let k = p.preset.kraus()?;
            Ok(PresetInfo {
                name,
                d: k.d(),
                left: *p.left.ket(),
                right: *p.right.ket(),
                finite_depolarizing_length: detect_finite_depolarizing(&k, 3, 1e-9)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match output.format.unwrap_or(Format::Text) {
        Format::Text => {
            let mut t = String::from("name d left right finite_l\n");
            for i in &infos {
                let l = i.finite_depolarizing_length.map_or("-".to_string(), |l| l.to_string());
                t += &format!("{} {} {} {} {}\n", i.name, i.d, ket_text(&i.left), ket_text(&i.right), l);
            }
            t
        }
        Format::Json => json(&infos)?,
        format => return Err(CliError::Format { command: "presets", format }),
    };
    emit(output, &text)?;
    Ok(0)
}

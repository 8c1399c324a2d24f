//! `fmrw`: failure mode reasoning workbench.
//!
//! Exit status is 0 on success, 1 when the inputs are well-formed but the
//! check fails (invalid program, oracle violation), and 2 for usage and
//! input errors.

mod inputs;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fmr_core::fmr::{Mode, ShortList};
use fmr_core::interchange::{export_cft_csv, export_hiphops_xml, write_atomic};
use fmr_core::oracle::fuzz::{run_fuzz, seed_from_env, FuzzConfig};
use fmr_core::oracle::{check_completeness, check_soundness, OracleConfig};
use fmr_core::quant::{Method, QuantConfig, DEFAULT_RISK_TIME};
use fmr_core::report::{sci3, AnalysisReport, SystemReport};
use fmr_core::system::{synthesize, TopEvent};

#[derive(Debug)]
pub struct Fail {
    code: u8,
    message: String,
}

impl Fail {
    fn input(message: impl Into<String>) -> Self {
        Fail {
            code: 2,
            message: message.into(),
        }
    }

    fn finding(message: impl Into<String>) -> Self {
        Fail {
            code: 1,
            message: message.into(),
        }
    }
}

#[derive(Parser)]
#[command(name = "fmrw", version, about = "Failure mode reasoning workbench for safety programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a program or system model for structural errors.
    Validate(ValidateArgs),
    /// Derive the short list of input failure modes for an output deviation.
    Analyze(AnalyzeArgs),
    /// Quantify a short list against failure data.
    Quantify(QuantifyArgs),
    /// Synthesize and quantify the cut sets of a system model's top events.
    Compose(ComposeArgs),
    /// Check a short list against fault-injection simulation, or fuzz.
    Verify(VerifyArgs),
    /// Write a short list with its failure data as XML or CSV.
    Export(ExportArgs),
    /// Render a report for a program target or a system model.
    Report(ReportArgs),
}

#[derive(Args)]
struct ProgramArgs {
    /// Program file (JSON); defaults to the bundled drum-level program.
    #[arg(long)]
    program: Option<PathBuf>,
}

#[derive(Args)]
struct TargetArgs {
    #[command(flatten)]
    program: ProgramArgs,
    /// Output name or net id.
    #[arg(long)]
    target: String,
    #[arg(long, value_parser = parse_mode)]
    mode: Mode,
    /// Named profile for intended values; defaults to the demand profile.
    #[arg(long, conflicts_with = "no_profile")]
    profile: Option<String>,
    /// Analyze with no intended values.
    #[arg(long)]
    no_profile: bool,
}

#[derive(Args)]
struct QuantArgs {
    /// Failure database CSV; defaults to the bundled case-study data.
    #[arg(long)]
    failure_data: Option<PathBuf>,
    #[arg(long, value_parser = parse_method, default_value = "ep")]
    method: Method,
    #[arg(long, default_value_t = DEFAULT_RISK_TIME)]
    risk_time: f64,
}

impl QuantArgs {
    fn config(&self) -> Result<QuantConfig, Fail> {
        if !(self.risk_time.is_finite() && self.risk_time > 0.0) {
            return Err(Fail::input(format!("risk time must be positive, got {}", self.risk_time)));
        }
        Ok(QuantConfig {
            risk_time: self.risk_time,
            method: self.method,
        })
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, conflicts_with = "system")]
    program: Option<PathBuf>,
    #[arg(long)]
    system: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ListFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: ListFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QuantifyArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    quant: QuantArgs,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ComposeArgs {
    /// System model file; defaults to the bundled case study.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Top event such as `SIF.Out1.DU`; defaults to all declared tops.
    #[arg(long)]
    top: Vec<String>,
    #[command(flatten)]
    quant: QuantArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    program: ProgramArgs,
    #[arg(long, required_unless_present = "fuzz")]
    target: Option<String>,
    #[arg(long, value_parser = parse_mode, required_unless_present = "fuzz")]
    mode: Option<Mode>,
    #[arg(long)]
    profile: Option<String>,
    /// Generate and check this many random programs instead; the seed comes
    /// from `FMRW_SEED`.
    #[arg(long, conflicts_with_all = ["target", "mode", "profile", "program"])]
    fuzz: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Xml,
    Csv,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long)]
    failure_data: Option<PathBuf>,
    /// Defaults to the extension of `--out`.
    #[arg(long, value_enum)]
    format: Option<ExportFormat>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Report on a program target instead of a system model.
    #[arg(long, conflicts_with_all = ["system", "du", "st"], requires_all = ["target", "mode"])]
    program: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    system: Option<PathBuf>,
    /// Include tops for dangerous undetected failure.
    #[arg(long)]
    du: bool,
    /// Include tops for spurious trip.
    #[arg(long)]
    st: bool,
    #[command(flatten)]
    quant: QuantArgs,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: fmr_core::fmr::LiteralParseError| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Fail> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()).map_err(|e| Fail::input(e.to_string())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Fail::input(format!("stdout: {e}")))
        }
    }
}

fn target_shortlist(t: &TargetArgs) -> Result<(fmr_core::fbd::Program, ShortList), Fail> {
    let p = inputs::program(t.program.program.as_deref())?;
    let choice = inputs::profile_choice(t.profile.as_deref(), t.no_profile);
    let sl = inputs::analyze(&p, &t.target, t.mode, choice)?;
    Ok((p, sl))
}

fn validate(a: &ValidateArgs) -> Result<(), Fail> {
    if let Some(path) = &a.system {
        let m = inputs::system(Some(path))?;
        emit(None, &format!("{}: valid system model `{}`\n", path.display(), m.name))?;
        return Ok(());
    }
    let p = inputs::program(a.program.as_deref())?;
    let name = a.program.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "bundled program".into());
    let diags = inputs::program_diagnostics(&p);
    if diags.is_empty() {
        emit(None, &format!("{name}: valid\n"))
    } else {
        Err(Fail::finding(format!("{name}:\n  {}", diags.join("\n  "))))
    }
}

fn analyze(a: &AnalyzeArgs) -> Result<(), Fail> {
    let (_, sl) = target_shortlist(&a.target)?;
    let text = match a.format {
        ListFormat::Csv => sl.to_table_csv(),
        ListFormat::Json => sl.to_json() + "\n",
    };
    emit(a.out.as_deref(), &text)?;
    for w in &sl.warnings {
        eprintln!("warning: {}", w.condition);
    }
    Ok(())
}

fn quantify(a: &QuantifyArgs) -> Result<(), Fail> {
    let (p, sl) = target_shortlist(&a.target)?;
    let db = inputs::failure_data(a.quant.failure_data.as_deref())?;
    let report = AnalysisReport::build(&p, &sl, &db, &a.quant.config()?).map_err(|e| Fail::input(e.to_string()))?;
    let text = if a.json { report.to_json() + "\n" } else { report.to_text() };
    emit(a.out.as_deref(), &text)
}

fn compose(a: &ComposeArgs) -> Result<(), Fail> {
    let m = inputs::system(a.system.as_deref())?;
    let db = inputs::failure_data(a.quant.failure_data.as_deref())?;
    let cfg = a.quant.config()?;
    let tops = if a.top.is_empty() {
        m.tops.clone()
    } else {
        a.top
            .iter()
            .map(|t| TopEvent::parse(t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Fail::input(e.to_string()))?
    };
    let mut text = String::new();
    for top in &tops {
        let cs = synthesize(&m, top).map_err(|e| Fail::input(e.to_string()))?;
        let a = fmr_core::system::analyze_system(&m, top, &db, &cfg).map_err(|e| Fail::input(e.to_string()))?;
        text.push_str(&format!("top event {} ({} cut sets)\n", cs.top, cs.cut_sets.len()));
        for (set, ms) in cs.cut_sets.iter().zip(&a.measures.cut_sets) {
            text.push_str(&format!("  {}  Q = {}  W = {} /h\n", set.join(" AND "), sci3(ms.q), sci3(ms.w)));
        }
        text.push_str(&format!(
            "  {}: Q = {}  W = {} /h\n",
            cfg.method.to_string().to_uppercase(),
            sci3(a.measures.q),
            sci3(a.measures.w)
        ));
    }
    emit(a.out.as_deref(), &text)
}

fn verify(a: &VerifyArgs) -> Result<(), Fail> {
    if let Some(n) = a.fuzz {
        let report = run_fuzz(n, seed_from_env(), &FuzzConfig::default());
        emit(a.out.as_deref(), &(report.to_json() + "\n"))?;
        return if report.passed() {
            Ok(())
        } else {
            Err(Fail::finding(format!("{} fuzz failures (seed {})", report.failures.len(), report.seed)))
        };
    }
    let (target, mode) = (a.target.as_deref().unwrap_or_default(), a.mode.unwrap_or(Mode::T));
    let p = inputs::program(a.program.program.as_deref())?;
    let choice = inputs::profile_choice(a.profile.as_deref(), false);
    let sl = inputs::analyze(&p, target, mode, choice)?;
    let cfg = OracleConfig::for_target(&p, target, mode, sl.profile.as_deref()).map_err(|e| Fail::input(e.to_string()))?;
    let c = check_completeness(&p, target, mode, &sl, &cfg).map_err(|e| Fail::input(e.to_string()))?;
    let s = check_soundness(&p, target, mode, &sl, &cfg).map_err(|e| Fail::input(e.to_string()))?;
    emit(
        a.out.as_deref(),
        &format!("{{\n\"completeness\": {},\n\"soundness\": {}\n}}\n", c.to_json(), s.to_json()),
    )?;
    if c.passed() && s.passed() {
        Ok(())
    } else {
        Err(Fail::finding(format!(
            "{} completeness and {} soundness violations",
            c.violation_count, s.violation_count
        )))
    }
}

fn export(a: &ExportArgs) -> Result<(), Fail> {
    let format = match a.format {
        Some(f) => f,
        None => match a.out.extension().and_then(|e| e.to_str()) {
            Some("xml") => ExportFormat::Xml,
            Some("csv") => ExportFormat::Csv,
            _ => return Err(Fail::input("cannot infer the export format from --out; pass --format")),
        },
    };
    let (_, sl) = target_shortlist(&a.target)?;
    let db = inputs::failure_data(a.failure_data.as_deref())?;
    match format {
        ExportFormat::Xml => export_hiphops_xml(&sl, &db, &a.out),
        ExportFormat::Csv => export_cft_csv(&sl, &db, &a.out),
    }
    .map_err(|e| Fail::input(e.to_string()))
}

fn report(a: &ReportArgs) -> Result<(), Fail> {
    let db = inputs::failure_data(a.quant.failure_data.as_deref())?;
    let cfg = a.quant.config()?;
    let text = if let Some(path) = &a.program {
        let p = inputs::program(Some(path))?;
        let (target, mode) = (a.target.as_deref().unwrap_or_default(), a.mode.unwrap_or(Mode::T));
        let sl = inputs::analyze(&p, target, mode, inputs::profile_choice(a.profile.as_deref(), false))?;
        let r = AnalysisReport::build(&p, &sl, &db, &cfg).map_err(|e| Fail::input(e.to_string()))?;
        if a.json { r.to_json() + "\n" } else { r.to_text() }
    } else {
        let m = inputs::system(a.system.as_deref())?;
        let wanted = |t: &TopEvent| match (a.du, a.st) {
            (false, false) => true,
            (du, st) => (du && t.deviation.class == "DU") || (st && t.deviation.class == "ST"),
        };
        let tops: Vec<TopEvent> = m.tops.iter().filter(|t| wanted(t)).cloned().collect();
        if tops.is_empty() {
            return Err(Fail::input("the system model declares no matching top events"));
        }
        let r = SystemReport::build(&m, &tops, &db, &cfg).map_err(|e| Fail::input(e.to_string()))?;
        if a.json { r.to_json() + "\n" } else { r.to_text() }
    };
    emit(a.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Analyze(a) => analyze(a),
        Command::Quantify(a) => quantify(a),
        Command::Compose(a) => compose(a),
        Command::Verify(a) => verify(a),
        Command::Export(a) => export(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fmrw: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

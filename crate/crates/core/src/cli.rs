//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation or scoring failure, 2 usage error,
//! 3 unreadable or malformed input file.
//!
//! Catalog arguments accept a file path or one of the embedded catalogs,
//! `@reference` and `@sample`. The catalog location is recorded in the
//! assessment file so later commands find it again.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assessment::{
    diff, Assessment, AssessmentError, EvidenceItem, EvidenceKind, Method, MethodCell,
    ResponseEntry, Satisfaction, DEFAULT_THRESHOLD,
};
use crate::catalog::{
    parse_catalog, select_level, validate_catalog_source, Catalog, CatalogView, FindingLevel,
    HipaaType, RequirementId, SecurityLevel,
};
use crate::effects::{effects_map, PartialPolicy};
use crate::report::{
    compliance_table, compliance_text, radar_svg, render_effects, snapshot, RadarSpec,
};
use crate::scoring::{overall_compliance, ScoringOptions, Verdict};
use crate::service::{ServiceConfig, SessionStore, DEFAULT_PORT};
use crate::store::write_atomic;

pub const REFERENCE_CATALOG_NAME: &str = "@reference";
pub const SAMPLE_CATALOG_NAME: &str = "@sample";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Failure = 1,
    Usage = 2,
    InputFile = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(name = "cuiassess", version, about = "CUI requirement self-assessment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Catalog utilities
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Create an empty assessment file
    Init(InitArgs),
    /// Record the response to one requirement
    Answer(AnswerArgs),
    /// Set the assessment-method matrix of an enhanced requirement
    Methods(MethodsArgs),
    /// Mark the assessment completed
    Complete(CompleteArgs),
    /// Print family and aggregate compliance
    Score(ScoreArgs),
    /// Produce a report
    Report(ReportArgs),
    /// Show field-level changes between two assessment files
    Diff(DiffArgs),
    /// Run the HTTP service
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
enum CatalogCommand {
    /// Check a catalog file and print its counts and findings
    Validate { path: String },
}

#[derive(Debug, Args)]
struct InitArgs {
    /// Catalog file, `@reference` or `@sample`
    catalog: String,
    #[arg(long, default_value = "high")]
    level: SecurityLevel,
    #[arg(long)]
    org: String,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(short, long, default_value = "assessment.json")]
    out: PathBuf,
    /// Replace an existing file
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct LoadArgs {
    /// Use this catalog instead of the one recorded in the assessment
    #[arg(long)]
    catalog: Option<String>,
    /// Accept a catalog whose digest differs from the recorded one
    #[arg(long)]
    allow_catalog_mismatch: bool,
}

fn parse_satisfaction(s: &str) -> Result<(Satisfaction, Option<f64>), String> {
    Satisfaction::parse_with_shortcut(s)
}

fn parse_odp(s: &str) -> Result<(u32, String), String> {
    let (ordinal, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected ORDINAL=VALUE, got {s:?}"))?;
    let ordinal = ordinal
        .trim()
        .parse()
        .map_err(|_| format!("bad parameter ordinal {ordinal:?}"))?;
    Ok((ordinal, value.to_string()))
}

#[derive(Debug, Args)]
struct AnswerArgs {
    assessment: PathBuf,
    requirement: RequirementId,
    /// Y, P, A, N, D, or PL/PM/PH for partial 0.25/0.50/0.75
    #[arg(long, value_parser = parse_satisfaction)]
    sat: (Satisfaction, Option<f64>),
    /// Partial value in (0, 1); required with P
    #[arg(long)]
    partial: Option<f64>,
    #[arg(long, default_value = "")]
    statement: String,
    #[arg(long = "name")]
    names: Vec<String>,
    #[arg(long = "tool")]
    tools: Vec<String>,
    #[arg(long = "hipaa")]
    hipaa: Vec<HipaaType>,
    /// Organization-defined parameter value, ORDINAL=VALUE
    #[arg(long = "odp", value_parser = parse_odp)]
    odp: Vec<(u32, String)>,
    #[arg(long, default_value = "")]
    by: String,
    #[command(flatten)]
    load: LoadArgs,
}

fn parse_cell(s: &str) -> Result<MethodCell, String> {
    let (depth, coverage) = s
        .split_once(',')
        .ok_or_else(|| format!("expected DEPTH,COVERAGE, got {s:?}"))?;
    Ok(MethodCell::new(depth.parse()?, coverage.parse()?))
}

fn parse_evidence(s: &str) -> Result<(Method, EvidenceItem), String> {
    let mut parts = s.splitn(3, ':');
    let (Some(method), Some(kind), Some(description)) = (parts.next(), parts.next(), parts.next())
    else {
        return Err(format!("expected METHOD:KIND:DESCRIPTION, got {s:?}"));
    };
    Ok((
        method.parse()?,
        EvidenceItem {
            kind: kind.parse::<EvidenceKind>()?,
            description: description.to_string(),
        },
    ))
}

#[derive(Debug, Args)]
struct MethodsArgs {
    assessment: PathBuf,
    requirement: RequirementId,
    /// DEPTH,COVERAGE with each basic|focused|comprehensive
    #[arg(long, value_parser = parse_cell)]
    examine: Option<MethodCell>,
    #[arg(long, value_parser = parse_cell)]
    interview: Option<MethodCell>,
    #[arg(long, value_parser = parse_cell)]
    test: Option<MethodCell>,
    /// METHOD:KIND:DESCRIPTION; replaces the evidence list of that method
    #[arg(long, value_parser = parse_evidence)]
    evidence: Vec<(Method, EvidenceItem)>,
    #[command(flatten)]
    load: LoadArgs,
}

#[derive(Debug, Args)]
struct CompleteArgs {
    assessment: PathBuf,
    /// Completion date, YYYY-MM-DD; defaults to today
    #[arg(long)]
    on: Option<NaiveDate>,
    #[command(flatten)]
    load: LoadArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Table,
    Csv,
}

#[derive(Debug, Args)]
struct ScoringArgs {
    /// Score not-applicable answers out of the denominator
    #[arg(long)]
    exclude_na: bool,
    /// Threshold applied to each family; defaults to the aggregate threshold
    #[arg(long)]
    family_threshold: Option<f64>,
}

impl ScoringArgs {
    fn options(&self) -> Result<ScoringOptions, CliError> {
        let opts = ScoringOptions {
            exclude_not_applicable: self.exclude_na,
            family_threshold: None,
        };
        match self.family_threshold {
            Some(t) => opts
                .with_family_threshold(t)
                .map_err(|e| CliError::Usage(e.to_string())),
            None => Ok(opts),
        }
    }
}

#[derive(Debug, Args)]
struct ScoreArgs {
    assessment: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    /// Exit 1 when the aggregate verdict is fail
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[command(flatten)]
    load: LoadArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportKind {
    Snapshot,
    Compliance,
    Effects,
    Radar,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct ReportArgs {
    assessment: PathBuf,
    #[arg(long, value_enum)]
    kind: ReportKind,
    /// text (snapshot text, compliance CSV, effects CSV) or json
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
    /// Count partial answers as not achieving adversary effects
    #[arg(long)]
    strict_partial: bool,
    /// Write to a file instead of stdout
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[command(flatten)]
    load: LoadArgs,
}

#[derive(Debug, Args)]
struct DiffArgs {
    old: PathBuf,
    new: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: TableFormat,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = REFERENCE_CATALOG_NAME)]
    catalog: String,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: std::net::IpAddr,
    #[arg(long)]
    allow_origin: Option<String>,
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Failure(String),
    Usage(String),
    InputFile(String),
}

impl CliError {
    fn status(&self) -> ExitStatus {
        match self {
            CliError::Failure(_) => ExitStatus::Failure,
            CliError::Usage(_) => ExitStatus::Usage,
            CliError::InputFile(_) => ExitStatus::InputFile,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Failure(m) | CliError::Usage(m) | CliError::InputFile(m) => m,
        }
    }
}

impl From<AssessmentError> for CliError {
    fn from(e: AssessmentError) -> Self {
        match e {
            AssessmentError::Schema(_) => CliError::InputFile(e.to_string()),
            AssessmentError::MissingPartialValue
            | AssessmentError::PartialOutOfRange(_)
            | AssessmentError::UnexpectedPartialValue
            | AssessmentError::ThresholdOutOfRange(_)
            | AssessmentError::InvalidOdpValue(_)
            | AssessmentError::IndividualEvidence(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

type CliResult = Result<ExitStatus, CliError>;

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::InputFile(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes)
        .map_err(|e| CliError::InputFile(format!("cannot write {}: {e}", path.display())))
}

/// Loads a catalog by file path or embedded name. Returns the catalog and
/// the location string to record in assessments.
fn resolve_catalog(spec: &str) -> Result<(Catalog, String), CliError> {
    match spec {
        REFERENCE_CATALOG_NAME => Ok((Catalog::reference(), spec.to_string())),
        SAMPLE_CATALOG_NAME => Ok((Catalog::sample(), spec.to_string())),
        path => {
            let path = Path::new(path);
            let text = read_file(path)?;
            let catalog = parse_catalog(&text).map_err(|e| {
                CliError::InputFile(format!("invalid catalog {}: {e}", path.display()))
            })?;
            let location = fs::canonicalize(path)
                .unwrap_or_else(|_| path.to_path_buf())
                .display()
                .to_string();
            Ok((catalog, location))
        }
    }
}

/// Reads an assessment file together with its catalog view.
fn load_assessment(
    path: &Path,
    load: &LoadArgs,
    err: &mut dyn Write,
) -> Result<(Assessment, CatalogView), CliError> {
    let text = read_file(path)?;
    let recorded = Assessment::from_json(&text)
        .map_err(|e| CliError::InputFile(format!("{}: {e}", path.display())))?;
    let spec = load
        .catalog
        .clone()
        .or(recorded.catalog_ref.path.clone())
        .unwrap_or_else(|| REFERENCE_CATALOG_NAME.to_string());
    let (catalog, _) = resolve_catalog(&spec)?;
    let (a, view, warnings) = Assessment::load(&text, &catalog, load.allow_catalog_mismatch)
        .map_err(|e| match e {
            AssessmentError::Schema(_) => CliError::InputFile(format!("{}: {e}", path.display())),
            e => CliError::Failure(format!("{}: {e}", path.display())),
        })?;
    for w in warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok((a, view))
}

fn save(path: &Path, a: &Assessment) -> Result<(), CliError> {
    write_file(path, a.to_json().as_bytes())
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Failure(format!("cannot write output: {e}")))
}

fn cmd_catalog_validate(path: &str, out: &mut dyn Write) -> CliResult {
    let text = match path {
        REFERENCE_CATALOG_NAME => crate::catalog::REFERENCE_CATALOG.to_string(),
        SAMPLE_CATALOG_NAME => crate::catalog::SAMPLE_CATALOG.to_string(),
        p => read_file(Path::new(p))?,
    };
    let report =
        validate_catalog_source(&text).map_err(|e| CliError::Failure(format!("{path}: {e}")))?;
    let mut s = format!("{}\n", report.counts);
    for f in &report.findings {
        let level = match f.level {
            FindingLevel::Error => "error",
            FindingLevel::Warning => "warning",
        };
        s.push_str(&format!("{level}: {}: {}\n", f.location, f.message));
    }
    emit(out, &s)?;
    if report.is_valid() {
        Ok(ExitStatus::Success)
    } else {
        Ok(ExitStatus::Failure)
    }
}

fn cmd_init(args: InitArgs, out: &mut dyn Write) -> CliResult {
    if args.out.exists() && !args.force {
        return Err(CliError::InputFile(format!(
            "{} already exists (use --force to replace it)",
            args.out.display()
        )));
    }
    let (catalog, location) = resolve_catalog(&args.catalog)?;
    let view = select_level(&catalog, args.level);
    let mut a = Assessment::new(&view, args.org, args.threshold)?;
    a.catalog_ref.path = Some(location);
    save(&args.out, &a)?;
    emit(
        out,
        &format!(
            "created {} ({} level, {} requirements)\n",
            args.out.display(),
            args.level,
            view.requirement_count()
        ),
    )?;
    Ok(ExitStatus::Success)
}

fn cmd_answer(args: AnswerArgs, err: &mut dyn Write) -> CliResult {
    let (satisfaction, shortcut) = args.sat;
    let partial_value = match (args.partial, shortcut) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--partial cannot be combined with PL/PM/PH".into(),
            ))
        }
        (p, s) => p.or(s),
    };
    let entry = ResponseEntry {
        satisfaction,
        partial_value,
        satisfying_statement: args.statement,
        names: args.names,
        validation_tools: args.tools,
        hipaa_types: args.hipaa.into_iter().collect(),
        recorded_at: Utc::now(),
        recorded_by: args.by,
    };
    entry.check()?;

    let (mut a, view) = load_assessment(&args.assessment, &args.load, err)?;
    a.record_response(&view, &args.requirement, entry)?;
    for (ordinal, value) in args.odp {
        a.assign_odp(&view, &args.requirement, ordinal, value)?;
    }
    save(&args.assessment, &a)?;
    Ok(ExitStatus::Success)
}

fn cmd_methods(args: MethodsArgs, err: &mut dyn Write) -> CliResult {
    let (mut a, view) = load_assessment(&args.assessment, &args.load, err)?;
    let mut matrix = a
        .method_matrices
        .get(&args.requirement)
        .cloned()
        .unwrap_or_default();
    for (method, cell) in [
        (Method::Examine, args.examine),
        (Method::Interview, args.interview),
        (Method::Test, args.test),
    ] {
        if let Some(cell) = cell {
            let target = matrix.cell_mut(method);
            target.depth = cell.depth;
            target.coverage = cell.coverage;
        }
    }
    for method in Method::ALL {
        let items: Vec<EvidenceItem> = args
            .evidence
            .iter()
            .filter(|(m, _)| *m == method)
            .map(|(_, e)| e.clone())
            .collect();
        if !items.is_empty() {
            matrix.cell_mut(method).evidence = items;
        }
    }
    a.set_method_matrix(&view, &args.requirement, matrix)?;
    save(&args.assessment, &a)?;
    Ok(ExitStatus::Success)
}

fn cmd_complete(args: CompleteArgs, err: &mut dyn Write) -> CliResult {
    let (mut a, _) = load_assessment(&args.assessment, &args.load, err)?;
    a.complete(args.on.unwrap_or_else(|| Utc::now().date_naive()))?;
    save(&args.assessment, &a)?;
    Ok(ExitStatus::Success)
}

fn cmd_score(args: ScoreArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let opts = args.scoring.options()?;
    let (a, view) = load_assessment(&args.assessment, &args.load, err)?;
    let score = overall_compliance(&view, &a, &opts);
    let text = match args.format {
        TableFormat::Csv => compliance_table(&score),
        TableFormat::Table => compliance_text(&score),
    };
    emit(out, &text)?;
    if args.strict && score.aggregate_verdict == Verdict::Fail {
        Ok(ExitStatus::Failure)
    } else {
        Ok(ExitStatus::Success)
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn cmd_report(args: ReportArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let opts = args.scoring.options()?;
    let (a, view) = load_assessment(&args.assessment, &args.load, err)?;
    let json = matches!(args.format, ReportFormat::Json);
    let text = match args.kind {
        ReportKind::Snapshot => {
            let doc = snapshot(&view, &a, &opts);
            if json {
                to_json(&doc)
            } else {
                doc.to_text()
            }
        }
        ReportKind::Compliance => {
            let score = overall_compliance(&view, &a, &opts);
            if json {
                to_json(&crate::report::compliance_summary(&score))
            } else {
                compliance_table(&score)
            }
        }
        ReportKind::Effects => {
            let policy = if args.strict_partial {
                PartialPolicy::Strict
            } else {
                PartialPolicy::Achieved
            };
            let rows =
                effects_map(&a, &view, policy).map_err(|e| CliError::Failure(e.to_string()))?;
            let rendered = render_effects(&rows);
            if json {
                to_json(&rendered.doc)
            } else {
                rendered.csv
            }
        }
        ReportKind::Radar => {
            let score = overall_compliance(&view, &a, &opts);
            radar_svg(&RadarSpec::from_score(&score))
                .map_err(|e| CliError::Failure(e.to_string()))?
        }
    };
    match args.out {
        Some(path) => write_file(&path, text.as_bytes())?,
        None => emit(out, &text)?,
    }
    Ok(ExitStatus::Success)
}

fn cmd_diff(args: DiffArgs, out: &mut dyn Write) -> CliResult {
    let load = |p: &Path| {
        Assessment::from_json(&read_file(p)?)
            .map_err(|e| CliError::InputFile(format!("{}: {e}", p.display())))
    };
    let old = load(&args.old)?;
    let new = load(&args.new)?;
    let changes = diff(&old, &new)?;
    if changes.is_empty() {
        return Ok(ExitStatus::Success);
    }
    let text = match args.format {
        TableFormat::Table => changes
            .iter()
            .map(|c| {
                format!(
                    "{} {}: {:?} -> {:?}\n",
                    c.requirement_id, c.field, c.before, c.after
                )
            })
            .collect(),
        TableFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(["requirement_id", "field", "before", "after"])
                .and_then(|_| {
                    changes.iter().try_for_each(|c| {
                        w.write_record([
                            c.requirement_id.to_string().as_str(),
                            &c.field,
                            &c.before,
                            &c.after,
                        ])
                    })
                })
                .map_err(|e| CliError::Failure(e.to_string()))?;
            let bytes = w
                .into_inner()
                .map_err(|e| CliError::Failure(e.to_string()))?;
            String::from_utf8(bytes).expect("csv output is utf-8")
        }
    };
    emit(out, &text)?;
    Ok(ExitStatus::Success)
}

fn cmd_serve(args: ServeArgs, err: &mut dyn Write) -> CliResult {
    let (catalog, location) = resolve_catalog(&args.catalog)?;
    let store = SessionStore::new(catalog, Some(location));
    let config = ServiceConfig {
        bind: args.bind,
        port: args.port,
        allow_origin: args.allow_origin,
        static_dir: args.static_dir,
    };
    let _ = writeln!(err, "listening on http://{}:{}", config.bind, config.port);
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| CliError::Failure(format!("cannot start runtime: {e}")))?;
    runtime
        .block_on(crate::service::serve(store, config))
        .map_err(|e| CliError::Failure(format!("service error: {e}")))?;
    Ok(ExitStatus::Success)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() {
                ExitStatus::Usage
            } else {
                ExitStatus::Success
            };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return status;
        }
    };

    let result = match cli.command {
        Command::Catalog(CatalogCommand::Validate { path }) => cmd_catalog_validate(&path, out),
        Command::Init(a) => cmd_init(a, out),
        Command::Answer(a) => cmd_answer(a, err),
        Command::Methods(a) => cmd_methods(a, err),
        Command::Complete(a) => cmd_complete(a, err),
        Command::Score(a) => cmd_score(a, out, err),
        Command::Report(a) => cmd_report(a, out, err),
        Command::Diff(a) => cmd_diff(a, out),
        Command::Serve(a) => cmd_serve(a, err),
    };
    match result {
        Ok(status) => status,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.status()
        }
    }
}

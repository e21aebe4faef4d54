//! Command-line front end. [`run`] captures output for tests; the binary
//! calls [`run_with`] to stream straight to stdout.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::builtin::{reproduce, BuiltinModel, ReproductionReport};
use crate::error::Error;
use crate::model::{
    combination_distribution, context_histogram, detection_probability, Combination, Model,
    SCHEMA_VERSION,
};
use crate::qm::{qm_probability, OutcomeAssignment};
use crate::search::{search_models, verify_counts, ExpectedCounts, SearchSpec};
use crate::state_space::{classify, enumerate_ghz_microstates, MeasurementContext, PartitionElement, Sign};
use crate::verify::{verify_ac, verify_dm, Check, Failure, VerificationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Witnesses printed per report in table format.
const TABLE_FAILURE_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "ghz-esr", version, about = "Exact analysis of finite local detection models for the GHZ experiment")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write the payload to PATH instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the 128 GHZ-compatible states with their partition labels.
    States {
        /// Group states by partition element.
        #[arg(long)]
        partition: bool,
    },
    /// Check a model against QM (--ac), the detection requirement (--dm), or expected counts.
    Verify {
        /// Built-in selector (M3, M1, M2) or path to a model JSON file.
        model: String,
        #[arg(long)]
        ac: bool,
        #[arg(long)]
        dm: bool,
        /// Expected counts as MSPECS,COMBOS or DDISTS,MSPECS,COMBOS.
        #[arg(long, value_name = "COUNTS")]
        counts: Option<String>,
    },
    /// Detection, conditional, and total probabilities next to the QM value.
    Probs {
        model: String,
        /// Comma-separated sites, e.g. "x1,y2,y3".
        context: String,
        /// Comma-separated signs, e.g. "+1,-1"; all patterns when omitted.
        #[arg(long, allow_hyphen_values = true)]
        outcomes: Option<String>,
    },
    /// Distribution over combinations (x/y slots with z dropped).
    Combinations { model: String },
    /// Enumerate models satisfying a JSON search spec; emits JSON lines.
    Search {
        spec: PathBuf,
        /// Override the spec's limit.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Recompute the published quantities of a built-in model.
    Reproduce { model: String },
    /// Write a model as JSON, or its combinations as CSV with --format csv.
    Export { model: String },
}

/// Captured result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
struct Abort {
    code: i32,
    message: String,
}

impl Abort {
    fn usage(message: impl Into<String>) -> Abort {
        Abort { code: EXIT_USAGE, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Abort {
        Abort { code: EXIT_IO, message: message.into() }
    }
}

impl From<Error> for Abort {
    fn from(e: Error) -> Abort {
        let code = match e {
            Error::IncompatibleContext(_)
            | Error::InvalidSite(_)
            | Error::InvalidOutcome(_)
            | Error::OutcomeMismatch(_)
            | Error::UnboundedSearch
            | Error::InvalidSearchSpec(_)
            | Error::UnknownModel(_) => EXIT_USAGE,
            _ => EXIT_IO,
        };
        Abort { code, message: e.to_string() }
    }
}

impl From<io::Error> for Abort {
    fn from(e: io::Error) -> Abort {
        Abort::io(e.to_string())
    }
}

impl From<csv::Error> for Abort {
    fn from(e: csv::Error) -> Abort {
        Abort::io(e.to_string())
    }
}

type CliResult = std::result::Result<i32, Abort>;

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_with(args, &mut out, &mut err);
    CommandOutcome {
        code,
        stdout: String::from_utf8_lossy(&out).into_owned(),
        stderr: String::from_utf8_lossy(&err).into_owned(),
    }
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{rendered}");
            return EXIT_OK;
        }
    };
    let result = match &cli.output {
        None => execute(&cli, out),
        Some(path) => write_to_file(&cli, path),
    };
    match result {
        Ok(code) => code,
        Err(abort) => {
            let _ = writeln!(err, "error: {}", abort.message);
            abort.code
        }
    }
}

fn write_to_file(cli: &Cli, path: &Path) -> CliResult {
    let file = fs::File::create(path)
        .map_err(|e| Abort::io(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let code = execute(cli, &mut w)?;
    w.flush()?;
    Ok(code)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult {
    let f = cli.format;
    match &cli.command {
        Command::States { partition } => cmd_states(*partition, f, out),
        Command::Verify { model, ac, dm, counts } => {
            cmd_verify(&load_model(model)?, *ac, *dm, counts.as_deref(), f, out)
        }
        Command::Probs { model, context, outcomes } => {
            let model = load_model(model)?;
            let context: MeasurementContext = context.parse()?;
            let outcomes = outcomes.as_deref().map(parse_outcomes).transpose()?;
            cmd_probs(&model, context, outcomes, f, out)
        }
        Command::Combinations { model } => cmd_combinations(&load_model(model)?, f, out),
        Command::Search { spec, limit } => cmd_search(spec, *limit, out),
        Command::Reproduce { model } => cmd_reproduce(model.parse()?, f, out),
        Command::Export { model } => cmd_export(&load_model(model)?, f, out),
    }
}

/// Resolves a built-in selector, otherwise reads a model JSON file.
fn load_model(source: &str) -> std::result::Result<Model, Abort> {
    if let Ok(b) = source.parse::<BuiltinModel>() {
        return Ok(b.build());
    }
    let path = Path::new(source);
    if !path.exists() && looks_like_selector(source) {
        return Err(Error::UnknownModel(source.to_string()).into());
    }
    let text = fs::read_to_string(path).map_err(|e| Abort::io(format!("cannot read {source}: {e}")))?;
    Model::from_json_str(&text).map_err(|e| Abort::io(format!("{source}: {e}")))
}

fn looks_like_selector(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some('M' | 'm')) && s.len() > 1 && chars.all(|c| c.is_ascii_digit())
}

fn parse_outcomes(s: &str) -> std::result::Result<Vec<Sign>, Abort> {
    Ok(s.split(',').map(str::parse).collect::<crate::error::Result<Vec<Sign>>>()?)
}

fn emit_json(out: &mut dyn Write, value: &impl serde::Serialize) -> CliResult {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Abort::io(e.to_string()))?;
    writeln!(out)?;
    Ok(EXIT_OK)
}

fn emit_csv(out: &mut dyn Write, header: &[&str], rows: &[Vec<String>]) -> CliResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

/// Left-aligned columns separated by two spaces.
fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(&format!("{cell:<w$}"));
        }
        s.trim_end().to_string() + "\n"
    };
    let mut s = line(header.to_vec());
    for row in rows {
        s.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    s
}

fn cmd_states(partition: bool, f: Format, out: &mut dyn Write) -> CliResult {
    let states = enumerate_ghz_microstates();
    let elements: Vec<PartitionElement> =
        states.iter().map(classify).collect::<crate::error::Result<_>>()?;
    let groups: Vec<(PartitionElement, Vec<usize>)> = PartitionElement::ALL
        .into_iter()
        .map(|e| (e, (0..states.len()).filter(|&i| elements[i] == e).collect()))
        .collect();
    match f {
        Format::Json => {
            let list: Vec<Value> = states
                .iter()
                .zip(&elements)
                .enumerate()
                .map(|(i, (s, e))| json!({"index": i, "values": s, "element": e}))
                .collect();
            let mut doc = json!({"schema_version": SCHEMA_VERSION, "count": states.len(), "states": list});
            if partition {
                doc["partition"] = groups
                    .iter()
                    .map(|(e, idx)| json!({"element": e, "size": idx.len(), "states": idx}))
                    .collect();
            }
            emit_json(out, &doc)
        }
        Format::Csv => {
            let mut header = vec!["index"];
            let names: Vec<String> = crate::state_space::Site::ALL.iter().map(|s| s.to_string()).collect();
            header.extend(names.iter().map(String::as_str));
            header.push("element");
            let order: Vec<usize> = if partition {
                groups.iter().flat_map(|(_, idx)| idx.iter().copied()).collect()
            } else {
                (0..states.len()).collect()
            };
            let rows: Vec<Vec<String>> = order
                .into_iter()
                .map(|i| {
                    let mut row = vec![i.to_string()];
                    row.extend(states[i].values().iter().map(|v| v.to_string()));
                    row.push(elements[i].to_string());
                    row
                })
                .collect();
            emit_csv(out, &header, &rows)
        }
        Format::Table => {
            if partition {
                for (e, idx) in &groups {
                    let sat: Vec<String> = e.satisfied_triads().iter().map(|t| t.to_string()).collect();
                    writeln!(out, "{e}  ({} states; satisfied triads {})", idx.len(), sat.join(","))?;
                    for &i in idx {
                        writeln!(out, "  {i:>3}  {}", states[i])?;
                    }
                }
            } else {
                let rows: Vec<Vec<String>> = states
                    .iter()
                    .zip(&elements)
                    .enumerate()
                    .map(|(i, (s, e))| vec![i.to_string(), s.to_string(), e.to_string()])
                    .collect();
                write!(out, "{}", render_table(&["index", "state", "element"], &rows))?;
            }
            let sizes: Vec<String> = groups.iter().map(|(e, idx)| format!("{e}={}", idx.len())).collect();
            writeln!(out, "{} states; {}", states.len(), sizes.join(" "))?;
            Ok(EXIT_OK)
        }
    }
}

fn parse_counts(s: &str) -> std::result::Result<ExpectedCounts, Abort> {
    let nums: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Abort::usage(format!("invalid --counts {s:?}")))?;
    match nums.as_slice() {
        [m, c] => Ok(ExpectedCounts { ddistributions: None, mspecifications: Some(*m), combinations: Some(*c) }),
        [d, m, c] => Ok(ExpectedCounts { ddistributions: Some(*d), mspecifications: Some(*m), combinations: Some(*c) }),
        _ => Err(Abort::usage(format!("--counts expects MSPECS,COMBOS or DDISTS,MSPECS,COMBOS, got {s:?}"))),
    }
}

fn check_name(c: Check) -> &'static str {
    match c {
        Check::Ac => "ac",
        Check::Dm => "dm",
        Check::Counts => "counts",
    }
}

fn failure_cells(f: &Failure) -> Vec<String> {
    let opt = |o: Option<String>| o.unwrap_or_default();
    vec![
        f.rule.clone(),
        opt(f.context.as_ref().map(|c| c.to_string())),
        opt(f.outcomes.as_ref().map(|o| o.iter().map(|v| format!("{v:+}")).collect::<Vec<_>>().join(","))),
        opt(f.state.map(|s| s.to_string())),
        opt(f.ddist.map(|d| d.to_string())),
        opt(f.triad.map(|t| t.to_string())),
        opt(f.expected.as_ref().map(|r| r.to_string())),
        opt(f.actual.as_ref().map(|r| r.to_string())),
    ]
}

fn cmd_verify(
    model: &Model,
    ac: bool,
    dm: bool,
    counts: Option<&str>,
    f: Format,
    out: &mut dyn Write,
) -> CliResult {
    let expected = counts.map(parse_counts).transpose()?;
    let all = !ac && !dm && expected.is_none();
    let mut reports: Vec<VerificationReport> = Vec::new();
    if ac || all {
        reports.push(verify_ac(model));
    }
    if dm || all {
        reports.push(verify_dm(model));
    }
    if let Some(e) = &expected {
        reports.push(verify_counts(model, e));
    }
    let pass = reports.iter().all(|r| r.pass);
    let code = if pass { EXIT_OK } else { EXIT_VERIFICATION_FAILED };
    match f {
        Format::Json => {
            emit_json(
                out,
                &json!({"schema_version": SCHEMA_VERSION, "model": model.name(), "pass": pass, "reports": reports}),
            )?;
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .flat_map(|r| {
                    r.failures.iter().map(move |fl| {
                        let mut row = vec![check_name(r.check).to_string()];
                        row.extend(failure_cells(fl));
                        row
                    })
                })
                .collect();
            emit_csv(
                out,
                &["check", "rule", "context", "outcomes", "state", "ddist", "triad", "expected", "actual"],
                &rows,
            )?;
        }
        Format::Table => {
            for r in &reports {
                let mut line = format!(
                    "{:<6}  {}  ({} checked, {} failures",
                    check_name(r.check),
                    if r.pass { "PASS" } else { "FAIL" },
                    r.checked,
                    r.failures.len()
                );
                if !r.skipped.is_empty() {
                    line.push_str(&format!(", {} contexts never detected", r.skipped.len()));
                }
                writeln!(out, "{line})")?;
                for fl in r.failures.iter().take(TABLE_FAILURE_LIMIT) {
                    let cells = failure_cells(fl);
                    let labels = ["", "context", "outcomes", "state", "ddist", "triad", "expected", "actual"];
                    let parts: Vec<String> = cells
                        .iter()
                        .zip(labels)
                        .filter(|(c, _)| !c.is_empty())
                        .map(|(c, l)| if l.is_empty() { c.clone() } else { format!("{l}={c}") })
                        .collect();
                    writeln!(out, "  {}", parts.join("  "))?;
                }
                if r.failures.len() > TABLE_FAILURE_LIMIT {
                    writeln!(out, "  ... {} more", r.failures.len() - TABLE_FAILURE_LIMIT)?;
                }
            }
            writeln!(out, "{}: {}", model.name(), if pass { "PASS" } else { "FAIL" })?;
        }
    }
    Ok(code)
}

fn signs_text(signs: &[Sign]) -> String {
    signs.iter().map(Sign::to_string).collect::<Vec<_>>().join(",")
}

fn cmd_probs(
    model: &Model,
    context: MeasurementContext,
    outcomes: Option<Vec<Sign>>,
    f: Format,
    out: &mut dyn Write,
) -> CliResult {
    let assignments = match outcomes {
        Some(o) => vec![OutcomeAssignment::new(context, o)?],
        None => OutcomeAssignment::all_for(context),
    };
    let detection = detection_probability(model, &context, None);
    let hist = context_histogram(model, &context);
    let rows: Vec<(String, Option<String>, String, String)> = assignments
        .iter()
        .map(|a| {
            let conditional = hist.conditional(a.outcomes());
            let total = match &conditional {
                Some(c) => &detection * c,
                None => crate::rational::Rational::zero(),
            };
            (
                signs_text(a.outcomes()),
                conditional.map(|c| c.to_string()),
                total.to_string(),
                qm_probability(a).to_string(),
            )
        })
        .collect();
    match f {
        Format::Json => {
            let list: Vec<Value> = assignments
                .iter()
                .zip(&rows)
                .map(|(a, (_, c, t, q))| {
                    let signs: Vec<i8> = a.outcomes().iter().map(|s| s.value()).collect();
                    json!({"outcomes": signs, "conditional": c, "total": t, "qm": q})
                })
                .collect();
            emit_json(
                out,
                &json!({
                    "schema_version": SCHEMA_VERSION,
                    "model": model.name(),
                    "context": context,
                    "detection": detection,
                    "rows": list,
                }),
            )
        }
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .into_iter()
                .map(|(o, c, t, q)| vec![o, detection.to_string(), c.unwrap_or_default(), t, q])
                .collect();
            emit_csv(out, &["outcomes", "detection", "conditional", "total", "qm"], &table)
        }
        Format::Table => {
            writeln!(out, "model      {}", model.name())?;
            writeln!(out, "context    {context}")?;
            writeln!(out, "detection  {detection}")?;
            let table: Vec<Vec<String>> = rows
                .into_iter()
                .map(|(o, c, t, q)| vec![o, c.unwrap_or_else(|| "undefined".into()), t, q])
                .collect();
            write!(out, "{}", render_table(&["outcomes", "conditional", "total", "qm"], &table))?;
            Ok(EXIT_OK)
        }
    }
}

const COMBINATION_HEADER: [&str; 8] = ["x1", "y1", "x2", "y2", "x3", "y3", "probability", "surviving_triads"];

fn combination_rows(model: &Model) -> Vec<(Combination, Vec<String>)> {
    combination_distribution(model)
        .into_iter()
        .map(|(c, mass)| {
            let mut row: Vec<String> = match c.tokens() {
                Some(t) => t.iter().map(|s| s.to_string()).collect(),
                None => vec!["U".to_string(); 6],
            };
            row.push(mass.to_string());
            row.push(c.surviving_triads().to_string());
            (c, row)
        })
        .collect()
}

fn cmd_combinations(model: &Model, f: Format, out: &mut dyn Write) -> CliResult {
    let rows = combination_rows(model);
    let count = rows.iter().filter(|(c, _)| *c != Combination::AllUndetected).count();
    match f {
        Format::Json => {
            let list: Vec<Value> = rows
                .iter()
                .map(|(c, row)| {
                    json!({
                        "slots": row[..6],
                        "probability": row[6],
                        "surviving_triads": c.surviving_triads(),
                        "all_undetected": *c == Combination::AllUndetected,
                    })
                })
                .collect();
            emit_json(
                out,
                &json!({"schema_version": SCHEMA_VERSION, "model": model.name(), "count": count, "combinations": list}),
            )
        }
        Format::Csv => {
            let table: Vec<Vec<String>> = rows.into_iter().map(|(_, r)| r).collect();
            emit_csv(out, &COMBINATION_HEADER, &table)
        }
        Format::Table => {
            let table: Vec<Vec<String>> = rows.into_iter().map(|(_, r)| r).collect();
            write!(out, "{}", render_table(&COMBINATION_HEADER, &table))?;
            writeln!(out, "{count} combinations")?;
            Ok(EXIT_OK)
        }
    }
}

fn cmd_search(spec_path: &Path, limit: Option<usize>, out: &mut dyn Write) -> CliResult {
    let text = fs::read_to_string(spec_path)
        .map_err(|e| Abort::io(format!("cannot read {}: {e}", spec_path.display())))?;
    let mut spec = SearchSpec::from_json_str(&text)
        .map_err(|e| Abort::io(format!("{}: {e}", spec_path.display())))?;
    if limit.is_some() {
        spec.limit = limit;
    }
    let mut count = 0usize;
    for model in search_models(&spec)? {
        writeln!(out, "{}", model.to_json_string())?;
        count += 1;
    }
    let limit_reached = spec.limit.is_some_and(|l| count >= l);
    writeln!(
        out,
        "{}",
        json!({"schema_version": SCHEMA_VERSION, "summary": {"models": count, "limit_reached": limit_reached}})
    )?;
    Ok(EXIT_OK)
}

fn cmd_reproduce(which: BuiltinModel, f: Format, out: &mut dyn Write) -> CliResult {
    let report: ReproductionReport = reproduce(which);
    let code = if report.pass { EXIT_OK } else { EXIT_VERIFICATION_FAILED };
    match f {
        Format::Json => {
            emit_json(out, &report)?;
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .checks
                .iter()
                .map(|c| vec![c.id.clone(), c.description.clone(), c.expected.clone(), c.actual.clone(), c.pass.to_string()])
                .collect();
            emit_csv(out, &["id", "description", "expected", "actual", "pass"], &rows)?;
        }
        Format::Table => {
            let rows: Vec<Vec<String>> = report
                .checks
                .iter()
                .map(|c| {
                    vec![
                        if c.pass { "PASS" } else { "FAIL" }.to_string(),
                        c.id.clone(),
                        c.expected.clone(),
                        c.actual.clone(),
                        c.description.clone(),
                    ]
                })
                .collect();
            write!(out, "{}", render_table(&["", "id", "expected", "actual", "description"], &rows))?;
            let passed = report.checks.iter().filter(|c| c.pass).count();
            writeln!(
                out,
                "{}: {} ({passed}/{} checks)",
                report.model,
                if report.pass { "PASS" } else { "FAIL" },
                report.checks.len()
            )?;
        }
    }
    Ok(code)
}

fn cmd_export(model: &Model, f: Format, out: &mut dyn Write) -> CliResult {
    match f {
        Format::Csv => {
            let table: Vec<Vec<String>> = combination_rows(model).into_iter().map(|(_, r)| r).collect();
            emit_csv(out, &COMBINATION_HEADER, &table)
        }
        Format::Json | Format::Table => {
            writeln!(out, "{}", model.to_json_string())?;
            Ok(EXIT_OK)
        }
    }
}

//! The `fm` command line. [`run`] takes the arguments and output streams
//! explicitly and returns the exit code, so tests drive it in-process.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::classmap::import_classes;
use crate::diag::Diagnostics;
use crate::document::{Document, LoadError};
use crate::dsl::ast::{Decl, ModelAst};
use crate::dsl::print_model;
use crate::events::{admissible, enumerate_sequences, EventId};
use crate::render::{overlay, RenderOptions};
use crate::sim::{simulate_sequence, SimConfig, SimError, SimOutcome, Simulator};
use crate::value::Value;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SEMANTIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

/// Overrides the simulator's step limit.
pub const STEP_LIMIT_VAR: &str = "FM_STEP_LIMIT";

#[derive(Parser, Debug)]
#[command(name = "fm", version, about = "Flowthing-machine models: validate, render, simulate, import")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model and print its diagnostics.
    #[command(version)]
    Validate(Input),
    /// Write the model as DOT.
    #[command(version)]
    Render(RenderArgs),
    /// Run methods or an event sequence and print the trace.
    #[command(version)]
    Simulate(SimulateArgs),
    /// Translate class files into a model.
    #[command(version)]
    Import(ImportArgs),
    /// List events, methods and chronologies; check or enumerate sequences.
    #[command(version)]
    Events(EventsArgs),
}

#[derive(Args, Debug)]
struct Input {
    /// One `.fm` model, or one or more `.cls` class files imported together.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    input: Input,
    /// Events to draw as overlay clusters.
    #[arg(long, value_delimiter = ',')]
    overlay: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_storage: bool,
    #[arg(long, default_value = "LR")]
    rankdir: String,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("run").required(true).args(["method", "sequence"]))]
struct SimulateArgs {
    #[command(flatten)]
    input: Input,
    /// A method to run; repeat to run several in order.
    #[arg(long)]
    method: Vec<String>,
    /// Arguments shared by every method and trigger, as `k=v,...`.
    #[arg(long, value_delimiter = ',')]
    args: Vec<String>,
    /// Comma-separated event names.
    #[arg(long, allow_hyphen_values = true)]
    sequence: Option<String>,
    /// Chronology the sequence must be admissible under.
    #[arg(long, requires = "sequence")]
    chronology: Option<String>,
    /// Write the trace here instead of stdout.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ImportArgs {
    #[arg(required = true)]
    classes: Vec<PathBuf>,
    /// Write the model here instead of stdout.
    #[arg(long)]
    emit_model: Option<PathBuf>,
    /// Write events and methods to a separate file.
    #[arg(long)]
    emit_events: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EventsArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    chronology: Option<String>,
    /// Report whether this comma-separated sequence is admissible.
    #[arg(long, requires = "chronology", allow_hyphen_values = true)]
    check: Option<String>,
    /// Print every admissible sequence up to this length.
    #[arg(long, requires = "chronology")]
    enumerate: Option<usize>,
}

/// A failure carrying the exit code it maps to. The message has already
/// been written when `message` is empty.
#[derive(Debug)]
struct Fail {
    code: i32,
    message: String,
}

impl Fail {
    fn usage(message: impl Into<String>) -> Self {
        Fail { code: EXIT_USAGE, message: message.into() }
    }
    fn semantic(message: impl Into<String>) -> Self {
        Fail { code: EXIT_SEMANTIC, message: message.into() }
    }
}

type CmdResult = Result<(), Fail>;

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Validate(a) => validate(&a, err),
        Command::Render(a) => render(&a, out, err),
        Command::Simulate(a) => simulate(&a, out, err),
        Command::Import(a) => import(&a, out, err),
        Command::Events(a) => events(&a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            if !f.message.is_empty() {
                let _ = writeln!(err, "{}", f.message);
            }
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn write_to(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn is_cls(p: &Path) -> bool {
    p.extension().is_some_and(|e| e == "cls")
}

fn load_error(e: LoadError) -> Fail {
    match e {
        LoadError::Parse(p) => Fail::usage(p.to_string()),
        LoadError::Semantic(d) => Fail::semantic(d.to_string().trim_end().to_string()),
    }
}

fn load(input: &Input) -> Result<Document, Fail> {
    let paths = &input.paths;
    if paths.iter().all(|p| is_cls(p)) {
        let texts = paths.iter().map(|p| read(p)).collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        return import_classes(&refs).map(|t| t.doc).map_err(load_error);
    }
    if paths.len() != 1 {
        return Err(Fail::usage("give one model file, or only class files"));
    }
    Document::parse(&read(&paths[0])?).map_err(load_error)
}

fn report(diags: &Diagnostics, err: &mut dyn Write) -> CmdResult {
    let _ = write!(err, "{diags}");
    if diags.has_errors() {
        Err(Fail::semantic(""))
    } else {
        Ok(())
    }
}

/// Loads and validates, printing every diagnostic.
fn load_valid(input: &Input, err: &mut dyn Write) -> Result<Document, Fail> {
    let doc = load(input)?;
    report(&doc.validate(), err)?;
    Ok(doc)
}

fn validate(a: &Input, err: &mut dyn Write) -> CmdResult {
    load_valid(a, err).map(|_| ())
}

fn render(a: &RenderArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let doc = load_valid(&a.input, err)?;
    let opts = RenderOptions {
        overlay: a.overlay.clone(),
        show_storage: !a.no_storage,
        rankdir: a.rankdir.clone(),
    };
    let dot = overlay(&doc.model, &doc.events, &opts).map_err(|d| {
        let _ = write!(err, "{d}");
        Fail::semantic("")
    })?;
    match &a.out {
        Some(p) => write_to(p, &dot),
        None => {
            let _ = out.write_all(dot.as_bytes());
            Ok(())
        }
    }
}

fn parse_args(items: &[String]) -> Result<BTreeMap<String, Value>, Fail> {
    let mut map = BTreeMap::new();
    for item in items.iter().filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Fail::usage(format!("argument `{item}` is not of the form k=v")))?;
        map.insert(k.trim().to_string(), Value::parse_scalar(v));
    }
    Ok(map)
}

fn step_limit() -> Result<Option<u64>, Fail> {
    match std::env::var(STEP_LIMIT_VAR) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Fail::usage(format!("{STEP_LIMIT_VAR} must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn sim_error(e: SimError) -> Fail {
    let code = match e {
        SimError::StepLimitExceeded { .. } => EXIT_LIMIT,
        SimError::MissingArgument { .. } => EXIT_USAGE,
        _ => EXIT_SEMANTIC,
    };
    Fail { code, message: format!("error: {e}") }
}

fn event_ids(doc: &Document, list: &str) -> Result<Vec<EventId>, Fail> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|n| {
            doc.event_by_name(n)
                .map(|e| e.id)
                .ok_or_else(|| Fail::semantic(format!("error DanglingRef - no event named `{n}`")))
        })
        .collect()
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let doc = load_valid(&a.input, err)?;
    let args = parse_args(&a.args)?;
    let mut config = SimConfig { bindings: args.clone(), ..SimConfig::default() };
    if let Some(n) = step_limit()? {
        config.max_steps = n;
    }
    let outcome: SimOutcome = match &a.sequence {
        Some(list) => {
            let seq = event_ids(&doc, list)?;
            let chron = match &a.chronology {
                Some(name) => Some(doc.chronology_by_name(name).ok_or_else(|| {
                    Fail::semantic(format!("error DanglingRef - no chronology named `{name}`"))
                })?),
                None => None,
            };
            simulate_sequence(&doc, &seq, chron, &config).map_err(sim_error)?
        }
        None => {
            let mut sim = Simulator::new(&doc, config);
            for name in &a.method {
                let m = doc
                    .method_by_name(name)
                    .ok_or_else(|| Fail::semantic(format!("error DanglingRef - no method named `{name}`")))?;
                sim.run_method(m, &args).map_err(sim_error)?;
            }
            sim.finish()
        }
    };
    let text = if a.json { outcome.trace.to_json() } else { outcome.trace.to_tsv() };
    match &a.trace {
        Some(p) => write_to(p, &text)?,
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    for s in &outcome.stuck {
        let _ = writeln!(err, "error StuckToken - {} stuck at {} after step {}", s.token, s.stage, s.step);
    }
    if outcome.stuck.is_empty() {
        Ok(())
    } else {
        Err(Fail::semantic(""))
    }
}

fn import(a: &ImportArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    if let Some(p) = a.classes.iter().find(|p| !is_cls(p)) {
        return Err(Fail::usage(format!("{}: expected a .cls file", p.display())));
    }
    let texts = a.classes.iter().map(|p| read(p)).collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let t = import_classes(&refs).map_err(load_error)?;
    let _ = write!(err, "{}", t.doc.validate());

    let (model, behaviour) = match &a.emit_events {
        Some(_) => {
            let (b, m): (Vec<Decl>, Vec<Decl>) = t
                .ast
                .decls
                .iter()
                .cloned()
                .partition(|d| matches!(d, Decl::Event(_) | Decl::Method(_) | Decl::Chronology(_)));
            (print_model(&ModelAst { decls: m }), Some(print_model(&ModelAst { decls: b })))
        }
        None => (print_model(&t.ast), None),
    };
    match &a.emit_model {
        Some(p) => write_to(p, &model)?,
        None => {
            let _ = out.write_all(model.as_bytes());
        }
    }
    if let (Some(p), Some(text)) = (&a.emit_events, behaviour) {
        write_to(p, &text)?;
    }
    Ok(())
}

fn events(a: &EventsArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let doc = load_valid(&a.input, err)?;
    let Some(name) = &a.chronology else {
        for e in &doc.events {
            let _ = writeln!(out, "event {} {} stages", e.name, e.region.stages.len());
        }
        for m in &doc.methods {
            let _ = writeln!(out, "method {} = ({})", m.name, doc.method_event_names(m).join(", "));
        }
        for c in &doc.chronologies {
            let _ = writeln!(out, "chronology {}", c.name);
        }
        return Ok(());
    };
    let chron = doc
        .chronology_by_name(name)
        .ok_or_else(|| Fail::semantic(format!("error DanglingRef - no chronology named `{name}`")))?;
    if let Some(list) = &a.check {
        let seq = event_ids(&doc, list)?;
        if !seq.is_empty() && admissible(chron, &seq) {
            let _ = writeln!(out, "admissible");
        } else {
            let _ = writeln!(out, "inadmissible");
            return Err(Fail::semantic(""));
        }
    }
    if let Some(n) = a.enumerate {
        let seqs = enumerate_sequences(chron, n).map_err(|e| Fail::usage(e.to_string()))?;
        for s in seqs {
            let names: Vec<&str> = s.iter().map(|&e| doc.event(e).name.as_str()).collect();
            let _ = writeln!(out, "{}", names.join(","));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_values_take_the_narrowest_type() {
        let m = parse_args(&["h=13".into(), "r=2.5".into(), "n=\"ab\"".into(), "w=x".into()]).unwrap();
        assert_eq!(m["h"], Value::Int(13));
        assert_eq!(m["r"], Value::Real(2.5));
        assert_eq!(m["n"], Value::Str("ab".into()));
        assert_eq!(m["w"], Value::Str("x".into()));
        assert!(parse_args(&["oops".into()]).is_err());
    }

    #[test]
    fn usage_errors_exit_2_and_help_exits_0() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["fm", "frobnicate"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run(["fm", "--help"], &mut o, &mut e), EXIT_OK);
        assert_eq!(run(["fm", "validate", "--version"], &mut o, &mut e), EXIT_OK);
        assert_eq!(run(["fm", "validate", "/nonexistent/x.fm"], &mut o, &mut e), EXIT_USAGE);
    }
}

//! The `langx` command line: check, transform, run and cross-check `.lang`
//! language specifications.
//!
//! Exit codes are part of the interface:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | the input does not parse or validate, or has no evaluation contexts |
//! | 2 | a transformation failed |
//! | 3 | evaluation got stuck |
//! | 4 | evaluation ran out of fuel |
//! | 5 | the two semantics disagree |
//! | 64 | bad command line |
//!
//! With `--format structured` every diagnostic and result is one JSON object
//! per line on standard output, with the fields `kind`, `rule`, `message`
//! and `span` (`null` or `{file, line, column}`).

use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use langx::ck::{derive_ck, CkErrorKind};
use langx::engine::{ck_eval, compare, eval, CompareConfig, EvalError, Evaluation, DEFAULT_FUEL};
use langx::ir::{LanguageSpec, Term};
use langx::parser::{parse_spec_named, parse_term, print_rule, print_spec, ParseError, SourceSpan};
use langx::subtyping::{add_subtyping, generate_join_relation, generate_subtype_relation, AddSubtypingError};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_TRANSFORM: i32 = 2;
pub const EXIT_STUCK: i32 = 3;
pub const EXIT_OUT_OF_FUEL: i32 = 4;
pub const EXIT_DISAGREE: i32 = 5;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "langx", version, about = "Transform and run textual language specifications")]
pub struct Cli {
    /// Output style for diagnostics and results.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Colour for text diagnostics.
    #[arg(long, env = "LANGX_COLOR", value_enum, default_value_t = Color::Auto, global = true)]
    pub color: Color,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Color {
    Auto,
    Always,
    Never,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Machine {
    Ck,
    Smallstep,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a specification.
    Check { input: PathBuf },
    /// Add algorithmic subtyping to the typing rules.
    AddSubtyping {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also append the generated subtype and join relation rules.
        #[arg(long)]
        emit_relations: bool,
    },
    /// Derive a CK machine from the reduction semantics.
    DeriveCk {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a program.
    Eval {
        input: PathBuf,
        /// The program text; alternatively use `--term-file`.
        #[arg(required_unless_present = "term_file", conflicts_with = "term_file")]
        term: Option<String>,
        #[arg(long)]
        term_file: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Machine::Smallstep)]
        machine: Machine,
        /// Print every step taken.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value_t = DEFAULT_FUEL, value_parser = positive)]
        fuel: usize,
    },
    /// Check that the reduction semantics and the derived machine agree on
    /// random well-typed programs.
    Compare {
        input: PathBuf,
        #[arg(long, default_value_t = 1000, value_parser = positive)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 7, value_parser = positive)]
        max_size: usize,
        #[arg(long, default_value_t = DEFAULT_FUEL, value_parser = positive)]
        fuel: usize,
        /// Use this machine instead of deriving one from the input.
        #[arg(long)]
        ck: Option<PathBuf>,
    },
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

/// One line of structured output.
#[derive(Debug, Serialize)]
pub struct Record {
    pub kind: String,
    pub rule: Option<String>,
    pub message: String,
    pub span: Option<Span>,
}

#[derive(Debug, Serialize)]
pub struct Span {
    pub file: String,
    pub line: usize,
    pub column: usize,
}

impl From<&SourceSpan> for Span {
    fn from(s: &SourceSpan) -> Self {
        Span { file: s.file.clone(), line: s.line, column: s.column }
    }
}

impl Record {
    fn new(kind: impl Into<String>, rule: Option<&str>, message: impl Into<String>) -> Self {
        Record { kind: kind.into(), rule: rule.map(str::to_string), message: message.into(), span: None }
    }
}

/// Where results and diagnostics go. Text mode writes results to `out`
/// and diagnostics to `err`; structured mode writes every record to `out`.
struct Reporter<'a> {
    format: Format,
    color: bool,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Reporter<'_> {
    /// A result line: printed verbatim in text mode.
    fn result(&mut self, record: Record) {
        match self.format {
            Format::Text => {
                let _ = writeln!(self.out, "{}", record.message);
            }
            Format::Structured => self.json(&record),
        }
    }

    /// A diagnostic: `error:` prefixed text in text mode.
    fn error(&mut self, record: Record) {
        match self.format {
            Format::Text => {
                let prefix = if self.color { "\x1b[1;31merror\x1b[0m" } else { "error" };
                let _ = match &record.span {
                    Some(s) => writeln!(self.err, "{}:{}:{}: {prefix}: {}", s.file, s.line, s.column, record.message),
                    None => writeln!(self.err, "{prefix}: {}", record.message),
                };
            }
            Format::Structured => self.json(&record),
        }
    }

    fn json(&mut self, record: &Record) {
        let line = serde_json::to_string(record).expect("records serialize");
        let _ = writeln!(self.out, "{line}");
    }
}

/// Parse arguments and run. Never exits the process.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let color = match cli.color {
        Color::Always => true,
        Color::Never => false,
        Color::Auto => std::io::stderr().is_terminal(),
    };
    let mut r = Reporter { format: cli.format, color, out, err };
    execute(cli.command, &mut r)
}

fn execute(command: Command, r: &mut Reporter<'_>) -> i32 {
    match command {
        Command::Check { input } => match load(&input, r) {
            Ok(spec) => {
                r.result(Record::new("ok", None, format!("{}: language `{}` is valid", input.display(), spec.name)));
                EXIT_OK
            }
            Err(code) => code,
        },
        Command::AddSubtyping { input, output, emit_relations } => {
            let spec = match load(&input, r) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let transformed = match add_subtyping(&spec) {
                Ok(s) => s,
                Err(e) => {
                    let (kind, rule) = match &e {
                        AddSubtypingError::Subtyping(s) => (s.reason.to_string(), s.rule.clone()),
                        AddSubtypingError::Variance { rule, .. } => ("variance".to_string(), rule.clone()),
                    };
                    r.error(Record::new(kind, Some(&rule), e.to_string()));
                    return EXIT_TRANSFORM;
                }
            };
            let mut text = print_spec(&transformed);
            if emit_relations {
                match relations(&spec) {
                    Ok(extra) => text.push_str(&extra),
                    Err(e) => {
                        r.error(Record::new("lattice", None, e));
                        return EXIT_TRANSFORM;
                    }
                }
            }
            emit(r, output.as_deref(), &text)
        }
        Command::DeriveCk { input, output } => {
            let spec = match load(&input, r) {
                Ok(s) => s,
                Err(code) => return code,
            };
            match derive_ck(&spec) {
                Ok(ck) => emit(r, output.as_deref(), &print_spec(&ck)),
                Err(e) => {
                    let code = if e.kind == CkErrorKind::NoContextCategory { EXIT_INVALID } else { EXIT_TRANSFORM };
                    r.error(Record::new(ck_kind(&e.kind), None, e.to_string()));
                    code
                }
            }
        }
        Command::Eval { input, term, term_file, machine, trace, fuel } => {
            let spec = match load(&input, r) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let source = match (term, term_file) {
                (Some(t), _) => t,
                (None, Some(path)) => match fs::read_to_string(&path) {
                    Ok(t) => t,
                    Err(e) => {
                        r.error(Record::new("io", None, format!("{}: {e}", path.display())));
                        return EXIT_INVALID;
                    }
                },
                (None, None) => unreachable!("clap requires one of them"),
            };
            let program = match parse_term(&spec, source.trim()) {
                Ok(t) => t,
                Err(e) => return report_parse(r, &[e]),
            };
            let evaluation = match machine {
                Machine::Smallstep => eval(&program, &spec, fuel),
                Machine::Ck => match machine_for(&spec) {
                    Ok(ck) => ck_eval(&program, &ck, fuel),
                    Err(e) => {
                        r.error(Record::new(ck_kind(&e.kind), None, e.to_string()));
                        return EXIT_TRANSFORM;
                    }
                },
            };
            report_eval(r, &evaluation, trace)
        }
        Command::Compare { input, count, seed, max_size, fuel, ck } => {
            let spec = match load(&input, r) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let machine = match ck {
                Some(path) => match load(&path, r) {
                    Ok(s) => s,
                    Err(code) => return code,
                },
                None => match derive_ck(&spec) {
                    Ok(s) => s,
                    Err(e) => {
                        let code = if e.kind == CkErrorKind::NoContextCategory { EXIT_INVALID } else { EXIT_TRANSFORM };
                        r.error(Record::new(ck_kind(&e.kind), None, e.to_string()));
                        return code;
                    }
                },
            };
            let config = CompareConfig { count, seed, max_size, fuel };
            let report = compare(&spec, &machine, &config);
            match report.disagreement {
                None => {
                    let message = format!("{}/{} programs agree", report.tested, report.tested);
                    r.result(Record::new("agree", None, message));
                    EXIT_OK
                }
                Some(d) => {
                    let message = format!(
                        "disagreement on `{}` (shrunk from `{}`, {} nodes)\n  reduction semantics: {}\n  machine: {}",
                        d.shrunk,
                        d.original,
                        d.shrunk.size(),
                        outcome(&d.smallstep),
                        outcome(&d.machine)
                    );
                    r.error(Record::new("disagreement", None, message));
                    EXIT_DISAGREE
                }
            }
        }
    }
}

fn outcome(result: &Result<Term, EvalError>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => e.to_string(),
    }
}

fn ck_kind(kind: &CkErrorKind) -> &'static str {
    match kind {
        CkErrorKind::NoContextCategory => "NoContextCategory",
        CkErrorKind::BadContext(_) => "BadContext",
        CkErrorKind::NoStart => "NoStart",
        CkErrorKind::AmbiguousStart(_) => "AmbiguousStart",
        CkErrorKind::OrderAmbiguity { .. } => "OrderAmbiguity",
        CkErrorKind::NoFinalContinuation => "NoFinalContinuation",
        CkErrorKind::AmbiguousFinal(_) => "AmbiguousFinal",
        CkErrorKind::PatternMismatch { .. } => "PatternMismatch",
    }
}

/// The spec itself when it already has machine rules, else its derived machine.
fn machine_for(spec: &LanguageSpec) -> Result<LanguageSpec, langx::ck::CkError> {
    if spec.machine_rules().next().is_some() {
        Ok(spec.clone())
    } else {
        derive_ck(spec)
    }
}

/// The subtype and join relation rules as printed rule blocks.
fn relations(spec: &LanguageSpec) -> Result<String, String> {
    let mut rules = generate_subtype_relation(spec);
    rules.extend(generate_join_relation(spec).map_err(|e| e.to_string())?);
    Ok(rules.iter().map(|rule| format!("\n{}", print_rule(rule))).collect())
}

fn load(path: &Path, r: &mut Reporter<'_>) -> Result<LanguageSpec, i32> {
    let source = fs::read_to_string(path).map_err(|e| {
        r.error(Record::new("io", None, format!("{}: {e}", path.display())));
        EXIT_INVALID
    })?;
    parse_spec_named(&path.display().to_string(), &source).map_err(|errors| report_parse(r, &errors))
}

fn report_parse(r: &mut Reporter<'_>, errors: &[ParseError]) -> i32 {
    for e in errors {
        let mut message = e.message.clone();
        if !e.expected.is_empty() {
            message.push_str(&format!(" (expected one of: {})", e.expected.join(", ")));
        }
        let mut record = Record::new(e.kind, e.rule.as_deref(), message);
        record.span = Some(Span::from(&e.span));
        r.error(record);
    }
    EXIT_INVALID
}

fn emit(r: &mut Reporter<'_>, output: Option<&Path>, text: &str) -> i32 {
    match output {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                r.error(Record::new("io", None, format!("{}: {e}", path.display())));
                return EXIT_INVALID;
            }
            r.result(Record::new("written", None, format!("wrote {}", path.display())));
        }
        None => match r.format {
            Format::Text => {
                let _ = write!(r.out, "{text}");
            }
            Format::Structured => r.result(Record::new("spec", None, text)),
        },
    }
    EXIT_OK
}

fn report_eval(r: &mut Reporter<'_>, evaluation: &Evaluation, trace: bool) -> i32 {
    if trace {
        for step in &evaluation.trace {
            let message = format!("{}  ~~>  {}", step.before, step.after);
            match r.format {
                Format::Text => r.result(Record::new(step.kind.label(), Some(&step.rule), step.to_string())),
                Format::Structured => r.result(Record::new(step.kind.label(), Some(&step.rule), message)),
            }
        }
    }
    match &evaluation.result {
        Ok(v) => {
            r.result(Record::new("value", None, v.to_string()));
            EXIT_OK
        }
        Err(e @ EvalError::OutOfFuel { .. }) => {
            r.error(Record::new("out-of-fuel", None, e.to_string()));
            EXIT_OUT_OF_FUEL
        }
        Err(e @ EvalError::BadRule { rule, .. }) => {
            r.error(Record::new("bad-rule", Some(rule), e.to_string()));
            EXIT_STUCK
        }
        Err(e) => {
            r.error(Record::new("stuck", None, e.to_string()));
            EXIT_STUCK
        }
    }
}

//! The `.lang` text format: parsing into [`LanguageSpec`] and printing back.
//!
//! A file is a sequence of blocks. Each block starts with an unindented
//! keyword line (`language`, `contexts`, `binder`, `grammar`, `variance`,
//! `subtype-base`, `rule`); its contents are the indented lines after it.
//! Blocks are parsed independently, so one malformed rule does not hide
//! errors in the next.

mod lexer;
mod print;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ir::{
    resolve_in, CategoryKind, EnvExpr, Formula, GrammarCategory, InferenceRule, LanguageSpec, MachineConfig, Term,
    Variance, VarianceTable,
};
use lexer::{tokenize, Tok, Token};

pub use print::{print_formula, print_rule, print_spec, render_config};
pub(crate) use validate::find_cycle;
pub use validate::{validate, Site, ValidationError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    /// `syntax` for malformed input, otherwise the validation check that failed.
    pub kind: &'static str,
    /// Rule the error is about, when there is one.
    pub rule: Option<String>,
    pub message: String,
    pub expected: Vec<String>,
}

pub const SYNTAX_ERROR: &str = "syntax";

const DEFAULT_FILE: &str = "<input>";
const KEYWORDS: &[&str] = &["language", "contexts", "binder", "grammar", "variance", "subtype-base", "rule"];

/// Parse and validate a specification.
pub fn parse_spec(source: &str) -> Result<LanguageSpec, Vec<ParseError>> {
    parse_spec_named(DEFAULT_FILE, source)
}

/// [`parse_spec`] with a file name for error spans.
///
/// All errors found are reported, in source order.
pub fn parse_spec_named(file: &str, source: &str) -> Result<LanguageSpec, Vec<ParseError>> {
    SpecParser::new(file).run(source).map_err(|mut errors| {
        errors.sort_by_key(|e| (e.span.line, e.span.column));
        errors
    })
}

/// Parse a ground term (a program) in the vocabulary of `spec`.
///
/// Identifiers bound by an enclosing binder become variables; declared
/// constants and atoms become nullary constructors; anything else is a free
/// variable.
pub fn parse_term(spec: &LanguageSpec, source: &str) -> Result<Term, ParseError> {
    let raw = parse_single_raw(source)?;
    let elab = Elab::for_spec(spec, Mode::Ground);
    elab.term(&raw, &mut Vec::new()).map_err(|e| e.at(DEFAULT_FILE, 1))
}

/// Parse a pattern: identifiers resolve to metavariables of `spec`'s categories.
pub fn parse_pattern(spec: &LanguageSpec, source: &str) -> Result<Term, ParseError> {
    let raw = parse_single_raw(source)?;
    let elab = Elab::for_spec(spec, Mode::Pattern);
    elab.term(&raw, &mut Vec::new()).map_err(|e| e.at(DEFAULT_FILE, 1))
}

/// Parse one `rule` block against the grammar of `spec`. The rule is not
/// validated against the rest of the spec.
pub fn parse_rule(spec: &LanguageSpec, source: &str) -> Result<InferenceRule, Vec<ParseError>> {
    let lines = logical_lines(source);
    let blocks = match split_blocks(DEFAULT_FILE, &lines) {
        Ok(b) => b,
        Err(e) => return Err(vec![e]),
    };
    let [block] = blocks.as_slice() else {
        return Err(vec![error_at(DEFAULT_FILE, 1, 1, "expected exactly one `rule` block", &["rule"])]);
    };
    if block.keyword != "rule" {
        return Err(vec![error_at(DEFAULT_FILE, block.line, 1, "expected `rule`", &["rule"])]);
    }
    let elab = Elab::for_spec(spec, Mode::Pattern);
    parse_rule_block(&elab, block).map_err(|e| vec![e.at(DEFAULT_FILE, block.line)])
}

fn parse_single_raw(source: &str) -> Result<Raw, ParseError> {
    let text = strip_comment(source.trim());
    let toks = tokenize(text, 1)
        .map_err(|(col, c)| error_at(DEFAULT_FILE, 1, col, &format!("unexpected character `{c}`"), &[]))?;
    let mut cur = Cursor::new(&toks, text.len() + 1);
    let raw = cur.term().map_err(|e| e.at(DEFAULT_FILE, 1))?;
    cur.finish().map_err(|e| e.at(DEFAULT_FILE, 1))?;
    Ok(raw)
}

fn error_at(file: &str, line: usize, column: usize, message: &str, expected: &[&str]) -> ParseError {
    ParseError {
        span: SourceSpan { file: file.to_string(), line, column },
        kind: SYNTAX_ERROR,
        rule: None,
        message: message.to_string(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

struct LogicalLine<'a> {
    number: usize,
    indent: usize,
    text: &'a str,
}

fn logical_lines(source: &str) -> Vec<LogicalLine<'_>> {
    source
        .lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let text = strip_comment(raw).trim_end();
            let trimmed = text.trim_start();
            if trimmed.is_empty() {
                return None;
            }
            Some(LogicalLine { number: i + 1, indent: text.len() - trimmed.len(), text: trimmed })
        })
        .collect()
}

struct Block<'a> {
    keyword: String,
    /// Rest of the header line after the keyword.
    argument: &'a str,
    line: usize,
    body: Vec<&'a LogicalLine<'a>>,
}

fn split_blocks<'a>(file: &str, lines: &'a [LogicalLine<'a>]) -> Result<Vec<Block<'a>>, ParseError> {
    let mut blocks: Vec<Block<'a>> = Vec::new();
    for line in lines {
        if line.indent == 0 {
            let (keyword, argument) = match line.text.split_once(char::is_whitespace) {
                Some((k, a)) => (k, a.trim()),
                None => (line.text, ""),
            };
            blocks.push(Block { keyword: keyword.to_string(), argument, line: line.number, body: Vec::new() });
        } else {
            match blocks.last_mut() {
                Some(b) => b.body.push(line),
                None => {
                    return Err(error_at(
                        file,
                        line.number,
                        line.indent + 1,
                        "indented line outside of any block",
                        KEYWORDS,
                    ))
                }
            }
        }
    }
    Ok(blocks)
}

/// An error inside one line, before the line number is known.
#[derive(Debug)]
struct LineError {
    column: usize,
    message: String,
    expected: Vec<String>,
}

impl LineError {
    fn new(column: usize, message: impl Into<String>) -> Self {
        LineError { column, message: message.into(), expected: Vec::new() }
    }

    fn expecting(column: usize, message: impl Into<String>, expected: &[&str]) -> Self {
        LineError { column, message: message.into(), expected: expected.iter().map(|s| s.to_string()).collect() }
    }

    fn at(self, file: &str, line: usize) -> ParseError {
        ParseError {
            span: SourceSpan { file: file.to_string(), line, column: self.column },
            kind: SYNTAX_ERROR,
            rule: None,
            message: self.message,
            expected: self.expected,
        }
    }
}

/// An error with its line already attached.
struct Located {
    line: usize,
    error: LineError,
}

impl Located {
    fn at(self, file: &str, _default_line: usize) -> ParseError {
        self.error.at(file, self.line)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum InfixOp {
    Arrow,
    Product,
}

impl InfixOp {
    fn ctor(self) -> &'static str {
        match self {
            InfixOp::Arrow => "arrow",
            InfixOp::Product => "product",
        }
    }
}

/// Concrete syntax of a term before identifiers are classified.
#[derive(Clone, Debug)]
enum Raw {
    Ident { name: String, column: usize },
    Hole,
    Apply { head: String, column: usize, args: Vec<Raw> },
    Infix { op: InfixOp, left: Box<Raw>, right: Box<Raw> },
    List { items: Vec<Raw> },
    Subst { body: Box<Raw>, value: Box<Raw>, var: Box<Raw>, column: usize },
}

struct Cursor<'t> {
    toks: &'t [Token],
    pos: usize,
    end_column: usize,
}

impl<'t> Cursor<'t> {
    fn new(toks: &'t [Token], end_column: usize) -> Self {
        Cursor { toks, pos: 0, end_column }
    }

    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn peek_tok(&self) -> Option<&'t Tok> {
        self.peek().map(|t| &t.tok)
    }

    fn column(&self) -> usize {
        self.peek().map_or(self.end_column, |t| t.column)
    }

    fn bump(&mut self) -> Option<&'t Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek_tok() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), LineError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            let found = self.peek_tok().map_or("end of line".to_string(), |t| t.to_string());
            Err(LineError {
                column: self.column(),
                message: format!("expected {tok}, found {found}"),
                expected: vec![tok.to_string()],
            })
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize), LineError> {
        match self.peek() {
            Some(Token { tok: Tok::Ident(s), column, .. }) => {
                self.pos += 1;
                Ok((s.clone(), *column))
            }
            other => {
                let found = other.map_or("end of line".to_string(), |t| t.tok.to_string());
                Err(LineError::expecting(self.column(), format!("expected {what}, found {found}"), &[what]))
            }
        }
    }

    fn finish(&self) -> Result<(), LineError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(LineError::new(t.column, format!("unexpected {} after the end", t.tok))),
        }
    }

    fn term(&mut self) -> Result<Raw, LineError> {
        let mut t = self.primary()?;
        // postfix substitution binds only when written without a space: e[v/x]
        while let Some(Token { tok: Tok::LBrack, spaced: false, column }) = self.peek() {
            let column = *column;
            self.pos += 1;
            let value = self.term()?;
            self.expect(Tok::Slash)?;
            let var = self.term()?;
            self.expect(Tok::RBrack)?;
            t = Raw::Subst { body: Box::new(t), value: Box::new(value), var: Box::new(var), column };
        }
        Ok(t)
    }

    fn primary(&mut self) -> Result<Raw, LineError> {
        let column = self.column();
        match self.bump().map(|t| &t.tok) {
            Some(Tok::Ident(name)) => Ok(Raw::Ident { name: name.clone(), column }),
            Some(Tok::Hole) => Ok(Raw::Hole),
            Some(Tok::LParen) => {
                let first = self.term()?;
                let op = match self.peek_tok() {
                    Some(Tok::Arrow) => Some(InfixOp::Arrow),
                    Some(Tok::Star) => Some(InfixOp::Product),
                    _ => None,
                };
                if let Some(op) = op {
                    self.pos += 1;
                    let right = self.term()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Raw::Infix { op, left: Box::new(first), right: Box::new(right) });
                }
                let (head, column) = match first {
                    Raw::Ident { name, column } => (name, column),
                    _ => {
                        return Err(LineError::expecting(
                            column + 1,
                            "expected a constructor name after `(`",
                            &["constructor name"],
                        ))
                    }
                };
                let mut args = Vec::new();
                while !matches!(self.peek_tok(), Some(Tok::RParen) | None) {
                    args.push(self.term()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Raw::Apply { head, column, args })
            }
            Some(Tok::LBrack) => {
                let mut items = Vec::new();
                if !self.eat(&Tok::RBrack) {
                    loop {
                        items.push(self.term()?);
                        if self.eat(&Tok::RBrack) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                Ok(Raw::List { items })
            }
            other => {
                let found = other.map_or("end of line".to_string(), |t| t.to_string());
                Err(LineError::expecting(column, format!("expected a term, found {found}"), &["term"]))
            }
        }
    }

    /// Does `tok` occur outside parentheses and brackets in the rest of the line?
    fn top_level_contains(&self, tok: &Tok) -> bool {
        let mut depth = 0i32;
        for t in &self.toks[self.pos..] {
            match &t.tok {
                Tok::LParen | Tok::LBrack => depth += 1,
                Tok::RParen | Tok::RBrack => depth -= 1,
                other if depth == 0 && other == tok => return true,
                _ => {}
            }
        }
        false
    }
}

/// Raw formula: terms not yet elaborated.
enum RawFormula {
    Typing { root: String, extensions: Vec<(String, usize, Raw)>, subject: Raw, ty: Raw },
    Reduction(Raw, Raw),
    Machine([Raw; 4]),
    Subtype(Raw, Raw),
    Eq(Raw, Raw),
    Join(Raw, Vec<Raw>),
    Meet(Raw, Vec<Raw>),
}

fn parse_raw_formula(cur: &mut Cursor<'_>) -> Result<RawFormula, LineError> {
    let f = if cur.top_level_contains(&Tok::Turnstile) {
        let (root, _) = cur.ident("environment name")?;
        let mut extensions = Vec::new();
        while cur.eat(&Tok::Comma) {
            let (x, col) = cur.ident("variable")?;
            cur.expect(Tok::Colon)?;
            extensions.push((x, col, cur.term()?));
        }
        cur.expect(Tok::Turnstile)?;
        let subject = cur.term()?;
        cur.expect(Tok::Colon)?;
        let ty = cur.term()?;
        RawFormula::Typing { root, extensions, subject, ty }
    } else if cur.peek_tok() == Some(&Tok::Lt) {
        let mut config = || -> Result<(Raw, Raw), LineError> {
            cur.expect(Tok::Lt)?;
            let focus = cur.term()?;
            cur.expect(Tok::Comma)?;
            let k = cur.term()?;
            cur.expect(Tok::Gt)?;
            Ok((focus, k))
        };
        let (a, b) = config()?;
        cur.expect(Tok::Step)?;
        let mut config = || -> Result<(Raw, Raw), LineError> {
            cur.expect(Tok::Lt)?;
            let focus = cur.term()?;
            cur.expect(Tok::Comma)?;
            let k = cur.term()?;
            cur.expect(Tok::Gt)?;
            Ok((focus, k))
        };
        let (c, d) = config()?;
        RawFormula::Machine([a, b, c, d])
    } else if cur.top_level_contains(&Tok::Step) {
        let l = cur.term()?;
        cur.expect(Tok::Step)?;
        RawFormula::Reduction(l, cur.term()?)
    } else if cur.top_level_contains(&Tok::Subtype) {
        let l = cur.term()?;
        cur.expect(Tok::Subtype)?;
        RawFormula::Subtype(l, cur.term()?)
    } else if cur.top_level_contains(&Tok::Eq) {
        let l = cur.term()?;
        cur.expect(Tok::Eq)?;
        let first = cur.term()?;
        if cur.peek_tok() == Some(&Tok::JoinOp) || cur.peek_tok() == Some(&Tok::MeetOp) {
            let op = cur.peek_tok().cloned().unwrap();
            let mut operands = vec![first];
            while cur.eat(&op) {
                operands.push(cur.term()?);
            }
            if op == Tok::JoinOp {
                RawFormula::Join(l, operands)
            } else {
                RawFormula::Meet(l, operands)
            }
        } else {
            RawFormula::Eq(l, first)
        }
    } else {
        return Err(LineError::expecting(cur.column(), "expected a formula", &["`|-`", "`-->`", "`<:`", "`=`"]));
    };
    cur.finish()?;
    Ok(f)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Productions: unresolved identifiers declare constants.
    Production,
    /// Rules: identifiers are metavariables or declared constants.
    Pattern,
    /// Programs: identifiers are variables, constants or atoms.
    Ground,
}

struct Elab<'a> {
    categories: &'a [GrammarCategory],
    binders: &'a BTreeSet<String>,
    constants: BTreeSet<String>,
    mode: Mode,
}

impl<'a> Elab<'a> {
    fn for_spec(spec: &'a LanguageSpec, mode: Mode) -> Self {
        Elab { categories: &spec.categories, binders: &spec.binders, constants: spec.declared_constants(), mode }
    }

    fn term(&self, raw: &Raw, scope: &mut Vec<String>) -> Result<Term, LineError> {
        match raw {
            Raw::Ident { name, column } => self.ident(name, *column, scope),
            Raw::Hole => Ok(Term::Hole),
            Raw::Infix { op, left, right } => {
                Ok(Term::ctor(op.ctor(), vec![self.term(left, scope)?, self.term(right, scope)?]))
            }
            Raw::List { items } => {
                let mut list = Term::constant("nil");
                for item in items.iter().rev() {
                    list = Term::ctor("cons", vec![self.term(item, scope)?, list]);
                }
                Ok(list)
            }
            Raw::Apply { head, column, args } => {
                if self.binders.contains(head) {
                    let Some((Raw::Ident { name: bound, column: bcol }, rest)) = args.split_first() else {
                        return Err(LineError::new(
                            *column,
                            format!("binder `{head}` expects a variable name as its first argument"),
                        ));
                    };
                    if self.mode != Mode::Ground {
                        match resolve_in(bound, self.categories) {
                            Ok(mv) if self.is_names_category(&mv.category) => {}
                            _ => {
                                return Err(LineError::new(
                                    *bcol,
                                    format!("`{bound}` is not a metavariable of a %name category"),
                                ))
                            }
                        }
                    }
                    scope.push(bound.clone());
                    let args: Result<Vec<_>, _> = rest.iter().map(|a| self.term(a, scope)).collect();
                    scope.pop();
                    Ok(Term::Binder { name: head.clone(), bound: bound.clone(), args: args? })
                } else {
                    let args: Result<Vec<_>, _> = args.iter().map(|a| self.term(a, scope)).collect();
                    Ok(Term::ctor(head.clone(), args?))
                }
            }
            Raw::Subst { body, value, var, column } => {
                if self.mode != Mode::Pattern {
                    return Err(LineError::new(*column, "substitution is only allowed in rules"));
                }
                Ok(Term::Subst {
                    body: Box::new(self.term(body, scope)?),
                    value: Box::new(self.term(value, scope)?),
                    var: Box::new(self.term(var, scope)?),
                })
            }
        }
    }

    fn is_names_category(&self, name: &str) -> bool {
        self.categories.iter().any(|c| c.name == name && c.kind == CategoryKind::Names)
    }

    fn ident(&self, name: &str, column: usize, scope: &[String]) -> Result<Term, LineError> {
        match self.mode {
            Mode::Production | Mode::Pattern => match resolve_in(name, self.categories) {
                Ok(mv) => Ok(Term::Meta(mv)),
                Err(_) if self.mode == Mode::Production || self.constants.contains(name) => Ok(Term::constant(name)),
                Err(e) => Err(LineError::new(column, format!("{e}; it is not a declared constant either"))),
            },
            Mode::Ground => {
                if scope.iter().any(|s| s == name) {
                    Ok(Term::Var(name.to_string()))
                } else if self.constants.contains(name)
                    || resolve_in(name, self.categories).is_ok_and(|mv| {
                        self.categories.iter().any(|c| c.name == mv.category && c.kind == CategoryKind::Atoms)
                    })
                {
                    Ok(Term::constant(name))
                } else {
                    Ok(Term::Var(name.to_string()))
                }
            }
        }
    }

    fn formula(&self, raw: &RawFormula) -> Result<Formula, LineError> {
        let t = |r: &Raw| self.term(r, &mut Vec::new());
        Ok(match raw {
            RawFormula::Typing { root, extensions, subject, ty } => {
                let mut env = EnvExpr::root(root.clone());
                for (x, col, ty) in extensions {
                    match resolve_in(x, self.categories) {
                        Ok(mv) if self.is_names_category(&mv.category) => {}
                        _ => {
                            return Err(LineError::new(
                                *col,
                                format!("`{x}` is not a metavariable of a %name category"),
                            ))
                        }
                    }
                    env.extensions.push((x.clone(), t(ty)?));
                }
                Formula::Typing { env, subject: t(subject)?, ty: t(ty)? }
            }
            RawFormula::Reduction(l, r) => Formula::Reduction { lhs: t(l)?, rhs: t(r)? },
            RawFormula::Machine([a, b, c, d]) => Formula::MachineStep {
                lhs: MachineConfig { focus: t(a)?, continuation: t(b)? },
                rhs: MachineConfig { focus: t(c)?, continuation: t(d)? },
            },
            RawFormula::Subtype(a, b) => Formula::Subtype { sub: t(a)?, sup: t(b)? },
            RawFormula::Eq(a, b) => Formula::TypeEq { left: t(a)?, right: t(b)? },
            RawFormula::Join(r, ops) => {
                Formula::Join { result: t(r)?, operands: ops.iter().map(t).collect::<Result<_, _>>()? }
            }
            RawFormula::Meet(r, ops) => {
                Formula::Meet { result: t(r)?, operands: ops.iter().map(t).collect::<Result<_, _>>()? }
            }
        })
    }
}

fn is_separator(text: &str) -> bool {
    text.len() >= 3 && text.chars().all(|c| c == '-')
}

fn line_formula(elab: &Elab<'_>, line: &LogicalLine<'_>) -> Result<Formula, Located> {
    let located = |error| Located { line: line.number, error };
    let toks = tokenize(line.text, line.indent + 1)
        .map_err(|(col, c)| located(LineError::new(col, format!("unexpected character `{c}`"))))?;
    let mut cur = Cursor::new(&toks, line.indent + line.text.len() + 1);
    let raw = parse_raw_formula(&mut cur).map_err(located)?;
    elab.formula(&raw).map_err(located)
}

fn parse_rule_block(elab: &Elab<'_>, block: &Block<'_>) -> Result<InferenceRule, Located> {
    let name = block.argument;
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(Located {
            line: block.line,
            error: LineError::expecting(6, "expected a rule name after `rule`", &["rule name"]),
        });
    }
    let separators: Vec<usize> =
        block.body.iter().enumerate().filter(|(_, l)| is_separator(l.text)).map(|(i, _)| i).collect();
    let (premise_lines, conclusion_lines) = match separators.as_slice() {
        [] => (&block.body[..0], &block.body[..]),
        [i] => (&block.body[..*i], &block.body[i + 1..]),
        [_, second, ..] => {
            let l = block.body[*second];
            return Err(Located {
                line: l.number,
                error: LineError::new(l.indent + 1, "a rule has at most one separator line"),
            });
        }
    };
    let [conclusion_line] = conclusion_lines else {
        let (line, column) = match conclusion_lines.get(1) {
            Some(l) => (l.number, l.indent + 1),
            None => (block.line, 1),
        };
        return Err(Located {
            line,
            error: LineError::expecting(column, "expected exactly one conclusion after the separator", &["formula"]),
        });
    };
    let premises = premise_lines.iter().map(|l| line_formula(elab, l)).collect::<Result<Vec<_>, _>>()?;
    let conclusion = line_formula(elab, conclusion_line)?;
    Ok(InferenceRule { name: name.to_string(), premises, conclusion })
}

/// Where each named element was written, for attaching spans to
/// validation errors.
#[derive(Default)]
struct Sites {
    header: usize,
    lines: BTreeMap<Site, usize>,
}

struct SpecParser {
    file: String,
    errors: Vec<ParseError>,
    sites: Sites,
}

impl SpecParser {
    fn new(file: &str) -> Self {
        SpecParser { file: file.to_string(), errors: Vec::new(), sites: Sites::default() }
    }

    fn err(&mut self, line: usize, e: LineError) {
        self.errors.push(e.at(&self.file, line));
    }

    fn run(mut self, source: &str) -> Result<LanguageSpec, Vec<ParseError>> {
        let lines = logical_lines(source);
        let blocks = match split_blocks(&self.file, &lines) {
            Ok(b) => b,
            Err(e) => return Err(vec![e]),
        };
        let Some(first) = blocks.first().filter(|b| b.keyword == "language") else {
            let line = blocks.first().map_or(1, |b| b.line);
            return Err(vec![error_at(&self.file, line, 1, "expected 'language' header", &["language"])]);
        };
        let mut spec = LanguageSpec {
            name: first.argument.to_string(),
            contexts: None,
            binders: BTreeSet::new(),
            categories: Vec::new(),
            variance: VarianceTable::new(),
            base_subtypes: Vec::new(),
            rules: Vec::new(),
        };
        self.sites.header = first.line;
        if spec.name.is_empty() || spec.name.contains(char::is_whitespace) {
            self.err(first.line, LineError::expecting(10, "expected a language name", &["name"]));
        }

        // Pass 1: directives and category headers, so that productions and
        // rules can refer to anything declared anywhere in the file.
        let mut grammar_lines: Vec<(&LogicalLine<'_>, Vec<Token>)> = Vec::new();
        for block in &blocks[1..] {
            match block.keyword.as_str() {
                "language" => self.err(block.line, LineError::new(1, "duplicate `language` header")),
                "contexts" => {
                    if block.argument.is_empty() || block.argument.contains(char::is_whitespace) {
                        self.err(block.line, LineError::expecting(10, "expected a category name", &["category"]));
                    } else {
                        spec.contexts = Some(block.argument.to_string());
                    }
                    self.no_body(block);
                }
                "binder" => {
                    let parts: Vec<&str> = block.argument.split_whitespace().collect();
                    match parts.as_slice() {
                        [name, "1"] => {
                            spec.binders.insert(name.to_string());
                            self.sites.lines.insert(Site::Binder(name.to_string()), block.line);
                        }
                        [_, _] => self.err(
                            block.line,
                            LineError::new(8, "binders bind their first argument; write `binder <name> 1`"),
                        ),
                        _ => self.err(
                            block.line,
                            LineError::expecting(8, "expected `binder <constructor> 1`", &["constructor"]),
                        ),
                    }
                    self.no_body(block);
                }
                "grammar" => {
                    for line in &block.body {
                        match self.category_header(line) {
                            Ok((cat, toks)) => {
                                self.sites.lines.insert(Site::Category(cat.name.clone()), line.number);
                                spec.categories.push(cat);
                                grammar_lines.push((line, toks));
                            }
                            Err(e) => self.err(line.number, e),
                        }
                    }
                }
                "variance" | "subtype-base" | "rule" => {}
                other => self.err(block.line, LineError::expecting(1, format!("unknown block `{other}`"), KEYWORDS)),
            }
        }

        // Pass 2: productions.
        let mut productions: Vec<Vec<Term>> = Vec::new();
        {
            let elab = Elab {
                categories: &spec.categories,
                binders: &spec.binders,
                constants: BTreeSet::new(),
                mode: Mode::Production,
            };
            for (line, toks) in &grammar_lines {
                match parse_productions(&elab, toks, line.indent + line.text.len() + 1) {
                    Ok(p) => productions.push(p),
                    Err(e) => {
                        productions.push(Vec::new());
                        self.errors.push(e.at(&self.file, line.number));
                    }
                }
            }
        }
        for (cat, prods) in spec.categories.iter_mut().zip(productions) {
            if cat.kind == CategoryKind::Syntax {
                cat.productions = prods;
            }
        }

        // Pass 3: variance, base subtypes, rules.
        for block in &blocks[1..] {
            match block.keyword.as_str() {
                "variance" => {
                    for line in &block.body {
                        match variance_line(line) {
                            Ok((ctor, marks)) => {
                                self.sites.lines.insert(Site::Variance(ctor.clone()), line.number);
                                spec.variance.insert(ctor, marks);
                            }
                            Err(e) => self.err(line.number, e),
                        }
                    }
                }
                "subtype-base" => {
                    for line in &block.body {
                        match subtype_line(line) {
                            Ok(pair) => {
                                self.sites.lines.insert(Site::SubtypeBase(spec.base_subtypes.len()), line.number);
                                spec.base_subtypes.push(pair);
                            }
                            Err(e) => self.err(line.number, e),
                        }
                    }
                }
                "rule" => {
                    let elab = Elab::for_spec(&spec, Mode::Pattern);
                    match parse_rule_block(&elab, block) {
                        Ok(rule) => {
                            self.sites.lines.entry(Site::Rule(rule.name.clone())).or_insert(block.line);
                            spec.rules.push(rule);
                        }
                        Err(located) => self.errors.push(located.error.at(&self.file, located.line)),
                    }
                }
                _ => {}
            }
        }

        if !self.errors.is_empty() {
            return Err(self.errors);
        }

        fill_builtin_variance(&mut spec);
        let problems = validate(&spec);
        if problems.is_empty() {
            return Ok(spec);
        }
        Err(problems
            .into_iter()
            .map(|p| {
                let site = p.site();
                let line = self.sites.lines.get(&site).copied().unwrap_or(self.sites.header);
                let mut e = error_at(&self.file, line, 1, &p.to_string(), &[]);
                e.kind = p.kind();
                if let Site::Rule(r) = site {
                    e.rule = Some(r);
                }
                e
            })
            .collect())
    }

    fn no_body(&mut self, block: &Block<'_>) {
        if let Some(l) = block.body.first() {
            self.err(l.number, LineError::new(l.indent + 1, format!("`{}` takes no indented lines", block.keyword)));
        }
    }

    fn category_header(&self, line: &LogicalLine<'_>) -> Result<(GrammarCategory, Vec<Token>), LineError> {
        let toks = tokenize(line.text, line.indent + 1)
            .map_err(|(col, c)| LineError::new(col, format!("unexpected character `{c}`")))?;
        let mut cur = Cursor::new(&toks, line.indent + line.text.len() + 1);
        let (name, _) = cur.ident("category name")?;
        let (metavariable, mcol) = cur.ident("metavariable")?;
        if metavariable.chars().any(crate::ir::is_suffix_char) {
            return Err(LineError::new(mcol, "a category metavariable may not end in digits or primes"));
        }
        cur.expect(Tok::Defines)?;
        let rest = toks[cur.pos..].to_vec();
        let kind = match rest.as_slice() {
            [Token { tok: Tok::Directive(d), column, .. }] => match d.as_str() {
                "name" => CategoryKind::Names,
                "atom" => CategoryKind::Atoms,
                other => {
                    return Err(LineError::expecting(
                        *column,
                        format!("unknown directive `%{other}`"),
                        &["%name", "%atom"],
                    ))
                }
            },
            _ => CategoryKind::Syntax,
        };
        Ok((GrammarCategory { name, metavariable, kind, productions: Vec::new() }, rest))
    }
}

fn parse_productions(elab: &Elab<'_>, toks: &[Token], end_column: usize) -> Result<Vec<Term>, LineError> {
    if let [Token { tok: Tok::Directive(_), .. }] = toks {
        return Ok(Vec::new());
    }
    let mut cur = Cursor::new(toks, end_column);
    let mut out = Vec::new();
    loop {
        let raw = cur.term()?;
        out.push(elab.term(&raw, &mut Vec::new())?);
        if cur.peek().is_none() {
            return Ok(out);
        }
        cur.expect(Tok::Bar)?;
    }
}

fn variance_line(line: &LogicalLine<'_>) -> Result<(String, Vec<Variance>), LineError> {
    let toks = tokenize(line.text, line.indent + 1)
        .map_err(|(col, c)| LineError::new(col, format!("unexpected character `{c}`")))?;
    let mut cur = Cursor::new(&toks, line.indent + line.text.len() + 1);
    let (ctor, _) = cur.ident("constructor name")?;
    cur.expect(Tok::Colon)?;
    let mut marks = Vec::new();
    while cur.peek().is_some() {
        let (mark, col) = cur.ident("variance mark")?;
        marks.push(Variance::from_mark(&mark).ok_or_else(|| {
            LineError::expecting(col, format!("unknown variance mark `{mark}`"), &["co", "contra", "inv"])
        })?);
    }
    Ok((ctor, marks))
}

fn subtype_line(line: &LogicalLine<'_>) -> Result<(String, String), LineError> {
    let toks = tokenize(line.text, line.indent + 1)
        .map_err(|(col, c)| LineError::new(col, format!("unexpected character `{c}`")))?;
    let mut cur = Cursor::new(&toks, line.indent + line.text.len() + 1);
    let (a, _) = cur.ident("base type")?;
    cur.expect(Tok::Subtype)?;
    let (b, _) = cur.ident("base type")?;
    cur.finish()?;
    Ok((a, b))
}

/// Add built-in variance marks for used type constructors the spec does
/// not declare itself.
fn fill_builtin_variance(spec: &mut LanguageSpec) {
    for ctor in validate::used_type_constructors(spec) {
        if !spec.variance.contains(&ctor) {
            if let Some(marks) = VarianceTable::builtin(&ctor) {
                spec.variance.insert(ctor, marks);
            }
        }
    }
}

#[cfg(test)]
mod tests;

use std::fmt::{self, Write as _};

use crate::ir::{CategoryKind, EnvExpr, Formula, InferenceRule, LanguageSpec, MachineConfig, Term};

/// Rule separator line; 32 dashes.
pub(crate) const SEPARATOR: &str = "--------------------------------";

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Meta(m) => f.write_str(&m.token()),
            Term::Var(x) => f.write_str(x),
            Term::Hole => f.write_str("[.]"),
            Term::Ctor { name, args } if args.is_empty() => f.write_str(name),
            Term::Ctor { name, args } if args.len() == 2 && name == "arrow" => {
                write!(f, "({} -> {})", args[0], args[1])
            }
            Term::Ctor { name, args } if args.len() == 2 && name == "product" => {
                write!(f, "({} * {})", args[0], args[1])
            }
            Term::Ctor { name, args } => {
                if let Some(items) = list_items(self) {
                    f.write_str("[")?;
                    for (i, item) in items.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{item}")?;
                    }
                    return f.write_str("]");
                }
                write!(f, "({name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Term::Binder { name, bound, args } => {
                write!(f, "({name} {bound}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Term::Subst { body, value, var } => write!(f, "{body}[{value}/{var}]"),
        }
    }
}

/// Elements of a `cons` chain ending in `nil`.
fn list_items(t: &Term) -> Option<Vec<&Term>> {
    let mut items = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Ctor { name, args } if name == "cons" && args.len() == 2 => {
                items.push(&args[0]);
                cur = &args[1];
            }
            Term::Ctor { name, args } if name == "nil" && args.is_empty() && !items.is_empty() => return Some(items),
            _ => return None,
        }
    }
}

impl fmt::Display for MachineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{} , {}>", self.focus, self.continuation)
    }
}

impl fmt::Display for EnvExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.root)?;
        for (x, t) in &self.extensions {
            write!(f, ", {x} : {t}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Typing { env, subject, ty } => write!(f, "{env} |- {subject} : {ty}"),
            Formula::Reduction { lhs, rhs } => write!(f, "{lhs} --> {rhs}"),
            Formula::MachineStep { lhs, rhs } => write!(f, "{lhs} --> {rhs}"),
            Formula::Subtype { sub, sup } => write!(f, "{sub} <: {sup}"),
            Formula::TypeEq { left, right } => write!(f, "{left} = {right}"),
            Formula::Join { result, operands } => write_lattice_op(f, result, operands, "\\/"),
            Formula::Meet { result, operands } => write_lattice_op(f, result, operands, "/\\"),
        }
    }
}

fn write_lattice_op(f: &mut fmt::Formatter<'_>, result: &Term, operands: &[Term], op: &str) -> fmt::Result {
    write!(f, "{result} =")?;
    for (i, t) in operands.iter().enumerate() {
        if i > 0 {
            write!(f, " {op}")?;
        }
        write!(f, " {t}")?;
    }
    Ok(())
}

impl fmt::Display for InferenceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rule {}", self.name)?;
        for p in &self.premises {
            writeln!(f, "  {p}")?;
        }
        writeln!(f, "  {SEPARATOR}")?;
        writeln!(f, "  {}", self.conclusion)
    }
}

pub fn print_formula(formula: &Formula) -> String {
    formula.to_string()
}

pub fn render_config(config: &MachineConfig) -> String {
    config.to_string()
}

pub fn print_rule(rule: &InferenceRule) -> String {
    rule.to_string()
}

/// Canonical text of a spec. Parsing the result gives back an equal spec.
pub fn print_spec(spec: &LanguageSpec) -> String {
    let mut blocks: Vec<String> = vec![format!("language {}\n", spec.name)];
    if let Some(c) = &spec.contexts {
        blocks.push(format!("contexts {c}\n"));
    }
    if !spec.binders.is_empty() {
        blocks.push(spec.binders.iter().map(|b| format!("binder {b} 1\n")).collect());
    }
    let mut grammar = String::from("grammar\n");
    for c in &spec.categories {
        let rhs = match c.kind {
            CategoryKind::Names => "%name".to_string(),
            CategoryKind::Atoms => "%atom".to_string(),
            CategoryKind::Syntax => c.productions.iter().map(Term::to_string).collect::<Vec<_>>().join(" | "),
        };
        let _ = writeln!(grammar, "  {} {} ::= {}", c.name, c.metavariable, rhs);
    }
    blocks.push(grammar);
    if !spec.variance.is_empty() {
        let mut s = String::from("variance\n");
        for (ctor, marks) in spec.variance.iter() {
            let marks: Vec<&str> = marks.iter().map(|m| m.mark()).collect();
            let _ = writeln!(s, "  {ctor} : {}", marks.join(" "));
        }
        blocks.push(s);
    }
    if !spec.base_subtypes.is_empty() {
        let mut s = String::from("subtype-base\n");
        for (a, b) in &spec.base_subtypes {
            let _ = writeln!(s, "  {a} <: {b}");
        }
        blocks.push(s);
    }
    blocks.extend(spec.rules.iter().map(InferenceRule::to_string));
    blocks.join("\n")
}

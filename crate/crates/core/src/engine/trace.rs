use std::fmt;

use crate::ir::{MachineConfig, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepKind {
    ContextualReduction,
    MachineStart,
    MachineOrder,
    MachineComputation,
    /// Reassembling a value constructor from its evaluated arguments.
    MachineRebuild,
}

impl StepKind {
    pub fn label(self) -> &'static str {
        match self {
            StepKind::ContextualReduction => "contextual-reduction",
            StepKind::MachineStart => "machine-start",
            StepKind::MachineOrder => "machine-order",
            StepKind::MachineComputation => "machine-computation",
            StepKind::MachineRebuild => "machine-rebuild",
        }
    }

    /// Kind of a derived machine rule, read off its name.
    pub fn of_machine_rule(name: &str) -> StepKind {
        if name.ends_with("-start") {
            StepKind::MachineStart
        } else if name.ends_with("-value") {
            StepKind::MachineRebuild
        } else if name.rsplit_once("-order-").is_some_and(|(_, i)| i.chars().all(|c| c.is_ascii_digit())) {
            StepKind::MachineOrder
        } else {
            StepKind::MachineComputation
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum State {
    Term(Term),
    Machine(MachineConfig),
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            State::Term(t) => write!(f, "{t}"),
            State::Machine(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub kind: StepKind,
    pub rule: String,
    pub before: State,
    pub after: State,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}/{}] {}  ~~>  {}", self.kind.label(), self.rule, self.before, self.after)
    }
}

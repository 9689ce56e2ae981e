use super::matching::{instantiate, match_into, Substitution};
use super::smallstep::{EvalError, Evaluation};
use super::trace::{State, StepKind, TraceStep};
use crate::ck::EMPTY_CONTINUATION;
use crate::ir::{Formula, InferenceRule, LanguageSpec, MachineConfig, Term};

/// The configuration a CK run starts from: `<term , mt>`.
pub fn initial_config(term: &Term) -> MachineConfig {
    MachineConfig { focus: term.clone(), continuation: Term::constant(EMPTY_CONTINUATION) }
}

/// Is `config` final, a value with nothing left to do?
pub fn is_final(config: &MachineConfig, spec: &LanguageSpec) -> bool {
    config.continuation == Term::constant(EMPTY_CONTINUATION) && spec.is_value(&config.focus)
}

/// Rules whose left-hand side continuation is a bare metavariable start
/// evaluating a compound focus. A focus that is already a value has
/// nothing to start, so those rules are skipped for it; otherwise a value
/// constructor such as a pair would be taken apart again forever.
fn applies_to_values(rule_lhs: &MachineConfig) -> bool {
    !matches!(rule_lhs.continuation, Term::Meta(_))
}

fn try_rule(
    rule: &InferenceRule,
    config: &MachineConfig,
    focus_is_value: bool,
    spec: &LanguageSpec,
) -> Option<Substitution> {
    let Formula::MachineStep { lhs, .. } = &rule.conclusion else { return None };
    if focus_is_value && !applies_to_values(lhs) {
        return None;
    }
    let mut sigma = Substitution::new();
    (match_into(&lhs.focus, &config.focus, spec, &mut sigma)
        && match_into(&lhs.continuation, &config.continuation, spec, &mut sigma))
    .then_some(sigma)
}

/// One machine transition with the first applicable rule in spec order.
/// `None` when no rule applies.
pub fn machine_step(
    config: &MachineConfig,
    spec: &LanguageSpec,
) -> Option<Result<(MachineConfig, TraceStep), EvalError>> {
    let focus_is_value = spec.is_value(&config.focus);
    for rule in spec.machine_rules() {
        let Some(sigma) = try_rule(rule, config, focus_is_value, spec) else { continue };
        let Formula::MachineStep { rhs, .. } = &rule.conclusion else { unreachable!() };
        let bad = |source| EvalError::BadRule { rule: rule.name.clone(), source };
        let next = instantiate(&rhs.focus, &sigma)
            .and_then(|focus| Ok(MachineConfig { focus, continuation: instantiate(&rhs.continuation, &sigma)? }));
        return Some(next.map_err(bad).map(|next| {
            let step = TraceStep {
                kind: StepKind::of_machine_rule(&rule.name),
                rule: rule.name.clone(),
                before: State::Machine(config.clone()),
                after: State::Machine(next.clone()),
            };
            (next, step)
        }));
    }
    None
}

/// Run the machine of a derived spec on `term` from `<term , mt>` until it
/// reaches `<v , mt>`, gets stuck, or has taken `fuel` steps.
pub fn ck_eval(term: &Term, spec: &LanguageSpec, fuel: usize) -> Evaluation {
    let mut trace = Vec::new();
    let mut config = initial_config(term);
    loop {
        if is_final(&config, spec) {
            return Evaluation { result: Ok(config.focus), trace };
        }
        if trace.len() >= fuel {
            let last = config.to_string();
            return Evaluation { result: Err(EvalError::OutOfFuel { steps: trace.len(), last }), trace };
        }
        match machine_step(&config, spec) {
            None => return Evaluation { result: Err(EvalError::StuckMachine(config)), trace },
            Some(Err(e)) => return Evaluation { result: Err(e), trace },
            Some(Ok((next, step))) => {
                trace.push(step);
                config = next;
            }
        }
    }
}

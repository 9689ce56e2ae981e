//! Variance of type-metavariable occurrences in typing premises.

use thiserror::Error;

use crate::ir::{Formula, Metavariable, Term, Variance, VarianceTable};

/// One appearance of a type metavariable in the output type of a typing
/// premise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occurrence {
    /// Index of the premise within the rule.
    pub premise: usize,
    /// Argument indices from the premise's output type down to the metavariable.
    pub path: Vec<usize>,
    pub variance: Variance,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum VarianceError {
    #[error("no variance declared for type constructor `{0}`")]
    MissingVariance(String),
    #[error("path {0:?} does not address a node of the type")]
    BadPath(Vec<usize>),
}

/// Variance of the position `path` inside `ty`: the composition of the
/// marks along the path, starting covariant.
pub fn occurrence_variance(path: &[usize], ty: &Term, table: &VarianceTable) -> Result<Variance, VarianceError> {
    let mut variance = Variance::Covariant;
    let mut node = ty;
    for &i in path {
        let Term::Ctor { name, args } = node else {
            return Err(VarianceError::BadPath(path.to_vec()));
        };
        let marks = table.get(name).ok_or_else(|| VarianceError::MissingVariance(name.clone()))?;
        let (Some(mark), Some(child)) = (marks.get(i), args.get(i)) else {
            return Err(VarianceError::BadPath(path.to_vec()));
        };
        variance = variance.compose(*mark);
        node = child;
    }
    Ok(variance)
}

/// Every occurrence of `var` in the output types of the typing premises.
/// Environments, subjects and non-typing premises are not scanned.
pub fn collect_occurrences(
    var: &Metavariable,
    premises: &[Formula],
    table: &VarianceTable,
) -> Result<Vec<Occurrence>, VarianceError> {
    let token = var.token();
    let mut out = Vec::new();
    for (premise, f) in premises.iter().enumerate() {
        let Formula::Typing { ty, .. } = f else { continue };
        for path in ty.positions() {
            if let Some(Term::Meta(m)) = ty.at(&path) {
                if m.token() == token {
                    let variance = occurrence_variance(&path, ty, table)?;
                    out.push(Occurrence { premise, path, variance });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{EnvExpr, TYPE};
    use Variance::*;

    fn tv(token: &str) -> Term {
        let base = token.trim_end_matches(|c: char| c.is_ascii_digit());
        Term::Meta(Metavariable::new(base, Some(&token[base.len()..]), TYPE))
    }

    fn arrow(a: Term, b: Term) -> Term {
        Term::ctor("arrow", vec![a, b])
    }

    fn table() -> VarianceTable {
        ["arrow", "Ref", "product"].into_iter().map(|c| (c.to_string(), VarianceTable::builtin(c).unwrap())).collect()
    }

    fn typing(e: &str, ty: Term) -> Formula {
        let m = Metavariable::new("e", Some(e), "Expression");
        Formula::Typing { env: EnvExpr::root("G"), subject: Term::Meta(m), ty }
    }

    #[test]
    fn domain_is_contravariant() {
        let ty = arrow(tv("T11"), tv("T2"));
        assert_eq!(occurrence_variance(&[0], &ty, &table()), Ok(Contravariant));
        assert_eq!(occurrence_variance(&[1], &ty, &table()), Ok(Covariant));
    }

    #[test]
    fn reference_contents_are_invariant() {
        let ty = Term::ctor("Ref", vec![tv("T")]);
        assert_eq!(occurrence_variance(&[0], &ty, &table()), Ok(Invariant));
    }

    #[test]
    fn double_contravariance_is_covariant() {
        // (T -> B) -> B
        let ty = arrow(arrow(tv("T"), Term::constant("B")), Term::constant("B"));
        assert_eq!(occurrence_variance(&[0, 0], &ty, &table()), Ok(Covariant));
    }

    #[test]
    fn empty_path_is_covariant() {
        assert_eq!(occurrence_variance(&[], &tv("T1"), &table()), Ok(Covariant));
    }

    #[test]
    fn undeclared_constructor_is_reported() {
        let ty = Term::ctor("Box", vec![tv("T")]);
        assert_eq!(occurrence_variance(&[0], &ty, &table()), Err(VarianceError::MissingVariance("Box".into())));
    }

    #[test]
    fn app2_has_two_contravariant_occurrences() {
        let t = || tv("T");
        let premises = vec![
            typing("1", arrow(t(), arrow(t(), Term::constant("Bool")))),
            typing("2", Term::ctor("product", vec![t(), t()])),
        ];
        let occ = collect_occurrences(t().as_meta().unwrap(), &premises, &table()).unwrap();
        let marks: Vec<Variance> = occ.iter().map(|o| o.variance).collect();
        assert_eq!(marks, vec![Contravariant, Contravariant, Covariant, Covariant]);
        assert_eq!(occ[1].path, vec![1, 0]);
    }

    #[test]
    fn absent_variable_has_no_occurrences() {
        let premises = vec![typing("1", tv("T1")), Formula::Subtype { sub: tv("T"), sup: tv("T") }];
        assert!(collect_occurrences(tv("T").as_meta().unwrap(), &premises, &table()).unwrap().is_empty());
    }
}

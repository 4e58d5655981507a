use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use super::action::{ActionBody, ActionPattern, ClosedAction};
use super::value::{Term, Value};

/// Finite partial map from term variables to values.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Substitution(BTreeMap<String, Value>);

impl Substitution {
    pub fn new() -> Self {
        Substitution(BTreeMap::new())
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: impl Into<String>, value: Value) -> Option<Value> {
        self.0.insert(var.into(), value)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.0.contains_key(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Right-biased union: bindings in `other` win.
    pub fn extend(&mut self, other: &Substitution) {
        for (k, v) in other.iter() {
            self.0.insert(k.to_string(), v.clone());
        }
    }

    /// Applies the substitution to a term. Unbound variables are left in place.
    pub fn apply_term(&self, term: &Term) -> Term {
        match term {
            Term::Var(v) => match self.0.get(v) {
                Some(value) => Term::from(value),
                None => term.clone(),
            },
            Term::Tuple(items) => Term::Tuple(items.iter().map(|t| self.apply_term(t)).collect()),
            other => other.clone(),
        }
    }

    pub fn apply_pattern(&self, pattern: &ActionPattern) -> ActionPattern {
        if self.is_empty() {
            return pattern.clone();
        }
        pattern.map(|t| self.apply_term(t))
    }
}

impl FromIterator<(String, Value)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("variable {0} occurs more than once in a pattern")]
    NonLinear(String),
}

/// Fails on the first variable that occurs twice.
pub fn check_linear(pattern: &ActionPattern) -> Result<(), MatchError> {
    let mut seen = HashSet::new();
    for v in pattern.vars() {
        if !seen.insert(v) {
            return Err(MatchError::NonLinear(v.to_string()));
        }
    }
    Ok(())
}

/// Matches a linear term against a value, adding bindings to `out`.
pub fn match_term(term: &Term, value: &Value, out: &mut Substitution) -> bool {
    match (term, value) {
        (Term::Wild, _) => true,
        (Term::Var(v), _) => {
            out.insert(v.clone(), value.clone());
            true
        }
        (Term::Lit(lit), _) => lit == value,
        (Term::Tuple(ts), Value::Tuple(vs)) => {
            ts.len() == vs.len() && ts.iter().zip(vs).all(|(t, v)| match_term(t, v, out))
        }
        (Term::Tuple(_), _) => false,
    }
}

/// Does the term match the value, ignoring bindings?
pub fn term_matches(term: &Term, value: &Value) -> bool {
    match (term, value) {
        (Term::Wild, _) | (Term::Var(_), _) => true,
        (Term::Lit(lit), _) => lit == value,
        (Term::Tuple(ts), Value::Tuple(vs)) => ts.len() == vs.len() && ts.iter().zip(vs).all(|(t, v)| term_matches(t, v)),
        (Term::Tuple(_), _) => false,
    }
}

/// Matches a linear pattern without checking linearity first.
pub fn match_linear(pattern: &ActionPattern, event: &ClosedAction) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    if !match_term(&pattern.subject, &event.subject, &mut sigma) {
        return None;
    }
    let ok = match (&pattern.body, &event.body) {
        (ActionBody::Output(t), ActionBody::Output(v)) | (ActionBody::Input(t), ActionBody::Input(v)) => {
            match_term(t, v, &mut sigma)
        }
        (
            ActionBody::Call { module: pm, function: pf, args: pa },
            ActionBody::Call { module: em, function: ef, args: ea },
        ) => pm == em && pf == ef && pa.len() == ea.len() && pa.iter().zip(ea).all(|(t, v)| match_term(t, v, &mut sigma)),
        (
            ActionBody::Return { module: pm, function: pf, arity: pn, value: pv },
            ActionBody::Return { module: em, function: ef, arity: en, value: ev },
        ) => pm == em && pf == ef && pn == en && match_term(pv, ev, &mut sigma),
        _ => false,
    };
    ok.then_some(sigma)
}

/// The unique substitution `s` with `pattern s == event`, if any.
pub fn match_action(pattern: &ActionPattern, event: &ClosedAction) -> Result<Option<Substitution>, MatchError> {
    check_linear(pattern)?;
    Ok(match_linear(pattern, event))
}

/// Is the event of the pattern's kind with a matching subject? Such events
/// are the ones a subject-scoped necessity cannot ignore.
pub fn concerns(pattern: &ActionPattern, event: &ClosedAction) -> bool {
    pattern.kind() == event.kind() && term_matches(&pattern.subject, &event.subject)
}

/// Shape-only match used by instrumentation filters: variables act as wildcards.
pub fn action_matches(pattern: &ActionPattern, event: &ClosedAction) -> bool {
    if !term_matches(&pattern.subject, &event.subject) {
        return false;
    }
    match (&pattern.body, &event.body) {
        (ActionBody::Output(t), ActionBody::Output(v)) | (ActionBody::Input(t), ActionBody::Input(v)) => term_matches(t, v),
        (
            ActionBody::Call { module: pm, function: pf, args: pa },
            ActionBody::Call { module: em, function: ef, args: ea },
        ) => pm == em && pf == ef && pa.len() == ea.len() && pa.iter().zip(ea).all(|(t, v)| term_matches(t, v)),
        (
            ActionBody::Return { module: pm, function: pf, arity: pn, value: pv },
            ActionBody::Return { module: em, function: ef, arity: en, value: ev },
        ) => pm == em && pf == ef && pn == en && term_matches(pv, ev),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn server_out(payload: Term) -> ActionPattern {
        ActionPattern::output(Term::atom("server"), payload)
    }

    fn event() -> ClosedAction {
        ClosedAction::output(Value::atom("server"), Value::tuple([Value::Int(5), Value::atom("ack"), Value::atom("joe")]))
    }

    #[test]
    fn open_output_binds_both_variables() {
        let p = server_out(Term::tuple([Term::var("x"), Term::atom("ack"), Term::var("y")]));
        let sigma = match_action(&p, &event()).unwrap().unwrap();
        let expected: Substitution =
            [("x".to_string(), Value::Int(5)), ("y".to_string(), Value::atom("joe"))].into_iter().collect();
        assert_eq!(sigma, expected);
    }

    #[test]
    fn closed_pattern_gives_empty_substitution() {
        let p = server_out(Term::tuple([Term::int(5), Term::atom("ack"), Term::atom("joe")]));
        assert_eq!(match_action(&p, &event()).unwrap(), Some(Substitution::new()));
    }

    #[test]
    fn subject_and_kind_mismatches() {
        let client = ActionPattern::output(Term::atom("client"), Term::tuple([Term::var("x"), Term::atom("ack"), Term::var("y")]));
        assert_eq!(match_action(&client, &event()).unwrap(), None);
        let input = ActionPattern::input(Term::atom("server"), Term::tuple([Term::var("x"), Term::atom("ack"), Term::var("y")]));
        assert_eq!(match_action(&input, &event()).unwrap(), None);
    }

    #[test]
    fn arity_and_literal_mismatches() {
        assert_eq!(match_action(&server_out(Term::tuple([Term::var("x"), Term::Wild])), &event()).unwrap(), None);
        assert_eq!(
            match_action(&server_out(Term::tuple([Term::int(6), Term::Wild, Term::Wild])), &event()).unwrap(),
            None
        );
    }

    #[test]
    fn wildcards_bind_nothing() {
        let p = server_out(Term::tuple([Term::Wild, Term::atom("ack"), Term::Wild]));
        assert_eq!(match_action(&p, &event()).unwrap(), Some(Substitution::new()));
    }

    #[test]
    fn repeated_variables_are_rejected_regardless_of_the_event() {
        let p = ActionPattern::output(Term::atom("nobody"), Term::tuple([Term::var("x"), Term::var("x")]));
        assert_eq!(match_action(&p, &event()), Err(MatchError::NonLinear("x".into())));
    }

    #[test]
    fn return_requires_same_function_and_arity() {
        let ev = ClosedAction::ret(Value::Pid(super::super::Pid(1)), "yaws", "do_recv", 3, Value::atom("x"));
        let ok = ActionPattern::ret(Term::Wild, "yaws", "do_recv", 3, Term::var("V"));
        let bad = ActionPattern::ret(Term::Wild, "yaws", "do_recv", 2, Term::var("V"));
        assert!(match_action(&ok, &ev).unwrap().is_some());
        assert!(match_action(&bad, &ev).unwrap().is_none());
    }
}

use std::collections::HashSet;

use super::OracleError;
use crate::logic::{concerns, eval_bool, match_action, ActionPattern, EventInstance, Formula, PredicateTable, Substitution};

/// Which events a waiting necessity is offered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum EventScope {
    /// Every event; a necessity that fails to match is discharged.
    #[default]
    Global,
    /// Only events of the necessity's kind whose subject matches the
    /// necessity's subject; others are skipped and the necessity keeps waiting.
    Subject,
}

type Env = Vec<(String, Formula)>;

#[derive(Clone, PartialEq, Eq, Hash)]
struct Waiting {
    pattern: ActionPattern,
    body: Formula,
    env: Env,
}

/// Unfolds `f` until every branch waits on a necessity; `Err(())` means a
/// branch reached falsity.
fn settle(f: &Formula, env: &Env, preds: &PredicateTable, out: &mut Vec<Waiting>) -> Result<Result<(), ()>, OracleError> {
    match f {
        Formula::FF | Formula::SFF => Ok(Err(())),
        Formula::And(a, b) => {
            if settle(a, env, preds, out)?.is_err() {
                return Ok(Err(()));
            }
            settle(b, env, preds, out)
        }
        Formula::Guard(b, body) => {
            if eval_bool(b, &Substitution::new(), preds)? {
                settle(body, env, preds, out)
            } else {
                Ok(Ok(()))
            }
        }
        Formula::Max(x, body) => {
            let mut inner = env.clone();
            inner.retain(|(n, _)| n != x);
            inner.push((x.clone(), f.clone()));
            settle(body, &inner, preds, out)
        }
        Formula::Var(x) => {
            let def = env
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, d)| d.clone())
                .ok_or_else(|| OracleError::UnboundFormulaVar(x.clone()))?;
            settle(&def, env, preds, out)
        }
        Formula::Nec(p, body) | Formula::SyncNec(p, body) => {
            out.push(Waiting { pattern: p.clone(), body: (**body).clone(), env: env.clone() });
            Ok(Ok(()))
        }
    }
}

fn dedup(v: Vec<Waiting>) -> Vec<Waiting> {
    let mut seen = HashSet::new();
    v.into_iter().filter(|w| seen.insert(w.clone())).collect()
}

/// Earliest trace index at which some branch of `f` reaches falsity.
pub fn rejects_trace(f: &Formula, trace: &[EventInstance], preds: &PredicateTable) -> Result<Option<usize>, OracleError> {
    rejects_trace_scoped(f, trace, preds, EventScope::Global)
}

pub fn rejects_trace_scoped(
    f: &Formula,
    trace: &[EventInstance],
    preds: &PredicateTable,
    scope: EventScope,
) -> Result<Option<usize>, OracleError> {
    if trace.is_empty() {
        return Ok(None);
    }
    let mut live = Vec::new();
    if settle(f, &Vec::new(), preds, &mut live)?.is_err() {
        return Ok(Some(0));
    }
    for (i, ev) in trace.iter().enumerate() {
        let mut next = Vec::new();
        for w in live {
            if scope == EventScope::Subject && !concerns(&w.pattern, &ev.action) {
                next.push(w);
                continue;
            }
            let Some(sigma) = match_action(&w.pattern, &ev.action)? else { continue };
            if settle(&w.body.apply_substitution(&sigma), &w.env, preds, &mut next)?.is_err() {
                return Ok(Some(i));
            }
        }
        live = dedup(next);
        if live.is_empty() {
            return Ok(None);
        }
    }
    Ok(None)
}

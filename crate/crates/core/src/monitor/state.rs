use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::instrument::{FreshNonce, MonitorMessage, Nonce};
use crate::logic::{concerns, ActionPattern, eval_bool, match_action, EvalError, Formula, MatchError, Pid, PredicateTable, Substitution};
use crate::oracle::EventScope;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MonitorError {
    #[error("formula contains sff; mark synchronous necessities first")]
    UnmarkedSff,
    #[error("formula variable {0} is not bound")]
    UnboundFormulaVar(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// Fixpoint definitions in scope, innermost last.
pub type RecEnv = Vec<(String, Arc<Formula>)>;

/// One submonitor: a residual formula waiting on a necessity (or on falsity,
/// which is flagged at the next event).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubmonitorState {
    pub residual: Formula,
    pub sigma: Substitution,
    /// Acknowledgement held while the current event is being handled.
    pub pending_ack: Option<FreshNonce>,
    pub env: RecEnv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Violation { event_index: u64, emitter: Pid, synchronous: bool, witness: Substitution },
    Running,
}

impl Verdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, Verdict::Violation { .. })
    }

    pub fn event_index(&self) -> Option<u64> {
        match self {
            Verdict::Violation { event_index, .. } => Some(*event_index),
            Verdict::Running => None,
        }
    }
}

/// `violation <index> <sync|async> <witness>`
impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Running => f.write_str("running"),
            Verdict::Violation { event_index, synchronous, witness, .. } => {
                write!(f, "violation {event_index} {} {{", if *synchronous { "sync" } else { "async" })?;
                for (i, (k, v)) in witness.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}={v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AckDecision {
    /// The event carried a null nonce.
    NotRequired,
    Release,
    /// A synchronous violation: the emitter stays blocked.
    Withhold,
}

impl AckDecision {
    /// Combines the decisions of siblings that handled the same event.
    pub fn combine(self, other: AckDecision) -> AckDecision {
        use AckDecision::*;
        match (self, other) {
            (Withhold, _) | (_, Withhold) => Withhold,
            (Release, _) | (_, Release) => Release,
            _ => NotRequired,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    /// Successor states; empty when the submonitor terminates.
    pub states: Vec<SubmonitorState>,
    pub verdicts: Vec<Verdict>,
    pub ack: AckDecision,
}

/// Unfolds a formula until every branch waits on a necessity. Returns false
/// if some branch reached falsity.
pub(crate) fn settle(
    f: &Formula,
    sigma: &Substitution,
    env: &RecEnv,
    preds: &PredicateTable,
    out: &mut Vec<SubmonitorState>,
) -> Result<bool, MonitorError> {
    match f {
        Formula::SFF => Err(MonitorError::UnmarkedSff),
        Formula::FF => Ok(false),
        Formula::And(a, b) => Ok(settle(a, sigma, env, preds, out)? && settle(b, sigma, env, preds, out)?),
        Formula::Guard(b, body) => {
            if eval_bool(b, &Substitution::new(), preds)? {
                settle(body, sigma, env, preds, out)
            } else {
                Ok(true)
            }
        }
        Formula::Max(x, body) => unfold(x, body, Arc::new(f.clone()), sigma, env, preds, out),
        Formula::Var(x) => {
            let def = env
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, d)| d.clone())
                .ok_or_else(|| MonitorError::UnboundFormulaVar(x.clone()))?;
            match &*def {
                Formula::Max(y, body) => unfold(y, body, def.clone(), sigma, env, preds, out),
                other => settle(other, sigma, env, preds, out),
            }
        }
        Formula::Nec(..) | Formula::SyncNec(..) => {
            out.push(SubmonitorState { residual: f.clone(), sigma: sigma.clone(), pending_ack: None, env: env.clone() });
            Ok(true)
        }
    }
}

fn unfold(
    x: &str,
    body: &Formula,
    def: Arc<Formula>,
    sigma: &Substitution,
    env: &RecEnv,
    preds: &PredicateTable,
    out: &mut Vec<SubmonitorState>,
) -> Result<bool, MonitorError> {
    let mut inner = env.clone();
    inner.retain(|(n, _)| n != x);
    inner.push((x.to_string(), def));
    settle(body, sigma, &inner, preds, out)
}

/// Initial submonitors for a formula. A formula that is false outright
/// yields a single state at falsity.
pub fn initial_states(f: &Formula, preds: &PredicateTable) -> Result<Vec<SubmonitorState>, MonitorError> {
    let mut out = Vec::new();
    if !settle(f, &Substitution::new(), &Vec::new(), preds, &mut out)? {
        return Ok(vec![SubmonitorState { residual: Formula::FF, sigma: Substitution::new(), pending_ack: None, env: Vec::new() }]);
    }
    Ok(out)
}

fn ack_for(nonce: &Nonce) -> AckDecision {
    if nonce.is_fresh() {
        AckDecision::Release
    } else {
        AckDecision::NotRequired
    }
}

/// False if `m` cannot change `s`: under subject scope an event that does not
/// concern the awaited necessity leaves the submonitor as it is.
pub fn affected_by(s: &SubmonitorState, m: &MonitorMessage, scope: EventScope) -> bool {
    match &s.residual {
        Formula::Nec(p, _) | Formula::SyncNec(p, _) => scope == EventScope::Global || concerns(p, &m.event.action),
        _ => true,
    }
}

/// The necessity pattern `s` waits on, when under `scope` only events it
/// concerns can affect `s`.
pub fn awaited(s: &SubmonitorState, scope: EventScope) -> Option<ActionPattern> {
    match (&s.residual, scope) {
        (Formula::Nec(p, _) | Formula::SyncNec(p, _), EventScope::Subject) => Some(p.clone()),
        _ => None,
    }
}

/// One iteration of a submonitor's loop on one reported event.
pub fn submonitor_step(
    s: &SubmonitorState,
    m: &MonitorMessage,
    scope: EventScope,
    preds: &PredicateTable,
) -> Result<StepOutcome, MonitorError> {
    let violation = |witness: Substitution| StepOutcome {
        states: Vec::new(),
        verdicts: vec![Verdict::Violation {
            event_index: m.event.seq,
            emitter: m.event.emitter,
            synchronous: m.nonce.is_fresh(),
            witness,
        }],
        ack: if m.nonce.is_fresh() { AckDecision::Withhold } else { AckDecision::NotRequired },
    };
    let (pattern, body) = match &s.residual {
        Formula::Nec(p, b) | Formula::SyncNec(p, b) => (p, b),
        Formula::FF => return Ok(violation(s.sigma.clone())),
        Formula::SFF => return Err(MonitorError::UnmarkedSff),
        _ => unreachable!("submonitors wait on necessities"),
    };
    let ack = ack_for(&m.nonce);
    if scope == EventScope::Subject && !concerns(pattern, &m.event.action) {
        let mut waiting = s.clone();
        waiting.pending_ack = None;
        return Ok(StepOutcome { states: vec![waiting], verdicts: Vec::new(), ack });
    }
    let Some(sigma) = match_action(pattern, &m.event.action)? else {
        return Ok(StepOutcome { states: Vec::new(), verdicts: Vec::new(), ack });
    };
    let mut acc = s.sigma.clone();
    acc.extend(&sigma);
    let mut states = Vec::new();
    if !settle(&body.apply_substitution(&sigma), &acc, &s.env, preds, &mut states)? {
        return Ok(violation(acc));
    }
    Ok(StepOutcome { states, verdicts: Vec::new(), ack })
}

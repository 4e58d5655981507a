//! Formulas, actions, values and the operations over them.

mod action;
mod boolexpr;
mod formula;
mod matching;
mod value;

pub use action::{Action, ActionBody, ActionKind, ActionPattern, ClosedAction, EventInstance};
pub use boolexpr::{eval_bool, Arith, BoolExpr, CmpOp, EvalError, Predicate, PredicateTable};
pub use formula::{Formula, WellFormedError};
pub use matching::{action_matches, check_linear, concerns, match_action, match_linear, match_term, term_matches, MatchError, Substitution};
pub use value::{Pid, Term, Value};

pub(crate) use value::atom_needs_quotes;

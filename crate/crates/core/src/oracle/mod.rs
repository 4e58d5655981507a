//! Ground truth: denotational semantics over finite LTSs and a trace-level
//! rejection check.

mod denote;
mod files;
mod lts;
mod reject;

use thiserror::Error;

use crate::logic::{EvalError, MatchError};

pub use denote::{denote, satisfies, Denoter, Env};
pub use files::{default_emitter, format_lts, format_trace, format_trace_line, parse_lts, parse_trace, parse_trace_entries, FileError, TraceEntry};
pub use lts::{FiniteLts, Label, StateSet};
pub use reject::{rejects_trace, rejects_trace_scoped, EventScope};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("formula variable {0} is not bound")]
    UnboundFormulaVar(String),
}

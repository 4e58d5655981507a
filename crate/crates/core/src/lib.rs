//! Runtime verification for actor systems.
//!
//! Safety formulas with data patterns are parsed, checked against finite
//! models, and compiled into networks of concurrent submonitors that observe
//! an instrumented actor runtime synchronously, asynchronously or in a
//! hybrid of the two.

pub mod logic;
pub mod syntax;
pub mod oracle;
pub mod instrument;
pub mod runtime;
pub mod monitor;
pub mod bench;

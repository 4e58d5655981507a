//! Monitor synthesis: formulas compile to networks of independent
//! submonitors, one per branch, fed by a router that fans each reported
//! event out to every live submonitor and combines their acknowledgements.

mod network;
mod state;

use std::sync::Arc;
use std::time::Duration;

pub use network::{spawn_network, synthesize, Blueprint, MonitorHandle, NetworkConfig, NetworkStats};
pub use state::{initial_states, submonitor_step, AckDecision, MonitorError, RecEnv, StepOutcome, SubmonitorState, Verdict};

use crate::instrument::{InstrumentationMode, Instrumenter, StartGate};
use crate::logic::{Formula, PredicateTable};
use crate::oracle::EventScope;
use crate::runtime::{Runtime, SubjectFilter};

/// Options for [`attach`].
#[derive(Clone)]
pub struct AttachOptions {
    pub scope: EventScope,
    pub preds: Arc<PredicateTable>,
    pub delay: Option<Duration>,
}

impl Default for AttachOptions {
    fn default() -> Self {
        AttachOptions { scope: EventScope::Subject, preds: Arc::new(PredicateTable::new()), delay: None }
    }
}

/// A monitor network plus the instrumentation feeding it.
pub struct Monitored {
    pub monitor: MonitorHandle,
    pub instrumenter: Arc<Instrumenter>,
}

/// Marks, synthesises and starts a monitor for `f`, and instruments every
/// actor of `rt` to report to it in `mode`.
pub fn attach(rt: &Runtime, f: &Formula, mode: InstrumentationMode, opts: AttachOptions) -> Result<Monitored, MonitorError> {
    let bp = synthesize(&f.mark_synchronous(), &opts.preds)?;
    let gate = (mode == InstrumentationMode::Sync).then(StartGate::new);
    let cfg = NetworkConfig { scope: opts.scope, preds: opts.preds, delay: opts.delay, gate: gate.clone() };
    let monitor = spawn_network(rt, &bp, cfg);
    let mut ins = Instrumenter::new(mode, bp.table.clone(), monitor.router());
    if let Some(g) = gate {
        ins = ins.with_gate(g);
    }
    let instrumenter = Arc::new(ins);
    instrumenter.install(rt, SubjectFilter::All);
    Ok(Monitored { monitor, instrumenter })
}

#[cfg(test)]
mod tests;

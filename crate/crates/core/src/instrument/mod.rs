//! Event reporting protocols between instrumented actors and monitors.
//!
//! Asynchronous reports carry a null nonce and never wait. Synchronous
//! reports carry a fresh nonce and block the emitting actor until the
//! monitor acknowledges exactly that nonce. Hybrid instrumentation picks one
//! of the two per event from the synchronous markings of the formula.

mod nonce;
mod table;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

pub use nonce::{FreshNonce, Nonce, NonceSource};
pub use table::{Predictor, SyncTable};

use crate::logic::{ActionKind, EventInstance, Pid};
use crate::oracle::format_trace_line;
use crate::runtime::{BoxFuture, Ctx, Hook, HookRegistration, Message, Runtime, SubjectFilter};

/// An event report sent from an instrumented actor to the monitor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonitorMessage {
    pub event: EventInstance,
    pub nonce: Nonce,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InstrumentationMode {
    Async,
    Sync,
    Hybrid,
}

impl fmt::Display for InstrumentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstrumentationMode::Async => "async",
            InstrumentationMode::Sync => "sync",
            InstrumentationMode::Hybrid => "hybrid",
        })
    }
}

impl FromStr for InstrumentationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "async" => Ok(InstrumentationMode::Async),
            "sync" => Ok(InstrumentationMode::Sync),
            "hybrid" => Ok(InstrumentationMode::Hybrid),
            _ => Err(format!("unknown mode {s:?} (expected async, sync or hybrid)")),
        }
    }
}

struct GateOpen;

/// Start signal from the monitor. Synchronous reporters wait on it before
/// their first event.
#[derive(Default)]
pub struct StartGate {
    state: Mutex<(bool, Vec<Pid>)>,
}

impl StartGate {
    pub fn new() -> Arc<StartGate> {
        Arc::new(StartGate::default())
    }

    pub fn is_open(&self) -> bool {
        self.state.lock().expect("gate").0
    }

    /// Opens the gate and releases every waiting actor. Called from inside
    /// the runtime by the monitor.
    pub fn open(&self, ctx: &Ctx) {
        let waiting = {
            let mut g = self.state.lock().expect("gate");
            g.0 = true;
            std::mem::take(&mut g.1)
        };
        for pid in waiting {
            ctx.send_message(pid, Message::control(GateOpen));
        }
    }

    pub async fn wait(&self, ctx: &Ctx) {
        {
            let mut g = self.state.lock().expect("gate");
            if g.0 {
                return;
            }
            g.1.push(ctx.pid());
        }
        ctx.receive_where(|m| matches!(m, Message::Control(c) if c.is::<GateOpen>())).await;
    }
}

/// Reports one event to the monitor at `sink`. A synchronous report blocks
/// until the acknowledgement for its own nonce arrives; any other message,
/// including acknowledgements of other nonces, is left in the mailbox.
pub async fn emit_event(ctx: &Ctx, event: EventInstance, sync: bool, sink: Pid) {
    let nonce = if sync { Nonce::Fresh(ctx.fresh_nonce()) } else { Nonce::Null };
    report(ctx, MonitorMessage { event, nonce }, sink).await
}

async fn report(ctx: &Ctx, msg: MonitorMessage, sink: Pid) {
    let nonce = msg.nonce;
    ctx.send_message(sink, Message::Monitor(msg));
    if let Nonce::Fresh(n) = nonce {
        ctx.receive_where(move |m| matches!(m, Message::Ack(a) if *a == n)).await;
    }
}

/// Counters kept by an [`Instrumenter`].
#[derive(Debug, Default)]
pub struct EmitStats {
    pub sync_events: AtomicU64,
    pub async_events: AtomicU64,
}

/// The instrumentation hook: filters events against the monitored
/// patterns, picks a reporting mode and emits them to the monitor.
pub struct Instrumenter {
    mode: InstrumentationMode,
    table: SyncTable,
    predictor: Mutex<Predictor>,
    sink: Pid,
    gate: Option<Arc<StartGate>>,
    dump: Option<Mutex<Box<dyn Write + Send>>>,
    stats: EmitStats,
}

impl Instrumenter {
    pub fn new(mode: InstrumentationMode, table: SyncTable, sink: Pid) -> Instrumenter {
        Instrumenter {
            mode,
            table,
            predictor: Mutex::new(Predictor::default()),
            sink,
            gate: None,
            dump: None,
            stats: EmitStats::default(),
        }
    }

    /// Synchronous reports wait for the gate before the first event.
    pub fn with_gate(mut self, gate: Arc<StartGate>) -> Self {
        self.gate = Some(gate);
        self
    }

    /// Appends every reported event, with its nonce, to `out` in trace file syntax.
    pub fn with_dump(mut self, out: Box<dyn Write + Send>) -> Self {
        self.dump = Some(Mutex::new(out));
        self
    }

    pub fn mode(&self) -> InstrumentationMode {
        self.mode
    }

    pub fn stats(&self) -> &EmitStats {
        &self.stats
    }

    /// Event kinds worth hooking at all.
    pub fn kinds(&self) -> Vec<ActionKind> {
        ActionKind::ALL.into_iter().filter(|k| self.table.patterns().any(|p| p.kind() == *k)).collect()
    }

    fn is_sync(&self, event: &EventInstance) -> bool {
        match self.mode {
            InstrumentationMode::Async => false,
            InstrumentationMode::Sync => true,
            InstrumentationMode::Hybrid => {
                self.predictor.lock().expect("predictor").step(&self.table, event.emitter, &event.action)
            }
        }
    }

    /// Registers the hook for every actor in `subjects`.
    pub fn install(self: &Arc<Self>, rt: &Runtime, subjects: SubjectFilter) -> crate::runtime::HookId {
        rt.register_hook(HookRegistration { kinds: self.kinds(), subjects, hook: self.clone() })
    }

    pub fn flush(&self) {
        if let Some(d) = &self.dump {
            let _ = d.lock().expect("dump").flush();
        }
    }
}

impl Hook for Instrumenter {
    fn on_event<'a>(&'a self, ctx: &'a Ctx, event: &'a EventInstance) -> BoxFuture<'a, ()> {
        Box::pin(async move {
            if !self.table.reportable(&event.action) {
                return;
            }
            let sync = self.is_sync(event);
            if sync {
                self.stats.sync_events.fetch_add(1, Ordering::Relaxed);
                if let Some(g) = &self.gate {
                    g.wait(ctx).await;
                }
            } else {
                self.stats.async_events.fetch_add(1, Ordering::Relaxed);
            }
            let nonce = if sync { Nonce::Fresh(ctx.fresh_nonce()) } else { Nonce::Null };
            if let Some(d) = &self.dump {
                let _ = writeln!(d.lock().expect("dump"), "{}", format_trace_line(event, Some(&nonce)));
            }
            report(ctx, MonitorMessage { event: event.clone(), nonce }, self.sink).await;
        })
    }
}

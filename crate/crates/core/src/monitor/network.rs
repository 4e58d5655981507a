use std::collections::{HashSet, VecDeque};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::state::{affected_by, awaited, initial_states, submonitor_step, AckDecision, MonitorError, SubmonitorState, Verdict};
use crate::instrument::{FreshNonce, MonitorMessage, StartGate, SyncTable};
use crate::logic::{concerns, ActionPattern, Formula, Pid, PredicateTable};
use crate::oracle::EventScope;
use crate::runtime::{Ctx, Message, Runtime};

/// What a formula compiles to: the initial submonitors and the necessity
/// table the instrumentation reports against.
#[derive(Clone, Debug)]
pub struct Blueprint {
    pub formula: Formula,
    pub initial: Vec<SubmonitorState>,
    pub table: SyncTable,
}

impl PartialEq for Blueprint {
    fn eq(&self, other: &Self) -> bool {
        self.formula == other.formula && self.initial == other.initial
    }
}

/// Compiles a marked formula. `sff` must already have been rewritten.
pub fn synthesize(f: &Formula, preds: &PredicateTable) -> Result<Blueprint, MonitorError> {
    if f.contains_sff() {
        return Err(MonitorError::UnmarkedSff);
    }
    Ok(Blueprint { formula: f.clone(), initial: initial_states(f, preds)?, table: SyncTable::new(f) })
}

#[derive(Clone)]
pub struct NetworkConfig {
    pub scope: EventScope,
    pub preds: Arc<PredicateTable>,
    /// Artificial delay before the monitor handles each event.
    pub delay: Option<Duration>,
    pub gate: Option<Arc<StartGate>>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig { scope: EventScope::Subject, preds: Arc::new(PredicateTable::new()), delay: None, gate: None }
    }
}

#[derive(Debug, Default)]
pub struct NetworkStats {
    pub events: AtomicU64,
    pub acks_sent: AtomicU64,
    pub acks_withheld: AtomicU64,
    pub spawned: AtomicU64,
    pub live: AtomicUsize,
}

struct Shared {
    stats: NetworkStats,
    verdicts: Mutex<Vec<Verdict>>,
    errors: Mutex<Vec<MonitorError>>,
    acks: Mutex<Vec<FreshNonce>>,
    members: Mutex<HashSet<Pid>>,
    scope: EventScope,
    preds: Arc<PredicateTable>,
}

/// Handle on a running monitor network.
pub struct MonitorHandle {
    router: Pid,
    shared: Arc<Shared>,
    rx: Mutex<Receiver<Verdict>>,
}

impl MonitorHandle {
    /// Where instrumented actors send their reports.
    pub fn router(&self) -> Pid {
        self.router
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.shared.verdicts.lock().expect("verdicts").clone()
    }

    pub fn first_violation(&self) -> Option<Verdict> {
        self.shared.verdicts.lock().expect("verdicts").first().cloned()
    }

    pub fn recv_verdict(&self, timeout: Duration) -> Option<Verdict> {
        self.rx.lock().expect("verdict channel").recv_timeout(timeout).ok()
    }

    pub fn errors(&self) -> Vec<MonitorError> {
        self.shared.errors.lock().expect("errors").clone()
    }

    /// Nonces acknowledged so far, in order.
    pub fn acks(&self) -> Vec<FreshNonce> {
        self.shared.acks.lock().expect("acks").clone()
    }

    pub fn stats(&self) -> &NetworkStats {
        &self.shared.stats
    }

    pub fn live_submonitors(&self) -> usize {
        self.shared.stats.live.load(Ordering::SeqCst)
    }

    /// Every submonitor ever spawned.
    pub fn submonitors(&self) -> HashSet<Pid> {
        self.shared.members.lock().expect("members").clone()
    }
}

struct Deliver(Arc<MonitorMessage>);

/// A submonitor and the pattern it waits on; `None` takes every event.
type Sub = (Pid, Option<ActionPattern>);

struct Report {
    children: Vec<Sub>,
    awaits: Option<ActionPattern>,
    verdicts: Vec<Verdict>,
    ack: AckDecision,
    alive: bool,
}

struct LiveGuard(Arc<Shared>);

impl Drop for LiveGuard {
    fn drop(&mut self) {
        self.0.stats.live.fetch_sub(1, Ordering::SeqCst);
    }
}

fn is_control<T: 'static>(m: &Message) -> bool {
    matches!(m, Message::Control(c) if c.is::<T>())
}

fn take_control<T: 'static>(m: Message) -> T {
    match m {
        Message::Control(c) => *c.downcast::<T>().expect("checked by the receive filter"),
        other => unreachable!("expected a control message, got {other:?}"),
    }
}

fn spawn_submonitor(ctx: &Ctx, shared: &Arc<Shared>, state: SubmonitorState, router: Pid) -> Sub {
    shared.stats.live.fetch_add(1, Ordering::SeqCst);
    shared.stats.spawned.fetch_add(1, Ordering::Relaxed);
    let sh = shared.clone();
    let awaits = awaited(&state, shared.scope);
    let pid = ctx.spawn(move |ctx| submonitor(ctx, sh, state, router));
    shared.members.lock().expect("members").insert(pid);
    (pid, awaits)
}

async fn submonitor(ctx: Ctx, shared: Arc<Shared>, mut state: SubmonitorState, router: Pid) {
    let _live = LiveGuard(shared.clone());
    loop {
        let Deliver(m) = take_control(ctx.receive_where(is_control::<Deliver>).await);
        if !affected_by(&state, &m, shared.scope) {
            let ack = if m.nonce.is_fresh() { AckDecision::Release } else { AckDecision::NotRequired };
            ctx.send_message(router, Message::control(Report { children: Vec::new(), awaits: awaited(&state, shared.scope), verdicts: Vec::new(), ack, alive: true }));
            continue;
        }
        state.pending_ack = m.nonce.fresh();
        let out = match submonitor_step(&state, &m, shared.scope, &shared.preds) {
            Ok(out) => out,
            Err(e) => {
                shared.errors.lock().expect("errors").push(e);
                let ack = if m.nonce.is_fresh() { AckDecision::Release } else { AckDecision::NotRequired };
                ctx.send_message(router, Message::control(Report { children: Vec::new(), awaits: None, verdicts: Vec::new(), ack, alive: false }));
                return;
            }
        };
        let mut states = out.states;
        // The last branch continues here; the others become new submonitors.
        let next = states.pop();
        let children = states.into_iter().map(|s| spawn_submonitor(&ctx, &shared, s, router)).collect();
        let alive = next.is_some();
        let awaits = next.as_ref().and_then(|s| awaited(s, shared.scope));
        ctx.send_message(router, Message::control(Report { children, awaits, verdicts: out.verdicts, ack: out.ack, alive }));
        match next {
            Some(s) => state = s,
            None => return,
        }
    }
}

async fn router(ctx: Ctx, shared: Arc<Shared>, initial: Vec<SubmonitorState>, delay: Option<Duration>, gate: Option<Arc<StartGate>>, tx: Sender<Verdict>) {
    let me = ctx.pid();
    let mut subs: Vec<Sub> = initial.into_iter().map(|s| spawn_submonitor(&ctx, &shared, s, me)).collect();
    if let Some(g) = gate {
        g.open(&ctx);
    }
    // Reports and events share the mailbox; events that arrive while a
    // barrier is open wait here instead of being rescanned.
    let mut backlog: VecDeque<MonitorMessage> = VecDeque::new();
    loop {
        let m = match backlog.pop_front() {
            Some(m) => m,
            None => match ctx.receive_where(|m| matches!(m, Message::Monitor(_))).await {
                Message::Monitor(m) => m,
                _ => unreachable!("filtered"),
            },
        };
        if let Some(d) = delay {
            ctx.sleep(d).await;
        }
        shared.stats.events.fetch_add(1, Ordering::Relaxed);
        let nonce = m.nonce;
        let m = Arc::new(m);
        // Submonitors the event cannot affect keep their place without a
        // round trip; their report would be an unchanged release.
        let (targets, mut next): (Vec<Sub>, Vec<Sub>) =
            subs.into_iter().partition(|(_, p)| p.as_ref().is_none_or(|p| concerns(p, &m.event.action)));
        for (s, _) in &targets {
            ctx.send_message(*s, Message::control(Deliver(m.clone())));
        }
        let mut ack = if nonce.is_fresh() { AckDecision::Release } else { AckDecision::NotRequired };
        for _ in 0..targets.len() {
            let (from, msg) = loop {
                match ctx.receive_from_where(|m| matches!(m, Message::Monitor(_)) || is_control::<Report>(m)).await {
                    (_, Message::Monitor(ev)) => backlog.push_back(ev),
                    other => break other,
                }
            };
            let r: Report = take_control(msg);
            ack = ack.combine(r.ack);
            if r.alive {
                next.push((from, r.awaits));
            }
            next.extend(r.children);
            for v in r.verdicts {
                shared.verdicts.lock().expect("verdicts").push(v.clone());
                let _ = tx.send(v);
            }
        }
        subs = next;
        match (ack, nonce.fresh()) {
            (AckDecision::Release, Some(n)) => {
                shared.acks.lock().expect("acks").push(n);
                shared.stats.acks_sent.fetch_add(1, Ordering::Relaxed);
                ctx.send_message(n.pid, Message::Ack(n));
            }
            (AckDecision::Withhold, Some(_)) => {
                shared.stats.acks_withheld.fetch_add(1, Ordering::Relaxed);
            }
            _ => {}
        }
    }
}

/// Starts the router and the initial submonitors of `bp` inside `rt`.
pub fn spawn_network(rt: &Runtime, bp: &Blueprint, cfg: NetworkConfig) -> MonitorHandle {
    let shared = Arc::new(Shared {
        stats: NetworkStats::default(),
        verdicts: Mutex::new(Vec::new()),
        errors: Mutex::new(Vec::new()),
        acks: Mutex::new(Vec::new()),
        members: Mutex::new(HashSet::new()),
        scope: cfg.scope,
        preds: cfg.preds.clone(),
    });
    let (tx, rx) = channel();
    let sh = shared.clone();
    let initial = bp.initial.clone();
    let router = rt.spawn(move |ctx| router(ctx, sh, initial, cfg.delay, cfg.gate, tx));
    MonitorHandle { router, shared, rx: Mutex::new(rx) }
}

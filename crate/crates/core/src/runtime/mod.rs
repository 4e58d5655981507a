//! A small actor runtime: spawn, asynchronous mailboxes, selective receive
//! and interposition hooks on sends, receives, calls and returns.
//!
//! Actors are futures multiplexed over either a single controlling thread
//! with virtual time ([`Runtime::deterministic`], [`Runtime::seeded`]) or a
//! pool of worker threads ([`Runtime::threaded`]).

mod executor;
mod hooks;
mod mailbox;
mod timer;

use std::collections::HashMap;
use std::future::Future;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::instrument::{FreshNonce, NonceSource};
use crate::logic::{
    eval_bool, match_term, ActionKind, BoolExpr, ClosedAction, EventInstance, Pid, PredicateTable, Substitution, Term,
    Value,
};

pub use executor::BoxFuture;
pub use hooks::{Hook, HookId, HookRegistration, SubjectFilter};
pub use mailbox::Message;
pub use timer::Sleep;

use executor::{Scheduler, Task};
use mailbox::{Envelope, Mailbox, Recv};

/// The pid used for messages injected from outside the runtime.
pub const EXTERNAL: Pid = Pid(0);

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("unknown function {module}:{function}/{arity}")]
    UnknownFunction { module: String, function: String, arity: u32 },
    #[error("name {0} is already registered")]
    NameTaken(String),
    #[error("{0}")]
    Function(String),
}

pub type NativeFn = Arc<dyn Fn(&[Value]) -> Result<Value, String> + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Dest {
    Pid(Pid),
    Name(Arc<str>),
}

impl From<Pid> for Dest {
    fn from(p: Pid) -> Self {
        Dest::Pid(p)
    }
}

impl From<&str> for Dest {
    fn from(n: &str) -> Self {
        Dest::Name(Arc::from(n))
    }
}

impl Dest {
    fn subject(&self) -> Value {
        match self {
            Dest::Pid(p) => Value::Pid(*p),
            Dest::Name(n) => Value::Atom(n.clone()),
        }
    }
}

/// One clause of a selective receive: a pattern over the message and an
/// optional guard over the bound variables.
#[derive(Clone, Debug)]
pub struct ReceiveClause {
    pub pattern: Term,
    pub guard: Option<BoolExpr>,
}

impl ReceiveClause {
    pub fn new(pattern: Term) -> Self {
        ReceiveClause { pattern, guard: None }
    }

    pub fn guarded(pattern: Term, guard: BoolExpr) -> Self {
        ReceiveClause { pattern, guard: Some(guard) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditEntry {
    pub from: Pid,
    pub to: Pid,
    pub kind: &'static str,
}

pub(crate) struct ActorCell {
    pid: Pid,
    mailbox: Arc<Mailbox>,
    name: Mutex<Option<Arc<str>>>,
    seq: AtomicU64,
    nonces: Mutex<NonceSource>,
}

struct RtInner {
    sched: Arc<Scheduler>,
    actors: Mutex<HashMap<Pid, Arc<ActorCell>>>,
    names: Mutex<HashMap<Arc<str>, Pid>>,
    next_pid: AtomicU64,
    hooks: RwLock<Vec<(HookId, HookRegistration)>>,
    next_hook: AtomicU64,
    modules: RwLock<HashMap<(String, String, u32), NativeFn>>,
    audit: Mutex<Option<Vec<AuditEntry>>>,
}

struct ShutdownGuard(Arc<Scheduler>);

impl Drop for ShutdownGuard {
    fn drop(&mut self) {
        self.0.shutdown();
    }
}

/// Handle to a running actor system. The system shuts down, dropping every
/// actor, when the last handle is dropped.
#[derive(Clone)]
pub struct Runtime {
    inner: Arc<RtInner>,
    _guard: Arc<ShutdownGuard>,
}

impl Runtime {
    fn with(sched: Arc<Scheduler>) -> Runtime {
        Runtime {
            _guard: Arc::new(ShutdownGuard(sched.clone())),
            inner: Arc::new(RtInner {
                sched,
                actors: Mutex::new(HashMap::new()),
                names: Mutex::new(HashMap::new()),
                next_pid: AtomicU64::new(1),
                hooks: RwLock::new(Vec::new()),
                next_hook: AtomicU64::new(0),
                modules: RwLock::new(HashMap::new()),
                audit: Mutex::new(None),
            }),
        }
    }

    /// Single-threaded FIFO scheduling with a virtual clock.
    pub fn deterministic() -> Runtime {
        Runtime::with(Scheduler::deterministic(None))
    }

    /// Single-threaded scheduling in a pseudo-random order fixed by `seed`.
    pub fn seeded(seed: u64) -> Runtime {
        Runtime::with(Scheduler::deterministic(Some(seed)))
    }

    pub fn threaded(workers: usize) -> Runtime {
        Runtime::with(Scheduler::threaded(workers))
    }

    pub fn is_threaded(&self) -> bool {
        self.inner.sched.is_threaded()
    }

    pub fn spawn<F, Fut>(&self, f: F) -> Pid
    where
        F: FnOnce(Ctx) -> Fut,
        Fut: Future<Output = ()> + Send + 'static,
    {
        spawn_on(&self.inner, f)
    }

    /// Delivers a data message from outside the system, unhooked.
    pub fn send(&self, to: impl Into<Dest>, v: Value) {
        if let Some(pid) = self.inner.resolve(&to.into()) {
            self.inner.deliver(EXTERNAL, pid, Message::Data(v));
        }
    }

    pub fn send_message(&self, to: Pid, msg: Message) {
        self.inner.deliver(EXTERNAL, to, msg);
    }

    /// Runs until nothing can make progress. In deterministic mode virtual
    /// time advances whenever only timers remain.
    pub fn run_until_quiescent(&self) -> bool {
        if self.is_threaded() {
            self.inner.sched.wait_quiescent(Duration::from_secs(600))
        } else {
            self.inner.sched.run_deterministic(None)
        }
    }

    /// Like [`Runtime::run_until_quiescent`] but gives up after `timeout` in
    /// threaded mode.
    pub fn wait_quiescent(&self, timeout: Duration) -> bool {
        if self.is_threaded() {
            self.inner.sched.wait_quiescent(timeout)
        } else {
            self.inner.sched.run_deterministic(None)
        }
    }

    /// Deterministic mode only: runs at most `polls` task polls.
    pub fn run_bounded(&self, polls: usize) -> bool {
        self.inner.sched.run_deterministic(Some(polls))
    }

    /// Waits until `pred` holds or the timeout elapses. In deterministic mode
    /// the system is first run to quiescence.
    pub fn wait_until(&self, timeout: Duration, mut pred: impl FnMut() -> bool) -> bool {
        if !self.is_threaded() {
            self.run_until_quiescent();
            return pred();
        }
        let deadline = Instant::now() + timeout;
        loop {
            if pred() {
                return true;
            }
            if Instant::now() >= deadline {
                return false;
            }
            std::thread::sleep(Duration::from_micros(250));
        }
    }

    pub fn register_hook(&self, reg: HookRegistration) -> HookId {
        let id = HookId(self.inner.next_hook.fetch_add(1, Ordering::Relaxed));
        self.inner.hooks.write().expect("hooks").push((id, reg));
        id
    }

    pub fn remove_hook(&self, id: HookId) {
        self.inner.hooks.write().expect("hooks").retain(|(h, _)| *h != id);
    }

    pub fn register_function(
        &self,
        module: &str,
        function: &str,
        arity: u32,
        f: impl Fn(&[Value]) -> Result<Value, String> + Send + Sync + 'static,
    ) {
        self.inner.modules.write().expect("modules").insert((module.into(), function.into(), arity), Arc::new(f));
    }

    pub fn whereis(&self, name: &str) -> Option<Pid> {
        self.inner.names.lock().expect("names").get(name).copied()
    }

    /// Registers a name for an actor from outside the system. Naming an
    /// actor that has already exited does nothing.
    pub fn register(&self, name: &str, pid: Pid) -> Result<(), RuntimeError> {
        let cell = self.inner.actors.lock().expect("actors").get(&pid).cloned();
        let Some(cell) = cell else { return Ok(()) };
        let mut names = self.inner.names.lock().expect("names");
        if names.contains_key(name) {
            return Err(RuntimeError::NameTaken(name.to_string()));
        }
        let name: Arc<str> = Arc::from(name);
        names.insert(name.clone(), pid);
        *cell.name.lock().expect("name") = Some(name);
        Ok(())
    }

    pub fn is_alive(&self, pid: Pid) -> bool {
        self.inner.actors.lock().expect("actors").contains_key(&pid)
    }

    pub fn live_actors(&self) -> usize {
        self.inner.actors.lock().expect("actors").len()
    }

    pub fn mailbox_len(&self, pid: Pid) -> Option<usize> {
        self.inner.actors.lock().expect("actors").get(&pid).map(|c| c.mailbox.len())
    }

    pub fn now(&self) -> Duration {
        self.inner.sched.timers.now()
    }

    pub fn enable_audit(&self) {
        *self.inner.audit.lock().expect("audit") = Some(Vec::new());
    }

    pub fn audit_log(&self) -> Vec<AuditEntry> {
        self.inner.audit.lock().expect("audit").clone().unwrap_or_default()
    }

    /// Stops scheduling and drops every actor.
    pub fn shutdown(&self) {
        self.inner.sched.shutdown();
        let cells: Vec<_> = self.inner.actors.lock().expect("actors").drain().map(|(_, c)| c).collect();
        cells.iter().for_each(|c| c.mailbox.close());
        self.inner.names.lock().expect("names").clear();
    }
}

fn spawn_on<F, Fut>(rt: &Arc<RtInner>, f: F) -> Pid
where
    F: FnOnce(Ctx) -> Fut,
    Fut: Future<Output = ()> + Send + 'static,
{
    let pid = Pid(rt.next_pid.fetch_add(1, Ordering::Relaxed));
    let cell = Arc::new(ActorCell {
        pid,
        mailbox: Arc::new(Mailbox::default()),
        name: Mutex::new(None),
        seq: AtomicU64::new(0),
        nonces: Mutex::new(NonceSource::new(pid)),
    });
    rt.actors.lock().expect("actors").insert(pid, cell.clone());
    let ctx = Ctx { rt: rt.clone(), cell: cell.clone() };
    let fut = f(ctx);
    let weak = Arc::downgrade(rt);
    let on_exit = Box::new(move || {
        cell.mailbox.close();
        if let Some(rt) = weak.upgrade() {
            rt.actors.lock().expect("actors").remove(&pid);
            if let Some(name) = cell.name.lock().expect("name").take() {
                let mut names = rt.names.lock().expect("names");
                if names.get(&name) == Some(&pid) {
                    names.remove(&name);
                }
            }
        }
    });
    let task = Task::new(Box::pin(fut), &rt.sched, on_exit);
    rt.sched.spawn(task);
    pid
}

impl RtInner {
    fn resolve(&self, dest: &Dest) -> Option<Pid> {
        match dest {
            Dest::Pid(p) => Some(*p),
            Dest::Name(n) => self.names.lock().expect("names").get(n).copied(),
        }
    }

    fn deliver(&self, from: Pid, to: Pid, msg: Message) {
        if let Some(log) = self.audit.lock().expect("audit").as_mut() {
            log.push(AuditEntry { from, to, kind: msg.kind() });
        }
        let cell = self.actors.lock().expect("actors").get(&to).cloned();
        if let Some(cell) = cell {
            cell.mailbox.push(Envelope { from, msg });
        }
    }

    fn hooks_for(&self, kind: ActionKind, emitter: Pid) -> Vec<Arc<dyn Hook>> {
        let hooks = self.hooks.read().expect("hooks");
        hooks.iter().filter(|(_, r)| r.wants(kind, emitter)).map(|(_, r)| r.hook.clone()).collect()
    }
}

/// The executing actor's view of the runtime.
#[derive(Clone)]
pub struct Ctx {
    rt: Arc<RtInner>,
    cell: Arc<ActorCell>,
}

impl Ctx {
    pub fn pid(&self) -> Pid {
        self.cell.pid
    }

    pub fn name(&self) -> Option<Arc<str>> {
        self.cell.name.lock().expect("name").clone()
    }

    /// Registered name as an atom, else the pid.
    pub fn subject(&self) -> Value {
        match self.name() {
            Some(n) => Value::Atom(n),
            None => Value::Pid(self.pid()),
        }
    }

    pub fn register(&self, name: &str) -> Result<(), RuntimeError> {
        let mut names = self.rt.names.lock().expect("names");
        if names.contains_key(name) {
            return Err(RuntimeError::NameTaken(name.to_string()));
        }
        let name: Arc<str> = Arc::from(name);
        names.insert(name.clone(), self.pid());
        *self.cell.name.lock().expect("name") = Some(name);
        Ok(())
    }

    pub fn whereis(&self, name: &str) -> Option<Pid> {
        self.rt.names.lock().expect("names").get(name).copied()
    }

    pub fn is_alive(&self, pid: Pid) -> bool {
        self.rt.actors.lock().expect("actors").contains_key(&pid)
    }

    pub fn spawn<F, Fut>(&self, f: F) -> Pid
    where
        F: FnOnce(Ctx) -> Fut,
        Fut: Future<Output = ()> + Send + 'static,
    {
        spawn_on(&self.rt, f)
    }

    pub fn sleep(&self, dur: Duration) -> Sleep {
        Sleep::new(self.rt.sched.clone(), dur)
    }

    pub fn now(&self) -> Duration {
        self.rt.sched.timers.now()
    }

    pub fn fresh_nonce(&self) -> FreshNonce {
        self.cell.nonces.lock().expect("nonces").fresh()
    }

    /// Runs every hook interested in the action, in registration order.
    async fn emit(&self, action: ClosedAction) {
        let hooks = self.rt.hooks_for(action.kind(), self.pid());
        if hooks.is_empty() {
            return;
        }
        let seq = self.cell.seq.fetch_add(1, Ordering::Relaxed);
        let ev = EventInstance::new(action, self.pid(), seq);
        for h in hooks {
            h.on_event(self, &ev).await;
        }
    }

    /// Hooked asynchronous send. Output hooks run before the message is
    /// enqueued; sends to dead or unregistered destinations are dropped.
    pub async fn send(&self, to: impl Into<Dest>, v: Value) {
        let dest = to.into();
        self.emit(ClosedAction::output(dest.subject(), v.clone())).await;
        if let Some(pid) = self.rt.resolve(&dest) {
            self.rt.deliver(self.pid(), pid, Message::Data(v));
        }
    }

    /// Unhooked send of any message kind.
    pub fn send_message(&self, to: Pid, msg: Message) {
        self.rt.deliver(self.pid(), to, msg);
    }

    /// Selective receive over data messages: scans the mailbox in arrival
    /// order and, for each message, the clauses in order. The input hook
    /// fires once a clause is selected, before control returns.
    pub async fn receive(&self, clauses: &[ReceiveClause]) -> (usize, Substitution, Value) {
        let preds = PredicateTable::new();
        let clauses = clauses.to_vec();
        let (env, (idx, sigma)) = Recv {
            mailbox: self.cell.mailbox.clone(),
            select: move |e: &Envelope| {
                let Message::Data(v) = &e.msg else { return None };
                clauses.iter().enumerate().find_map(|(i, c)| {
                    let mut sigma = Substitution::new();
                    if !match_term(&c.pattern, v, &mut sigma) {
                        return None;
                    }
                    let ok = match &c.guard {
                        None => true,
                        Some(g) => eval_bool(g, &sigma, &preds).unwrap_or(false),
                    };
                    ok.then_some((i, sigma))
                })
            },
        }
        .await;
        let Message::Data(v) = env.msg else { unreachable!("selected a data message") };
        self.emit(ClosedAction::input(self.subject(), v.clone())).await;
        (idx, sigma, v)
    }

    /// Receives the next data message, whatever it is.
    pub async fn receive_any(&self) -> Value {
        self.receive(&[ReceiveClause::new(Term::Wild)]).await.2
    }

    /// Unhooked selective receive over any message kind.
    pub async fn receive_where(&self, mut pred: impl FnMut(&Message) -> bool + Send + Unpin) -> Message {
        let (env, ()) = Recv { mailbox: self.cell.mailbox.clone(), select: move |e: &Envelope| pred(&e.msg).then_some(()) }.await;
        env.msg
    }

    /// Like [`Ctx::receive_where`] but also reports the sender.
    pub async fn receive_from_where(&self, mut pred: impl FnMut(&Message) -> bool + Send + Unpin) -> (Pid, Message) {
        let (env, ()) = Recv { mailbox: self.cell.mailbox.clone(), select: move |e: &Envelope| pred(&e.msg).then_some(()) }.await;
        (env.from, env.msg)
    }

    /// Traced call of a registered function: the call hook fires before the
    /// invocation and the return hook after it.
    pub async fn call(&self, module: &str, function: &str, args: Vec<Value>) -> Result<Value, RuntimeError> {
        let arity = args.len() as u32;
        let f = self
            .rt
            .modules
            .read()
            .expect("modules")
            .get(&(module.to_string(), function.to_string(), arity))
            .cloned()
            .ok_or_else(|| RuntimeError::UnknownFunction { module: module.into(), function: function.into(), arity })?;
        self.emit(ClosedAction::call(self.subject(), module, function, args.clone())).await;
        let out = f(&args).map_err(RuntimeError::Function)?;
        self.emit(ClosedAction::ret(self.subject(), module, function, arity, out.clone())).await;
        Ok(out)
    }
}

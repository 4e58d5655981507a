use std::collections::VecDeque;
use std::future::Future;
use std::pin::Pin;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, Weak};
use std::task::{Context, Wake, Waker};
use std::thread::JoinHandle;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::timer::Timers;

pub type BoxFuture<'a, T> = Pin<Box<dyn Future<Output = T> + Send + 'a>>;

pub(crate) struct Task {
    future: Mutex<Option<BoxFuture<'static, ()>>>,
    scheduled: AtomicBool,
    sched: Weak<Scheduler>,
    on_exit: Mutex<Option<Box<dyn FnOnce() + Send>>>,
}

impl Task {
    pub(crate) fn new(future: BoxFuture<'static, ()>, sched: &Arc<Scheduler>, on_exit: Box<dyn FnOnce() + Send>) -> Arc<Task> {
        Arc::new(Task {
            future: Mutex::new(Some(future)),
            scheduled: AtomicBool::new(false),
            sched: Arc::downgrade(sched),
            on_exit: Mutex::new(Some(on_exit)),
        })
    }

    fn run(self: &Arc<Task>) {
        self.scheduled.store(false, Ordering::Release);
        let mut slot = self.future.lock().expect("task lock");
        let Some(fut) = slot.as_mut() else { return };
        let waker = Waker::from(self.clone());
        let mut cx = Context::from_waker(&waker);
        if fut.as_mut().poll(&mut cx).is_ready() {
            *slot = None;
            drop(slot);
            if let Some(exit) = self.on_exit.lock().expect("exit lock").take() {
                exit();
            }
        }
    }

    fn cancel(&self) {
        let fut = self.future.lock().map(|mut s| s.take()).ok().flatten();
        drop(fut);
    }
}

impl Wake for Task {
    fn wake(self: Arc<Self>) {
        self.wake_by_ref()
    }

    fn wake_by_ref(self: &Arc<Self>) {
        if !self.scheduled.swap(true, Ordering::AcqRel) {
            if let Some(s) = self.sched.upgrade() {
                s.push(self.clone());
            }
        }
    }
}

pub(crate) enum Order {
    Fifo,
    Seeded(Mutex<ChaCha8Rng>),
}

pub(crate) enum Mode {
    /// Single controlling thread; time is virtual.
    Deterministic { order: Order },
    Threaded,
}

pub(crate) struct Scheduler {
    pub(crate) mode: Mode,
    queue: Mutex<VecDeque<Arc<Task>>>,
    ready: Condvar,
    /// Workers parked on `ready`; only changed with `queue` held.
    parked: AtomicUsize,
    /// Tasks queued or being polled.
    busy: AtomicUsize,
    idle: Condvar,
    idle_lock: Mutex<()>,
    stop: AtomicBool,
    tasks: Mutex<Vec<Weak<Task>>>,
    pub(crate) timers: Timers,
    threads: Mutex<Vec<JoinHandle<()>>>,
}

impl Scheduler {
    pub(crate) fn deterministic(seed: Option<u64>) -> Arc<Scheduler> {
        let order = match seed {
            None => Order::Fifo,
            Some(s) => Order::Seeded(Mutex::new(ChaCha8Rng::seed_from_u64(s))),
        };
        Scheduler::build(Mode::Deterministic { order }, Timers::virtual_clock())
    }

    pub(crate) fn threaded(workers: usize) -> Arc<Scheduler> {
        let workers = workers.max(1);
        let s = Scheduler::build(Mode::Threaded, Timers::real_clock());
        let mut handles = Vec::new();
        for i in 0..workers {
            let me = s.clone();
            handles.push(
                std::thread::Builder::new()
                    .name(format!("actmon-worker-{i}"))
                    .spawn(move || me.worker_loop())
                    .expect("spawn worker thread"),
            );
        }
        let me = s.clone();
        handles.push(
            std::thread::Builder::new()
                .name("actmon-timer".into())
                .spawn(move || me.timers.run_real(&me.stop, || me.notify_idle()))
                .expect("spawn timer thread"),
        );
        *s.threads.lock().expect("threads") = handles;
        s
    }

    fn build(mode: Mode, timers: Timers) -> Arc<Scheduler> {
        Arc::new(Scheduler {
            mode,
            queue: Mutex::new(VecDeque::new()),
            ready: Condvar::new(),
            parked: AtomicUsize::new(0),
            busy: AtomicUsize::new(0),
            idle: Condvar::new(),
            idle_lock: Mutex::new(()),
            stop: AtomicBool::new(false),
            tasks: Mutex::new(Vec::new()),
            timers,
            threads: Mutex::new(Vec::new()),
        })
    }

    pub(crate) fn is_threaded(&self) -> bool {
        matches!(self.mode, Mode::Threaded)
    }

    pub(crate) fn spawn(self: &Arc<Self>, task: Arc<Task>) {
        let mut tasks = self.tasks.lock().expect("tasks");
        if tasks.len() > 64 && tasks.len().is_power_of_two() {
            tasks.retain(|t| t.strong_count() > 0);
        }
        tasks.push(Arc::downgrade(&task));
        drop(tasks);
        task.wake_by_ref();
    }

    fn push(&self, task: Arc<Task>) {
        if self.stop.load(Ordering::Acquire) {
            return;
        }
        self.busy.fetch_add(1, Ordering::AcqRel);
        let mut q = self.queue.lock().expect("queue");
        q.push_back(task);
        if self.parked.load(Ordering::Relaxed) > 0 {
            self.ready.notify_one();
        }
    }

    fn pop(&self) -> Option<Arc<Task>> {
        let mut q = self.queue.lock().expect("queue");
        match &self.mode {
            Mode::Deterministic { order: Order::Seeded(rng) } if q.len() > 1 => {
                let i = rng.lock().expect("rng").gen_range(0..q.len());
                q.swap(0, i);
                q.pop_front()
            }
            _ => q.pop_front(),
        }
    }

    fn finish_one(&self) {
        if self.busy.fetch_sub(1, Ordering::AcqRel) == 1 {
            self.notify_idle();
        }
    }

    fn notify_idle(&self) {
        let _g = self.idle_lock.lock().expect("idle lock");
        self.idle.notify_all();
    }

    fn worker_loop(&self) {
        loop {
            let task = {
                let mut q = self.queue.lock().expect("queue");
                loop {
                    if self.stop.load(Ordering::Acquire) {
                        return;
                    }
                    if let Some(t) = q.pop_front() {
                        break t;
                    }
                    self.parked.fetch_add(1, Ordering::Relaxed);
                    q = self.ready.wait(q).expect("queue wait");
                    self.parked.fetch_sub(1, Ordering::Relaxed);
                }
            };
            task.run();
            self.finish_one();
        }
    }

    /// Deterministic mode: runs until no task is ready and no timer is
    /// pending, advancing virtual time when only timers remain. Returns false
    /// if `limit` polls were exhausted.
    pub(crate) fn run_deterministic(&self, limit: Option<usize>) -> bool {
        let mut polls = 0usize;
        loop {
            while let Some(task) = self.pop() {
                task.run();
                self.finish_one();
                polls += 1;
                if limit.is_some_and(|l| polls >= l) {
                    return false;
                }
            }
            if !self.timers.advance_virtual() {
                return true;
            }
        }
    }

    /// Threaded mode: waits until no task is queued or running and no timer
    /// is pending, or until the timeout elapses.
    pub(crate) fn wait_quiescent(&self, timeout: Duration) -> bool {
        let deadline = std::time::Instant::now() + timeout;
        let mut g = self.idle_lock.lock().expect("idle lock");
        loop {
            if self.busy.load(Ordering::Acquire) == 0 && self.timers.pending() == 0 {
                // Re-check after a short pause: a timer may be firing.
                drop(g);
                std::thread::sleep(Duration::from_micros(200));
                if self.busy.load(Ordering::Acquire) == 0 && self.timers.pending() == 0 {
                    return true;
                }
                g = self.idle_lock.lock().expect("idle lock");
                continue;
            }
            let now = std::time::Instant::now();
            if now >= deadline {
                return false;
            }
            let wait = (deadline - now).min(Duration::from_millis(5));
            g = self.idle.wait_timeout(g, wait).expect("idle wait").0;
        }
    }

    pub(crate) fn shutdown(&self) {
        self.stop.store(true, Ordering::Release);
        {
            let _q = self.queue.lock().expect("queue");
            self.ready.notify_all();
        }
        self.timers.wake_thread();
        let handles: Vec<_> = std::mem::take(&mut *self.threads.lock().expect("threads"));
        let current = std::thread::current().id();
        for h in handles {
            if h.thread().id() != current {
                let _ = h.join();
            }
        }
        self.queue.lock().expect("queue").clear();
        let tasks: Vec<_> = std::mem::take(&mut *self.tasks.lock().expect("tasks"));
        for t in tasks.into_iter().filter_map(|t| t.upgrade()) {
            t.cancel();
        }
        self.timers.clear();
    }
}

use std::collections::BTreeMap;
use std::future::Future;
use std::pin::Pin;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::task::{Context, Poll, Waker};
use std::time::{Duration, Instant};

use super::executor::Scheduler;

pub(crate) struct TimerEntry {
    fired: AtomicBool,
    waker: Mutex<Option<Waker>>,
}

impl TimerEntry {
    fn fire(&self) {
        self.fired.store(true, Ordering::Release);
        if let Some(w) = self.waker.lock().expect("timer waker").take() {
            w.wake();
        }
    }
}

enum Clock {
    Virtual(Mutex<Duration>),
    Real(Instant),
}

type Key = (Duration, u64);

pub(crate) struct Timers {
    clock: Clock,
    heap: Mutex<BTreeMap<Key, Arc<TimerEntry>>>,
    next_id: AtomicU64,
    cv: Condvar,
}

impl Timers {
    pub(crate) fn virtual_clock() -> Timers {
        Timers::with(Clock::Virtual(Mutex::new(Duration::ZERO)))
    }

    pub(crate) fn real_clock() -> Timers {
        Timers::with(Clock::Real(Instant::now()))
    }

    fn with(clock: Clock) -> Timers {
        Timers { clock, heap: Mutex::new(BTreeMap::new()), next_id: AtomicU64::new(0), cv: Condvar::new() }
    }

    /// Time since the runtime started.
    pub(crate) fn now(&self) -> Duration {
        match &self.clock {
            Clock::Virtual(t) => *t.lock().expect("clock"),
            Clock::Real(start) => start.elapsed(),
        }
    }

    fn register(&self, deadline: Duration) -> (Key, Arc<TimerEntry>) {
        let key = (deadline, self.next_id.fetch_add(1, Ordering::Relaxed));
        let entry = Arc::new(TimerEntry { fired: AtomicBool::new(false), waker: Mutex::new(None) });
        self.heap.lock().expect("timers").insert(key, entry.clone());
        self.cv.notify_all();
        (key, entry)
    }

    fn cancel(&self, key: &Key) {
        self.heap.lock().expect("timers").remove(key);
    }

    pub(crate) fn pending(&self) -> usize {
        self.heap.lock().expect("timers").len()
    }

    /// Jumps virtual time to the earliest deadline and fires every timer
    /// due then. Returns false when no timer is pending.
    pub(crate) fn advance_virtual(&self) -> bool {
        let Clock::Virtual(now) = &self.clock else { return false };
        let due: Vec<Arc<TimerEntry>> = {
            let mut heap = self.heap.lock().expect("timers");
            let Some((&(deadline, _), _)) = heap.iter().next() else { return false };
            *now.lock().expect("clock") = deadline;
            let later = heap.split_off(&(deadline, u64::MAX));
            std::mem::replace(&mut *heap, later).into_values().collect()
        };
        due.iter().for_each(|e| e.fire());
        true
    }

    pub(crate) fn run_real(&self, stop: &AtomicBool, on_fire: impl Fn()) {
        let mut heap = self.heap.lock().expect("timers");
        loop {
            if stop.load(Ordering::Acquire) {
                return;
            }
            let now = self.now();
            match heap.iter().next().map(|(k, _)| *k) {
                None => heap = self.cv.wait(heap).expect("timer wait"),
                Some(key) if key.0 <= now => {
                    let entry = heap.remove(&key).expect("present");
                    drop(heap);
                    entry.fire();
                    on_fire();
                    heap = self.heap.lock().expect("timers");
                }
                Some(key) => heap = self.cv.wait_timeout(heap, key.0 - now).expect("timer wait").0,
            }
        }
    }

    pub(crate) fn wake_thread(&self) {
        let _g = self.heap.lock().expect("timers");
        self.cv.notify_all();
    }

    pub(crate) fn clear(&self) {
        self.heap.lock().expect("timers").clear();
    }
}

/// Completes once the runtime clock reaches the deadline.
pub struct Sleep {
    sched: Arc<Scheduler>,
    deadline: Duration,
    entry: Option<(Key, Arc<TimerEntry>)>,
}

impl Sleep {
    pub(crate) fn new(sched: Arc<Scheduler>, dur: Duration) -> Sleep {
        let deadline = sched.timers.now() + dur;
        Sleep { sched, deadline, entry: None }
    }
}

impl Future for Sleep {
    type Output = ();

    fn poll(mut self: Pin<&mut Self>, cx: &mut Context<'_>) -> Poll<()> {
        if self.entry.is_none() {
            if self.sched.timers.now() >= self.deadline {
                return Poll::Ready(());
            }
            let reg = self.sched.timers.register(self.deadline);
            self.entry = Some(reg);
        }
        let (_, entry) = self.entry.as_ref().expect("registered");
        *entry.waker.lock().expect("timer waker") = Some(cx.waker().clone());
        if entry.fired.load(Ordering::Acquire) {
            Poll::Ready(())
        } else {
            Poll::Pending
        }
    }
}

impl Drop for Sleep {
    fn drop(&mut self) {
        if let Some((key, entry)) = &self.entry {
            if !entry.fired.load(Ordering::Acquire) {
                self.sched.timers.cancel(key);
            }
        }
    }
}

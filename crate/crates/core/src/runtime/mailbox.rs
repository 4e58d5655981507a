use std::any::Any;
use std::collections::VecDeque;
use std::fmt;
use std::future::Future;
use std::pin::Pin;
use std::sync::{Arc, Mutex};
use std::task::{Context, Poll, Waker};

use crate::instrument::{FreshNonce, MonitorMessage};
use crate::logic::{Pid, Value};

pub enum Message {
    Data(Value),
    Ack(FreshNonce),
    Monitor(MonitorMessage),
    Control(Box<dyn Any + Send>),
}

impl Message {
    pub fn control<T: Any + Send>(t: T) -> Message {
        Message::Control(Box::new(t))
    }

    pub fn as_data(&self) -> Option<&Value> {
        match self {
            Message::Data(v) => Some(v),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::Data(_) => "data",
            Message::Ack(_) => "ack",
            Message::Monitor(_) => "monitor",
            Message::Control(_) => "control",
        }
    }
}

impl fmt::Debug for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Data(v) => write!(f, "Data({v})"),
            Message::Ack(n) => write!(f, "Ack({n:?})"),
            Message::Monitor(m) => write!(f, "Monitor({:?}, {:?})", m.event, m.nonce),
            Message::Control(_) => f.write_str("Control(..)"),
        }
    }
}

pub(crate) struct Envelope {
    pub from: Pid,
    pub msg: Message,
}

#[derive(Default)]
struct Inner {
    queue: VecDeque<Envelope>,
    waker: Option<Waker>,
    closed: bool,
}

/// Unbounded FIFO with selective, possibly out-of-order removal.
#[derive(Default)]
pub(crate) struct Mailbox {
    inner: Mutex<Inner>,
}

impl Mailbox {
    /// Returns false if the owner has exited.
    pub(crate) fn push(&self, env: Envelope) -> bool {
        let waker = {
            let mut g = self.inner.lock().expect("mailbox");
            if g.closed {
                return false;
            }
            g.queue.push_back(env);
            g.waker.take()
        };
        if let Some(w) = waker {
            w.wake();
        }
        true
    }

    pub(crate) fn close(&self) {
        let mut g = self.inner.lock().expect("mailbox");
        g.closed = true;
        g.queue.clear();
        g.waker = None;
    }

    pub(crate) fn len(&self) -> usize {
        self.inner.lock().expect("mailbox").queue.len()
    }

    /// Removes the first message, in arrival order, accepted by `select`.
    fn take_first<R>(&self, select: &mut impl FnMut(&Envelope) -> Option<R>, cx: &Context<'_>) -> Option<(Envelope, R)> {
        let mut g = self.inner.lock().expect("mailbox");
        let found = g.queue.iter().enumerate().find_map(|(i, e)| select(e).map(|r| (i, r)));
        match found {
            Some((i, r)) => Some((g.queue.remove(i).expect("index in range"), r)),
            None => {
                g.waker = Some(cx.waker().clone());
                None
            }
        }
    }
}

pub(crate) struct Recv<F> {
    pub mailbox: Arc<Mailbox>,
    pub select: F,
}

impl<R, F: FnMut(&Envelope) -> Option<R> + Unpin> Future for Recv<F> {
    type Output = (Envelope, R);

    fn poll(mut self: Pin<&mut Self>, cx: &mut Context<'_>) -> Poll<(Envelope, R)> {
        let this = &mut *self;
        match this.mailbox.take_first(&mut this.select, cx) {
            Some(r) => Poll::Ready(r),
            None => Poll::Pending,
        }
    }
}

use std::fmt;

use crate::logic::Pid;

/// A fresh handshake token: the emitting actor and its private counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreshNonce {
    pub pid: Pid,
    pub counter: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Nonce {
    /// No acknowledgement expected.
    Null,
    Fresh(FreshNonce),
}

impl Nonce {
    pub fn is_fresh(&self) -> bool {
        matches!(self, Nonce::Fresh(_))
    }

    pub fn fresh(&self) -> Option<FreshNonce> {
        match self {
            Nonce::Fresh(n) => Some(*n),
            Nonce::Null => None,
        }
    }
}

impl fmt::Display for Nonce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonce::Null => f.write_str("null"),
            Nonce::Fresh(n) => write!(f, "{} {}", n.pid, n.counter),
        }
    }
}

/// Per-actor generator of fresh nonces.
#[derive(Debug)]
pub struct NonceSource {
    pid: Pid,
    next: u64,
}

impl NonceSource {
    pub fn new(pid: Pid) -> Self {
        NonceSource { pid, next: 0 }
    }

    pub fn fresh(&mut self) -> FreshNonce {
        let n = FreshNonce { pid: self.pid, counter: self.next };
        self.next += 1;
        n
    }
}

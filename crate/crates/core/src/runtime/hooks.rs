use std::collections::HashSet;
use std::sync::Arc;

use super::executor::BoxFuture;
use super::Ctx;
use crate::logic::{ActionKind, EventInstance, Pid};

/// Interposition point run inside the emitting actor.
///
/// The returned future is awaited before the actor continues, so a hook may
/// block the actor (for instance until a monitor acknowledges the event).
pub trait Hook: Send + Sync {
    fn on_event<'a>(&'a self, ctx: &'a Ctx, event: &'a EventInstance) -> BoxFuture<'a, ()>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubjectFilter {
    All,
    /// Only events emitted by these actors.
    Pids(HashSet<Pid>),
}

impl SubjectFilter {
    pub fn admits(&self, pid: Pid) -> bool {
        match self {
            SubjectFilter::All => true,
            SubjectFilter::Pids(set) => set.contains(&pid),
        }
    }
}

#[derive(Clone)]
pub struct HookRegistration {
    pub kinds: Vec<ActionKind>,
    pub subjects: SubjectFilter,
    pub hook: Arc<dyn Hook>,
}

impl HookRegistration {
    pub fn all(hook: Arc<dyn Hook>) -> Self {
        HookRegistration { kinds: ActionKind::ALL.to_vec(), subjects: SubjectFilter::All, hook }
    }

    pub(crate) fn wants(&self, kind: ActionKind, emitter: Pid) -> bool {
        self.kinds.contains(&kind) && self.subjects.admits(emitter)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HookId(pub(crate) u64);

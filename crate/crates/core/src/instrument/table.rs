use std::collections::{BTreeSet, HashMap};

use crate::logic::{action_matches, ActionPattern, ClosedAction, Formula, Pid};

#[derive(Clone, Debug)]
struct Node {
    pattern: ActionPattern,
    sync: bool,
    next: Vec<usize>,
}

/// Compile-time table of the necessities of a marked formula, used to decide
/// per event whether hybrid instrumentation must synchronise.
///
/// Each necessity is a node; `next` lists the necessities its continuation
/// waits on. The predictor tracks, per emitting actor, the nodes its next
/// event can be at, so that only events at synchronous positions block.
#[derive(Clone, Debug)]
pub struct SyncTable {
    nodes: Vec<Node>,
    roots: Vec<usize>,
}

type Scope<'a> = Vec<(&'a str, &'a Formula)>;

impl SyncTable {
    pub fn new(marked: &Formula) -> SyncTable {
        let mut nodes = Vec::new();
        let mut ids = HashMap::new();
        number(marked, &mut nodes, &mut ids);
        let mut t = SyncTable { nodes, roots: Vec::new() };
        let mut roots = BTreeSet::new();
        first(marked, &Vec::new(), &ids, &mut roots, 0);
        t.roots = roots.into_iter().collect();
        link(marked, &Vec::new(), &ids, &mut t.nodes);
        t
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Generalised patterns of every necessity: the events worth reporting.
    pub fn patterns(&self) -> impl Iterator<Item = &ActionPattern> {
        self.nodes.iter().map(|n| &n.pattern)
    }

    pub fn has_sync(&self) -> bool {
        self.nodes.iter().any(|n| n.sync)
    }

    pub fn reportable(&self, event: &ClosedAction) -> bool {
        self.nodes.iter().any(|n| action_matches(&n.pattern, event))
    }

    /// Is any necessity matching the event synchronous, regardless of position?
    pub fn any_sync(&self, event: &ClosedAction) -> bool {
        self.nodes.iter().any(|n| n.sync && action_matches(&n.pattern, event))
    }
}

fn number(f: &Formula, nodes: &mut Vec<Node>, ids: &mut HashMap<*const Formula, usize>) {
    match f {
        Formula::FF | Formula::SFF | Formula::Var(_) => {}
        Formula::And(a, b) => {
            number(a, nodes, ids);
            number(b, nodes, ids);
        }
        Formula::Guard(_, b) | Formula::Max(_, b) => number(b, nodes, ids),
        Formula::Nec(p, b) | Formula::SyncNec(p, b) => {
            ids.insert(f as *const Formula, nodes.len());
            nodes.push(Node { pattern: p.generalize(), sync: matches!(f, Formula::SyncNec(..)), next: Vec::new() });
            number(b, nodes, ids);
        }
    }
}

/// Necessities `f` waits on first, unfolding fixpoint variables through `scope`.
fn first<'a>(f: &'a Formula, scope: &Scope<'a>, ids: &HashMap<*const Formula, usize>, out: &mut BTreeSet<usize>, depth: usize) {
    if depth > 64 {
        return;
    }
    match f {
        Formula::FF | Formula::SFF => {}
        Formula::And(a, b) => {
            first(a, scope, ids, out, depth);
            first(b, scope, ids, out, depth);
        }
        Formula::Guard(_, b) => first(b, scope, ids, out, depth),
        Formula::Max(x, b) => {
            let mut inner = scope.clone();
            inner.push((x, f));
            first(b, &inner, ids, out, depth);
        }
        Formula::Var(x) => {
            if let Some(pos) = scope.iter().rposition(|(n, _)| n == x) {
                let (_, def) = scope[pos];
                first(def, &scope[..pos].to_vec(), ids, out, depth + 1);
            }
        }
        Formula::Nec(..) | Formula::SyncNec(..) => {
            out.insert(ids[&(f as *const Formula)]);
        }
    }
}

fn link<'a>(f: &'a Formula, scope: &Scope<'a>, ids: &HashMap<*const Formula, usize>, nodes: &mut [Node]) {
    match f {
        Formula::FF | Formula::SFF | Formula::Var(_) => {}
        Formula::And(a, b) => {
            link(a, scope, ids, nodes);
            link(b, scope, ids, nodes);
        }
        Formula::Guard(_, b) => link(b, scope, ids, nodes),
        Formula::Max(x, b) => {
            let mut inner = scope.clone();
            inner.push((x, f));
            link(b, &inner, ids, nodes);
        }
        Formula::Nec(_, b) | Formula::SyncNec(_, b) => {
            let mut next = BTreeSet::new();
            first(b, scope, ids, &mut next, 0);
            nodes[ids[&(f as *const Formula)]].next = next.into_iter().collect();
            link(b, scope, ids, nodes);
        }
    }
}

/// Per-actor position tracking over a [`SyncTable`].
#[derive(Debug, Default)]
pub struct Predictor {
    at: HashMap<Pid, Vec<usize>>,
}

impl Predictor {
    /// Decides whether `event` from `emitter` is synchronous and advances the
    /// emitter's position. An event matching none of the expected nodes falls
    /// back to every node matching it.
    pub fn step(&mut self, table: &SyncTable, emitter: Pid, event: &ClosedAction) -> bool {
        let expected = self.at.get(&emitter).map(Vec::as_slice).unwrap_or(&[]);
        let hits = |cands: &mut dyn Iterator<Item = usize>| -> Vec<usize> {
            cands.filter(|&i| action_matches(&table.nodes[i].pattern, event)).collect()
        };
        let mut matched = hits(&mut expected.iter().chain(&table.roots).copied());
        if matched.is_empty() {
            matched = hits(&mut (0..table.nodes.len()));
        }
        let sync = matched.iter().any(|&i| table.nodes[i].sync);
        let mut next: BTreeSet<usize> = BTreeSet::new();
        for &i in &matched {
            next.extend(&table.nodes[i].next);
        }
        self.at.insert(emitter, next.into_iter().collect());
        sync
    }
}

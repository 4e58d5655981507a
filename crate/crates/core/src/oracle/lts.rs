use std::collections::{BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::logic::ClosedAction;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Tau,
    Act(ClosedAction),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => f.write_str("tau"),
            Label::Act(a) => write!(f, "{a}"),
        }
    }
}

/// A set of states of one LTS.
#[derive(Clone, Default)]
pub struct StateSet(FixedBitSet);

impl StateSet {
    pub fn new() -> Self {
        StateSet::default()
    }

    /// Every state of an LTS with `n` states.
    pub fn full(n: usize) -> Self {
        let mut b = FixedBitSet::with_capacity(n);
        b.insert_range(..);
        StateSet(b)
    }

    /// Returns true if `s` was not present.
    pub fn insert(&mut self, s: usize) -> bool {
        self.0.grow(s + 1);
        !self.0.put(s)
    }

    pub fn contains(&self, s: usize) -> bool {
        self.0.contains(s)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn intersect_with(&mut self, other: &StateSet) {
        self.0.intersect_with(&other.0)
    }

    pub fn union_with(&mut self, other: &StateSet) {
        self.0.union_with(&other.0)
    }
}

impl PartialEq for StateSet {
    fn eq(&self, other: &Self) -> bool {
        self.is_subset(other) && other.is_subset(self)
    }
}

impl Eq for StateSet {}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for StateSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = StateSet::new();
        s.extend(iter);
        s
    }
}

impl Extend<usize> for StateSet {
    fn extend<I: IntoIterator<Item = usize>>(&mut self, iter: I) {
        for x in iter {
            self.insert(x);
        }
    }
}

impl<const N: usize> From<[usize; N]> for StateSet {
    fn from(items: [usize; N]) -> Self {
        items.into_iter().collect()
    }
}

/// A finite labelled transition system with named states.
#[derive(Clone, Debug, Default)]
pub struct FiniteLts {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, Label, usize)>,
    /// Indices into `edges`, per source state.
    out: Vec<Vec<usize>>,
}

impl FiniteLts {
    pub fn new() -> Self {
        FiniteLts::default()
    }

    /// Adds a state, returning its index; adding an existing name is a no-op.
    pub fn add_state(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        self.out.push(Vec::new());
        i
    }

    pub fn add_edge(&mut self, from: usize, label: Label, to: usize) {
        assert!(from < self.names.len() && to < self.names.len(), "edge endpoint out of range");
        self.out[from].push(self.edges.len());
        self.edges.push((from, label, to));
    }

    pub fn state(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, state: usize) -> &str {
        &self.names[state]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn all_states(&self) -> StateSet {
        StateSet::full(self.names.len())
    }

    pub fn edges(&self) -> &[(usize, Label, usize)] {
        &self.edges
    }

    fn successors(&self, s: usize) -> impl Iterator<Item = (&Label, usize)> {
        self.out[s].iter().map(|&e| (&self.edges[e].1, self.edges[e].2))
    }

    /// States reachable from `from` through tau steps, sorted.
    pub fn tau_closure(&self, from: &[usize]) -> Vec<usize> {
        let mut seen: BTreeSet<usize> = from.iter().copied().collect();
        let mut stack: Vec<usize> = seen.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for (label, dst) in self.successors(s) {
                if *label == Label::Tau && seen.insert(dst) {
                    stack.push(dst);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// States `q` with `from (tau)* a (tau)* q`, sorted.
    pub fn weak_step(&self, from: usize, a: &ClosedAction) -> Vec<usize> {
        let mut after = Vec::new();
        for s in self.tau_closure(&[from]) {
            after.extend(self.successors(s).filter(|(l, _)| matches!(l, Label::Act(b) if b == a)).map(|(_, d)| d));
        }
        self.tau_closure(&after)
    }

    /// Every visible action with the states weakly reachable through it.
    pub fn weak_transitions(&self, from: usize) -> Vec<(ClosedAction, Vec<usize>)> {
        let mut by_label: Vec<(ClosedAction, Vec<usize>)> = Vec::new();
        for s in self.tau_closure(&[from]) {
            for (label, dst) in self.successors(s) {
                let Label::Act(a) = label else { continue };
                match by_label.iter_mut().find(|(b, _)| b == a) {
                    Some((_, set)) => set.push(dst),
                    None => by_label.push((a.clone(), vec![dst])),
                }
            }
        }
        by_label.into_iter().map(|(a, set)| (a, self.tau_closure(&set))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Value;

    fn x() -> ClosedAction {
        ClosedAction::output(Value::atom("p"), Value::atom("x"))
    }

    #[test]
    fn tau_then_action_then_tau() {
        let mut l = FiniteLts::new();
        let [a, b, c, d] = ["a", "b", "c", "d"].map(|n| l.add_state(n));
        l.add_edge(a, Label::Tau, b);
        l.add_edge(b, Label::Act(x()), c);
        l.add_edge(c, Label::Tau, d);
        assert_eq!(l.weak_step(a, &x()), vec![c, d]);
        assert!(l.weak_step(c, &x()).is_empty());
    }

    #[test]
    fn tau_cycles_terminate() {
        let mut l = FiniteLts::new();
        let [a, b, c] = ["a", "b", "c"].map(|n| l.add_state(n));
        l.add_edge(a, Label::Tau, b);
        l.add_edge(b, Label::Tau, a);
        l.add_edge(b, Label::Act(x()), c);
        l.add_edge(c, Label::Tau, c);
        assert_eq!(l.weak_step(a, &x()), vec![c]);
        assert_eq!(l.weak_transitions(a), vec![(x(), vec![c])]);
    }
}

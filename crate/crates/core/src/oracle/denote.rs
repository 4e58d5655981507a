use std::collections::HashMap;

use super::lts::{FiniteLts, StateSet};
use super::OracleError;
use crate::logic::{eval_bool, match_action, ClosedAction, Formula, PredicateTable, Substitution};

pub type Env = HashMap<String, StateSet>;

/// Evaluates formulas over one LTS, caching weak transitions per state.
pub struct Denoter<'a> {
    lts: &'a FiniteLts,
    preds: &'a PredicateTable,
    actions: Vec<ClosedAction>,
    /// Weak transitions of state `s` are `steps[first[s]..first[s + 1]]`.
    first: Vec<usize>,
    /// Interned action and the range of its targets in `targets`.
    steps: Vec<(u32, u32, u32)>,
    targets: Vec<u32>,
    /// Largest number of body evaluations any fixpoint needed.
    pub max_iterations: usize,
}

impl<'a> Denoter<'a> {
    pub fn new(lts: &'a FiniteLts, preds: &'a PredicateTable) -> Self {
        let mut actions = Vec::new();
        let mut ids: HashMap<ClosedAction, u32> = HashMap::new();
        let (mut first, mut steps, mut targets) = (vec![0], Vec::new(), Vec::new());
        for s in 0..lts.len() {
            for (a, ts) in lts.weak_transitions(s) {
                let id = *ids.entry(a.clone()).or_insert_with(|| {
                    actions.push(a);
                    (actions.len() - 1) as u32
                });
                let lo = targets.len() as u32;
                targets.extend(ts.into_iter().map(|t| t as u32));
                steps.push((id, lo, targets.len() as u32));
            }
            first.push(steps.len());
        }
        Denoter { lts, preds, actions, first, steps, targets, max_iterations: 0 }
    }

    pub fn denote(&mut self, f: &Formula, env: &Env) -> Result<StateSet, OracleError> {
        Ok(match f {
            Formula::FF | Formula::SFF => StateSet::new(),
            Formula::And(a, b) => {
                let mut l = self.denote(a, env)?;
                if l.is_empty() {
                    return Ok(l);
                }
                let r = self.denote(b, env)?;
                l.intersect_with(&r);
                l
            }
            Formula::Guard(b, body) => {
                if eval_bool(b, &Substitution::new(), self.preds)? {
                    self.denote(body, env)?
                } else {
                    self.lts.all_states()
                }
            }
            Formula::Var(x) => env.get(x).cloned().ok_or_else(|| OracleError::UnboundFormulaVar(x.clone()))?,
            Formula::Max(x, body) => {
                let mut current = self.lts.all_states();
                let mut inner = env.clone();
                let mut iterations = 0;
                loop {
                    iterations += 1;
                    inner.insert(x.clone(), current.clone());
                    let next = self.denote(body, &inner)?;
                    if next == current {
                        break;
                    }
                    current = next;
                }
                self.max_iterations = self.max_iterations.max(iterations);
                current
            }
            Formula::Nec(p, body) | Formula::SyncNec(p, body) => {
                // Per interned action: None if the pattern does not match it.
                let mut by_sigma: HashMap<Substitution, usize> = HashMap::new();
                let mut goods: Vec<StateSet> = Vec::new();
                let mut matched: Vec<Option<usize>> = Vec::with_capacity(self.actions.len());
                for i in 0..self.actions.len() {
                    let slot = match match_action(p, &self.actions[i])? {
                        None => None,
                        Some(sigma) => Some(match by_sigma.get(&sigma) {
                            Some(&g) => g,
                            None => {
                                let g = self.denote(&body.apply_substitution(&sigma), env)?;
                                goods.push(g);
                                by_sigma.insert(sigma, goods.len() - 1);
                                goods.len() - 1
                            }
                        }),
                    };
                    matched.push(slot);
                }
                let mut out = StateSet::new();
                for s in 0..self.lts.len() {
                    let ok = self.steps[self.first[s]..self.first[s + 1]].iter().all(|&(a, lo, hi)| match matched[a as usize] {
                        None => true,
                        Some(g) => self.targets[lo as usize..hi as usize].iter().all(|&t| goods[g].contains(t as usize)),
                    });
                    if ok {
                        out.insert(s);
                    }
                }
                out
            }
        })
    }
}

pub fn denote(f: &Formula, lts: &FiniteLts, env: &Env, preds: &PredicateTable) -> Result<StateSet, OracleError> {
    Denoter::new(lts, preds).denote(f, env)
}

pub fn satisfies(lts: &FiniteLts, state: usize, f: &Formula, preds: &PredicateTable) -> Result<bool, OracleError> {
    Ok(denote(f, lts, &Env::new(), preds)?.contains(state))
}

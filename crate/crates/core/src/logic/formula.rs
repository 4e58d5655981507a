use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use super::action::ActionPattern;
use super::boolexpr::BoolExpr;
use super::matching::Substitution;
use super::value::Term;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    FF,
    /// Synchronous falsity; removed by [`Formula::mark_synchronous`].
    SFF,
    And(Box<Formula>, Box<Formula>),
    Nec(ActionPattern, Box<Formula>),
    SyncNec(ActionPattern, Box<Formula>),
    Max(String, Box<Formula>),
    Guard(BoolExpr, Box<Formula>),
    Var(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WellFormedError {
    #[error("term variable {0} is not bound")]
    UnboundTermVar(String),
    #[error("formula variable {0} is not bound")]
    UnboundFormulaVar(String),
    #[error("formula variable {0} is not guarded by a necessity")]
    UnguardedFormulaVar(String),
    #[error("variable {0} is bound twice in one pattern")]
    NonLinear(String),
    #[error("wildcard used inside a guard")]
    WildcardInGuard,
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn nec(p: ActionPattern, f: Formula) -> Formula {
        Formula::Nec(p, Box::new(f))
    }

    pub fn sync_nec(p: ActionPattern, f: Formula) -> Formula {
        Formula::SyncNec(p, Box::new(f))
    }

    pub fn max(x: &str, f: Formula) -> Formula {
        Formula::Max(x.to_string(), Box::new(f))
    }

    pub fn guard(b: BoolExpr, f: Formula) -> Formula {
        Formula::Guard(b, Box::new(f))
    }

    pub fn var(x: &str) -> Formula {
        Formula::Var(x.to_string())
    }

    /// Nesting depth; leaves have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::FF | Formula::SFF | Formula::Var(_) => 0,
            Formula::And(a, b) => 1 + a.depth().max(b.depth()),
            Formula::Nec(_, f) | Formula::SyncNec(_, f) | Formula::Max(_, f) | Formula::Guard(_, f) => 1 + f.depth(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::FF | Formula::SFF | Formula::Var(_) => 1,
            Formula::And(a, b) => 1 + a.size() + b.size(),
            Formula::Nec(_, f) | Formula::SyncNec(_, f) | Formula::Max(_, f) | Formula::Guard(_, f) => 1 + f.size(),
        }
    }

    pub fn contains_sff(&self) -> bool {
        match self {
            Formula::SFF => true,
            Formula::FF | Formula::Var(_) => false,
            Formula::And(a, b) => a.contains_sff() || b.contains_sff(),
            Formula::Nec(_, f) | Formula::SyncNec(_, f) | Formula::Max(_, f) | Formula::Guard(_, f) => f.contains_sff(),
        }
    }

    /// Every necessity pattern with its synchronous flag, in pre-order.
    pub fn necessities(&self) -> Vec<(&ActionPattern, bool)> {
        let mut out = Vec::new();
        self.collect_necessities(&mut out);
        out
    }

    fn collect_necessities<'a>(&'a self, out: &mut Vec<(&'a ActionPattern, bool)>) {
        match self {
            Formula::FF | Formula::SFF | Formula::Var(_) => {}
            Formula::And(a, b) => {
                a.collect_necessities(out);
                b.collect_necessities(out);
            }
            Formula::Nec(p, f) => {
                out.push((p, false));
                f.collect_necessities(out);
            }
            Formula::SyncNec(p, f) => {
                out.push((p, true));
                f.collect_necessities(out);
            }
            Formula::Max(_, f) | Formula::Guard(_, f) => f.collect_necessities(out),
        }
    }

    /// Replaces every occurrence of a variable in `dom(sigma)`.
    ///
    /// Binder names are assumed distinct from the names in `sigma`, which
    /// holds for alpha-renamed formulas unfolded through an environment.
    pub fn apply_substitution(&self, sigma: &Substitution) -> Formula {
        if sigma.is_empty() {
            return self.clone();
        }
        match self {
            Formula::FF | Formula::SFF | Formula::Var(_) => self.clone(),
            Formula::And(a, b) => Formula::and(a.apply_substitution(sigma), b.apply_substitution(sigma)),
            Formula::Nec(p, f) => Formula::nec(sigma.apply_pattern(p), f.apply_substitution(sigma)),
            Formula::SyncNec(p, f) => Formula::sync_nec(sigma.apply_pattern(p), f.apply_substitution(sigma)),
            Formula::Max(x, f) => Formula::max(x, f.apply_substitution(sigma)),
            Formula::Guard(b, f) => Formula::guard(b.substitute(sigma), f.apply_substitution(sigma)),
        }
    }

    /// Checks that every variable is bound and every formula variable guarded.
    ///
    /// A pattern variable already bound by an enclosing necessity refers to
    /// that binding; otherwise the pattern binds it.
    pub fn check_well_formed(&self) -> Result<(), WellFormedError> {
        fn go(
            f: &Formula,
            terms: &mut Vec<String>,
            fvars: &mut Vec<(String, bool)>,
        ) -> Result<(), WellFormedError> {
            match f {
                Formula::FF | Formula::SFF => Ok(()),
                Formula::Var(x) => match fvars.iter().rev().find(|(n, _)| n == x) {
                    None => Err(WellFormedError::UnboundFormulaVar(x.clone())),
                    Some((_, false)) => Err(WellFormedError::UnguardedFormulaVar(x.clone())),
                    Some(_) => Ok(()),
                },
                Formula::And(a, b) => {
                    go(a, terms, fvars)?;
                    go(b, terms, fvars)
                }
                Formula::Nec(p, body) | Formula::SyncNec(p, body) => {
                    let binders = pattern_binders(p, |v| terms.iter().any(|t| t == v))?;
                    let mark = terms.len();
                    terms.extend(binders);
                    let saved: Vec<bool> = fvars.iter().map(|(_, g)| *g).collect();
                    fvars.iter_mut().for_each(|(_, g)| *g = true);
                    let r = go(body, terms, fvars);
                    fvars.iter_mut().zip(saved).for_each(|((_, g), s)| *g = s);
                    terms.truncate(mark);
                    r
                }
                Formula::Max(x, body) => {
                    fvars.push((x.clone(), false));
                    let r = go(body, terms, fvars);
                    fvars.pop();
                    r
                }
                Formula::Guard(b, body) => {
                    if b.has_wildcard() {
                        return Err(WellFormedError::WildcardInGuard);
                    }
                    if let Some(v) = b.vars().into_iter().find(|v| !terms.iter().any(|t| t == v)) {
                        return Err(WellFormedError::UnboundTermVar(v.to_string()));
                    }
                    go(body, terms, fvars)
                }
            }
        }
        go(self, &mut Vec::new(), &mut Vec::new())
    }

    /// Gives every binder a distinct name, per namespace.
    ///
    /// The first binder of a name keeps it; later ones get a numeric suffix
    /// not occurring anywhere in the formula.
    pub fn alpha_rename(&self) -> Formula {
        let mut taken = BTreeSet::new();
        self.all_names(&mut taken);
        let mut r = Renamer { taken, used: HashSet::new(), fresh: Box::new(fresh_suffix), always_fresh: false };
        r.rename(self, &HashMap::new(), &HashMap::new())
    }

    /// Alpha-normal form: binders renamed by order of occurrence.
    pub fn canonical(&self) -> Formula {
        let mut counter = 0usize;
        let mut r = Renamer {
            taken: BTreeSet::new(),
            used: HashSet::new(),
            fresh: Box::new(move |_: &str, _: &BTreeSet<String>, _: &HashSet<String>| {
                counter += 1;
                format!("#{counter}")
            }),
            always_fresh: true,
        };
        r.rename(self, &HashMap::new(), &HashMap::new())
    }

    pub fn alpha_eq(&self, other: &Formula) -> bool {
        self.canonical() == other.canonical()
    }

    fn all_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::FF | Formula::SFF => {}
            Formula::Var(x) => {
                out.insert(x.clone());
            }
            Formula::And(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            Formula::Nec(p, f) | Formula::SyncNec(p, f) => {
                for t in p.terms() {
                    t.all_var_names(out);
                }
                f.all_names(out);
            }
            Formula::Max(x, f) => {
                out.insert(x.clone());
                f.all_names(out);
            }
            Formula::Guard(b, f) => {
                for v in b.vars() {
                    out.insert(v.to_string());
                }
                f.all_names(out);
            }
        }
    }

    /// Rewrites necessities that lead directly to `sff` into synchronous
    /// necessities and replaces every `sff` by `ff`.
    ///
    /// "Directly" means through conjunctions, guards, fixpoint binders and
    /// unfoldings of fixpoints whose body itself reaches `sff` directly, but
    /// never past another necessity.
    pub fn mark_synchronous(&self) -> Formula {
        mark(self, &mut Vec::new()).0
    }
}

/// Binders introduced by a pattern, rejecting repeated new binders.
pub(crate) fn pattern_binders(
    p: &ActionPattern,
    is_bound: impl Fn(&str) -> bool,
) -> Result<Vec<String>, WellFormedError> {
    let mut out: Vec<String> = Vec::new();
    for v in p.vars() {
        if is_bound(v) {
            continue;
        }
        if out.iter().any(|o| o == v) {
            return Err(WellFormedError::NonLinear(v.to_string()));
        }
        out.push(v.to_string());
    }
    Ok(out)
}

fn fresh_suffix(name: &str, taken: &BTreeSet<String>, used: &HashSet<String>) -> String {
    (1..)
        .map(|n| format!("{name}{n}"))
        .find(|c| !taken.contains(c) && !used.contains(c))
        .expect("unbounded supply of names")
}

type Fresh<'a> = Box<dyn FnMut(&str, &BTreeSet<String>, &HashSet<String>) -> String + 'a>;

struct Renamer<'a> {
    taken: BTreeSet<String>,
    used: HashSet<String>,
    fresh: Fresh<'a>,
    always_fresh: bool,
}

impl Renamer<'_> {
    fn bind(&mut self, name: &str) -> String {
        let new = if self.always_fresh || self.used.contains(name) {
            (self.fresh)(name, &self.taken, &self.used)
        } else {
            name.to_string()
        };
        self.used.insert(new.clone());
        new
    }

    fn rename(&mut self, f: &Formula, terms: &HashMap<String, String>, fvars: &HashMap<String, String>) -> Formula {
        match f {
            Formula::FF => Formula::FF,
            Formula::SFF => Formula::SFF,
            Formula::Var(x) => Formula::Var(fvars.get(x).cloned().unwrap_or_else(|| x.clone())),
            Formula::And(a, b) => Formula::and(self.rename(a, terms, fvars), self.rename(b, terms, fvars)),
            Formula::Nec(p, body) | Formula::SyncNec(p, body) => {
                let mut inner = terms.clone();
                let mut fresh_here: HashMap<String, String> = HashMap::new();
                for v in p.vars() {
                    if terms.contains_key(v) || fresh_here.contains_key(v) {
                        continue;
                    }
                    let n = self.bind(v);
                    fresh_here.insert(v.to_string(), n);
                }
                let p2 = p.map(|t| {
                    t.rename_vars(&mut |v: &str| {
                        fresh_here.get(v).or_else(|| terms.get(v)).cloned().unwrap_or_else(|| v.to_string())
                    })
                });
                inner.extend(fresh_here);
                let body = Box::new(self.rename(body, &inner, fvars));
                match f {
                    Formula::Nec(..) => Formula::Nec(p2, body),
                    _ => Formula::SyncNec(p2, body),
                }
            }
            Formula::Max(x, body) => {
                let n = self.bind(x);
                let mut inner = fvars.clone();
                inner.insert(x.clone(), n.clone());
                Formula::Max(n, Box::new(self.rename(body, terms, &inner)))
            }
            Formula::Guard(b, body) => {
                let b2 = b.map_terms(&mut |t: &Term| t.rename_vars(&mut |v: &str| terms.get(v).cloned().unwrap_or_else(|| v.to_string())));
                Formula::guard(b2, self.rename(body, terms, fvars))
            }
        }
    }
}

/// Strips `sff` below a necessity; the flag reports whether one was reached.
fn strip(f: &Formula, reach: &mut Vec<(String, bool)>) -> (Formula, bool) {
    match f {
        Formula::SFF => (Formula::FF, true),
        Formula::FF => (Formula::FF, false),
        Formula::Var(x) => {
            let hit = reach.iter().rev().find(|(n, _)| n == x).is_some_and(|(_, r)| *r);
            (f.clone(), hit)
        }
        Formula::And(a, b) => {
            let (a2, ha) = strip(a, reach);
            let (b2, hb) = strip(b, reach);
            (Formula::and(a2, b2), ha || hb)
        }
        Formula::Guard(b, body) => {
            let (body2, h) = strip(body, reach);
            (Formula::guard(b.clone(), body2), h)
        }
        Formula::Max(x, body) => {
            reach.push((x.clone(), false));
            let direct = reaches_sff(body, reach);
            reach.last_mut().expect("pushed").1 = direct;
            let (body2, h) = strip(body, reach);
            reach.pop();
            (Formula::max(x, body2), h)
        }
        Formula::Nec(..) | Formula::SyncNec(..) => (mark(f, reach).0, false),
    }
}

fn reaches_sff(f: &Formula, reach: &[(String, bool)]) -> bool {
    match f {
        Formula::SFF => true,
        Formula::FF | Formula::Nec(..) | Formula::SyncNec(..) => false,
        Formula::Var(x) => reach.iter().rev().find(|(n, _)| n == x).is_some_and(|(_, r)| *r),
        Formula::And(a, b) => reaches_sff(a, reach) || reaches_sff(b, reach),
        Formula::Guard(_, body) | Formula::Max(_, body) => reaches_sff(body, reach),
    }
}

fn mark(f: &Formula, reach: &mut Vec<(String, bool)>) -> (Formula, bool) {
    match f {
        Formula::Nec(p, body) => {
            let (body2, hit) = strip(body, reach);
            let out = if hit { Formula::sync_nec(p.clone(), body2) } else { Formula::nec(p.clone(), body2) };
            (out, false)
        }
        Formula::SyncNec(p, body) => (Formula::sync_nec(p.clone(), strip(body, reach).0), false),
        other => strip(other, reach),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::pretty(self))
    }
}

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::matching::Substitution;
use super::value::{Term, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Arith {
    Term(Term),
    Add(Box<Arith>, Box<Arith>),
    Sub(Box<Arith>, Box<Arith>),
    Mul(Box<Arith>, Box<Arith>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    True,
    False,
    Cmp(CmpOp, Arith, Arith),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Not(Box<BoolExpr>),
    Pred(String, Vec<Term>),
}

impl Arith {
    pub fn term(t: Term) -> Arith {
        Arith::Term(t)
    }

    pub fn add(a: Arith, b: Arith) -> Arith {
        Arith::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Arith, b: Arith) -> Arith {
        Arith::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Arith, b: Arith) -> Arith {
        Arith::Mul(Box::new(a), Box::new(b))
    }

    fn for_each_term<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            Arith::Term(t) => f(t),
            Arith::Add(a, b) | Arith::Sub(a, b) | Arith::Mul(a, b) => {
                a.for_each_term(f);
                b.for_each_term(f);
            }
        }
    }

    fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Arith {
        match self {
            Arith::Term(t) => Arith::Term(f(t)),
            Arith::Add(a, b) => Arith::add(a.map_terms(f), b.map_terms(f)),
            Arith::Sub(a, b) => Arith::sub(a.map_terms(f), b.map_terms(f)),
            Arith::Mul(a, b) => Arith::mul(a.map_terms(f), b.map_terms(f)),
        }
    }
}

impl BoolExpr {
    pub fn cmp(op: CmpOp, a: Arith, b: Arith) -> BoolExpr {
        BoolExpr::Cmp(op, a, b)
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn negate(a: BoolExpr) -> BoolExpr {
        BoolExpr::Not(Box::new(a))
    }

    pub fn pred(name: &str, args: Vec<Term>) -> BoolExpr {
        BoolExpr::Pred(name.to_string(), args)
    }

    pub(crate) fn for_each_term<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            BoolExpr::True | BoolExpr::False => {}
            BoolExpr::Cmp(_, a, b) => {
                a.for_each_term(f);
                b.for_each_term(f);
            }
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.for_each_term(f);
                b.for_each_term(f);
            }
            BoolExpr::Not(a) => a.for_each_term(f),
            BoolExpr::Pred(_, args) => args.iter().for_each(f),
        }
    }

    pub(crate) fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> BoolExpr {
        match self {
            BoolExpr::True => BoolExpr::True,
            BoolExpr::False => BoolExpr::False,
            BoolExpr::Cmp(op, a, b) => BoolExpr::Cmp(*op, a.map_terms(f), b.map_terms(f)),
            BoolExpr::And(a, b) => BoolExpr::and(a.map_terms(f), b.map_terms(f)),
            BoolExpr::Or(a, b) => BoolExpr::or(a.map_terms(f), b.map_terms(f)),
            BoolExpr::Not(a) => BoolExpr::negate(a.map_terms(f)),
            BoolExpr::Pred(name, args) => BoolExpr::Pred(name.clone(), args.iter().map(f).collect()),
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.for_each_term(&mut |t| out.extend(t.vars()));
        out
    }

    pub fn has_wildcard(&self) -> bool {
        let mut found = false;
        self.for_each_term(&mut |t| found |= t.has_wildcard());
        found
    }

    pub fn substitute(&self, sigma: &Substitution) -> BoolExpr {
        if sigma.is_empty() {
            return self.clone();
        }
        self.map_terms(&mut |t| sigma.apply_term(t))
    }

    pub fn predicate_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_predicates(&mut out);
        out
    }

    fn collect_predicates<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            BoolExpr::Pred(name, _) => out.push(name),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.collect_predicates(out);
                b.collect_predicates(out);
            }
            BoolExpr::Not(a) => a.collect_predicates(out),
            _ => {}
        }
    }
}

pub type Predicate = Arc<dyn Fn(&[Value]) -> bool + Send + Sync>;

/// Named decidable predicates available to guards.
#[derive(Clone, Default)]
pub struct PredicateTable {
    entries: HashMap<String, Predicate>,
}

impl PredicateTable {
    pub fn new() -> Self {
        PredicateTable::default()
    }

    pub fn register(&mut self, name: &str, pred: impl Fn(&[Value]) -> bool + Send + Sync + 'static) {
        self.entries.insert(name.to_string(), Arc::new(pred));
    }

    pub fn with(mut self, name: &str, pred: impl Fn(&[Value]) -> bool + Send + Sync + 'static) -> Self {
        self.register(name, pred);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Predicate> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }
}

impl fmt::Debug for PredicateTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<_> = self.entries.keys().collect();
        names.sort();
        f.debug_struct("PredicateTable").field("names", &names).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable {0} is not bound")]
    Unbound(String),
    #[error("wildcard used inside a boolean expression")]
    Wildcard,
    #[error("predicate {0} is not registered")]
    UnknownPredicate(String),
}

enum Fault {
    Error(EvalError),
    /// Ill-typed arithmetic or overflow; the enclosing guard fails.
    Type,
}

impl From<EvalError> for Fault {
    fn from(e: EvalError) -> Self {
        Fault::Error(e)
    }
}

fn close(term: &Term, sigma: &Substitution) -> Result<Value, EvalError> {
    match term {
        Term::Lit(v) => Ok(v.clone()),
        Term::Var(name) => sigma.get(name).cloned().ok_or_else(|| EvalError::Unbound(name.clone())),
        Term::Wild => Err(EvalError::Wildcard),
        Term::Tuple(items) => items.iter().map(|t| close(t, sigma)).collect::<Result<Vec<_>, _>>().map(Value::Tuple),
    }
}

fn eval_arith(a: &Arith, sigma: &Substitution) -> Result<Value, Fault> {
    let int_op = |x: &Arith, y: &Arith, op: fn(i64, i64) -> Option<i64>| -> Result<Value, Fault> {
        let l = eval_arith(x, sigma)?;
        let r = eval_arith(y, sigma)?;
        match (l, r) {
            (Value::Int(l), Value::Int(r)) => op(l, r).map(Value::Int).ok_or(Fault::Type),
            _ => Err(Fault::Type),
        }
    };
    match a {
        Arith::Term(t) => Ok(close(t, sigma)?),
        Arith::Add(x, y) => int_op(x, y, i64::checked_add),
        Arith::Sub(x, y) => int_op(x, y, i64::checked_sub),
        Arith::Mul(x, y) => int_op(x, y, i64::checked_mul),
    }
}

fn eval_inner(b: &BoolExpr, sigma: &Substitution, preds: &PredicateTable) -> Result<bool, Fault> {
    Ok(match b {
        BoolExpr::True => true,
        BoolExpr::False => false,
        BoolExpr::Cmp(op, x, y) => {
            let l = eval_arith(x, sigma)?;
            let r = eval_arith(y, sigma)?;
            match op {
                CmpOp::Eq => l == r,
                CmpOp::Ne => l != r,
                CmpOp::Lt => l < r,
                CmpOp::Gt => l > r,
                CmpOp::Le => l <= r,
                CmpOp::Ge => l >= r,
            }
        }
        BoolExpr::And(x, y) => eval_inner(x, sigma, preds)? && eval_inner(y, sigma, preds)?,
        BoolExpr::Or(x, y) => eval_inner(x, sigma, preds)? || eval_inner(y, sigma, preds)?,
        BoolExpr::Not(x) => !eval_inner(x, sigma, preds)?,
        BoolExpr::Pred(name, args) => {
            let pred = preds.get(name).ok_or_else(|| EvalError::UnknownPredicate(name.clone()))?;
            let values = args.iter().map(|t| close(t, sigma)).collect::<Result<Vec<_>, _>>()?;
            pred(&values)
        }
    })
}

/// Evaluates a guard under a closing substitution.
///
/// Arithmetic on non-integers or overflow makes the whole guard false, as a
/// failing guard would in the host language. Unbound variables and unknown
/// predicates are errors.
pub fn eval_bool(b: &BoolExpr, sigma: &Substitution, preds: &PredicateTable) -> Result<bool, EvalError> {
    match eval_inner(b, sigma, preds) {
        Ok(v) => Ok(v),
        Err(Fault::Type) => Ok(false),
        Err(Fault::Error(e)) => Err(e),
    }
}

//! Random generators shared by the acceptance and property test targets.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use actmon::logic::{ActionPattern, Arith, BoolExpr, ClosedAction, CmpOp, EventInstance, Formula, Pid, Term, Value};

/// Action shapes of the small alphabet: kind and subject.
#[derive(Clone, Copy)]
pub enum Shape {
    OutA,
    OutB,
    InA,
}

pub const SHAPES: [Shape; 3] = [Shape::OutA, Shape::OutB, Shape::InA];
pub const VALUES: [i64; 3] = [0, 1, 2];

pub fn closed(shape: Shape, v: i64) -> ClosedAction {
    match shape {
        Shape::OutA => ClosedAction::output(Value::atom("a"), Value::Int(v)),
        Shape::OutB => ClosedAction::output(Value::atom("b"), Value::Int(v)),
        Shape::InA => ClosedAction::input(Value::atom("a"), Value::Int(v)),
    }
}

/// Trace over the small alphabet; `seq` numbers events from 0.
pub fn small_trace(rng: &mut impl Rng, max_len: usize) -> Vec<EventInstance> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|i| {
            let a = closed(*SHAPES.choose(rng).unwrap(), *VALUES.choose(rng).unwrap());
            EventInstance::new(a, Pid(1), i as u64)
        })
        .collect()
}

struct Scope {
    terms: Vec<String>,
    /// Formula variables in scope and whether a necessity guards them yet.
    fvars: Vec<(String, bool)>,
    fresh: usize,
}

impl Scope {
    fn new() -> Self {
        Scope { terms: Vec::new(), fvars: Vec::new(), fresh: 0 }
    }

    fn fresh_term(&mut self) -> String {
        self.fresh += 1;
        format!("X{}", self.fresh)
    }

    fn fresh_fvar(&mut self) -> String {
        self.fresh += 1;
        format!("R{}", self.fresh)
    }
}

fn small_payload(rng: &mut impl Rng, sc: &mut Scope, binds: &mut Vec<String>) -> Term {
    match rng.gen_range(0..4) {
        0 => Term::int(*VALUES.choose(rng).unwrap()),
        1 => Term::Wild,
        2 if !sc.terms.is_empty() => Term::var(sc.terms.choose(rng).unwrap()),
        _ => {
            let x = sc.fresh_term();
            binds.push(x.clone());
            Term::var(&x)
        }
    }
}

fn small_pattern(rng: &mut impl Rng, sc: &mut Scope) -> (ActionPattern, Vec<String>) {
    let mut binds = Vec::new();
    let payload = small_payload(rng, sc, &mut binds);
    let subject = match rng.gen_range(0..6) {
        0 => Term::Wild,
        1 => {
            let x = sc.fresh_term();
            binds.push(x.clone());
            Term::var(&x)
        }
        _ => Term::atom(if rng.gen_bool(0.7) { "a" } else { "b" }),
    };
    let p = if rng.gen_bool(0.7) { ActionPattern::output(subject, payload) } else { ActionPattern::input(subject, payload) };
    (p, binds)
}

fn small_operand(rng: &mut impl Rng, sc: &Scope) -> Arith {
    match sc.terms.choose(rng) {
        Some(x) if rng.gen_bool(0.7) => Arith::term(Term::var(x)),
        _ => Arith::term(Term::int(*VALUES.choose(rng).unwrap())),
    }
}

fn small_guard(rng: &mut impl Rng, sc: &Scope) -> BoolExpr {
    let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Ge];
    let op = *ops.choose(rng).unwrap();
    match rng.gen_range(0..8) {
        0 => BoolExpr::True,
        1 => BoolExpr::False,
        2 => BoolExpr::negate(BoolExpr::cmp(op, small_operand(rng, sc), small_operand(rng, sc))),
        3 => BoolExpr::cmp(CmpOp::Eq, Arith::add(small_operand(rng, sc), Arith::term(Term::int(1))), small_operand(rng, sc)),
        _ => BoolExpr::cmp(op, small_operand(rng, sc), small_operand(rng, sc)),
    }
}

fn small_leaf(rng: &mut impl Rng, sc: &Scope) -> Formula {
    let guarded: Vec<&String> = sc.fvars.iter().filter(|(_, g)| *g).map(|(x, _)| x).collect();
    match rng.gen_range(0..3) {
        0 if !guarded.is_empty() => Formula::var(guarded.choose(rng).unwrap()),
        1 => Formula::SFF,
        _ => Formula::FF,
    }
}

fn small_formula_in(rng: &mut impl Rng, depth: usize, sc: &mut Scope) -> Formula {
    if depth <= 1 || rng.gen_bool(0.15) {
        return small_leaf(rng, sc);
    }
    match rng.gen_range(0..20) {
        0..=8 => {
            let (p, binds) = small_pattern(rng, sc);
            let saved = (sc.terms.len(), sc.fvars.clone());
            sc.terms.extend(binds);
            sc.fvars.iter_mut().for_each(|v| v.1 = true);
            let body = small_formula_in(rng, depth - 1, sc);
            sc.terms.truncate(saved.0);
            sc.fvars = saved.1;
            if rng.gen_bool(0.3) {
                Formula::sync_nec(p, body)
            } else {
                Formula::nec(p, body)
            }
        }
        9..=12 => Formula::and(small_formula_in(rng, depth - 1, sc), small_formula_in(rng, depth - 1, sc)),
        13..=16 => {
            let b = small_guard(rng, sc);
            Formula::guard(b, small_formula_in(rng, depth - 1, sc))
        }
        _ => {
            let x = sc.fresh_fvar();
            sc.fvars.push((x.clone(), false));
            let body = small_formula_in(rng, depth - 1, sc);
            sc.fvars.pop();
            Formula::max(&x, body)
        }
    }
}

/// A marked, well-formed formula of depth at most `depth` over the small
/// alphabet.
pub fn small_formula(rng: &mut impl Rng, depth: usize) -> Formula {
    loop {
        let f = small_formula_in(rng, depth, &mut Scope::new()).mark_synchronous();
        if f.check_well_formed().is_ok() && f.depth() <= depth {
            return f;
        }
    }
}

// Richer generator covering the whole concrete syntax.

const ATOMS: &[&str] = &["ok", "next", "http_eoh", "GET", "with space", "if", "a@b", "it's", ""];
const STRINGS: &[&str] = &["", "Host: x", "quote \" and \\ slash", "tab\tnew\nline", "../../etc", "ünï"];

fn rich_value(rng: &mut impl Rng, depth: usize) -> Value {
    match rng.gen_range(0..if depth == 0 { 4 } else { 5 }) {
        0 => Value::atom(ATOMS.choose(rng).unwrap()),
        1 => Value::Int(rng.gen_range(-1000..1000)),
        2 => Value::string(STRINGS.choose(rng).unwrap()),
        3 => Value::Pid(Pid(rng.gen_range(0..50))),
        _ => Value::tuple((0..rng.gen_range(0..4)).map(|_| rich_value(rng, depth - 1)).collect::<Vec<_>>()),
    }
}

fn rich_term(rng: &mut impl Rng, sc: &mut Scope, binds: &mut Vec<String>, depth: usize) -> Term {
    match rng.gen_range(0..if depth == 0 { 4 } else { 5 }) {
        0 => Term::from(rich_value(rng, 1)),
        1 => Term::Wild,
        2 if !sc.terms.is_empty() => Term::var(sc.terms.choose(rng).unwrap()),
        2 | 3 => {
            let x = sc.fresh_term();
            binds.push(x.clone());
            Term::var(&x)
        }
        _ => Term::tuple((0..rng.gen_range(0..4)).map(|_| rich_term(rng, sc, binds, depth - 1)).collect::<Vec<_>>()),
    }
}

fn rich_pattern(rng: &mut impl Rng, sc: &mut Scope) -> (ActionPattern, Vec<String>) {
    let mut binds = Vec::new();
    let subject = rich_term(rng, sc, &mut binds, 0);
    let p = match rng.gen_range(0..4) {
        0 => ActionPattern::output(subject, rich_term(rng, sc, &mut binds, 2)),
        1 => ActionPattern::input(subject, rich_term(rng, sc, &mut binds, 2)),
        2 => {
            let args = (0..rng.gen_range(0..4)).map(|_| rich_term(rng, sc, &mut binds, 1)).collect();
            ActionPattern::call(subject, "yaws", "do_recv", args)
        }
        _ => ActionPattern::ret(subject, "m", "f_2", rng.gen_range(0..5), rich_term(rng, sc, &mut binds, 2)),
    };
    (p, binds)
}

fn rich_arith(rng: &mut impl Rng, sc: &Scope, depth: usize) -> Arith {
    match rng.gen_range(0..if depth == 0 { 2 } else { 5 }) {
        0 if !sc.terms.is_empty() => Arith::term(Term::var(sc.terms.choose(rng).unwrap())),
        0 | 1 => Arith::term(Term::from(rich_value(rng, 0))),
        2 => Arith::add(rich_arith(rng, sc, depth - 1), rich_arith(rng, sc, depth - 1)),
        3 => Arith::sub(rich_arith(rng, sc, depth - 1), rich_arith(rng, sc, depth - 1)),
        _ => Arith::mul(rich_arith(rng, sc, depth - 1), rich_arith(rng, sc, depth - 1)),
    }
}

fn rich_bool(rng: &mut impl Rng, sc: &Scope, depth: usize) -> BoolExpr {
    let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Gt, CmpOp::Le, CmpOp::Ge];
    match rng.gen_range(0..if depth == 0 { 4 } else { 7 }) {
        0 => BoolExpr::True,
        1 => BoolExpr::False,
        2 => {
            let args = (0..rng.gen_range(0..4)).map(|_| match sc.terms.choose(rng) {
                Some(x) if rng.gen_bool(0.6) => Term::var(x),
                _ => Term::from(rich_value(rng, 1)),
            });
            BoolExpr::pred("isMalicious", args.collect())
        }
        3 => BoolExpr::cmp(*ops.choose(rng).unwrap(), rich_arith(rng, sc, 2), rich_arith(rng, sc, 2)),
        4 => BoolExpr::and(rich_bool(rng, sc, depth - 1), rich_bool(rng, sc, depth - 1)),
        5 => BoolExpr::or(rich_bool(rng, sc, depth - 1), rich_bool(rng, sc, depth - 1)),
        _ => BoolExpr::negate(rich_bool(rng, sc, depth - 1)),
    }
}

fn rich_formula_in(rng: &mut impl Rng, depth: usize, sc: &mut Scope) -> Formula {
    if depth <= 1 || rng.gen_bool(0.1) {
        return small_leaf(rng, sc);
    }
    match rng.gen_range(0..10) {
        0..=3 => {
            let (p, binds) = rich_pattern(rng, sc);
            let saved = (sc.terms.len(), sc.fvars.clone());
            sc.terms.extend(binds);
            sc.fvars.iter_mut().for_each(|v| v.1 = true);
            let body = rich_formula_in(rng, depth - 1, sc);
            sc.terms.truncate(saved.0);
            sc.fvars = saved.1;
            if rng.gen_bool(0.5) {
                Formula::sync_nec(p, body)
            } else {
                Formula::nec(p, body)
            }
        }
        4 | 5 => Formula::and(rich_formula_in(rng, depth - 1, sc), rich_formula_in(rng, depth - 1, sc)),
        6 | 7 => {
            let b = rich_bool(rng, sc, 2);
            Formula::guard(b, rich_formula_in(rng, depth - 1, sc))
        }
        _ => {
            let x = sc.fresh_fvar();
            sc.fvars.push((x.clone(), false));
            let body = rich_formula_in(rng, depth - 1, sc);
            sc.fvars.pop();
            Formula::max(&x, body)
        }
    }
}

/// A well-formed formula exercising every syntactic construct.
pub fn rich_formula(rng: &mut impl Rng, depth: usize) -> Formula {
    loop {
        let f = rich_formula_in(rng, depth, &mut Scope::new());
        if f.check_well_formed().is_ok() {
            return f;
        }
    }
}

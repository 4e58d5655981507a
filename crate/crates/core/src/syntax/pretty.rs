use std::fmt::Write;

use crate::logic::{Arith, BoolExpr, Formula};

/// Renders a formula in the concrete syntax accepted by [`super::parse`].
pub fn pretty(f: &Formula) -> String {
    let mut out = String::new();
    conj(f, true, &mut out);
    out
}

/// `tail` is true when nothing follows in the enclosing conjunction, so a
/// fixpoint may extend to the end without parentheses.
fn conj(f: &Formula, tail: bool, out: &mut String) {
    match f {
        Formula::And(a, b) => {
            if matches!(**a, Formula::And(..)) {
                conj(a, false, out);
            } else {
                unary(a, false, out);
            }
            out.push_str(" & ");
            unary(b, tail, out);
        }
        other => unary(other, tail, out),
    }
}

fn unary(f: &Formula, tail: bool, out: &mut String) {
    match f {
        Formula::FF => out.push_str("ff"),
        Formula::SFF => out.push_str("sff"),
        Formula::Var(x) => out.push_str(x),
        Formula::And(..) => {
            out.push('(');
            conj(f, true, out);
            out.push(')');
        }
        Formula::Max(x, body) => {
            if !tail {
                out.push('(');
            }
            let _ = write!(out, "max {x}. ");
            conj(body, true, out);
            if !tail {
                out.push(')');
            }
        }
        Formula::Nec(p, body) => {
            let _ = write!(out, "[{p}] ");
            unary(body, tail, out);
        }
        Formula::SyncNec(p, body) => {
            let _ = write!(out, "[| {p} |] ");
            unary(body, tail, out);
        }
        Formula::Guard(b, body) => {
            out.push_str("if ");
            bexpr(b, 0, out);
            out.push_str(" then ");
            unary(body, tail, out);
        }
    }
}

pub(crate) fn pretty_bexpr(b: &BoolExpr) -> String {
    let mut out = String::new();
    bexpr(b, 0, &mut out);
    out
}

fn bexpr(b: &BoolExpr, min: u8, out: &mut String) {
    let prec = match b {
        BoolExpr::Or(..) => 1,
        BoolExpr::And(..) => 2,
        BoolExpr::Not(..) => 3,
        _ => 4,
    };
    let paren = prec < min;
    if paren {
        out.push('(');
    }
    match b {
        BoolExpr::True => out.push_str("true"),
        BoolExpr::False => out.push_str("false"),
        BoolExpr::Or(l, r) => {
            bexpr(l, 1, out);
            out.push_str(" or ");
            bexpr(r, 2, out);
        }
        BoolExpr::And(l, r) => {
            bexpr(l, 2, out);
            out.push_str(" and ");
            bexpr(r, 3, out);
        }
        BoolExpr::Not(x) => {
            out.push_str("not ");
            bexpr(x, 3, out);
        }
        BoolExpr::Cmp(op, l, r) => {
            arith(l, 0, out);
            let _ = write!(out, " {} ", op.symbol());
            arith(r, 0, out);
        }
        BoolExpr::Pred(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{a}");
            }
            out.push(')');
        }
    }
    if paren {
        out.push(')');
    }
}

fn arith(a: &Arith, min: u8, out: &mut String) {
    let (prec, l, r, sym) = match a {
        Arith::Term(t) => {
            let _ = write!(out, "{t}");
            return;
        }
        Arith::Add(l, r) => (1, l, r, " + "),
        Arith::Sub(l, r) => (1, l, r, " - "),
        Arith::Mul(l, r) => (2, l, r, " * "),
    };
    let paren = prec < min;
    if paren {
        out.push('(');
    }
    arith(l, prec, out);
    out.push_str(sym);
    arith(r, prec + 1, out);
    if paren {
        out.push(')');
    }
}

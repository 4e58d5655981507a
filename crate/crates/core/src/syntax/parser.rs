use std::sync::Arc;

use super::lexer::{lex, Lexed, Pos, Spanned, Tok};
use super::SyntaxError;
use crate::logic::{Action, ActionPattern, Arith, BoolExpr, ClosedAction, CmpOp, Formula, Pid, Term, Value};

const FORMULA_KEYWORDS: &[&str] = &["ff", "sff", "and", "max", "if", "then", "call", "ret"];

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    end: Pos,
    at: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    pub(crate) fn new(text: &str) -> PResult<Parser> {
        let Lexed { toks, end } = lex(text)?;
        Ok(Parser { toks, end, at: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.at + k).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|t| t.pos).unwrap_or(self.end)
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let pos = self.pos();
        let found = match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".to_string(),
        };
        Err(SyntaxError::Syntax { line: pos.line, col: pos.col, message: format!("expected {expected}, found {found}") })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(w)) if w == word)
    }

    fn eat_ident(&mut self, word: &str) -> bool {
        if self.is_ident(word) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn finish(&self) -> PResult<()> {
        if self.at < self.toks.len() {
            self.error("end of input")
        } else {
            Ok(())
        }
    }

    pub(crate) fn formula(&mut self) -> PResult<Formula> {
        let mut left = self.unary()?;
        while self.eat(&Tok::Amp) {
            let right = self.unary()?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Formula> {
        match self.peek() {
            Some(Tok::Ident(w)) => match w.as_str() {
                "ff" => {
                    self.at += 1;
                    Ok(Formula::FF)
                }
                "sff" => {
                    self.at += 1;
                    Ok(Formula::SFF)
                }
                "and" => {
                    self.at += 1;
                    self.expect(&Tok::LParen, "`(`")?;
                    let a = self.formula()?;
                    self.expect(&Tok::Comma, "`,`")?;
                    let b = self.formula()?;
                    self.expect(&Tok::RParen, "`)`")?;
                    Ok(Formula::and(a, b))
                }
                "max" => {
                    self.at += 1;
                    let x = match self.peek() {
                        Some(Tok::Var(x)) => x.clone(),
                        _ => return self.error("formula variable"),
                    };
                    self.at += 1;
                    self.expect(&Tok::Dot, "`.`")?;
                    Ok(Formula::max(&x, self.formula()?))
                }
                "if" => {
                    self.at += 1;
                    let b = self.bexpr()?;
                    if !self.eat_ident("then") {
                        return self.error("`then`");
                    }
                    Ok(Formula::guard(b, self.unary()?))
                }
                _ => self.error("formula"),
            },
            Some(Tok::LBrack) => {
                self.at += 1;
                let p = self.pattern()?;
                self.expect(&Tok::RBrack, "`]`")?;
                Ok(Formula::nec(p, self.unary()?))
            }
            Some(Tok::LSync) => {
                self.at += 1;
                let p = self.pattern()?;
                self.expect(&Tok::RSync, "`|]`")?;
                Ok(Formula::sync_nec(p, self.unary()?))
            }
            Some(Tok::Var(x)) => {
                let x = x.clone();
                self.at += 1;
                Ok(Formula::Var(x))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let f = self.formula()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(f)
            }
            _ => self.error("formula"),
        }
    }

    fn atom_name(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(w)) if !FORMULA_KEYWORDS.contains(&w.as_str()) => {
                let w = w.clone();
                self.at += 1;
                Ok(w)
            }
            Some(Tok::QAtom(w)) => {
                let w = w.clone();
                self.at += 1;
                Ok(w)
            }
            _ => self.error("atom"),
        }
    }

    fn arity(&mut self) -> PResult<u32> {
        match self.peek() {
            Some(Tok::Int(n)) if *n <= u32::MAX as i128 => {
                let n = *n as u32;
                self.at += 1;
                Ok(n)
            }
            _ => self.error("arity"),
        }
    }

    /// `P ! T`, `P ? T`, `call P m:f(Ts)` or `ret P m:f/A = T`.
    pub(crate) fn pattern(&mut self) -> PResult<ActionPattern> {
        if self.eat_ident("call") {
            let subject = self.term()?;
            let module = self.atom_name()?;
            self.expect(&Tok::Colon, "`:`")?;
            let function = self.atom_name()?;
            let args = self.term_list(Tok::LParen, Tok::RParen)?;
            return Ok(Action::call(subject, &module, &function, args));
        }
        if self.eat_ident("ret") {
            let subject = self.term()?;
            let module = self.atom_name()?;
            self.expect(&Tok::Colon, "`:`")?;
            let function = self.atom_name()?;
            self.expect(&Tok::Slash, "`/`")?;
            let arity = self.arity()?;
            self.expect(&Tok::Eq, "`=`")?;
            let value = self.term()?;
            return Ok(Action::ret(subject, &module, &function, arity, value));
        }
        let subject = self.term()?;
        if self.eat(&Tok::Bang) {
            Ok(Action::output(subject, self.term()?))
        } else if self.eat(&Tok::Query) {
            Ok(Action::input(subject, self.term()?))
        } else {
            self.error("`!` or `?`")
        }
    }

    fn term_list(&mut self, open: Tok, close: Tok) -> PResult<Vec<Term>> {
        let what = if open == Tok::LParen { "`(`" } else { "`{`" };
        self.expect(&open, what)?;
        let mut items = Vec::new();
        if self.eat(&close) {
            return Ok(items);
        }
        loop {
            items.push(self.term()?);
            if self.eat(&close) {
                return Ok(items);
            }
            if !self.eat(&Tok::Comma) {
                return self.error("`,` or closing bracket");
            }
        }
    }

    pub(crate) fn term(&mut self) -> PResult<Term> {
        let t = match self.peek() {
            Some(Tok::Wild) => Term::Wild,
            Some(Tok::Var(x)) => Term::Var(x.clone()),
            Some(Tok::Int(n)) => match i64::try_from(*n) {
                Ok(n) => Term::int(n),
                Err(_) => return self.error("integer within range"),
            },
            Some(Tok::Minus) => match self.peek_at(1) {
                Some(Tok::Int(n)) => {
                    let n = -*n;
                    self.at += 1;
                    Term::int(n as i64)
                }
                _ => return self.error("term"),
            },
            Some(Tok::Str(s)) => Term::Lit(Value::Str(Arc::from(s.as_str()))),
            Some(Tok::Pid(n)) => Term::Lit(Value::Pid(Pid(*n))),
            Some(Tok::Ident(_)) | Some(Tok::QAtom(_)) => {
                if let Some(Tok::Ident(w)) = self.peek() {
                    if crate::logic::atom_needs_quotes(w) {
                        return self.error("term");
                    }
                }
                return Ok(Term::atom(&self.atom_name()?));
            }
            Some(Tok::LBrace) => return Ok(Term::Tuple(self.term_list(Tok::LBrace, Tok::RBrace)?)),
            _ => return self.error("term"),
        };
        self.at += 1;
        Ok(t)
    }

    pub(crate) fn value(&mut self) -> PResult<Value> {
        let pos = self.pos();
        let t = self.term()?;
        t.to_value().ok_or(SyntaxError::Syntax {
            line: pos.line,
            col: pos.col,
            message: "expected a closed value without variables".into(),
        })
    }

    pub(crate) fn bexpr(&mut self) -> PResult<BoolExpr> {
        let mut left = self.b_and()?;
        while self.eat_ident("or") {
            left = BoolExpr::or(left, self.b_and()?);
        }
        Ok(left)
    }

    fn b_and(&mut self) -> PResult<BoolExpr> {
        let mut left = self.b_not()?;
        while self.eat_ident("and") {
            left = BoolExpr::and(left, self.b_not()?);
        }
        Ok(left)
    }

    fn b_not(&mut self) -> PResult<BoolExpr> {
        if self.eat_ident("not") {
            return Ok(BoolExpr::negate(self.b_not()?));
        }
        self.b_atom()
    }

    fn b_atom(&mut self) -> PResult<BoolExpr> {
        if self.eat_ident("true") {
            return Ok(BoolExpr::True);
        }
        if self.eat_ident("false") {
            return Ok(BoolExpr::False);
        }
        if let (Some(Tok::Ident(name)), Some(Tok::LParen)) = (self.peek(), self.peek_at(1)) {
            let name = name.clone();
            self.at += 1;
            let args = self.term_list(Tok::LParen, Tok::RParen)?;
            return Ok(BoolExpr::Pred(name, args));
        }
        if self.peek() == Some(&Tok::LParen) {
            let save = self.at;
            self.at += 1;
            let inner = self.bexpr().and_then(|b| self.expect(&Tok::RParen, "`)`").map(|_| b));
            match inner {
                Ok(b) if !self.at_cmp_or_arith() => return Ok(b),
                _ => self.at = save,
            }
        }
        let left = self.arith()?;
        let op = match self.peek() {
            Some(Tok::Eq) => CmpOp::Eq,
            Some(Tok::Ne) => CmpOp::Ne,
            Some(Tok::Lt) => CmpOp::Lt,
            Some(Tok::Gt) => CmpOp::Gt,
            Some(Tok::Le) => CmpOp::Le,
            Some(Tok::Ge) => CmpOp::Ge,
            _ => return self.error("comparison operator"),
        };
        self.at += 1;
        Ok(BoolExpr::Cmp(op, left, self.arith()?))
    }

    fn at_cmp_or_arith(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Eq | Tok::Ne | Tok::Lt | Tok::Gt | Tok::Le | Tok::Ge | Tok::Plus | Tok::Minus | Tok::Star)
        )
    }

    fn arith(&mut self) -> PResult<Arith> {
        let mut left = self.arith_mul()?;
        loop {
            if self.eat(&Tok::Plus) {
                left = Arith::add(left, self.arith_mul()?);
            } else if self.eat(&Tok::Minus) {
                left = Arith::sub(left, self.arith_mul()?);
            } else {
                return Ok(left);
            }
        }
    }

    fn arith_mul(&mut self) -> PResult<Arith> {
        let mut left = self.arith_prim()?;
        while self.eat(&Tok::Star) {
            left = Arith::mul(left, self.arith_prim()?);
        }
        Ok(left)
    }

    fn arith_prim(&mut self) -> PResult<Arith> {
        if self.eat(&Tok::LParen) {
            let a = self.arith()?;
            self.expect(&Tok::RParen, "`)`")?;
            return Ok(a);
        }
        Ok(Arith::Term(self.term()?))
    }

    /// One trace event: `snd P V`, `rcv P V`, `call P m:f(Vs)` or `ret P m:f/A V`.
    pub(crate) fn event(&mut self) -> PResult<ClosedAction> {
        let kind = match self.peek() {
            Some(Tok::Ident(w)) if ["snd", "rcv", "call", "ret"].contains(&w.as_str()) => w.clone(),
            _ => return self.error("`snd`, `rcv`, `call` or `ret`"),
        };
        self.at += 1;
        let subject = self.value()?;
        match kind.as_str() {
            "snd" => Ok(Action::output(subject, self.value()?)),
            "rcv" => Ok(Action::input(subject, self.value()?)),
            "call" => {
                let module = self.atom_name()?;
                self.expect(&Tok::Colon, "`:`")?;
                let function = self.atom_name()?;
                let pos = self.pos();
                let args = self.term_list(Tok::LParen, Tok::RParen)?;
                let args = args.iter().map(Term::to_value).collect::<Option<Vec<_>>>().ok_or(SyntaxError::Syntax {
                    line: pos.line,
                    col: pos.col,
                    message: "expected closed call arguments".into(),
                })?;
                Ok(Action::call(subject, &module, &function, args))
            }
            _ => {
                let module = self.atom_name()?;
                self.expect(&Tok::Colon, "`:`")?;
                let function = self.atom_name()?;
                self.expect(&Tok::Slash, "`/`")?;
                let arity = self.arity()?;
                Ok(Action::ret(subject, &module, &function, arity, self.value()?))
            }
        }
    }

    pub(crate) fn eat_word(&mut self, word: &str) -> bool {
        self.eat_ident(word)
    }

    pub(crate) fn pid(&mut self) -> PResult<Pid> {
        match self.peek() {
            Some(Tok::Pid(n)) => {
                let n = *n;
                self.at += 1;
                Ok(Pid(n))
            }
            _ => self.error("pid"),
        }
    }

    pub(crate) fn natural(&mut self) -> PResult<u64> {
        match self.peek() {
            Some(Tok::Int(n)) if *n <= u64::MAX as i128 => {
                let n = *n as u64;
                self.at += 1;
                Ok(n)
            }
            _ => self.error("natural number"),
        }
    }
}

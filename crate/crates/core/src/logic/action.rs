use std::fmt;
use std::sync::Arc;

use super::value::{write_atom, Pid, Term, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Output,
    Input,
    Call,
    Return,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] = [ActionKind::Output, ActionKind::Input, ActionKind::Call, ActionKind::Return];
}

/// An action over terms `T`: open patterns use [`Term`], observed events use [`Value`].
///
/// The subject is the destination of an output, the receiver of an input and
/// the calling actor of a call or return.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Action<T> {
    pub subject: T,
    pub body: ActionBody<T>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ActionBody<T> {
    Output(T),
    Input(T),
    Call { module: Arc<str>, function: Arc<str>, args: Vec<T> },
    Return { module: Arc<str>, function: Arc<str>, arity: u32, value: T },
}

pub type ActionPattern = Action<Term>;
pub type ClosedAction = Action<Value>;

impl<T> Action<T> {
    pub fn output(subject: T, payload: T) -> Self {
        Action { subject, body: ActionBody::Output(payload) }
    }

    pub fn input(subject: T, payload: T) -> Self {
        Action { subject, body: ActionBody::Input(payload) }
    }

    pub fn call(subject: T, module: &str, function: &str, args: Vec<T>) -> Self {
        Action { subject, body: ActionBody::Call { module: Arc::from(module), function: Arc::from(function), args } }
    }

    pub fn ret(subject: T, module: &str, function: &str, arity: u32, value: T) -> Self {
        Action {
            subject,
            body: ActionBody::Return { module: Arc::from(module), function: Arc::from(function), arity, value },
        }
    }

    pub fn kind(&self) -> ActionKind {
        match self.body {
            ActionBody::Output(_) => ActionKind::Output,
            ActionBody::Input(_) => ActionKind::Input,
            ActionBody::Call { .. } => ActionKind::Call,
            ActionBody::Return { .. } => ActionKind::Return,
        }
    }

    /// Every term in the action, subject first.
    pub fn terms(&self) -> Vec<&T> {
        let mut out = vec![&self.subject];
        match &self.body {
            ActionBody::Output(t) | ActionBody::Input(t) => out.push(t),
            ActionBody::Call { args, .. } => out.extend(args.iter()),
            ActionBody::Return { value, .. } => out.push(value),
        }
        out
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Action<U> {
        let subject = f(&self.subject);
        let body = match &self.body {
            ActionBody::Output(t) => ActionBody::Output(f(t)),
            ActionBody::Input(t) => ActionBody::Input(f(t)),
            ActionBody::Call { module, function, args } => ActionBody::Call {
                module: module.clone(),
                function: function.clone(),
                args: args.iter().map(&mut f).collect(),
            },
            ActionBody::Return { module, function, arity, value } => ActionBody::Return {
                module: module.clone(),
                function: function.clone(),
                arity: *arity,
                value: f(value),
            },
        };
        Action { subject, body }
    }
}

impl ActionPattern {
    pub fn vars(&self) -> Vec<&str> {
        self.terms().into_iter().flat_map(|t| t.vars()).collect()
    }

    pub fn generalize(&self) -> ActionPattern {
        self.map(Term::generalize)
    }

    pub fn to_closed(&self) -> Option<ClosedAction> {
        let subject = self.subject.to_value()?;
        let body = match &self.body {
            ActionBody::Output(t) => ActionBody::Output(t.to_value()?),
            ActionBody::Input(t) => ActionBody::Input(t.to_value()?),
            ActionBody::Call { module, function, args } => ActionBody::Call {
                module: module.clone(),
                function: function.clone(),
                args: args.iter().map(Term::to_value).collect::<Option<_>>()?,
            },
            ActionBody::Return { module, function, arity, value } => ActionBody::Return {
                module: module.clone(),
                function: function.clone(),
                arity: *arity,
                value: value.to_value()?,
            },
        };
        Some(Action { subject, body })
    }
}

impl From<&ClosedAction> for ActionPattern {
    fn from(a: &ClosedAction) -> Self {
        a.map(|v| Term::from(v))
    }
}

/// Pattern syntax: `P ! T`, `P ? T`, `call P m:f(Ts)`, `ret P m:f/A = T`.
impl fmt::Display for ActionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            ActionBody::Output(t) => write!(f, "{} ! {}", self.subject, t),
            ActionBody::Input(t) => write!(f, "{} ? {}", self.subject, t),
            ActionBody::Call { module, function, args } => {
                write!(f, "call {} ", self.subject)?;
                write_atom(f, module)?;
                f.write_str(":")?;
                write_atom(f, function)?;
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            ActionBody::Return { module, function, arity, value } => {
                write!(f, "ret {} ", self.subject)?;
                write_atom(f, module)?;
                f.write_str(":")?;
                write_atom(f, function)?;
                write!(f, "/{arity} = {value}")
            }
        }
    }
}

/// Trace-file syntax: `snd P T`, `rcv P T`, `call P m:f(Ts)`, `ret P m:f/A T`.
impl fmt::Display for ClosedAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            ActionBody::Output(v) => write!(f, "snd {} {}", self.subject, v),
            ActionBody::Input(v) => write!(f, "rcv {} {}", self.subject, v),
            ActionBody::Call { module, function, args } => {
                write!(f, "call {} ", self.subject)?;
                write_atom(f, module)?;
                f.write_str(":")?;
                write_atom(f, function)?;
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            ActionBody::Return { module, function, arity, value } => {
                write!(f, "ret {} ", self.subject)?;
                write_atom(f, module)?;
                f.write_str(":")?;
                write_atom(f, function)?;
                write!(f, "/{arity} {value}")
            }
        }
    }
}

/// A closed action observed at runtime.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EventInstance {
    pub action: ClosedAction,
    pub emitter: Pid,
    /// Position in the emitting actor's event stream.
    pub seq: u64,
}

impl EventInstance {
    pub fn new(action: ClosedAction, emitter: Pid, seq: u64) -> Self {
        EventInstance { action, emitter, seq }
    }
}

impl fmt::Display for EventInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_and_event_syntax() {
        let p = ActionPattern::ret(Term::var("H"), "yaws", "do_recv", 3, Term::tuple([Term::atom("ok"), Term::Wild]));
        assert_eq!(p.to_string(), "ret H yaws:do_recv/3 = {ok, _}");
        let e = ClosedAction::call(Value::Pid(Pid(2)), "yaws", "do_recv", vec![Value::Int(1), Value::atom("a")]);
        assert_eq!(e.to_string(), "call <2> yaws:do_recv(1, a)");
        let s = ClosedAction::output(Value::atom("server"), Value::Int(5));
        assert_eq!(s.to_string(), "snd server 5");
    }

    #[test]
    fn generalize_drops_variables() {
        let p = ActionPattern::output(Term::var("Y"), Term::tuple([Term::var("Z"), Term::atom("a")]));
        assert_eq!(p.generalize().to_string(), "_ ! {_, a}");
        assert_eq!(p.vars(), vec!["Y", "Z"]);
    }
}

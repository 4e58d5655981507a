use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Opaque runtime identifier of an actor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pid(pub u64);

impl fmt::Display for Pid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

/// Closed data exchanged between actors and carried by events.
///
/// Ordering is the derived total order over variants and is only used by
/// guard comparisons between values of different shapes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Atom(Arc<str>),
    Int(i64),
    Str(Arc<str>),
    Tuple(Vec<Value>),
    Pid(Pid),
}

impl Value {
    pub fn atom(name: &str) -> Value {
        Value::Atom(Arc::from(name))
    }

    pub fn string(text: &str) -> Value {
        Value::Str(Arc::from(text))
    }

    pub fn tuple(items: impl IntoIterator<Item = Value>) -> Value {
        Value::Tuple(items.into_iter().collect())
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Value::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_pid(&self) -> Option<Pid> {
        match self {
            Value::Pid(p) => Some(*p),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Value]> {
        match self {
            Value::Tuple(items) => Some(items),
            _ => None,
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

impl From<Pid> for Value {
    fn from(p: Pid) -> Self {
        Value::Pid(p)
    }
}

const KEYWORDS: &[&str] = &[
    "ff", "sff", "and", "or", "not", "max", "if", "then", "true", "false", "call", "ret", "tau",
    "snd", "rcv", "nonce", "null",
];

pub(crate) fn atom_needs_quotes(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return true,
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '@') {
        return true;
    }
    KEYWORDS.contains(&name)
}

pub(crate) fn write_atom(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if atom_needs_quotes(name) {
        f.write_str("'")?;
        for c in name.chars() {
            match c {
                '\'' => f.write_str("\\'")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                '\t' => f.write_str("\\t")?,
                c => write!(f, "{c}")?,
            }
        }
        f.write_str("'")
    } else {
        f.write_str(name)
    }
}

fn write_string(f: &mut fmt::Formatter<'_>, text: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in text.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(a) => write_atom(f, a),
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write_string(f, s),
            Value::Pid(p) => write!(f, "{p}"),
            Value::Tuple(items) => {
                f.write_str("{")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Open data used in patterns and guards.
///
/// Closed tuples are always represented with `Term::Tuple`; `Term::Lit` never
/// holds a `Value::Tuple`, so structurally equal terms compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Lit(Value),
    Var(String),
    Wild,
    Tuple(Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn atom(name: &str) -> Term {
        Term::Lit(Value::atom(name))
    }

    pub fn int(n: i64) -> Term {
        Term::Lit(Value::Int(n))
    }

    pub fn tuple(items: impl IntoIterator<Item = Term>) -> Term {
        Term::Tuple(items.into_iter().collect())
    }

    /// Variables in left-to-right order, duplicates included.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Var(v) => out.push(v),
            Term::Tuple(items) => items.iter().for_each(|t| t.collect_vars(out)),
            Term::Lit(_) | Term::Wild => {}
        }
    }

    pub fn has_wildcard(&self) -> bool {
        match self {
            Term::Wild => true,
            Term::Tuple(items) => items.iter().any(Term::has_wildcard),
            _ => false,
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Term::Lit(_) => true,
            Term::Var(_) | Term::Wild => false,
            Term::Tuple(items) => items.iter().all(Term::is_closed),
        }
    }

    /// The value denoted by a closed term.
    pub fn to_value(&self) -> Option<Value> {
        match self {
            Term::Lit(v) => Some(v.clone()),
            Term::Tuple(items) => items.iter().map(Term::to_value).collect::<Option<Vec<_>>>().map(Value::Tuple),
            Term::Var(_) | Term::Wild => None,
        }
    }

    /// Replaces every variable by a wildcard.
    pub fn generalize(&self) -> Term {
        match self {
            Term::Var(_) => Term::Wild,
            Term::Tuple(items) => Term::Tuple(items.iter().map(Term::generalize).collect()),
            other => other.clone(),
        }
    }

    pub(crate) fn rename_vars(&self, rename: &mut impl FnMut(&str) -> String) -> Term {
        match self {
            Term::Var(v) => Term::Var(rename(v)),
            Term::Tuple(items) => Term::Tuple(items.iter().map(|t| t.rename_vars(rename)).collect()),
            other => other.clone(),
        }
    }

    pub(crate) fn all_var_names(&self, out: &mut BTreeSet<String>) {
        for v in self.vars() {
            out.insert(v.to_string());
        }
    }
}

impl From<Value> for Term {
    fn from(v: Value) -> Self {
        match v {
            Value::Tuple(items) => Term::Tuple(items.into_iter().map(Term::from).collect()),
            other => Term::Lit(other),
        }
    }
}

impl From<&Value> for Term {
    fn from(v: &Value) -> Self {
        Term::from(v.clone())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Lit(v) => write!(f, "{v}"),
            Term::Var(name) => f.write_str(name),
            Term::Wild => f.write_str("_"),
            Term::Tuple(items) => {
                f.write_str("{")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_quote_when_needed() {
        assert_eq!(Value::atom("ok").to_string(), "ok");
        assert_eq!(Value::atom("GET").to_string(), "'GET'");
        assert_eq!(Value::atom("max").to_string(), "'max'");
        assert_eq!(Value::atom("it's").to_string(), "'it\\'s'");
    }

    #[test]
    fn closed_tuples_normalise_to_term_tuples() {
        let v = Value::tuple([Value::Int(1), Value::atom("a")]);
        assert_eq!(Term::from(v.clone()), Term::tuple([Term::int(1), Term::atom("a")]));
        assert_eq!(Term::from(v.clone()).to_value(), Some(v));
    }

    #[test]
    fn display_forms() {
        let v = Value::tuple([Value::Pid(Pid(3)), Value::string("a\"b"), Value::Int(-2)]);
        assert_eq!(v.to_string(), "{<3>, \"a\\\"b\", -2}");
        let t = Term::tuple([Term::var("X"), Term::Wild]);
        assert_eq!(t.to_string(), "{X, _}");
    }
}

//! Line-based trace and LTS files.
//!
//! Trace lines are events in the syntax `snd P V`, `rcv P V`,
//! `call P m:f(Vs)` or `ret P m:f/A V`, optionally followed by
//! `nonce <pid> <n>` or `nonce null`. LTS files declare `state <id>` and
//! `edge <from> <label-or-tau> <to>`. Blank lines and `#` comments are ignored.

use std::fmt::Write;

use thiserror::Error;

use super::lts::{FiniteLts, Label};
use crate::instrument::{FreshNonce, Nonce};
use crate::logic::{ActionBody, ClosedAction, EventInstance, Pid, Value};
use crate::syntax::{parse_event, Parser, SyntaxError};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FileError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

fn line_error(line: usize, e: impl ToString) -> FileError {
    FileError::Line { line, message: e.to_string() }
}

fn content(raw: &str) -> &str {
    // Comments may not start inside quoted text.
    let mut in_str = None;
    for (i, c) in raw.char_indices() {
        match (c, in_str) {
            ('"' | '\'', None) => in_str = Some(c),
            (q, Some(open)) if q == open => in_str = None,
            ('#', None) => return raw[..i].trim(),
            _ => {}
        }
    }
    raw.trim()
}

/// The actor a file event is attributed to when replayed.
pub fn default_emitter(action: &ClosedAction) -> Pid {
    match (&action.body, &action.subject) {
        (ActionBody::Output(_), _) => Pid(0),
        (_, Value::Pid(p)) => *p,
        _ => Pid(0),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub event: EventInstance,
    pub nonce: Option<Nonce>,
}

fn parse_trace_line(text: &str) -> Result<(ClosedAction, Option<Nonce>), SyntaxError> {
    let mut p = Parser::new(text)?;
    let action = p.event()?;
    let nonce = if p.eat_word("nonce") {
        if p.eat_word("null") {
            Some(Nonce::Null)
        } else {
            let pid = p.pid()?;
            let counter = p.natural()?;
            Some(Nonce::Fresh(FreshNonce { pid, counter }))
        }
    } else {
        None
    };
    p.finish()?;
    Ok((action, nonce))
}

pub fn parse_trace_entries(text: &str) -> Result<Vec<TraceEntry>, FileError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = content(raw);
        if line.is_empty() {
            continue;
        }
        let (action, nonce) = parse_trace_line(line).map_err(|e| line_error(i + 1, e))?;
        let emitter = default_emitter(&action);
        let seq = out.len() as u64;
        out.push(TraceEntry { event: EventInstance::new(action, emitter, seq), nonce });
    }
    Ok(out)
}

pub fn parse_trace(text: &str) -> Result<Vec<EventInstance>, FileError> {
    Ok(parse_trace_entries(text)?.into_iter().map(|e| e.event).collect())
}

pub fn format_trace_line(event: &EventInstance, nonce: Option<&Nonce>) -> String {
    let mut s = event.action.to_string();
    if let Some(n) = nonce {
        let _ = write!(s, " nonce {n}");
    }
    s
}

pub fn format_trace(events: &[EventInstance]) -> String {
    events.iter().map(|e| format_trace_line(e, None) + "\n").collect()
}

pub fn parse_lts(text: &str) -> Result<FiniteLts, FileError> {
    let mut lts = FiniteLts::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = content(raw);
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words[0] {
            "state" => {
                if words.len() != 2 {
                    return Err(line_error(n, "expected `state <id>`"));
                }
                if lts.state(words[1]).is_some() {
                    return Err(line_error(n, format!("state {} declared twice", words[1])));
                }
                lts.add_state(words[1]);
            }
            "edge" => {
                if words.len() < 4 {
                    return Err(line_error(n, "expected `edge <from> <label> <to>`"));
                }
                let endpoint = |w: &str| lts.state(w).ok_or_else(|| line_error(n, format!("undeclared state {w}")));
                let from = endpoint(words[1])?;
                let to = endpoint(words[words.len() - 1])?;
                let label_text = words[2..words.len() - 1].join(" ");
                let label = if label_text == "tau" {
                    Label::Tau
                } else {
                    Label::Act(parse_event(&label_text).map_err(|e| line_error(n, e))?)
                };
                lts.add_edge(from, label, to);
            }
            other => return Err(line_error(n, format!("unknown directive {other}"))),
        }
    }
    Ok(lts)
}

pub fn format_lts(lts: &FiniteLts) -> String {
    let mut s = String::new();
    for i in 0..lts.len() {
        let _ = writeln!(s, "state {}", lts.name(i));
    }
    for (from, label, to) in lts.edges() {
        let _ = writeln!(s, "edge {} {} {}", lts.name(*from), label, lts.name(*to));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_with_nonces_and_comments() {
        let text = "# succ\nrcv server {succ, 5, cli} nonce null\nsnd cli 6 nonce <3> 0\n\nret <4> yaws:do_recv/3 {ok, \"#x\"}\n";
        let entries = parse_trace_entries(text).unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[0].nonce, Some(Nonce::Null));
        assert_eq!(entries[1].nonce, Some(Nonce::Fresh(FreshNonce { pid: Pid(3), counter: 0 })));
        assert_eq!(entries[2].event.emitter, Pid(4));
        assert_eq!(entries[2].event.seq, 2);
        let printed = format_trace_line(&entries[1].event, entries[1].nonce.as_ref());
        assert_eq!(printed, "snd cli 6 nonce <3> 0");
    }

    #[test]
    fn trace_errors_carry_line_numbers() {
        assert_eq!(
            parse_trace("snd a 1\nsend a 2\n").unwrap_err(),
            FileError::Line { line: 2, message: "1:1: expected `snd`, `rcv`, `call` or `ret`, found `send`".into() }
        );
    }

    #[test]
    fn lts_round_trip() {
        let text = "state s0\nstate s1\nedge s0 tau s1\nedge s1 snd p {a, 1} s0\n";
        let lts = parse_lts(text).unwrap();
        assert_eq!(lts.len(), 2);
        assert_eq!(format_lts(&lts), text);
        assert!(parse_lts("state a\nedge a tau b\n").is_err());
    }
}

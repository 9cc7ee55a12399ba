//! Line-oriented JSON trace files.
//!
//! The first line is a header naming each register's writer; every further
//! line is one event, in history order:
//!
//! ```text
//! {"registers":{"X1":1,"X2":2},"comment":"","source":"generated"}
//! {"kind":"inv","client":1,"op":"write","reg":"X1","value":"u","label":"w_1"}
//! {"kind":"res","client":2,"op":"read","reg":"X1","value":null}
//! ```
//!
//! `null` is ⊥. Read invocations and write responses have no `value` key.
//! Blank lines are ignored.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::history::{ClientId, Event, EventKind, History, OpKind, RegisterId, Value};
use crate::register::RegisterSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceSource {
    Generated,
    Simulated,
    External,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub registers: BTreeMap<RegisterId, ClientId>,
    #[serde(default)]
    pub comment: String,
    pub source: TraceSource,
}

impl TraceHeader {
    pub fn new(spec: &RegisterSpec, source: TraceSource, comment: impl Into<String>) -> Self {
        TraceHeader {
            registers: spec.registers().map(|(r, w)| (r.clone(), w)).collect(),
            comment: comment.into(),
            source,
        }
    }

    pub fn spec(&self) -> RegisterSpec {
        let mut spec = RegisterSpec::new();
        for (r, w) in &self.registers {
            spec.declare(r.clone(), *w);
        }
        spec
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFile {
    pub header: TraceHeader,
    pub history: History,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TraceError {
    /// 1-based; 0 when the file has no lines at all.
    pub line: usize,
    pub message: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventLine {
    kind: EventKind,
    client: ClientId,
    op: OpKind,
    reg: RegisterId,
    /// Outer `None`: key absent. `Some(None)`: ⊥.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "present"
    )]
    value: Option<Option<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

fn present<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Option<String>>, D::Error> {
    Option::<String>::deserialize(d).map(Some)
}

impl EventLine {
    fn from_event(e: &Event) -> Self {
        EventLine {
            kind: e.kind,
            client: e.client,
            op: e.op,
            reg: e.register.clone(),
            value: e.value.as_ref().map(|v| match v {
                Value::Bottom => None,
                Value::Data(s) => Some(s.clone()),
            }),
            label: e.label.clone(),
        }
    }

    fn into_event(self) -> Result<Event, String> {
        let needs_value = matches!(
            (self.kind, self.op),
            (EventKind::Invocation, OpKind::Write) | (EventKind::Response, OpKind::Read)
        );
        let value = match (needs_value, self.value) {
            (true, None) => return Err("missing \"value\"".into()),
            (false, Some(_)) => return Err("unexpected \"value\"".into()),
            (true, Some(None)) if self.op == OpKind::Write => {
                return Err("a write cannot store ⊥ (null)".into())
            }
            (_, v) => v.map(|v| v.map_or(Value::Bottom, Value::Data)),
        };
        Ok(Event {
            kind: self.kind,
            client: self.client,
            op: self.op,
            register: self.reg,
            value,
            label: self.label,
        })
    }
}

impl TraceFile {
    pub fn new(header: TraceHeader, history: History) -> Self {
        TraceFile { header, history }
    }

    pub fn parse(text: &str) -> Result<TraceFile, TraceError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());
        let Some((hline, htext)) = lines.next() else {
            return Err(TraceError {
                line: 0,
                message: "empty trace: missing header".into(),
            });
        };
        let header: TraceHeader = serde_json::from_str(htext).map_err(|e| TraceError {
            line: hline,
            message: format!("bad header: {e}"),
        })?;
        let mut events = Vec::new();
        let mut line_of = Vec::new();
        for (n, l) in lines {
            let el: EventLine = serde_json::from_str(l).map_err(|e| TraceError {
                line: n,
                message: e.to_string(),
            })?;
            if !header.registers.contains_key(&el.reg) {
                return Err(TraceError {
                    line: n,
                    message: format!("register {} is not declared in the header", el.reg),
                });
            }
            let e = el.into_event().map_err(|m| TraceError { line: n, message: m })?;
            events.push(e);
            line_of.push(n);
        }
        let history = History::new(events).map_err(|v| TraceError {
            line: line_of.get(v.index).copied().unwrap_or(hline),
            message: v.rule.to_string(),
        })?;
        Ok(TraceFile { header, history })
    }

    /// The event lines only, each newline-terminated.
    pub fn body(&self) -> String {
        let mut out = String::new();
        for e in self.history.events() {
            out.push_str(&serde_json::to_string(&EventLine::from_event(e)).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn emit(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("serializable");
        out.push('\n');
        out.push_str(&self.body());
        out
    }
}

impl fmt::Display for TraceFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.emit())
    }
}

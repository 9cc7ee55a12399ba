//! Sequential specification of single-writer/multi-reader registers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::history::{ClientId, History, OpKind, Operation, RegisterId, Value, View};

/// Registers with their designated writers. Every register starts at ⊥.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RegisterSpec {
    writers: BTreeMap<RegisterId, ClientId>,
}

impl RegisterSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// `n` registers `X1..Xn` where `C_i` writes `X_i`.
    pub fn standard(n: u32) -> Self {
        let mut spec = RegisterSpec::new();
        for i in 1..=n {
            spec.declare(RegisterId(format!("X{i}")), ClientId(i));
        }
        spec
    }

    pub fn declare(&mut self, register: RegisterId, writer: ClientId) -> &mut Self {
        self.writers.insert(register, writer);
        self
    }

    pub fn with(mut self, register: &str, writer: u32) -> Self {
        self.declare(RegisterId::new(register), ClientId(writer));
        self
    }

    pub fn writer(&self, register: &RegisterId) -> Option<ClientId> {
        self.writers.get(register).copied()
    }

    pub fn registers(&self) -> impl Iterator<Item = (&RegisterId, ClientId)> {
        self.writers.iter().map(|(r, c)| (r, *c))
    }

    pub fn contains(&self, register: &RegisterId) -> bool {
        self.writers.contains_key(register)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// A read returned a value other than the latest preceding write.
    StaleRead,
    /// A read returned a data value that no operation of the view wrote.
    UnknownValue,
    DuplicateWrite,
    WrongWriter,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::StaleRead => "stale-read",
            ViolationKind::UnknownValue => "unknown-value",
            ViolationKind::DuplicateWrite => "duplicate-write",
            ViolationKind::WrongWriter => "wrong-writer",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct SpecViolation {
    pub kind: ViolationKind,
    pub at: Box<Operation>,
    pub expected: Option<Value>,
    pub got: Option<Value>,
    /// The operation that makes the read stale, or the earlier duplicate.
    pub culprit: Option<Box<Operation>>,
}

impl fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.kind, self.at)?;
        match self.kind {
            ViolationKind::StaleRead | ViolationKind::UnknownValue => {
                if let (Some(e), Some(g)) = (&self.expected, &self.got) {
                    write!(f, ": expected {e}, got {g}")?;
                }
            }
            ViolationKind::DuplicateWrite => {
                if let Some(c) = &self.culprit {
                    write!(f, ": value already written by {}", c.name())?;
                }
            }
            ViolationKind::WrongWriter => {}
        }
        if let (ViolationKind::StaleRead, Some(c)) = (self.kind, &self.culprit) {
            write!(f, " (latest preceding write is {})", c.name())?;
        }
        Ok(())
    }
}

/// Replays the view against one cell per register. The first read whose
/// return differs from the latest preceding write (or ⊥) is reported.
pub fn check_sequential_spec(v: &View, _spec: &RegisterSpec) -> Result<(), SpecViolation> {
    let mut cells: BTreeMap<&RegisterId, &Operation> = BTreeMap::new();
    for op in &v.ops {
        match op.kind {
            OpKind::Write => {
                cells.insert(&op.register, op);
            }
            OpKind::Read => {
                let latest = cells.get(&op.register).copied();
                let expected = latest
                    .and_then(|w| w.written.clone())
                    .unwrap_or(Value::Bottom);
                let got = op.returned.clone().unwrap_or(Value::Bottom);
                if got != expected {
                    let written_anywhere = v.ops.iter().any(|w| {
                        w.is_write() && w.register == op.register && w.written.as_ref() == Some(&got)
                    });
                    let kind = if got.is_bottom() || written_anywhere {
                        ViolationKind::StaleRead
                    } else {
                        ViolationKind::UnknownValue
                    };
                    return Err(SpecViolation {
                        kind,
                        at: Box::new(op.clone()),
                        expected: Some(expected),
                        got: Some(got),
                        culprit: latest.cloned().map(Box::new),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Per register, no data value is written twice.
pub fn check_unique_writes(h: &History, _spec: &RegisterSpec) -> Result<(), SpecViolation> {
    let mut seen: BTreeMap<(&RegisterId, &Value), &Operation> = BTreeMap::new();
    for op in h.operations().iter().filter(|o| o.is_write()) {
        let Some(v) = op.written.as_ref() else { continue };
        if let Some(first) = seen.insert((&op.register, v), op) {
            return Err(SpecViolation {
                kind: ViolationKind::DuplicateWrite,
                at: Box::new(op.clone()),
                expected: None,
                got: Some(v.clone()),
                culprit: Some(Box::new(first.clone())),
            });
        }
    }
    Ok(())
}

/// Every write is issued by the register's designated writer. Writes to
/// undeclared registers count as wrong-writer.
pub fn check_single_writer(h: &History, spec: &RegisterSpec) -> Result<(), SpecViolation> {
    for op in h.operations().iter().filter(|o| o.is_write()) {
        if spec.writer(&op.register) != Some(op.client) {
            return Err(SpecViolation {
                kind: ViolationKind::WrongWriter,
                at: Box::new(op.clone()),
                expected: None,
                got: None,
                culprit: None,
            });
        }
    }
    Ok(())
}

/// Both history-level register preconditions of the checkers.
pub fn check_register_preconditions(h: &History, spec: &RegisterSpec) -> Result<(), SpecViolation> {
    check_single_writer(h, spec)?;
    check_unique_writes(h, spec)
}

/// Data values written to `register` anywhere in `h`, in invocation order.
pub fn written_values<'h>(h: &'h History, register: &RegisterId) -> Vec<&'h Value> {
    let mut seen = BTreeSet::new();
    h.operations()
        .iter()
        .filter(|o| o.is_write() && &o.register == register)
        .filter_map(|o| o.written.as_ref())
        .filter(|v| seen.insert(*v))
        .collect()
}

//! Events, operations and histories of SWMR registers.
//!
//! A [`History`] is a finite sequence of invocation and response events. It is
//! validated on construction: per client, events alternate between invocation
//! and matching response, starting with an invocation. Operations are derived
//! from the events and identified by `(client, invocation index)`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A client identifier, `C_1 ... C_n`. Always at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(pub u32);

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

/// Name of a register. Its designated writer lives in
/// [`RegisterSpec`](crate::register::RegisterSpec).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegisterId(pub String);

impl RegisterId {
    pub fn new(name: impl Into<String>) -> Self {
        RegisterId(name.into())
    }
}

impl fmt::Display for RegisterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A register value. `Bottom` is the initial value and is never written.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bottom,
    Data(String),
}

impl Value {
    pub fn data(s: impl Into<String>) -> Self {
        Value::Data(s.into())
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Value::Bottom)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bottom => f.write_str("⊥"),
            Value::Data(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Read,
    Write,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "inv")]
    Invocation,
    #[serde(rename = "res")]
    Response,
}

/// One invocation or response at a client.
///
/// `value` is the payload of a write invocation or the return of a read
/// response; read invocations and write responses carry `None`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub kind: EventKind,
    pub client: ClientId,
    pub op: OpKind,
    pub register: RegisterId,
    pub value: Option<Value>,
    pub label: Option<String>,
}

impl Event {
    pub fn invoke_write(client: ClientId, register: &RegisterId, value: Value) -> Self {
        Event {
            kind: EventKind::Invocation,
            client,
            op: OpKind::Write,
            register: register.clone(),
            value: Some(value),
            label: None,
        }
    }

    pub fn write_ok(client: ClientId, register: &RegisterId) -> Self {
        Event {
            kind: EventKind::Response,
            client,
            op: OpKind::Write,
            register: register.clone(),
            value: None,
            label: None,
        }
    }

    pub fn invoke_read(client: ClientId, register: &RegisterId) -> Self {
        Event {
            kind: EventKind::Invocation,
            client,
            op: OpKind::Read,
            register: register.clone(),
            value: None,
            label: None,
        }
    }

    pub fn read_returns(client: ClientId, register: &RegisterId, value: Value) -> Self {
        Event {
            kind: EventKind::Response,
            client,
            op: OpKind::Read,
            register: register.clone(),
            value: Some(value),
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

/// Operations are identified by their client and the history index of their
/// invocation, never by value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OpId {
    pub client: ClientId,
    pub inv_index: usize,
}

/// A read or write derived from a history, possibly pending.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Operation {
    pub client: ClientId,
    pub kind: OpKind,
    pub register: RegisterId,
    /// Value written; `None` for reads.
    pub written: Option<Value>,
    /// Value returned; present only for complete reads.
    pub returned: Option<Value>,
    pub inv_index: usize,
    pub res_index: Option<usize>,
    pub label: Option<String>,
}

impl Operation {
    pub fn id(&self) -> OpId {
        OpId {
            client: self.client,
            inv_index: self.inv_index,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.res_index.is_some()
    }

    pub fn is_write(&self) -> bool {
        self.kind == OpKind::Write
    }

    pub fn is_read(&self) -> bool {
        self.kind == OpKind::Read
    }

    /// Human-readable name: the label if present, else a synthesized one.
    pub fn name(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => {
                let k = match self.kind {
                    OpKind::Read => "read",
                    OpKind::Write => "write",
                };
                format!("{k}@{}#{}", self.client, self.inv_index)
            }
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            OpKind::Write => write!(
                f,
                "{} = write_{}({}, {})",
                self.name(),
                self.client.0,
                self.register,
                self.written.as_ref().unwrap_or(&Value::Bottom)
            ),
            OpKind::Read => match &self.returned {
                Some(v) => write!(
                    f,
                    "{} = read_{}({}) -> {}",
                    self.name(),
                    self.client.0,
                    self.register,
                    v
                ),
                None => write!(
                    f,
                    "{} = read_{}({}) -> (pending)",
                    self.name(),
                    self.client.0,
                    self.register
                ),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WellFormednessRule {
    /// Client ids start at 1.
    ClientIdZero,
    /// An invocation while the client still has an operation outstanding.
    InvocationWhilePending,
    /// A response with no outstanding invocation at that client.
    ResponseWithoutInvocation,
    /// Response disagrees with its invocation on operation kind or register.
    MismatchedResponse,
    /// Read invocations and write responses carry no value; write
    /// invocations carry a data value and read responses carry a value.
    BadValue,
}

impl fmt::Display for WellFormednessRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WellFormednessRule::ClientIdZero => "client ids must be at least 1",
            WellFormednessRule::InvocationWhilePending => {
                "invocation while the client has a pending operation"
            }
            WellFormednessRule::ResponseWithoutInvocation => {
                "response without a pending invocation"
            }
            WellFormednessRule::MismatchedResponse => {
                "response does not match its invocation"
            }
            WellFormednessRule::BadValue => "value field not allowed for this event",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("ill-formed history at event {index}: {rule}")]
pub struct WellFormednessViolation {
    pub index: usize,
    pub rule: WellFormednessRule,
}

/// Checks that the per-client event sequences alternate invocation and
/// matching response, starting with an invocation.
pub fn validate_well_formed(events: &[Event]) -> Result<(), WellFormednessViolation> {
    derive_operations(events).map(|_| ())
}

fn derive_operations(events: &[Event]) -> Result<Vec<Operation>, WellFormednessViolation> {
    let mut ops: Vec<Operation> = Vec::new();
    // client -> position in `ops` of its pending operation
    let mut pending: std::collections::BTreeMap<ClientId, usize> = Default::default();
    for (index, e) in events.iter().enumerate() {
        let fail = |rule| Err(WellFormednessViolation { index, rule });
        if e.client.0 == 0 {
            return fail(WellFormednessRule::ClientIdZero);
        }
        match e.kind {
            EventKind::Invocation => {
                if pending.contains_key(&e.client) {
                    return fail(WellFormednessRule::InvocationWhilePending);
                }
                let written = match (e.op, &e.value) {
                    (OpKind::Read, None) => None,
                    (OpKind::Write, Some(v @ Value::Data(_))) => Some(v.clone()),
                    _ => return fail(WellFormednessRule::BadValue),
                };
                pending.insert(e.client, ops.len());
                ops.push(Operation {
                    client: e.client,
                    kind: e.op,
                    register: e.register.clone(),
                    written,
                    returned: None,
                    inv_index: index,
                    res_index: None,
                    label: e.label.clone(),
                });
            }
            EventKind::Response => {
                let Some(slot) = pending.remove(&e.client) else {
                    return fail(WellFormednessRule::ResponseWithoutInvocation);
                };
                let op = &mut ops[slot];
                if op.kind != e.op || op.register != e.register {
                    return fail(WellFormednessRule::MismatchedResponse);
                }
                match (e.op, &e.value) {
                    (OpKind::Write, None) => {}
                    (OpKind::Read, Some(v)) => op.returned = Some(v.clone()),
                    _ => return fail(WellFormednessRule::BadValue),
                }
                op.res_index = Some(index);
                if op.label.is_none() {
                    op.label = e.label.clone();
                }
            }
        }
    }
    Ok(ops)
}

/// A well-formed finite history.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct History {
    events: Vec<Event>,
    ops: Vec<Operation>,
}

impl History {
    pub fn new(events: Vec<Event>) -> Result<Self, WellFormednessViolation> {
        let ops = derive_operations(&events)?;
        Ok(History { events, ops })
    }

    pub fn empty() -> Self {
        History {
            events: Vec::new(),
            ops: Vec::new(),
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// All operations in invocation order.
    pub fn operations(&self) -> &[Operation] {
        &self.ops
    }

    pub fn op(&self, id: OpId) -> Option<&Operation> {
        self.ops
            .binary_search_by_key(&id.inv_index, |o| o.inv_index)
            .ok()
            .map(|i| &self.ops[i])
            .filter(|o| o.client == id.client)
    }

    /// Operations without a response, in invocation order.
    pub fn pending_ops(&self) -> Vec<&Operation> {
        self.ops.iter().filter(|o| !o.is_complete()).collect()
    }

    /// Clients that have at least one event, ascending.
    pub fn clients(&self) -> BTreeSet<ClientId> {
        self.events.iter().map(|e| e.client).collect()
    }

    /// Operations of one client in program order.
    pub fn client_ops(&self, c: ClientId) -> Vec<&Operation> {
        self.ops.iter().filter(|o| o.client == c).collect()
    }

    /// Appends events, e.g. responses that complete pending operations.
    pub fn extended(&self, appended: &[Event]) -> Result<History, WellFormednessViolation> {
        let mut events = self.events.clone();
        events.extend_from_slice(appended);
        History::new(events)
    }
}

/// The complete operations of `h`, in invocation order.
pub fn complete_ops(h: &History) -> Vec<&Operation> {
    h.operations().iter().filter(|o| o.is_complete()).collect()
}

/// `o` precedes `o2` when `o` completes before `o2` is invoked.
pub fn precedes(o: &Operation, o2: &Operation) -> bool {
    matches!(o.res_index, Some(r) if r < o2.inv_index)
}

pub fn concurrent(o: &Operation, o2: &Operation) -> bool {
    !precedes(o, o2) && !precedes(o2, o)
}

/// Order-preserving restriction to one client.
pub trait ProjectClient {
    type Item;
    fn project_client(&self, c: ClientId) -> Vec<Self::Item>;
}

impl ProjectClient for History {
    type Item = Event;
    fn project_client(&self, c: ClientId) -> Vec<Event> {
        self.events.iter().filter(|e| e.client == c).cloned().collect()
    }
}

impl ProjectClient for View {
    type Item = Operation;
    fn project_client(&self, c: ClientId) -> Vec<Operation> {
        self.ops.iter().filter(|o| o.client == c).cloned().collect()
    }
}

/// A sequential permutation of complete operations, optionally attributed to
/// the client whose view it is.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct View {
    pub owner: Option<ClientId>,
    pub ops: Vec<Operation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ViewError {
    #[error("operation {0:?} appears more than once")]
    Duplicate(OpId),
    #[error("operation {0:?} is not complete")]
    Incomplete(OpId),
    #[error("operation {0:?} is not in the view")]
    NotInView(OpId),
}

impl View {
    pub fn new(owner: Option<ClientId>, ops: Vec<Operation>) -> Result<Self, ViewError> {
        let mut seen = BTreeSet::new();
        for o in &ops {
            if !o.is_complete() {
                return Err(ViewError::Incomplete(o.id()));
            }
            if !seen.insert(o.id()) {
                return Err(ViewError::Duplicate(o.id()));
            }
        }
        Ok(View { owner, ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ids(&self) -> Vec<OpId> {
        self.ops.iter().map(Operation::id).collect()
    }

    pub fn contains(&self, id: OpId) -> bool {
        self.position(id).is_some()
    }

    pub fn position(&self, id: OpId) -> Option<usize> {
        self.ops.iter().position(|o| o.id() == id)
    }

    /// The prefix of the view ending with `id`.
    pub fn prefix_through(&self, id: OpId) -> Result<View, ViewError> {
        let pos = self.position(id).ok_or(ViewError::NotInView(id))?;
        Ok(View {
            owner: self.owner,
            ops: self.ops[..=pos].to_vec(),
        })
    }

    pub fn restrict_to_client(&self, c: ClientId) -> View {
        View {
            owner: self.owner,
            ops: self.project_client(c),
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, o) in self.ops.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&o.name())?;
        }
        f.write_str("]")
    }
}

/// True iff no two operations of `v` appear in the opposite order of their
/// precedence in `h`. Operations of `v` that are pending in `h` precede
/// nothing.
pub fn preserves_real_time(v: &View, h: &History) -> bool {
    let in_h: Vec<Option<&Operation>> = v.ops.iter().map(|o| h.op(o.id())).collect();
    for (i, a) in in_h.iter().enumerate() {
        for b in &in_h[i + 1..] {
            if let (Some(a), Some(b)) = (a, b) {
                if precedes(b, a) {
                    return false;
                }
            }
        }
    }
    true
}

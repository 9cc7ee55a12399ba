//! Index-based form of the complete operations of an extended history, shared
//! by the searches.

use std::collections::BTreeMap;

use crate::history::{ClientId, History, Operation, RegisterId, Value};

/// Where a read's return value can come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ReadSource {
    Bottom,
    Write(usize),
    /// Written by no complete operation; the read can never be legal.
    Nowhere,
}

pub(crate) struct Compiled<'h> {
    /// Complete operations ordered by (client, invocation index).
    pub ops: Vec<&'h Operation>,
    pub clients: Vec<ClientId>,
    pub client_of: Vec<usize>,
    pub pos_of: Vec<usize>,
    pub per_client: Vec<Vec<usize>>,
    pub reg_of: Vec<usize>,
    pub nregs: usize,
    pub source: Vec<ReadSource>,
}

impl<'h> Compiled<'h> {
    /// `clients` fixes the client slots; clients of `extended` missing from
    /// it are not allowed.
    pub fn new(extended: &'h History, clients: &[ClientId]) -> Self {
        let slot: BTreeMap<ClientId, usize> =
            clients.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let mut ops: Vec<&Operation> = extended
            .operations()
            .iter()
            .filter(|o| o.is_complete())
            .collect();
        ops.sort_by_key(|o| (o.client, o.inv_index));

        let mut regs: BTreeMap<&RegisterId, usize> = BTreeMap::new();
        for o in &ops {
            let n = regs.len();
            regs.entry(&o.register).or_insert(n);
        }
        let mut per_client = vec![Vec::new(); clients.len()];
        let mut client_of = Vec::with_capacity(ops.len());
        let mut pos_of = Vec::with_capacity(ops.len());
        for (i, o) in ops.iter().enumerate() {
            let s = slot[&o.client];
            client_of.push(s);
            pos_of.push(per_client[s].len());
            per_client[s].push(i);
        }
        let reg_of: Vec<usize> = ops.iter().map(|o| regs[&o.register]).collect();

        let mut writes: BTreeMap<(usize, &Value), usize> = BTreeMap::new();
        for (i, o) in ops.iter().enumerate() {
            if let Some(v) = o.written.as_ref() {
                writes.insert((reg_of[i], v), i);
            }
        }
        let source = ops
            .iter()
            .enumerate()
            .map(|(i, o)| match &o.returned {
                None | Some(Value::Bottom) => ReadSource::Bottom,
                Some(v) => writes
                    .get(&(reg_of[i], v))
                    .map_or(ReadSource::Nowhere, |w| ReadSource::Write(*w)),
            })
            .collect();

        Compiled {
            nregs: regs.len(),
            ops,
            clients: clients.to_vec(),
            client_of,
            pos_of,
            per_client,
            reg_of,
            source,
        }
    }

    /// Whether `o` is legal when `store` holds the latest write per register.
    pub fn legal(&self, o: usize, store: &[Option<usize>]) -> bool {
        if self.ops[o].is_write() {
            return true;
        }
        match self.source[o] {
            ReadSource::Bottom => store[self.reg_of[o]].is_none(),
            ReadSource::Write(w) => store[self.reg_of[o]] == Some(w),
            ReadSource::Nowhere => false,
        }
    }
}

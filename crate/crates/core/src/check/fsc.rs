//! Fork sequential consistency as a search over trees of operations.
//!
//! No-join forces the views of all clients onto a tree rooted at the empty
//! sequence in which every operation labels at most one node: two views that
//! share an operation share everything before it, and once they diverge
//! their remainders are disjoint. The search grows such a tree directly.
//! Each open branch carries the clients whose views still extend it; at a
//! node the lowest such client either ends its view there, or moves on to a
//! child operation together with a chosen subset of the other clients. The
//! clients left behind continue from the same node with operations not yet
//! used anywhere in the tree.

use std::collections::{BTreeMap, HashSet};

use crate::history::{ClientId, History, View};
use crate::register::{check_register_preconditions, RegisterSpec};

use super::compiled::{Compiled, ReadSource};
use super::{
    client_slots, enumerate_extensions, BudgetUsed, CheckError, Exhausted, FscVerdict, Outcome,
    SearchBudget,
};

/// Decides whether `h` is fork-sequentially-consistent, returning one view
/// per client on a pass.
pub fn check_fork_sequential_consistency(
    h: &History,
    spec: &RegisterSpec,
    budget: &SearchBudget,
) -> Result<FscVerdict, CheckError> {
    budget.validate()?;
    check_register_preconditions(h, spec).map_err(CheckError::Precondition)?;

    let mut used = BudgetUsed::default();
    let clients = client_slots(h);
    if h.operations().len() > budget.max_ops {
        return Ok(inconclusive(
            format!(
                "{} operations exceed the budget of {}",
                h.operations().len(),
                budget.max_ops
            ),
            used,
        ));
    }
    if clients.len() > 64 {
        return Ok(inconclusive(
            format!("{} clients exceed the supported 64", clients.len()),
            used,
        ));
    }
    let extensions = enumerate_extensions(h, spec, budget);
    let truncated = extensions.truncated;
    let total = extensions.total;
    let mut first_reason: Option<String> = None;

    for ext in extensions {
        used.extensions += 1;
        let extended = ext.apply(h);
        let compiled = Compiled::new(&extended, &clients);
        let required: Vec<usize> = compiled
            .per_client
            .iter()
            .map(|ops| {
                ops.iter()
                    .filter(|&&o| h.op(compiled.ops[o].id()).is_some_and(|x| x.is_complete()))
                    .count()
            })
            .collect();
        let all: u64 = if clients.len() == 64 {
            u64::MAX
        } else {
            (1u64 << clients.len()) - 1
        };
        let mut search = TreeSearch::new(&compiled, &required, used.nodes, budget.max_nodes);
        let found = search.explore(State::root(&compiled, all));
        used.nodes = search.nodes;
        match found {
            Ok(Some(assigned)) => {
                let views = assigned
                    .into_iter()
                    .enumerate()
                    .map(|(slot, path)| {
                        let ops = path
                            .unwrap_or_default()
                            .into_iter()
                            .map(|i| compiled.ops[i].clone())
                            .collect();
                        let owner = clients[slot];
                        (owner, View { owner: Some(owner), ops })
                    })
                    .collect::<BTreeMap<ClientId, View>>();
                return Ok(FscVerdict {
                    outcome: Outcome::Pass,
                    views: Some(views),
                    extension: Some(ext),
                    reason: None,
                    used,
                });
            }
            Ok(None) => {
                if first_reason.is_none() {
                    if let Ok(r) = failing_condition(&compiled, &required, budget.max_nodes) {
                        first_reason = Some(r);
                    }
                }
            }
            Err(Exhausted) => {
                return Ok(inconclusive(
                    format!("node budget of {} exhausted", budget.max_nodes),
                    used,
                ))
            }
        }
    }
    if truncated {
        return Ok(inconclusive(
            format!("only {} of {} extensions examined", used.extensions, total),
            used,
        ));
    }
    Ok(FscVerdict {
        outcome: Outcome::Fail,
        views: None,
        extension: None,
        reason: Some(format!(
            "no extension ({} examined) admits views meeting all four conditions; {}",
            used.extensions,
            first_reason.unwrap_or_default()
        )),
        used,
    })
}

fn inconclusive(reason: String, used: BudgetUsed) -> FscVerdict {
    FscVerdict {
        outcome: Outcome::Inconclusive,
        views: None,
        extension: None,
        reason: Some(reason),
        used,
    }
}

/// Names the first condition that cannot be met: conditions 1-3 are tried for
/// each client alone; if every client has such a view, no-join is to blame.
fn failing_condition(c: &Compiled, required: &[usize], max_nodes: u64) -> Result<String, Exhausted> {
    for slot in 0..c.clients.len() {
        let mut alone = TreeSearch::new(c, required, 0, max_nodes);
        if alone.explore(State::root(c, 1u64 << slot))?.is_none() {
            return Ok(format!(
                "without the no-join condition, {} still has no view meeting conditions 1-3",
                c.clients[slot]
            ));
        }
    }
    Ok("every client has a view meeting conditions 1-3 on its own, but no family of views \
        satisfies no-join (condition 4)"
        .to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
}

#[derive(Clone, Debug)]
struct Branch {
    path: Vec<usize>,
    /// Per client slot, position of its last operation on the path.
    last: Vec<Option<usize>>,
    /// Per register, the last write on the path.
    store: Vec<Option<usize>>,
    /// Client slots whose views extend this path.
    group: u64,
}

impl Branch {
    fn next_pos(&self, slot: usize) -> usize {
        self.last[slot].map_or(0, |p| p + 1)
    }
}

#[derive(Clone, Debug)]
struct State {
    branches: Vec<Branch>,
    used: Bits,
    assigned: Vec<Option<Vec<usize>>>,
}

impl State {
    fn root(c: &Compiled, group: u64) -> Self {
        State {
            branches: vec![Branch {
                path: Vec::new(),
                last: vec![None; c.clients.len()],
                store: vec![None; c.nregs],
                group,
            }],
            used: Bits::new(c.ops.len()),
            assigned: vec![None; c.clients.len()],
        }
    }
}

type BranchKey = (Vec<Option<usize>>, Vec<Option<usize>>, u64);
type Key = (Bits, Vec<BranchKey>);

struct TreeSearch<'a, 'h> {
    c: &'a Compiled<'h>,
    required: &'a [usize],
    failed: HashSet<Key>,
    nodes: u64,
    max_nodes: u64,
}

fn members(group: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| group >> i & 1 == 1)
}

impl<'a, 'h> TreeSearch<'a, 'h> {
    fn new(c: &'a Compiled<'h>, required: &'a [usize], nodes: u64, max_nodes: u64) -> Self {
        TreeSearch {
            c,
            required,
            failed: HashSet::new(),
            nodes,
            max_nodes,
        }
    }

    fn key(st: &State) -> Key {
        let mut bs: Vec<BranchKey> = st
            .branches
            .iter()
            .map(|b| (b.last.clone(), b.store.clone(), b.group))
            .collect();
        bs.sort();
        (st.used.clone(), bs)
    }

    /// Cheap necessary condition: every member's outstanding own operations
    /// are still available, and each outstanding read can still see the
    /// value it returned.
    fn feasible(&self, st: &State) -> bool {
        let c = self.c;
        for b in &st.branches {
            for m in members(b.group) {
                for p in b.next_pos(m)..self.required[m] {
                    let o = c.per_client[m][p];
                    if st.used.get(o) {
                        return false;
                    }
                    if c.ops[o].is_write() {
                        continue;
                    }
                    let current = b.store[c.reg_of[o]];
                    let ok = match c.source[o] {
                        ReadSource::Nowhere => false,
                        ReadSource::Bottom => current.is_none(),
                        ReadSource::Write(w) => match current {
                            Some(s) if s == w => true,
                            Some(s) => c.pos_of[s] < c.pos_of[w] && !st.used.get(w),
                            None => !st.used.get(w),
                        },
                    };
                    if !ok {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn can_extend(&self, st: &State, b: &Branch, o: usize) -> bool {
        let c = self.c;
        !st.used.get(o)
            && b.last[c.client_of[o]].is_none_or(|p| c.pos_of[o] > p)
            && c.legal(o, &b.store)
    }

    fn explore(&mut self, mut st: State) -> Result<Option<Vec<Option<Vec<usize>>>>, Exhausted> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Exhausted);
        }
        st.branches.retain(|b| b.group != 0);
        if st.branches.is_empty() {
            return Ok(Some(st.assigned));
        }
        if !self.feasible(&st) {
            return Ok(None);
        }
        let key = Self::key(&st);
        if self.failed.contains(&key) {
            return Ok(None);
        }

        let bi = st.branches.len() - 1;
        let b = st.branches[bi].clone();
        let lead = b.group.trailing_zeros() as usize;
        let lead_bit = 1u64 << lead;

        // The lead client's view ends here.
        if b.next_pos(lead) >= self.required[lead] {
            let mut next = st.clone();
            next.branches[bi].group &= !lead_bit;
            next.assigned[lead] = Some(b.path.clone());
            if let Some(done) = self.explore(next)? {
                return Ok(Some(done));
            }
        }

        // The lead client continues with `o`, joined by a subset of the rest.
        let others = b.group & !lead_bit;
        for o in 0..self.c.ops.len() {
            if !self.can_extend(&st, &b, o) {
                continue;
            }
            let owner = self.c.client_of[o];
            // a member may only take its own next operation
            let may_travel = |m: usize| m != owner || b.next_pos(m) == self.c.pos_of[o];
            if !may_travel(lead) {
                continue;
            }
            let eligible = members(others)
                .filter(|&m| may_travel(m))
                .fold(0u64, |acc, m| acc | 1 << m);

            let mut child = b.clone();
            child.path.push(o);
            child.last[owner] = Some(self.c.pos_of[o]);
            if self.c.ops[o].is_write() {
                child.store[self.c.reg_of[o]] = Some(o);
            }

            let mut subset = eligible;
            loop {
                let mut next = st.clone();
                next.used.set(o);
                next.branches[bi].group = others & !subset;
                let mut ch = child.clone();
                ch.group = lead_bit | subset;
                next.branches.push(ch);
                if let Some(done) = self.explore(next)? {
                    return Ok(Some(done));
                }
                if subset == 0 {
                    break;
                }
                subset = (subset - 1) & eligible;
            }
        }
        self.failed.insert(key);
        Ok(None)
    }
}

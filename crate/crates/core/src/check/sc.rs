use std::collections::HashSet;

use crate::history::{History, View};
use crate::register::{check_register_preconditions, RegisterSpec};

use super::compiled::Compiled;
use super::{
    client_slots, enumerate_extensions, BudgetUsed, CheckError, Exhausted, Outcome, ScVerdict,
    SearchBudget,
};

/// Decides whether `h` is sequentially consistent.
///
/// Extensions are tried in the order of [`enumerate_extensions`]. For each,
/// a depth-first search places one client's next operation at a time, in
/// client-id order, and prunes on the first illegal read. Since every
/// register has a single writer, the register contents are a function of how
/// far each client has progressed, so failed progress vectors are memoized.
/// Only each client's own real-time order is enforced.
pub fn check_sequential_consistency(
    h: &History,
    spec: &RegisterSpec,
    budget: &SearchBudget,
) -> Result<ScVerdict, CheckError> {
    budget.validate()?;
    check_register_preconditions(h, spec).map_err(CheckError::Precondition)?;

    let mut used = BudgetUsed::default();
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
    let clients = client_slots(h);
    let extensions = enumerate_extensions(h, spec, budget);
    let truncated = extensions.truncated;
    let total = extensions.total;
    let mut first_stuck: Option<String> = None;

    for ext in extensions {
        used.extensions += 1;
        let extended = ext.apply(h);
        let compiled = Compiled::new(&extended, &clients);
        let mut search = ScSearch {
            c: &compiled,
            failed: HashSet::new(),
            nodes: used.nodes,
            max_nodes: budget.max_nodes,
            seq: Vec::new(),
            deepest: Vec::new(),
        };
        let mut pos = vec![0usize; clients.len()];
        let mut store = vec![None; compiled.nregs];
        let found = search.dfs(&mut pos, &mut store);
        used.nodes = search.nodes;
        match found {
            Ok(true) => {
                let ops = search.seq.iter().map(|&i| compiled.ops[i].clone()).collect();
                return Ok(ScVerdict {
                    outcome: Outcome::Pass,
                    witness: Some(View { owner: None, ops }),
                    extension: Some(ext),
                    reason: None,
                    used,
                });
            }
            Ok(false) => {
                if first_stuck.is_none() {
                    first_stuck = Some(search.describe_stuck());
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
            format!(
                "only {} of {} extensions examined",
                used.extensions, total
            ),
            used,
        ));
    }
    Ok(ScVerdict {
        outcome: Outcome::Fail,
        witness: None,
        extension: None,
        reason: Some(format!(
            "no extension ({} examined) admits a legal sequential permutation that keeps each \
             client's order; {}",
            used.extensions,
            first_stuck.unwrap_or_default()
        )),
        used,
    })
}

fn inconclusive(reason: String, used: BudgetUsed) -> ScVerdict {
    ScVerdict {
        outcome: Outcome::Inconclusive,
        witness: None,
        extension: None,
        reason: Some(reason),
        used,
    }
}

struct ScSearch<'a, 'h> {
    c: &'a Compiled<'h>,
    failed: HashSet<Vec<usize>>,
    nodes: u64,
    max_nodes: u64,
    seq: Vec<usize>,
    deepest: Vec<usize>,
}

impl ScSearch<'_, '_> {
    fn dfs(&mut self, pos: &mut [usize], store: &mut [Option<usize>]) -> Result<bool, Exhausted> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Exhausted);
        }
        if self.seq.len() == self.c.ops.len() {
            return Ok(true);
        }
        if self.failed.contains(pos) {
            return Ok(false);
        }
        if self.seq.len() > self.deepest.len() {
            self.deepest = self.seq.clone();
        }
        for slot in 0..pos.len() {
            let Some(&o) = self.c.per_client[slot].get(pos[slot]) else {
                continue;
            };
            if !self.c.legal(o, store) {
                continue;
            }
            let reg = self.c.reg_of[o];
            let saved = store[reg];
            if self.c.ops[o].is_write() {
                store[reg] = Some(o);
            }
            pos[slot] += 1;
            self.seq.push(o);
            if self.dfs(pos, store)? {
                return Ok(true);
            }
            self.seq.pop();
            pos[slot] -= 1;
            store[reg] = saved;
        }
        self.failed.insert(pos.to_vec());
        Ok(false)
    }

    /// Where the longest legal prefix got stuck.
    fn describe_stuck(&self) -> String {
        let names: Vec<String> = self.deepest.iter().map(|&i| self.c.ops[i].name()).collect();
        let mut next = Vec::new();
        let mut pos = vec![0usize; self.c.clients.len()];
        for &i in &self.deepest {
            pos[self.c.client_of[i]] += 1;
        }
        for (slot, p) in pos.iter().enumerate() {
            if let Some(&o) = self.c.per_client[slot].get(*p) {
                next.push(self.c.ops[o].to_string());
            }
        }
        format!(
            "longest legal prefix [{}] cannot continue with any of: {}",
            names.join(", "),
            next.join("; ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{ClientId, Event, RegisterId, Value};

    const C1: ClientId = ClientId(1);
    const C2: ClientId = ClientId(2);

    fn x(n: &str) -> RegisterId {
        RegisterId::new(n)
    }

    fn sc(events: Vec<Event>) -> ScVerdict {
        let h = History::new(events).unwrap();
        check_sequential_consistency(&h, &RegisterSpec::standard(2), &SearchBudget::default())
            .unwrap()
    }

    #[test]
    fn empty_history_passes() {
        let v = sc(vec![]);
        assert_eq!(v.outcome, Outcome::Pass);
        assert!(v.witness.unwrap().is_empty());
    }

    #[test]
    fn own_write_then_bottom_read_fails() {
        let v = sc(vec![
            Event::invoke_write(C1, &x("X1"), Value::data("u")),
            Event::write_ok(C1, &x("X1")),
            Event::invoke_read(C1, &x("X1")),
            Event::read_returns(C1, &x("X1"), Value::Bottom),
        ]);
        assert_eq!(v.outcome, Outcome::Fail);
        assert!(v.reason.unwrap().contains("cannot continue"));
    }

    #[test]
    fn cross_client_real_time_is_not_enforced() {
        // C1's write completes before C2's read starts, yet C2 reads ⊥.
        let v = sc(vec![
            Event::invoke_write(C1, &x("X1"), Value::data("u")),
            Event::write_ok(C1, &x("X1")),
            Event::invoke_read(C2, &x("X1")),
            Event::read_returns(C2, &x("X1"), Value::Bottom),
        ]);
        assert_eq!(v.outcome, Outcome::Pass);
        let w = v.witness.unwrap();
        assert!(w.ops[0].is_read());
    }

    #[test]
    fn pending_write_may_be_completed_to_justify_a_read() {
        let v = sc(vec![
            Event::invoke_write(C1, &x("X1"), Value::data("u")),
            Event::invoke_read(C2, &x("X1")),
            Event::read_returns(C2, &x("X1"), Value::data("u")),
        ]);
        assert_eq!(v.outcome, Outcome::Pass);
        assert_eq!(v.extension.unwrap().len(), 1);
    }

    #[test]
    fn precondition_violations_are_errors() {
        let h = History::new(vec![
            Event::invoke_write(C2, &x("X1"), Value::data("u")),
            Event::write_ok(C2, &x("X1")),
        ])
        .unwrap();
        let err = check_sequential_consistency(&h, &RegisterSpec::standard(2), &SearchBudget::default());
        assert!(matches!(err, Err(CheckError::Precondition(_))));
    }

    #[test]
    fn tiny_node_budget_is_inconclusive() {
        let h = History::new(vec![
            Event::invoke_write(C1, &x("X1"), Value::data("u")),
            Event::write_ok(C1, &x("X1")),
            Event::invoke_read(C1, &x("X1")),
            Event::read_returns(C1, &x("X1"), Value::Bottom),
        ])
        .unwrap();
        let budget = SearchBudget {
            max_nodes: 1,
            ..SearchBudget::default()
        };
        let v = check_sequential_consistency(&h, &RegisterSpec::standard(2), &budget).unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
        let zero = SearchBudget {
            max_nodes: 0,
            ..SearchBudget::default()
        };
        assert!(matches!(
            check_sequential_consistency(&h, &RegisterSpec::standard(2), &zero),
            Err(CheckError::InvalidBudget(_))
        ));
    }
}

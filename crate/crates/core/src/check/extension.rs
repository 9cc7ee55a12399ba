//! Extensions σ' of a history: zero or more pending operations completed by
//! appended response events.

use crate::history::{Event, History, OpId, OpKind, Operation, Value};
use crate::register::{written_values, RegisterSpec};

use super::SearchBudget;

/// How one pending operation is completed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtensionChoice {
    WriteOk,
    ReadReturns(Value),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extension {
    /// Pending operations completed, in invocation order.
    pub completed: Vec<(OpId, ExtensionChoice)>,
    /// The response events appended to the base history.
    pub appended: Vec<Event>,
}

impl Extension {
    pub fn none() -> Self {
        Extension {
            completed: Vec::new(),
            appended: Vec::new(),
        }
    }

    fn build(base: &History, chosen: &[(&Operation, ExtensionChoice)]) -> Self {
        let mut completed = Vec::new();
        let mut appended = Vec::new();
        for (op, choice) in chosen {
            let mut e = match choice {
                ExtensionChoice::WriteOk => Event::write_ok(op.client, &op.register),
                ExtensionChoice::ReadReturns(v) => {
                    Event::read_returns(op.client, &op.register, v.clone())
                }
            };
            // keep the invocation's label on the synthesized response
            e.label = base.events()[op.inv_index].label.clone();
            appended.push(e);
            completed.push((op.id(), choice.clone()));
        }
        Extension {
            completed,
            appended,
        }
    }

    /// The extended history σ'.
    pub fn apply(&self, base: &History) -> History {
        base.extended(&self.appended)
            .expect("extension completes pending operations only")
    }

    pub fn len(&self) -> usize {
        self.appended.len()
    }

    pub fn is_empty(&self) -> bool {
        self.appended.is_empty()
    }
}

/// Extensions in the order searched, plus whether the budget cut the list.
#[derive(Clone, Debug)]
pub struct Extensions {
    items: std::vec::IntoIter<Extension>,
    /// Number of extensions that exist, saturating.
    pub total: u128,
    pub truncated: bool,
}

impl Iterator for Extensions {
    type Item = Extension;
    fn next(&mut self) -> Option<Extension> {
        self.items.next()
    }
}

/// Completion options of one pending operation, not counting "dropped".
fn completions(h: &History, op: &Operation) -> Vec<ExtensionChoice> {
    match op.kind {
        OpKind::Write => vec![ExtensionChoice::WriteOk],
        OpKind::Read => std::iter::once(Value::Bottom)
            .chain(written_values(h, &op.register).into_iter().cloned())
            .map(ExtensionChoice::ReadReturns)
            .collect(),
    }
}

/// Every way of completing a subset of the pending operations. Pending
/// writes complete with ok; pending reads return ⊥ or a value written to the
/// same register somewhere in `h`. Ordered by the number of appended
/// responses, then lexicographically over pending operations and choices.
pub fn enumerate_extensions(h: &History, _spec: &RegisterSpec, budget: &SearchBudget) -> Extensions {
    let pending = h.pending_ops();
    let options: Vec<Vec<ExtensionChoice>> = pending.iter().map(|o| completions(h, o)).collect();
    let total = options
        .iter()
        .fold(1u128, |acc, o| acc.saturating_mul(o.len() as u128 + 1));

    let mut out = Vec::new();
    let cap = budget.max_extensions;
    'outer: for k in 0..=pending.len() {
        for subset in combinations(pending.len(), k) {
            let mut idx = vec![0usize; k];
            loop {
                if out.len() >= cap {
                    break 'outer;
                }
                let chosen: Vec<(&Operation, ExtensionChoice)> = subset
                    .iter()
                    .zip(&idx)
                    .map(|(&p, &i)| (pending[p], options[p][i].clone()))
                    .collect();
                out.push(Extension::build(h, &chosen));
                if !advance(&mut idx, |d| options[subset[d]].len()) {
                    break;
                }
            }
        }
    }
    let truncated = (out.len() as u128) < total;
    Extensions {
        items: out.into_iter(),
        total,
        truncated,
    }
}

/// Odometer step, last digit fastest. False once every digit wrapped.
fn advance(idx: &mut [usize], limit: impl Fn(usize) -> usize) -> bool {
    for d in (0..idx.len()).rev() {
        idx[d] += 1;
        if idx[d] < limit(d) {
            return true;
        }
        idx[d] = 0;
    }
    false
}

/// k-subsets of 0..n in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{ClientId, RegisterId};

    const C1: ClientId = ClientId(1);
    const C2: ClientId = ClientId(2);

    fn x(n: &str) -> RegisterId {
        RegisterId::new(n)
    }

    #[test]
    fn no_pending_ops_gives_the_history_itself() {
        let h = History::new(vec![
            Event::invoke_write(C1, &x("X1"), Value::data("u")),
            Event::write_ok(C1, &x("X1")),
        ])
        .unwrap();
        let ext: Vec<_> =
            enumerate_extensions(&h, &RegisterSpec::standard(2), &SearchBudget::default()).collect();
        assert_eq!(ext.len(), 1);
        assert!(ext[0].is_empty());
        assert_eq!(ext[0].apply(&h), h);
    }

    #[test]
    fn pending_write_dropped_or_completed() {
        let h = History::new(vec![Event::invoke_write(C1, &x("X1"), Value::data("u"))]).unwrap();
        let ext: Vec<_> =
            enumerate_extensions(&h, &RegisterSpec::standard(2), &SearchBudget::default()).collect();
        assert_eq!(ext.len(), 2);
        assert!(ext[0].is_empty());
        assert_eq!(ext[1].completed[0].1, ExtensionChoice::WriteOk);
        assert!(ext[1].apply(&h).operations()[0].is_complete());
    }

    #[test]
    fn pending_read_returns_each_written_value() {
        let h = History::new(vec![
            Event::invoke_write(C2, &x("X2"), Value::data("v1")),
            Event::write_ok(C2, &x("X2")),
            Event::invoke_write(C2, &x("X2"), Value::data("v2")),
            Event::write_ok(C2, &x("X2")),
            Event::invoke_read(C1, &x("X2")),
        ])
        .unwrap();
        let ext: Vec<_> =
            enumerate_extensions(&h, &RegisterSpec::standard(2), &SearchBudget::default()).collect();
        // dropped, ⊥, v1, v2
        assert_eq!(ext.len(), 4);
        let returns: Vec<_> = ext[1..]
            .iter()
            .map(|e| e.completed[0].1.clone())
            .collect();
        assert_eq!(
            returns,
            vec![
                ExtensionChoice::ReadReturns(Value::Bottom),
                ExtensionChoice::ReadReturns(Value::data("v1")),
                ExtensionChoice::ReadReturns(Value::data("v2")),
            ]
        );
    }

    #[test]
    fn ordered_by_appended_count_and_truncated_by_budget() {
        let h = History::new(vec![
            Event::invoke_write(C1, &x("X1"), Value::data("u")),
            Event::invoke_read(C2, &x("X1")),
        ])
        .unwrap();
        let all: Vec<_> =
            enumerate_extensions(&h, &RegisterSpec::standard(2), &SearchBudget::default()).collect();
        // (1 + 1) * (1 + 2)
        assert_eq!(all.len(), 6);
        let counts: Vec<_> = all.iter().map(Extension::len).collect();
        assert_eq!(counts, vec![0, 1, 1, 1, 2, 2]);

        let budget = SearchBudget {
            max_extensions: 3,
            ..SearchBudget::default()
        };
        let cut = enumerate_extensions(&h, &RegisterSpec::standard(2), &budget);
        assert!(cut.truncated);
        assert_eq!(cut.total, 6);
        assert_eq!(cut.count(), 3);
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(
            combinations(3, 2),
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert_eq!(combinations(2, 0), vec![Vec::<usize>::new()]);
    }
}

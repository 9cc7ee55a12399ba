//! Prose refutations.
//!
//! For fork sequential consistency this looks for a fork chain: clients
//! `Ci != Cj`, a read `rho` of `Ci` returning the value of a write `o` of
//! `Cj`, an earlier read `anchor` of `Ci` that still saw an older value of
//! the same register, and a later read `r` of `Cj` that returns a value
//! overwritten by some write `w` of `Ci` issued no later than `anchor`.
//! Then in every family of views:
//!
//! 1. `o` lies between `anchor` and `rho` in `Ci`'s view;
//! 2. `o` is in `Cj`'s view too, with the same prefix, so `w` precedes `o`
//!    there;
//! 3. `o` precedes `r` in `Cj`'s view by `Cj`'s own order;
//! 4. `r` therefore reads after `w` and cannot return the older value.
//!
//! Each link holds in every extension because all operations involved are
//! complete. When no chain exists the checker's own reason is printed.

use std::collections::BTreeSet;

use crate::check::{
    check_fork_sequential_consistency, check_sequential_consistency, check_wait_freedom,
    CheckError, Outcome, SearchBudget, WaitFreedom,
};
use crate::history::{ClientId, History, Operation, Value, View};
use crate::register::{check_sequential_spec, RegisterSpec};
use crate::report::Property;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Explanation {
    pub outcome: Outcome,
    pub lines: Vec<String>,
}

impl Explanation {
    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

/// The four links of a fork chain, by operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForkChain<'h> {
    pub i: ClientId,
    pub j: ClientId,
    pub rho: &'h Operation,
    pub o: &'h Operation,
    pub anchor: &'h Operation,
    /// `Ci`'s write that `r` cannot have missed.
    pub w: &'h Operation,
    pub r: &'h Operation,
}

fn writer_of<'h>(h: &'h History, reg: &crate::history::RegisterId, v: &Value) -> Option<&'h Operation> {
    h.operations()
        .iter()
        .find(|o| o.is_complete() && o.register == *reg && o.written.as_ref() == Some(v))
}

/// Whether a read returning `v` must be ordered before write `w`: `v` is ⊥
/// or was written earlier by `w`'s client.
fn older_than(h: &History, v: &Value, w: &Operation) -> bool {
    match v {
        Value::Bottom => true,
        Value::Data(_) => h.operations().iter().any(|x| {
            x.register == w.register
                && x.written.as_ref() == Some(v)
                && x.client == w.client
                && x.inv_index < w.inv_index
        }),
    }
}

/// The first fork chain in (client, program order).
pub fn find_fork_chain(h: &History) -> Option<ForkChain<'_>> {
    for i in h.clients() {
        let mine: Vec<&Operation> = h.client_ops(i).into_iter().filter(|o| o.is_complete()).collect();
        for (k, rho) in mine.iter().enumerate() {
            let Some(v @ Value::Data(_)) = rho.returned.as_ref() else {
                continue;
            };
            let Some(o) = writer_of(h, &rho.register, v) else {
                continue;
            };
            let j = o.client;
            if j == i {
                continue;
            }
            let Some(a) = mine[..k].iter().rposition(|x| {
                x.is_read()
                    && x.register == rho.register
                    && x.returned.as_ref().is_some_and(|rv| older_than(h, rv, o))
            }) else {
                continue;
            };
            let prefix = &mine[..=a];
            let theirs: Vec<&Operation> = h
                .client_ops(j)
                .into_iter()
                .filter(|x| x.is_complete() && x.inv_index > o.inv_index)
                .collect();
            for r in theirs.iter().filter(|x| x.is_read()) {
                let rv = r.returned.as_ref().expect("complete read");
                let w = prefix.iter().rev().find(|x| {
                    x.is_write() && x.register == r.register && older_than(h, rv, x)
                });
                if let Some(w) = w {
                    return Some(ForkChain {
                        i,
                        j,
                        rho,
                        o,
                        anchor: mine[a],
                        w,
                        r,
                    });
                }
            }
        }
    }
    None
}

fn show(v: Option<&Value>) -> String {
    v.map_or_else(|| "⊥".into(), |v| v.to_string())
}

impl ForkChain<'_> {
    /// `Cj`'s view segment the chain forces, ending at `r`.
    pub fn forced_segment(&self, h: &History) -> View {
        let mut ops: Vec<Operation> = h
            .client_ops(self.i)
            .into_iter()
            .filter(|x| x.inv_index <= self.anchor.inv_index)
            .cloned()
            .collect();
        ops.extend(
            h.client_ops(self.j)
                .into_iter()
                .filter(|x| x.inv_index >= self.o.inv_index && x.inv_index <= self.r.inv_index)
                .cloned(),
        );
        View::new(Some(self.j), ops).expect("forced segment has distinct complete operations")
    }

    pub fn steps(&self, h: &History, spec: &RegisterSpec) -> Vec<String> {
        let (i, j) = (self.i, self.j);
        let (o, rho, a, w, r) = (
            self.o.name(),
            self.rho.name(),
            self.anchor.name(),
            self.w.name(),
            self.r.name(),
        );
        let step4 = match check_sequential_spec(&self.forced_segment(h), spec) {
            Err(v) if v.at.id() == self.r.id() => v.to_string(),
            _ => format!(
                "{r} returns {} although {w} wrote {} later",
                show(self.r.returned.as_ref()),
                show(self.w.written.as_ref())
            ),
        };
        vec![
            format!(
                "1. forced placement: {rho} returns {} and only {o} writes it, so {o} precedes \
                 {rho} in {i}'s view; {a} returned {} from {}, so {o} follows {a}. \
                 {o} lies between {a} and {rho} in {i}'s view.",
                show(self.rho.returned.as_ref()),
                show(self.anchor.returned.as_ref()),
                self.anchor.register
            ),
            format!(
                "2. no-join: {o} is {j}'s own operation, so {j}'s view contains it with the same \
                 prefix as {i}'s view. That prefix holds {i}'s operations through {a}, \
                 among them {w} (writes {} to {}), so {w} precedes {o} in {j}'s view.",
                show(self.w.written.as_ref()),
                self.w.register
            ),
            format!(
                "3. real-time order: {j} invokes {r} after {o} returns, so {o} precedes {r} \
                 in {j}'s view, and {w} precedes {r} as well."
            ),
            format!("4. register specification: {step4}."),
        ]
    }
}

/// Explains the verdict of `property` on `h`.
pub fn explain(
    h: &History,
    spec: &RegisterSpec,
    property: Property,
    correct: &BTreeSet<ClientId>,
    budget: &SearchBudget,
) -> Result<Explanation, CheckError> {
    let no_cex = |outcome| Explanation {
        outcome,
        lines: vec!["no counterexample".into()],
    };
    match property {
        Property::Wf => Ok(match check_wait_freedom(h, correct) {
            WaitFreedom::Pass => no_cex(Outcome::Pass),
            WaitFreedom::Fail(o) => Explanation {
                outcome: Outcome::Fail,
                lines: vec![
                    "wait-freedom fails:".into(),
                    format!("{o} is pending and {} is a correct client.", o.client),
                ],
            },
        }),
        Property::Sc => {
            let v = check_sequential_consistency(h, spec, budget)?;
            Ok(match v.outcome {
                Outcome::Pass => no_cex(Outcome::Pass),
                outcome => Explanation {
                    outcome,
                    lines: vec![
                        format!("sequential consistency: {outcome}"),
                        v.reason.unwrap_or_default(),
                    ],
                },
            })
        }
        Property::Fsc => {
            let v = check_fork_sequential_consistency(h, spec, budget)?;
            match v.outcome {
                Outcome::Pass => Ok(no_cex(Outcome::Pass)),
                Outcome::Inconclusive => Ok(Explanation {
                    outcome: Outcome::Inconclusive,
                    lines: vec![
                        "fork sequential consistency: inconclusive".into(),
                        v.reason.unwrap_or_default(),
                    ],
                }),
                Outcome::Fail => {
                    let mut lines = vec!["fork sequential consistency: fail".into()];
                    match find_fork_chain(h) {
                        Some(chain) => {
                            lines.push(format!(
                                "every family of views breaks at {}'s read {}:",
                                chain.j,
                                chain.r.name()
                            ));
                            lines.extend(chain.steps(h, spec));
                        }
                        None => lines.push(v.reason.unwrap_or_default()),
                    }
                    Ok(Explanation {
                        outcome: Outcome::Fail,
                        lines,
                    })
                }
            }
        }
    }
}

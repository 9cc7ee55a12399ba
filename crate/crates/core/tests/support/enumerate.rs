//! Exhaustive small histories over clients `C1`, `C2`, registers `X1`
//! (written by `C1`) and `X2` (written by `C2`), and values `a`, `b`.
//!
//! Each client runs a sequence of complete operations, optionally followed
//! by one pending operation. Writes respect unique values per register.
//! Reads may return ⊥, `a` or `b` regardless of what was written.

use forkcheck::{ClientId, Event, RegisterId, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Write(&'static str),
    Read(&'static str, Option<Value>),
}

const VALUES: [&str; 2] = ["a", "b"];
const REGS: [&str; 2] = ["X1", "X2"];

fn own(c: u32) -> &'static str {
    REGS[(c - 1) as usize]
}

/// Calls `f` on every sequence of exactly `k` operations of one client, the
/// last pending iff `pending`.
pub fn visit_sequences(k: usize, pending: bool, f: &mut impl FnMut(&[Step])) {
    if pending && k == 0 {
        return;
    }
    grow(k, pending, &mut Vec::with_capacity(k), f);
}

fn grow(k: usize, pending: bool, cur: &mut Vec<Step>, f: &mut impl FnMut(&[Step])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    let last_pending = pending && cur.len() + 1 == k;
    for v in VALUES {
        if !cur.contains(&Step::Write(v)) {
            cur.push(Step::Write(v));
            grow(k, pending, cur, f);
            cur.pop();
        }
    }
    for r in REGS {
        if last_pending {
            cur.push(Step::Read(r, None));
            grow(k, pending, cur, f);
            cur.pop();
            continue;
        }
        for ret in [Value::Bottom, Value::data("a"), Value::data("b")] {
            cur.push(Step::Read(r, Some(ret)));
            grow(k, pending, cur, f);
            cur.pop();
        }
    }
}

pub fn client_events(c: u32, steps: &[Step], pending: bool) -> Vec<Event> {
    let id = ClientId(c);
    let mut ev = Vec::new();
    for (i, s) in steps.iter().enumerate() {
        let last = pending && i + 1 == steps.len();
        match s {
            Step::Write(v) => {
                let x = RegisterId::new(own(c));
                ev.push(Event::invoke_write(id, &x, Value::data(*v)));
                if !last {
                    ev.push(Event::write_ok(id, &x));
                }
            }
            Step::Read(r, ret) => {
                let x = RegisterId::new(*r);
                ev.push(Event::invoke_read(id, &x));
                if !last {
                    ev.push(Event::read_returns(id, &x, ret.clone().expect("complete read")));
                }
            }
        }
    }
    ev
}

/// Calls `f` on every history with exactly `n` operations, `C1`'s events
/// first. Returns the number of histories visited.
pub fn for_each_history(n: usize, f: &mut impl FnMut(&[Event])) -> u64 {
    let mut count = 0u64;
    let mut buf = Vec::new();
    for k1 in 0..=n {
        let k2 = n - k1;
        for p1 in [false, true] {
            visit_sequences(k1, p1, &mut |s1| {
                let e1 = client_events(1, s1, p1);
                for p2 in [false, true] {
                    visit_sequences(k2, p2, &mut |s2| {
                        buf.clear();
                        buf.extend_from_slice(&e1);
                        buf.extend(client_events(2, s2, p2));
                        f(&buf);
                        count += 1;
                    });
                }
            });
        }
    }
    count
}

/// Every merge of two event sequences that keeps each one's order.
pub fn interleavings(a: &[Event], b: &[Event]) -> Vec<Vec<Event>> {
    if a.is_empty() {
        return vec![b.to_vec()];
    }
    if b.is_empty() {
        return vec![a.to_vec()];
    }
    let mut out = Vec::new();
    for mut rest in interleavings(&a[1..], b) {
        rest.insert(0, a[0].clone());
        out.push(rest);
    }
    for mut rest in interleavings(a, &b[1..]) {
        rest.insert(0, b[0].clone());
        out.push(rest);
    }
    out
}

/// Splits a history into its per-client event sequences (`C1`, `C2`).
pub fn split_clients(events: &[Event]) -> (Vec<Event>, Vec<Event>) {
    events.iter().cloned().partition(|e| e.client == ClientId(1))
}

//! Brute-force decision procedures read straight off the definitions.
//!
//! Operations are rebuilt from raw events. Extensions complete any subset of
//! pending operations; a pending read may return ⊥ or any data value that
//! occurs anywhere in the history, a superset of what the checkers try.
//! Real-time order between two operations of one client is `res < inv`.

use std::collections::BTreeSet;

use forkcheck::{Event, EventKind, OpKind, Value};

pub const SC_CAP: usize = 8;
pub const FSC_CAP: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawOp {
    pub inv: usize,
    pub res: Option<usize>,
    pub client: u32,
    pub write: bool,
    pub reg: String,
    /// Written value, or returned value of a complete read.
    pub val: Option<Value>,
}

pub fn raw_ops(events: &[Event]) -> Vec<RawOp> {
    let mut ops: Vec<RawOp> = Vec::new();
    for (i, e) in events.iter().enumerate() {
        match e.kind {
            EventKind::Invocation => ops.push(RawOp {
                inv: i,
                res: None,
                client: e.client.0,
                write: e.op == OpKind::Write,
                reg: e.register.0.clone(),
                val: if e.op == OpKind::Write { e.value.clone() } else { None },
            }),
            EventKind::Response => {
                let o = ops
                    .iter_mut()
                    .rev()
                    .find(|o| o.client == e.client.0 && o.res.is_none())
                    .expect("well-formed input");
                o.res = Some(i);
                if !o.write {
                    o.val = e.value.clone();
                }
            }
        }
    }
    ops
}

fn data_values(ops: &[RawOp]) -> BTreeSet<Value> {
    ops.iter()
        .filter_map(|o| o.val.clone())
        .filter(|v| !v.is_bottom())
        .collect()
}

/// Every extension, as the list of its complete operations. Appended
/// responses get indices past the end of the history.
pub fn extensions(events: &[Event]) -> Vec<Vec<RawOp>> {
    let ops = raw_ops(events);
    let values = data_values(&ops);
    let mut out: Vec<Vec<RawOp>> = vec![Vec::new()];
    let mut next_res = events.len();
    for o in &ops {
        let mut grown = Vec::new();
        for base in &out {
            if o.res.is_some() {
                let mut b = base.clone();
                b.push(o.clone());
                grown.push(b);
                continue;
            }
            // dropped
            grown.push(base.clone());
            let mut done = o.clone();
            done.res = Some(next_res);
            if o.write {
                let mut b = base.clone();
                b.push(done);
                grown.push(b);
            } else {
                for v in std::iter::once(Value::Bottom).chain(values.iter().cloned()) {
                    let mut d = done.clone();
                    d.val = Some(v);
                    let mut b = base.clone();
                    b.push(d);
                    grown.push(b);
                }
            }
        }
        if o.res.is_none() {
            next_res += 1;
        }
        out = grown;
    }
    out
}

/// Number of extensions the checkers should enumerate: pending reads draw
/// from ⊥ and the values written to their own register.
pub fn expected_extension_count(events: &[Event]) -> u128 {
    let ops = raw_ops(events);
    ops.iter()
        .filter(|o| o.res.is_none())
        .map(|o| {
            if o.write {
                2
            } else {
                let written: BTreeSet<&Value> = ops
                    .iter()
                    .filter(|w| w.write && w.reg == o.reg)
                    .filter_map(|w| w.val.as_ref())
                    .collect();
                2 + written.len() as u128
            }
        })
        .product()
}

pub fn legal(seq: &[&RawOp]) -> bool {
    let mut cells: Vec<(&str, &Value)> = Vec::new();
    for o in seq {
        let cur = cells.iter().rev().find(|(r, _)| *r == o.reg).map(|(_, v)| *v);
        let val = o.val.as_ref().expect("complete op");
        if o.write {
            cells.push((&o.reg, val));
        } else if cur.unwrap_or(&Value::Bottom) != val {
            return false;
        }
    }
    true
}

pub fn keeps_client_order(seq: &[&RawOp]) -> bool {
    for (a, x) in seq.iter().enumerate() {
        for y in &seq[a + 1..] {
            if x.client == y.client && y.res.expect("complete") < x.inv {
                return false;
            }
        }
    }
    true
}

const MAX_REGS: usize = 8;

/// A complete operation with interned register and value (0 is ⊥), so the
/// inner loops of the oracles do not allocate.
#[derive(Clone, Copy, Debug)]
struct Op {
    client: u32,
    inv: usize,
    res: usize,
    write: bool,
    reg: usize,
    val: usize,
}

fn compact(ops: &[RawOp]) -> Vec<Op> {
    let mut regs: Vec<&str> = Vec::new();
    let mut vals: Vec<&Value> = vec![&Value::Bottom];
    let mut out = Vec::with_capacity(ops.len());
    for o in ops {
        let reg = match regs.iter().position(|r| *r == o.reg) {
            Some(i) => i,
            None => {
                regs.push(&o.reg);
                regs.len() - 1
            }
        };
        let v = o.val.as_ref().expect("complete op");
        let val = match vals.iter().position(|x| *x == v) {
            Some(i) => i,
            None => {
                vals.push(v);
                vals.len() - 1
            }
        };
        out.push(Op {
            client: o.client,
            inv: o.inv,
            res: o.res.expect("complete op"),
            write: o.write,
            reg,
            val,
        });
    }
    assert!(regs.len() <= MAX_REGS, "oracle supports {MAX_REGS} registers");
    out
}

fn fast_legal(ops: &[Op], seq: &[usize]) -> bool {
    let mut cells = [0usize; MAX_REGS];
    for &i in seq {
        let o = &ops[i];
        if o.write {
            cells[o.reg] = o.val;
        } else if cells[o.reg] != o.val {
            return false;
        }
    }
    true
}

fn fast_order(ops: &[Op], seq: &[usize]) -> bool {
    for (a, &x) in seq.iter().enumerate() {
        for &y in &seq[a + 1..] {
            if ops[x].client == ops[y].client && ops[y].res < ops[x].inv {
                return false;
            }
        }
    }
    true
}

/// Calls `f` on every permutation of `items` until it returns true.
pub fn any_permutation<T: Copy>(items: &[T], f: &mut impl FnMut(&[T]) -> bool) -> bool {
    fn go<T: Copy>(rest: &mut Vec<T>, acc: &mut Vec<T>, f: &mut impl FnMut(&[T]) -> bool) -> bool {
        if rest.is_empty() {
            return f(acc);
        }
        for k in 0..rest.len() {
            let x = rest.remove(k);
            acc.push(x);
            let hit = go(rest, acc, f);
            acc.pop();
            rest.insert(k, x);
            if hit {
                return true;
            }
        }
        false
    }
    go(&mut items.to_vec(), &mut Vec::new(), f)
}

fn complete_count(events: &[Event]) -> usize {
    raw_ops(events).iter().filter(|o| o.res.is_some()).count()
}

/// Sequential consistency by enumeration. Panics above [`SC_CAP`] complete
/// operations.
pub fn brute_force_sc(events: &[Event]) -> bool {
    assert!(complete_count(events) <= SC_CAP, "sc oracle size cap exceeded");
    extensions(events).iter().any(|ops| {
        let ops = compact(ops);
        let idx: Vec<usize> = (0..ops.len()).collect();
        any_permutation(&idx, &mut |p| fast_legal(&ops, p) && fast_order(&ops, p))
    })
}

/// Every legal, order-keeping permutation of every subset of `ops` that
/// contains `required`.
fn candidate_views(ops: &[Op], required: &[usize]) -> Vec<Vec<usize>> {
    let n = ops.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if required.iter().any(|r| mask & (1 << r) == 0) {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        any_permutation(&idx, &mut |p| {
            if fast_legal(ops, p) && fast_order(ops, p) {
                out.push(p.to_vec());
            }
            false
        });
    }
    out
}

/// Shared operations sit at the same position behind identical prefixes.
pub fn no_join(a: &[usize], b: &[usize]) -> bool {
    a.iter().enumerate().all(|(pa, o)| match b.iter().position(|x| x == o) {
        None => true,
        Some(pb) => pa == pb && a[..pa] == b[..pb],
    })
}

/// Fork sequential consistency by enumeration: candidate views per client
/// (conditions 1-3), then a pairwise no-join filter. Panics above
/// [`FSC_CAP`] complete operations.
pub fn brute_force_fsc(events: &[Event]) -> bool {
    assert!(complete_count(events) <= FSC_CAP, "fsc oracle size cap exceeded");
    let clients: BTreeSet<u32> = events.iter().map(|e| e.client.0).collect();
    let original = raw_ops(events);
    extensions(events).iter().any(|raw| {
        let ops = compact(raw);
        let per_client: Vec<Vec<Vec<usize>>> = clients
            .iter()
            .map(|&c| {
                let required: Vec<usize> = raw
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| {
                        o.client == c
                            && original.iter().any(|x| x.inv == o.inv && x.res.is_some())
                    })
                    .map(|(i, _)| i)
                    .collect();
                candidate_views(&ops, &required)
            })
            .collect();
        pick(&per_client, &mut Vec::new())
    })
}

fn pick<'a>(per_client: &'a [Vec<Vec<usize>>], chosen: &mut Vec<&'a [usize]>) -> bool {
    let k = chosen.len();
    if k == per_client.len() {
        return true;
    }
    for v in &per_client[k] {
        if chosen.iter().all(|c| no_join(c, v)) {
            chosen.push(v);
            if pick(per_client, chosen) {
                return true;
            }
            chosen.pop();
        }
    }
    false
}

/// Sequential-spec replay written as a fold, for views given as
/// `(is_write, register, value)`.
pub fn fold_legal(view: &[(bool, String, Value)]) -> bool {
    view.iter()
        .try_fold(Vec::<(String, Value)>::new(), |mut cells, (w, r, v)| {
            let cur = cells
                .iter()
                .rev()
                .find(|(cr, _)| cr == r)
                .map_or(Value::Bottom, |(_, cv)| cv.clone());
            if *w {
                cells.push((r.clone(), v.clone()));
                Some(cells)
            } else if cur == *v {
                Some(cells)
            } else {
                None
            }
        })
        .is_some()
}

use proptest::prelude::*;

use forkcheck::{ClientId, Event, OpKind, Operation, RegisterId, Value};

/// Builds a well-formed history with single writers and unique writes from
/// raw choices. Each tuple is `(client pick, write?, register pick, value
/// pick)`; a client with a pending operation responds instead of invoking.
/// Reads mostly return ⊥ or a value written so far to their register.
pub fn build_history(n: u32, steps: &[(u32, bool, u32, u8)]) -> Vec<Event> {
    let mut pending: Vec<Option<(OpKind, RegisterId)>> = vec![None; n as usize + 1];
    let mut writes: Vec<(RegisterId, Value)> = Vec::new();
    let mut counter = 0;
    let mut ev = Vec::new();
    for &(pick, w, reg, val) in steps {
        let c = pick % n + 1;
        let id = ClientId(c);
        match pending[c as usize].take() {
            Some((OpKind::Write, x)) => ev.push(Event::write_ok(id, &x)),
            Some((OpKind::Read, x)) => {
                let seen: Vec<&Value> =
                    writes.iter().filter(|(r, _)| *r == x).map(|(_, v)| v).collect();
                let v = match val {
                    0 => Value::Bottom,
                    7 => Value::data("never"),
                    k if !seen.is_empty() => seen[(k as usize - 1) % seen.len()].clone(),
                    _ => Value::Bottom,
                };
                ev.push(Event::read_returns(id, &x, v));
            }
            None if w => {
                counter += 1;
                let x = RegisterId::new(format!("X{c}"));
                let v = Value::data(format!("v{counter}"));
                writes.push((x.clone(), v.clone()));
                ev.push(Event::invoke_write(id, &x, v));
                pending[c as usize] = Some((OpKind::Write, x));
            }
            None => {
                let x = RegisterId::new(format!("X{}", reg % n + 1));
                ev.push(Event::invoke_read(id, &x));
                pending[c as usize] = Some((OpKind::Read, x));
            }
        }
    }
    ev
}

pub fn history(max_clients: u32, max_events: usize) -> impl Strategy<Value = (u32, Vec<Event>)> {
    (2..=max_clients)
        .prop_flat_map(move |n| {
            (
                Just(n),
                prop::collection::vec((0u32..8, any::<bool>(), 0u32..8, 0u8..8), 0..=max_events),
            )
        })
        .prop_map(|(n, steps)| (n, build_history(n, &steps)))
}

/// A sequence of distinct complete operations over two registers and a few
/// values, not necessarily legal.
pub fn view_ops(max: usize) -> impl Strategy<Value = Vec<Operation>> {
    prop::collection::vec((any::<bool>(), 0u8..2, 0u8..4), 0..=max).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (w, r, v))| {
                let value = match v {
                    0 => Value::Bottom,
                    k => Value::data(["a", "b", "c"][k as usize - 1]),
                };
                let client = ClientId(r as u32 + 1);
                Operation {
                    client,
                    kind: if w { OpKind::Write } else { OpKind::Read },
                    register: RegisterId::new(format!("X{}", r + 1)),
                    written: if w && !value.is_bottom() {
                        Some(value.clone())
                    } else if w {
                        Some(Value::data("a"))
                    } else {
                        None
                    },
                    returned: if w { None } else { Some(value) },
                    inv_index: 2 * i,
                    res_index: Some(2 * i + 1),
                    label: None,
                }
            })
            .collect()
    })
}

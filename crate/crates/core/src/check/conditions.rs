//! Stand-alone checks of the individual consistency conditions. The searches
//! never call these; they exist to re-validate witnesses independently.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::history::{complete_ops, preserves_real_time, ClientId, History, OpId, Operation, View};
use crate::register::{check_sequential_spec, RegisterSpec};

/// The four conditions a family of views must meet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FscCondition {
    Containment = 1,
    RealTime = 2,
    Legality = 3,
    NoJoin = 4,
}

impl fmt::Display for FscCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FscCondition::Containment => "condition 1 (own complete operations contained)",
            FscCondition::RealTime => "condition 2 (per-client real-time order)",
            FscCondition::Legality => "condition 3 (register specification)",
            FscCondition::NoJoin => "condition 4 (no-join)",
        };
        f.write_str(s)
    }
}

/// Ok iff every operation shared by `v1` and `v2` has identical prefixes in
/// both. Otherwise the earliest shared operation of `v1` whose prefixes differ.
pub fn check_no_join(v1: &View, v2: &View) -> Result<(), Box<Operation>> {
    let ids2: BTreeMap<OpId, usize> = v2.ops.iter().enumerate().map(|(i, o)| (o.id(), i)).collect();
    for (i, o) in v1.ops.iter().enumerate() {
        if let Some(&j) = ids2.get(&o.id()) {
            let same = i == j
                && v1.ops[..i]
                    .iter()
                    .zip(&v2.ops[..j])
                    .all(|(a, b)| a.id() == b.id());
            if !same {
                return Err(Box::new(o.clone()));
            }
        }
    }
    Ok(())
}

/// Every view operation must be an operation of the extended history with
/// identical contents.
fn ops_belong(v: &View, extended: &History) -> Result<(), String> {
    for o in &v.ops {
        match extended.op(o.id()) {
            Some(e) if e == o => {}
            _ => return Err(format!("{} is not a complete operation of the history", o.name())),
        }
    }
    Ok(())
}

fn per_client_real_time(v: &View, h: &History) -> Result<(), String> {
    let clients: BTreeSet<ClientId> = v.ops.iter().map(|o| o.client).collect();
    for c in clients {
        if !preserves_real_time(&v.restrict_to_client(c), h) {
            return Err(format!("operations of {c} out of real-time order"));
        }
    }
    Ok(())
}

/// Re-checks a sequential-consistency witness `pi` for history `h` extended
/// to `extended`.
pub fn validate_sc_witness(
    h: &History,
    extended: &History,
    pi: &View,
    spec: &RegisterSpec,
) -> Result<(), String> {
    ops_belong(pi, extended)?;
    let want: BTreeSet<OpId> = complete_ops(extended).iter().map(|o| o.id()).collect();
    let got: BTreeSet<OpId> = pi.ops.iter().map(|o| o.id()).collect();
    if want != got || got.len() != pi.ops.len() {
        return Err("witness is not a permutation of the complete operations".into());
    }
    per_client_real_time(pi, h)?;
    check_sequential_spec(pi, spec).map_err(|e| e.to_string())
}

/// Re-checks a family of views against all four conditions. On failure
/// returns the client, the condition, and a description.
pub fn validate_fsc_views(
    h: &History,
    extended: &History,
    views: &BTreeMap<ClientId, View>,
    spec: &RegisterSpec,
) -> Result<(), (ClientId, FscCondition, String)> {
    for c in h.clients() {
        let Some(v) = views.get(&c) else {
            return Err((c, FscCondition::Containment, "no view".into()));
        };
        ops_belong(v, extended).map_err(|e| (c, FscCondition::Containment, e))?;
        let ids: BTreeSet<OpId> = v.ops.iter().map(|o| o.id()).collect();
        if ids.len() != v.ops.len() {
            return Err((c, FscCondition::Containment, "duplicate operation".into()));
        }
        for o in h.client_ops(c).into_iter().filter(|o| o.is_complete()) {
            if !ids.contains(&o.id()) {
                return Err((
                    c,
                    FscCondition::Containment,
                    format!("{} missing from the view", o.name()),
                ));
            }
        }
        per_client_real_time(v, h).map_err(|e| (c, FscCondition::RealTime, e))?;
        check_sequential_spec(v, spec).map_err(|e| (c, FscCondition::Legality, e.to_string()))?;
    }
    for (ci, vi) in views {
        for (cj, vj) in views.range(ci..).skip(1) {
            if let Err(o) = check_no_join(vi, vj) {
                return Err((
                    *ci,
                    FscCondition::NoJoin,
                    format!("views of {ci} and {cj} differ before {}", o.name()),
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{Event, RegisterId, Value};

    fn ops() -> Vec<Operation> {
        let x1 = RegisterId::new("X1");
        let x2 = RegisterId::new("X2");
        let h = History::new(vec![
            Event::invoke_write(ClientId(1), &x1, Value::data("a")),
            Event::write_ok(ClientId(1), &x1),
            Event::invoke_write(ClientId(2), &x2, Value::data("b")),
            Event::write_ok(ClientId(2), &x2),
            Event::invoke_read(ClientId(2), &x1),
            Event::read_returns(ClientId(2), &x1, Value::data("a")),
        ])
        .unwrap();
        h.operations().to_vec()
    }

    #[test]
    fn disjoint_and_identical_views_pass() {
        let o = ops();
        let a = View::new(None, vec![o[0].clone()]).unwrap();
        let b = View::new(None, vec![o[1].clone()]).unwrap();
        assert!(check_no_join(&a, &b).is_ok());
        let full = View::new(None, o.clone()).unwrap();
        assert!(check_no_join(&full, &full).is_ok());
    }

    #[test]
    fn prefix_views_pass_and_divergent_prefix_fails() {
        let o = ops();
        let full = View::new(None, o.clone()).unwrap();
        let pre = View::new(None, o[..2].to_vec()).unwrap();
        assert!(check_no_join(&full, &pre).is_ok());
        // shared o[2] preceded by different operations
        let other = View::new(None, vec![o[1].clone(), o[2].clone()]).unwrap();
        let bad = check_no_join(&full, &other).unwrap_err();
        assert_eq!(bad.id(), o[1].id());
    }
}

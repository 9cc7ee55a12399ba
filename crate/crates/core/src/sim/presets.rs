//! Client scripts and schedules that drive the one-round-trip protocol
//! through the three attack executions.
//!
//! `C2` alternates writes of `X2` and reads of `X1`. `C1` waits for `C2`'s
//! fourth operation to complete, writes `u` to `X1`, and (in beta and gamma)
//! reads `X2` until it sees `v_{z-2}`. `C1`'s write request is held in the
//! network while `C2` completes enough operations that `r_2^{z-1}` still
//! returns ⊥; with one round trip per operation the first read after the
//! release returns `u`.

use std::collections::BTreeMap;

use crate::history::{ClientId, EventKind, RegisterId};
use crate::scenarios::{ScenarioKind, ScenarioParams};

use super::config::{
    DelayRule, EventRef, Party, Schedule, ScriptStep, ServerKind, SimConfig, StopCondition, Until,
};

/// Step limit used by the scenario configs; far above what they need.
pub const SIM_STEP_LIMIT: u64 = 10_000;

fn c2_pairs(p: &ScenarioParams, times: Option<u32>) -> Vec<ScriptStep> {
    vec![ScriptStep::Loop {
        body: vec![
            ScriptStep::Write {
                register: RegisterId::new("X2"),
                value: format!("{}{{i}}", p.names.v_prefix),
                label: Some("w_2^{i}".into()),
            },
            ScriptStep::Read {
                register: RegisterId::new("X1"),
                label: Some("r_2^{i}".into()),
            },
        ],
        times,
        until: times.is_none().then_some(StopCondition::ReadNotBottom),
        from: 1,
    }]
}

fn c1_script(p: &ScenarioParams, reads: bool) -> Vec<ScriptStep> {
    let mut s = vec![
        ScriptStep::WaitFor(EventRef {
            client: ClientId(2),
            op: 4,
            event: EventKind::Response,
        }),
        ScriptStep::Write {
            register: RegisterId::new("X1"),
            value: p.names.u.clone(),
            label: Some("w_1".into()),
        },
    ];
    if reads {
        s.push(ScriptStep::Loop {
            body: vec![ScriptStep::Read {
                register: RegisterId::new("X2"),
                label: Some("r_1^{i}".into()),
            }],
            times: None,
            until: Some(StopCondition::ReadEquals {
                value: format!("{}{}", p.names.v_prefix, p.z - 2),
            }),
            from: 1,
        });
    }
    s
}

/// Holds `C1`'s first request (`w_1`) until `C2` has completed `count` more
/// operations.
fn hold_c1(count: u32) -> Vec<DelayRule> {
    if count == 0 {
        return Vec::new();
    }
    vec![DelayRule {
        from: Party::Client(ClientId(1)),
        to: Party::Server,
        ordinal: Some(1),
        until: Until::CompletedOps {
            client: ClientId(2),
            count: count as usize,
        },
    }]
}

/// A round-robin config whose run reproduces the generated trace of `kind`.
pub fn scenario_config(kind: ScenarioKind, p: &ScenarioParams) -> SimConfig {
    let z = p.z;
    let (c1, c2, delays, server) = match kind {
        ScenarioKind::Alpha => (
            c1_script(p, false),
            c2_pairs(p, None),
            hold_c1(2 * (z - 3)),
            ServerKind::Correct,
        ),
        ScenarioKind::Beta => (
            c1_script(p, true),
            c2_pairs(p, Some(z - 2)),
            hold_c1(2 * (z - 4)),
            ServerKind::Correct,
        ),
        ScenarioKind::Gamma => (
            c1_script(p, true),
            c2_pairs(p, None),
            hold_c1(2 * (z - 3)),
            ServerKind::Forking {
                z,
                isolated: ClientId(1),
                observer: ClientId(2),
            },
        ),
    };
    SimConfig {
        registers: BTreeMap::from([
            (RegisterId::new("X1"), ClientId(1)),
            (RegisterId::new("X2"), ClientId(2)),
        ]),
        clients: BTreeMap::from([(ClientId(1), c1), (ClientId(2), c2)]),
        server,
        delays,
        schedule: Schedule::RoundRobin,
        seed: 0,
        max_steps: SIM_STEP_LIMIT,
        comment: Some(format!("{kind:?} with z = {z}").to_lowercase()),
    }
}

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::history::{ClientId, RegisterId};

use super::config::{DelayRule, Party, Schedule, ScriptStep, ServerKind, SimConfig, Until};

/// A small correct-server config derived from `seed`: two or three clients,
/// each owning one register, with one to four operations each, a random
/// schedule and a few random delay rules.
pub fn random_config(seed: u64) -> SimConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: u32 = rng.gen_range(2..=3);
    let ids: Vec<ClientId> = (1..=n).map(ClientId).collect();
    let registers: BTreeMap<RegisterId, ClientId> = ids
        .iter()
        .map(|c| (RegisterId::new(format!("X{}", c.0)), *c))
        .collect();

    let mut clients = BTreeMap::new();
    let mut delays = Vec::new();
    for &c in &ids {
        let len = rng.gen_range(1..=4usize);
        let mut script = Vec::with_capacity(len);
        for k in 1..=len {
            if rng.gen_bool(0.5) {
                script.push(ScriptStep::Write {
                    register: RegisterId::new(format!("X{}", c.0)),
                    value: format!("c{}w{k}", c.0),
                    label: None,
                });
            } else {
                let target = ids[rng.gen_range(0..ids.len())];
                script.push(ScriptStep::Read {
                    register: RegisterId::new(format!("X{}", target.0)),
                    label: None,
                });
            }
        }
        clients.insert(c, script);

        // hold one of c's messages, in either direction, until another
        // client makes progress
        if rng.gen_bool(0.5) {
            let other = loop {
                let o = ids[rng.gen_range(0..ids.len())];
                if o != c {
                    break o;
                }
            };
            let (from, to) = if rng.gen_bool(0.5) {
                (Party::Client(c), Party::Server)
            } else {
                (Party::Server, Party::Client(c))
            };
            delays.push(DelayRule {
                from,
                to,
                ordinal: Some(rng.gen_range(1..=len)),
                until: Until::CompletedOps {
                    client: other,
                    count: rng.gen_range(1..=2),
                },
            });
        }
    }

    SimConfig {
        registers,
        clients,
        server: ServerKind::Correct,
        delays,
        schedule: Schedule::Random,
        seed,
        max_steps: 10_000,
        comment: Some(format!("random config, seed {seed}")),
    }
}

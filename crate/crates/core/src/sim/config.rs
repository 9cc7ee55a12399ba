use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::history::{ClientId, EventKind, RegisterId};

use super::SimError;

/// A declarative simulation run. Loads from and saves to JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Register name to its single writer.
    pub registers: BTreeMap<RegisterId, ClientId>,
    /// Script of each client, keyed by client id.
    pub clients: BTreeMap<ClientId, Vec<ScriptStep>>,
    #[serde(default)]
    pub server: ServerKind,
    #[serde(default)]
    pub delays: Vec<DelayRule>,
    #[serde(default)]
    pub schedule: Schedule,
    /// Seeds the random schedule; ignored by round-robin.
    #[serde(default)]
    pub seed: u64,
    pub max_steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServerKind {
    /// One request and one reply per operation against a single store.
    #[default]
    Correct,
    /// Splits into two correct instances when `observer` sends its request
    /// number `2z - 3`, serving `observer` from one and `isolated` from the
    /// other.
    Forking {
        z: u32,
        #[serde(default = "default_isolated")]
        isolated: ClientId,
        #[serde(default = "default_observer")]
        observer: ClientId,
    },
}

fn default_isolated() -> ClientId {
    ClientId(1)
}

fn default_observer() -> ClientId {
    ClientId(2)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Actors `C1..Cn, S` take turns; a turn with nothing enabled is skipped.
    #[default]
    RoundRobin,
    /// Uniform choice among enabled actions, driven by `seed`.
    Random,
}

/// One step of a client script.
///
/// Inside a loop body, `{i}` in values and labels is replaced by the
/// iteration number.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptStep {
    Write {
        register: RegisterId,
        value: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Read {
        register: RegisterId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    /// Blocks until the referenced event has occurred.
    WaitFor(EventRef),
    /// Repeats `body` (writes and reads only). Ends after `times` iterations
    /// or as soon as a read satisfies `until`, whichever comes first.
    Loop {
        body: Vec<ScriptStep>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        times: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        until: Option<StopCondition>,
        #[serde(default = "one")]
        from: u32,
    },
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StopCondition {
    ReadNotBottom,
    ReadEquals { value: String },
}

/// The invocation or response of a client's `op`-th operation (from 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRef {
    pub client: ClientId,
    pub op: usize,
    pub event: EventKind,
}

/// A protocol participant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Party {
    Client(ClientId),
    Server,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Client(c) => write!(f, "{c}"),
            Party::Server => f.write_str("S"),
        }
    }
}

impl From<Party> for String {
    fn from(p: Party) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Party {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s == "S" {
            return Ok(Party::Server);
        }
        s.strip_prefix('C')
            .and_then(|n| n.parse::<u32>().ok())
            .filter(|n| *n > 0)
            .map(|n| Party::Client(ClientId(n)))
            .ok_or_else(|| format!("party must be \"S\" or \"C<n>\" with n >= 1, got {s:?}"))
    }
}

/// Withholds matching messages on the channel `from -> to`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayRule {
    pub from: Party,
    pub to: Party,
    /// Ordinal of the message on its channel, from 1; every message if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal: Option<usize>,
    pub until: Until,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Until {
    Event(EventRef),
    /// `client` has completed `count` more operations than when the message
    /// was sent.
    CompletedOps { client: ClientId, count: usize },
}

impl SimConfig {
    pub fn from_json(s: &str) -> Result<Self, SimError> {
        let cfg: SimConfig =
            serde_json::from_str(s).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        for (r, w) in &self.registers {
            if w.0 == 0 {
                return bad(format!("writer of {r} must be C1 or above"));
            }
        }
        let known: BTreeSet<ClientId> = self.clients.keys().copied().collect();
        for (c, script) in &self.clients {
            if c.0 == 0 {
                return bad("client ids start at 1".into());
            }
            for step in script {
                self.validate_step(*c, step, false)?;
            }
        }
        for d in &self.delays {
            let client = match (d.from, d.to) {
                (Party::Client(c), Party::Server) | (Party::Server, Party::Client(c)) => c,
                _ => return bad(format!("no channel {} -> {}", d.from, d.to)),
            };
            if !known.contains(&client) {
                return bad(format!("delay rule names unknown client {client}"));
            }
            if d.ordinal == Some(0) {
                return bad("message ordinals start at 1".into());
            }
            match &d.until {
                Until::Event(r) if r.op == 0 => return bad("operation ordinals start at 1".into()),
                Until::CompletedOps { client, .. } if !known.contains(client) => {
                    return bad(format!("delay rule waits on unknown client {client}"))
                }
                _ => {}
            }
        }
        if let ServerKind::Forking {
            z,
            isolated,
            observer,
        } = &self.server
        {
            if *z < 4 {
                return bad(format!("forking server needs z >= 4, got {z}"));
            }
            if isolated == observer {
                return bad("forking server needs two distinct clients".into());
            }
            for c in [isolated, observer] {
                if !known.contains(c) {
                    return bad(format!("forking server names unknown client {c}"));
                }
            }
        }
        Ok(())
    }

    fn validate_step(&self, c: ClientId, step: &ScriptStep, in_loop: bool) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        match step {
            ScriptStep::Write { register, .. } => match self.registers.get(register) {
                None => bad(format!("{c} writes undeclared register {register}")),
                Some(w) if *w != c => bad(format!("{c} writes {register}, which {w} owns")),
                Some(_) => Ok(()),
            },
            ScriptStep::Read { register, .. } => {
                if self.registers.contains_key(register) {
                    Ok(())
                } else {
                    bad(format!("{c} reads undeclared register {register}"))
                }
            }
            ScriptStep::WaitFor(r) => {
                if in_loop {
                    bad("loop bodies may contain only writes and reads".into())
                } else if r.op == 0 {
                    bad("operation ordinals start at 1".into())
                } else {
                    Ok(())
                }
            }
            ScriptStep::Loop {
                body, times, until, ..
            } => {
                if in_loop {
                    return bad("loops do not nest".into());
                }
                if body.is_empty() {
                    return bad(format!("{c} has a loop with an empty body"));
                }
                if times.is_none() && until.is_none() {
                    return bad(format!("{c} has a loop with neither times nor until"));
                }
                for s in body {
                    self.validate_step(c, s, true)?;
                }
                Ok(())
            }
        }
    }

    pub fn register_spec(&self) -> crate::register::RegisterSpec {
        let mut spec = crate::register::RegisterSpec::new();
        for (r, w) in &self.registers {
            spec.declare(r.clone(), *w);
        }
        spec
    }
}

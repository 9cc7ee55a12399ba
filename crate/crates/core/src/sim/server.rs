//! Server behaviors. Both answer every request with exactly one reply.

use std::collections::BTreeMap;

use crate::history::{ClientId, OpKind, RegisterId, Value};

use super::config::ServerKind;
use super::{Message, Payload, SimError};

/// Register contents of one correct server instance.
#[derive(Clone, Debug, Default)]
pub(crate) struct Store(BTreeMap<RegisterId, Value>);

impl Store {
    /// Applies a request; returns the reply value (`None` acknowledges a write).
    fn serve(&mut self, op: OpKind, register: &RegisterId, value: &Option<Value>) -> Option<Value> {
        match op {
            OpKind::Write => {
                let v = value.clone().expect("write requests carry a value");
                self.0.insert(register.clone(), v);
                None
            }
            OpKind::Read => Some(self.0.get(register).cloned().unwrap_or(Value::Bottom)),
        }
    }
}

#[derive(Debug)]
struct Split {
    step: u64,
    /// Continues the execution in which `isolated` stays concurrent.
    alpha: Store,
    /// Continues the execution in which `observer` halted at the split.
    beta: Store,
}

#[derive(Debug)]
pub(crate) struct Forker {
    z: u32,
    isolated: ClientId,
    observer: ClientId,
    observer_requests: u32,
    shared: Store,
    split: Option<Split>,
}

#[derive(Debug)]
pub(crate) enum Server {
    Correct(Store),
    Forking(Forker),
}

impl Server {
    pub fn new(kind: &ServerKind) -> Self {
        match kind {
            ServerKind::Correct => Server::Correct(Store::default()),
            ServerKind::Forking {
                z,
                isolated,
                observer,
            } => Server::Forking(Forker {
                z: *z,
                isolated: *isolated,
                observer: *observer,
                observer_requests: 0,
                shared: Store::default(),
                split: None,
            }),
        }
    }

    /// Handles a request delivered at `step`. `in_flight` counts undelivered
    /// messages on each client-to-server channel at that moment.
    pub fn handle(
        &mut self,
        msg: &Message,
        step: u64,
        in_flight: impl Fn(ClientId) -> usize,
    ) -> Result<Option<Value>, SimError> {
        let Payload::Request {
            op,
            register,
            value,
        } = &msg.payload
        else {
            return Err(SimError::Harness("server received a reply".into()));
        };
        let client = match msg.from {
            super::Party::Client(c) => c,
            super::Party::Server => return Err(SimError::Harness("server sent to itself".into())),
        };
        match self {
            Server::Correct(store) => Ok(store.serve(*op, register, value)),
            Server::Forking(f) => {
                if client == f.observer && f.split.is_none() {
                    f.observer_requests += 1;
                    if f.observer_requests == 2 * f.z - 3 {
                        let pending = in_flight(f.isolated);
                        if pending > 1 {
                            return Err(SimError::Harness(format!(
                                "{pending} messages from {} in flight at the split; \
                                 the attack tolerates one",
                                f.isolated
                            )));
                        }
                        f.split = Some(Split {
                            step,
                            alpha: f.shared.clone(),
                            beta: f.shared.clone(),
                        });
                    }
                }
                let Some(s) = f.split.as_mut() else {
                    return Ok(f.shared.serve(*op, register, value));
                };
                if client == f.isolated {
                    // sent before the split: part of the common execution
                    if msg.send_step < s.step {
                        s.alpha.serve(*op, register, value);
                    }
                    Ok(s.beta.serve(*op, register, value))
                } else {
                    Ok(s.alpha.serve(*op, register, value))
                }
            }
        }
    }
}

//! Deterministic discrete-event simulation of clients talking to one server
//! over FIFO channels.
//!
//! Every operation costs one request and one reply. Logical time is the
//! scheduler step; each step performs exactly one action: a client invokes
//! its next scripted operation, or one message is delivered.

mod config;
mod presets;
mod random;
mod server;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::history::{ClientId, Event, EventKind, History, OpKind, RegisterId, Value};

pub use config::{
    DelayRule, EventRef, Party, Schedule, ScriptStep, ServerKind, SimConfig, StopCondition, Until,
};
pub use presets::{scenario_config, SIM_STEP_LIMIT};
pub use random::random_config;

use server::Server;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    /// The run left the envelope the configured server assumes.
    #[error("harness error: {0}")]
    Harness(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Request {
        op: OpKind,
        register: RegisterId,
        value: Option<Value>,
    },
    /// `None` acknowledges a write.
    Reply { value: Option<Value> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub id: usize,
    pub from: Party,
    pub to: Party,
    pub payload: Payload,
    pub send_step: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delivered {
    pub message: Message,
    pub step: u64,
    /// Released only because nothing else could happen.
    pub dangling: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HaltReason {
    Completed,
    StepLimit,
}

impl fmt::Display for HaltReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HaltReason::Completed => "completed",
            HaltReason::StepLimit => "step-limit",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimResult {
    pub history: History,
    pub delivered: Vec<Delivered>,
    /// Messages still queued when the run halted, with their dangling flag.
    pub undelivered: Vec<(Message, bool)>,
    pub halted: HaltReason,
    pub steps: u64,
}

/// Runs `cfg` to quiescence or to its step limit.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    Engine::new(cfg).run()
}

#[derive(Debug)]
struct Invoked {
    op: OpKind,
    register: RegisterId,
    label: Option<String>,
}

#[derive(Debug)]
struct ClientRt<'c> {
    id: ClientId,
    script: &'c [ScriptStep],
    pc: usize,
    /// Iteration number and body position of the loop at `pc`.
    iter: u32,
    iters_done: u32,
    body_idx: usize,
    invoked: usize,
    completed: usize,
    pending: Option<Invoked>,
}

fn render(template: &str, iter: Option<u32>) -> String {
    match iter {
        Some(i) => template.replace("{i}", &i.to_string()),
        None => template.to_string(),
    }
}

impl<'c> ClientRt<'c> {
    fn new(id: ClientId, script: &'c [ScriptStep]) -> Self {
        let mut c = ClientRt {
            id,
            script,
            pc: 0,
            iter: 0,
            iters_done: 0,
            body_idx: 0,
            invoked: 0,
            completed: 0,
            pending: None,
        };
        c.enter();
        c
    }

    /// Resets loop state for the step at `pc`.
    fn enter(&mut self) {
        self.iters_done = 0;
        self.body_idx = 0;
        if let Some(ScriptStep::Loop { from, .. }) = self.script.get(self.pc) {
            self.iter = *from;
        }
    }

    fn advance(&mut self) {
        self.pc += 1;
        self.enter();
    }

    /// Skips satisfied waits and finished loops.
    fn settle(&mut self, occurred: &impl Fn(&EventRef) -> bool) {
        loop {
            match self.script.get(self.pc) {
                Some(ScriptStep::WaitFor(r)) if occurred(r) => self.advance(),
                Some(ScriptStep::Loop { times: Some(t), .. }) if self.iters_done >= *t => {
                    self.advance()
                }
                _ => return,
            }
        }
    }

    /// The operation this client would invoke now, if any.
    fn next_op(&self) -> Option<(OpKind, RegisterId, Option<Value>, Option<String>)> {
        if self.pending.is_some() {
            return None;
        }
        let (step, iter) = match self.script.get(self.pc)? {
            ScriptStep::Loop { body, .. } => (&body[self.body_idx], Some(self.iter)),
            s => (s, None),
        };
        match step {
            ScriptStep::Write {
                register,
                value,
                label,
            } => Some((
                OpKind::Write,
                register.clone(),
                Some(Value::data(render(value, iter))),
                label.as_deref().map(|l| render(l, iter)),
            )),
            ScriptStep::Read { register, label } => Some((
                OpKind::Read,
                register.clone(),
                None,
                label.as_deref().map(|l| render(l, iter)),
            )),
            _ => None,
        }
    }

    fn complete(&mut self, returned: Option<&Value>) {
        self.pending = None;
        self.completed += 1;
        let Some(ScriptStep::Loop { body, until, .. }) = self.script.get(self.pc) else {
            self.advance();
            return;
        };
        let stop = match (until, returned) {
            (Some(StopCondition::ReadNotBottom), Some(v)) => !v.is_bottom(),
            (Some(StopCondition::ReadEquals { value }), Some(Value::Data(v))) => v == value,
            _ => false,
        };
        if stop {
            self.advance();
            return;
        }
        self.body_idx += 1;
        if self.body_idx == body.len() {
            self.body_idx = 0;
            self.iters_done += 1;
            self.iter += 1;
        }
    }
}

#[derive(Debug)]
enum Hold {
    Event(EventRef),
    Completed { slot: usize, target: usize },
}

#[derive(Debug)]
struct Queued {
    msg: Message,
    hold: Option<Hold>,
    dangling: bool,
}

#[derive(Clone, Copy, Debug)]
enum Action {
    Invoke(usize),
    Deliver(Party, Party),
}

struct Engine<'c> {
    cfg: &'c SimConfig,
    step: u64,
    clients: Vec<ClientRt<'c>>,
    slot: BTreeMap<ClientId, usize>,
    channels: BTreeMap<(Party, Party), VecDeque<Queued>>,
    sent: BTreeMap<(Party, Party), usize>,
    next_id: usize,
    server: Server,
    events: Vec<Event>,
    delivered: Vec<Delivered>,
    rng: Option<ChaCha8Rng>,
    /// Round-robin pointer over actors `clients..., server`.
    turn: usize,
}

impl<'c> Engine<'c> {
    fn new(cfg: &'c SimConfig) -> Self {
        let clients: Vec<ClientRt> = cfg
            .clients
            .iter()
            .map(|(id, script)| ClientRt::new(*id, script))
            .collect();
        let slot = clients.iter().enumerate().map(|(i, c)| (c.id, i)).collect();
        Engine {
            cfg,
            step: 0,
            clients,
            slot,
            channels: BTreeMap::new(),
            sent: BTreeMap::new(),
            next_id: 0,
            server: Server::new(&cfg.server),
            events: Vec::new(),
            delivered: Vec::new(),
            rng: match cfg.schedule {
                Schedule::RoundRobin => None,
                Schedule::Random => Some(ChaCha8Rng::seed_from_u64(cfg.seed)),
            },
            turn: 0,
        }
    }

    fn run(mut self) -> Result<SimResult, SimError> {
        let halted = loop {
            self.settle();
            if self.step >= self.cfg.max_steps {
                break HaltReason::StepLimit;
            }
            match self.pick() {
                Some(a) => {
                    self.execute(a)?;
                    self.step += 1;
                }
                None => {
                    if !self.flush_one() {
                        break HaltReason::Completed;
                    }
                }
            }
        };
        let undelivered = self
            .channels
            .into_values()
            .flatten()
            .map(|q| (q.msg, q.dangling || q.hold.is_some()))
            .collect();
        Ok(SimResult {
            history: History::new(self.events).map_err(|e| {
                SimError::Harness(format!("simulator produced an ill-formed history: {e}"))
            })?,
            delivered: self.delivered,
            undelivered,
            halted,
            steps: self.step,
        })
    }

    fn settle(&mut self) {
        let counts: Vec<(usize, usize)> =
            self.clients.iter().map(|c| (c.invoked, c.completed)).collect();
        let slot = &self.slot;
        let occurred = |r: &EventRef| {
            slot.get(&r.client).is_some_and(|&s| match r.event {
                EventKind::Invocation => counts[s].0 >= r.op,
                EventKind::Response => counts[s].1 >= r.op,
            })
        };
        for c in &mut self.clients {
            c.settle(&occurred);
        }
        let released: Vec<bool> = self
            .channels
            .values()
            .flatten()
            .map(|q| match &q.hold {
                None => true,
                Some(Hold::Event(r)) => occurred(r),
                Some(Hold::Completed { slot, target }) => counts[*slot].1 >= *target,
            })
            .collect();
        for (q, free) in self.channels.values_mut().flatten().zip(released) {
            if free {
                q.hold = None;
            }
        }
    }

    /// Releases the oldest withheld message, flagging it dangling.
    fn flush_one(&mut self) -> bool {
        let oldest = self
            .channels
            .values_mut()
            .flatten()
            .filter(|q| q.hold.is_some())
            .min_by_key(|q| q.msg.id);
        match oldest {
            Some(q) => {
                q.hold = None;
                q.dangling = true;
                true
            }
            None => false,
        }
    }

    fn head_ready(&self, from: Party, to: Party) -> Option<usize> {
        self.channels
            .get(&(from, to))
            .and_then(|q| q.front())
            .filter(|q| q.hold.is_none())
            .map(|q| q.msg.id)
    }

    /// What actor `a` would do on its turn.
    fn actor_actions(&self, a: usize) -> Vec<Action> {
        if a < self.clients.len() {
            let c = &self.clients[a];
            let me = Party::Client(c.id);
            if c.pending.is_some() {
                if self.head_ready(Party::Server, me).is_some() {
                    return vec![Action::Deliver(Party::Server, me)];
                }
                return Vec::new();
            }
            if c.next_op().is_some() {
                return vec![Action::Invoke(a)];
            }
            return Vec::new();
        }
        let mut ready: Vec<(usize, Party)> = self
            .clients
            .iter()
            .filter_map(|c| {
                let from = Party::Client(c.id);
                self.head_ready(from, Party::Server).map(|id| (id, from))
            })
            .collect();
        ready.sort();
        ready
            .into_iter()
            .map(|(_, from)| Action::Deliver(from, Party::Server))
            .collect()
    }

    fn pick(&mut self) -> Option<Action> {
        let actors = self.clients.len() + 1;
        if let Some(mut rng) = self.rng.take() {
            let all: Vec<Action> = (0..actors).flat_map(|a| self.actor_actions(a)).collect();
            // draws only when there is a choice to make
            let picked = (!all.is_empty()).then(|| all[rng.gen_range(0..all.len())]);
            self.rng = Some(rng);
            return picked;
        }
        for off in 0..actors {
            let a = (self.turn + off) % actors;
            // the server delivers the earliest-sent ready message
            if let Some(&act) = self.actor_actions(a).first() {
                self.turn = (a + 1) % actors;
                return Some(act);
            }
        }
        None
    }

    fn send(&mut self, from: Party, to: Party, payload: Payload) {
        let n = self.sent.entry((from, to)).or_insert(0);
        *n += 1;
        let ordinal = *n;
        let hold = self
            .cfg
            .delays
            .iter()
            .find(|d| d.from == from && d.to == to && d.ordinal.is_none_or(|o| o == ordinal))
            .map(|d| match &d.until {
                Until::Event(r) => Hold::Event(*r),
                Until::CompletedOps { client, count } => {
                    let slot = self.slot[client];
                    Hold::Completed {
                        slot,
                        target: self.clients[slot].completed + count,
                    }
                }
            });
        let msg = Message {
            id: self.next_id,
            from,
            to,
            payload,
            send_step: self.step,
        };
        self.next_id += 1;
        self.channels.entry((from, to)).or_default().push_back(Queued {
            msg,
            hold,
            dangling: false,
        });
    }

    fn execute(&mut self, action: Action) -> Result<(), SimError> {
        match action {
            Action::Invoke(slot) => {
                let c = &mut self.clients[slot];
                let (op, register, value, label) = c.next_op().expect("invoke is enabled");
                let id = c.id;
                let mut e = match op {
                    OpKind::Write => Event::invoke_write(id, &register, value.clone().unwrap()),
                    OpKind::Read => Event::invoke_read(id, &register),
                };
                e.label = label.clone();
                self.events.push(e);
                c.invoked += 1;
                c.pending = Some(Invoked {
                    op,
                    register: register.clone(),
                    label,
                });
                self.send(
                    Party::Client(id),
                    Party::Server,
                    Payload::Request {
                        op,
                        register,
                        value,
                    },
                );
            }
            Action::Deliver(from, to) => {
                let q = self
                    .channels
                    .get_mut(&(from, to))
                    .and_then(|q| q.pop_front())
                    .expect("deliver is enabled");
                match to {
                    Party::Server => {
                        let channels = &self.channels;
                        let in_flight = |c: ClientId| {
                            channels
                                .get(&(Party::Client(c), Party::Server))
                                .map_or(0, |q| q.len())
                        };
                        let reply = self.server.handle(&q.msg, self.step, in_flight)?;
                        self.send(Party::Server, from, Payload::Reply { value: reply });
                    }
                    Party::Client(id) => {
                        let Payload::Reply { value } = &q.msg.payload else {
                            return Err(SimError::Harness(format!("{id} received a request")));
                        };
                        let c = &mut self.clients[self.slot[&id]];
                        let inv = c.pending.take().ok_or_else(|| {
                            SimError::Harness(format!("{id} received a reply while idle"))
                        })?;
                        let mut e = match (inv.op, value) {
                            (OpKind::Write, _) => Event::write_ok(id, &inv.register),
                            (OpKind::Read, Some(v)) => Event::read_returns(id, &inv.register, v.clone()),
                            (OpKind::Read, None) => {
                                return Err(SimError::Harness(format!(
                                    "read reply to {id} carries no value"
                                )))
                            }
                        };
                        e.label = inv.label;
                        self.events.push(e);
                        c.complete(value.as_ref());
                    }
                }
                self.delivered.push(Delivered {
                    message: q.msg,
                    step: self.step,
                    dangling: q.dangling,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{check_sequential_consistency, SearchBudget};
    use crate::history::ProjectClient;

    fn config(json: &str) -> SimConfig {
        SimConfig::from_json(json).unwrap()
    }

    #[test]
    fn empty_scripts_complete_immediately() {
        let r = run_simulation(&config(r#"{"registers":{},"clients":{},"max_steps":5}"#)).unwrap();
        assert!(r.history.is_empty());
        assert_eq!(r.halted, HaltReason::Completed);
    }

    #[test]
    fn zero_steps_halts_on_the_limit() {
        let cfg = config(
            r#"{"registers":{"X1":1},"max_steps":0,
                "clients":{"1":[{"step":"read","register":"X1"}]}}"#,
        );
        let r = run_simulation(&cfg).unwrap();
        assert!(r.history.is_empty());
        assert_eq!(r.halted, HaltReason::StepLimit);
    }

    #[test]
    fn write_then_read_returns_written_value() {
        let cfg = config(
            r#"{"registers":{"X1":1},"max_steps":100,"clients":{"1":[
                {"step":"write","register":"X1","value":"a"},
                {"step":"read","register":"X1"}]}}"#,
        );
        let r = run_simulation(&cfg).unwrap();
        let ops = r.history.operations();
        assert_eq!(ops.len(), 2);
        assert_eq!(ops[1].returned, Some(Value::data("a")));
        assert_eq!(r.delivered.len(), 4);
    }

    #[test]
    fn first_four_ops_of_c2_read_bottom() {
        let cfg = config(
            r#"{"registers":{"X1":1,"X2":2},"max_steps":100,"clients":{"2":[
                {"step":"loop","times":2,"body":[
                    {"step":"write","register":"X2","value":"v{i}","label":"w_2^{i}"},
                    {"step":"read","register":"X1","label":"r_2^{i}"}]}]}}"#,
        );
        let r = run_simulation(&cfg).unwrap();
        let ops = r.history.operations();
        assert_eq!(ops.len(), 4);
        assert!(ops.iter().all(|o| o.is_complete()));
        assert_eq!(ops[1].returned, Some(Value::Bottom));
        assert_eq!(ops[3].returned, Some(Value::Bottom));
        assert_eq!(ops[2].written, Some(Value::data("v2")));
        assert_eq!(ops[2].label.as_deref(), Some("w_2^2"));
    }

    #[test]
    fn dangling_delay_is_flushed_and_flagged() {
        let cfg = config(
            r#"{"registers":{"X1":1},"max_steps":100,
                "clients":{"1":[{"step":"write","register":"X1","value":"a"}]},
                "delays":[{"from":"C1","to":"S",
                    "until":{"kind":"event","client":1,"op":7,"event":"res"}}]}"#,
        );
        let r = run_simulation(&cfg).unwrap();
        assert_eq!(r.halted, HaltReason::Completed);
        assert!(r.delivered[0].dangling);
        assert!(!r.delivered[1].dangling);
        assert_eq!(r.history.pending_ops().len(), 0);
    }

    #[test]
    fn withheld_head_blocks_its_channel() {
        // C1's first message waits on C2; its second cannot overtake it.
        let cfg = config(
            r#"{"registers":{"X1":1,"X2":2},"max_steps":200,"clients":{
                "1":[{"step":"write","register":"X1","value":"a"},
                     {"step":"write","register":"X1","value":"b"}],
                "2":[{"step":"read","register":"X2"},{"step":"read","register":"X1"}]},
                "delays":[{"from":"C1","to":"S","ordinal":1,
                    "until":{"kind":"completed_ops","client":2,"count":2}}]}"#,
        );
        let r = run_simulation(&cfg).unwrap();
        let c2 = r.history.client_ops(ClientId(2));
        assert_eq!(c2[1].returned, Some(Value::Bottom));
        let to_server: Vec<usize> = r
            .delivered
            .iter()
            .filter(|d| d.message.from == Party::Client(ClientId(1)))
            .map(|d| d.message.id)
            .collect();
        assert!(to_server.windows(2).all(|w| w[0] < w[1]));
        let sc = check_sequential_consistency(
            &r.history,
            &cfg.register_spec(),
            &SearchBudget::default(),
        )
        .unwrap();
        assert_eq!(sc.outcome, crate::check::Outcome::Pass);
    }

    #[test]
    fn random_schedule_is_reproducible() {
        let mut cfg = random_config(7);
        cfg.schedule = Schedule::Random;
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a, b);
        for c in a.history.clients() {
            assert_eq!(
                a.history.project_client(c).len(),
                2 * a.history.client_ops(c).len()
            );
        }
    }
}

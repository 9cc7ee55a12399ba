//! Trace-level generators for the three executions of the forking attack.
//!
//! Two clients and two registers: `C1` writes `X1`, `C2` writes `X2`.
//!
//! * `alpha` (correct server): `C2` alternates `w_2^i` (writes `v_i` to `X2`)
//!   and `r_2^i` (reads `X1`). After `r_2^2`, `C1` invokes `w_1` (writes `u`
//!   to `X1`); its request is held back while `C2` runs pairs `3..z-1`,
//!   all reading ⊥. `w_1` then completes and `r_2^z` returns `u`.
//! * `beta` (correct server): the prefix of `alpha` before `t0`, the
//!   invocation of `w_2^{z-1}`. `C2` halts there; `w_1` completes and `C1`
//!   reads `X2`, obtaining `v_{z-2}`.
//! * `gamma` (forking server): `alpha` as seen by `C2`, `beta` as seen by
//!   `C1`.
//!
//! The interleaving after `t0` is the one the round-robin simulator produces
//! for the one-round-trip register protocol, so generated and simulated
//! traces agree event for event.

use thiserror::Error;

use crate::history::{ClientId, Event, History, RegisterId, Value};
use crate::register::RegisterSpec;

pub const C1: ClientId = ClientId(1);
pub const C2: ClientId = ClientId(2);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueNames {
    /// Value written by `w_1`.
    pub u: String,
    /// Prefix of the values `v_1, v_2, ...` written by `C2`.
    pub v_prefix: String,
}

impl Default for ValueNames {
    fn default() -> Self {
        ValueNames {
            u: "u".into(),
            v_prefix: "v".into(),
        }
    }
}

impl ValueNames {
    pub fn u(&self) -> Value {
        Value::data(self.u.clone())
    }

    pub fn v(&self, i: u32) -> Value {
        Value::data(format!("{}{i}", self.v_prefix))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioParams {
    /// Index of `C2`'s first read of `X1` that returns `u`.
    pub z: u32,
    /// Index of `C1`'s read of `X2` that returns `v_{z-2}`.
    pub l: u32,
    pub names: ValueNames,
}

impl ScenarioParams {
    pub fn new(z: u32, l: u32) -> Result<Self, ScenarioError> {
        let p = ScenarioParams {
            z,
            l,
            names: ValueNames::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.z < 4 {
            return Err(ScenarioError::ZTooSmall(self.z));
        }
        if self.l == 0 {
            return Err(ScenarioError::LZero);
        }
        if self.names.u.starts_with(&self.names.v_prefix) && self.names.u != self.names.v_prefix
        {
            // u must differ from every v_i
            if self.names.u[self.names.v_prefix.len()..].parse::<u32>().is_ok() {
                return Err(ScenarioError::ValueClash);
            }
        }
        Ok(())
    }

    /// Event index of `t0`, the invocation of `w_2^{z-1}` in alpha and gamma.
    pub fn t0_index(&self) -> usize {
        4 * (self.z as usize - 2) + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("z must be at least 4 (r_2^1, r_2^2 and r_2^3 return ⊥), got {0}")]
    ZTooSmall(u32),
    #[error("l must be at least 1")]
    LZero,
    #[error(
        "l = {0} is not realizable: once w_1 completes, every read of X2 by C1 returns v_(z-2), \
         so the first such read is r_1^1"
    )]
    LUnrealizable(u32),
    #[error("value name of u collides with a v_i")]
    ValueClash,
}

/// `C1` writes `X1`, `C2` writes `X2`.
pub fn scenario_spec() -> RegisterSpec {
    RegisterSpec::standard(2)
}

fn x1() -> RegisterId {
    RegisterId::new("X1")
}

fn x2() -> RegisterId {
    RegisterId::new("X2")
}

struct Builder<'p> {
    p: &'p ScenarioParams,
    events: Vec<Event>,
}

impl<'p> Builder<'p> {
    fn new(p: &'p ScenarioParams) -> Self {
        Builder {
            p,
            events: Vec::new(),
        }
    }

    fn push(&mut self, e: Event, label: String) {
        self.events.push(e.with_label(label));
    }

    fn inv_w2(&mut self, i: u32) {
        let v = self.p.names.v(i);
        self.push(Event::invoke_write(C2, &x2(), v), format!("w_2^{i}"));
    }

    fn res_w2(&mut self, i: u32) {
        self.push(Event::write_ok(C2, &x2()), format!("w_2^{i}"));
    }

    fn inv_r2(&mut self, i: u32) {
        self.push(Event::invoke_read(C2, &x1()), format!("r_2^{i}"));
    }

    fn res_r2(&mut self, i: u32, v: Value) {
        self.push(Event::read_returns(C2, &x1(), v), format!("r_2^{i}"));
    }

    /// `w_2^i` then `r_2^i`, back to back.
    fn pair(&mut self, i: u32, read: Value) {
        self.inv_w2(i);
        self.res_w2(i);
        self.inv_r2(i);
        self.res_r2(i, read);
    }

    fn inv_w1(&mut self) {
        let u = self.p.names.u();
        self.push(Event::invoke_write(C1, &x1(), u), "w_1".into());
    }

    fn res_w1(&mut self) {
        self.push(Event::write_ok(C1, &x1()), "w_1".into());
    }

    fn inv_r1(&mut self, k: u32) {
        self.push(Event::invoke_read(C1, &x2()), format!("r_1^{k}"));
    }

    fn res_r1(&mut self, k: u32, v: Value) {
        self.push(Event::read_returns(C1, &x2(), v), format!("r_1^{k}"));
    }

    /// Everything before `t0`: pairs `1..=z-2` with `w_1` invoked right
    /// after `r_2^2` completes.
    fn common_prefix(&mut self) {
        self.pair(1, Value::Bottom);
        self.pair(2, Value::Bottom);
        self.inv_w1();
        for i in 3..=self.p.z - 2 {
            self.pair(i, Value::Bottom);
        }
    }

    fn finish(self) -> History {
        History::new(self.events).expect("scenario histories are well-formed")
    }
}

pub fn generate_alpha(p: &ScenarioParams) -> Result<History, ScenarioError> {
    p.validate()?;
    let z = p.z;
    let mut b = Builder::new(p);
    b.common_prefix();
    b.pair(z - 1, Value::Bottom);
    b.res_w1();
    b.pair(z, p.names.u());
    Ok(b.finish())
}

pub fn generate_beta(p: &ScenarioParams) -> Result<History, ScenarioError> {
    p.validate()?;
    if p.l != 1 {
        return Err(ScenarioError::LUnrealizable(p.l));
    }
    let mut b = Builder::new(p);
    b.common_prefix();
    b.res_w1();
    b.inv_r1(1);
    b.res_r1(1, p.names.v(p.z - 2));
    Ok(b.finish())
}

pub fn generate_gamma(p: &ScenarioParams) -> Result<History, ScenarioError> {
    p.validate()?;
    if p.l != 1 {
        return Err(ScenarioError::LUnrealizable(p.l));
    }
    let z = p.z;
    let mut b = Builder::new(p);
    b.common_prefix();
    b.pair(z - 1, Value::Bottom);
    b.res_w1();
    b.inv_w2(z);
    b.inv_r1(1);
    b.res_w2(z);
    b.res_r1(1, p.names.v(z - 2));
    b.inv_r2(z);
    b.res_r2(z, p.names.u());
    Ok(b.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    Alpha,
    Beta,
    Gamma,
}

pub fn generate(kind: ScenarioKind, p: &ScenarioParams) -> Result<History, ScenarioError> {
    match kind {
        ScenarioKind::Alpha => generate_alpha(p),
        ScenarioKind::Beta => generate_beta(p),
        ScenarioKind::Gamma => generate_gamma(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{complete_ops, precedes, ProjectClient};
    use crate::register::{check_single_writer, check_unique_writes};

    fn params(z: u32) -> ScenarioParams {
        ScenarioParams::new(z, 1).unwrap()
    }

    fn by_label<'h>(h: &'h History, label: &str) -> &'h crate::history::Operation {
        h.operations()
            .iter()
            .find(|o| o.label.as_deref() == Some(label))
            .unwrap()
    }

    #[test]
    fn z_below_four_rejected() {
        assert_eq!(ScenarioParams::new(3, 1), Err(ScenarioError::ZTooSmall(3)));
        assert_eq!(ScenarioParams::new(4, 0), Err(ScenarioError::LZero));
    }

    #[test]
    fn alpha_z4_shape() {
        let h = generate_alpha(&params(4)).unwrap();
        let ops = complete_ops(&h);
        assert_eq!(ops.len(), 9);
        assert_eq!(h.pending_ops().len(), 0);
        for i in 1..=3 {
            assert_eq!(
                by_label(&h, &format!("r_2^{i}")).returned,
                Some(Value::Bottom)
            );
        }
        assert_eq!(by_label(&h, "r_2^4").returned, Some(Value::data("u")));
        assert!(precedes(by_label(&h, "r_2^2"), by_label(&h, "w_1")));
        assert_eq!(h.project_client(C1).len(), 2);
    }

    #[test]
    fn t0_is_the_invocation_of_w2_z_minus_1() {
        for z in 4..=7 {
            let p = params(z);
            let h = generate_alpha(&p).unwrap();
            let e = &h.events()[p.t0_index()];
            assert_eq!(e.label.as_deref(), Some(format!("w_2^{}", z - 1).as_str()));
            assert_eq!(e.kind, crate::history::EventKind::Invocation);
            let g = generate_gamma(&p).unwrap();
            assert_eq!(g.events()[..p.t0_index()], h.events()[..p.t0_index()]);
            let b = generate_beta(&p).unwrap();
            assert_eq!(b.events()[..p.t0_index()], h.events()[..p.t0_index()]);
        }
    }

    #[test]
    fn beta_z4_shape() {
        let h = generate_beta(&params(4)).unwrap();
        assert_eq!(h.client_ops(C2).len(), 4);
        let c1 = h.client_ops(C1);
        assert_eq!(c1.len(), 2);
        assert_eq!(c1[1].returned, Some(Value::data("v2")));
        let alpha = generate_alpha(&params(4)).unwrap();
        let a2 = alpha.project_client(C2);
        let b2 = h.project_client(C2);
        assert_eq!(&a2[..b2.len()], &b2[..]);
    }

    #[test]
    fn l_above_one_is_rejected() {
        let p = ScenarioParams::new(4, 2).unwrap();
        assert_eq!(generate_beta(&p), Err(ScenarioError::LUnrealizable(2)));
        assert_eq!(generate_gamma(&p), Err(ScenarioError::LUnrealizable(2)));
    }

    #[test]
    fn generated_traces_meet_register_preconditions() {
        let spec = scenario_spec();
        for z in 4..=6 {
            for kind in [ScenarioKind::Alpha, ScenarioKind::Beta, ScenarioKind::Gamma] {
                let h = generate(kind, &params(z)).unwrap();
                assert!(check_unique_writes(&h, &spec).is_ok());
                assert!(check_single_writer(&h, &spec).is_ok());
            }
        }
    }
}

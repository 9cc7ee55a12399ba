use std::collections::BTreeSet;

use crate::history::{ClientId, History, Operation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WaitFreedom {
    Pass,
    /// The first pending operation of a correct client.
    Fail(Operation),
}

/// Every operation of a client in `correct` must be complete.
pub fn check_wait_freedom(h: &History, correct: &BTreeSet<ClientId>) -> WaitFreedom {
    h.pending_ops()
        .into_iter()
        .find(|o| correct.contains(&o.client))
        .map_or(WaitFreedom::Pass, |o| WaitFreedom::Fail(o.clone()))
}

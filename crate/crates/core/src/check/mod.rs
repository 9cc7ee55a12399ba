//! Bounded decision procedures for sequential consistency, fork sequential
//! consistency and wait-freedom of finite histories.
//!
//! Both consistency problems are intractable in general. Every search runs
//! under a [`SearchBudget`] and reports [`Outcome::Inconclusive`] rather than
//! guessing when the budget runs out.

mod compiled;
mod conditions;
mod extension;
mod fsc;
mod sc;
mod wait_free;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::{ClientId, History, View};
use crate::register::SpecViolation;

pub use conditions::{check_no_join, validate_fsc_views, validate_sc_witness, FscCondition};
pub use extension::{enumerate_extensions, Extension, ExtensionChoice, Extensions};
pub use fsc::check_fork_sequential_consistency;
pub use sc::check_sequential_consistency;
pub use wait_free::{check_wait_freedom, WaitFreedom};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Largest number of complete operations a search will accept.
    pub max_ops: usize,
    /// Largest number of extensions tried.
    pub max_extensions: usize,
    /// Search nodes over all extensions of one check.
    pub max_nodes: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_ops: 64,
            max_extensions: 4096,
            max_nodes: 5_000_000,
        }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<(), CheckError> {
        if self.max_ops == 0 || self.max_extensions == 0 || self.max_nodes == 0 {
            return Err(CheckError::InvalidBudget(*self));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Inconclusive => "inconclusive",
        })
    }
}

/// What a search consumed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetUsed {
    pub extensions: usize,
    pub nodes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScVerdict {
    pub outcome: Outcome,
    /// The permutation π on a pass.
    pub witness: Option<View>,
    /// The extension σ' the witness permutes.
    pub extension: Option<Extension>,
    pub reason: Option<String>,
    pub used: BudgetUsed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FscVerdict {
    pub outcome: Outcome,
    pub views: Option<BTreeMap<ClientId, View>>,
    pub extension: Option<Extension>,
    pub reason: Option<String>,
    pub used: BudgetUsed,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("history violates a register precondition: {0}")]
    Precondition(SpecViolation),
    #[error("search budget must be positive: {0:?}")]
    InvalidBudget(SearchBudget),
}

/// Raised inside a search when the node budget is spent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Exhausted;

pub(crate) fn client_slots(h: &History) -> Vec<ClientId> {
    h.clients().into_iter().collect()
}

//! Consistency checking for histories of single-writer/multi-reader
//! registers kept on an untrusted server.
//!
//! The crate decides sequential consistency, fork sequential consistency and
//! wait-freedom of finite histories, generates the three executions of the
//! forking attack against a one-round-trip register protocol, and simulates
//! that protocol deterministically with either a correct or a forking server.

pub mod check;
pub mod cli;
pub mod explain;
pub mod history;
pub mod register;
pub mod report;
pub mod scenarios;
pub mod sim;
pub mod trace;

pub use check::{
    check_fork_sequential_consistency, check_no_join, check_sequential_consistency,
    check_wait_freedom, enumerate_extensions, FscVerdict, Outcome, ScVerdict, SearchBudget,
    WaitFreedom,
};
pub use history::{
    complete_ops, precedes, preserves_real_time, validate_well_formed, ClientId, Event, EventKind,
    History, OpId, OpKind, Operation, ProjectClient, RegisterId, Value, View,
};
pub use register::{
    check_sequential_spec, check_single_writer, check_unique_writes, RegisterSpec, SpecViolation,
};

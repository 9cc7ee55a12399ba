//! Shared test helpers: brute-force oracles, exhaustive enumerators and
//! proptest strategies. Nothing here calls the checkers under test.
#![allow(dead_code)]

pub mod enumerate;
pub mod oracle;
pub mod strategies;

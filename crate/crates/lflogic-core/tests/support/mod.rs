//! Randomised checks shared by the integration tests of this crate and by
//! the acceptance report of the frontend crate. Every check returns a short
//! summary on success and a description of the first counterexample on
//! failure.

#![allow(dead_code)]

pub mod coverage;
pub mod focused;
pub mod gen;
pub mod kernel;
pub mod rules;
pub mod unification;
pub mod verdicts;

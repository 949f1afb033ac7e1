//! Core of the lflogic proof assistant: a canonical LF kernel with nominal
//! constants, the formula language for reasoning about LF specifications,
//! sequents, pattern unification, case analysis over typing derivations, the
//! inference rules with a tactic layer, and a bounded semantic oracle.

pub mod cases;
pub mod fixtures;
pub mod logic;
pub mod oracle;
pub mod print;
pub mod prover;
pub mod schemas;
pub mod sequent;
pub mod subst;
pub mod syntax;
pub mod tactics;
pub mod typing;
pub mod unify;

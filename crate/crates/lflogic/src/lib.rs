//! Frontend for the L_LF proof assistant: concrete syntax, elaboration,
//! script checking, an interactive loop and a JSON line protocol.

pub mod elab;
pub mod lexer;
pub mod parser;
pub mod protocol;
pub mod repl;
pub mod session;

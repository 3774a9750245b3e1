//! Handshaking-expansion front end and interpreter.
//!
//! Concrete syntax (ASCII): `*[S]` repetition, `[G -> S [] ...]`
//! deterministic selection, `[| G -> S [] ... |]` arbitrated selection,
//! `[G]` wait, `;` sequencing, `||` parallel composition (top-level `||`
//! separates processes), `~ & ^ |` in guards, `n+`/`n-` assignments.
//! Declarations may precede the processes: `chan C1(r_e, r_a, a);`,
//! `g=0;` initial values and `G := guard;` zero-delay definitions.

mod ast;
mod compile;
mod engine;
mod env;
mod lexer;
mod parser;
mod print;

pub use ast::{Arm, ChannelDecl, Guard, ProcessSet, Statement};
pub use compile::{compile, CGuard, NodeTable, Program};
pub use engine::{
    compile_with_envs, run, run_with, Engine, EnvCtx, Environment, Finish, HseError, RunError, StepOutcome,
};
pub use env::{FourPhaseRequester, Stimulus};
pub use lexer::Pos;
pub use parser::{parse_guard, parse_hse, ParseError};

pub(crate) use lexer::{tokenize, Cursor, Tok};

#[cfg(test)]
mod tests;

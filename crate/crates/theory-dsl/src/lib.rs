//! Parser, printer and static validator for action-theory and query files.
//!
//! A theory file declares named fluents (real-valued or over a finite symbol
//! set), an unnormalized initial weight over them, and actions — ordinary
//! deterministic effectors, noise-free sensors (`sensing`), and noisy
//! effectors whose nominal and actual parameters are split by `~`:
//!
//! ```text
//! theory robot1d
//! fluent h : real
//! fluent v : real
//! init  p = cases { 0.1 * gauss(v; 0, 16) if 2 <= h and h <= 12 ; 0 }
//! action move(x: real) { h' = max(0, h - x) }
//! action up(x: real)   { v' = v + x }
//! action sonar(z: real) sensing { likelihood = cases { gauss(z - h; 0, 4) if z >= 0 ; 0 } }
//! ```
//!
//! Queries are one-liners resolved against a parsed theory:
//!
//! ```text
//! bel (h <= 9) after [move(4), sonar(5)]
//! knows (h@0 > 1) after [move(4)]
//! marginal h after [move(4)] bins=16 range=0,8
//! ```
//!
//! Parsing is pure and the resulting [`TheorySpec`] is immutable, so specs
//! are freely shared across threads.

pub mod ast;
mod error;
pub mod init;
mod lexer;
mod parser;
pub mod printer;
pub mod validate;

pub use ast::{
    ActionDecl, ActionKind, Diagnostic, Domain, FluentDecl, GroundAction, Overrides, ParamDecl,
    Query, QueryKind, Severity, Span, TheorySpec,
};
pub use error::ParseError;
pub use init::{analyze_init, const_eval, InitAnalysis, InitFactor, InitModel};
pub use parser::{parse_query, parse_theory};
pub use printer::{print_expr, print_formula, print_theory};
pub use validate::validate;

impl From<&ParseError> for Diagnostic {
    fn from(e: &ParseError) -> Diagnostic {
        Diagnostic::error(e.span(), e.to_string())
    }
}

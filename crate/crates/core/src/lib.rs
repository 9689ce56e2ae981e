//! Language specifications as data: a text format for grammars and
//! inference rules, two transformations over them (adding algorithmic
//! subtyping to typing rules, deriving a CK machine from evaluation
//! contexts), and an engine that executes both the source and the derived
//! semantics so the transformations can be tested against each other.
//!
//! ```
//! use langx::{ck, engine, fixtures, parser};
//!
//! let stlc = parser::parse_spec(fixtures::STLC).unwrap();
//! let machine = ck::derive_ck(&stlc).unwrap();
//! let program = parser::parse_term(&stlc, "(app (lam x int x) c)").unwrap();
//!
//! let small = engine::eval(&program, &stlc, engine::DEFAULT_FUEL);
//! let ck = engine::ck_eval(&program, &machine, engine::DEFAULT_FUEL);
//! assert_eq!(small.result, ck.result);
//! assert_eq!(small.trace.len(), 1);
//! assert_eq!(ck.trace.len(), 3);
//! ```

// Errors carry the offending terms for diagnostics; they are built on cold paths.
#![allow(clippy::result_large_err)]

pub mod ck;
pub mod engine;
pub mod fixtures;
pub mod ir;
pub mod parser;
pub mod subtyping;
pub mod variance;

/// The book's chapters, so their code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/format.md")]
    mod format {}
    #[doc = include_str!("../../../book/src/variance.md")]
    mod variance {}
    #[doc = include_str!("../../../book/src/subtyping.md")]
    mod subtyping {}
    #[doc = include_str!("../../../book/src/ck.md")]
    mod ck {}
    #[doc = include_str!("../../../book/src/engine.md")]
    mod engine {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}

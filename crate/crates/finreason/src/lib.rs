//! Deterministic building blocks for financial numerical reasoning.
//!
//! The crate covers the full desk-scale pipeline around reasoning programs
//! written in the ten-operation financial DSL:
//!
//! - [`dsl`] — lexing, parsing, and serialization of reasoning programs and
//!   financial-format numbers.
//! - [`executor`] — evaluation of a program against a financial table.
//! - [`equivalence`] — symbolic canonicalization and gold-program equivalence,
//!   plus a randomized numeric oracle.
//! - [`mask`] — the finite-state grammar automaton that yields per-step
//!   valid-token masks for constrained decoding.
//! - [`fusion`] — retriever score averaging, top-k ranking, recall, negative
//!   sampling, split combination, and weighted generator fusion.
//! - [`attention`] — a 64-bit float kernel for standard and disentangled
//!   attention with analytic backward passes and finite-difference checks.
//! - [`eval`] — dataset ingestion and execution/program accuracy metrics.

pub mod attention;
pub mod dsl;
pub mod equivalence;
pub mod eval;
pub mod executor;
pub mod fusion;
pub mod mask;

pub use dsl::{parse_financial_number, parse_program, serialize_program, Argument, OperationKind, Program, Step};
pub use equivalence::{canonicalize, programs_equivalent, symbolize, CanonicalForm, SymbolicExpr};
pub use executor::{compare_answers, execute_program, Answer, FinTable, Tolerances};

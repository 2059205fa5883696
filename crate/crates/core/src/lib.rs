//! Checker, constraint solver, elaborator and interpreter for a small
//! functional language with linear types and linear constraints.

pub mod calculus;
pub mod constraint;
pub mod elaborate;
pub mod entail;
pub mod fuzz;
pub mod generate;
pub mod oracle;
pub mod pipeline;
pub mod prelude;
pub mod properties;
pub mod solver;
pub mod syntax;
pub mod types;

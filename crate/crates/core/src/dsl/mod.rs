//! The neuron description language: a small first-order subset of SML.

pub mod ast;
pub mod complexity;
pub mod error;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod typecheck;

pub use ast::{Activation, BinOp, Expr, NeuronProgram, Param, Pattern, NUM_MAPPINGS, PARAMS};
pub use complexity::{complexity, expr_complexity, Symbol, SymbolCost};
pub use error::DslError;
pub use parser::{parse, parse_expr};
pub use pretty::{pretty_print, sml_real};
pub use typecheck::{typecheck, Type, TypedProgram};

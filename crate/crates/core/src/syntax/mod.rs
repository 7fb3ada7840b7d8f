//! Surface syntax: AST, concrete grammar, typechecking, and the purely
//! syntactic meta-operations (projection, alignment, weaving, footprints,
//! separators, rewriting).

pub mod ast;
mod display;
pub mod ftpt;
pub mod meta;
pub mod parse;
pub mod typecheck;
pub mod uequiv;

pub use ast::*;
pub use ftpt::*;
pub use meta::*;
pub use parse::{
    parse_biprogram_str, parse_class_table_str, parse_command_str, parse_effect_str,
    parse_expr_str, parse_rformula_str, parse_uformula_str, ParseError, Parser, SugarCtx,
};
pub use typecheck::{Tc, TypeError};
pub use uequiv::uequiv_check;

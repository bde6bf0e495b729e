//! Textual model language: syntax tree, parser and canonical printer.

pub mod ast;
mod parser;
mod printer;

pub use parser::parse_model;
pub(crate) use parser::number_value;
pub use printer::print_model;

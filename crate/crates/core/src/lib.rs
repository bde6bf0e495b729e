//! Functional modeling of software as flows of things through spheres of
//! machines: a textual DSL, static validation, events and chronologies, a
//! token simulator, class-diagram import and DOT rendering.

pub mod diag;
pub mod dsl;
pub mod events;
pub mod lex;
pub mod model;
pub mod value;
pub mod document;
pub mod sim;
pub mod classmap;
pub mod render;
pub mod cli;

//! Simplified class declarations and their translation into spheres,
//! machines, events and methods.

mod link;
mod parse;
mod translate;

use std::fmt;

use crate::diag::Loc;
use crate::value::{Operand, Value};

pub use link::link_inheritance;
pub use parse::parse_classes;
pub use translate::{import_classes, translate, Translation};

#[derive(Clone, Debug, PartialEq)]
pub struct ClassDecl {
    pub name: String,
    pub superclass: Option<String>,
    pub attributes: Vec<AttrDecl>,
    pub methods: Vec<MethodDef>,
    pub loc: Loc,
}

impl ClassDecl {
    pub fn attribute(&self, name: &str) -> Option<&AttrDecl> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Visibility {
    Public,
    Private,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttrType {
    Int,
    Real,
    Str,
    Object(String),
}

impl AttrType {
    /// The machine type tag for scalar attributes.
    pub fn tag(&self) -> Option<&'static str> {
        match self {
            AttrType::Int => Some("int"),
            AttrType::Real => Some("real"),
            AttrType::Str => Some("string"),
            AttrType::Object(_) => None,
        }
    }
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrType::Object(k) => write!(f, "object:{k}"),
            other => f.write_str(other.tag().unwrap_or_default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttrDecl {
    pub name: String,
    pub ty: AttrType,
    /// Metadata only.
    pub visibility: Visibility,
    pub init: Option<Value>,
    /// Copied in from a superclass by linking.
    pub inherited: bool,
    pub loc: Loc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MethodKind {
    Constructor { params: Vec<String> },
    /// Assigns each parameter to the attribute in the same position.
    Setter { attrs: Vec<String>, params: Vec<String> },
    /// `a` or `a.b`, the latter reading attribute `b` of object attribute `a`.
    Getter { path: Vec<String> },
    Update { attr: String, sign: Sign, operand: Operand },
    Output { attrs: Vec<String>, format: Option<String> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodDef {
    pub name: String,
    pub kind: MethodKind,
    pub inherited: bool,
    pub loc: Loc,
}

impl MethodDef {
    /// Attributes of the declaring class the body refers to.
    pub fn attrs(&self) -> Vec<&str> {
        match &self.kind {
            MethodKind::Constructor { params } => params.iter().map(String::as_str).collect(),
            MethodKind::Setter { attrs, .. } | MethodKind::Output { attrs, .. } => {
                attrs.iter().map(String::as_str).collect()
            }
            MethodKind::Getter { path } => vec![path[0].as_str()],
            MethodKind::Update { attr, .. } => vec![attr.as_str()],
        }
    }
}

//! Diagnostics shared by model building, validation, event binding and class
//! translation.

use std::fmt;

use serde::Serialize;

/// A 1-based line/column position in a source file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub const fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Every diagnostic code the toolkit can emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Code {
    // model building and validation
    DanglingRef,
    DuplicateName,
    IllegalFlow,
    ReceiveAndArriveTogether,
    SphereCycle,
    StorageOnMissingStage,
    OrphanMachine,
    UnreachableStage,
    // events, chronologies, methods
    EmptyRegion,
    RegionNotClosed,
    DisconnectedRegion,
    RepeatBoundZero,
    AlternativeOverlap,
    EmptySequence,
    NoSourceEvent,
    // classes
    UnknownSuperclass,
    InheritanceCycle,
    InheritanceConflict,
    UnknownClass,
    UnknownAttribute,
    ObjectCycle,
    MultiplicityUnsupported,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::DanglingRef => "DanglingRef",
            Code::DuplicateName => "DuplicateName",
            Code::IllegalFlow => "IllegalFlow",
            Code::ReceiveAndArriveTogether => "ReceiveAndArriveTogether",
            Code::SphereCycle => "SphereCycle",
            Code::StorageOnMissingStage => "StorageOnMissingStage",
            Code::OrphanMachine => "OrphanMachine",
            Code::UnreachableStage => "UnreachableStage",
            Code::EmptyRegion => "EmptyRegion",
            Code::RegionNotClosed => "RegionNotClosed",
            Code::DisconnectedRegion => "DisconnectedRegion",
            Code::RepeatBoundZero => "RepeatBoundZero",
            Code::AlternativeOverlap => "AlternativeOverlap",
            Code::EmptySequence => "EmptySequence",
            Code::NoSourceEvent => "NoSourceEvent",
            Code::UnknownSuperclass => "UnknownSuperclass",
            Code::InheritanceCycle => "InheritanceCycle",
            Code::InheritanceConflict => "InheritanceConflict",
            Code::UnknownClass => "UnknownClass",
            Code::UnknownAttribute => "UnknownAttribute",
            Code::ObjectCycle => "ObjectCycle",
            Code::MultiplicityUnsupported => "MultiplicityUnsupported",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    pub loc: Option<Loc>,
    /// Qualified names of the offending elements.
    pub elements: Vec<String>,
}

impl Diagnostic {
    pub fn error(code: Code, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            loc: None,
            elements: Vec::new(),
        }
    }

    pub fn warning(code: Code, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, message)
        }
    }

    pub fn at(mut self, loc: Option<Loc>) -> Self {
        self.loc = loc;
        self
    }

    pub fn with_element(mut self, name: impl Into<String>) -> Self {
        self.elements.push(name.into());
        self
    }
}

/// Formats as `severity code location message`, the line format the CLI prints.
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.loc {
            Some(loc) => write!(f, "{} {} {} {}", self.severity, self.code, loc, self.message),
            None => write!(f, "{} {} - {}", self.severity, self.code, self.message),
        }
    }
}

/// An ordered collection of diagnostics. Collection never stops at the first
/// error; callers see every violation at once.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    items: Vec<Diagnostic>,
}

impl Diagnostics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, d: Diagnostic) {
        self.items.push(d);
    }

    pub fn extend(&mut self, other: Diagnostics) {
        self.items.extend(other.items);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Diagnostic> {
        self.items.iter()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.items.iter().filter(|d| d.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.items.iter().filter(|d| d.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn error_count(&self) -> usize {
        self.errors().count()
    }

    pub fn count(&self, code: Code) -> usize {
        self.items.iter().filter(|d| d.code == code).count()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn into_vec(self) -> Vec<Diagnostic> {
        self.items
    }
}

impl From<Vec<Diagnostic>> for Diagnostics {
    fn from(items: Vec<Diagnostic>) -> Self {
        Diagnostics { items }
    }
}

impl IntoIterator for Diagnostics {
    type Item = Diagnostic;
    type IntoIter = std::vec::IntoIter<Diagnostic>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.into_iter()
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.items {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

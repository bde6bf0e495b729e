//! Payload values carried by tokens, and the small expression forms that
//! triggers may attach to the stage they activate.

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Str(String),
    /// Named fields; the empty record is the payload of a bare object token.
    Record(Vec<(String, Value)>),
}

impl Value {
    pub fn unit() -> Self {
        Value::Record(Vec::new())
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Value::Record(fields) if fields.is_empty())
    }

    /// The zero value for a basic type tag, if the tag names one.
    pub fn zero_for(type_tag: &str) -> Option<Value> {
        match type_tag {
            "int" => Some(Value::Int(0)),
            "real" => Some(Value::Real(0.0)),
            "string" => Some(Value::Str(String::new())),
            _ => None,
        }
    }

    /// Parses a command-line scalar: integer, then real, then a string
    /// (surrounding double quotes are stripped).
    pub fn parse_scalar(text: &str) -> Value {
        let t = text.trim();
        if let Ok(i) = t.parse::<i64>() {
            return Value::Int(i);
        }
        if let Ok(r) = t.parse::<f64>() {
            if r.is_finite() {
                return Value::Real(r);
            }
        }
        let unquoted = t
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .unwrap_or(t);
        Value::Str(unquoted.to_string())
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Real(_) => "real",
            Value::Str(_) => "string",
            Value::Record(_) => "record",
        }
    }

    pub fn add(&self, rhs: &Value) -> Result<Value, ArithError> {
        match (self, rhs) {
            (Value::Int(a), Value::Int(b)) => {
                a.checked_add(*b).map(Value::Int).ok_or(ArithError::Overflow)
            }
            (Value::Str(a), Value::Str(b)) => Ok(Value::Str(format!("{a}{b}"))),
            (a, b) => match (a.as_real(), b.as_real()) {
                (Some(x), Some(y)) => Ok(Value::Real(x + y)),
                _ => Err(ArithError::TypeMismatch(a.type_name(), b.type_name())),
            },
        }
    }

    pub fn sub(&self, rhs: &Value) -> Result<Value, ArithError> {
        match (self, rhs) {
            (Value::Int(a), Value::Int(b)) => {
                a.checked_sub(*b).map(Value::Int).ok_or(ArithError::Overflow)
            }
            (a, b) => match (a.as_real(), b.as_real()) {
                (Some(x), Some(y)) => Ok(Value::Real(x - y)),
                _ => Err(ArithError::TypeMismatch(a.type_name(), b.type_name())),
            },
        }
    }

    fn as_real(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("cannot combine {0} with {1}")]
    TypeMismatch(&'static str, &'static str),
    #[error("integer overflow")]
    Overflow,
}

pub(crate) fn fmt_real(x: f64) -> String {
    let s = format!("{x}");
    if s.contains(['.', 'e', 'E']) || !x.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Strings are quoted and escaped so the rendering never contains a raw tab
/// or newline.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => f.write_str(&fmt_real(*r)),
            Value::Str(s) => f.write_str(&quote(s)),
            Value::Record(fields) => {
                f.write_str("{")?;
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}={v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(i) => s.serialize_i64(*i),
            Value::Real(r) => s.serialize_f64(*r),
            Value::Str(v) => s.serialize_str(v),
            Value::Record(fields) => {
                let mut m = s.serialize_map(Some(fields.len()))?;
                for (k, v) in fields {
                    m.serialize_entry(k, v)?;
                }
                m.end()
            }
        }
    }
}

/// A literal scalar or a reference to a run-time argument binding.
#[derive(Clone, Debug, PartialEq)]
pub enum Operand {
    Lit(Value),
    Arg(String),
}

impl Operand {
    pub fn resolve(&self, args: &BTreeMap<String, Value>) -> Option<Value> {
        match self {
            Operand::Lit(v) => Some(v.clone()),
            Operand::Arg(name) => args.get(name).cloned(),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Lit(v) => write!(f, "{v}"),
            Operand::Arg(name) => f.write_str(name),
        }
    }
}

/// What a trigger does to the stage it activates.
///
/// `Set` on a create stage gives the new token its payload; on any other
/// stage it overwrites the payload of the token found there. `Output` leaves
/// the source token in place and sends a copy downstream.
#[derive(Clone, Debug, PartialEq)]
pub enum Effect {
    Set(Operand),
    Add(Operand),
    Sub(Operand),
    Output(Option<String>),
}

impl Effect {
    pub fn operand(&self) -> Option<&Operand> {
        match self {
            Effect::Set(o) | Effect::Add(o) | Effect::Sub(o) => Some(o),
            Effect::Output(_) => None,
        }
    }
}

/// Prints the DSL form that follows `with`.
impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Effect::Set(o) => write!(f, "set {o}"),
            Effect::Add(o) => write!(f, "add {o}"),
            Effect::Sub(o) => write!(f, "sub {o}"),
            Effect::Output(None) => f.write_str("output"),
            Effect::Output(Some(fmt_str)) => write!(f, "output {}", quote(fmt_str)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_promotes_and_rejects() {
        assert_eq!(Value::Int(2).add(&Value::Int(3)), Ok(Value::Int(5)));
        assert_eq!(Value::Int(2).add(&Value::Real(0.5)), Ok(Value::Real(2.5)));
        assert_eq!(Value::Int(2).sub(&Value::Int(3)), Ok(Value::Int(-1)));
        assert_eq!(
            Value::Str("a".into()).add(&Value::Str("b".into())),
            Ok(Value::Str("ab".into()))
        );
        assert!(matches!(
            Value::Str("a".into()).sub(&Value::Int(1)),
            Err(ArithError::TypeMismatch("string", "int"))
        ));
        assert_eq!(Value::Int(i64::MAX).add(&Value::Int(1)), Err(ArithError::Overflow));
    }

    #[test]
    fn scalar_parsing() {
        assert_eq!(Value::parse_scalar("13"), Value::Int(13));
        assert_eq!(Value::parse_scalar("-2"), Value::Int(-2));
        assert_eq!(Value::parse_scalar("2.5"), Value::Real(2.5));
        assert_eq!(Value::parse_scalar("\"x y\""), Value::Str("x y".into()));
        assert_eq!(Value::parse_scalar("inf"), Value::Str("inf".into()));
    }

    #[test]
    fn reals_always_print_a_fraction() {
        assert_eq!(Value::Real(3.0).to_string(), "3.0");
        assert_eq!(Value::Real(0.25).to_string(), "0.25");
        assert_eq!(Value::Str("a\tb".into()).to_string(), "\"a\\tb\"");
    }
}

//! Compile-time values.

use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;

use crate::syntax::BasicKind;

/// Reserved domain of ports declared without `@domain`.
pub const DEFAULT_CLOCK_DOMAIN: &str = "!default";

/// A named clock identity. Two domains are equal iff their names are.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockDomain(pub String);

impl ClockDomain {
    pub fn new(name: impl Into<String>) -> Self {
        ClockDomain(name.into())
    }

    pub fn default_domain() -> Self {
        ClockDomain(DEFAULT_CLOCK_DOMAIN.to_string())
    }

    pub fn is_default(&self) -> bool {
        self.0 == DEFAULT_CLOCK_DOMAIN
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl Default for ClockDomain {
    fn default() -> Self {
        ClockDomain::default_domain()
    }
}

#[derive(Debug, Clone)]
pub enum Value {
    Int(BigInt),
    Float(f64),
    Str(String),
    Bool(bool),
    Clock(ClockDomain),
    /// Homogeneous, never nested.
    Array(Vec<Value>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Clock(a), Value::Clock(b)) => a == b,
            (Value::Array(a), Value::Array(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Value::Int(i) => i.hash(state),
            Value::Float(f) => f.to_bits().hash(state),
            Value::Str(s) => s.hash(state),
            Value::Bool(b) => b.hash(state),
            Value::Clock(c) => c.hash(state),
            Value::Array(v) => v.hash(state),
        }
    }
}

impl Value {
    pub fn int(i: impl Into<BigInt>) -> Value {
        Value::Int(i.into())
    }

    /// The basic kind of a scalar value; `None` for arrays.
    pub fn kind(&self) -> Option<BasicKind> {
        Some(match self {
            Value::Int(_) => BasicKind::Int,
            Value::Float(_) => BasicKind::Float,
            Value::Str(_) => BasicKind::String,
            Value::Bool(_) => BasicKind::Bool,
            Value::Clock(_) => BasicKind::ClockDomain,
            Value::Array(_) => return None,
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind() {
            Some(k) => k.as_str(),
            None => "array",
        }
    }

    /// Canonical text used in mangled names: integers in base 10, floats in
    /// shortest round-trip form, strings and domain names percent-escaped.
    pub fn canonical(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Float(f) => format!("{f:?}"),
            Value::Str(s) => percent_escape(s),
            Value::Bool(b) => b.to_string(),
            Value::Clock(c) => percent_escape(c.name()),
            Value::Array(v) => {
                let items: Vec<String> = v.iter().map(Value::canonical).collect();
                format!("[{}]", items.join(","))
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Clock(c) => write!(f, "@{}", c.name()),
            Value::Array(v) => {
                f.write_str("[")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Escapes every character outside `[A-Za-z0-9]` as `%XX` (UTF-8 bytes).
pub fn percent_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms() {
        assert_eq!(Value::int(8).canonical(), "8");
        assert_eq!(Value::Float(0.5).canonical(), "0.5");
        assert_eq!(Value::Float(2.0).canonical(), "2.0");
        assert_eq!(Value::Str("MED BAG".into()).canonical(), "MED%20BAG");
        assert_eq!(Value::Bool(true).canonical(), "true");
    }

    #[test]
    fn clock_equality_by_name() {
        assert_eq!(Value::Clock(ClockDomain::new("a")), Value::Clock(ClockDomain::new("a")));
        assert_ne!(Value::Clock(ClockDomain::new("a")), Value::Clock(ClockDomain::new("b")));
    }
}

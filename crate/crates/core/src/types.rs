//! The logical-type algebra: Null, Bit, Group, Union and Stream, plus named
//! references to declared types.
//!
//! Two equality relations are provided. [`strict_eq`] is nominal: named
//! types are equal only when they are the same declaration. [`hierarchy_eq`]
//! looks through names and compares shape, field names and stream
//! parameters. Neither relation looks at stream complexity, which is checked
//! separately by [`complexity_compatible`].

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

pub use crate::syntax::StreamDirection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Synchronicity {
    #[default]
    Sync,
    Flatten,
    Desync,
    FlatDesync,
}

impl Synchronicity {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "Sync" => Synchronicity::Sync,
            "Flatten" => Synchronicity::Flatten,
            "Desync" => Synchronicity::Desync,
            "FlatDesync" => Synchronicity::FlatDesync,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Synchronicity::Sync => "Sync",
            Synchronicity::Flatten => "Flatten",
            Synchronicity::Desync => "Desync",
            Synchronicity::FlatDesync => "FlatDesync",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamType {
    pub element: LogicalType,
    pub dimension: u32,
    pub direction: StreamDirection,
    pub throughput: BigRational,
    pub complexity: u32,
    pub synchronicity: Synchronicity,
}

impl StreamType {
    /// A stream with the default parameters: d=0, Forward, t=1, c=1, Sync.
    pub fn new(element: LogicalType) -> Self {
        StreamType {
            element,
            dimension: 0,
            direction: StreamDirection::Forward,
            throughput: BigRational::one(),
            complexity: 1,
            synchronicity: Synchronicity::Sync,
        }
    }

    /// Number of parallel data lanes: `ceil(throughput)`, at least 1.
    pub fn lanes(&self) -> u64 {
        let c = self.throughput.ceil().to_integer();
        c.to_u64().unwrap_or(u64::MAX).max(1)
    }
}

/// A declared type. Names are unique within one elaborated design.
#[derive(Debug, Clone)]
pub struct NamedType {
    pub name: String,
    pub ty: LogicalType,
}

impl PartialEq for NamedType {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.ty == other.ty
    }
}

impl Eq for NamedType {}

impl Hash for NamedType {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LogicalType {
    Null,
    Bit(u64),
    Group(Vec<(String, LogicalType)>),
    Union(Vec<(String, LogicalType)>),
    Stream(Box<StreamType>),
    Named(Arc<NamedType>),
}

impl LogicalType {
    pub fn named(name: impl Into<String>, ty: LogicalType) -> LogicalType {
        LogicalType::Named(Arc::new(NamedType { name: name.into(), ty }))
    }

    pub fn stream(element: LogicalType) -> LogicalType {
        LogicalType::Stream(Box::new(StreamType::new(element)))
    }

    /// Follows named references down to a structural type.
    pub fn peel(&self) -> &LogicalType {
        let mut t = self;
        while let LogicalType::Named(n) = t {
            t = &n.ty;
        }
        t
    }

    pub fn as_stream(&self) -> Option<&StreamType> {
        match self.peel() {
            LogicalType::Stream(s) => Some(s),
            _ => None,
        }
    }

    /// Calls `f` for every named type reachable from `self`, referents
    /// before referrers.
    pub fn visit_named(&self, f: &mut dyn FnMut(&Arc<NamedType>)) {
        match self {
            LogicalType::Null | LogicalType::Bit(_) => {}
            LogicalType::Group(fs) | LogicalType::Union(fs) => {
                for (_, t) in fs {
                    t.visit_named(f);
                }
            }
            LogicalType::Stream(s) => s.element.visit_named(f),
            LogicalType::Named(n) => {
                n.ty.visit_named(f);
                f(n);
            }
        }
    }
}

pub fn format_throughput(t: &BigRational) -> String {
    if t.is_integer() {
        t.to_integer().to_string()
    } else {
        format!("{}/{}", t.numer(), t.denom())
    }
}

impl fmt::Display for LogicalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogicalType::Null => f.write_str("Null"),
            LogicalType::Bit(w) => write!(f, "Bit({w})"),
            LogicalType::Group(fs) | LogicalType::Union(fs) => {
                let kw = if matches!(self, LogicalType::Group(_)) { "Group" } else { "Union" };
                write!(f, "{kw}(")?;
                for (i, (n, t)) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}: {t}")?;
                }
                f.write_str(")")
            }
            LogicalType::Stream(s) => {
                write!(f, "Stream({}", s.element)?;
                if s.dimension != 0 {
                    write!(f, ", d={}", s.dimension)?;
                }
                if !s.throughput.is_one() {
                    write!(f, ", t={}", format_throughput(&s.throughput))?;
                }
                if s.complexity != 1 {
                    write!(f, ", c={}", s.complexity)?;
                }
                if s.synchronicity != Synchronicity::Sync {
                    write!(f, ", s={}", s.synchronicity.as_str())?;
                }
                if s.direction != StreamDirection::Forward {
                    write!(f, ", r={:?}", s.direction)?;
                }
                f.write_str(")")
            }
            LogicalType::Named(n) => f.write_str(&n.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WidthError {
    #[error("a Stream has no scalar bit width")]
    Stream,
    #[error("bit width overflows 64 bits")]
    Overflow,
}

/// Number of bits needed to carry one element of `t`.
///
/// Null is 0, a Group is the sum of its children and a Union the maximum of
/// its children (no tag bits).
pub fn bit_width(t: &LogicalType) -> Result<u64, WidthError> {
    match t {
        LogicalType::Null => Ok(0),
        LogicalType::Bit(w) => Ok(*w),
        LogicalType::Group(fs) => fs.iter().try_fold(0u64, |acc, (_, c)| {
            acc.checked_add(bit_width(c)?).ok_or(WidthError::Overflow)
        }),
        LogicalType::Union(fs) => fs
            .iter()
            .try_fold(0u64, |acc, (_, c)| Ok(acc.max(bit_width(c)?))),
        LogicalType::Stream(_) => Err(WidthError::Stream),
        LogicalType::Named(n) => bit_width(&n.ty),
    }
}

/// Width of the discriminant a hardware union of `t` needs:
/// `ceil(log2(#children))` for a Union, 0 otherwise.
pub fn union_tag_width(t: &LogicalType) -> u64 {
    match t.peel() {
        LogicalType::Union(fs) if fs.len() > 1 => crate::eval::ceil_log2_exact(&BigInt::from(fs.len())).unwrap_or(0),
        _ => 0,
    }
}

fn stream_params_eq(a: &StreamType, b: &StreamType) -> bool {
    a.dimension == b.dimension
        && a.direction == b.direction
        && a.throughput == b.throughput
        && a.synchronicity == b.synchronicity
}

fn fields_eq(
    a: &[(String, LogicalType)],
    b: &[(String, LogicalType)],
    eq: fn(&LogicalType, &LogicalType) -> bool,
) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|((na, ta), (nb, tb))| na == nb && eq(ta, tb))
}

/// Nominal type equality. Named types match only themselves; anonymous
/// types match pointwise, ignoring stream complexity.
pub fn strict_eq(a: &LogicalType, b: &LogicalType) -> bool {
    use LogicalType::*;
    match (a, b) {
        (Named(x), Named(y)) => x.name == y.name,
        (Named(_), _) | (_, Named(_)) => false,
        (Null, Null) => true,
        (Bit(x), Bit(y)) => x == y,
        (Group(x), Group(y)) | (Union(x), Union(y)) => fields_eq(x, y, strict_eq),
        (Stream(x), Stream(y)) => stream_params_eq(x, y) && strict_eq(&x.element, &y.element),
        _ => false,
    }
}

/// Structural type equality, ignoring declaration names and stream
/// complexity but not field names.
pub fn hierarchy_eq(a: &LogicalType, b: &LogicalType) -> bool {
    use LogicalType::*;
    match (a.peel(), b.peel()) {
        (Null, Null) => true,
        (Bit(x), Bit(y)) => x == y,
        (Group(x), Group(y)) | (Union(x), Union(y)) => fields_eq(x, y, hierarchy_eq),
        (Stream(x), Stream(y)) => stream_params_eq(x, y) && hierarchy_eq(&x.element, &y.element),
        _ => false,
    }
}

/// A source may drive a sink whose protocol complexity is at least its own.
pub fn complexity_compatible(source: &StreamType, sink: &StreamType) -> bool {
    source.complexity <= sink.complexity
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(fs: &[(&str, LogicalType)]) -> LogicalType {
        LogicalType::Group(fs.iter().map(|(n, t)| (n.to_string(), t.clone())).collect())
    }

    fn union(fs: &[(&str, LogicalType)]) -> LogicalType {
        LogicalType::Union(fs.iter().map(|(n, t)| (n.to_string(), t.clone())).collect())
    }

    fn stream_d(t: LogicalType, d: u32) -> LogicalType {
        let mut s = StreamType::new(t);
        s.dimension = d;
        LogicalType::Stream(Box::new(s))
    }

    #[test]
    fn widths() {
        assert_eq!(bit_width(&LogicalType::Bit(8)), Ok(8));
        assert_eq!(bit_width(&LogicalType::Null), Ok(0));
        let g = group(&[("a", LogicalType::Bit(8)), ("b", LogicalType::Bit(32))]);
        assert_eq!(bit_width(&g), Ok(40));
        let u = union(&[("a", LogicalType::Bit(8)), ("b", LogicalType::Bit(32))]);
        assert_eq!(bit_width(&u), Ok(32));
        assert_eq!(bit_width(&LogicalType::stream(LogicalType::Bit(1))), Err(WidthError::Stream));
        let alias = LogicalType::named("G", g.clone());
        assert_eq!(bit_width(&alias), bit_width(&g));
    }

    #[test]
    fn strict_is_nominal() {
        let a = LogicalType::named("A", LogicalType::Bit(8));
        let b = LogicalType::named("B", LogicalType::Bit(8));
        assert!(!strict_eq(&a, &b));
        assert!(strict_eq(&a, &a.clone()));
        assert!(hierarchy_eq(&a, &b));
        assert!(!strict_eq(&stream_d(a.clone(), 2), &stream_d(a.clone(), 1)));
        assert!(strict_eq(&stream_d(a.clone(), 2), &stream_d(a, 2)));
    }

    #[test]
    fn hierarchy_checks_field_names_and_variant() {
        let x = LogicalType::named("G1", group(&[("x", LogicalType::Bit(8))]));
        let y = LogicalType::named("G2", group(&[("y", LogicalType::Bit(8))]));
        assert!(!hierarchy_eq(&x, &y));
        let u = union(&[("x", LogicalType::Bit(8))]);
        let g = group(&[("x", LogicalType::Bit(8))]);
        assert!(!hierarchy_eq(&u, &g));
    }

    #[test]
    fn complexity_ignored_by_equality() {
        let mut s1 = StreamType::new(LogicalType::Bit(8));
        let mut s4 = s1.clone();
        s1.complexity = 1;
        s4.complexity = 4;
        let (a, b) = (LogicalType::Stream(Box::new(s1.clone())), LogicalType::Stream(Box::new(s4.clone())));
        assert!(strict_eq(&a, &b));
        assert!(complexity_compatible(&s1, &s4));
        assert!(!complexity_compatible(&s4, &s1));
        assert!(complexity_compatible(&s4, &s4));
    }

    #[test]
    fn lanes_round_up() {
        let mut s = StreamType::new(LogicalType::Bit(8));
        assert_eq!(s.lanes(), 1);
        s.throughput = BigRational::new(5.into(), 2.into());
        assert_eq!(s.lanes(), 3);
        s.throughput = BigRational::new(1.into(), 2.into());
        assert_eq!(s.lanes(), 1);
    }

    #[test]
    fn union_tags() {
        let u3 = union(&[("a", LogicalType::Bit(1)), ("b", LogicalType::Bit(2)), ("c", LogicalType::Null)]);
        assert_eq!(union_tag_width(&u3), 2);
        assert_eq!(union_tag_width(&union(&[("a", LogicalType::Bit(1))])), 0);
        assert_eq!(union_tag_width(&LogicalType::Bit(4)), 0);
    }
}

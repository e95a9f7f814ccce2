//! Design rule checks on an elaborated design.

use std::collections::HashMap;

use crate::design::*;
use crate::diag::{Code, Diagnostic};
use crate::syntax::StreamDirection;
use crate::types::{complexity_compatible, hierarchy_eq, strict_eq};

/// Type equality used for connections without `@NoStrictType`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DrcMode {
    #[default]
    Strict,
    Hierarchy,
}

impl DrcMode {
    pub fn parse(s: &str) -> Option<DrcMode> {
        match s {
            "strict" => Some(DrcMode::Strict),
            "hierarchy" => Some(DrcMode::Hierarchy),
            _ => None,
        }
    }
}

/// Checks one connection: type, then direction, then clock domain, then
/// complexity. Returns the first failure.
pub fn check_connection(
    design: &ElaboratedDesign,
    imp: &ElaboratedImpl,
    conn: &Connection,
    mode: DrcMode,
) -> Option<Diagnostic> {
    let (src, dst) = match (design.resolve(imp, &conn.src), design.resolve(imp, &conn.dst)) {
        (Some(s), Some(d)) => (s, d),
        _ => {
            return Some(Diagnostic::error(
                Code::E002,
                format!("connection `{} => {}` has a dangling endpoint", conn.src, conn.dst),
                conn.span,
            ))
        }
    };
    let relaxed = conn.relax || mode == DrcMode::Hierarchy;
    let same = if relaxed {
        hierarchy_eq(&src.port.ty, &dst.port.ty)
    } else {
        strict_eq(&src.port.ty, &dst.port.ty)
    };
    if !same {
        return Some(Diagnostic::error(
            Code::E003,
            format!(
                "type mismatch: `{}` has type `{}` but `{}` has type `{}`",
                conn.src,
                type_name(&src.port.ty),
                conn.dst,
                type_name(&dst.port.ty)
            ),
            conn.span,
        ));
    }
    let (s, d) = (src.port.stream(), dst.port.stream());
    if s.direction == StreamDirection::Reverse || d.direction == StreamDirection::Reverse {
        return Some(Diagnostic::error(
            Code::E003,
            format!("unsupported reverse stream in `{} => {}`", conn.src, conn.dst),
            conn.span,
        ));
    }
    if !src.local_source {
        return Some(Diagnostic::error(
            Code::E003,
            format!("`{}` cannot be used as a source here", conn.src),
            conn.span,
        ));
    }
    if dst.local_source {
        return Some(Diagnostic::error(
            Code::E003,
            format!("`{}` cannot be used as a sink here", conn.dst),
            conn.span,
        ));
    }
    if src.port.clock != dst.port.clock {
        return Some(Diagnostic::error(
            Code::E005,
            format!(
                "clock domain mismatch: `{}` is on `{}` but `{}` is on `{}`",
                conn.src,
                src.port.clock.name(),
                conn.dst,
                dst.port.clock.name()
            ),
            conn.span,
        ));
    }
    if !complexity_compatible(s, d) {
        return Some(Diagnostic::error(
            Code::E006,
            format!(
                "complexity {} of `{}` exceeds complexity {} of `{}`",
                s.complexity, conn.src, d.complexity, conn.dst
            ),
            conn.span,
        ));
    }
    None
}

fn type_name(t: &crate::types::LogicalType) -> String {
    t.to_string()
}

/// Every endpoint of `imp` must appear in exactly one connection.
pub fn check_port_usage(design: &ElaboratedDesign, imp: &ElaboratedImpl) -> Vec<Diagnostic> {
    if imp.external {
        return Vec::new();
    }
    let mut uses: HashMap<&Endpoint, Vec<&Connection>> = HashMap::new();
    for c in &imp.connections {
        uses.entry(&c.src).or_default().push(c);
        uses.entry(&c.dst).or_default().push(c);
    }
    let mut out = Vec::new();
    for (ep, port) in design.endpoints(imp) {
        let found = uses.get(&ep).map(Vec::as_slice).unwrap_or(&[]);
        if found.len() == 1 {
            continue;
        }
        let span = match found.get(1) {
            Some(c) => c.span,
            None => match &ep.owner {
                Owner::Local => port.span,
                owner => imp.instance(owner).and_then(|i| i.span),
            },
        };
        let what = match &ep.owner {
            Owner::Local => format!("port `{ep}` of `{}`", imp.name),
            _ => format!("port `{ep}`"),
        };
        out.push(Diagnostic::error(
            Code::E004,
            format!(
                "{what} is used {} times; each port must be used exactly once",
                found.len()
            ),
            span,
        ));
    }
    out
}

/// Runs both checks over every implementation.
pub fn check_design(design: &ElaboratedDesign, mode: DrcMode) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for imp in design.impls.values() {
        for c in &imp.connections {
            out.extend(check_connection(design, imp, c, mode));
        }
        out.extend(check_port_usage(design, imp));
    }
    out
}

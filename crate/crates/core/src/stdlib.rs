//! Built-in templates: the duplicator and voider used by sugaring.

use crate::design::{ElaboratedDesign, ElaboratedImpl, ElaboratedPort, ElaboratedStreamlet, Intrinsic, Origin};
use crate::syntax::PortDir;
use crate::types::LogicalType;
use crate::value::ClockDomain;

/// Path the prelude is registered under in a source map.
pub const PRELUDE_PATH: &str = "<std>";

pub const DUPLICATOR_STREAMLET: &str = "duplicator_s";
pub const DUPLICATOR_IMPL: &str = "duplicator_i";
pub const VOIDER_STREAMLET: &str = "voider_s";
pub const VOIDER_IMPL: &str = "voider_i";

/// Source of the prelude, visible from every file.
pub const PRELUDE: &str = "\
// copies one stream to n outputs; input is acknowledged once every output accepted
streamlet duplicator_s<T: type, n: int> {
  in: T in,
  out: T out [n],
}
external impl duplicator_i<T: type, n: int> of duplicator_s<type T, n> {}

// accepts and discards every packet
streamlet voider_s<T: type> {
  in: T in,
}
external impl voider_i<T: type> of voider_s<type T> {}
";

/// The intrinsic behind a prelude implementation, if any.
pub fn intrinsic_for(decl: &str, args: &[String]) -> Option<Intrinsic> {
    match decl {
        DUPLICATOR_IMPL => {
            let outputs = args.get(1)?.parse().ok()?;
            Some(Intrinsic::Duplicator { outputs })
        }
        VOIDER_IMPL => Some(Intrinsic::Voider),
        _ => None,
    }
}

/// Text used for a type in mangled names and origins.
pub fn type_arg_text(t: &LogicalType) -> String {
    match t {
        LogicalType::Named(n) => n.name.clone(),
        other => other.to_string(),
    }
}

/// Turns arbitrary text into `[A-Za-z0-9_]`, collapsing separators.
pub fn ident_safe(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let t = out.trim_end_matches('_');
    t.to_string()
}

fn clock_args(args: &mut Vec<String>, clock: &ClockDomain) {
    if !clock.is_default() {
        args.push(format!("@{}", clock.name()));
    }
}

fn add_intrinsic(
    design: &mut ElaboratedDesign,
    streamlet_origin: Origin,
    impl_origin: Origin,
    ports: Vec<ElaboratedPort>,
    intrinsic: Intrinsic,
) -> String {
    if let Some(existing) = design.impl_by_origin(&impl_origin) {
        return existing.name.clone();
    }
    let streamlet = match design.streamlet_by_origin(&streamlet_origin) {
        Some(s) => s.name.clone(),
        None => {
            let name = ElaboratedDesign::fresh_name(&ident_safe(&streamlet_origin.mangled()), |n| {
                design.streamlets.contains_key(n)
            });
            design.streamlets.insert(
                name.clone(),
                ElaboratedStreamlet {
                    name: name.clone(),
                    origin: streamlet_origin,
                    ports,
                },
            );
            name
        }
    };
    let name = ElaboratedDesign::fresh_name(&ident_safe(&impl_origin.mangled()), |n| design.impls.contains_key(n));
    design.impls.insert(
        name.clone(),
        ElaboratedImpl {
            name: name.clone(),
            origin: impl_origin,
            streamlet,
            external: true,
            intrinsic: Some(intrinsic),
            instances: Vec::new(),
            connections: Vec::new(),
        },
    );
    name
}

fn port(name: &str, index: Option<u64>, dir: PortDir, ty: &LogicalType, clock: &ClockDomain) -> ElaboratedPort {
    ElaboratedPort {
        name: name.to_string(),
        index,
        dir,
        ty: ty.clone(),
        clock: clock.clone(),
        span: None,
    }
}

/// Finds or creates `duplicator_i<type ty, outputs>` on `clock`; returns
/// the implementation name.
pub fn duplicator(design: &mut ElaboratedDesign, ty: &LogicalType, outputs: u64, clock: &ClockDomain) -> String {
    let mut args = vec![type_arg_text(ty), outputs.to_string()];
    clock_args(&mut args, clock);
    let mut ports = vec![port("in", None, PortDir::In, ty, clock)];
    for j in 0..outputs {
        ports.push(port("out", Some(j), PortDir::Out, ty, clock));
    }
    add_intrinsic(
        design,
        Origin::new(DUPLICATOR_STREAMLET, args.clone()),
        Origin::new(DUPLICATOR_IMPL, args),
        ports,
        Intrinsic::Duplicator { outputs },
    )
}

/// Finds or creates `voider_i<type ty>` on `clock`.
pub fn voider(design: &mut ElaboratedDesign, ty: &LogicalType, clock: &ClockDomain) -> String {
    let mut args = vec![type_arg_text(ty)];
    clock_args(&mut args, clock);
    add_intrinsic(
        design,
        Origin::new(VOIDER_STREAMLET, args.clone()),
        Origin::new(VOIDER_IMPL, args),
        vec![port("in", None, PortDir::In, ty, clock)],
        Intrinsic::Voider,
    )
}

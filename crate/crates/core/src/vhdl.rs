//! Structural VHDL: one entity + architecture per implementation.
//!
//! A port of type `Stream(T, d, t, ..)` becomes:
//!
//! | signal   | width                        | direction        |
//! |----------|------------------------------|------------------|
//! | `_data`  | `bit_width(T) * ceil(t)`     | with the stream  |
//! | `_valid` | 1                            | with the stream  |
//! | `_ready` | 1                            | against it       |
//! | `_last`  | `d` (omitted when 0)         | with the stream  |
//! | `_tag`   | `ceil(log2(n))` for a Union of n children (else omitted) | with the stream |
//!
//! `_data` is omitted for zero-width elements.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use crate::design::*;
use crate::syntax::PortDir;
use crate::types::{bit_width, union_tag_width, LogicalType};

const RESERVED: &[&str] = &[
    "abs", "access", "after", "alias", "all", "and", "architecture", "array", "assert", "assume",
    "assume_guarantee", "attribute", "begin", "block", "body", "buffer", "bus", "case", "component",
    "configuration", "constant", "context", "cover", "default", "disconnect", "downto", "else",
    "elsif", "end", "entity", "exit", "fairness", "file", "for", "force", "function", "generate",
    "generic", "group", "guarded", "if", "impure", "in", "inertial", "inout", "is", "label",
    "library", "linkage", "literal", "loop", "map", "mod", "nand", "new", "next", "nor", "not",
    "null", "of", "on", "open", "or", "others", "out", "package", "parameter", "port", "postponed",
    "procedure", "process", "property", "protected", "pure", "range", "record", "register",
    "reject", "release", "rem", "report", "restrict", "restrict_guarantee", "return", "rol", "ror",
    "select", "sequence", "severity", "shared", "signal", "sla", "sll", "sra", "srl", "strong",
    "subtype", "then", "to", "transport", "type", "unaffected", "units", "until", "use",
    "variable", "vmode", "vprop", "vunit", "wait", "when", "while", "with", "xnor", "xor", "ieee",
    "std", "work", "std_logic", "std_logic_vector", "std_logic_1164",
];

/// Maps arbitrary text to a legal VHDL basic identifier: letters, digits
/// and single inner underscores, starting with a letter, not reserved.
pub fn sanitize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.is_empty() && !out.ends_with('_') {
            out.push('_');
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    if out.is_empty() {
        out.push('x');
    }
    if !out.starts_with(|c: char| c.is_ascii_alphabetic()) {
        out.insert_str(0, "x_");
    }
    if RESERVED.contains(&out.to_ascii_lowercase().as_str()) {
        out.push_str("_x");
    }
    out
}

/// Hands out sanitized names, unique ignoring case.
#[derive(Debug, Default, Clone)]
pub struct Namer {
    used: HashSet<String>,
}

impl Namer {
    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_ascii_lowercase());
    }

    pub fn fresh(&mut self, base: &str) -> String {
        let base = sanitize(base);
        let mut name = base.clone();
        let mut k = 2;
        while self.used.contains(&name.to_ascii_lowercase()) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.used.insert(name.to_ascii_lowercase());
        name
    }
}

/// One physical signal of a port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signal {
    pub name: String,
    /// `None` for a scalar `std_logic`.
    pub width: Option<u64>,
    /// Flows with the stream (`true`) or against it (`ready`).
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PortSignals {
    pub port: String,
    pub index: Option<u64>,
    pub dir: Option<PortDir>,
    pub data: Option<Signal>,
    pub valid: Option<Signal>,
    pub ready: Option<Signal>,
    pub last: Option<Signal>,
    pub tag: Option<Signal>,
    pub comment: String,
}

impl PortSignals {
    pub fn signals(&self) -> impl Iterator<Item = &Signal> {
        [&self.data, &self.valid, &self.ready, &self.last, &self.tag]
            .into_iter()
            .flatten()
    }
}

/// Data-signal width of a port: element width times lane count.
pub fn data_width(ty: &LogicalType) -> u64 {
    let s = ty.as_stream().expect("port types are streams");
    bit_width(&s.element).expect("elaborated element widths are finite") * s.lanes()
}

fn port_signals(p: &ElaboratedPort, namer: &mut Namer) -> PortSignals {
    let s = p.stream();
    let base = match p.index {
        Some(i) => format!("{}_{i}", p.name),
        None => p.name.clone(),
    };
    let mut sig = |suffix: &str, width: Option<u64>, forward: bool| Signal {
        name: namer.fresh(&format!("{base}_{suffix}")),
        width,
        forward,
    };
    let w = data_width(&p.ty);
    let tag = union_tag_width(&s.element);
    PortSignals {
        port: p.name.clone(),
        index: p.index,
        dir: Some(p.dir),
        data: (w > 0).then(|| sig("data", Some(w), true)),
        valid: Some(sig("valid", None, true)),
        ready: Some(sig("ready", None, false)),
        last: (s.dimension > 0).then(|| sig("last", Some(s.dimension as u64), true)),
        tag: (tag > 0).then(|| sig("tag", Some(tag), true)),
        comment: format!(
            "{}: {} (complexity {}, synchronicity {})",
            p.display_name(),
            p.ty,
            s.complexity,
            s.synchronicity.as_str()
        ),
    }
}

fn vtype(width: Option<u64>) -> String {
    match width {
        None => "std_logic".to_string(),
        Some(w) => format!("std_logic_vector({} downto 0)", w - 1),
    }
}

/// Physical port layout of every implementation's entity.
#[derive(Debug, Clone, Default)]
pub struct Layout {
    pub entities: BTreeMap<String, String>,
    pub ports: BTreeMap<String, Vec<PortSignals>>,
}

pub fn layout(design: &ElaboratedDesign) -> Layout {
    let mut global = Namer::default();
    let mut out = Layout::default();
    for imp in design.impls.values() {
        out.entities.insert(imp.name.clone(), global.fresh(&imp.name));
        let mut namer = Namer::default();
        let ports = design
            .streamlet_of(imp)
            .ports
            .iter()
            .map(|p| port_signals(p, &mut namer))
            .collect();
        out.ports.insert(imp.name.clone(), ports);
    }
    out
}

/// Mode of a physical signal on an entity port.
fn mode(dir: PortDir, forward: bool) -> &'static str {
    match (dir, forward) {
        (PortDir::In, true) | (PortDir::Out, false) => "in",
        _ => "out",
    }
}

fn port_clause(out: &mut String, ports: &[PortSignals], indent: &str) {
    if ports.is_empty() {
        return;
    }
    let mut lines = Vec::new();
    for p in ports {
        let dir = p.dir.expect("entity ports have a direction");
        let mut first = true;
        for s in p.signals() {
            let mut line = String::new();
            if first {
                writeln!(line, "{indent}  -- {}", p.comment).unwrap();
                first = false;
            }
            write!(line, "{indent}  {} : {} {}", s.name, mode(dir, s.forward), vtype(s.width)).unwrap();
            lines.push(line);
        }
    }
    writeln!(out, "{indent}port (").unwrap();
    out.push_str(&lines.join(";\n"));
    writeln!(out, "\n{indent});").unwrap();
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VhdlFile {
    pub name: String,
    pub text: String,
}

fn contract(imp: &ElaboratedImpl) -> Vec<String> {
    let mut lines = vec![
        format!("External implementation `{}`.", imp.name),
        "Handshake contract: a transfer happens on a rising edge where valid and ready are both high.".to_string(),
        "Data, last and tag are stable while valid is high and ready is low.".to_string(),
    ];
    match imp.intrinsic {
        Some(Intrinsic::Duplicator { outputs }) => {
            lines.push(format!("Duplicator: each input packet is copied to all {outputs} outputs;"));
            lines.push("in_ready is high only when every output has accepted the current packet.".to_string());
        }
        Some(Intrinsic::Voider) => {
            lines.push("Voider: in_ready is tied high and every packet is discarded.".to_string());
        }
        None => lines.push("The behavior is provided outside this design.".to_string()),
    }
    lines
}

/// Emits one file per implementation, ordered by file name.
pub fn emit_vhdl(design: &ElaboratedDesign) -> Vec<VhdlFile> {
    let layout = layout(design);
    let mut files = Vec::new();
    for imp in design.impls.values() {
        let entity = &layout.entities[&imp.name];
        let ports = &layout.ports[&imp.name];
        let mut out = String::new();
        writeln!(out, "-- {} ({})", imp.name, imp.origin.mangled()).unwrap();
        out.push_str("library ieee;\nuse ieee.std_logic_1164.all;\n\n");
        writeln!(out, "entity {entity} is").unwrap();
        port_clause(&mut out, ports, "  ");
        writeln!(out, "end entity {entity};\n").unwrap();

        if imp.external {
            for l in contract(imp) {
                writeln!(out, "-- {l}").unwrap();
            }
            writeln!(out, "architecture shell of {entity} is\nbegin\nend architecture shell;").unwrap();
            files.push(VhdlFile {
                name: format!("{entity}.vhd"),
                text: out,
            });
            continue;
        }

        let mut namer = Namer::default();
        for s in ports.iter().flat_map(PortSignals::signals) {
            namer.reserve(&s.name);
        }
        for e in layout.entities.values() {
            namer.reserve(e);
        }
        namer.reserve(entity);

        let mut decls = String::new();
        let mut body = String::new();
        let mut components: Vec<&str> = imp
            .instances
            .iter()
            .map(|i| design.impls[&i.implementation].name.as_str())
            .collect();
        components.sort();
        components.dedup();
        for c in &components {
            let ce = &layout.entities[*c];
            writeln!(decls, "  component {ce}").unwrap();
            port_clause(&mut decls, &layout.ports[*c], "    ");
            writeln!(decls, "  end component;").unwrap();
        }

        // signal groups, one per connection; instance ports map onto them
        let mut port_maps: BTreeMap<(String, Option<u64>), Vec<(String, String)>> = BTreeMap::new();
        let mut assigns = Vec::new();
        let find = |sigs: &[PortSignals], ep: &Endpoint| -> PortSignals {
            sigs.iter()
                .find(|p| p.port == ep.port && p.index == ep.index)
                .cloned()
                .expect("endpoints resolve")
        };
        for (k, c) in imp.connections.iter().enumerate() {
            let src_port = design.resolve(imp, &c.src).expect("validated").port;
            let template = port_signals(src_port, &mut Namer::default());
            let mut group = PortSignals::default();
            let mut mk = |s: &Option<Signal>, suffix: &str| {
                s.as_ref().map(|s| Signal {
                    name: namer.fresh(&format!("c{k}_{suffix}")),
                    width: s.width,
                    forward: s.forward,
                })
            };
            group.data = mk(&template.data, "data");
            group.valid = mk(&template.valid, "valid");
            group.ready = mk(&template.ready, "ready");
            group.last = mk(&template.last, "last");
            group.tag = mk(&template.tag, "tag");
            writeln!(decls, "  -- {} => {}", c.src, c.dst).unwrap();
            for s in group.signals() {
                writeln!(decls, "  signal {} : {};", s.name, vtype(s.width)).unwrap();
            }
            for (ep, is_src) in [(&c.src, true), (&c.dst, false)] {
                match &ep.owner {
                    Owner::Local => {
                        let p = find(ports, ep);
                        let pairs = [
                            (&p.data, &group.data),
                            (&p.valid, &group.valid),
                            (&p.ready, &group.ready),
                            (&p.last, &group.last),
                            (&p.tag, &group.tag),
                        ];
                        for (ps, gs) in pairs {
                            let (Some(ps), Some(gs)) = (ps, gs) else { continue };
                            // a local source drives the group forward; a local sink is driven by it
                            if ps.forward == is_src {
                                assigns.push(format!("  {} <= {};", gs.name, ps.name));
                            } else {
                                assigns.push(format!("  {} <= {};", ps.name, gs.name));
                            }
                        }
                    }
                    Owner::Instance { name, index } => {
                        let inst = imp.instance(&ep.owner).expect("validated");
                        let p = find(&layout.ports[&inst.implementation], ep);
                        let pairs = [
                            (&p.data, &group.data),
                            (&p.valid, &group.valid),
                            (&p.ready, &group.ready),
                            (&p.last, &group.last),
                            (&p.tag, &group.tag),
                        ];
                        let entry = port_maps.entry((name.clone(), *index)).or_default();
                        for (ps, gs) in pairs {
                            if let (Some(ps), Some(gs)) = (ps, gs) {
                                entry.push((ps.name.clone(), gs.name.clone()));
                            }
                        }
                    }
                }
            }
        }

        for inst in &imp.instances {
            let label_base = match inst.index {
                Some(i) => format!("{}_{i}", inst.name),
                None => inst.name.clone(),
            };
            let label = namer.fresh(&format!("u_{label_base}"));
            let ce = &layout.entities[&inst.implementation];
            writeln!(body, "  {label}: {ce}").unwrap();
            let maps = port_maps.remove(&(inst.name.clone(), inst.index)).unwrap_or_default();
            if !maps.is_empty() {
                let items: Vec<String> = maps.iter().map(|(f, a)| format!("      {f} => {a}")).collect();
                writeln!(body, "    port map (\n{}\n    );", items.join(",\n")).unwrap();
            } else {
                // unreachable after DRC; keeps the text well-formed
                body.pop();
                body.push_str(";\n");
            }
        }
        for a in assigns {
            writeln!(body, "{a}").unwrap();
        }

        writeln!(out, "architecture structural of {entity} is").unwrap();
        out.push_str(&decls);
        out.push_str("begin\n");
        out.push_str(&body);
        out.push_str("end architecture structural;\n");
        files.push(VhdlFile {
            name: format!("{entity}.vhd"),
            text: out,
        });
    }
    files.sort_by(|a, b| a.name.cmp(&b.name));
    files
}

//! The elaborated design: concrete streamlets, implementations, instances
//! and connections with every template argument, loop and condition
//! resolved.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::diag::SourceSpan;
use crate::syntax::PortDir;
use crate::types::{LogicalType, NamedType, StreamType};
use crate::value::ClockDomain;

/// Declaration and rendered template arguments a design entity came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Origin {
    pub decl: String,
    pub args: Vec<String>,
}

impl Origin {
    pub fn new(decl: impl Into<String>, args: Vec<String>) -> Self {
        Origin {
            decl: decl.into(),
            args,
        }
    }

    /// `<decl>__<arg1>_<arg2>...`, or just `<decl>` without arguments.
    pub fn mangled(&self) -> String {
        if self.args.is_empty() {
            self.decl.clone()
        } else {
            format!("{}__{}", self.decl, self.args.join("_"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElaboratedPort {
    pub name: String,
    /// Position within a port array.
    pub index: Option<u64>,
    pub dir: PortDir,
    /// Always a stream, possibly behind named references.
    pub ty: LogicalType,
    pub clock: ClockDomain,
    pub span: Option<SourceSpan>,
}

impl ElaboratedPort {
    pub fn stream(&self) -> &StreamType {
        self.ty.as_stream().expect("port types are streams")
    }

    pub fn display_name(&self) -> String {
        match self.index {
            Some(i) => format!("{}[{i}]", self.name),
            None => self.name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElaboratedStreamlet {
    pub name: String,
    pub origin: Origin,
    pub ports: Vec<ElaboratedPort>,
}

impl ElaboratedStreamlet {
    pub fn port(&self, name: &str, index: Option<u64>) -> Option<&ElaboratedPort> {
        self.ports.iter().find(|p| p.name == name && p.index == index)
    }
}

/// Components whose bodies the backend knows without a source definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Intrinsic {
    Duplicator { outputs: u64 },
    Voider,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub index: Option<u64>,
    /// Name of the instantiated implementation.
    pub implementation: String,
    pub span: Option<SourceSpan>,
}

impl Instance {
    pub fn owner(&self) -> Owner {
        Owner::Instance {
            name: self.name.clone(),
            index: self.index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    /// The enclosing implementation's own ports.
    Local,
    Instance { name: String, index: Option<u64> },
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Local => f.write_str("self"),
            Owner::Instance { name, index: None } => f.write_str(name),
            Owner::Instance { name, index: Some(i) } => write!(f, "{name}[{i}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Endpoint {
    pub owner: Owner,
    pub port: String,
    pub index: Option<u64>,
}

impl Endpoint {
    pub fn local(port: impl Into<String>, index: Option<u64>) -> Self {
        Endpoint {
            owner: Owner::Local,
            port: port.into(),
            index,
        }
    }

    pub fn on(owner: Owner, port: impl Into<String>, index: Option<u64>) -> Self {
        Endpoint {
            owner,
            port: port.into(),
            index,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.owner != Owner::Local {
            write!(f, "{}.", self.owner)?;
        }
        f.write_str(&self.port)?;
        if let Some(i) = self.index {
            write!(f, "[{i}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub src: Endpoint,
    pub dst: Endpoint,
    /// Check hierarchy equality instead of strict equality.
    pub relax: bool,
    pub span: Option<SourceSpan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElaboratedImpl {
    pub name: String,
    pub origin: Origin,
    pub streamlet: String,
    pub external: bool,
    pub intrinsic: Option<Intrinsic>,
    pub instances: Vec<Instance>,
    pub connections: Vec<Connection>,
}

impl ElaboratedImpl {
    pub fn instance(&self, owner: &Owner) -> Option<&Instance> {
        match owner {
            Owner::Local => None,
            Owner::Instance { name, index } => self
                .instances
                .iter()
                .find(|i| &i.name == name && &i.index == index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ElaboratedDesign {
    pub streamlets: BTreeMap<String, ElaboratedStreamlet>,
    pub impls: BTreeMap<String, ElaboratedImpl>,
    pub top: String,
}

/// A port resolved from an endpoint inside some implementation.
#[derive(Debug, Clone, Copy)]
pub struct ResolvedEndpoint<'d> {
    pub port: &'d ElaboratedPort,
    /// True when the endpoint produces data inside the enclosing body: an
    /// instance's `out` port or the body's own `in` port.
    pub local_source: bool,
}

impl ElaboratedDesign {
    pub fn streamlet_of(&self, imp: &ElaboratedImpl) -> &ElaboratedStreamlet {
        &self.streamlets[&imp.streamlet]
    }

    /// Ports visible at `owner` inside `imp`.
    pub fn owner_ports<'d>(&'d self, imp: &'d ElaboratedImpl, owner: &Owner) -> Option<&'d ElaboratedStreamlet> {
        match owner {
            Owner::Local => self.streamlets.get(&imp.streamlet),
            _ => {
                let inst = imp.instance(owner)?;
                let child = self.impls.get(&inst.implementation)?;
                self.streamlets.get(&child.streamlet)
            }
        }
    }

    pub fn resolve<'d>(&'d self, imp: &'d ElaboratedImpl, ep: &Endpoint) -> Option<ResolvedEndpoint<'d>> {
        let port = self.owner_ports(imp, &ep.owner)?.port(&ep.port, ep.index)?;
        let local_source = match ep.owner {
            Owner::Local => port.dir == PortDir::In,
            _ => port.dir == PortDir::Out,
        };
        Some(ResolvedEndpoint { port, local_source })
    }

    /// Every endpoint of `imp`: its own ports first, then each instance's
    /// ports, in declaration order.
    pub fn endpoints(&self, imp: &ElaboratedImpl) -> Vec<(Endpoint, &ElaboratedPort)> {
        let mut out = Vec::new();
        for p in &self.streamlet_of(imp).ports {
            out.push((Endpoint::local(p.name.clone(), p.index), p));
        }
        for inst in &imp.instances {
            if let Some(child) = self.impls.get(&inst.implementation) {
                for p in &self.streamlets[&child.streamlet].ports {
                    out.push((Endpoint::on(inst.owner(), p.name.clone(), p.index), p));
                }
            }
        }
        out
    }

    /// Every named type used by a port, keyed by name.
    pub fn named_types(&self) -> BTreeMap<String, Arc<NamedType>> {
        let mut out = BTreeMap::new();
        for s in self.streamlets.values() {
            for p in &s.ports {
                p.ty.visit_named(&mut |n| {
                    out.entry(n.name.clone()).or_insert_with(|| n.clone());
                });
            }
        }
        out
    }

    /// Finds an existing entity created from `origin`.
    pub fn impl_by_origin(&self, origin: &Origin) -> Option<&ElaboratedImpl> {
        self.impls.values().find(|i| &i.origin == origin)
    }

    pub fn streamlet_by_origin(&self, origin: &Origin) -> Option<&ElaboratedStreamlet> {
        self.streamlets.values().find(|s| &s.origin == origin)
    }

    /// `base`, or `base_2`, `base_3`, ... whichever is free among `taken`.
    pub fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> String {
        if !taken(base) {
            return base.to_string();
        }
        (2..)
            .map(|k| format!("{base}_{k}"))
            .find(|n| !taken(n))
            .expect("unbounded")
    }

    /// Implementations reachable from the top, children before parents.
    pub fn impls_bottom_up(&self) -> Vec<&ElaboratedImpl> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        fn walk<'d>(d: &'d ElaboratedDesign, name: &str, seen: &mut BTreeSet<String>, out: &mut Vec<&'d ElaboratedImpl>) {
            if !seen.insert(name.to_string()) {
                return;
            }
            let Some(imp) = d.impls.get(name) else { return };
            for inst in &imp.instances {
                walk(d, &inst.implementation, seen, out);
            }
            out.push(imp);
        }
        walk(self, &self.top, &mut seen, &mut out);
        for name in self.impls.keys() {
            walk(self, name, &mut seen, &mut out);
        }
        out
    }

    /// Checks internal consistency: references exist, endpoints resolve,
    /// external bodies are empty and the instance graph is acyclic.
    pub fn validate(&self) -> Result<(), String> {
        if !self.top.is_empty() && !self.impls.contains_key(&self.top) {
            return Err(format!("top `{}` is not an implementation", self.top));
        }
        for s in self.streamlets.values() {
            for p in &s.ports {
                if p.ty.as_stream().is_none() {
                    return Err(format!("port `{}` of `{}` is not a stream", p.display_name(), s.name));
                }
            }
        }
        for imp in self.impls.values() {
            if !self.streamlets.contains_key(&imp.streamlet) {
                return Err(format!("`{}` implements unknown streamlet `{}`", imp.name, imp.streamlet));
            }
            if imp.external && (!imp.instances.is_empty() || !imp.connections.is_empty()) {
                return Err(format!("external `{}` has a body", imp.name));
            }
            for inst in &imp.instances {
                if !self.impls.contains_key(&inst.implementation) {
                    return Err(format!("instance `{}` refers to unknown `{}`", inst.name, inst.implementation));
                }
            }
            for c in &imp.connections {
                for ep in [&c.src, &c.dst] {
                    if self.resolve(imp, ep).is_none() {
                        return Err(format!("dangling endpoint `{ep}` in `{}`", imp.name));
                    }
                }
            }
        }
        // acyclicity
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        fn dfs<'d>(d: &'d ElaboratedDesign, n: &'d str, state: &mut BTreeMap<&'d str, u8>) -> Result<(), String> {
            match state.get(n) {
                Some(1) => return Err(format!("implementation `{n}` contains itself")),
                Some(_) => return Ok(()),
                None => {}
            }
            state.insert(n, 1);
            for inst in &d.impls[n].instances {
                dfs(d, &inst.implementation, state)?;
            }
            state.insert(n, 2);
            Ok(())
        }
        for n in self.impls.keys() {
            dfs(self, n, &mut state)?;
        }
        Ok(())
    }

    /// A copy with every source span removed.
    pub fn without_spans(&self) -> ElaboratedDesign {
        let mut d = self.clone();
        for s in d.streamlets.values_mut() {
            for p in &mut s.ports {
                p.span = None;
            }
        }
        for i in d.impls.values_mut() {
            for inst in &mut i.instances {
                inst.span = None;
            }
            for c in &mut i.connections {
                c.span = None;
            }
        }
        d
    }

    /// Equality ignoring source spans.
    pub fn structurally_eq(&self, other: &ElaboratedDesign) -> bool {
        self.without_spans() == other.without_spans()
    }
}

//! Textual intermediate representation (`.tir`) of an elaborated design.
//!
//! ```text
//! design <top|->
//! type <name> = <type>
//! streamlet <name>
//!   origin "<decl>" "<arg>"...
//!   port <name> <index|-> <in|out> "<clock>" <type>
//! end
//! impl <name> of <streamlet>
//!   origin "<decl>" "<arg>"...
//!   external
//!   intrinsic duplicator <outputs> | intrinsic voider
//!   instance <name> <index|-> <impl>
//!   connect <endpoint> => <endpoint> [relax]
//! end
//! end design
//! ```
//!
//! Types come first, ordered so that every name is declared before use,
//! then streamlets by name, then implementations children first.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::design::*;
use crate::diag::{Code, Diagnostic, FileId, SourceSpan};
use crate::syntax::{PortDir, StreamDirection};
use crate::types::{LogicalType, NamedType, StreamType, Synchronicity};
use crate::value::ClockDomain;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn type_level(t: &LogicalType, levels: &HashMap<String, usize>) -> usize {
    let mut level = 0;
    match t {
        LogicalType::Named(n) => return levels.get(&n.name).map_or(0, |l| l + 1),
        LogicalType::Group(fs) | LogicalType::Union(fs) => {
            for (_, c) in fs {
                level = level.max(type_level(c, levels));
            }
        }
        LogicalType::Stream(s) => level = type_level(&s.element, levels),
        _ => {}
    }
    level
}

fn ordered_types(design: &ElaboratedDesign) -> Vec<Arc<NamedType>> {
    let mut order: Vec<Arc<NamedType>> = Vec::new();
    let mut levels: HashMap<String, usize> = HashMap::new();
    for s in design.streamlets.values() {
        for p in &s.ports {
            p.ty.visit_named(&mut |n| {
                if !levels.contains_key(&n.name) {
                    let l = type_level(&n.ty, &levels);
                    levels.insert(n.name.clone(), l);
                    order.push(n.clone());
                }
            });
        }
    }
    order.sort_by(|a, b| (levels[&a.name], &a.name).cmp(&(levels[&b.name], &b.name)));
    order
}

fn ordered_impls(design: &ElaboratedDesign) -> Vec<&ElaboratedImpl> {
    let mut levels: HashMap<&str, usize> = HashMap::new();
    for imp in design.impls_bottom_up() {
        let l = imp
            .instances
            .iter()
            .map(|i| levels.get(i.implementation.as_str()).map_or(0, |l| l + 1))
            .max()
            .unwrap_or(0);
        levels.insert(&imp.name, l);
    }
    let mut out: Vec<&ElaboratedImpl> = design.impls.values().collect();
    out.sort_by(|a, b| (levels[a.name.as_str()], &a.name).cmp(&(levels[b.name.as_str()], &b.name)));
    out
}

fn origin_line(o: &Origin) -> String {
    let mut s = format!("  origin {}", quote(&o.decl));
    for a in &o.args {
        s.push(' ');
        s.push_str(&quote(a));
    }
    s
}

fn opt_index(i: Option<u64>) -> String {
    i.map_or("-".to_string(), |i| i.to_string())
}

/// Renders `design` as IR text. Output is a pure function of the design.
pub fn emit_ir(design: &ElaboratedDesign) -> String {
    let mut out = String::new();
    let top = if design.top.is_empty() { "-" } else { &design.top };
    writeln!(out, "design {top}").unwrap();
    for n in ordered_types(design) {
        writeln!(out, "type {} = {}", n.name, n.ty).unwrap();
    }
    for s in design.streamlets.values() {
        writeln!(out, "streamlet {}", s.name).unwrap();
        writeln!(out, "{}", origin_line(&s.origin)).unwrap();
        for p in &s.ports {
            writeln!(
                out,
                "  port {} {} {} {} {}",
                p.name,
                opt_index(p.index),
                p.dir.as_str(),
                quote(p.clock.name()),
                p.ty
            )
            .unwrap();
        }
        out.push_str("end\n");
    }
    for imp in ordered_impls(design) {
        writeln!(out, "impl {} of {}", imp.name, imp.streamlet).unwrap();
        writeln!(out, "{}", origin_line(&imp.origin)).unwrap();
        if imp.external {
            out.push_str("  external\n");
        }
        match imp.intrinsic {
            Some(Intrinsic::Duplicator { outputs }) => writeln!(out, "  intrinsic duplicator {outputs}").unwrap(),
            Some(Intrinsic::Voider) => out.push_str("  intrinsic voider\n"),
            None => {}
        }
        for i in &imp.instances {
            writeln!(out, "  instance {} {} {}", i.name, opt_index(i.index), i.implementation).unwrap();
        }
        for c in &imp.connections {
            write!(out, "  connect {} => {}", c.src, c.dst).unwrap();
            if c.relax {
                out.push_str(" relax");
            }
            out.push('\n');
        }
        out.push_str("end\n");
    }
    out.push_str("end design\n");
    out
}

struct Reader<'t> {
    lines: Vec<(usize, &'t str)>,
    pos: usize,
    file: FileId,
    types: HashMap<String, Arc<NamedType>>,
}

type R<T> = Result<T, Diagnostic>;

impl<'t> Reader<'t> {
    fn error(&self, line: usize, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(Code::E001, msg, SourceSpan::new(self.file, line as u32, 1, 0))
    }

    fn next(&mut self) -> R<(usize, &'t str)> {
        let last = self.lines.last().map_or(1, |l| l.0);
        let l = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.error(last, "truncated IR document"))?;
        self.pos += 1;
        Ok(l)
    }

    fn peek(&self) -> Option<&'t str> {
        self.lines.get(self.pos).map(|l| l.1)
    }
}

/// Splits off whitespace-separated words and quoted strings.
fn words(s: &str, n: usize) -> Option<(Vec<String>, &str)> {
    let mut rest = s.trim_start();
    let mut out = Vec::new();
    while out.len() < n {
        if rest.is_empty() {
            return None;
        }
        if let Some(body) = rest.strip_prefix('"') {
            let mut w = String::new();
            let mut chars = body.char_indices();
            let end = loop {
                let (i, c) = chars.next()?;
                match c {
                    '"' => break i,
                    '\\' => match chars.next()?.1 {
                        'n' => w.push('\n'),
                        c => w.push(c),
                    },
                    c => w.push(c),
                }
            };
            out.push(w);
            rest = body[end + 1..].trim_start();
        } else {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            out.push(rest[..end].to_string());
            rest = rest[end..].trim_start();
        }
    }
    Some((out, rest))
}

fn all_words(s: &str) -> Option<Vec<String>> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let (mut w, r) = words(rest, 1)?;
        out.append(&mut w);
        rest = r.trim();
    }
    Some(out)
}

fn parse_index(s: &str) -> Option<Option<u64>> {
    if s == "-" {
        Some(None)
    } else {
        s.parse().ok().map(Some)
    }
}

fn parse_part(s: &str) -> Option<(String, Option<u64>)> {
    match s.find('[') {
        None => Some((s.to_string(), None)),
        Some(b) => {
            let idx = s[b + 1..].strip_suffix(']')?.parse().ok()?;
            Some((s[..b].to_string(), Some(idx)))
        }
    }
}

fn parse_endpoint(s: &str) -> Option<Endpoint> {
    match s.split_once('.') {
        None => {
            let (port, index) = parse_part(s)?;
            Some(Endpoint::local(port, index))
        }
        Some((o, p)) => {
            let (name, oi) = parse_part(o)?;
            let (port, index) = parse_part(p)?;
            Some(Endpoint::on(Owner::Instance { name, index: oi }, port, index))
        }
    }
}

struct TypeParser<'a> {
    s: &'a [u8],
    pos: usize,
    types: &'a HashMap<String, Arc<NamedType>>,
}

impl TypeParser<'_> {
    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos] == b' ' {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> Option<()> {
        self.ws();
        (self.s.get(self.pos) == Some(&c)).then(|| self.pos += 1)
    }

    fn word(&mut self) -> Option<&str> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
            self.pos += 1;
        }
        (self.pos > start).then(|| std::str::from_utf8(&self.s[start..self.pos]).unwrap())
    }

    fn ty(&mut self) -> Option<LogicalType> {
        let w = self.word()?.to_string();
        match w.as_str() {
            "Null" => Some(LogicalType::Null),
            "Bit" => {
                self.eat(b'(')?;
                let n = self.word()?.parse().ok()?;
                self.eat(b')')?;
                Some(LogicalType::Bit(n))
            }
            "Group" | "Union" => {
                self.eat(b'(')?;
                let mut fs = Vec::new();
                loop {
                    let name = self.word()?.to_string();
                    self.eat(b':')?;
                    fs.push((name, self.ty()?));
                    if self.eat(b',').is_none() {
                        break;
                    }
                }
                self.eat(b')')?;
                Some(if w == "Group" {
                    LogicalType::Group(fs)
                } else {
                    LogicalType::Union(fs)
                })
            }
            "Stream" => {
                self.eat(b'(')?;
                let mut s = StreamType::new(self.ty()?);
                while self.eat(b',').is_some() {
                    let key = self.word()?.to_string();
                    self.eat(b'=')?;
                    match key.as_str() {
                        "d" => s.dimension = self.word()?.parse().ok()?,
                        "c" => s.complexity = self.word()?.parse().ok()?,
                        "s" => s.synchronicity = Synchronicity::parse(self.word()?)?,
                        "r" => {
                            s.direction = match self.word()? {
                                "Forward" => StreamDirection::Forward,
                                "Reverse" => StreamDirection::Reverse,
                                _ => return None,
                            }
                        }
                        "t" => {
                            let n: BigInt = self.word()?.parse().ok()?;
                            let d: BigInt = if self.eat(b'/').is_some() {
                                self.word()?.parse().ok()?
                            } else {
                                BigInt::from(1)
                            };
                            s.throughput = BigRational::new(n, d);
                        }
                        _ => return None,
                    }
                }
                self.eat(b')')?;
                Some(LogicalType::Stream(Box::new(s)))
            }
            name => self.types.get(name).map(|n| LogicalType::Named(n.clone())),
        }
    }
}

impl Reader<'_> {
    fn parse_type(&self, line: usize, s: &str) -> R<LogicalType> {
        let mut p = TypeParser {
            s: s.as_bytes(),
            pos: 0,
            types: &self.types,
        };
        let t = p.ty();
        p.ws();
        match t {
            Some(t) if p.pos == s.len() => Ok(t),
            _ => Err(self.error(line, format!("malformed type `{s}`"))),
        }
    }

    fn origin(&mut self) -> R<Origin> {
        let (n, line) = self.next()?;
        let w = all_words(line).ok_or_else(|| self.error(n, "malformed origin"))?;
        match w.split_first() {
            Some((kw, rest)) if kw == "origin" && !rest.is_empty() => {
                Ok(Origin::new(rest[0].clone(), rest[1..].to_vec()))
            }
            _ => Err(self.error(n, "expected `origin`")),
        }
    }
}

/// Parses IR text produced by [`emit_ir`].
pub fn read_ir(text: &str, file: FileId) -> Result<ElaboratedDesign, Diagnostic> {
    let lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let mut r = Reader {
        lines,
        pos: 0,
        file,
        types: HashMap::new(),
    };
    let mut design = ElaboratedDesign::default();
    let (n, head) = r.next()?;
    let top = head
        .strip_prefix("design ")
        .ok_or_else(|| r.error(n, "expected `design`"))?
        .trim();
    if top != "-" {
        design.top = top.to_string();
    }
    let mut streamlets = BTreeMap::new();
    let mut impls = BTreeMap::new();
    loop {
        let (n, line) = r.next()?;
        if line == "end design" {
            break;
        }
        if let Some(rest) = line.strip_prefix("type ") {
            let (name, ty) = rest
                .split_once(" = ")
                .ok_or_else(|| r.error(n, "malformed type declaration"))?;
            let ty = r.parse_type(n, ty)?;
            r.types.insert(
                name.to_string(),
                Arc::new(NamedType {
                    name: name.to_string(),
                    ty,
                }),
            );
        } else if let Some(name) = line.strip_prefix("streamlet ") {
            let name = name.trim().to_string();
            let origin = r.origin()?;
            let mut ports = Vec::new();
            loop {
                let (n, line) = r.next()?;
                if line == "end" {
                    break;
                }
                let body = line
                    .trim_start()
                    .strip_prefix("port ")
                    .ok_or_else(|| r.error(n, "expected `port` or `end`"))?;
                let (w, ty) = words(body, 4).ok_or_else(|| r.error(n, "malformed port"))?;
                let index = parse_index(&w[1]).ok_or_else(|| r.error(n, "malformed port index"))?;
                let dir = match w[2].as_str() {
                    "in" => PortDir::In,
                    "out" => PortDir::Out,
                    _ => return Err(r.error(n, "port direction must be `in` or `out`")),
                };
                ports.push(ElaboratedPort {
                    name: w[0].clone(),
                    index,
                    dir,
                    ty: r.parse_type(n, ty.trim())?,
                    clock: ClockDomain::new(w[3].clone()),
                    span: None,
                });
            }
            streamlets.insert(name.clone(), ElaboratedStreamlet { name, origin, ports });
        } else if let Some(rest) = line.strip_prefix("impl ") {
            let w = all_words(rest).ok_or_else(|| r.error(n, "malformed impl header"))?;
            let [name, of, streamlet] = w.as_slice() else {
                return Err(r.error(n, "expected `impl <name> of <streamlet>`"));
            };
            if of != "of" {
                return Err(r.error(n, "expected `of`"));
            }
            let origin = r.origin()?;
            let mut imp = ElaboratedImpl {
                name: name.clone(),
                origin,
                streamlet: streamlet.clone(),
                external: false,
                intrinsic: None,
                instances: Vec::new(),
                connections: Vec::new(),
            };
            loop {
                let (n, line) = r.next()?;
                if line == "end" {
                    break;
                }
                let w = all_words(line).ok_or_else(|| r.error(n, "malformed line"))?;
                match w.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
                    ["external"] => imp.external = true,
                    ["intrinsic", "voider"] => imp.intrinsic = Some(Intrinsic::Voider),
                    ["intrinsic", "duplicator", k] => {
                        let outputs = k.parse().map_err(|_| r.error(n, "malformed output count"))?;
                        imp.intrinsic = Some(Intrinsic::Duplicator { outputs });
                    }
                    ["instance", name, idx, target] => imp.instances.push(Instance {
                        name: name.to_string(),
                        index: parse_index(idx).ok_or_else(|| r.error(n, "malformed instance index"))?,
                        implementation: target.to_string(),
                        span: None,
                    }),
                    ["connect", src, "=>", dst, flags @ ..] => {
                        let relax = match flags {
                            [] => false,
                            ["relax"] => true,
                            _ => return Err(r.error(n, "unexpected connection flag")),
                        };
                        let src = parse_endpoint(src).ok_or_else(|| r.error(n, "malformed endpoint"))?;
                        let dst = parse_endpoint(dst).ok_or_else(|| r.error(n, "malformed endpoint"))?;
                        imp.connections.push(Connection {
                            src,
                            dst,
                            relax,
                            span: None,
                        });
                    }
                    _ => return Err(r.error(n, format!("unexpected line `{}`", line.trim()))),
                }
            }
            impls.insert(name.clone(), imp);
        } else {
            return Err(r.error(n, format!("unexpected line `{}`", line.trim())));
        }
    }
    if let Some(extra) = r.peek() {
        return Err(r.error(r.lines[r.pos].0, format!("trailing content `{}`", extra.trim())));
    }
    design.streamlets = streamlets;
    design.impls = impls;
    design
        .validate()
        .map_err(|m| Diagnostic::error(Code::E001, format!("inconsistent IR: {m}"), None))?;
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stdlib;

    fn sample() -> ElaboratedDesign {
        let mut d = ElaboratedDesign::default();
        let byte = LogicalType::named("Byte", LogicalType::Bit(8));
        let mut st = StreamType::new(byte);
        st.dimension = 2;
        st.throughput = BigRational::new(3.into(), 2.into());
        let s = LogicalType::named("Chars", LogicalType::Stream(Box::new(st)));
        let dup = stdlib::duplicator(&mut d, &s, 2, &ClockDomain::default());
        let port = |name: &str, index, dir| ElaboratedPort {
            name: name.into(),
            index,
            dir,
            ty: s.clone(),
            clock: ClockDomain::default(),
            span: None,
        };
        d.streamlets.insert(
            "top_s".into(),
            ElaboratedStreamlet {
                name: "top_s".into(),
                origin: Origin::new("top_s", vec![]),
                ports: vec![port("in", None, PortDir::In), port("o", Some(0), PortDir::Out), port("o", Some(1), PortDir::Out)],
            },
        );
        let owner = Owner::Instance {
            name: "d".into(),
            index: None,
        };
        d.impls.insert(
            "top".into(),
            ElaboratedImpl {
                name: "top".into(),
                origin: Origin::new("top", vec!["MED%20BAG".into()]),
                streamlet: "top_s".into(),
                external: false,
                intrinsic: None,
                instances: vec![Instance {
                    name: "d".into(),
                    index: None,
                    implementation: dup,
                    span: None,
                }],
                connections: vec![
                    Connection {
                        src: Endpoint::local("in", None),
                        dst: Endpoint::on(owner.clone(), "in", None),
                        relax: false,
                        span: None,
                    },
                    Connection {
                        src: Endpoint::on(owner.clone(), "out", Some(0)),
                        dst: Endpoint::local("o", Some(0)),
                        relax: true,
                        span: None,
                    },
                    Connection {
                        src: Endpoint::on(owner, "out", Some(1)),
                        dst: Endpoint::local("o", Some(1)),
                        relax: false,
                        span: None,
                    },
                ],
            },
        );
        d.top = "top".into();
        d
    }

    #[test]
    fn round_trip() {
        let d = sample();
        let text = emit_ir(&d);
        let back = read_ir(&text, FileId(0)).unwrap();
        assert!(back.structurally_eq(&d));
        assert_eq!(emit_ir(&back), text);
    }

    #[test]
    fn types_precede_users() {
        let text = emit_ir(&sample());
        let byte = text.find("type Byte").unwrap();
        let chars = text.find("type Chars").unwrap();
        assert!(byte < chars);
        assert!(text.contains("Stream(Byte, d=2, t=3/2)"));
        let dup = text.find("impl duplicator_i").unwrap();
        let top = text.find("impl top ").unwrap();
        assert!(dup < top);
    }

    #[test]
    fn truncated_is_error() {
        let text = emit_ir(&sample());
        for cut in [text.len() / 3, text.len() / 2, text.len() - 12] {
            let cut = text[..cut].rfind('\n').unwrap() + 1;
            assert!(read_ir(&text[..cut], FileId(0)).is_err(), "cut at {cut}");
        }
    }
}

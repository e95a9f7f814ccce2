//! Template instantiation and generative expansion: turns a resolved
//! program into an [`ElaboratedDesign`].

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

use crate::design::*;
use crate::diag::{Code, Diagnostic, FileId, SourceSpan};
use crate::eval::{self, Bindings, EvalResult, Fault};
use crate::scope::{Binding, DeclRef, Program, Scope};
use crate::stdlib::{self, ident_safe, type_arg_text};
use crate::syntax::*;
use crate::types::{bit_width, LogicalType, StreamType, Synchronicity, WidthError};
use crate::value::{ClockDomain, Value};

pub const DEFAULT_MAX_DEPTH: usize = 64;

#[derive(Debug, Clone)]
pub struct ElabConfig {
    /// Maximum nesting of implementation instantiations.
    pub max_depth: usize,
}

impl Default for ElabConfig {
    fn default() -> Self {
        ElabConfig {
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

/// Elaborates `program`. With a `top`, that implementation and everything
/// it instantiates are elaborated; without one, every non-templated
/// implementation outside the prelude is. Non-templated constants, types
/// and streamlets are always evaluated.
pub fn elaborate(program: &Program, top: Option<&str>, config: &ElabConfig) -> Result<ElaboratedDesign, Vec<Diagnostic>> {
    let mut el = Elaborator::new(program, config);
    el.run(top);
    if el.diags.is_empty() {
        if let Err(msg) = el.design.validate() {
            el.diags
                .push(Diagnostic::error(Code::E010, format!("internal error: {msg}"), None));
        }
    }
    if el.diags.is_empty() {
        Ok(el.design)
    } else {
        Err(el.diags)
    }
}

fn err(code: Code, msg: impl Into<String>, span: impl Into<Option<SourceSpan>>) -> Fault {
    Fault::Diag(Diagnostic::error(code, msg, span))
}

/// An evaluated template argument.
#[derive(Debug, Clone)]
enum Arg {
    Value(Value),
    Type(LogicalType),
    Impl(String),
}

impl Arg {
    fn key(&self) -> String {
        match self {
            Arg::Value(v) => format!("v:{v:?}"),
            Arg::Type(t) => format!("t:{t:?}"),
            Arg::Impl(n) => format!("i:{n}"),
        }
    }

    fn text(&self) -> String {
        match self {
            Arg::Value(v) => v.canonical(),
            Arg::Type(t) => type_arg_text(t),
            Arg::Impl(n) => n.clone(),
        }
    }

    fn describe(&self) -> String {
        match self {
            Arg::Value(v) => format!("a {} value", v.kind_name()),
            Arg::Type(_) => "a type".into(),
            Arg::Impl(_) => "an implementation".into(),
        }
    }
}

type MemoKey = (DeclRef, Vec<String>);

#[derive(Debug, Clone, Copy, PartialEq)]
enum ShapeKind {
    Single,
    Array(u64),
    /// Declared inside a `for` block; one element per expansion.
    Looped(u64),
}

#[derive(Debug)]
struct Shape {
    kind: ShapeKind,
    decl_span: SourceSpan,
    failed: bool,
}

#[derive(Default)]
struct Body {
    instances: Vec<Instance>,
    shapes: HashMap<String, Shape>,
    connections: Vec<Connection>,
    /// Loop-declared instances visible without an index, one frame per
    /// enclosing `for` iteration.
    aliases: Vec<HashMap<String, u64>>,
    failed: bool,
}

struct Elaborator<'p> {
    program: &'p Program,
    max_depth: usize,
    depth: usize,
    design: ElaboratedDesign,
    diags: Vec<Diagnostic>,
    memo: HashMap<MemoKey, Result<String, ()>>,
    in_progress: HashSet<MemoKey>,
    reserved_impls: HashSet<String>,
    impl_of: HashMap<String, DeclRef>,
    types: HashMap<DeclRef, Result<LogicalType, ()>>,
    types_in_progress: HashSet<DeclRef>,
    type_names: HashMap<String, DeclRef>,
    consts: HashMap<DeclRef, Result<Value, ()>>,
    consts_in_progress: HashSet<DeclRef>,
}

struct Env<'a, 'p, 's> {
    el: &'a mut Elaborator<'p>,
    scope: &'a Scope<'s>,
    file: FileId,
}

impl Bindings for Env<'_, '_, '_> {
    fn lookup_value(&mut self, name: &str, span: SourceSpan) -> EvalResult<Value> {
        match self.scope.lookup(name) {
            Some(Binding::Value(v)) => Ok(v.clone()),
            Some(_) => Err(err(Code::E010, format!("`{name}` is not a value"), span)),
            None => match self.el.program.lookup_global(self.file, name) {
                Some(r) if matches!(self.el.program.decl(r).kind, DeclKind::Const { .. }) => self.el.const_value(r),
                Some(_) => Err(err(Code::E010, format!("`{name}` is not a value"), span)),
                None => Err(err(Code::E002, format!("unresolved name `{name}`"), span)),
            },
        }
    }
}

fn coerce(v: Value, kind: BasicKind) -> Result<Value, Value> {
    match (v, kind) {
        (v @ Value::Int(_), BasicKind::Int)
        | (v @ Value::Float(_), BasicKind::Float)
        | (v @ Value::Str(_), BasicKind::String)
        | (v @ Value::Bool(_), BasicKind::Bool)
        | (v @ Value::Clock(_), BasicKind::ClockDomain) => Ok(v),
        (Value::Int(i), BasicKind::Float) => Ok(Value::Float(i.to_f64().unwrap_or(f64::INFINITY))),
        (Value::Str(s), BasicKind::ClockDomain) => Ok(Value::Clock(ClockDomain::new(s))),
        (v, _) => Err(v),
    }
}

fn as_count(v: Value, what: &str, span: SourceSpan) -> EvalResult<u64> {
    match v {
        Value::Int(i) if !i.is_negative() => i
            .to_u64()
            .ok_or_else(|| err(Code::E010, format!("{what} {i} is too large"), span)),
        Value::Int(i) => Err(err(Code::E010, format!("{what} must not be negative, found {i}"), span)),
        v => Err(err(Code::E010, format!("{what} must be an int, found {}", v.kind_name()), span)),
    }
}

impl<'p> Elaborator<'p> {
    fn new(program: &'p Program, config: &ElabConfig) -> Self {
        Elaborator {
            program,
            max_depth: config.max_depth,
            depth: 0,
            design: ElaboratedDesign::default(),
            diags: Vec::new(),
            memo: HashMap::new(),
            in_progress: HashSet::new(),
            reserved_impls: HashSet::new(),
            impl_of: HashMap::new(),
            types: HashMap::new(),
            types_in_progress: HashSet::new(),
            type_names: HashMap::new(),
            consts: HashMap::new(),
            consts_in_progress: HashSet::new(),
        }
    }

    fn record(&mut self, f: Fault) {
        if let Fault::Diag(d) = f {
            self.diags.push(d);
        }
    }

    fn run(&mut self, top: Option<&str>) {
        let program = self.program;
        let user_files: Vec<usize> = (0..program.asts.len())
            .filter(|&f| Some(FileId(f as u32)) != program.prelude)
            .collect();
        let mut impls = Vec::new();
        for &f in &user_files {
            for (index, d) in program.asts[f].decls.iter().enumerate() {
                let r = DeclRef {
                    file: FileId(f as u32),
                    index,
                };
                let res = match &d.kind {
                    DeclKind::Const { .. } => self.const_value(r).map(drop),
                    DeclKind::TypeAlias { .. } | DeclKind::Group { .. } | DeclKind::Union { .. } => {
                        self.named_type(r).map(drop)
                    }
                    DeclKind::Streamlet(s) if s.params.is_empty() => {
                        self.instantiate_streamlet(r, Vec::new(), s.name.span).map(drop)
                    }
                    DeclKind::Impl(i) if i.params.is_empty() => {
                        impls.push((r, i.name.span));
                        Ok(())
                    }
                    _ => Ok(()),
                };
                if let Err(f) = res {
                    self.record(f);
                }
            }
        }
        match top {
            Some(name) => {
                let found = program.find_impls(name);
                let r = found
                    .iter()
                    .copied()
                    .find(|r| Some(r.file) != program.prelude)
                    .or_else(|| found.first().copied());
                let Some(r) = r else {
                    self.diags.push(Diagnostic::error(
                        Code::E002,
                        format!("top implementation `{name}` not found"),
                        None,
                    ));
                    return;
                };
                let DeclKind::Impl(decl) = &program.decl(r).kind else { unreachable!() };
                if !decl.params.is_empty() {
                    self.diags.push(Diagnostic::error(
                        Code::E009,
                        format!("top implementation `{name}` is a template"),
                        decl.name.span,
                    ));
                    return;
                }
                match self.instantiate_impl(r, Vec::new(), decl.name.span) {
                    Ok(n) => self.design.top = n,
                    Err(f) => self.record(f),
                }
            }
            None => {
                for (r, span) in impls {
                    if let Err(f) = self.instantiate_impl(r, Vec::new(), span) {
                        self.record(f);
                    }
                }
            }
        }
    }

    fn eval(&mut self, e: &Expr, scope: &Scope<'_>, file: FileId) -> EvalResult<Value> {
        let mut env = Env { el: self, scope, file };
        eval::eval(e, &mut env)
    }

    fn const_value(&mut self, r: DeclRef) -> EvalResult<Value> {
        if let Some(res) = self.consts.get(&r) {
            return res.clone().map_err(|_| Fault::Reported);
        }
        let DeclKind::Const { kind, name, value } = &self.program.decl(r).kind else {
            unreachable!("const_value on a non-constant")
        };
        if !self.consts_in_progress.insert(r) {
            return Err(err(Code::E010, format!("cyclic constant `{}`", name.name), name.span));
        }
        let res = self.eval(value, &Scope::root(), r.file).and_then(|v| {
            let mismatch = |found: &Value| {
                err(
                    Code::E010,
                    format!(
                        "constant `{}` is declared {} but its value is {}",
                        name.name,
                        const_kind_name(*kind),
                        found.kind_name()
                    ),
                    value.span,
                )
            };
            match (*kind, v) {
                (ConstKind::Scalar(k), v) => coerce(v, k).map_err(|v| mismatch(&v)),
                (ConstKind::Array(k), Value::Array(items)) => {
                    let mut out = Vec::with_capacity(items.len());
                    for it in items {
                        out.push(coerce(it, k).map_err(|v| mismatch(&v))?);
                    }
                    Ok(Value::Array(out))
                }
                (ConstKind::Array(_), v) => Err(mismatch(&v)),
            }
        });
        self.consts_in_progress.remove(&r);
        match res {
            Ok(v) => {
                self.consts.insert(r, Ok(v.clone()));
                Ok(v)
            }
            Err(f) => {
                self.consts.insert(r, Err(()));
                Err(f)
            }
        }
    }

    fn named_type(&mut self, r: DeclRef) -> EvalResult<LogicalType> {
        if let Some(res) = self.types.get(&r) {
            return res.clone().map_err(|_| Fault::Reported);
        }
        let decl = self.program.decl(r);
        let name = decl.name().expect("type declarations are named");
        if !self.types_in_progress.insert(r) {
            return Err(err(Code::E010, format!("cyclic type `{}`", name.name), name.span));
        }
        let root = Scope::root();
        let res = match &decl.kind {
            DeclKind::TypeAlias { ty, .. } => self.eval_type(ty, &root, r.file),
            DeclKind::Group { fields, .. } | DeclKind::Union { fields, .. } => {
                let mut out = Vec::new();
                let mut fault = None;
                for f in fields {
                    match self.eval_type(&f.ty, &root, r.file) {
                        Ok(t) => out.push((f.name.name.clone(), t)),
                        Err(e) => {
                            if fault.is_none() {
                                fault = Some(e);
                            } else {
                                self.record(e);
                            }
                        }
                    }
                }
                match fault {
                    Some(f) => Err(f),
                    None if matches!(decl.kind, DeclKind::Group { .. }) => Ok(LogicalType::Group(out)),
                    None => Ok(LogicalType::Union(out)),
                }
            }
            _ => unreachable!("named_type on a non-type"),
        };
        self.types_in_progress.remove(&r);
        let res = res.map(|t| {
            let type_names = &self.type_names;
            let unique = ElaboratedDesign::fresh_name(&name.name, |n| type_names.get(n).is_some_and(|o| *o != r));
            self.type_names.insert(unique.clone(), r);
            LogicalType::named(unique, t)
        });
        self.types.insert(r, res.clone().map_err(|_| ()));
        res
    }

    fn eval_type(&mut self, t: &TypeExpr, scope: &Scope<'_>, file: FileId) -> EvalResult<LogicalType> {
        match &t.kind {
            TypeExprKind::Null => Ok(LogicalType::Null),
            TypeExprKind::Bit(e) => match self.eval(e, scope, file)? {
                Value::Int(i) if i < BigInt::from(1) => {
                    Err(err(Code::E011, format!("bit width must be at least 1, found {i}"), e.span))
                }
                Value::Int(i) => i
                    .to_u64()
                    .map(LogicalType::Bit)
                    .ok_or_else(|| err(Code::E011, format!("bit width {i} is too large"), e.span)),
                v => Err(err(
                    Code::E010,
                    format!("bit width must be an int, found {}", v.kind_name()),
                    e.span,
                )),
            },
            TypeExprKind::Stream { element, options } => {
                let elem = self.eval_type(element, scope, file)?;
                let mut s = StreamType::new(elem);
                let mut seen = HashSet::new();
                for o in options {
                    let tag = std::mem::discriminant(&o.kind);
                    if !seen.insert(tag) {
                        return Err(err(Code::E010, "stream option given twice", o.span));
                    }
                    match &o.kind {
                        StreamOptKind::Dimension(e) => {
                            let v = self.eval(e, scope, file)?;
                            let d = as_count(v, "stream dimension", e.span)?;
                            s.dimension = u32::try_from(d)
                                .map_err(|_| err(Code::E010, "stream dimension is too large", e.span))?;
                        }
                        StreamOptKind::Throughput(e) => {
                            s.throughput = match self.eval(e, scope, file)? {
                                Value::Int(i) if i.is_positive() => BigRational::from_integer(i),
                                Value::Float(f) if f > 0.0 && f.is_finite() => {
                                    BigRational::from_float(f).expect("finite float")
                                }
                                v => {
                                    return Err(err(
                                        Code::E010,
                                        format!("throughput must be a positive number, found {v}"),
                                        e.span,
                                    ))
                                }
                            };
                        }
                        StreamOptKind::Complexity(e) => {
                            let v = self.eval(e, scope, file)?;
                            let c = as_count(v, "stream complexity", e.span)?;
                            if c == 0 || c > u32::MAX as u64 {
                                return Err(err(Code::E010, "stream complexity must be at least 1", e.span));
                            }
                            s.complexity = c as u32;
                        }
                        StreamOptKind::Synchronicity(name) => {
                            s.synchronicity = Synchronicity::parse(name).ok_or_else(|| {
                                err(Code::E010, format!("unknown synchronicity \"{name}\""), o.span)
                            })?;
                        }
                        StreamOptKind::Direction(d) => s.direction = *d,
                    }
                }
                Ok(LogicalType::Stream(Box::new(s)))
            }
            TypeExprKind::Named { name, args } => {
                let not_template = || {
                    err(
                        Code::E009,
                        format!("type `{}` takes no template arguments", name.name),
                        t.span,
                    )
                };
                match scope.lookup(&name.name) {
                    Some(Binding::Type(ty)) => {
                        return if args.is_some() { Err(not_template()) } else { Ok(ty.clone()) };
                    }
                    Some(_) => return Err(err(Code::E003, format!("`{}` is not a type", name.name), name.span)),
                    None => {}
                }
                match self.program.lookup_global(file, &name.name) {
                    Some(r) => match self.program.decl(r).kind {
                        DeclKind::TypeAlias { .. } | DeclKind::Group { .. } | DeclKind::Union { .. } => {
                            if args.is_some() {
                                Err(not_template())
                            } else {
                                self.named_type(r)
                            }
                        }
                        _ => Err(err(Code::E003, format!("`{}` is not a type", name.name), name.span)),
                    },
                    None => Err(err(Code::E002, format!("unresolved name `{}`", name.name), name.span)),
                }
            }
        }
    }

    fn eval_args(
        &mut self,
        args: &Option<Vec<TemplateArg>>,
        scope: &Scope<'_>,
        file: FileId,
    ) -> EvalResult<Vec<(Arg, SourceSpan)>> {
        let mut out = Vec::new();
        for a in args.iter().flatten() {
            let v = match &a.kind {
                TemplateArgKind::Value(e) => Arg::Value(self.eval(e, scope, file)?),
                TemplateArgKind::Type(t) => Arg::Type(self.eval_type(t, scope, file)?),
                TemplateArgKind::Impl { name, args } => Arg::Impl(self.impl_ref(name, args, scope, file, a.span)?),
            };
            out.push((v, a.span));
        }
        Ok(out)
    }

    /// Resolves an implementation reference: an `impl of` parameter in
    /// scope or a global implementation declaration.
    fn impl_ref(
        &mut self,
        name: &Ident,
        args: &Option<Vec<TemplateArg>>,
        scope: &Scope<'_>,
        file: FileId,
        site: SourceSpan,
    ) -> EvalResult<String> {
        match scope.lookup(&name.name) {
            Some(Binding::Impl(n)) => {
                return if args.is_some() {
                    Err(err(
                        Code::E009,
                        format!("`{}` is an implementation parameter and takes no template arguments", name.name),
                        site,
                    ))
                } else {
                    Ok(n.clone())
                };
            }
            Some(_) => {
                return Err(err(
                    Code::E009,
                    format!("`{}` is not an implementation", name.name),
                    name.span,
                ))
            }
            None => {}
        }
        let Some(r) = self.program.lookup_global(file, &name.name) else {
            return Err(err(Code::E002, format!("unresolved name `{}`", name.name), name.span));
        };
        match &self.program.decl(r).kind {
            DeclKind::Impl(_) => {
                let args = self.eval_args(args, scope, file)?;
                self.instantiate_impl(r, args, site)
            }
            DeclKind::Streamlet(_) => Err(err(
                Code::E009,
                format!("`{}` is a streamlet; instantiate an implementation of it", name.name),
                name.span,
            )),
            _ => Err(err(
                Code::E009,
                format!("`{}` is not an implementation", name.name),
                name.span,
            )),
        }
    }

    /// Checks `args` against `params` and binds them into `scope`.
    fn bind_params(
        &mut self,
        r: DeclRef,
        decl_name: &Ident,
        params: &[TemplateParam],
        args: Vec<(Arg, SourceSpan)>,
        site: SourceSpan,
        scope: &mut Scope<'_>,
    ) -> EvalResult<Vec<Arg>> {
        if args.len() != params.len() {
            return Err(err(
                Code::E009,
                format!(
                    "`{}` expects {} template argument{}, found {}",
                    decl_name.name,
                    params.len(),
                    if params.len() == 1 { "" } else { "s" },
                    args.len()
                ),
                site,
            ));
        }
        let mut out = Vec::with_capacity(args.len());
        for (p, (a, span)) in params.iter().zip(args) {
            let mismatch = |expected: &str, a: &Arg| {
                err(
                    Code::E009,
                    format!(
                        "template parameter `{}` of `{}` expects {expected}, found {}",
                        p.name.name,
                        decl_name.name,
                        a.describe()
                    ),
                    span,
                )
            };
            let a = match (&p.kind, a) {
                (ParamKind::Value(k), Arg::Value(v)) => match coerce(v, *k) {
                    Ok(v) => Arg::Value(v),
                    Err(v) => return Err(mismatch(&format!("a {} value", k.as_str()), &Arg::Value(v))),
                },
                (ParamKind::Value(k), a) => return Err(mismatch(&format!("a {} value", k.as_str()), &a)),
                (ParamKind::Type, a @ Arg::Type(_)) => a,
                (ParamKind::Type, a) => return Err(mismatch("a type", &a)),
                (ParamKind::ImplOf(s), Arg::Impl(n)) => {
                    let want = self.program.lookup_global(r.file, &s.name);
                    if want.is_none() || self.impl_of.get(&n) != want.as_ref() {
                        return Err(err(
                            Code::E009,
                            format!(
                                "template parameter `{}` of `{}` expects an implementation of `{}`, found `{n}`",
                                p.name.name, decl_name.name, s.name
                            ),
                            span,
                        ));
                    }
                    Arg::Impl(n)
                }
                (ParamKind::ImplOf(s), a) => {
                    return Err(mismatch(&format!("an implementation of `{}`", s.name), &a))
                }
            };
            let binding = match &a {
                Arg::Value(v) => Binding::Value(v.clone()),
                Arg::Type(t) => Binding::Type(t.clone()),
                Arg::Impl(n) => Binding::Impl(n.clone()),
            };
            scope.bind(&p.name.name, binding, p.name.span)?;
            out.push(a);
        }
        Ok(out)
    }

    fn instantiate_streamlet(&mut self, r: DeclRef, args: Vec<(Arg, SourceSpan)>, site: SourceSpan) -> EvalResult<String> {
        let DeclKind::Streamlet(decl) = &self.program.decl(r).kind else {
            unreachable!("instantiate_streamlet on a non-streamlet")
        };
        let mut scope = Scope::root();
        let args = self.bind_params(r, &decl.name, &decl.params, args, site, &mut scope)?;
        let key = (r, args.iter().map(Arg::key).collect::<Vec<_>>());
        if let Some(res) = self.memo.get(&key) {
            return res.clone().map_err(|_| Fault::Reported);
        }
        let mut ports = Vec::new();
        let mut failed = false;
        for p in &decl.ports {
            match self.port(p, &scope, r.file) {
                Ok(mut ps) => ports.append(&mut ps),
                Err(f) => {
                    failed = true;
                    self.record(f);
                }
            }
        }
        if failed {
            self.memo.insert(key, Err(()));
            return Err(Fault::Reported);
        }
        let origin = Origin::new(decl.name.name.clone(), args.iter().map(Arg::text).collect());
        let name = ElaboratedDesign::fresh_name(&ident_safe(&origin.mangled()), |n| {
            self.design.streamlets.contains_key(n)
        });
        self.design.streamlets.insert(
            name.clone(),
            ElaboratedStreamlet {
                name: name.clone(),
                origin,
                ports,
            },
        );
        self.memo.insert(key, Ok(name.clone()));
        Ok(name)
    }

    fn port(&mut self, p: &PortDecl, scope: &Scope<'_>, file: FileId) -> EvalResult<Vec<ElaboratedPort>> {
        let ty = self.eval_type(&p.ty, scope, file)?;
        let Some(stream) = ty.as_stream() else {
            return Err(err(
                Code::E003,
                format!("port `{}` must have a Stream type, found `{ty}`", p.name.name),
                p.ty.span,
            ));
        };
        match bit_width(&stream.element) {
            Ok(_) => {}
            Err(WidthError::Stream) => {
                return Err(err(
                    Code::E011,
                    format!("element of port `{}` contains a nested Stream and has no bit width", p.name.name),
                    p.ty.span,
                ))
            }
            Err(WidthError::Overflow) => {
                return Err(err(
                    Code::E011,
                    format!("element width of port `{}` overflows", p.name.name),
                    p.ty.span,
                ))
            }
        }
        let clock = match &p.domain {
            None => ClockDomain::default_domain(),
            Some(id) => {
                let mut env = Env { el: self, scope, file };
                match env.lookup_value(&id.name, id.span)? {
                    Value::Clock(c) => c,
                    v => {
                        return Err(err(
                            Code::E010,
                            format!("`{}` is not a clock domain but a {}", id.name, v.kind_name()),
                            id.span,
                        ))
                    }
                }
            }
        };
        let indices: Vec<Option<u64>> = match &p.array {
            None => vec![None],
            Some(e) => {
                let v = self.eval(e, scope, file)?;
                let n = as_count(v, "port array size", e.span)?;
                (0..n).map(Some).collect()
            }
        };
        Ok(indices
            .into_iter()
            .map(|index| ElaboratedPort {
                name: p.name.name.clone(),
                index,
                dir: p.dir,
                ty: ty.clone(),
                clock: clock.clone(),
                span: Some(p.name.span),
            })
            .collect())
    }

    fn instantiate_impl(&mut self, r: DeclRef, args: Vec<(Arg, SourceSpan)>, site: SourceSpan) -> EvalResult<String> {
        let program = self.program;
        let DeclKind::Impl(decl) = &program.decl(r).kind else {
            unreachable!("instantiate_impl on a non-impl")
        };
        let mut scope = Scope::root();
        let args = self.bind_params(r, &decl.name, &decl.params, args, site, &mut scope)?;
        let key = (r, args.iter().map(Arg::key).collect::<Vec<_>>());
        if let Some(res) = self.memo.get(&key) {
            return res.clone().map_err(|_| Fault::Reported);
        }
        if self.in_progress.contains(&key) {
            return Err(err(
                Code::E009,
                format!("template recursion: `{}` contains itself", decl.name.name),
                site,
            ));
        }
        if self.depth >= self.max_depth {
            return Err(err(
                Code::E009,
                format!("template recursion exceeds the depth limit of {}", self.max_depth),
                site,
            ));
        }
        self.in_progress.insert(key.clone());
        self.depth += 1;
        let res = self.impl_body(r, decl, &args, &scope);
        self.depth -= 1;
        self.in_progress.remove(&key);
        match res {
            Ok(name) => {
                self.memo.insert(key, Ok(name.clone()));
                Ok(name)
            }
            Err(f) => {
                self.memo.insert(key, Err(()));
                Err(f)
            }
        }
    }

    fn impl_body(&mut self, r: DeclRef, decl: &ImplDecl, args: &[Arg], scope: &Scope<'_>) -> EvalResult<String> {
        let program = self.program;
        let Some(of_ref) = program.lookup_global(r.file, &decl.of.name) else {
            return Err(err(Code::E002, format!("unresolved name `{}`", decl.of.name), decl.of.span));
        };
        if !matches!(program.decl(of_ref).kind, DeclKind::Streamlet(_)) {
            return Err(err(
                Code::E009,
                format!("`{}` is not a streamlet", decl.of.name),
                decl.of.span,
            ));
        }
        let of_args = self.eval_args(&decl.of_args, scope, r.file)?;
        let streamlet = self.instantiate_streamlet(of_ref, of_args, decl.of.span)?;
        if decl.external && !decl.body.is_empty() {
            return Err(err(
                Code::E009,
                format!("external implementation `{}` must not have a body", decl.name.name),
                decl.body[0].span,
            ));
        }
        let local = self.design.streamlets[&streamlet].clone();
        let mut body = Body::default();
        self.items(&decl.body, scope, r.file, &local, &mut body);
        if body.failed {
            return Err(Fault::Reported);
        }
        let origin = Origin::new(decl.name.name.clone(), args.iter().map(Arg::text).collect());
        let intrinsic = if Some(r.file) == program.prelude {
            stdlib::intrinsic_for(&origin.decl, &origin.args)
        } else {
            None
        };
        let name = {
            let (impls, reserved) = (&self.design.impls, &self.reserved_impls);
            ElaboratedDesign::fresh_name(&ident_safe(&origin.mangled()), |n| {
                impls.contains_key(n) || reserved.contains(n)
            })
        };
        self.reserved_impls.insert(name.clone());
        self.impl_of.insert(name.clone(), of_ref);
        self.design.impls.insert(
            name.clone(),
            ElaboratedImpl {
                name: name.clone(),
                origin,
                streamlet,
                external: decl.external,
                intrinsic,
                instances: body.instances,
                connections: body.connections,
            },
        );
        Ok(name)
    }

    fn items(&mut self, items: &[ImplItem], scope: &Scope<'_>, file: FileId, local: &ElaboratedStreamlet, body: &mut Body) {
        for item in items {
            let res = match &item.kind {
                ImplItemKind::Instance { name, target, args, size } => {
                    self.instance(item.span, name, target, args, size.as_ref(), scope, file, body)
                }
                ImplItemKind::Connection { src, dst, relax } => {
                    let src = self.endpoint(src, scope, file, local, body);
                    let dst = self.endpoint(dst, scope, file, local, body);
                    match (src, dst) {
                        (Ok(src), Ok(dst)) => {
                            body.connections.push(Connection {
                                src,
                                dst,
                                relax: *relax,
                                span: Some(item.span),
                            });
                            Ok(())
                        }
                        (Err(a), Err(b)) => {
                            self.record(a);
                            Err(b)
                        }
                        (Err(f), _) | (_, Err(f)) => Err(f),
                    }
                }
                ImplItemKind::For { var, iter, body: inner } => match self.eval(iter, scope, file) {
                    Ok(Value::Array(values)) => {
                        for v in values {
                            let mut child = scope.child();
                            child
                                .bind(&var.name, Binding::Value(v), var.span)
                                .expect("fresh scope");
                            body.aliases.push(HashMap::new());
                            self.items(inner, &child, file, local, body);
                            body.aliases.pop();
                        }
                        Ok(())
                    }
                    Ok(v) => Err(err(
                        Code::E010,
                        format!("`for` expects an array, found {}", v.kind_name()),
                        iter.span,
                    )),
                    Err(f) => Err(f),
                },
                ImplItemKind::If { cond, body: inner } => match self.eval(cond, scope, file) {
                    Ok(Value::Bool(true)) => {
                        let child = scope.child();
                        self.items(inner, &child, file, local, body);
                        Ok(())
                    }
                    Ok(Value::Bool(false)) => Ok(()),
                    Ok(v) => Err(err(
                        Code::E010,
                        format!("`if` expects a bool, found {}", v.kind_name()),
                        cond.span,
                    )),
                    Err(f) => Err(f),
                },
                ImplItemKind::Assert(e) => {
                    let mut env = Env { el: self, scope, file };
                    eval::eval_assert(e, &mut env)
                }
            };
            if let Err(f) = res {
                body.failed = true;
                self.record(f);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn instance(
        &mut self,
        span: SourceSpan,
        name: &Ident,
        target: &Ident,
        args: &Option<Vec<TemplateArg>>,
        size: Option<&Expr>,
        scope: &Scope<'_>,
        file: FileId,
        body: &mut Body,
    ) -> EvalResult<()> {
        let in_loop = !body.aliases.is_empty();
        if let Some(sh) = body.shapes.get(&name.name) {
            let again = matches!(sh.kind, ShapeKind::Looped(_)) && sh.decl_span == span;
            if !again {
                return Err(Fault::Diag(
                    Diagnostic::error(
                        Code::E008,
                        format!("instance `{}` is already declared", name.name),
                        name.span,
                    )
                    .with_related(sh.decl_span),
                ));
            }
        }
        if in_loop && size.is_some() {
            return Err(err(
                Code::E009,
                "instance arrays cannot be declared inside a `for` block",
                span,
            ));
        }
        let count = match size {
            Some(e) => {
                let v = self.eval(e, scope, file);
                match v.and_then(|v| as_count(v, "instance array size", e.span)) {
                    Ok(n) => Some(n),
                    Err(f) => {
                        self.mark_failed(body, name, span);
                        return Err(f);
                    }
                }
            }
            None => None,
        };
        let implementation = match self.impl_ref(target, args, scope, file, span) {
            Ok(i) => i,
            Err(f) => {
                self.mark_failed(body, name, span);
                return Err(f);
            }
        };
        let indices: Vec<Option<u64>> = if in_loop {
            let next = match body.shapes.get(&name.name) {
                Some(Shape {
                    kind: ShapeKind::Looped(n), ..
                }) => *n,
                _ => 0,
            };
            body.shapes.insert(
                name.name.clone(),
                Shape {
                    kind: ShapeKind::Looped(next + 1),
                    decl_span: span,
                    failed: false,
                },
            );
            body.aliases
                .last_mut()
                .expect("in loop")
                .insert(name.name.clone(), next);
            vec![Some(next)]
        } else {
            let (kind, indices) = match count {
                Some(n) => (ShapeKind::Array(n), (0..n).map(Some).collect()),
                None => (ShapeKind::Single, vec![None]),
            };
            body.shapes.insert(
                name.name.clone(),
                Shape {
                    kind,
                    decl_span: span,
                    failed: false,
                },
            );
            indices
        };
        for index in indices {
            body.instances.push(Instance {
                name: name.name.clone(),
                index,
                implementation: implementation.clone(),
                span: Some(name.span),
            });
        }
        Ok(())
    }

    fn mark_failed(&mut self, body: &mut Body, name: &Ident, span: SourceSpan) {
        let kind = if body.aliases.is_empty() {
            ShapeKind::Single
        } else {
            ShapeKind::Looped(0)
        };
        body.shapes.insert(
            name.name.clone(),
            Shape {
                kind,
                decl_span: span,
                failed: true,
            },
        );
    }

    fn index(&mut self, e: &Expr, scope: &Scope<'_>, file: FileId) -> EvalResult<u64> {
        match self.eval(e, scope, file)? {
            Value::Int(i) if i.is_negative() => Err(err(Code::E002, format!("index {i} is out of bounds"), e.span)),
            Value::Int(i) => i
                .to_u64()
                .ok_or_else(|| err(Code::E002, format!("index {i} is out of bounds"), e.span)),
            v => Err(err(
                Code::E010,
                format!("index must be an int, found {}", v.kind_name()),
                e.span,
            )),
        }
    }

    fn endpoint(
        &mut self,
        r: &PortRef,
        scope: &Scope<'_>,
        file: FileId,
        local: &ElaboratedStreamlet,
        body: &Body,
    ) -> EvalResult<Endpoint> {
        let owner = match &r.owner {
            None => Owner::Local,
            Some((id, idx)) => {
                let Some(shape) = body.shapes.get(&id.name) else {
                    return Err(err(Code::E002, format!("unknown instance `{}`", id.name), id.span));
                };
                if shape.failed {
                    return Err(Fault::Reported);
                }
                let idx = match idx {
                    Some(e) => Some((self.index(e, scope, file)?, e.span)),
                    None => None,
                };
                let index = match (shape.kind, idx) {
                    (ShapeKind::Single, None) => None,
                    (ShapeKind::Single, Some((_, span))) => {
                        return Err(err(
                            Code::E002,
                            format!("instance `{}` is not an array", id.name),
                            span,
                        ))
                    }
                    (ShapeKind::Array(n) | ShapeKind::Looped(n), Some((i, span))) => {
                        if i >= n {
                            return Err(err(
                                Code::E002,
                                format!("index {i} is out of bounds for instance array `{}` of size {n}", id.name),
                                span,
                            ));
                        }
                        Some(i)
                    }
                    (ShapeKind::Looped(_), None) => {
                        match body.aliases.iter().rev().find_map(|f| f.get(&id.name)) {
                            Some(&i) => Some(i),
                            None => {
                                return Err(err(
                                    Code::E002,
                                    format!("instance array `{}` needs an index here", id.name),
                                    id.span,
                                ))
                            }
                        }
                    }
                    (ShapeKind::Array(_), None) => {
                        return Err(err(
                            Code::E002,
                            format!("instance array `{}` needs an index", id.name),
                            id.span,
                        ))
                    }
                };
                Owner::Instance {
                    name: id.name.clone(),
                    index,
                }
            }
        };
        let ports: &ElaboratedStreamlet = match &owner {
            Owner::Local => local,
            Owner::Instance { name, index } => {
                let inst = body
                    .instances
                    .iter()
                    .find(|i| &i.name == name && &i.index == index)
                    .expect("shape and instances agree");
                let imp = &self.design.impls[&inst.implementation];
                &self.design.streamlets[&imp.streamlet]
            }
        };
        let matching: Vec<Option<u64>> = ports
            .ports
            .iter()
            .filter(|p| p.name == r.port.name)
            .map(|p| p.index)
            .collect();
        let owner_text = match &owner {
            Owner::Local => "this implementation".to_string(),
            o => format!("`{o}`"),
        };
        if matching.is_empty() {
            return Err(err(
                Code::E002,
                format!("no port `{}` on {owner_text}", r.port.name),
                r.port.span,
            ));
        }
        let is_array = matching.first().is_some_and(|i| i.is_some());
        let index = match (&r.index, is_array) {
            (None, false) => None,
            (Some(e), false) => {
                return Err(err(
                    Code::E002,
                    format!("port `{}` is not an array", r.port.name),
                    e.span,
                ))
            }
            (None, true) => {
                return Err(err(
                    Code::E002,
                    format!("port array `{}` needs an index", r.port.name),
                    r.port.span,
                ))
            }
            (Some(e), true) => {
                let i = self.index(e, scope, file)?;
                let n = matching.len() as u64;
                if i >= n {
                    return Err(err(
                        Code::E002,
                        format!("index {i} is out of bounds for port array `{}` of size {n}", r.port.name),
                        e.span,
                    ));
                }
                Some(i)
            }
        };
        Ok(Endpoint {
            owner,
            port: r.port.name.clone(),
            index,
        })
    }
}

fn const_kind_name(k: ConstKind) -> String {
    match k {
        ConstKind::Scalar(b) => b.as_str().to_string(),
        ConstKind::Array(b) => format!("[{}]", b.as_str()),
    }
}

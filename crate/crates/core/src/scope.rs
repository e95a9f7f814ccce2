//! Name resolution: per-file scopes, imports, and the lexical scope chain
//! used while evaluating templates.

use std::collections::{HashMap, HashSet};
use std::path::{Component, Path, PathBuf};

use crate::diag::{Code, Diagnostic, FileId, SourceMap, SourceSpan};
use crate::eval::{Bindings, EvalResult, Fault};
use crate::syntax::*;
use crate::types::LogicalType;
use crate::value::Value;

/// A top-level declaration: file plus position in that file's AST.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeclRef {
    pub file: FileId,
    pub index: usize,
}

#[derive(Debug, Clone, Default)]
pub struct FileScope {
    pub names: HashMap<String, usize>,
    pub imports: Vec<FileId>,
}

/// The resolved set of source files.
#[derive(Debug, Clone)]
pub struct Program {
    pub asts: Vec<Ast>,
    pub scopes: Vec<FileScope>,
    pub prelude: Option<FileId>,
}

impl Program {
    pub fn decl(&self, r: DeclRef) -> &Declaration {
        &self.asts[r.file.0 as usize].decls[r.index]
    }

    /// Looks `name` up from the top level of `file`: the file itself, then
    /// its imports in order, then the prelude.
    pub fn lookup_global(&self, file: FileId, name: &str) -> Option<DeclRef> {
        let scope = &self.scopes[file.0 as usize];
        if let Some(&index) = scope.names.get(name) {
            return Some(DeclRef { file, index });
        }
        for &imp in &scope.imports {
            if let Some(&index) = self.scopes[imp.0 as usize].names.get(name) {
                return Some(DeclRef { file: imp, index });
            }
        }
        let prelude = self.prelude?;
        if prelude != file {
            if let Some(&index) = self.scopes[prelude.0 as usize].names.get(name) {
                return Some(DeclRef { file: prelude, index });
            }
        }
        None
    }

    /// All implementation declarations named `name`, across files.
    pub fn find_impls(&self, name: &str) -> Vec<DeclRef> {
        let mut out = Vec::new();
        for (fi, scope) in self.scopes.iter().enumerate() {
            if let Some(&index) = scope.names.get(name) {
                let r = DeclRef {
                    file: FileId(fi as u32),
                    index,
                };
                if matches!(self.decl(r).kind, DeclKind::Impl(_)) {
                    out.push(r);
                }
            }
        }
        out
    }
}

/// Lexically normalizes `dir/rel`, resolving `.` and `..`.
pub fn resolve_import_path(importer: &str, rel: &str) -> String {
    let base = Path::new(importer).parent().unwrap_or(Path::new(""));
    normalize_path(&base.join(rel))
}

pub fn normalize_path(p: &Path) -> String {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other.as_os_str()),
        }
    }
    out.to_string_lossy().replace('\\', "/")
}

/// Builds file scopes, resolves imports and checks that every identifier
/// refers to something. `asts[i]` must be the AST of `FileId(i)`.
pub fn resolve(asts: Vec<Ast>, sources: &SourceMap, prelude: Option<FileId>) -> (Program, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let mut scopes = Vec::with_capacity(asts.len());
    let normalized: HashMap<String, FileId> = sources
        .ids()
        .map(|id| (normalize_path(Path::new(sources.path(id))), id))
        .collect();

    for ast in &asts {
        let mut scope = FileScope::default();
        for (i, d) in ast.decls.iter().enumerate() {
            match &d.kind {
                DeclKind::Import { path } => {
                    let target = resolve_import_path(sources.path(ast.file), path);
                    match normalized.get(&target) {
                        Some(&id) => {
                            if !scope.imports.contains(&id) && id != ast.file {
                                scope.imports.push(id);
                            }
                        }
                        None => diags.push(Diagnostic::error(
                            Code::E002,
                            format!("unresolved import \"{path}\""),
                            d.span,
                        )),
                    }
                }
                _ => {
                    let name = d.name().expect("named declaration");
                    if let Some(&prev) = scope.names.get(&name.name) {
                        let prev_span = ast.decls[prev].name().map(|n| n.span);
                        let mut diag = Diagnostic::error(
                            Code::E008,
                            format!("`{}` is already bound in this scope", name.name),
                            name.span,
                        );
                        if let Some(s) = prev_span {
                            diag = diag.with_related(s);
                        }
                        diags.push(diag);
                    } else {
                        scope.names.insert(name.name.clone(), i);
                    }
                }
            }
        }
        scopes.push(scope);
    }

    check_import_cycles(&asts, &scopes, sources, &mut diags);

    let program = Program { asts, scopes, prelude };
    for ast in &program.asts {
        let mut checker = RefChecker {
            program: &program,
            file: ast.file,
            locals: Vec::new(),
            diags: &mut diags,
        };
        for d in &ast.decls {
            checker.decl(d);
        }
    }
    (program, diags)
}

fn check_import_cycles(asts: &[Ast], scopes: &[FileScope], sources: &SourceMap, diags: &mut Vec<Diagnostic>) {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; scopes.len()];
    fn dfs(
        f: usize,
        asts: &[Ast],
        scopes: &[FileScope],
        sources: &SourceMap,
        state: &mut [u8],
        diags: &mut Vec<Diagnostic>,
    ) {
        state[f] = 1;
        for &imp in &scopes[f].imports {
            let t = imp.0 as usize;
            if state[t] == 1 {
                let span = asts[f].decls.iter().find_map(|d| match &d.kind {
                    DeclKind::Import { path }
                        if resolve_import_path(sources.path(asts[f].file), path)
                            == normalize_path(Path::new(sources.path(imp))) =>
                    {
                        Some(d.span)
                    }
                    _ => None,
                });
                diags.push(Diagnostic::error(
                    Code::E002,
                    format!("import cycle through \"{}\"", sources.path(imp)),
                    span,
                ));
            } else if state[t] == 0 {
                dfs(t, asts, scopes, sources, state, diags);
            }
        }
        state[f] = 2;
    }
    for f in 0..scopes.len() {
        if state[f] == 0 {
            dfs(f, asts, scopes, sources, &mut state, diags);
        }
    }
}

struct RefChecker<'a> {
    program: &'a Program,
    file: FileId,
    locals: Vec<HashSet<String>>,
    diags: &'a mut Vec<Diagnostic>,
}

impl RefChecker<'_> {
    fn known(&self, name: &str) -> bool {
        self.locals.iter().any(|s| s.contains(name)) || self.program.lookup_global(self.file, name).is_some()
    }

    fn check(&mut self, id: &Ident) {
        if !self.known(&id.name) {
            self.diags.push(Diagnostic::error(
                Code::E002,
                format!("unresolved name `{}`", id.name),
                id.span,
            ));
        }
    }

    fn unique<'n>(&mut self, names: impl Iterator<Item = &'n Ident>, what: &str) {
        let mut seen: HashMap<&str, SourceSpan> = HashMap::new();
        for n in names {
            if let Some(prev) = seen.get(n.name.as_str()) {
                self.diags.push(
                    Diagnostic::error(Code::E008, format!("duplicate {what} `{}`", n.name), n.span)
                        .with_related(*prev),
                );
            } else {
                seen.insert(&n.name, n.span);
            }
        }
    }

    fn push_params(&mut self, params: &[TemplateParam]) {
        self.unique(params.iter().map(|p| &p.name), "template parameter");
        for p in params {
            if let ParamKind::ImplOf(s) = &p.kind {
                self.check(s);
            }
        }
        self.locals.push(params.iter().map(|p| p.name.name.clone()).collect());
    }

    fn decl(&mut self, d: &Declaration) {
        match &d.kind {
            DeclKind::TypeAlias { ty, .. } => self.ty(ty),
            DeclKind::Group { fields, .. } | DeclKind::Union { fields, .. } => {
                self.unique(fields.iter().map(|f| &f.name), "field");
                for f in fields {
                    self.ty(&f.ty);
                }
            }
            DeclKind::Const { value, .. } => self.expr(value),
            DeclKind::Streamlet(s) => {
                self.push_params(&s.params);
                self.unique(s.ports.iter().map(|p| &p.name), "port");
                for p in &s.ports {
                    self.ty(&p.ty);
                    if let Some(a) = &p.array {
                        self.expr(a);
                    }
                    if let Some(dom) = &p.domain {
                        self.check(dom);
                    }
                }
                self.locals.pop();
            }
            DeclKind::Impl(i) => {
                self.push_params(&i.params);
                self.check(&i.of);
                self.args(&i.of_args);
                self.items(&i.body);
                self.locals.pop();
            }
            DeclKind::Import { .. } => {}
        }
    }

    fn items(&mut self, items: &[ImplItem]) {
        for it in items {
            match &it.kind {
                ImplItemKind::Instance { target, args, size, .. } => {
                    self.check(target);
                    self.args(args);
                    if let Some(s) = size {
                        self.expr(s);
                    }
                }
                ImplItemKind::Connection { src, dst, .. } => {
                    for r in [src, dst] {
                        if let Some((_, Some(i))) = &r.owner {
                            self.expr(i);
                        }
                        if let Some(i) = &r.index {
                            self.expr(i);
                        }
                    }
                }
                ImplItemKind::For { var, iter, body } => {
                    self.expr(iter);
                    self.locals.push([var.name.clone()].into_iter().collect());
                    self.items(body);
                    self.locals.pop();
                }
                ImplItemKind::If { cond, body } => {
                    self.expr(cond);
                    self.items(body);
                }
                ImplItemKind::Assert(e) => self.expr(e),
            }
        }
    }

    fn args(&mut self, args: &Option<Vec<TemplateArg>>) {
        for a in args.iter().flatten() {
            match &a.kind {
                TemplateArgKind::Value(e) => self.expr(e),
                TemplateArgKind::Type(t) => self.ty(t),
                TemplateArgKind::Impl { name, args } => {
                    self.check(name);
                    self.args(args);
                }
            }
        }
    }

    fn ty(&mut self, t: &TypeExpr) {
        match &t.kind {
            TypeExprKind::Null => {}
            TypeExprKind::Bit(e) => self.expr(e),
            TypeExprKind::Stream { element, options } => {
                self.ty(element);
                for o in options {
                    match &o.kind {
                        StreamOptKind::Dimension(e) | StreamOptKind::Throughput(e) | StreamOptKind::Complexity(e) => {
                            self.expr(e)
                        }
                        _ => {}
                    }
                }
            }
            TypeExprKind::Named { name, args } => {
                self.check(name);
                self.args(args);
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Ident(n) => {
                if !self.known(n) {
                    self.diags.push(Diagnostic::error(
                        Code::E002,
                        format!("unresolved name `{n}`"),
                        e.span,
                    ));
                }
            }
            ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Str(_) | ExprKind::Bool(_) => {}
            ExprKind::Array(v) | ExprKind::Call(_, v) => v.iter().for_each(|x| self.expr(x)),
            ExprKind::Unary(_, a) => self.expr(a),
            ExprKind::Binary(_, a, b) | ExprKind::Index(a, b) => {
                self.expr(a);
                self.expr(b);
            }
            ExprKind::Range { start, step, end } => {
                self.expr(start);
                self.expr(step);
                self.expr(end);
            }
        }
    }
}

/// What a name is bound to in a lexical scope.
#[derive(Debug, Clone, PartialEq)]
pub enum Binding {
    Value(Value),
    Type(LogicalType),
    /// An elaborated implementation, by design name.
    Impl(String),
    Decl(DeclRef),
}

/// One level of the lexical scope chain. A name binds at most once per
/// level; inner levels shadow outer ones.
#[derive(Debug)]
pub struct Scope<'p> {
    parent: Option<&'p Scope<'p>>,
    bindings: HashMap<String, Binding>,
}

impl<'p> Scope<'p> {
    pub fn root() -> Scope<'static> {
        Scope {
            parent: None,
            bindings: HashMap::new(),
        }
    }

    pub fn child(&'p self) -> Scope<'p> {
        Scope {
            parent: Some(self),
            bindings: HashMap::new(),
        }
    }

    /// Binds `name`; rebinding in the same level is E008.
    pub fn bind(&mut self, name: &str, b: Binding, span: SourceSpan) -> Result<(), Diagnostic> {
        if self.bindings.contains_key(name) {
            return Err(Diagnostic::error(
                Code::E008,
                format!("`{name}` is already bound in this scope"),
                span,
            ));
        }
        self.bindings.insert(name.to_string(), b);
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Option<&Binding> {
        let mut s = Some(self);
        while let Some(scope) = s {
            if let Some(b) = scope.bindings.get(name) {
                return Some(b);
            }
            s = scope.parent;
        }
        None
    }
}

impl Bindings for Scope<'_> {
    fn lookup_value(&mut self, name: &str, span: SourceSpan) -> EvalResult<Value> {
        match self.lookup(name) {
            Some(Binding::Value(v)) => Ok(v.clone()),
            Some(_) => Err(Fault::Diag(Diagnostic::error(
                Code::E010,
                format!("`{name}` is not a value"),
                span,
            ))),
            None => Err(Fault::Diag(Diagnostic::error(
                Code::E002,
                format!("unresolved name `{name}`"),
                span,
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eval;

    fn program(files: &[(&str, &str)]) -> (Program, Vec<Diagnostic>) {
        let mut sm = SourceMap::new();
        let mut asts = Vec::new();
        for (p, t) in files {
            let id = sm.add(*p, *t);
            asts.push(parse(t, id).unwrap());
        }
        resolve(asts, &sm, None)
    }

    #[test]
    fn import_resolves_across_files() {
        let (p, d) = program(&[
            ("lib/a.td", "type Byte = Bit(8);"),
            ("lib/b.td", "import \"a.td\"; type S = Stream(Byte);"),
        ]);
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(p.lookup_global(FileId(1), "Byte"), Some(DeclRef { file: FileId(0), index: 0 }));
    }

    #[test]
    fn missing_import_and_unresolved_name() {
        let (_, d) = program(&[("b.td", "import \"nope.td\"; type S = Stream(Byte);")]);
        let codes: Vec<_> = d.iter().map(|x| x.code).collect();
        assert_eq!(codes, vec![Code::E002, Code::E002]);
    }

    #[test]
    fn import_cycle() {
        let (_, d) = program(&[("a.td", "import \"b.td\";"), ("b.td", "import \"a.td\";")]);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::E002);
        assert!(d[0].message.contains("cycle"));
    }

    #[test]
    fn rebinding_is_e008() {
        let (_, d) = program(&[("a.td", "int x = 1;\nint x = 2;")]);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::E008);
        assert_eq!(d[0].span.unwrap().line, 2);
    }

    #[test]
    fn loop_variable_is_known_inside_block() {
        let (_, d) = program(&[(
            "a.td",
            "int i = 3; streamlet s { } impl x of s { for i in 0-1->i { assert(i >= 0), } }",
        )]);
        assert!(d.is_empty(), "{d:?}");
    }

    #[test]
    fn shadowing_in_scope_chain() {
        let mut outer = Scope::root();
        outer.bind("i", Binding::Value(Value::int(7)), SourceSpan::default()).unwrap();
        let mut inner = outer.child();
        inner.bind("i", Binding::Value(Value::int(2)), SourceSpan::default()).unwrap();
        let e = parse_expr("i * 10", FileId(0)).unwrap();
        assert_eq!(eval(&e, &mut inner).unwrap(), Value::int(20));
        let mut outer = outer;
        assert_eq!(eval(&e, &mut outer).unwrap(), Value::int(70));
        assert_eq!(
            outer.bind("i", Binding::Value(Value::int(1)), SourceSpan::default()).unwrap_err().code,
            Code::E008
        );
    }
}

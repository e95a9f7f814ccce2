//! Abstract syntax tree produced by the parser.

use num_bigint::BigInt;

use crate::diag::{FileId, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub struct Ast {
    pub file: FileId,
    pub decls: Vec<Declaration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: SourceSpan,
}

impl Ident {
    pub fn new(name: impl Into<String>, span: SourceSpan) -> Self {
        Ident {
            name: name.into(),
            span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub kind: DeclKind,
    pub span: SourceSpan,
}

impl Declaration {
    /// The declared name, if the declaration introduces one.
    pub fn name(&self) -> Option<&Ident> {
        match &self.kind {
            DeclKind::TypeAlias { name, .. }
            | DeclKind::Group { name, .. }
            | DeclKind::Union { name, .. }
            | DeclKind::Const { name, .. } => Some(name),
            DeclKind::Streamlet(s) => Some(&s.name),
            DeclKind::Impl(i) => Some(&i.name),
            DeclKind::Import { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeclKind {
    TypeAlias { name: Ident, ty: TypeExpr },
    Group { name: Ident, fields: Vec<Field> },
    Union { name: Ident, fields: Vec<Field> },
    Const { kind: ConstKind, name: Ident, value: Expr },
    Streamlet(StreamletDecl),
    Impl(ImplDecl),
    Import { path: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: Ident,
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasicKind {
    Int,
    Float,
    String,
    Bool,
    ClockDomain,
}

impl BasicKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BasicKind::Int => "int",
            BasicKind::Float => "float",
            BasicKind::String => "string",
            BasicKind::Bool => "bool",
            BasicKind::ClockDomain => "clockdomain",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstKind {
    Scalar(BasicKind),
    Array(BasicKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeExpr {
    pub kind: TypeExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeExprKind {
    Null,
    Bit(Box<Expr>),
    Stream {
        element: Box<TypeExpr>,
        options: Vec<StreamOpt>,
    },
    Named {
        name: Ident,
        args: Option<Vec<TemplateArg>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamOpt {
    pub kind: StreamOptKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamOptKind {
    Dimension(Expr),
    Throughput(Expr),
    Complexity(Expr),
    Synchronicity(String),
    Direction(StreamDirection),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamDirection {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PortDir {
    In,
    Out,
}

impl PortDir {
    pub fn as_str(self) -> &'static str {
        match self {
            PortDir::In => "in",
            PortDir::Out => "out",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateParam {
    pub name: Ident,
    pub kind: ParamKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamKind {
    Value(BasicKind),
    Type,
    ImplOf(Ident),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateArg {
    pub kind: TemplateArgKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemplateArgKind {
    Value(Expr),
    Type(TypeExpr),
    Impl {
        name: Ident,
        args: Option<Vec<TemplateArg>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamletDecl {
    pub name: Ident,
    pub params: Vec<TemplateParam>,
    pub ports: Vec<PortDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortDecl {
    pub name: Ident,
    pub ty: TypeExpr,
    pub dir: PortDir,
    pub array: Option<Expr>,
    pub domain: Option<Ident>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplDecl {
    pub name: Ident,
    pub params: Vec<TemplateParam>,
    pub external: bool,
    pub of: Ident,
    pub of_args: Option<Vec<TemplateArg>>,
    pub body: Vec<ImplItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplItem {
    pub kind: ImplItemKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImplItemKind {
    Instance {
        name: Ident,
        target: Ident,
        args: Option<Vec<TemplateArg>>,
        size: Option<Expr>,
    },
    Connection {
        src: PortRef,
        dst: PortRef,
        relax: bool,
    },
    For {
        var: Ident,
        iter: Expr,
        body: Vec<ImplItem>,
    },
    If {
        cond: Expr,
        body: Vec<ImplItem>,
    },
    Assert(Expr),
}

/// `port`, `port[i]`, `inst.port`, `inst[i].port`, `inst[i].port[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PortRef {
    pub owner: Option<(Ident, Option<Expr>)>,
    pub port: Ident,
    pub index: Option<Expr>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Ceil,
    Floor,
    Log2,
    Log10,
    Abs,
    Min,
    Max,
    Assert,
}

impl Builtin {
    pub fn from_name(s: &str) -> Option<Builtin> {
        Some(match s {
            "ceil" => Builtin::Ceil,
            "floor" => Builtin::Floor,
            "log2" => Builtin::Log2,
            "log10" => Builtin::Log10,
            "abs" => Builtin::Abs,
            "min" => Builtin::Min,
            "max" => Builtin::Max,
            "assert" => Builtin::Assert,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Builtin::Ceil => "ceil",
            Builtin::Floor => "floor",
            Builtin::Log2 => "log2",
            Builtin::Log10 => "log10",
            Builtin::Abs => "abs",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Assert => "assert",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(BigInt),
    Float(f64),
    Str(String),
    Bool(bool),
    Ident(String),
    Array(Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `start - step -> end`, end-exclusive.
    Range {
        start: Box<Expr>,
        step: Box<Expr>,
        end: Box<Expr>,
    },
    Call(Builtin, Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
}

/// Resets every span in a tree, so that two trees can be compared by shape.
pub trait ClearSpans {
    fn clear_spans(&mut self);
}

impl<T: ClearSpans> ClearSpans for Vec<T> {
    fn clear_spans(&mut self) {
        self.iter_mut().for_each(ClearSpans::clear_spans);
    }
}

impl<T: ClearSpans> ClearSpans for Option<T> {
    fn clear_spans(&mut self) {
        if let Some(x) = self {
            x.clear_spans();
        }
    }
}

impl<T: ClearSpans> ClearSpans for Box<T> {
    fn clear_spans(&mut self) {
        (**self).clear_spans();
    }
}

impl ClearSpans for Ast {
    fn clear_spans(&mut self) {
        self.decls.clear_spans();
    }
}

impl ClearSpans for Ident {
    fn clear_spans(&mut self) {
        self.span = SourceSpan::default();
    }
}

impl ClearSpans for Declaration {
    fn clear_spans(&mut self) {
        self.span = SourceSpan::default();
        match &mut self.kind {
            DeclKind::TypeAlias { name, ty } => {
                name.clear_spans();
                ty.clear_spans();
            }
            DeclKind::Group { name, fields } | DeclKind::Union { name, fields } => {
                name.clear_spans();
                fields.clear_spans();
            }
            DeclKind::Const { name, value, .. } => {
                name.clear_spans();
                value.clear_spans();
            }
            DeclKind::Streamlet(s) => {
                s.name.clear_spans();
                s.params.clear_spans();
                s.ports.clear_spans();
            }
            DeclKind::Impl(i) => {
                i.name.clear_spans();
                i.params.clear_spans();
                i.of.clear_spans();
                i.of_args.clear_spans();
                i.body.clear_spans();
            }
            DeclKind::Import { .. } => {}
        }
    }
}

impl ClearSpans for Field {
    fn clear_spans(&mut self) {
        self.name.clear_spans();
        self.ty.clear_spans();
    }
}

impl ClearSpans for TypeExpr {
    fn clear_spans(&mut self) {
        self.span = SourceSpan::default();
        match &mut self.kind {
            TypeExprKind::Null => {}
            TypeExprKind::Bit(e) => e.clear_spans(),
            TypeExprKind::Stream { element, options } => {
                element.clear_spans();
                options.clear_spans();
            }
            TypeExprKind::Named { name, args } => {
                name.clear_spans();
                args.clear_spans();
            }
        }
    }
}

impl ClearSpans for StreamOpt {
    fn clear_spans(&mut self) {
        self.span = SourceSpan::default();
        match &mut self.kind {
            StreamOptKind::Dimension(e) | StreamOptKind::Throughput(e) | StreamOptKind::Complexity(e) => {
                e.clear_spans()
            }
            StreamOptKind::Synchronicity(_) | StreamOptKind::Direction(_) => {}
        }
    }
}

impl ClearSpans for TemplateParam {
    fn clear_spans(&mut self) {
        self.name.clear_spans();
        if let ParamKind::ImplOf(s) = &mut self.kind {
            s.clear_spans();
        }
    }
}

impl ClearSpans for TemplateArg {
    fn clear_spans(&mut self) {
        self.span = SourceSpan::default();
        match &mut self.kind {
            TemplateArgKind::Value(e) => e.clear_spans(),
            TemplateArgKind::Type(t) => t.clear_spans(),
            TemplateArgKind::Impl { name, args } => {
                name.clear_spans();
                args.clear_spans();
            }
        }
    }
}

impl ClearSpans for PortDecl {
    fn clear_spans(&mut self) {
        self.name.clear_spans();
        self.ty.clear_spans();
        self.array.clear_spans();
        self.domain.clear_spans();
    }
}

impl ClearSpans for ImplItem {
    fn clear_spans(&mut self) {
        self.span = SourceSpan::default();
        match &mut self.kind {
            ImplItemKind::Instance {
                name,
                target,
                args,
                size,
            } => {
                name.clear_spans();
                target.clear_spans();
                args.clear_spans();
                size.clear_spans();
            }
            ImplItemKind::Connection { src, dst, .. } => {
                src.clear_spans();
                dst.clear_spans();
            }
            ImplItemKind::For { var, iter, body } => {
                var.clear_spans();
                iter.clear_spans();
                body.clear_spans();
            }
            ImplItemKind::If { cond, body } => {
                cond.clear_spans();
                body.clear_spans();
            }
            ImplItemKind::Assert(e) => e.clear_spans(),
        }
    }
}

impl ClearSpans for PortRef {
    fn clear_spans(&mut self) {
        self.span = SourceSpan::default();
        if let Some((owner, idx)) = &mut self.owner {
            owner.clear_spans();
            idx.clear_spans();
        }
        self.port.clear_spans();
        self.index.clear_spans();
    }
}

impl ClearSpans for Expr {
    fn clear_spans(&mut self) {
        self.span = SourceSpan::default();
        match &mut self.kind {
            ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Str(_) | ExprKind::Bool(_) | ExprKind::Ident(_) => {}
            ExprKind::Array(v) | ExprKind::Call(_, v) => v.clear_spans(),
            ExprKind::Unary(_, e) => e.clear_spans(),
            ExprKind::Binary(_, a, b) | ExprKind::Index(a, b) => {
                a.clear_spans();
                b.clear_spans();
            }
            ExprKind::Range { start, step, end } => {
                start.clear_spans();
                step.clear_spans();
                end.clear_spans();
            }
        }
    }
}

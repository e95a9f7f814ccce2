use super::ast::*;
use super::lexer::{tokenize, Keyword, Tok, Token};
use crate::diag::{Code, Diagnostic, FileId, SourceSpan};

type PResult<T> = Result<T, Diagnostic>;

/// Parses a complete source file. On failure the diagnostic points at the
/// first offending token; partial trees are never returned.
pub fn parse(source: &str, file: FileId) -> PResult<Ast> {
    let tokens = tokenize(source, file)?;
    let mut p = Parser::new(tokens);
    let mut decls = Vec::new();
    while !p.at(&Tok::Eof) {
        decls.push(p.declaration()?);
    }
    Ok(Ast { file, decls })
}

/// Parses a single expression spanning the whole input.
pub fn parse_expr(source: &str, file: FileId) -> PResult<Expr> {
    let tokens = tokenize(source, file)?;
    let mut p = Parser::new(tokens);
    let e = p.expr()?;
    p.expect(&Tok::Eof)?;
    Ok(e)
}

/// Parses `start - step -> end`; anything else is E001.
pub fn parse_range(source: &str, file: FileId) -> PResult<Expr> {
    let e = parse_expr(source, file)?;
    match e.kind {
        ExprKind::Range { .. } => Ok(e),
        _ => Err(Diagnostic::error(
            Code::E001,
            "expected a range literal `start - step -> end`",
            e.span,
        )),
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Inside template arguments a bare `>` closes the list.
    no_gt: bool,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser {
            tokens,
            pos: 0,
            no_gt: false,
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> SourceSpan {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_kw(&self, k: Keyword) -> bool {
        matches!(self.peek(), Tok::Keyword(x) if *x == k)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: Keyword) -> bool {
        if self.at_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, what: &str) -> Diagnostic {
        Diagnostic::error(
            Code::E001,
            format!("expected {what}, found {}", self.peek().describe()),
            self.span(),
        )
    }

    fn expect(&mut self, t: &Tok) -> PResult<SourceSpan> {
        if self.at(t) {
            Ok(self.bump().span)
        } else {
            let what = match t {
                Tok::Eof => "end of file".to_string(),
                other => other.describe(),
            };
            Err(self.unexpected(&what))
        }
    }

    fn expect_kw(&mut self, k: Keyword) -> PResult<SourceSpan> {
        if self.at_kw(k) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("`{}`", k.as_str())))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok(Ident { name, span })
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    /// Port names may also be the keyword `in`.
    fn port_name(&mut self) -> PResult<Ident> {
        if self.at_kw(Keyword::In) {
            let span = self.bump().span;
            return Ok(Ident::new("in", span));
        }
        self.ident()
    }

    fn basic_kind(&mut self) -> Option<BasicKind> {
        let k = match self.peek() {
            Tok::Keyword(Keyword::Int) => BasicKind::Int,
            Tok::Keyword(Keyword::Float) => BasicKind::Float,
            Tok::Keyword(Keyword::String) => BasicKind::String,
            Tok::Keyword(Keyword::Bool) => BasicKind::Bool,
            Tok::Keyword(Keyword::ClockDomain) => BasicKind::ClockDomain,
            _ => return None,
        };
        self.bump();
        Some(k)
    }

    // ---- declarations ----

    fn declaration(&mut self) -> PResult<Declaration> {
        let start = self.span();
        let kind = match self.peek() {
            Tok::Keyword(Keyword::Type) => {
                self.bump();
                let name = self.ident()?;
                self.expect(&Tok::Assign)?;
                let ty = self.type_expr()?;
                self.expect(&Tok::Semi)?;
                DeclKind::TypeAlias { name, ty }
            }
            Tok::Keyword(Keyword::Group) | Tok::Keyword(Keyword::Union) => {
                let is_group = self.at_kw(Keyword::Group);
                self.bump();
                let name = self.ident()?;
                self.expect(&Tok::LBrace)?;
                let mut fields = Vec::new();
                while !self.at(&Tok::RBrace) {
                    let fname = self.ident()?;
                    self.expect(&Tok::Colon)?;
                    let ty = self.type_expr()?;
                    self.expect(&Tok::Comma)?;
                    fields.push(Field { name: fname, ty });
                }
                if fields.is_empty() {
                    return Err(Diagnostic::error(
                        Code::E001,
                        format!("`{}` must declare at least one field", name.name),
                        self.span(),
                    ));
                }
                self.expect(&Tok::RBrace)?;
                if is_group {
                    DeclKind::Group { name, fields }
                } else {
                    DeclKind::Union { name, fields }
                }
            }
            Tok::Keyword(Keyword::Import) => {
                self.bump();
                let path = match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        s
                    }
                    _ => return Err(self.unexpected("import path string")),
                };
                self.expect(&Tok::Semi)?;
                DeclKind::Import { path }
            }
            Tok::Keyword(Keyword::Streamlet) => {
                self.bump();
                DeclKind::Streamlet(self.streamlet()?)
            }
            Tok::Keyword(Keyword::Impl) | Tok::Keyword(Keyword::External) => {
                let external = self.eat_kw(Keyword::External);
                self.expect_kw(Keyword::Impl)?;
                DeclKind::Impl(self.impl_decl(external)?)
            }
            Tok::LBracket => {
                self.bump();
                let Some(kind) = self.basic_kind() else {
                    return Err(self.unexpected("element kind"));
                };
                self.expect(&Tok::RBracket)?;
                let name = self.ident()?;
                self.expect(&Tok::Assign)?;
                let value = self.expr()?;
                self.expect(&Tok::Semi)?;
                DeclKind::Const {
                    kind: ConstKind::Array(kind),
                    name,
                    value,
                }
            }
            _ => {
                if let Some(kind) = self.basic_kind() {
                    let name = self.ident()?;
                    self.expect(&Tok::Assign)?;
                    let value = self.expr()?;
                    self.expect(&Tok::Semi)?;
                    DeclKind::Const {
                        kind: ConstKind::Scalar(kind),
                        name,
                        value,
                    }
                } else {
                    return Err(self.unexpected("declaration"));
                }
            }
        };
        Ok(Declaration { kind, span: start })
    }

    fn template_params(&mut self) -> PResult<Vec<TemplateParam>> {
        let mut params = Vec::new();
        if !self.eat(&Tok::Lt) {
            return Ok(params);
        }
        loop {
            let name = self.ident()?;
            self.expect(&Tok::Colon)?;
            let kind = if let Some(k) = self.basic_kind() {
                ParamKind::Value(k)
            } else if self.eat_kw(Keyword::Type) {
                ParamKind::Type
            } else if self.eat_kw(Keyword::Impl) {
                self.expect_kw(Keyword::Of)?;
                ParamKind::ImplOf(self.ident()?)
            } else {
                return Err(self.unexpected("template parameter kind"));
            };
            params.push(TemplateParam { name, kind });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::Gt)?;
        Ok(params)
    }

    fn template_args(&mut self) -> PResult<Option<Vec<TemplateArg>>> {
        if !self.at(&Tok::Lt) {
            return Ok(None);
        }
        self.bump();
        let saved = self.no_gt;
        self.no_gt = true;
        let mut args = Vec::new();
        let result = (|| {
            loop {
                let start = self.span();
                let kind = if self.eat_kw(Keyword::Type) {
                    TemplateArgKind::Type(self.type_expr()?)
                } else if self.eat_kw(Keyword::Impl) {
                    let name = self.ident()?;
                    let args = self.template_args()?;
                    TemplateArgKind::Impl { name, args }
                } else {
                    TemplateArgKind::Value(self.expr()?)
                };
                args.push(TemplateArg {
                    kind,
                    span: start.to(self.prev_span()),
                });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::Gt)?;
            Ok(())
        })();
        self.no_gt = saved;
        result.map(|_| Some(args))
    }

    fn streamlet(&mut self) -> PResult<StreamletDecl> {
        let name = self.ident()?;
        let params = self.template_params()?;
        self.expect(&Tok::LBrace)?;
        let mut ports = Vec::new();
        while !self.at(&Tok::RBrace) {
            let pname = self.port_name()?;
            self.expect(&Tok::Colon)?;
            if self.at_kw(Keyword::In) || matches!(self.peek(), Tok::Ident(s) if s == "out") {
                if matches!(self.peek_at(1), Tok::Comma | Tok::At | Tok::LBracket) {
                    return Err(self.unexpected("port type"));
                }
            }
            let ty = self.type_expr()?;
            let dir = if self.eat_kw(Keyword::In) {
                PortDir::In
            } else if matches!(self.peek(), Tok::Ident(s) if s == "out") {
                self.bump();
                PortDir::Out
            } else {
                return Err(self.unexpected("port direction `in` or `out`"));
            };
            let array = if self.eat(&Tok::LBracket) {
                let e = self.expr()?;
                self.expect(&Tok::RBracket)?;
                Some(e)
            } else {
                None
            };
            let domain = if self.eat(&Tok::At) {
                Some(self.ident()?)
            } else {
                None
            };
            self.expect(&Tok::Comma)?;
            ports.push(PortDecl {
                name: pname,
                ty,
                dir,
                array,
                domain,
            });
        }
        self.expect(&Tok::RBrace)?;
        Ok(StreamletDecl { name, params, ports })
    }

    fn impl_decl(&mut self, external: bool) -> PResult<ImplDecl> {
        let name = self.ident()?;
        let params = self.template_params()?;
        self.expect_kw(Keyword::Of)?;
        let of = self.ident()?;
        let of_args = self.template_args()?;
        let body = self.block()?;
        Ok(ImplDecl {
            name,
            params,
            external,
            of,
            of_args,
            body,
        })
    }

    fn block(&mut self) -> PResult<Vec<ImplItem>> {
        self.expect(&Tok::LBrace)?;
        let mut items = Vec::new();
        while !self.at(&Tok::RBrace) {
            items.push(self.impl_item()?);
        }
        self.expect(&Tok::RBrace)?;
        Ok(items)
    }

    fn impl_item(&mut self) -> PResult<ImplItem> {
        let start = self.span();
        let kind = match self.peek() {
            Tok::Keyword(Keyword::Instance) => {
                self.bump();
                let name = self.ident()?;
                self.expect(&Tok::LParen)?;
                let target = self.ident()?;
                let args = self.template_args()?;
                self.expect(&Tok::RParen)?;
                let size = if self.eat(&Tok::LBracket) {
                    let e = self.expr()?;
                    self.expect(&Tok::RBracket)?;
                    Some(e)
                } else {
                    None
                };
                self.expect(&Tok::Comma)?;
                ImplItemKind::Instance {
                    name,
                    target,
                    args,
                    size,
                }
            }
            Tok::Keyword(Keyword::For) => {
                self.bump();
                let var = self.ident()?;
                self.expect_kw(Keyword::In)?;
                let iter = self.expr()?;
                let body = self.block()?;
                ImplItemKind::For { var, iter, body }
            }
            Tok::Keyword(Keyword::If) => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let cond = self.expr_nested()?;
                self.expect(&Tok::RParen)?;
                let body = self.block()?;
                ImplItemKind::If { cond, body }
            }
            Tok::Keyword(Keyword::Assert) => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let e = self.expr_nested()?;
                self.expect(&Tok::RParen)?;
                self.expect(&Tok::Comma)?;
                ImplItemKind::Assert(e)
            }
            Tok::Ident(_) | Tok::Keyword(Keyword::In) => {
                let src = self.port_ref()?;
                self.expect(&Tok::FatArrow)?;
                let dst = self.port_ref()?;
                let relax = if self.eat(&Tok::At) {
                    let attr = self.ident()?;
                    if attr.name != "NoStrictType" {
                        return Err(Diagnostic::error(
                            Code::E001,
                            format!("unknown connection attribute `{}`", attr.name),
                            attr.span,
                        ));
                    }
                    true
                } else {
                    false
                };
                self.expect(&Tok::Comma)?;
                ImplItemKind::Connection { src, dst, relax }
            }
            _ => return Err(self.unexpected("instance, connection, `for`, `if` or `assert`")),
        };
        Ok(ImplItem {
            kind,
            span: start.to(self.prev_span()),
        })
    }

    fn port_ref(&mut self) -> PResult<PortRef> {
        let start = self.span();
        let first = self.port_name()?;
        let first_idx = self.opt_index()?;
        let r = if self.eat(&Tok::Dot) {
            let port = self.port_name()?;
            let index = self.opt_index()?;
            PortRef {
                owner: Some((first, first_idx)),
                port,
                index,
                span: start,
            }
        } else {
            PortRef {
                owner: None,
                port: first,
                index: first_idx,
                span: start,
            }
        };
        Ok(PortRef {
            span: start.to(self.prev_span()),
            ..r
        })
    }

    fn opt_index(&mut self) -> PResult<Option<Expr>> {
        if self.eat(&Tok::LBracket) {
            let e = self.expr_nested()?;
            self.expect(&Tok::RBracket)?;
            Ok(Some(e))
        } else {
            Ok(None)
        }
    }

    // ---- types ----

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Keyword(Keyword::Null) => {
                self.bump();
                TypeExprKind::Null
            }
            Tok::Keyword(Keyword::Bit) => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let e = self.expr_nested()?;
                self.expect(&Tok::RParen)?;
                TypeExprKind::Bit(Box::new(e))
            }
            Tok::Keyword(Keyword::Stream) => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let saved = self.no_gt;
                self.no_gt = false;
                let r = self.stream_body();
                self.no_gt = saved;
                let (element, options) = r?;
                self.expect(&Tok::RParen)?;
                TypeExprKind::Stream {
                    element: Box::new(element),
                    options,
                }
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                let args = self.template_args()?;
                TypeExprKind::Named { name, args }
            }
            _ => return Err(self.unexpected("type expression")),
        };
        Ok(TypeExpr {
            kind,
            span: start.to(self.prev_span()),
        })
    }

    fn stream_body(&mut self) -> PResult<(TypeExpr, Vec<StreamOpt>)> {
        let element = self.type_expr()?;
        let mut options = Vec::new();
        while self.eat(&Tok::Comma) {
            let key = self.ident()?;
            self.expect(&Tok::Assign)?;
            let kind = match key.name.as_str() {
                "dimension" | "d" => StreamOptKind::Dimension(self.expr()?),
                "throughput" | "t" => StreamOptKind::Throughput(self.expr()?),
                "complexity" | "c" => StreamOptKind::Complexity(self.expr()?),
                "synchronicity" | "s" => match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        StreamOptKind::Synchronicity(s)
                    }
                    _ => return Err(self.unexpected("synchronicity string")),
                },
                "direction" | "r" => {
                    let d = self.ident()?;
                    match d.name.as_str() {
                        "Forward" => StreamOptKind::Direction(StreamDirection::Forward),
                        "Reverse" => StreamOptKind::Direction(StreamDirection::Reverse),
                        _ => {
                            return Err(Diagnostic::error(
                                Code::E001,
                                format!("expected `Forward` or `Reverse`, found `{}`", d.name),
                                d.span,
                            ))
                        }
                    }
                }
                other => {
                    return Err(Diagnostic::error(
                        Code::E001,
                        format!("unknown stream option `{other}`"),
                        key.span,
                    ))
                }
            };
            options.push(StreamOpt {
                kind,
                span: key.span.to(self.prev_span()),
            });
        }
        Ok((element, options))
    }

    // ---- expressions ----

    /// Expression inside brackets or parentheses, where `>` is a comparison
    /// again.
    fn expr_nested(&mut self) -> PResult<Expr> {
        let saved = self.no_gt;
        self.no_gt = false;
        let r = self.expr();
        self.no_gt = saved;
        r
    }

    fn expr(&mut self) -> PResult<Expr> {
        let (lhs, bare_sub) = self.or_expr()?;
        if !self.at(&Tok::Arrow) {
            return Ok(lhs);
        }
        let arrow = self.span();
        match lhs.kind {
            ExprKind::Binary(BinOp::Sub, start, step) if bare_sub => {
                self.bump();
                let (end, _) = self.or_expr()?;
                let span = lhs.span.to(end.span);
                Ok(Expr {
                    kind: ExprKind::Range { start, step, end: Box::new(end) },
                    span,
                })
            }
            _ => Err(Diagnostic::error(
                Code::E001,
                "range literal is missing its step: expected `start - step -> end`",
                arrow,
            )),
        }
    }

    fn or_expr(&mut self) -> PResult<(Expr, bool)> {
        let (mut lhs, mut bare) = self.and_expr()?;
        while self.eat(&Tok::OrOr) {
            let (rhs, _) = self.and_expr()?;
            lhs = binary(BinOp::Or, lhs, rhs);
            bare = false;
        }
        Ok((lhs, bare))
    }

    fn and_expr(&mut self) -> PResult<(Expr, bool)> {
        let (mut lhs, mut bare) = self.cmp_expr()?;
        while self.eat(&Tok::AndAnd) {
            let (rhs, _) = self.cmp_expr()?;
            lhs = binary(BinOp::And, lhs, rhs);
            bare = false;
        }
        Ok((lhs, bare))
    }

    fn cmp_expr(&mut self) -> PResult<(Expr, bool)> {
        let (mut lhs, mut bare) = self.add_expr()?;
        loop {
            let op = match self.peek() {
                Tok::EqEq => BinOp::Eq,
                Tok::NotEq => BinOp::Ne,
                Tok::Lt => BinOp::Lt,
                Tok::Le => BinOp::Le,
                Tok::Gt if !self.no_gt => BinOp::Gt,
                Tok::Ge => BinOp::Ge,
                _ => break,
            };
            self.bump();
            let (rhs, _) = self.add_expr()?;
            lhs = binary(op, lhs, rhs);
            bare = false;
        }
        Ok((lhs, bare))
    }

    fn add_expr(&mut self) -> PResult<(Expr, bool)> {
        let mut lhs = self.mul_expr()?;
        let mut bare = false;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.mul_expr()?;
            bare = op == BinOp::Sub;
            lhs = binary(op, lhs, rhs);
        }
        Ok((lhs, bare))
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.pow_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.pow_expr()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn pow_expr(&mut self) -> PResult<Expr> {
        let base = self.unary_expr()?;
        if self.eat(&Tok::Caret) {
            let exp = self.pow_expr()?;
            return Ok(binary(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Tok::Minus => UnOp::Neg,
            Tok::Bang => UnOp::Not,
            _ => return self.postfix_expr(),
        };
        let start = self.bump().span;
        let operand = self.unary_expr()?;
        let span = start.to(operand.span);
        Ok(Expr {
            kind: ExprKind::Unary(op, Box::new(operand)),
            span,
        })
    }

    fn postfix_expr(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.at(&Tok::LBracket) {
            self.bump();
            let idx = self.expr_nested()?;
            let end = self.expect(&Tok::RBracket)?;
            let span = e.span.to(end);
            e = Expr {
                kind: ExprKind::Index(Box::new(e), Box::new(idx)),
                span,
            };
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                ExprKind::Int(i)
            }
            Tok::Float(f) => {
                self.bump();
                ExprKind::Float(f)
            }
            Tok::Str(s) => {
                self.bump();
                ExprKind::Str(s)
            }
            Tok::Keyword(Keyword::True) => {
                self.bump();
                ExprKind::Bool(true)
            }
            Tok::Keyword(Keyword::False) => {
                self.bump();
                ExprKind::Bool(false)
            }
            Tok::Keyword(Keyword::Assert) => {
                self.bump();
                ExprKind::Call(Builtin::Assert, self.call_args()?)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.at(&Tok::LParen) {
                    let Some(b) = Builtin::from_name(&name) else {
                        return Err(Diagnostic::error(
                            Code::E001,
                            format!("`{name}` is not a builtin function"),
                            start,
                        ));
                    };
                    ExprKind::Call(b, self.call_args()?)
                } else {
                    ExprKind::Ident(name)
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr_nested()?;
                let end = self.expect(&Tok::RParen)?;
                return Ok(Expr {
                    kind: inner.kind,
                    span: start.to(end),
                });
            }
            Tok::LBracket => {
                self.bump();
                let saved = self.no_gt;
                self.no_gt = false;
                let mut items = Vec::new();
                let r = (|| {
                    if !self.at(&Tok::RBracket) {
                        loop {
                            items.push(self.expr()?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(&Tok::RBracket)
                })();
                self.no_gt = saved;
                r?;
                ExprKind::Array(items)
            }
            _ => return Err(self.unexpected("expression")),
        };
        Ok(Expr {
            kind,
            span: start.to(self.prev_span()),
        })
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(&Tok::LParen)?;
        let saved = self.no_gt;
        self.no_gt = false;
        let mut args = Vec::new();
        let r = (|| {
            if !self.at(&Tok::RParen) {
                loop {
                    args.push(self.expr()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            self.expect(&Tok::RParen)
        })();
        self.no_gt = saved;
        r?;
        Ok(args)
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = lhs.span.to(rhs.span);
    Expr {
        kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
        span,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Ast {
        parse(s, FileId(0)).unwrap_or_else(|d| panic!("{}: {}", d.message, s))
    }

    fn int(e: &Expr) -> i64 {
        match &e.kind {
            ExprKind::Int(i) => i.try_into().unwrap(),
            other => panic!("not an int: {other:?}"),
        }
    }

    #[test]
    fn minimal_type_alias() {
        let ast = p("type Byte = Bit(8);");
        assert_eq!(ast.decls.len(), 1);
        match &ast.decls[0].kind {
            DeclKind::TypeAlias { name, ty } => {
                assert_eq!(name.name, "Byte");
                match &ty.kind {
                    TypeExprKind::Bit(e) => assert_eq!(int(e), 8),
                    other => panic!("{other:?}"),
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn port_without_type_is_e001() {
        let e = parse("streamlet s { p: in, }", FileId(0)).unwrap_err();
        assert_eq!(e.code, Code::E001);
        assert_eq!((e.span.unwrap().line, e.span.unwrap().column), (1, 18));
    }

    #[test]
    fn unbalanced_brace_is_e001() {
        let e = parse("streamlet s { p: T in,", FileId(0)).unwrap_err();
        assert_eq!(e.code, Code::E001);
    }

    #[test]
    fn ranges() {
        for (src, want) in [("0-1->4", (0, 1, 4)), ("0-2->8", (0, 2, 8))] {
            let e = parse_range(src, FileId(0)).unwrap();
            match &e.kind {
                ExprKind::Range { start, step, end } => {
                    assert_eq!((int(start), int(step), int(end)), want)
                }
                other => panic!("{other:?}"),
            }
        }
        assert_eq!(parse_range("0->4", FileId(0)).unwrap_err().code, Code::E001);
        assert_eq!(parse_range("(0-1)->4", FileId(0)).unwrap_err().code, Code::E001);
    }

    #[test]
    fn range_with_compound_start() {
        let e = parse_expr("a-b-1->n", FileId(0)).unwrap();
        let ExprKind::Range { start, step, .. } = &e.kind else { panic!() };
        assert!(matches!(start.kind, ExprKind::Binary(BinOp::Sub, _, _)));
        assert_eq!(int(step), 1);
    }

    #[test]
    fn precedence() {
        let e = parse_expr("1 + 2 * 3 ^ 2", FileId(0)).unwrap();
        let ExprKind::Binary(BinOp::Add, _, rhs) = &e.kind else { panic!() };
        let ExprKind::Binary(BinOp::Mul, _, pow) = &rhs.kind else { panic!() };
        assert!(matches!(pow.kind, ExprKind::Binary(BinOp::Pow, _, _)));
        let e = parse_expr("a || b && c == d", FileId(0)).unwrap();
        assert!(matches!(e.kind, ExprKind::Binary(BinOp::Or, _, _)));
    }

    #[test]
    fn template_args_close_on_gt() {
        let ast = p("impl x of s<type Bit(8), 4 + 1, impl y> { }");
        let DeclKind::Impl(i) = &ast.decls[0].kind else { panic!() };
        assert_eq!(i.of_args.as_ref().unwrap().len(), 3);
        let ast = p("impl x of s<(2 > 1)> { }");
        let DeclKind::Impl(i) = &ast.decls[0].kind else { panic!() };
        assert_eq!(i.of_args.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn port_refs_and_relax() {
        let ast = p("impl a of b { x.out[i] => pu[i].in @NoStrictType, in => out, }");
        let DeclKind::Impl(i) = &ast.decls[0].kind else { panic!() };
        let ImplItemKind::Connection { src, dst, relax } = &i.body[0].kind else { panic!() };
        assert!(relax);
        assert_eq!(src.owner.as_ref().unwrap().0.name, "x");
        assert!(src.index.is_some());
        assert_eq!(dst.port.name, "in");
        assert!(dst.owner.as_ref().unwrap().1.is_some());
        let ImplItemKind::Connection { src, .. } = &i.body[1].kind else { panic!() };
        assert!(src.owner.is_none());
        assert_eq!(src.port.name, "in");
    }

    #[test]
    fn empty_group_rejected() {
        assert_eq!(parse("Group G { }", FileId(0)).unwrap_err().code, Code::E001);
    }
}

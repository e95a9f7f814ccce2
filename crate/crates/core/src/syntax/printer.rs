//! Pretty-printer producing source text that re-parses to the same tree.

use std::fmt::Write;

use super::ast::*;

pub fn print_ast(ast: &Ast) -> String {
    let mut out = String::new();
    for d in &ast.decls {
        print_decl(&mut out, d);
    }
    out
}

fn print_decl(out: &mut String, d: &Declaration) {
    match &d.kind {
        DeclKind::TypeAlias { name, ty } => {
            let _ = writeln!(out, "type {} = {};", name.name, type_expr(ty));
        }
        DeclKind::Group { name, fields } | DeclKind::Union { name, fields } => {
            let kw = if matches!(d.kind, DeclKind::Group { .. }) { "Group" } else { "Union" };
            let _ = writeln!(out, "{kw} {} {{", name.name);
            for f in fields {
                let _ = writeln!(out, "  {}: {},", f.name.name, type_expr(&f.ty));
            }
            out.push_str("}\n");
        }
        DeclKind::Const { kind, name, value } => {
            let k = match kind {
                ConstKind::Scalar(k) => k.as_str().to_string(),
                ConstKind::Array(k) => format!("[{}]", k.as_str()),
            };
            let _ = writeln!(out, "{k} {} = {};", name.name, expr(value));
        }
        DeclKind::Streamlet(s) => {
            let _ = writeln!(out, "streamlet {}{} {{", s.name.name, params(&s.params));
            for p in &s.ports {
                let _ = write!(out, "  {}: {} {}", p.name.name, type_expr(&p.ty), p.dir.as_str());
                if let Some(a) = &p.array {
                    let _ = write!(out, " [{}]", expr(a));
                }
                if let Some(dom) = &p.domain {
                    let _ = write!(out, " @{}", dom.name);
                }
                out.push_str(",\n");
            }
            out.push_str("}\n");
        }
        DeclKind::Impl(i) => {
            let _ = write!(
                out,
                "{}impl {}{} of {}{} {{\n",
                if i.external { "external " } else { "" },
                i.name.name,
                params(&i.params),
                i.of.name,
                args(&i.of_args)
            );
            print_items(out, &i.body, 1);
            out.push_str("}\n");
        }
        DeclKind::Import { path } => {
            let _ = writeln!(out, "import {};", string_lit(path));
        }
    }
}

fn print_items(out: &mut String, items: &[ImplItem], depth: usize) {
    let pad = "  ".repeat(depth);
    for item in items {
        match &item.kind {
            ImplItemKind::Instance {
                name,
                target,
                args: a,
                size,
            } => {
                let _ = write!(out, "{pad}instance {}({}{})", name.name, target.name, args(a));
                if let Some(s) = size {
                    let _ = write!(out, " [{}]", expr(s));
                }
                out.push_str(",\n");
            }
            ImplItemKind::Connection { src, dst, relax } => {
                let _ = writeln!(
                    out,
                    "{pad}{} => {}{},",
                    port_ref(src),
                    port_ref(dst),
                    if *relax { " @NoStrictType" } else { "" }
                );
            }
            ImplItemKind::For { var, iter, body } => {
                let _ = writeln!(out, "{pad}for {} in {} {{", var.name, expr(iter));
                print_items(out, body, depth + 1);
                let _ = writeln!(out, "{pad}}}");
            }
            ImplItemKind::If { cond, body } => {
                let _ = writeln!(out, "{pad}if ({}) {{", expr(cond));
                print_items(out, body, depth + 1);
                let _ = writeln!(out, "{pad}}}");
            }
            ImplItemKind::Assert(e) => {
                let _ = writeln!(out, "{pad}assert({}),", expr(e));
            }
        }
    }
}

fn params(ps: &[TemplateParam]) -> String {
    if ps.is_empty() {
        return String::new();
    }
    let items: Vec<String> = ps
        .iter()
        .map(|p| {
            let k = match &p.kind {
                ParamKind::Value(k) => k.as_str().to_string(),
                ParamKind::Type => "type".to_string(),
                ParamKind::ImplOf(s) => format!("impl of {}", s.name),
            };
            format!("{}: {k}", p.name.name)
        })
        .collect();
    format!("<{}>", items.join(", "))
}

fn args(a: &Option<Vec<TemplateArg>>) -> String {
    let Some(a) = a else { return String::new() };
    let items: Vec<String> = a
        .iter()
        .map(|arg| match &arg.kind {
            TemplateArgKind::Value(e) => expr(e),
            TemplateArgKind::Type(t) => format!("type {}", type_expr(t)),
            TemplateArgKind::Impl { name, args: inner } => format!("impl {}{}", name.name, args(inner)),
        })
        .collect();
    format!("<{}>", items.join(", "))
}

fn port_ref(r: &PortRef) -> String {
    let mut s = String::new();
    if let Some((owner, idx)) = &r.owner {
        s.push_str(&owner.name);
        if let Some(i) = idx {
            let _ = write!(s, "[{}]", expr(i));
        }
        s.push('.');
    }
    s.push_str(&r.port.name);
    if let Some(i) = &r.index {
        let _ = write!(s, "[{}]", expr(i));
    }
    s
}

pub fn type_expr(t: &TypeExpr) -> String {
    match &t.kind {
        TypeExprKind::Null => "Null".to_string(),
        TypeExprKind::Bit(e) => format!("Bit({})", expr(e)),
        TypeExprKind::Stream { element, options } => {
            let mut s = format!("Stream({}", type_expr(element));
            for o in options {
                match &o.kind {
                    StreamOptKind::Dimension(e) => {
                        let _ = write!(s, ", d={}", expr(e));
                    }
                    StreamOptKind::Throughput(e) => {
                        let _ = write!(s, ", t={}", expr(e));
                    }
                    StreamOptKind::Complexity(e) => {
                        let _ = write!(s, ", c={}", expr(e));
                    }
                    StreamOptKind::Synchronicity(v) => {
                        let _ = write!(s, ", s={}", string_lit(v));
                    }
                    StreamOptKind::Direction(d) => {
                        let _ = write!(s, ", r={d:?}");
                    }
                }
            }
            s.push(')');
            s
        }
        TypeExprKind::Named { name, args: a } => format!("{}{}", name.name, args(a)),
    }
}

pub fn string_lit(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Prints an expression with every compound sub-expression parenthesized.
pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(i) => i.to_string(),
        ExprKind::Float(f) => format!("{f:?}"),
        ExprKind::Str(s) => string_lit(s),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Ident(n) => n.clone(),
        ExprKind::Array(items) => {
            let v: Vec<String> = items.iter().map(expr).collect();
            format!("[{}]", v.join(", "))
        }
        ExprKind::Unary(op, a) => {
            let o = match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            };
            format!("({o}{})", expr(a))
        }
        ExprKind::Binary(op, a, b) => format!("({} {} {})", expr(a), op.as_str(), expr(b)),
        ExprKind::Range { start, step, end } => {
            format!("({} - {} -> {})", expr(start), expr(step), expr(end))
        }
        ExprKind::Call(b, a) => {
            let v: Vec<String> = a.iter().map(expr).collect();
            format!("{}({})", b.as_str(), v.join(", "))
        }
        ExprKind::Index(a, i) => format!("{}[{}]", expr(a), expr(i)),
    }
}

//! Canonical pretty-printer. `parse(pretty(ast))` reproduces `ast` up to
//! source positions.

use std::fmt::Write;

use super::ast::*;

const POSTFIX: u8 = 8;
const NOT: u8 = 6;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Not(_) => NOT,
        ExprKind::Dot { .. } | ExprKind::Arrow { .. } => POSTFIX,
        _ => 9,
    }
}

fn quote(s: &str, out: &mut String) {
    out.push('\'');
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('\'');
}

fn args(list: &[Expr], out: &mut String) {
    out.push('(');
    for (i, a) in list.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr_at(a, 1, out);
    }
    out.push(')');
}

fn expr_at(e: &Expr, min_prec: u8, out: &mut String) {
    let paren = precedence(e) < min_prec;
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Str(s) => quote(s, out),
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Null => out.push_str("null"),
        ExprKind::SelfRef => out.push_str("self"),
        ExprKind::Ident(name) => out.push_str(name),
        ExprKind::Call { name, args: a } => {
            out.push_str(name);
            args(a, out);
        }
        ExprKind::Dot {
            source,
            name,
            args: a,
        } => {
            expr_at(source, POSTFIX, out);
            out.push('.');
            out.push_str(name);
            if let Some(a) = a {
                args(a, out);
            }
        }
        ExprKind::Arrow {
            source,
            name,
            var,
            args: a,
        } => {
            expr_at(source, POSTFIX, out);
            out.push_str("->");
            out.push_str(name);
            match var {
                Some(v) => {
                    out.push('(');
                    out.push_str(&v.name);
                    if let Some(t) = &v.ty {
                        let _ = write!(out, " : {t}");
                    }
                    out.push_str(" | ");
                    for body in a {
                        expr_at(body, 1, out);
                    }
                    out.push(')');
                }
                None => args(a, out),
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            expr_at(lhs, p, out);
            let _ = write!(out, " {} ", op.symbol());
            expr_at(rhs, p + 1, out);
        }
        ExprKind::Not(inner) => {
            out.push_str("not ");
            expr_at(inner, NOT, out);
        }
        ExprKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            out.push_str("if ");
            expr_at(cond, 1, out);
            out.push_str(" then ");
            expr_at(then_branch, 1, out);
            out.push_str(" else ");
            expr_at(else_branch, 1, out);
            out.push_str(" endif");
        }
    }
    if paren {
        out.push(')');
    }
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr_at(e, 1, &mut out);
    out
}

pub fn pretty_file(file: &QueryFile) -> String {
    let mut out = String::new();
    for ctx in &file.contexts {
        let _ = writeln!(out, "context {}", ctx.type_name);
        for def in &ctx.defs {
            let _ = write!(out, "def : {}(", def.name);
            for (i, p) in def.params.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{} : {}", p.name, p.ty);
            }
            let _ = writeln!(out, ") : {} =", def.result);
            out.push_str("  ");
            expr_at(&def.body, 1, &mut out);
            out.push('\n');
        }
    }
    out
}

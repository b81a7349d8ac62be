//! Name resolution and static typing against the built-in metamodel.
//!
//! Bare names resolve, in order, to: a named variable (parameter or explicit
//! iterator variable, innermost first), an attribute of the innermost
//! implicit iterator whose type has it, an attribute of `self`.

use super::ast::*;
use super::metamodel::{self, Builtin};
use super::typed::*;
use super::types::{Class, Type};
use super::QueryError;

struct Sig {
    context: Class,
    name: String,
    params: Vec<(String, Type)>,
    result: Type,
    span: Span,
}

struct ScopeVar {
    name: Option<String>,
    ty: Type,
    slot: usize,
}

struct Checker<'a> {
    sigs: &'a [Sig],
    self_class: Class,
    scope: Vec<ScopeVar>,
    next_slot: usize,
}

fn nearest<'s>(name: &str, candidates: impl IntoIterator<Item = &'s str>) -> Option<String> {
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(name, c), c))
        .min()
        .map(|(_, c)| c.to_string())
}

fn type_error(
    span: Span,
    message: impl Into<String>,
    expected: impl ToString,
    actual: &Type,
) -> QueryError {
    QueryError::Type {
        line: span.line,
        col: span.col,
        message: message.into(),
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}

fn definition_error(span: Span, message: impl Into<String>) -> QueryError {
    QueryError::Definition {
        line: span.line,
        col: span.col,
        message: message.into(),
    }
}

fn resolve_type(t: &TypeExpr, span: Span) -> Result<Type, QueryError> {
    match t {
        TypeExpr::Named(n) => match n.as_str() {
            "Boolean" => Ok(Type::Boolean),
            "Integer" => Ok(Type::Integer),
            "String" => Ok(Type::String),
            other => Class::by_name(other).map(Type::Class).ok_or_else(|| {
                let names = ["Boolean", "Integer", "String"]
                    .into_iter()
                    .chain(Class::ALL.iter().map(|c| c.name()));
                QueryError::Unknown {
                    line: span.line,
                    col: span.col,
                    what: "type",
                    name: other.to_string(),
                    scope: "the metamodel".into(),
                    suggestion: nearest(other, names),
                }
            }),
        },
        TypeExpr::Set(inner) => {
            let inner = resolve_type(inner, span)?;
            if inner.is_collection() {
                return Err(definition_error(
                    span,
                    "nested collection types are not supported",
                ));
            }
            Ok(Type::set(inner))
        }
    }
}

fn expect_boolean(e: &TExpr, what: &str) -> Result<(), QueryError> {
    if e.ty.conforms_to(&Type::Boolean) {
        Ok(())
    } else {
        Err(type_error(e.span, what, Type::Boolean, &e.ty))
    }
}

fn expect_integer(e: &TExpr, what: &str) -> Result<(), QueryError> {
    if e.ty.conforms_to(&Type::Integer) {
        Ok(())
    } else {
        Err(type_error(e.span, what, Type::Integer, &e.ty))
    }
}

impl Checker<'_> {
    fn alloc_slot(&mut self) -> usize {
        let s = self.next_slot;
        self.next_slot += 1;
        s
    }

    fn var(&self, slot: usize, ty: Type, span: Span) -> TExpr {
        TExpr {
            kind: TKind::Var(slot),
            ty,
            span,
        }
    }

    /// Implicit receivers, innermost first, ending with `self`.
    fn implicit_receivers(&self) -> Vec<(usize, Type)> {
        let mut out: Vec<(usize, Type)> = self
            .scope
            .iter()
            .rev()
            .filter(|v| v.name.is_none())
            .map(|v| (v.slot, v.ty.clone()))
            .collect();
        out.push((0, Type::Class(self.self_class)));
        out
    }

    fn user_op(&self, class: Class, name: &str) -> Option<OpId> {
        self.sigs
            .iter()
            .position(|s| s.name == name && class.is_subclass_of(s.context))
    }

    fn user_op_names(&self, class: Class) -> impl Iterator<Item = &str> {
        self.sigs
            .iter()
            .filter(move |s| class.is_subclass_of(s.context))
            .map(|s| s.name.as_str())
    }

    fn has_operation(&self, class: Class, name: &str) -> bool {
        matches!(
            name,
            "oclIsKindOf" | "isKindOf" | "oclAsType" | "asType" | "oclAsSet"
        ) || metamodel::builtin_operation(class, name).is_some()
            || self.user_op(class, name).is_some()
    }

    fn expr(&mut self, e: &Expr) -> Result<TExpr, QueryError> {
        let span = e.span;
        let (kind, ty) = match &e.kind {
            ExprKind::Int(v) => (TKind::Int(*v), Type::Integer),
            ExprKind::Str(s) => (TKind::Str(s.clone()), Type::String),
            ExprKind::Bool(b) => (TKind::Bool(*b), Type::Boolean),
            ExprKind::Null => (TKind::Null, Type::Null),
            ExprKind::SelfRef => (TKind::Var(0), Type::Class(self.self_class)),
            ExprKind::Ident(name) => return self.ident(name, span),
            ExprKind::Call { name, args } => {
                let receivers = self.implicit_receivers();
                let found = receivers.iter().find(|(_, ty)| match ty {
                    Type::Class(c) => self.has_operation(*c, name),
                    _ => false,
                });
                let Some((slot, ty)) = found.cloned() else {
                    let (scope, suggestion) = match &receivers[0].1 {
                        Type::Class(c) => {
                            let names: Vec<&str> = metamodel::builtin_operation_names(*c)
                                .into_iter()
                                .chain(self.user_op_names(*c))
                                .collect();
                            (c.name().to_string(), nearest(name, names))
                        }
                        other => (other.to_string(), None),
                    };
                    return Err(QueryError::Unknown {
                        line: span.line,
                        col: span.col,
                        what: "operation",
                        name: name.clone(),
                        scope,
                        suggestion,
                    });
                };
                let source = self.var(slot, ty, span);
                return self.call(source, name, args, span);
            }
            ExprKind::Dot { source, name, args } => {
                let source = self.expr(source)?;
                return match args {
                    None => self.attribute(source, name, span),
                    Some(args) => self.call(source, name, args, span),
                };
            }
            ExprKind::Arrow {
                source,
                name,
                var,
                args,
            } => return self.arrow(source, name, var.as_ref(), args, span),
            ExprKind::Binary { op, lhs, rhs } => {
                let lhs = self.expr(lhs)?;
                let rhs = self.expr(rhs)?;
                let ty = match op {
                    BinOp::And | BinOp::Or => {
                        expect_boolean(&lhs, "operand of a boolean connective")?;
                        expect_boolean(&rhs, "operand of a boolean connective")?;
                        Type::Boolean
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if !lhs.ty.comparable_with(&rhs.ty) {
                            return Err(type_error(
                                rhs.span,
                                "incomparable operands",
                                &lhs.ty,
                                &rhs.ty,
                            ));
                        }
                        Type::Boolean
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        let ordered =
                            |t: &Type| matches!(t, Type::Integer | Type::String | Type::Null);
                        if !ordered(&lhs.ty) {
                            return Err(type_error(
                                lhs.span,
                                "ordering comparison",
                                "Integer or String",
                                &lhs.ty,
                            ));
                        }
                        if !ordered(&rhs.ty)
                            || (lhs.ty != Type::Null && rhs.ty != Type::Null && lhs.ty != rhs.ty)
                        {
                            let want = if lhs.ty == Type::Null {
                                "Integer or String".to_string()
                            } else {
                                lhs.ty.to_string()
                            };
                            return Err(type_error(rhs.span, "ordering comparison", want, &rhs.ty));
                        }
                        Type::Boolean
                    }
                    BinOp::Add | BinOp::Sub => {
                        expect_integer(&lhs, "arithmetic operand")?;
                        expect_integer(&rhs, "arithmetic operand")?;
                        Type::Integer
                    }
                };
                (
                    TKind::Binary {
                        op: *op,
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    },
                    ty,
                )
            }
            ExprKind::Not(inner) => {
                let inner = self.expr(inner)?;
                expect_boolean(&inner, "operand of `not`")?;
                (TKind::Not(Box::new(inner)), Type::Boolean)
            }
            ExprKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let cond = self.expr(cond)?;
                expect_boolean(&cond, "condition of `if`")?;
                let then_branch = self.expr(then_branch)?;
                let else_branch = self.expr(else_branch)?;
                let ty = then_branch.ty.join(&else_branch.ty).ok_or_else(|| {
                    type_error(
                        else_branch.span,
                        "branches of `if` disagree",
                        &then_branch.ty,
                        &else_branch.ty,
                    )
                })?;
                (
                    TKind::If {
                        cond: Box::new(cond),
                        then_branch: Box::new(then_branch),
                        else_branch: Box::new(else_branch),
                    },
                    ty,
                )
            }
        };
        Ok(TExpr { kind, ty, span })
    }

    fn ident(&mut self, name: &str, span: Span) -> Result<TExpr, QueryError> {
        if let Some(v) = self
            .scope
            .iter()
            .rev()
            .find(|v| v.name.as_deref() == Some(name))
        {
            return Ok(self.var(v.slot, v.ty.clone(), span));
        }
        let receivers = self.implicit_receivers();
        for (slot, ty) in &receivers {
            if let Type::Class(c) = ty {
                if let Some((attr, aty)) = metamodel::attribute(*c, name) {
                    let source = self.var(*slot, ty.clone(), span);
                    return Ok(TExpr {
                        kind: TKind::Attr {
                            source: Box::new(source),
                            attr,
                            collect: false,
                        },
                        ty: aty,
                        span,
                    });
                }
            }
        }
        let vars = self.scope.iter().filter_map(|v| v.name.as_deref());
        let (scope, suggestion) = match &receivers[0].1 {
            Type::Class(c) => {
                let names: Vec<&str> = metamodel::attribute_names(*c)
                    .into_iter()
                    .chain(vars)
                    .collect();
                (c.name().to_string(), nearest(name, names))
            }
            other => (other.to_string(), nearest(name, vars)),
        };
        Err(QueryError::Unknown {
            line: span.line,
            col: span.col,
            what: "attribute",
            name: name.to_string(),
            scope,
            suggestion,
        })
    }

    fn receiver_class(source: &TExpr, span: Span) -> Result<(Class, bool), QueryError> {
        let collect = source.ty.is_collection();
        match source.ty.element() {
            Type::Class(c) => Ok((*c, collect)),
            other => Err(type_error(
                span,
                "navigation requires an object",
                "a class type",
                other,
            )),
        }
    }

    fn attribute(&mut self, source: TExpr, name: &str, span: Span) -> Result<TExpr, QueryError> {
        let (class, collect) = Self::receiver_class(&source, span)?;
        let Some((attr, ty)) = metamodel::attribute(class, name) else {
            let mut suggestion = nearest(name, metamodel::attribute_names(class));
            if self.has_operation(class, name) {
                suggestion = Some(format!("{name}()"));
            }
            return Err(QueryError::Unknown {
                line: span.line,
                col: span.col,
                what: "attribute",
                name: name.to_string(),
                scope: class.name().to_string(),
                suggestion,
            });
        };
        let ty = if collect {
            Type::set(ty.element().clone())
        } else {
            ty
        };
        Ok(TExpr {
            kind: TKind::Attr {
                source: Box::new(source),
                attr,
                collect,
            },
            ty,
            span,
        })
    }

    fn type_argument(args: &[Expr], op: &str, span: Span) -> Result<Class, QueryError> {
        match args {
            [Expr {
                kind: ExprKind::Ident(name),
                span: aspan,
            }] => Class::by_name(name).ok_or_else(|| QueryError::Unknown {
                line: aspan.line,
                col: aspan.col,
                what: "class",
                name: name.clone(),
                scope: "the metamodel".into(),
                suggestion: nearest(name, Class::ALL.iter().map(|c| c.name())),
            }),
            _ => Err(definition_error(
                span,
                format!("`{op}` takes exactly one class name"),
            )),
        }
    }

    fn call(
        &mut self,
        source: TExpr,
        name: &str,
        args: &[Expr],
        span: Span,
    ) -> Result<TExpr, QueryError> {
        if name == "oclAsSet" && args.is_empty() {
            if source.ty.is_collection() {
                return Ok(TExpr {
                    ty: source.ty.clone(),
                    kind: TKind::Builtin {
                        source: Box::new(source),
                        op: Builtin::OclAsSet,
                        collect: true,
                    },
                    span,
                });
            }
            let ty = Type::set(source.ty.clone());
            return Ok(TExpr {
                kind: TKind::Builtin {
                    source: Box::new(source),
                    op: Builtin::OclAsSet,
                    collect: false,
                },
                ty,
                span,
            });
        }
        let (class, collect) = Self::receiver_class(&source, span)?;
        let no_args = |n: &str| -> Result<(), QueryError> {
            if args.is_empty() {
                Ok(())
            } else {
                Err(definition_error(span, format!("`{n}` takes no arguments")))
            }
        };
        let (kind, result) = match name {
            "oclIsKindOf" | "isKindOf" => {
                let target = Self::type_argument(args, name, span)?;
                if !target.is_subclass_of(class) && !class.is_subclass_of(target) {
                    return Err(type_error(
                        span,
                        "type test can never succeed",
                        format!("a class related to {class}"),
                        &Type::Class(target),
                    ));
                }
                (
                    TKind::Builtin {
                        source: Box::new(source),
                        op: Builtin::IsKindOf(target),
                        collect,
                    },
                    Type::Boolean,
                )
            }
            "oclAsType" | "asType" => {
                let target = Self::type_argument(args, name, span)?;
                if !target.is_subclass_of(class) && !class.is_subclass_of(target) {
                    return Err(type_error(
                        span,
                        "cast to an unrelated class",
                        format!("a subtype of {class}"),
                        &Type::Class(target),
                    ));
                }
                (
                    TKind::Builtin {
                        source: Box::new(source),
                        op: Builtin::AsType(target),
                        collect,
                    },
                    Type::Class(target),
                )
            }
            _ => {
                if let Some((op, ty)) = metamodel::builtin_operation(class, name) {
                    no_args(name)?;
                    (
                        TKind::Builtin {
                            source: Box::new(source),
                            op,
                            collect,
                        },
                        ty,
                    )
                } else if let Some(id) = self.user_op(class, name) {
                    let sig = &self.sigs[id];
                    if sig.params.len() != args.len() {
                        return Err(definition_error(
                            span,
                            format!(
                                "`{name}` expects {} argument(s), got {}",
                                sig.params.len(),
                                args.len()
                            ),
                        ));
                    }
                    let mut targs = Vec::with_capacity(args.len());
                    for (a, (_, pty)) in args.iter().zip(&sig.params) {
                        let ta = self.expr(a)?;
                        if !ta.ty.conforms_to(pty) {
                            return Err(type_error(
                                ta.span,
                                format!("argument of `{name}`"),
                                pty,
                                &ta.ty,
                            ));
                        }
                        targs.push(ta);
                    }
                    let result = sig.result.clone();
                    (
                        TKind::UserCall {
                            source: Box::new(source),
                            op: id,
                            args: targs,
                            collect,
                        },
                        result,
                    )
                } else {
                    let names: Vec<&str> = metamodel::builtin_operation_names(class)
                        .into_iter()
                        .chain(self.user_op_names(class))
                        .collect();
                    return Err(QueryError::Unknown {
                        line: span.line,
                        col: span.col,
                        what: "operation",
                        name: name.to_string(),
                        scope: class.name().to_string(),
                        suggestion: nearest(name, names),
                    });
                }
            }
        };
        let ty = if collect {
            Type::set(result.element().clone())
        } else {
            result
        };
        Ok(TExpr { kind, ty, span })
    }

    fn arrow(
        &mut self,
        source: &Expr,
        name: &str,
        var: Option<&IterVar>,
        args: &[Expr],
        span: Span,
    ) -> Result<TExpr, QueryError> {
        let mut src = self.expr(source)?;
        if !src.ty.is_collection() {
            let ty = Type::set(src.ty.clone());
            let sspan = src.span;
            src = TExpr {
                kind: TKind::Builtin {
                    source: Box::new(src),
                    op: Builtin::OclAsSet,
                    collect: false,
                },
                ty,
                span: sspan,
            };
        }
        let elem = src.ty.element().clone();
        if let Some(kind) = IterKind::by_name(name) {
            let [body] = args else {
                return Err(definition_error(
                    span,
                    format!("`{name}` takes exactly one body expression"),
                ));
            };
            let var_ty = match var.and_then(|v| v.ty.as_ref().map(|t| (t, v.span))) {
                Some((t, vspan)) => {
                    let declared = resolve_type(t, vspan)?;
                    if !elem.conforms_to(&declared) {
                        return Err(type_error(
                            vspan,
                            "iterator variable type",
                            &declared,
                            &elem,
                        ));
                    }
                    declared
                }
                None => elem.clone(),
            };
            let slot = self.alloc_slot();
            self.scope.push(ScopeVar {
                name: var.map(|v| v.name.clone()),
                ty: var_ty.clone(),
                slot,
            });
            let body = self.expr(body);
            self.scope.pop();
            let body = body?;
            let ty = match kind {
                IterKind::Select => {
                    expect_boolean(&body, "body of `select`")?;
                    src.ty.clone()
                }
                IterKind::Exists | IterKind::ForAll => {
                    expect_boolean(&body, &format!("body of `{name}`"))?;
                    Type::Boolean
                }
                IterKind::Collect => Type::set(body.ty.element().clone()),
                IterKind::Closure => {
                    if !body.ty.element().conforms_to(&var_ty) {
                        return Err(type_error(
                            body.span,
                            "body of `closure`",
                            &var_ty,
                            body.ty.element(),
                        ));
                    }
                    Type::set(var_ty)
                }
            };
            return Ok(TExpr {
                kind: TKind::Iterate {
                    source: Box::new(src),
                    kind,
                    slot,
                    body: Box::new(body),
                },
                ty,
                span,
            });
        }
        if let Some(v) = var {
            return Err(definition_error(
                v.span,
                format!("`{name}` is not an iterator"),
            ));
        }
        let Some(op) = CollOp::by_name(name) else {
            let names = metamodel::ITERATORS
                .into_iter()
                .chain(metamodel::COLLECTION_OPS);
            return Err(QueryError::Unknown {
                line: span.line,
                col: span.col,
                what: "collection operation",
                name: name.to_string(),
                scope: src.ty.to_string(),
                suggestion: nearest(name, names),
            });
        };
        let (arg, ty) = match (op, args) {
            (CollOp::Includes, [a]) => {
                let a = self.expr(a)?;
                if !a.ty.comparable_with(&elem) {
                    return Err(type_error(a.span, "argument of `includes`", &elem, &a.ty));
                }
                (Some(Box::new(a)), Type::Boolean)
            }
            (CollOp::Includes, _) => {
                return Err(definition_error(
                    span,
                    "`includes` takes exactly one argument",
                ))
            }
            (_, [_, ..]) => {
                return Err(definition_error(
                    span,
                    format!("`{name}` takes no arguments"),
                ))
            }
            (CollOp::Size | CollOp::SizeUpTo(_), []) => (None, Type::Integer),
            (CollOp::IsEmpty, []) => (None, Type::Boolean),
            (CollOp::AsSet, []) => (None, src.ty.clone()),
        };
        Ok(TExpr {
            kind: TKind::CollOp {
                source: Box::new(src),
                op,
                arg,
            },
            ty,
            span,
        })
    }
}

/// Typechecks a parsed file. The result does not depend on the order in
/// which contexts and operations were written.
pub fn typecheck(file: &QueryFile) -> Result<QueryAst, QueryError> {
    let mut sigs: Vec<(Sig, &Def)> = Vec::new();
    for ctx in &file.contexts {
        let context = Class::by_name(&ctx.type_name).ok_or_else(|| QueryError::Unknown {
            line: ctx.span.line,
            col: ctx.span.col,
            what: "class",
            name: ctx.type_name.clone(),
            scope: "the metamodel".into(),
            suggestion: nearest(&ctx.type_name, Class::ALL.iter().map(|c| c.name())),
        })?;
        for def in &ctx.defs {
            let mut params = Vec::new();
            for p in &def.params {
                if params.iter().any(|(n, _)| n == &p.name) {
                    return Err(definition_error(
                        def.span,
                        format!("duplicate parameter `{}`", p.name),
                    ));
                }
                params.push((p.name.clone(), resolve_type(&p.ty, def.span)?));
            }
            let result = resolve_type(&def.result, def.span)?;
            sigs.push((
                Sig {
                    context,
                    name: def.name.clone(),
                    params,
                    result,
                    span: def.span,
                },
                def,
            ));
        }
    }
    sigs.sort_by(|(a, _), (b, _)| {
        (a.context, &a.name, (a.span.line, a.span.col)).cmp(&(
            b.context,
            &b.name,
            (b.span.line, b.span.col),
        ))
    });
    for (i, (a, _)) in sigs.iter().enumerate() {
        if matches!(
            a.name.as_str(),
            "oclIsKindOf" | "isKindOf" | "oclAsType" | "asType" | "oclAsSet"
        ) || metamodel::builtin_operation(a.context, &a.name).is_some()
        {
            return Err(definition_error(
                a.span,
                format!("`{}` is a built-in operation", a.name),
            ));
        }
        for (b, _) in &sigs[i + 1..] {
            if a.name == b.name
                && (a.context.is_subclass_of(b.context) || b.context.is_subclass_of(a.context))
            {
                let later = if (a.span.line, a.span.col) > (b.span.line, b.span.col) {
                    a.span
                } else {
                    b.span
                };
                return Err(definition_error(
                    later,
                    format!(
                        "operation `{}` is defined more than once for {} / {}",
                        a.name, a.context, b.context
                    ),
                ));
            }
        }
    }
    let (sig_list, defs): (Vec<Sig>, Vec<&Def>) = sigs.into_iter().unzip();

    let mut ops = Vec::with_capacity(defs.len());
    for (sig, def) in sig_list.iter().zip(&defs) {
        let mut checker = Checker {
            sigs: &sig_list,
            self_class: sig.context,
            scope: Vec::new(),
            next_slot: 1 + sig.params.len(),
        };
        for (i, (name, ty)) in sig.params.iter().enumerate() {
            checker.scope.push(ScopeVar {
                name: Some(name.clone()),
                ty: ty.clone(),
                slot: i + 1,
            });
        }
        let body = checker.expr(&def.body)?;
        if !body.ty.conforms_to(&sig.result) {
            return Err(type_error(
                body.span,
                format!("result of `{}`", sig.name),
                &sig.result,
                &body.ty,
            ));
        }
        ops.push(OpDef {
            context: sig.context,
            name: sig.name.clone(),
            params: sig.params.clone(),
            result: sig.result.clone(),
            body,
            frame_size: checker.next_slot,
            span: sig.span,
        });
    }

    let entry = ops
        .iter()
        .position(|o| o.context == Class::Graph && o.name == "query")
        .ok_or_else(|| {
            definition_error(
                Span { line: 1, col: 1 },
                "missing `def : query() : Set(Origin)` in context Graph",
            )
        })?;
    let q = &ops[entry];
    if !q.params.is_empty() || q.result != Type::set(Type::Class(Class::Origin)) {
        return Err(definition_error(
            q.span,
            "`query` must be declared as `query() : Set(Origin)`",
        ));
    }
    Ok(QueryAst { ops, entry })
}

//! Untyped syntax tree, as produced by the parser.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
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
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
        }
    }

    /// Binding strength; all binary operators are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeExpr {
    Named(String),
    Set(Box<TypeExpr>),
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Named(n) => f.write_str(n),
            TypeExpr::Set(inner) => write!(f, "Set({inner})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterVar {
    pub name: String,
    pub ty: Option<TypeExpr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Str(String),
    Bool(bool),
    Null,
    SelfRef,
    /// Bare name: a variable, or an attribute of an implicit receiver.
    Ident(String),
    /// `name(args)` with an implicit receiver.
    Call {
        name: String,
        args: Vec<Expr>,
    },
    /// `source.name` or `source.name(args)`.
    Dot {
        source: Box<Expr>,
        name: String,
        args: Option<Vec<Expr>>,
    },
    /// `source->name(args)` or `source->name(v : T | body)`.
    Arrow {
        source: Box<Expr>,
        name: String,
        var: Option<IterVar>,
        args: Vec<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Not(Box<Expr>),
    If {
        cond: Box<Expr>,
        then_branch: Box<Expr>,
        else_branch: Box<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Def {
    pub name: String,
    pub params: Vec<Param>,
    pub result: TypeExpr,
    pub body: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextDef {
    pub type_name: String,
    pub defs: Vec<Def>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryFile {
    pub contexts: Vec<ContextDef>,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Children in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Int(_)
            | ExprKind::Str(_)
            | ExprKind::Bool(_)
            | ExprKind::Null
            | ExprKind::SelfRef
            | ExprKind::Ident(_) => vec![],
            ExprKind::Call { args, .. } => args.iter().collect(),
            ExprKind::Dot { source, args, .. } => std::iter::once(&**source)
                .chain(args.iter().flatten())
                .collect(),
            ExprKind::Arrow { source, args, .. } => {
                std::iter::once(&**source).chain(args.iter()).collect()
            }
            ExprKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::Not(e) => vec![e],
            ExprKind::If {
                cond,
                then_branch,
                else_branch,
            } => vec![cond, then_branch, else_branch],
        }
    }

    fn clear_spans(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            ExprKind::Call { args, .. } => args.iter_mut().for_each(Expr::clear_spans),
            ExprKind::Dot { source, args, .. } => {
                source.clear_spans();
                args.iter_mut().flatten().for_each(Expr::clear_spans);
            }
            ExprKind::Arrow {
                source, var, args, ..
            } => {
                source.clear_spans();
                if let Some(v) = var {
                    v.span = Span::default();
                }
                args.iter_mut().for_each(Expr::clear_spans);
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.clear_spans();
                rhs.clear_spans();
            }
            ExprKind::Not(e) => e.clear_spans(),
            ExprKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                cond.clear_spans();
                then_branch.clear_spans();
                else_branch.clear_spans();
            }
            _ => {}
        }
    }
}

impl QueryFile {
    /// Copy with every source position reset, for structural comparison.
    pub fn without_spans(&self) -> QueryFile {
        let mut copy = self.clone();
        for ctx in &mut copy.contexts {
            ctx.span = Span::default();
            for def in &mut ctx.defs {
                def.span = Span::default();
                def.body.clear_spans();
            }
        }
        copy
    }
}

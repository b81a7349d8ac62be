//! Recursive-descent parser for FPQL.
//!
//! ```text
//! file       := header? contextDef+ "endpackage"?
//! header     := ("import" (name ":")? string)? ("package" name)?
//! contextDef := "context" TypeName def+
//! def        := "def" ":" name "(" params? ")" ":" type "=" expr
//! type       := TypeName | "Set" "(" type ")"
//! expr       := binary expression over or / and / = <> / < <= > >= / + -
//! unary      := "not" unary | postfix
//! postfix    := primary ("." name ("(" args ")")? | "->" name "(" iter? args ")")*
//! primary    := int | "-" int | string | true | false | null | self
//!             | name ("(" args ")")? | "(" expr ")"
//!             | "if" expr "then" expr "else" expr "endif"
//! ```

use super::ast::*;
use super::lexer::{tokenize, Token};
use super::QueryError;

struct Parser {
    tokens: Vec<(Token, Span)>,
    pos: usize,
}

fn binop(tok: &Token) -> Option<BinOp> {
    Some(match tok {
        Token::Or => BinOp::Or,
        Token::And => BinOp::And,
        Token::Eq => BinOp::Eq,
        Token::Ne => BinOp::Ne,
        Token::Lt => BinOp::Lt,
        Token::Le => BinOp::Le,
        Token::Gt => BinOp::Gt,
        Token::Ge => BinOp::Ge,
        Token::Plus => BinOp::Add,
        Token::Minus => BinOp::Sub,
        _ => return None,
    })
}

const EXPR_START: &[&str] = &[
    "integer",
    "string",
    "identifier",
    "`true`",
    "`false`",
    "`null`",
    "`self`",
    "`(`",
    "`if`",
    "`not`",
    "`-`",
];

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].0
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> (Token, Span) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> QueryError {
        let span = self.span();
        let found = self.peek();
        let message = if *found == Token::Eof {
            "unexpected end of input".to_string()
        } else {
            format!("unexpected {found}")
        };
        QueryError::Syntax {
            line: span.line,
            col: span.col,
            message,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn eat(&mut self, tok: &Token) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Token) -> Result<Span, QueryError> {
        if *self.peek() == tok {
            Ok(self.advance().1)
        } else {
            Err(self.error(&[&tok.to_string()]))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), QueryError> {
        match self.peek().clone() {
            Token::Ident(name) => {
                let span = self.advance().1;
                Ok((name, span))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn file(&mut self) -> Result<QueryFile, QueryError> {
        if self.eat(&Token::Import) {
            if matches!(self.peek(), Token::Ident(_)) {
                self.advance();
                self.expect(Token::Colon)?;
            }
            match self.peek() {
                Token::Str(_) => {
                    self.advance();
                }
                _ => return Err(self.error(&["string"])),
            }
        }
        if self.eat(&Token::Package) {
            self.ident()?;
        }
        let mut contexts = Vec::new();
        while *self.peek() == Token::Context {
            contexts.push(self.context_def()?);
        }
        if contexts.is_empty() {
            return Err(self.error(&["`context`"]));
        }
        self.eat(&Token::EndPackage);
        if *self.peek() != Token::Eof {
            return Err(self.error(&["`context`", "`def`", "`endpackage`", "end of input"]));
        }
        Ok(QueryFile { contexts })
    }

    fn context_def(&mut self) -> Result<ContextDef, QueryError> {
        let span = self.expect(Token::Context)?;
        let (type_name, _) = self.ident()?;
        let mut defs = Vec::new();
        while *self.peek() == Token::Def {
            defs.push(self.def()?);
        }
        if defs.is_empty() {
            return Err(self.error(&["`def`"]));
        }
        Ok(ContextDef {
            type_name,
            defs,
            span,
        })
    }

    fn def(&mut self) -> Result<Def, QueryError> {
        let span = self.expect(Token::Def)?;
        self.expect(Token::Colon)?;
        let (name, _) = self.ident()?;
        self.expect(Token::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Token::RParen {
            loop {
                let (pname, _) = self.ident()?;
                self.expect(Token::Colon)?;
                let ty = self.type_expr()?;
                params.push(Param { name: pname, ty });
                if !self.eat(&Token::Comma) {
                    break;
                }
            }
        }
        self.expect(Token::RParen)?;
        self.expect(Token::Colon)?;
        let result = self.type_expr()?;
        self.expect(Token::Eq)?;
        let body = self.expr()?;
        Ok(Def {
            name,
            params,
            result,
            body,
            span,
        })
    }

    fn type_expr(&mut self) -> Result<TypeExpr, QueryError> {
        let (name, span) = self.ident()?;
        if *self.peek() == Token::LParen {
            if name != "Set" {
                return Err(QueryError::Syntax {
                    line: span.line,
                    col: span.col,
                    message: format!("unsupported collection type `{name}`"),
                    expected: vec!["`Set`".into()],
                });
            }
            self.advance();
            let inner = self.type_expr()?;
            self.expect(Token::RParen)?;
            return Ok(TypeExpr::Set(Box::new(inner)));
        }
        Ok(TypeExpr::Named(name))
    }

    pub fn expr(&mut self) -> Result<Expr, QueryError> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, QueryError> {
        let mut lhs = self.unary()?;
        while let Some(op) = binop(self.peek()) {
            if op.precedence() < min_prec {
                break;
            }
            let span = self.advance().1;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, QueryError> {
        if *self.peek() == Token::Not {
            let span = self.advance().1;
            let inner = self.unary()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(inner)), span));
        }
        self.postfix()
    }

    fn args(&mut self) -> Result<Vec<Expr>, QueryError> {
        self.expect(Token::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Token::RParen {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Token::Comma) {
                    break;
                }
            }
        }
        if *self.peek() != Token::RParen {
            let mut expected = vec!["`)`", "`,`"];
            if args.last().is_some() {
                expected.extend(["`.`", "`->`", "binary operator"]);
            }
            return Err(self.error(&expected));
        }
        self.advance();
        Ok(args)
    }

    fn postfix(&mut self) -> Result<Expr, QueryError> {
        let mut expr = self.primary()?;
        loop {
            match self.peek() {
                Token::Dot => {
                    self.advance();
                    let (name, span) = self.ident()?;
                    let args = if *self.peek() == Token::LParen {
                        Some(self.args()?)
                    } else {
                        None
                    };
                    expr = Expr::new(
                        ExprKind::Dot {
                            source: Box::new(expr),
                            name,
                            args,
                        },
                        span,
                    );
                }
                Token::Arrow => {
                    self.advance();
                    let (name, span) = self.ident()?;
                    let lparen = self.expect(Token::LParen)?;
                    let var = match (self.peek().clone(), self.peek_at(1)) {
                        (Token::Ident(v), Token::Bar | Token::Colon) => {
                            let vspan = self.advance().1;
                            let ty = if self.eat(&Token::Colon) {
                                Some(self.type_expr()?)
                            } else {
                                None
                            };
                            self.expect(Token::Bar)?;
                            Some(IterVar {
                                name: v,
                                ty,
                                span: vspan,
                            })
                        }
                        _ => None,
                    };
                    let args = if var.is_some() {
                        let body = self.expr()?;
                        if *self.peek() != Token::RParen {
                            return Err(self.error(&["`)`"]));
                        }
                        self.advance();
                        vec![body]
                    } else {
                        // re-use the argument list parser from the opening paren
                        self.pos -= 1;
                        debug_assert_eq!(self.span(), lparen);
                        self.args()?
                    };
                    expr = Expr::new(
                        ExprKind::Arrow {
                            source: Box::new(expr),
                            name,
                            var,
                            args,
                        },
                        span,
                    );
                }
                _ => return Ok(expr),
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, QueryError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Token::Int(v) => {
                self.advance();
                let v = i64::try_from(v).map_err(|_| QueryError::Syntax {
                    line: span.line,
                    col: span.col,
                    message: format!("integer literal {v} is out of range"),
                    expected: vec![],
                })?;
                ExprKind::Int(v)
            }
            Token::Minus => {
                self.advance();
                match self.peek().clone() {
                    Token::Int(v) => {
                        self.advance();
                        let v = -(v as i128);
                        let v = i64::try_from(v).map_err(|_| QueryError::Syntax {
                            line: span.line,
                            col: span.col,
                            message: "integer literal is out of range".into(),
                            expected: vec![],
                        })?;
                        ExprKind::Int(v)
                    }
                    _ => return Err(self.error(&["integer"])),
                }
            }
            Token::Str(s) => {
                self.advance();
                ExprKind::Str(s)
            }
            Token::True => {
                self.advance();
                ExprKind::Bool(true)
            }
            Token::False => {
                self.advance();
                ExprKind::Bool(false)
            }
            Token::Null => {
                self.advance();
                ExprKind::Null
            }
            Token::SelfKw => {
                self.advance();
                ExprKind::SelfRef
            }
            Token::Ident(name) => {
                self.advance();
                if *self.peek() == Token::LParen {
                    let args = self.args()?;
                    ExprKind::Call { name, args }
                } else {
                    ExprKind::Ident(name)
                }
            }
            Token::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                return Ok(inner);
            }
            Token::If => {
                self.advance();
                let cond = self.expr()?;
                self.expect(Token::Then)?;
                let then_branch = self.expr()?;
                self.expect(Token::Else)?;
                let else_branch = self.expr()?;
                self.expect(Token::Endif)?;
                ExprKind::If {
                    cond: Box::new(cond),
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                }
            }
            _ => return Err(self.error(EXPR_START)),
        };
        Ok(Expr::new(kind, span))
    }
}

/// Parses a complete query file.
pub fn parse(source: &str) -> Result<QueryFile, QueryError> {
    let tokens = tokenize(source)?;
    Parser { tokens, pos: 0 }.file()
}

/// Parses a single expression (used by tests and tooling).
pub fn parse_expr(source: &str) -> Result<Expr, QueryError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Token::Eof {
        return Err(p.error(&["end of input"]));
    }
    Ok(e)
}

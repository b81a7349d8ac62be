use std::fmt;

use super::ast::Span;
use super::QueryError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Ident(String),
    Int(u64),
    Str(String),
    // keywords
    Context,
    Def,
    If,
    Then,
    Else,
    Endif,
    And,
    Or,
    Not,
    True,
    False,
    Null,
    SelfKw,
    Import,
    Package,
    EndPackage,
    // punctuation
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    Colon,
    Bar,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Token::Ident(name) => return write!(f, "identifier `{name}`"),
            Token::Int(v) => return write!(f, "integer {v}"),
            Token::Str(s) => return write!(f, "string '{s}'"),
            Token::Context => "`context`",
            Token::Def => "`def`",
            Token::If => "`if`",
            Token::Then => "`then`",
            Token::Else => "`else`",
            Token::Endif => "`endif`",
            Token::And => "`and`",
            Token::Or => "`or`",
            Token::Not => "`not`",
            Token::True => "`true`",
            Token::False => "`false`",
            Token::Null => "`null`",
            Token::SelfKw => "`self`",
            Token::Import => "`import`",
            Token::Package => "`package`",
            Token::EndPackage => "`endpackage`",
            Token::LParen => "`(`",
            Token::RParen => "`)`",
            Token::Comma => "`,`",
            Token::Dot => "`.`",
            Token::Arrow => "`->`",
            Token::Colon => "`:`",
            Token::Bar => "`|`",
            Token::Eq => "`=`",
            Token::Ne => "`<>`",
            Token::Lt => "`<`",
            Token::Le => "`<=`",
            Token::Gt => "`>`",
            Token::Ge => "`>=`",
            Token::Plus => "`+`",
            Token::Minus => "`-`",
            Token::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn keyword(word: &str) -> Option<Token> {
    Some(match word {
        "context" => Token::Context,
        "def" => Token::Def,
        "if" => Token::If,
        "then" => Token::Then,
        "else" => Token::Else,
        "endif" => Token::Endif,
        "and" => Token::And,
        "or" => Token::Or,
        "not" => Token::Not,
        "true" => Token::True,
        "false" => Token::False,
        "null" => Token::Null,
        "self" => Token::SelfKw,
        "import" => Token::Import,
        "package" => Token::Package,
        "endpackage" => Token::EndPackage,
        _ => return None,
    })
}

pub fn is_keyword(word: &str) -> bool {
    keyword(word).is_some()
}

pub fn tokenize(source: &str) -> Result<Vec<(Token, Span)>, QueryError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let lex_err = |line, col, message: String| QueryError::Syntax {
        line,
        col,
        message,
        expected: Vec::new(),
    };

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (sl, sc) = (line, col);
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(lex_err(sl, sc, "unterminated comment".into()));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let span = Span { line, col };
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            out.push((keyword(&word).unwrap_or(Token::Ident(word)), span));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let digits: String = chars[start..i].iter().collect();
            let value = digits.parse::<u64>().map_err(|_| {
                lex_err(
                    span.line,
                    span.col,
                    format!("integer literal {digits} is too large"),
                )
            })?;
            out.push((Token::Int(value), span));
            continue;
        }
        if c == '\'' {
            bump!();
            let mut text = String::new();
            loop {
                let Some(&ch) = chars.get(i) else {
                    return Err(lex_err(
                        span.line,
                        span.col,
                        "unterminated string literal".into(),
                    ));
                };
                match ch {
                    '\'' => {
                        bump!();
                        break;
                    }
                    '\\' => {
                        let escaped = match chars.get(i + 1) {
                            Some('\\') => '\\',
                            Some('\'') => '\'',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('r') => '\r',
                            _ => return Err(lex_err(line, col, "invalid escape sequence".into())),
                        };
                        bump!();
                        bump!();
                        text.push(escaped);
                    }
                    _ => {
                        text.push(ch);
                        bump!();
                    }
                }
            }
            out.push((Token::Str(text), span));
            continue;
        }
        let two = |a: char, b: char| c == a && chars.get(i + 1) == Some(&b);
        let (tok, width) = if two('-', '>') {
            (Token::Arrow, 2)
        } else if two('<', '>') {
            (Token::Ne, 2)
        } else if two('<', '=') {
            (Token::Le, 2)
        } else if two('>', '=') {
            (Token::Ge, 2)
        } else {
            let tok = match c {
                '(' => Token::LParen,
                ')' => Token::RParen,
                ',' => Token::Comma,
                '.' => Token::Dot,
                ':' => Token::Colon,
                '|' => Token::Bar,
                '=' => Token::Eq,
                '<' => Token::Lt,
                '>' => Token::Gt,
                '+' => Token::Plus,
                '-' => Token::Minus,
                other => {
                    return Err(lex_err(
                        line,
                        col,
                        format!("unexpected character `{other}`"),
                    ))
                }
            };
            (tok, 1)
        };
        for _ in 0..width {
            bump!();
        }
        out.push((tok, span));
    }
    out.push((Token::Eof, Span { line, col }));
    Ok(out)
}

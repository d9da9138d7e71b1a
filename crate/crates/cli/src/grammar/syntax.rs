//! Tokens and the untyped call tree of a model specification.

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Token {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    Comma,
    Eq,
    Semi,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("`{s}`"),
            Token::Number(x) => format!("number {x}"),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Comma => "`,`".into(),
            Token::Eq => "`=`".into(),
            Token::Semi => "`;`".into(),
            Token::End => "end of input".into(),
        }
    }
}

/// Tokens with their start and end byte offsets.
pub(crate) fn tokenize(src: &str) -> CliResult<Vec<(Token, usize, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            b',' => Some(Token::Comma),
            b'=' => Some(Token::Eq),
            b';' => Some(Token::Semi),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, start, start + 1));
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Token::Ident(src[start..i].to_string()), start, i));
        } else if c.is_ascii_digit() || c == b'.' || c == b'-' || c == b'+' {
            i += 1;
            while i < bytes.len() {
                let d = bytes[i];
                let exp_sign = (d == b'-' || d == b'+') && matches!(bytes[i - 1], b'e' | b'E');
                if d.is_ascii_digit() || d == b'.' || d == b'e' || d == b'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text = &src[start..i];
            let x: f64 = text.parse().map_err(|_| CliError::parse(start, format!("malformed number `{text}`")))?;
            out.push((Token::Number(x), start, i));
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(CliError::parse(start, format!("unexpected character `{ch}`")));
        }
    }
    out.push((Token::End, src.len(), src.len()));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ExprKind {
    Ident(String),
    Number(f64),
    /// `a;b;c`, a list of at least two numbers.
    List(Vec<f64>),
    Call { name: String, args: Vec<Arg> },
}

/// A node of the call tree with the byte offset where it starts and the
/// offset just past its last token.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Expr {
    pub kind: ExprKind,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Arg {
    /// Name and offset of `name=` arguments.
    pub key: Option<(String, usize)>,
    pub value: Expr,
}

struct Parser {
    tokens: Vec<(Token, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn peek_at(&self, ahead: usize) -> &Token {
        &self.tokens[(self.pos + ahead).min(self.tokens.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) {
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
    }

    /// Offset just past the previously consumed token.
    fn last_end(&self) -> usize {
        self.tokens[self.pos.saturating_sub(1)].2
    }

    fn unexpected(&self, wanted: &str) -> CliError {
        CliError::parse(self.offset(), format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: Token, wanted: &str) -> CliResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn expr(&mut self) -> CliResult<Expr> {
        let start = self.offset();
        match self.peek().clone() {
            Token::Number(x) => {
                self.bump();
                if *self.peek() != Token::Semi {
                    return Ok(Expr { kind: ExprKind::Number(x), start, end: self.last_end() });
                }
                let mut values = vec![x];
                while *self.peek() == Token::Semi {
                    self.bump();
                    match self.peek().clone() {
                        Token::Number(v) => {
                            self.bump();
                            values.push(v);
                        }
                        _ => return Err(self.unexpected("a number after `;`")),
                    }
                }
                Ok(Expr { kind: ExprKind::List(values), start, end: self.last_end() })
            }
            Token::Ident(name) => {
                self.bump();
                if *self.peek() != Token::LParen {
                    return Ok(Expr { kind: ExprKind::Ident(name), start, end: self.last_end() });
                }
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Token::RParen {
                    loop {
                        args.push(self.arg()?);
                        match self.peek() {
                            Token::Comma => {
                                self.bump();
                            }
                            Token::RParen => break,
                            _ => return Err(self.unexpected("`,` or `)`")),
                        }
                    }
                }
                self.expect(Token::RParen, "`)`")?;
                Ok(Expr { kind: ExprKind::Call { name, args }, start, end: self.last_end() })
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn arg(&mut self) -> CliResult<Arg> {
        if let (Token::Ident(key), Token::Eq) = (self.peek().clone(), self.peek_at(1)) {
            let at = self.offset();
            self.bump();
            self.bump();
            return Ok(Arg { key: Some((key, at)), value: self.expr()? });
        }
        Ok(Arg { key: None, value: self.expr()? })
    }
}

/// Parses the whole input as one expression.
pub(crate) fn parse_expr(src: &str) -> CliResult<Expr> {
    let mut p = Parser { tokens: tokenize(src)?, pos: 0 };
    if *p.peek() == Token::End {
        return Err(CliError::parse(0, "empty model specification"));
    }
    let e = p.expr()?;
    if *p.peek() != Token::End {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

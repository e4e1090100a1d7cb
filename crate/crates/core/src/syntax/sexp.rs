// SPDX-License-Identifier: Apache-2.0

//! Reader for the parenthesised surface notation.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

impl ParseError {
    pub fn new(pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError { pos, msg: msg.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sexp {
    Atom(String, Pos),
    Str(String, Pos),
    /// An operator written in parentheses, such as `(+)` or `(<=)`.
    Op(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::Str(_, p) | Sexp::Op(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn is_atom(&self, s: &str) -> bool {
        self.atom() == Some(s)
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(xs, _) => Some(xs),
            _ => None,
        }
    }

    /// Head atom of a list.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|xs| xs.first()).and_then(Sexp::atom)
    }
}

const OP_CHARS: &str = "+-*/%<>=!&|^~";

struct Reader<'a> {
    src: &'a [u8],
    i: usize,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.i).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.i += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == b'#' {
                while self.peek().is_some_and(|c| c != b'\n') {
                    self.bump();
                }
            } else if c.is_ascii_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn op_ahead(&self) -> Option<usize> {
        let rest = &self.src[self.i + 1..];
        let n = rest.iter().take_while(|c| OP_CHARS.as_bytes().contains(c)).count();
        (n > 0 && rest.get(n) == Some(&b')')).then_some(n)
    }

    fn item(&mut self) -> Result<Sexp, ParseError> {
        self.skip_ws();
        let p = self.pos();
        match self.peek() {
            None => Err(ParseError::new(p, "unexpected end of input")),
            Some(b')') => Err(ParseError::new(p, "unbalanced ')'")),
            Some(b'(') => {
                if let Some(n) = self.op_ahead() {
                    self.bump();
                    let start = self.i;
                    for _ in 0..n {
                        self.bump();
                    }
                    let op = String::from_utf8_lossy(&self.src[start..self.i]).into_owned();
                    self.bump();
                    return Ok(Sexp::Op(op, p));
                }
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return Err(ParseError::new(p, "unclosed '('")),
                        Some(b')') => {
                            self.bump();
                            return Ok(Sexp::List(items, p));
                        }
                        _ => items.push(self.item()?),
                    }
                }
            }
            Some(b'"') => {
                self.bump();
                let mut out = String::new();
                loop {
                    match self.bump() {
                        None => return Err(ParseError::new(p, "unterminated string")),
                        Some(b'"') => break,
                        Some(b'\\') => match self.bump() {
                            Some(b'n') => out.push('\n'),
                            Some(b't') => out.push('\t'),
                            Some(b'"') => out.push('"'),
                            Some(b'\\') => out.push('\\'),
                            _ => return Err(ParseError::new(self.pos(), "bad escape in string")),
                        },
                        Some(c) => {
                            // Re-assemble multi-byte characters.
                            let start = self.i - 1;
                            let len = utf8_len(c);
                            for _ in 1..len {
                                self.bump();
                            }
                            out.push_str(&String::from_utf8_lossy(&self.src[start..start + len]));
                        }
                    }
                }
                Ok(Sexp::Str(out, p))
            }
            Some(_) => {
                let start = self.i;
                while let Some(c) = self.peek() {
                    if c.is_ascii_whitespace() || c == b'(' || c == b')' || c == b'"' || c == b'#' {
                        break;
                    }
                    self.bump();
                }
                Ok(Sexp::Atom(
                    String::from_utf8_lossy(&self.src[start..self.i]).into_owned(),
                    p,
                ))
            }
        }
    }
}

fn utf8_len(first: u8) -> usize {
    match first {
        0xF0..=0xFF => 4,
        0xE0..=0xEF => 3,
        0xC0..=0xDF => 2,
        _ => 1,
    }
}

/// Reads every top-level item.
pub fn read_all(src: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut r = Reader {
        src: src.as_bytes(),
        i: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        r.skip_ws();
        if r.peek().is_none() {
            return Ok(out);
        }
        out.push(r.item()?);
    }
}

//! A minimal S-expression reader and printer.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SExpr {
    Token(String),
    List(Vec<SExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SexprError {
    #[error("unbalanced parenthesis at byte {0}")]
    UnbalancedParens(usize),
    #[error("trailing input at byte {0}")]
    TrailingInput(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("nesting deeper than {MAX_DEPTH} at byte {0}")]
    TooDeep(usize),
}

/// Deeper input is rejected; printing, decoding and dropping all recurse.
pub const MAX_DEPTH: usize = 256;

fn is_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r')
}

fn is_token_byte(b: u8) -> bool {
    !is_space(b) && b != b'(' && b != b')'
}

impl SExpr {
    pub fn token(s: impl Into<String>) -> SExpr {
        SExpr::Token(s.into())
    }

    pub fn list(items: impl IntoIterator<Item = SExpr>) -> SExpr {
        SExpr::List(items.into_iter().collect())
    }

    pub fn as_token(&self) -> Option<&str> {
        match self {
            SExpr::Token(t) => Some(t),
            SExpr::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items) => Some(items),
            SExpr::Token(_) => None,
        }
    }

    /// The leading token of a list, e.g. `cert` for `(cert …)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_token()
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Token(t) => f.write_str(t),
            SExpr::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() && is_space(self.bytes[self.pos]) {
            self.pos += 1;
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    /// Reads one expression; the caller has skipped whitespace.
    fn read(&mut self) -> Result<SExpr, SexprError> {
        let mut stack: Vec<(usize, Vec<SExpr>)> = Vec::new();
        loop {
            self.skip_space();
            let Some(&b) = self.bytes.get(self.pos) else {
                return match stack.last() {
                    Some((open, _)) => Err(SexprError::UnbalancedParens(*open)),
                    None => Err(SexprError::EmptyInput),
                };
            };
            let done = match b {
                b'(' => {
                    if stack.len() == MAX_DEPTH {
                        return Err(SexprError::TooDeep(self.pos));
                    }
                    stack.push((self.pos, Vec::new()));
                    self.pos += 1;
                    None
                }
                b')' => {
                    let Some((_, items)) = stack.pop() else {
                        return Err(SexprError::UnbalancedParens(self.pos));
                    };
                    self.pos += 1;
                    Some(SExpr::List(items))
                }
                _ => {
                    let start = self.pos;
                    while self.pos < self.bytes.len() && is_token_byte(self.bytes[self.pos]) {
                        self.pos += 1;
                    }
                    // token boundaries are ASCII, so the slice is valid UTF-8
                    let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("utf-8 input");
                    Some(SExpr::Token(text.to_string()))
                }
            };
            if let Some(expr) = done {
                match stack.last_mut() {
                    Some((_, items)) => items.push(expr),
                    None => return Ok(expr),
                }
            }
        }
    }
}

/// Parses exactly one expression.
pub fn parse_sexpr(input: &str) -> Result<SExpr, SexprError> {
    let mut r = Reader { bytes: input.as_bytes(), pos: 0 };
    r.skip_space();
    if r.at_end() {
        return Err(SexprError::EmptyInput);
    }
    let expr = r.read()?;
    r.skip_space();
    if !r.at_end() {
        return Err(SexprError::TrailingInput(r.pos));
    }
    Ok(expr)
}

/// Parses a whitespace-separated sequence of expressions (possibly none).
pub fn parse_many(input: &str) -> Result<Vec<SExpr>, SexprError> {
    let mut r = Reader { bytes: input.as_bytes(), pos: 0 };
    let mut out = Vec::new();
    loop {
        r.skip_space();
        if r.at_end() {
            return Ok(out);
        }
        if r.bytes[r.pos] == b')' {
            return Err(SexprError::UnbalancedParens(r.pos));
        }
        out.push(r.read()?);
    }
}

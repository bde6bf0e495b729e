//! Tokenizer shared by the model DSL and the class mini-language.

use std::fmt;

use crate::diag::Loc;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Raw digits, optionally with one fractional part.
    Number(String),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Semi,
    Arrow,
    FatArrow,
    Eq,
    Pipe,
    Plus,
    Minus,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(s) => write!(f, "number {s}"),
            Tok::Str(_) => f.write_str("string"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::FatArrow => f.write_str("`=>`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

/// One syntax error: where it happened, what would have been accepted, and
/// what was found instead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub loc: Loc,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: expected {}, found {}", self.loc, self.expected.join(" or "), self.found)
    }
}

/// Non-empty list of syntax errors, in source order.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseErrors(pub Vec<ParseError>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Tokenizes `src`. Comments run from `#` to end of line. On a lexical error
/// the offending character is reported and skipped so that one pass finds
/// every bad character.
pub fn tokenize(src: &str) -> (Vec<Token>, Vec<ParseError>) {
    let mut toks = Vec::new();
    let mut errs = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            let c = chars[i];
            i += 1;
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let loc = Loc::new(line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c.is_alphabetic() {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                s.push(bump!());
            }
            toks.push(Token { tok: Tok::Ident(s), loc });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(bump!());
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                s.push(bump!());
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(bump!());
                }
            }
            toks.push(Token { tok: Tok::Number(s), loc });
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            let mut closed = false;
            while i < chars.len() {
                let ch = bump!();
                match ch {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' if i < chars.len() => {
                        let esc = bump!();
                        s.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            'r' => '\r',
                            other => other,
                        });
                    }
                    '\n' => break,
                    other => s.push(other),
                }
            }
            if closed {
                toks.push(Token { tok: Tok::Str(s), loc });
            } else {
                errs.push(ParseError {
                    loc,
                    expected: vec!["closing `\"`".into()],
                    found: "end of line".into(),
                });
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('=', Some('>')) => (Tok::FatArrow, 2),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            ('.', _) => (Tok::Dot, 1),
            (':', _) => (Tok::Colon, 1),
            (';', _) => (Tok::Semi, 1),
            ('=', _) => (Tok::Eq, 1),
            ('|', _) => (Tok::Pipe, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            _ => {
                errs.push(ParseError {
                    loc,
                    expected: vec!["a token".into()],
                    found: format!("character {c:?}"),
                });
                bump!();
                continue;
            }
        };
        for _ in 0..width {
            bump!();
        }
        toks.push(Token { tok, loc });
    }
    toks.push(Token { tok: Tok::Eof, loc: Loc::new(line, col) });
    (toks, errs)
}

/// Cursor over a token vector with the helpers both parsers need.
pub(crate) struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Token>) -> Self {
        Cursor { toks, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    pub fn peek_at(&self, ahead: usize) -> &Tok {
        &self.toks[(self.pos + ahead).min(self.toks.len() - 1)].tok
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek().tok, Tok::Eof)
    }

    pub fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if !self.at_eof() {
            self.pos += 1;
        }
        t
    }

    pub fn is(&self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    pub fn is_word(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == word)
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.is(tok) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn eat_word(&mut self, word: &str) -> bool {
        if self.is_word(word) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError {
            loc: t.loc,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.to_string(),
        }
    }

    pub fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        if self.is(&tok) {
            Ok(self.advance())
        } else {
            Err(self.error(&[&tok.to_string()]))
        }
    }

    pub fn expect_word(&mut self, word: &str) -> Result<Token, ParseError> {
        if self.is_word(word) {
            Ok(self.advance())
        } else {
            Err(self.error(&[&format!("`{word}`")]))
        }
    }

    pub fn ident(&mut self, what: &str) -> Result<(String, crate::diag::Loc), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                let loc = self.advance().loc;
                Ok((s, loc))
            }
            _ => Err(self.error(&[what])),
        }
    }
}

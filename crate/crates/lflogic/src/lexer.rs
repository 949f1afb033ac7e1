//! Tokenizer for `.lfs` and `.ath` files. `%` starts a comment that runs to
//! the end of the line; both ASCII and Unicode spellings of the turnstile
//! and arrows are accepted.

use std::fmt;

/// A lexical token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u32),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{}`", s),
            Tok::Num(n) => write!(f, "`{}`", n),
            Tok::Sym(s) => write!(f, "`{}`", s),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

/// A token with its 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// A syntax error with its position.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

const SYMBOLS: &[(&str, &str)] = &[
    (":=", ":="),
    ("|-", "|-"),
    ("⊢", "|-"),
    ("->", "->"),
    ("→", "->"),
    ("=>", "=>"),
    ("⇒", "=>"),
    ("\\/", "\\/"),
    ("∨", "\\/"),
    ("/\\", "/\\"),
    ("∧", "/\\"),
    ("·", "·"),
    ("{", "{"),
    ("}", "}"),
    ("(", "("),
    (")", ")"),
    ("[", "["),
    ("]", "]"),
    (":", ":"),
    (".", "."),
    (",", ","),
    ("*", "*"),
    ("@", "@"),
    ("=", "="),
    ("|", "|"),
    (";", ";"),
];

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

/// Splits source text into tokens, ending with `Tok::Eof`.
pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j < chars.len() && ident_char(chars[j]) && !chars[j].is_ascii_digit() {
                return Err(SyntaxError { line, col, msg: "identifiers must not start with a digit".into() });
            }
            let s: String = chars[i..j].iter().collect();
            let n = s.parse().map_err(|_| SyntaxError { line, col, msg: format!("number `{}` is too large", s) })?;
            out.push(Token { tok: Tok::Num(n), line: start.0, col: start.1 });
            col += j - i;
            i = j;
            continue;
        }
        if c.is_alphabetic() || (c == '_' && chars.get(i + 1).is_some_and(|d| d.is_alphanumeric())) {
            let mut j = i;
            while j < chars.len() && ident_char(chars[j]) {
                j += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[i..j].iter().collect()), line: start.0, col: start.1 });
            col += j - i;
            i = j;
            continue;
        }
        if c == '_' {
            out.push(Token { tok: Tok::Sym("_"), line, col });
            i += 1;
            col += 1;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|(s, _)| rest.starts_with(s)) {
            Some((s, canon)) => {
                let n = s.chars().count();
                out.push(Token { tok: Tok::Sym(canon), line, col });
                i += n;
                col += n;
            }
            None => return Err(SyntaxError { line, col, msg: format!("unexpected character `{}`", c) }),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

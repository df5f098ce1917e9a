//! Tokenizer for theory and query files.
//!
//! Newlines are ordinary whitespace and `#` starts a comment that runs to the
//! end of the line. Keywords are not reserved at this level; the parser
//! decides from context whether `fluent` names a declaration or a symbol.

use crate::ast::Span;
use crate::error::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Prime,
    At,
    Tilde,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Arrow,
}

impl Tok {
    /// How the token reads in a message, e.g. "`(`" or "identifier `move`".
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number `{n:?}`"),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Ident(_) | Tok::Number(_) => unreachable!(),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Prime => "'",
            Tok::At => "@",
            Tok::Tilde => "~",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Arrow => "->",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut line_start = 0;

    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'\n' => {
                line += 1;
                i += 1;
                line_start = i;
            }
            b' ' | b'\t' | b'\r' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            _ => {
                let col = (i - line_start) as u32 + 1;
                let start = i;
                let tok = if b.is_ascii_alphabetic() || b == b'_' {
                    while i < bytes.len()
                        && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    Tok::Ident(src[start..i].to_string())
                } else if b.is_ascii_digit() || (b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i < bytes.len() && bytes[i] == b'.' {
                        i += 1;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                        let mut j = i + 1;
                        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                            j += 1;
                        }
                        if j < bytes.len() && bytes[j].is_ascii_digit() {
                            i = j;
                            while i < bytes.len() && bytes[i].is_ascii_digit() {
                                i += 1;
                            }
                        }
                    }
                    let text = &src[start..i];
                    let value: f64 = text.parse().map_err(|_| ParseError::SyntaxError {
                        span: span_at(start, i - start, line, col),
                        message: format!("malformed number `{text}`"),
                    })?;
                    Tok::Number(value)
                } else {
                    let (tok, len) = match (b, bytes.get(i + 1)) {
                        (b'<', Some(b'=')) => (Tok::Le, 2),
                        (b'>', Some(b'=')) => (Tok::Ge, 2),
                        (b'!', Some(b'=')) => (Tok::Ne, 2),
                        (b'-', Some(b'>')) => (Tok::Arrow, 2),
                        (b'(', _) => (Tok::LParen, 1),
                        (b')', _) => (Tok::RParen, 1),
                        (b'{', _) => (Tok::LBrace, 1),
                        (b'}', _) => (Tok::RBrace, 1),
                        (b'[', _) => (Tok::LBracket, 1),
                        (b']', _) => (Tok::RBracket, 1),
                        (b',', _) => (Tok::Comma, 1),
                        (b';', _) => (Tok::Semi, 1),
                        (b':', _) => (Tok::Colon, 1),
                        (b'\'', _) => (Tok::Prime, 1),
                        (b'@', _) => (Tok::At, 1),
                        (b'~', _) => (Tok::Tilde, 1),
                        (b'+', _) => (Tok::Plus, 1),
                        (b'-', _) => (Tok::Minus, 1),
                        (b'*', _) => (Tok::Star, 1),
                        (b'/', _) => (Tok::Slash, 1),
                        (b'<', _) => (Tok::Lt, 1),
                        (b'>', _) => (Tok::Gt, 1),
                        (b'=', _) => (Tok::Eq, 1),
                        _ => {
                            return Err(ParseError::SyntaxError {
                                span: span_at(start, 1, line, col),
                                message: format!(
                                    "unexpected character `{}`",
                                    &src[start..start + b.len_utf8_guess()]
                                ),
                            })
                        }
                    };
                    i += len;
                    tok
                };
                out.push(Token { tok, span: span_at(start, i - start, line, col) });
            }
        }
    }
    Ok(out)
}

fn span_at(offset: usize, len: usize, line: u32, col: u32) -> Span {
    Span { offset, len, line, col }
}

trait Utf8Guess {
    fn len_utf8_guess(&self) -> usize;
}

impl Utf8Guess for u8 {
    /// Length of the UTF-8 sequence starting with this byte, so error
    /// messages slice on a character boundary.
    fn len_utf8_guess(&self) -> usize {
        match self {
            0x00..=0x7f => 1,
            0xc0..=0xdf => 2,
            0xe0..=0xef => 3,
            _ => 4,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn punctuation_and_two_char_operators() {
        assert_eq!(
            toks("<= >= != -> < > = - ' ~ @"),
            vec![
                Tok::Le,
                Tok::Ge,
                Tok::Ne,
                Tok::Arrow,
                Tok::Lt,
                Tok::Gt,
                Tok::Eq,
                Tok::Minus,
                Tok::Prime,
                Tok::Tilde,
                Tok::At,
            ]
        );
    }

    #[test]
    fn numbers_including_exponent_and_leading_dot() {
        assert_eq!(
            toks("0 4.25 .5 1e3 2.5E-2"),
            vec![
                Tok::Number(0.0),
                Tok::Number(4.25),
                Tok::Number(0.5),
                Tok::Number(1000.0),
                Tok::Number(0.025),
            ]
        );
    }

    #[test]
    fn exponent_needs_digits_else_it_is_an_ident() {
        // `1e` is the number 1 followed by the identifier `e`.
        assert_eq!(toks("1e"), vec![Tok::Number(1.0), Tok::Ident("e".into())]);
    }

    #[test]
    fn comments_run_to_end_of_line() {
        assert_eq!(
            toks("a # ignored ; tokens\nb"),
            vec![Tok::Ident("a".into()), Tok::Ident("b".into())]
        );
    }

    #[test]
    fn spans_track_lines_and_columns() {
        let tokens = lex("ab\n  cd").unwrap();
        assert_eq!(tokens[0].span.line, 1);
        assert_eq!(tokens[0].span.col, 1);
        assert_eq!(tokens[1].span.line, 2);
        assert_eq!(tokens[1].span.col, 3);
        assert_eq!(tokens[1].span.offset, 5);
        assert_eq!(tokens[1].span.len, 2);
    }

    #[test]
    fn rejects_stray_characters() {
        assert!(matches!(lex("a $ b"), Err(ParseError::SyntaxError { .. })));
    }
}

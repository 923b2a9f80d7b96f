use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ast::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Fn,
    Let,
    Yield,
    If,
    Else,
    While,
    Return,
    Print,
    Next,
    True,
    False,
    Null,
}

impl Keyword {
    pub fn from_word(word: &str) -> Option<Keyword> {
        Some(match word {
            "fn" => Keyword::Fn,
            "let" => Keyword::Let,
            "yield" => Keyword::Yield,
            "if" => Keyword::If,
            "else" => Keyword::Else,
            "while" => Keyword::While,
            "return" => Keyword::Return,
            "print" => Keyword::Print,
            "next" => Keyword::Next,
            "true" => Keyword::True,
            "false" => Keyword::False,
            "null" => Keyword::Null,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Fn => "fn",
            Keyword::Let => "let",
            Keyword::Yield => "yield",
            Keyword::If => "if",
            Keyword::Else => "else",
            Keyword::While => "while",
            Keyword::Return => "return",
            Keyword::Print => "print",
            Keyword::Next => "next",
            Keyword::True => "true",
            Keyword::False => "false",
            Keyword::Null => "null",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Dot,
    Amp,
    Star,
    Eq,
    Plus,
    Minus,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Keyword(k) => return write!(f, "`{}`", k.as_str()),
            TokenKind::Ident(name) => return write!(f, "identifier `{name}`"),
            TokenKind::Int(v) => return write!(f, "integer `{v}`"),
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::LBrace => "{",
            TokenKind::RBrace => "}",
            TokenKind::Comma => ",",
            TokenKind::Colon => ":",
            TokenKind::Dot => ".",
            TokenKind::Amp => "&",
            TokenKind::Star => "*",
            TokenKind::Eq => "=",
            TokenKind::Plus => "+",
            TokenKind::Minus => "-",
            TokenKind::Slash => "/",
            TokenKind::Percent => "%",
            TokenKind::EqEq => "==",
            TokenKind::NotEq => "!=",
            TokenKind::Lt => "<",
            TokenKind::Le => "<=",
            TokenKind::Gt => ">",
            TokenKind::Ge => ">=",
            TokenKind::AndAnd => "&&",
            TokenKind::OrOr => "||",
            TokenKind::Bang => "!",
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
    /// True when a line break separates this token from the previous one.
    /// The parser uses it to end expression statements.
    pub line_start: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub pos: Pos,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lex error at {}: {}", self.pos, self.message)
    }
}

impl core::error::Error for LexError {}

/// Splits source text into tokens, dropping whitespace and `//` comments.
pub fn lex(source: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    let mut chars = source.char_indices().peekable();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut saw_newline = true;

    while let Some(&(start, c)) = chars.peek() {
        let pos = Pos::new(line, col);
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            saw_newline = true;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '/' && source[start..].starts_with("//") {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }

        let kind = if c.is_ascii_alphabetic() || c == '_' {
            let mut end = start;
            while let Some(&(i, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    end = i + c.len_utf8();
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            let word = &source[start..end];
            match Keyword::from_word(word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(String::from(word)),
            }
        } else if c.is_ascii_digit() {
            let mut end = start;
            while let Some(&(i, c)) = chars.peek() {
                if c.is_ascii_digit() {
                    end = i + 1;
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            let digits = &source[start..end];
            match digits.parse::<i64>() {
                Ok(v) => TokenKind::Int(v),
                Err(_) => {
                    return Err(LexError {
                        pos,
                        message: alloc::format!("integer literal `{digits}` does not fit in 64 bits"),
                    })
                }
            }
        } else {
            chars.next();
            col += 1;
            let next = chars.peek().map(|&(_, c)| c);
            let mut two = |kind: TokenKind, chars: &mut core::iter::Peekable<core::str::CharIndices<'_>>| {
                chars.next();
                col += 1;
                kind
            };
            match (c, next) {
                ('=', Some('=')) => two(TokenKind::EqEq, &mut chars),
                ('!', Some('=')) => two(TokenKind::NotEq, &mut chars),
                ('<', Some('=')) => two(TokenKind::Le, &mut chars),
                ('>', Some('=')) => two(TokenKind::Ge, &mut chars),
                ('&', Some('&')) => two(TokenKind::AndAnd, &mut chars),
                ('|', Some('|')) => two(TokenKind::OrOr, &mut chars),
                ('(', _) => TokenKind::LParen,
                (')', _) => TokenKind::RParen,
                ('{', _) => TokenKind::LBrace,
                ('}', _) => TokenKind::RBrace,
                (',', _) => TokenKind::Comma,
                (':', _) => TokenKind::Colon,
                ('.', _) => TokenKind::Dot,
                ('&', _) => TokenKind::Amp,
                ('*', _) => TokenKind::Star,
                ('=', _) => TokenKind::Eq,
                ('+', _) => TokenKind::Plus,
                ('-', _) => TokenKind::Minus,
                ('/', _) => TokenKind::Slash,
                ('%', _) => TokenKind::Percent,
                ('<', _) => TokenKind::Lt,
                ('>', _) => TokenKind::Gt,
                ('!', _) => TokenKind::Bang,
                _ => {
                    return Err(LexError {
                        pos,
                        message: alloc::format!("unexpected character `{}`", c.escape_default()),
                    })
                }
            }
        };
        tokens.push(Token { kind, pos, line_start: saw_newline });
        saw_newline = false;
    }
    Ok(tokens)
}

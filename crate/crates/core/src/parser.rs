//! Recursive-descent parser for the mini-language.
//!
//! Statements are not terminated by semicolons. An expression ends at a line
//! break when the next line starts with an infix or postfix token, so
//! `a = b` followed by `(c)` on the next line stays two statements. Inside
//! parentheses, call arguments and record literals line breaks are ignored.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{BinOp, Block, Expr, FuncDecl, Pos, Program, Stmt, StmtKind, UnOp};
use crate::lexer::{Keyword, Token, TokenKind};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub pos: Pos,
    pub expected: String,
    /// `None` at end of input.
    pub found: Option<TokenKind>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.found {
            Some(found) => write!(f, "parse error at {}: expected {}, found {}", self.pos, self.expected, found),
            None => write!(f, "parse error at {}: expected {}, found end of input", self.pos, self.expected),
        }
    }
}

impl core::error::Error for ParseError {}

/// Parses and validates a token stream.
pub fn parse(tokens: &[Token]) -> Result<Program, Error> {
    let program = parse_unvalidated(tokens)?;
    crate::validate::validate(&program)?;
    Ok(program)
}

/// Parses without running the validation pass.
pub fn parse_unvalidated(tokens: &[Token]) -> Result<Program, ParseError> {
    let mut parser = Parser { tokens, idx: 0, nesting: 0 };
    let mut decls = Vec::new();
    while !parser.at_end() {
        decls.push(parser.decl()?);
    }
    Ok(Program::new(decls))
}

struct Parser<'t> {
    tokens: &'t [Token],
    idx: usize,
    /// Depth of enclosing bracket groups in which line breaks are insignificant.
    nesting: u32,
}

impl<'t> Parser<'t> {
    fn at_end(&self) -> bool {
        self.idx >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.idx)
    }

    fn peek_kind(&self) -> Option<&'t TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn peek_nth_kind(&self, n: usize) -> Option<&'t TokenKind> {
        self.tokens.get(self.idx + n).map(|t| &t.kind)
    }

    /// Position of the current token, or just past the last one at end of input.
    fn pos(&self) -> Pos {
        match self.peek() {
            Some(t) => t.pos,
            None => self.tokens.last().map(|t| t.pos).unwrap_or(Pos::new(1, 1)),
        }
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError { pos: self.pos(), expected: String::from(expected), found: self.peek_kind().cloned() })
    }

    fn bump(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.idx);
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek_kind() == Some(kind) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        if self.eat(&kind) {
            Ok(())
        } else {
            let expected = alloc::format!("{kind}");
            self.error(&expected)
        }
    }

    fn expect_keyword(&mut self, kw: Keyword) -> Result<(), ParseError> {
        self.expect(TokenKind::Keyword(kw))
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::Ident(name)) => {
                self.idx += 1;
                Ok(name.clone())
            }
            _ => self.error("identifier"),
        }
    }

    /// Record field names may be keywords (`{fn: &f}`, `c.fn`).
    fn field_name(&mut self) -> Result<String, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::Ident(name)) => {
                self.idx += 1;
                Ok(name.clone())
            }
            Some(TokenKind::Keyword(kw)) => {
                self.idx += 1;
                Ok(String::from(kw.as_str()))
            }
            _ => self.error("field name"),
        }
    }

    /// True when the current token continues an expression on the same
    /// line, or we are inside a bracket group.
    fn continues(&self) -> bool {
        match self.peek() {
            Some(t) => self.nesting > 0 || !t.line_start,
            None => false,
        }
    }

    fn decl(&mut self) -> Result<FuncDecl, ParseError> {
        self.expect_keyword(Keyword::Fn)?;
        let is_generator = self.eat(&TokenKind::Star);
        let name = self.ident()?;
        let params = self.params()?;
        let body = self.block()?;
        Ok(FuncDecl { name, params, is_generator, body })
    }

    fn params(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect(TokenKind::LParen)?;
        let mut params = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                params.push(self.ident()?);
                if self.eat(&TokenKind::RParen) {
                    break;
                }
                self.expect(TokenKind::Comma)?;
            }
        }
        Ok(params)
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect(TokenKind::LBrace)?;
        let saved = core::mem::replace(&mut self.nesting, 0);
        let mut stmts = Vec::new();
        loop {
            match self.peek_kind() {
                Some(TokenKind::RBrace) => {
                    self.idx += 1;
                    break;
                }
                None => return self.error("`}`"),
                _ => stmts.push(self.stmt()?),
            }
        }
        self.nesting = saved;
        Ok(Block::new(stmts))
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.pos();
        let kind = match self.peek_kind() {
            Some(TokenKind::Keyword(Keyword::Let)) => {
                self.bump();
                let name = self.ident()?;
                self.expect(TokenKind::Eq)?;
                if self.eat(&TokenKind::Keyword(Keyword::Yield)) {
                    StmtKind::LetYield(name, self.expr()?)
                } else {
                    StmtKind::Let(name, self.expr()?)
                }
            }
            Some(TokenKind::Keyword(Keyword::Yield)) => {
                self.bump();
                StmtKind::Yield(self.expr()?)
            }
            Some(TokenKind::Keyword(Keyword::If)) => self.if_stmt()?,
            Some(TokenKind::Keyword(Keyword::While)) => {
                self.bump();
                let cond = self.paren_expr()?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Some(TokenKind::Keyword(Keyword::Return)) => {
                self.bump();
                let has_value = self.continues() && self.peek_kind() != Some(&TokenKind::RBrace);
                StmtKind::Return(if has_value { Some(self.expr()?) } else { None })
            }
            Some(TokenKind::Keyword(Keyword::Print)) => {
                self.bump();
                StmtKind::Print(self.paren_expr()?)
            }
            Some(TokenKind::Ident(name)) if self.peek_nth_kind(1) == Some(&TokenKind::Eq) => {
                let name = name.clone();
                self.idx += 2;
                StmtKind::Assign(name, self.expr()?)
            }
            _ => {
                let target = self.expr()?;
                if self.peek_kind() == Some(&TokenKind::Eq) {
                    match target {
                        Expr::Field(record, field) => {
                            self.bump();
                            StmtKind::FieldSet { record: *record, field, value: self.expr()? }
                        }
                        Expr::Var(name) => {
                            self.bump();
                            StmtKind::Assign(name, self.expr()?)
                        }
                        _ => return self.error("end of statement"),
                    }
                } else {
                    StmtKind::Expr(target)
                }
            }
        };
        Ok(Stmt::at(kind, pos))
    }

    fn if_stmt(&mut self) -> Result<StmtKind, ParseError> {
        self.expect_keyword(Keyword::If)?;
        let cond = self.paren_expr()?;
        let then_block = self.block()?;
        let else_block = if self.eat(&TokenKind::Keyword(Keyword::Else)) {
            if self.peek_kind() == Some(&TokenKind::Keyword(Keyword::If)) {
                let pos = self.pos();
                let nested = self.if_stmt()?;
                Some(Block::new(alloc::vec![Stmt::at(nested, pos)]))
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(StmtKind::If { cond, then_block, else_block })
    }

    fn paren_expr(&mut self) -> Result<Expr, ParseError> {
        self.expect(TokenKind::LParen)?;
        self.nesting += 1;
        let e = self.expr()?;
        self.nesting -= 1;
        self.expect(TokenKind::RParen)?;
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while self.continues() {
            let Some(op) = self.peek_kind().and_then(binop_of) else { break };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let op = match self.peek_kind() {
            Some(TokenKind::Minus) => UnOp::Neg,
            Some(TokenKind::Bang) => UnOp::Not,
            _ => return self.postfix(),
        };
        self.bump();
        Ok(Expr::Unary(op, Box::new(self.unary()?)))
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        while self.continues() {
            match self.peek_kind() {
                Some(TokenKind::LParen) => {
                    let args = self.args()?;
                    e = Expr::call(e, args);
                }
                Some(TokenKind::Dot) => {
                    self.bump();
                    let name = self.field_name()?;
                    e = Expr::field(e, name);
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect(TokenKind::LParen)?;
        self.nesting += 1;
        let mut args = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                args.push(self.expr()?);
                if self.eat(&TokenKind::RParen) {
                    break;
                }
                self.expect(TokenKind::Comma)?;
            }
        }
        self.nesting -= 1;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek() else { return self.error("expression") };
        let e = match &tok.kind {
            TokenKind::Int(v) => {
                self.bump();
                Expr::Int(*v)
            }
            TokenKind::Keyword(Keyword::True) => {
                self.bump();
                Expr::Bool(true)
            }
            TokenKind::Keyword(Keyword::False) => {
                self.bump();
                Expr::Bool(false)
            }
            TokenKind::Keyword(Keyword::Null) => {
                self.bump();
                Expr::Null
            }
            TokenKind::Ident(name) => {
                self.bump();
                Expr::Var(name.clone())
            }
            TokenKind::Amp => {
                self.bump();
                Expr::FuncRef(self.ident()?)
            }
            TokenKind::LParen => self.paren_expr()?,
            TokenKind::Keyword(Keyword::Next) => {
                self.bump();
                let mut args = self.args()?;
                match args.len() {
                    1 => Expr::Next(Box::new(args.remove(0)), None),
                    2 => {
                        let v = args.pop().map(Box::new);
                        Expr::Next(Box::new(args.remove(0)), v)
                    }
                    _ => {
                        return Err(ParseError {
                            pos: tok.pos,
                            expected: String::from("`next(g)` or `next(g, v)`"),
                            found: Some(tok.kind.clone()),
                        })
                    }
                }
            }
            TokenKind::LBrace => self.record()?,
            TokenKind::Keyword(Keyword::Fn) => {
                self.bump();
                let params = self.params()?;
                let body = self.block()?;
                Expr::Lambda(params, body)
            }
            _ => return self.error("expression"),
        };
        Ok(e)
    }

    fn record(&mut self) -> Result<Expr, ParseError> {
        self.expect(TokenKind::LBrace)?;
        self.nesting += 1;
        let mut fields = Vec::new();
        if !self.eat(&TokenKind::RBrace) {
            loop {
                let name = self.field_name()?;
                self.expect(TokenKind::Colon)?;
                fields.push((name, self.expr()?));
                if self.eat(&TokenKind::RBrace) {
                    break;
                }
                self.expect(TokenKind::Comma)?;
            }
        }
        self.nesting -= 1;
        Ok(Expr::Record(fields))
    }
}

fn binop_of(kind: &TokenKind) -> Option<BinOp> {
    Some(match kind {
        TokenKind::Plus => BinOp::Add,
        TokenKind::Minus => BinOp::Sub,
        TokenKind::Star => BinOp::Mul,
        TokenKind::Slash => BinOp::Div,
        TokenKind::Percent => BinOp::Rem,
        TokenKind::EqEq => BinOp::Eq,
        TokenKind::NotEq => BinOp::Ne,
        TokenKind::Lt => BinOp::Lt,
        TokenKind::Le => BinOp::Le,
        TokenKind::Gt => BinOp::Gt,
        TokenKind::Ge => BinOp::Ge,
        TokenKind::AndAnd => BinOp::And,
        TokenKind::OrOr => BinOp::Or,
        _ => return None,
    })
}

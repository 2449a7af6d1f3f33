//! Recursive-descent parser.
//!
//! Precedence, loosest first: `:=`, `|`, `&`, comparisons (non-associative),
//! `+ -`, `* /`, unary minus. `if`/`while`/`for` bodies and `else` branches
//! extend as far right as possible, so a dangling `else` binds to the nearest
//! `if`. A parenthesised single expression is just that expression; `()` and
//! `(a; b; ...)` build sequences.

use crate::ast::*;
use crate::diag::{Code, Diagnostic};

use super::lexer::{Literal, Token, TokenKind};

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'t> {
    tokens: &'t [Token],
    i: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        &self.tokens[self.i.min(self.tokens.len() - 1)]
    }

    fn peek_kind(&self) -> TokenKind {
        self.peek().kind
    }

    fn advance(&mut self) -> &'t Token {
        let t = self.peek();
        if self.i < self.tokens.len() - 1 {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if self.peek_kind() == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error_here(&self, code: Code, what: &str) -> Diagnostic {
        let t = self.peek();
        Diagnostic::new(
            t.pos,
            code,
            format!("expected {what}, found {}", describe(t)),
        )
    }

    fn expect_as(&mut self, kind: TokenKind, code: Code) -> PResult<&'t Token> {
        if self.peek_kind() == kind {
            Ok(self.advance())
        } else {
            Err(self.error_here(code, kind.describe()))
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<&'t Token> {
        self.expect_as(kind, Code::MissingDelimiter)
    }

    fn ident_as(&mut self, code: Code) -> PResult<(Symbol, Pos)> {
        let t = self.expect_as(TokenKind::Id, code)?;
        Ok((Symbol::intern(&t.lexeme), t.pos))
    }

    fn exp(&mut self) -> PResult<Exp> {
        let left = self.or_exp()?;
        if self.peek_kind() != TokenKind::Assign {
            return Ok(left);
        }
        let assign = self.advance();
        match left.kind {
            ExpKind::Var(target) => {
                let value = self.exp()?;
                Ok(Exp::new(
                    ExpKind::Assign(target, Box::new(value)),
                    assign.pos,
                ))
            }
            _ => Err(Diagnostic::new(
                assign.pos,
                Code::UnexpectedToken,
                "left-hand side of ':=' is not assignable",
            )),
        }
    }

    fn binary(
        &mut self,
        next: fn(&mut Self) -> PResult<Exp>,
        ops: &[(TokenKind, Oper)],
    ) -> PResult<Exp> {
        let mut left = next(self)?;
        while let Some(&(_, oper)) = ops.iter().find(|(k, _)| *k == self.peek_kind()) {
            let pos = self.advance().pos;
            let right = next(self)?;
            left = Exp::new(ExpKind::Op(Box::new(left), oper, Box::new(right)), pos);
        }
        Ok(left)
    }

    fn or_exp(&mut self) -> PResult<Exp> {
        self.binary(Self::and_exp, &[(TokenKind::Pipe, Oper::Or)])
    }

    fn and_exp(&mut self) -> PResult<Exp> {
        self.binary(Self::cmp_exp, &[(TokenKind::Amp, Oper::And)])
    }

    fn comparison(kind: TokenKind) -> Option<Oper> {
        Some(match kind {
            TokenKind::Eq => Oper::Eq,
            TokenKind::Ne => Oper::Ne,
            TokenKind::Lt => Oper::Lt,
            TokenKind::Le => Oper::Le,
            TokenKind::Gt => Oper::Gt,
            TokenKind::Ge => Oper::Ge,
            _ => return None,
        })
    }

    fn cmp_exp(&mut self) -> PResult<Exp> {
        let left = self.add_exp()?;
        let Some(oper) = Self::comparison(self.peek_kind()) else {
            return Ok(left);
        };
        let pos = self.advance().pos;
        let right = self.add_exp()?;
        if Self::comparison(self.peek_kind()).is_some() {
            return Err(Diagnostic::new(
                self.peek().pos,
                Code::UnexpectedToken,
                "comparison operators do not associate; parenthesize",
            ));
        }
        Ok(Exp::new(
            ExpKind::Op(Box::new(left), oper, Box::new(right)),
            pos,
        ))
    }

    fn add_exp(&mut self) -> PResult<Exp> {
        self.binary(
            Self::mul_exp,
            &[
                (TokenKind::Plus, Oper::Plus),
                (TokenKind::Minus, Oper::Minus),
            ],
        )
    }

    fn mul_exp(&mut self) -> PResult<Exp> {
        self.binary(
            Self::unary_exp,
            &[
                (TokenKind::Star, Oper::Times),
                (TokenKind::Slash, Oper::Divide),
            ],
        )
    }

    fn unary_exp(&mut self) -> PResult<Exp> {
        if self.peek_kind() == TokenKind::Minus {
            let pos = self.advance().pos;
            let operand = self.unary_exp()?;
            return Ok(Exp::new(ExpKind::Neg(Box::new(operand)), pos));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Exp> {
        let tok = self.peek();
        let pos = tok.pos;
        match tok.kind {
            TokenKind::Int => {
                self.advance();
                let Literal::Int(n) = tok.literal else {
                    unreachable!("integer token without payload")
                };
                Ok(Exp::new(ExpKind::Int(n), pos))
            }
            TokenKind::Str => {
                self.advance();
                let Literal::Str(s) = &tok.literal else {
                    unreachable!("string token without payload")
                };
                Ok(Exp::new(ExpKind::Str(s.clone()), pos))
            }
            TokenKind::Nil => {
                self.advance();
                Ok(Exp::new(ExpKind::Nil, pos))
            }
            TokenKind::LParen => self.paren(),
            TokenKind::Id => self.ident_exp(),
            TokenKind::If => self.if_exp(),
            TokenKind::While => {
                self.advance();
                let test = self.exp()?;
                self.expect(TokenKind::Do)?;
                let body = self.exp()?;
                Ok(Exp::new(
                    ExpKind::While(Box::new(test), Box::new(body)),
                    pos,
                ))
            }
            TokenKind::For => {
                self.advance();
                let (var, _) = self.ident_as(Code::UnexpectedToken)?;
                self.expect(TokenKind::Assign)?;
                let lo = self.exp()?;
                self.expect(TokenKind::To)?;
                let hi = self.exp()?;
                self.expect(TokenKind::Do)?;
                let body = self.exp()?;
                Ok(Exp::new(
                    ExpKind::For(var, Box::new(lo), Box::new(hi), Box::new(body)),
                    pos,
                ))
            }
            TokenKind::Break => {
                self.advance();
                Ok(Exp::new(ExpKind::Break, pos))
            }
            TokenKind::Let => self.let_exp(),
            _ => Err(self.error_here(Code::UnexpectedToken, "an expression")),
        }
    }

    fn paren(&mut self) -> PResult<Exp> {
        let pos = self.expect(TokenKind::LParen)?.pos;
        if self.eat(TokenKind::RParen) {
            return Ok(Exp::new(ExpKind::Seq(Vec::new()), pos));
        }
        let mut exps = vec![self.exp()?];
        while self.eat(TokenKind::Semicolon) {
            exps.push(self.exp()?);
        }
        self.expect(TokenKind::RParen)?;
        if exps.len() == 1 {
            Ok(exps.pop().unwrap())
        } else {
            Ok(Exp::new(ExpKind::Seq(exps), pos))
        }
    }

    fn if_exp(&mut self) -> PResult<Exp> {
        let pos = self.expect(TokenKind::If)?.pos;
        let test = self.exp()?;
        self.expect(TokenKind::Then)?;
        let then = self.exp()?;
        if self.eat(TokenKind::Else) {
            let els = self.exp()?;
            Ok(Exp::new(
                ExpKind::IfElse(Box::new(test), Box::new(then), Box::new(els)),
                pos,
            ))
        } else {
            Ok(Exp::new(ExpKind::If(Box::new(test), Box::new(then)), pos))
        }
    }

    fn ident_exp(&mut self) -> PResult<Exp> {
        let (name, pos) = self.ident_as(Code::UnexpectedToken)?;
        match self.peek_kind() {
            TokenKind::LParen => {
                self.advance();
                let mut args = Vec::new();
                if !self.eat(TokenKind::RParen) {
                    loop {
                        args.push(self.exp()?);
                        if !self.eat(TokenKind::Comma) {
                            break;
                        }
                    }
                    self.expect(TokenKind::RParen)?;
                }
                Ok(Exp::new(ExpKind::Call(name, args), pos))
            }
            TokenKind::LBrace => {
                self.advance();
                let mut fields = Vec::new();
                if !self.eat(TokenKind::RBrace) {
                    loop {
                        let (field, fpos) = self.ident_as(Code::UnexpectedToken)?;
                        self.expect(TokenKind::Eq)?;
                        let value = self.exp()?;
                        fields.push(FieldInit {
                            name: field,
                            value,
                            pos: fpos,
                        });
                        if !self.eat(TokenKind::Comma) {
                            break;
                        }
                    }
                    self.expect(TokenKind::RBrace)?;
                }
                Ok(Exp::new(ExpKind::Record(name, fields), pos))
            }
            TokenKind::LBracket => {
                let bracket = self.advance().pos;
                let index = self.exp()?;
                self.expect(TokenKind::RBracket)?;
                if self.eat(TokenKind::Of) {
                    let init = self.exp()?;
                    return Ok(Exp::new(
                        ExpKind::Array(name, Box::new(index), Box::new(init)),
                        pos,
                    ));
                }
                let base = LValue::new(LValueKind::Simple(name), pos);
                let first = LValue::new(
                    LValueKind::Subscript(Box::new(base), Box::new(index)),
                    bracket,
                );
                self.lvalue_tail(first, pos)
            }
            _ => self.lvalue_tail(LValue::new(LValueKind::Simple(name), pos), pos),
        }
    }

    fn lvalue_tail(&mut self, mut lv: LValue, start: Pos) -> PResult<Exp> {
        loop {
            match self.peek_kind() {
                TokenKind::Dot => {
                    let dot = self.advance().pos;
                    let (field, _) = self.ident_as(Code::UnexpectedToken)?;
                    lv = LValue::new(LValueKind::Field(Box::new(lv), field), dot);
                }
                TokenKind::LBracket => {
                    let bracket = self.advance().pos;
                    let index = self.exp()?;
                    self.expect(TokenKind::RBracket)?;
                    lv = LValue::new(
                        LValueKind::Subscript(Box::new(lv), Box::new(index)),
                        bracket,
                    );
                }
                _ => return Ok(Exp::new(ExpKind::Var(Box::new(lv)), start)),
            }
        }
    }

    fn let_exp(&mut self) -> PResult<Exp> {
        let pos = self.expect(TokenKind::Let)?.pos;
        let mut decls = Vec::new();
        while matches!(
            self.peek_kind(),
            TokenKind::Type | TokenKind::Var | TokenKind::Function
        ) {
            decls.push(self.decl()?);
        }
        self.expect(TokenKind::In)?;
        let mut body = Vec::new();
        if self.peek_kind() != TokenKind::End {
            body.push(self.exp()?);
            while self.eat(TokenKind::Semicolon) {
                body.push(self.exp()?);
            }
        }
        self.expect(TokenKind::End)?;
        Ok(Exp::new(ExpKind::Let(decls, body), pos))
    }

    fn decl(&mut self) -> PResult<Decl> {
        let tok = self.advance();
        let pos = tok.pos;
        let bad = Code::MalformedDecl;
        match tok.kind {
            TokenKind::Type => {
                let (name, _) = self.ident_as(bad)?;
                self.expect_as(TokenKind::Eq, bad)?;
                let spec = self.type_spec()?;
                Ok(Decl::new(DeclKind::Type(name, spec), pos))
            }
            TokenKind::Var => {
                let (name, _) = self.ident_as(bad)?;
                let ty = if self.eat(TokenKind::Colon) {
                    Some(self.ident_as(bad)?.0)
                } else {
                    None
                };
                self.expect_as(TokenKind::Assign, bad)?;
                let init = self.exp()?;
                Ok(Decl::new(DeclKind::Var(name, ty, init), pos))
            }
            TokenKind::Function => {
                let (name, _) = self.ident_as(bad)?;
                self.expect_as(TokenKind::LParen, bad)?;
                let formals = self.typed_fields(TokenKind::RParen)?;
                let result = if self.eat(TokenKind::Colon) {
                    Some(self.ident_as(bad)?.0)
                } else {
                    None
                };
                self.expect_as(TokenKind::Eq, bad)?;
                let body = self.exp()?;
                Ok(Decl::new(
                    DeclKind::Fun(FunDecl {
                        name,
                        formals,
                        result,
                        body,
                    }),
                    pos,
                ))
            }
            _ => unreachable!("decl() called on a non-declaration token"),
        }
    }

    /// `id : id {, id : id}` up to and including `close`.
    fn typed_fields(&mut self, close: TokenKind) -> PResult<Vec<TypedField>> {
        let bad = Code::MalformedDecl;
        let mut fields = Vec::new();
        if self.eat(close) {
            return Ok(fields);
        }
        loop {
            let (name, pos) = self.ident_as(bad)?;
            self.expect_as(TokenKind::Colon, bad)?;
            let (ty, _) = self.ident_as(bad)?;
            fields.push(TypedField { name, ty, pos });
            if !self.eat(TokenKind::Comma) {
                break;
            }
        }
        self.expect(close)?;
        Ok(fields)
    }

    fn type_spec(&mut self) -> PResult<TypeSpec> {
        let bad = Code::MalformedDecl;
        let pos = self.peek().pos;
        match self.peek_kind() {
            TokenKind::Id => {
                let (name, _) = self.ident_as(bad)?;
                Ok(TypeSpec::new(TypeSpecKind::Name(name), pos))
            }
            TokenKind::LBrace => {
                self.advance();
                let fields = self.typed_fields(TokenKind::RBrace)?;
                Ok(TypeSpec::new(TypeSpecKind::Record(fields), pos))
            }
            TokenKind::Array => {
                self.advance();
                self.expect_as(TokenKind::Of, bad)?;
                let (elem, _) = self.ident_as(bad)?;
                Ok(TypeSpec::new(TypeSpecKind::Array(elem), pos))
            }
            _ => Err(self.error_here(bad, "a type")),
        }
    }
}

fn describe(t: &Token) -> String {
    match t.kind {
        TokenKind::Id | TokenKind::Int => format!("'{}'", t.lexeme),
        TokenKind::Str => "string literal".to_owned(),
        k => k.describe().to_owned(),
    }
}

/// Parses a whole program (one expression followed by end of input).
pub fn parse(tokens: &[Token]) -> Result<Exp, Vec<Diagnostic>> {
    assert!(
        matches!(tokens.last(), Some(t) if t.kind == TokenKind::Eof),
        "token stream must end with Eof"
    );
    let mut p = Parser { tokens, i: 0 };
    let result = p.exp().and_then(|e| {
        if p.peek_kind() == TokenKind::Eof {
            Ok(e)
        } else {
            Err(p.error_here(Code::UnexpectedToken, "end of input"))
        }
    });
    result.map_err(|d| vec![d])
}

//! Recursive-descent parser for the neuron language.
//!
//! Precedence follows SML: application binds tightest, then `*` `/`, then
//! `+` `-` (all left associative). A `case` arm body extends as far as
//! possible, so a `case` used as an operand must be parenthesised.

use super::ast::{Activation, BinOp, Expr, NeuronProgram, Param, Pattern, PARAMS};
use super::error::DslError;
use super::lexer::{tokenize, Tok, Token};

/// Parses a neuron program. The `fun f (SelfPeep0, ..., InputsLC) =` header
/// is optional; without it the text is taken as the function body.
pub fn parse(source: &str) -> Result<NeuronProgram, DslError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0, scope: Vec::new() };
    if p.peek() == &Tok::Fun {
        p.header()?;
    }
    let body = p.expr()?;
    p.expect(Tok::Eof)?;
    Ok(NeuronProgram::new(body))
}

/// Parses a single expression with the eight parameters in scope.
pub fn parse_expr(source: &str) -> Result<Expr, DslError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0, scope: Vec::new() };
    let e = p.expr()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Binding {
    Value,
    Function,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    scope: Vec<(String, Binding)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.col)
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, DslError> {
        let (line, col) = self.here();
        Err(DslError::Syntax { line, col, msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), DslError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            self.syntax(format!("expected {}, found {}", tok.describe(), self.peek().describe()))
        }
    }

    fn ident(&mut self) -> Result<String, DslError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => self.syntax(format!("expected identifier, found {}", other.describe())),
        }
    }

    /// A name introduced by a pattern or `fun`; must not collide with the
    /// language's reserved names.
    fn binder(&mut self) -> Result<String, DslError> {
        let (line, col) = self.here();
        let name = self.ident()?;
        if is_reserved(&name) {
            return Err(DslError::Syntax { line, col, msg: format!("`{name}` cannot be rebound") });
        }
        Ok(name)
    }

    fn lookup(&self, name: &str) -> Option<Binding> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, b)| *b)
    }

    fn header(&mut self) -> Result<(), DslError> {
        self.expect(Tok::Fun)?;
        self.ident()?;
        self.expect(Tok::LParen)?;
        for (k, expected) in PARAMS.iter().enumerate() {
            if k > 0 {
                self.expect(Tok::Comma)?;
            }
            let (line, col) = self.here();
            let name = self.ident()?;
            if name != expected.name() {
                return Err(DslError::Syntax {
                    line,
                    col,
                    msg: format!("parameter {} must be `{}`, found `{name}`", k + 1, expected.name()),
                });
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Eq)
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        if self.peek() == &Tok::Case {
            self.next();
            let scrutinee = self.expr()?;
            self.expect(Tok::Of)?;
            let pat = self.pattern()?;
            self.expect(Tok::Arrow)?;
            let mark = self.scope.len();
            for n in pat.names() {
                self.scope.push((n.to_string(), Binding::Value));
            }
            let body = self.expr();
            self.scope.truncate(mark);
            return Ok(Expr::case(scrutinee, pat, body?));
        }
        self.additive()
    }

    fn pattern(&mut self) -> Result<Pattern, DslError> {
        if self.peek() == &Tok::LParen {
            let (line, col) = self.here();
            self.next();
            let mut names = vec![self.binder()?];
            while self.peek() == &Tok::Comma {
                self.next();
                names.push(self.binder()?);
            }
            self.expect(Tok::RParen)?;
            if names.len() < 2 {
                return Ok(Pattern::Var(names.pop().unwrap()));
            }
            for (i, n) in names.iter().enumerate() {
                if names[..i].contains(n) {
                    return Err(DslError::Syntax { line, col, msg: format!("duplicate pattern variable `{n}`") });
                }
            }
            Ok(Pattern::Tuple(names))
        } else {
            Ok(Pattern::Var(self.binder()?))
        }
    }

    fn additive(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.multiplicative()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.application()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.application()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn application(&mut self) -> Result<Expr, DslError> {
        let Tok::Ident(name) = self.peek().clone() else {
            return self.atom();
        };
        let (line, col) = self.here();
        if let Some(act) = Activation::from_name(&name) {
            self.next();
            return Ok(Expr::act(act, self.atom()?));
        }
        if let Some(idx) = lc_index(&name) {
            if idx as usize >= super::ast::NUM_MAPPINGS {
                return Err(DslError::MappingIndex { index: idx, line, col });
            }
            self.next();
            return Ok(Expr::lc(idx as u8, self.atom()?));
        }
        if name == "cons" {
            self.next();
            self.expect(Tok::LParen)?;
            let head = self.expr()?;
            self.expect(Tok::Comma)?;
            let tail = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(Expr::cons(head, tail));
        }
        if self.lookup(&name) == Some(Binding::Function) {
            self.next();
            return Ok(Expr::Apply(name, Box::new(self.atom()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        let (line, col) = self.here();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.next();
                Ok(Expr::Const(v))
            }
            Tok::Ident(name) => {
                if name == "bias" {
                    self.next();
                    return Ok(Expr::Bias);
                }
                if Activation::from_name(&name).is_some() || lc_index(&name).is_some() || name == "cons" {
                    return self.application();
                }
                match self.lookup(&name) {
                    Some(Binding::Value) => {
                        self.next();
                        Ok(Expr::Var(name))
                    }
                    Some(Binding::Function) => {
                        self.syntax(format!("function `{name}` used without an argument"))
                    }
                    None => match Param::from_name(&name) {
                        Some(p) => {
                            self.next();
                            Ok(Expr::Param(p))
                        }
                        None => Err(DslError::UnknownIdentifier { name, line, col }),
                    },
                }
            }
            Tok::LParen => {
                self.next();
                let first = self.expr()?;
                if self.peek() == &Tok::RParen {
                    self.next();
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.peek() == &Tok::Comma {
                    self.next();
                    items.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Expr::Tuple(items))
            }
            Tok::Let => self.let_fun(),
            Tok::Case => self.expr(),
            other => self.syntax(format!("unexpected {}", other.describe())),
        }
    }

    fn let_fun(&mut self) -> Result<Expr, DslError> {
        self.expect(Tok::Let)?;
        self.expect(Tok::Fun)?;
        let name = self.binder()?;
        if self.peek() == &Tok::LParen {
            return self.syntax("local functions take exactly one variable parameter");
        }
        let param = self.binder()?;
        if self.peek() != &Tok::Eq {
            return self.syntax("local functions take exactly one variable parameter");
        }
        self.next();
        let mark = self.scope.len();
        self.scope.push((param.clone(), Binding::Value));
        let body = self.expr();
        self.scope.truncate(mark);
        let body = body?;
        self.expect(Tok::In)?;
        self.scope.push((name.clone(), Binding::Function));
        let rest = self.expr();
        self.scope.truncate(mark);
        let rest = rest?;
        self.expect(Tok::End)?;
        Ok(Expr::Let { name, param, body: Box::new(body), rest: Box::new(rest) })
    }
}

fn lc_index(name: &str) -> Option<u32> {
    let digits = name.strip_prefix("lc")?;
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn is_reserved(name: &str) -> bool {
    Param::from_name(name).is_some()
        || Activation::from_name(name).is_some()
        || lc_index(name).is_some()
        || name == "cons"
        || name == "bias"
}

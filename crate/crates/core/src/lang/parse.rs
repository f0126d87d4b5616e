use super::expr::Expr;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s = &text[start..i];
            let v: f64 = s.parse().map_err(|_| Error::Syntax { pos: start, msg: format!("bad number `{s}`") })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => return Err(Error::Syntax { pos: i, msg: format!("unexpected character `{c}`") }),
            };
            out.push((i, tok));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { pos: self.offset(), msg: msg.into() })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' { Expr::Add(Box::new(lhs), Box::new(rhs)) } else { Expr::Sub(Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let at = self.offset();
            let rhs = self.unary()?;
            if c == '*' {
                lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
            } else {
                if !rhs.is_constant() {
                    return Err(Error::NonEntire {
                        node: format!("{lhs}/{rhs}"),
                        msg: format!("denominator at {at} depends on z"),
                    });
                }
                if rhs.constant_value().map(|v| v.norm() == 0.0).unwrap_or(true) {
                    return Err(Error::NonEntire { node: format!("{lhs}/{rhs}"), msg: "division by zero".into() });
                }
                lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return self.fail("unexpected end of input");
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.fail("expected `)`");
                }
                self.pos += 1;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.offset();
                self.pos += 1;
                match name.as_str() {
                    "z" => Ok(Expr::Z),
                    "i" => Ok(Expr::I),
                    "pi" => Ok(Expr::Pi),
                    "exp" | "sin" | "cos" | "log" | "sqrt" => {
                        if self.peek() != Some(&Tok::LParen) {
                            return self.fail(format!("expected `(` after `{name}`"));
                        }
                        self.pos += 1;
                        let arg = self.expr()?;
                        if self.peek() != Some(&Tok::RParen) {
                            return self.fail("expected `)`");
                        }
                        self.pos += 1;
                        let b = Box::new(arg);
                        match name.as_str() {
                            "exp" => Ok(Expr::Exp(b)),
                            "sin" => Ok(Expr::Sin(b)),
                            "cos" => Ok(Expr::Cos(b)),
                            _ => {
                                if !b.is_constant() {
                                    return Err(Error::NonEntire {
                                        node: format!("{name}({b})"),
                                        msg: format!("`{name}` at {at} applied to a z-dependent argument"),
                                    });
                                }
                                if name == "log" {
                                    if b.constant_value().map(|v| v.norm() == 0.0).unwrap_or(true) {
                                        return Err(Error::NonEntire { node: format!("log({b})"), msg: "log of zero".into() });
                                    }
                                    Ok(Expr::Log(b))
                                } else {
                                    Ok(Expr::Sqrt(b))
                                }
                            }
                        }
                    }
                    _ => Err(Error::Syntax { pos: at, msg: format!("unknown identifier `{name}`") }),
                }
            }
            Tok::RParen => self.fail("unexpected `)`"),
            Tok::Op(c) => self.fail(format!("unexpected operator `{c}`")),
        }
    }
}

/// Parses an expression in `z`; see the README for the grammar.
pub fn parse(text: &str) -> Result<Expr> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.fail("trailing input");
    }
    Ok(e)
}

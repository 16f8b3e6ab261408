//! Infix expression reader: `+ - * / ^`, unary minus, parentheses, `sqrt(.)`,
//! decimal/scientific constants, and the symbols `x1..xn`, `u1..um`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{ExprBuilder, Node, NodeId};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
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
            let v: f64 = text.parse().map_err(|_| ParseError {
                pos: start,
                msg: alloc::format!("invalid number `{text}`"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else if c == '(' {
            out.push((i, Tok::LParen));
            i += 1;
        } else if c == ')' {
            out.push((i, Tok::RParen));
            i += 1;
        } else {
            return Err(ParseError {
                pos: i,
                msg: alloc::format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    b: &'a mut ExprBuilder,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: &str) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.here(),
            msg: msg.to_string(),
        })
    }

    fn expr(&mut self) -> Result<NodeId, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { self.b.add(lhs, rhs) } else { self.b.sub(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<NodeId, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { self.b.mul(lhs, rhs) } else { self.b.div(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<NodeId, ParseError> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                let v = self.unary()?;
                Ok(self.b.neg(v))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<NodeId, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let at = self.here();
            let e = self.unary()?;
            let Node::Const(p) = self.b.node(e) else {
                return Err(ParseError {
                    pos: at,
                    msg: "exponent must be a constant".to_string(),
                });
            };
            return Ok(self.b.powf(base, p));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<NodeId, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(self.b.constant(v))
            }
            Tok::LParen => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect_rparen()?;
                Ok(v)
            }
            Tok::Ident(name) => {
                let at = self.here();
                self.pos += 1;
                if name == "sqrt" {
                    if self.peek() != Some(&Tok::LParen) {
                        return self.err("expected `(` after sqrt");
                    }
                    self.pos += 1;
                    let v = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(self.b.sqrt(v));
                }
                let (kind, digits) = name.split_at(1);
                let index: Option<usize> = digits.parse().ok().filter(|&i| i >= 1);
                match (kind, index) {
                    ("x", Some(i)) => Ok(self.b.state(i - 1)),
                    ("u", Some(i)) => Ok(self.b.input(i - 1)),
                    _ => Err(ParseError {
                        pos: at,
                        msg: alloc::format!("unknown symbol `{name}` (expected x<i>, u<i> or sqrt)"),
                    }),
                }
            }
            Tok::RParen => self.err("unexpected `)`"),
            Tok::Op(c) => Err(ParseError {
                pos: self.here(),
                msg: alloc::format!("unexpected operator `{c}`"),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            self.err("expected `)`")
        }
    }
}

pub(super) fn parse_into(b: &mut ExprBuilder, src: &str) -> Result<NodeId, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
        b,
    };
    let id = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(id)
}

#[cfg(test)]
mod tests {
    use super::super::SymbolicDynamics;

    #[test]
    fn precedence_and_associativity() {
        let f = SymbolicDynamics::parse(2, 0, &["1 - 2*x1^2/4 + -x2", "2^3^0.5*0 + (x1 - x2) - 1e-1"]).unwrap();
        let v = f.eval(&[2.0, 3.0], &[]).unwrap();
        assert_eq!(v[0], 1.0 - 2.0 - 3.0);
        assert!((v[1] + 1.1).abs() < 1e-15);
    }

    #[test]
    fn reports_positions() {
        let e = SymbolicDynamics::parse(1, 0, &["x1 + y"]).unwrap_err();
        assert!(alloc::format!("{e}").contains("byte 5"), "{e}");
        assert!(SymbolicDynamics::parse(1, 0, &["(x1"]).is_err());
        assert!(SymbolicDynamics::parse(1, 0, &["x1^x1"]).is_err());
        assert!(SymbolicDynamics::parse(1, 0, &["x1 x1"]).is_err());
    }
}

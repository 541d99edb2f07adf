use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::{Expr, UnaryOp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unsupported exponent `{exponent}` at byte {offset}: only integer and half-integer constants are allowed")]
    UnsupportedExponent { offset: usize, exponent: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(BigRational),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Token)>, ParseError> {
        let mut lexer = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        while let Some(tok) = lexer.next_token()? {
            out.push(tok);
        }
        Ok(out)
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn next_token(&mut self) -> Result<Option<(usize, Token)>, ParseError> {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let tok = match c {
            b'0'..=b'9' | b'.' => Token::Number(self.number()?),
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while self
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
                {
                    self.pos += 1;
                }
                Token::Ident(self.src[start..self.pos].to_string())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Token::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        Ok(Some((start, tok)))
    }

    fn number(&mut self) -> Result<BigRational, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == b'.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // `2e` followed by something that is not an exponent: leave it
                self.pos = save;
            }
        }
        parse_decimal(&self.src[start..self.pos]).ok_or_else(|| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{}`", &self.src[start..self.pos]),
        })
    }
}

/// Parses a decimal literal (`12`, `0.25`, `1.5e-3`) into an exact rational.
pub(crate) fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i64>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    if exponent.abs() > 4096 {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().unwrap_or_else(|_| BigInt::zero());
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(digits);
    let factor = BigRational::from_integer(num_traits::pow::pow(ten, scale.unsigned_abs() as usize));
    if scale >= 0 {
        value *= factor;
    } else {
        value /= factor;
    }
    Some(if negative { -value } else { value })
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    len: usize,
}

/// Parses infix text into an [`Expr`].
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let tokens = Lexer::tokens(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        len: source.len(),
    };
    let e = p.expr()?;
    if let Some((offset, tok)) = p.tokens.get(p.pos) {
        return Err(ParseError::Syntax {
            offset: *offset,
            message: format!("unexpected trailing token {}", describe(tok)),
        });
    }
    Ok(e)
}

fn describe(tok: &Token) -> String {
    match tok {
        Token::Number(n) => format!("number `{n}`"),
        Token::Ident(s) => format!("identifier `{s}`"),
        Token::Op(c) => format!("`{c}`"),
        Token::LParen => "`(`".into(),
        Token::RParen => "`)`".into(),
    }
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |(o, _)| *o)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Token) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected {}", describe(&tok))))
        }
    }

    fn unexpected(&self, message: &str) -> ParseError {
        let found = self
            .peek()
            .map_or_else(|| "end of input".to_string(), describe);
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("{message}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = lhs.add(&self.term()?);
            } else if self.eat_op('-') {
                lhs = lhs.sub(&self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat_op('*') {
                lhs = lhs.mul(&self.factor()?);
            } else if self.eat_op('/') {
                lhs = lhs.div(&self.factor()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op('-') {
            return Ok(self.factor()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if !self.eat_op('^') {
            return Ok(base);
        }
        let offset = self.offset();
        let exponent = self.exponent()?;
        let unsupported = || ParseError::UnsupportedExponent {
            offset,
            exponent: exponent.to_string(),
        };
        let value = exponent.as_const().ok_or_else(unsupported)?.to_exact();
        base.pow_exact(&value).map_err(|_| unsupported())
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op('-') {
            return Ok(self.exponent()?.neg());
        }
        self.power()
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Token::Number(n)) => {
                self.pos += 1;
                Ok(Expr::exact(n))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Token::LParen) {
                    let op = UnaryOp::from_function_name(&name)
                        .ok_or(ParseError::UnknownFunction { name, offset })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(Token::RParen)?;
                    Ok(Expr::unary(op, &arg))
                } else {
                    Ok(Expr::var(&name))
                }
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            _ => Err(self.unexpected("expected a number, identifier, or `(`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Binding;

    fn value(src: &str) -> f64 {
        parse(src).unwrap().eval(&Binding::new()).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(value("2^3^2"), 512.0);
        assert_eq!(value("-2^2"), -4.0);
        assert_eq!(value("2*-3"), -6.0);
        assert_eq!(value("8/4/2"), 1.0);
        assert_eq!(value("1-2-3"), -4.0);
        assert_eq!(value("4^-1"), 0.25);
        assert_eq!(value("4^(1/2)"), 2.0);
        assert_eq!(value("1.5e1 + .5"), 15.5);
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse("1 + * 2"),
            Err(ParseError::Syntax {
                offset: 4,
                message: "expected a number, identifier, or `(`, found `*`".into()
            })
        );
        assert_eq!(
            parse("2*tan(x)"),
            Err(ParseError::UnknownFunction { name: "tan".into(), offset: 2 })
        );
        assert!(matches!(parse("(x"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("x $ y"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("x^y"), Err(ParseError::UnsupportedExponent { offset: 2, .. })));
        assert!(matches!(parse("x^(1/3)"), Err(ParseError::UnsupportedExponent { .. })));
    }

    #[test]
    fn decimal_literals() {
        assert_eq!(parse_decimal("0.1"), Some(BigRational::new(1.into(), 10.into())));
        assert_eq!(parse_decimal("-2.5e-1"), Some(BigRational::new((-1).into(), 4.into())));
        assert_eq!(parse_decimal("1e3"), Some(BigRational::from_integer(1000.into())));
        assert_eq!(parse_decimal("."), None);
        assert_eq!(parse_decimal("1.2.3"), None);
    }
}

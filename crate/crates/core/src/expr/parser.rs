use super::ast::{BinOp, Expr, Func};
use super::ExprError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

const OPERAND: &[&str] = &["number", "identifier", "`(`", "`-`"];

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(c as char), i));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
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
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    found: format!("malformed number `{text}`"),
                    expected: vec!["number"],
                })?;
                out.push((Tok::Num(v), start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap();
                return Err(ExprError::Syntax {
                    offset: i,
                    found: format!("character `{ch}`"),
                    expected: OPERAND.to_vec(),
                });
            }
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&'static str]) -> ExprError {
        ExprError::Syntax {
            offset: self.offset(),
            found: self.peek().describe(),
            expected: expected.to_vec(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.exponent()?;
            return Ok(Expr::bin(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.exponent()?)));
        }
        self.power()
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&["`)`", "operator"]))
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let offset = self.offset();
                self.bump();
                if name == "pi" {
                    return Ok(Expr::Pi);
                }
                if let Some(f) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(self.error(&["`(`"]));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::call(f, arg));
                }
                match name.as_str() {
                    "x1" => Ok(Expr::Var(0)),
                    "x2" => Ok(Expr::Var(1)),
                    "x3" => Ok(Expr::Var(2)),
                    "x4" => Ok(Expr::Var(3)),
                    _ => Err(ExprError::UnknownIdentifier { name, offset }),
                }
            }
            _ => Err(self.error(OPERAND)),
        }
    }
}

/// Parses an expression string.
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let toks = tokenize(src)?;
    if toks.len() == 1 {
        return Err(ExprError::Empty);
    }
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> Expr {
        Expr::Var(i)
    }

    #[test]
    fn product_chain_is_left_associative() {
        let e = parse("0.1*sin(x1)*cos(x2)").unwrap();
        let expect = Expr::num(0.1) * Expr::call(Func::Sin, v(0)) * Expr::call(Func::Cos, v(1));
        assert_eq!(e, expect);
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("x1 + x2 * x3").unwrap(), v(0) + v(1) * v(2));
        assert_eq!(parse("-x1^2").unwrap(), -Expr::bin(BinOp::Pow, v(0), Expr::num(2.0)));
        assert_eq!(
            parse("2^-x1").unwrap(),
            Expr::bin(BinOp::Pow, Expr::num(2.0), -v(0))
        );
        assert_eq!(parse("(x1 + x2) * x3").unwrap(), (v(0) + v(1)) * v(2));
        assert_eq!(parse("x1 - x2 - x3").unwrap(), (v(0) - v(1)) - v(2));
    }

    #[test]
    fn pow_is_right_associative() {
        let e = parse("2 ^ 3 ^ 2").unwrap();
        assert_eq!(
            e,
            Expr::bin(
                BinOp::Pow,
                Expr::num(2.0),
                Expr::bin(BinOp::Pow, Expr::num(3.0), Expr::num(2.0))
            )
        );
    }

    #[test]
    fn numbers_and_constants() {
        assert_eq!(parse("1e-3").unwrap(), Expr::num(1e-3));
        assert_eq!(parse("2.5E+2").unwrap(), Expr::num(250.0));
        assert_eq!(parse(".5").unwrap(), Expr::num(0.5));
        assert_eq!(parse("pi").unwrap(), Expr::Pi);
    }

    #[test]
    fn errors_are_located() {
        match parse("x1 + * x2") {
            Err(ExprError::Syntax { offset, expected, .. }) => {
                assert_eq!(offset, 5);
                assert!(expected.contains(&"number"));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            parse("x1 + y"),
            Err(ExprError::UnknownIdentifier { name: "y".into(), offset: 5 })
        );
        assert!(matches!(parse("sin x1"), Err(ExprError::Syntax { offset: 4, .. })));
        assert!(matches!(parse("(x1"), Err(ExprError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("x1 x2"), Err(ExprError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("x1 # 2"), Err(ExprError::Syntax { offset: 3, .. })));
        assert_eq!(parse("   "), Err(ExprError::Empty));
        assert!(matches!(parse("1.2.3"), Err(ExprError::Syntax { offset: 0, .. })));
    }

    #[test]
    fn display_round_trip() {
        for src in ["0.1*sin(x1)*cos(x3)", "-x1^2 + 2^3^2", "exp(-x2)/(1 + x3*x3)", "1e-7*pi"] {
            let e = parse(src).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{src} -> {e}");
        }
    }
}

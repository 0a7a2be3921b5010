use super::{BinOp, Expr, Func, ParseError};

const MAX_NESTING: usize = 256;

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Returns the next token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok<'a>, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let Some(&c) = bytes.get(start) else {
            return Ok((Tok::End, start));
        };
        let tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            b'0'..=b'9' => {
                let mut end = start;
                let digits = |mut i: usize| {
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    i
                };
                end = digits(end);
                if end < bytes.len() && bytes[end] == b'.' {
                    end = digits(end + 1);
                }
                if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                    let mut exp = end + 1;
                    if exp < bytes.len() && (bytes[exp] == b'+' || bytes[exp] == b'-') {
                        exp += 1;
                    }
                    if exp < bytes.len() && bytes[exp].is_ascii_digit() {
                        end = digits(exp);
                    }
                }
                let text = &self.src[start..end];
                let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                    offset: start,
                    expected: "number".into(),
                    found: format!("`{text}`"),
                })?;
                self.pos = end;
                Tok::Num(value)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = start + 1;
                while end < bytes.len()
                    && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_')
                {
                    end += 1;
                }
                self.pos = end;
                Tok::Ident(&self.src[start..end])
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: "expression".into(),
                    found: format!("character `{ch}`"),
                });
            }
        };
        Ok((tok, start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok<'a>,
    offset: usize,
    depth: usize,
}

/// Parses an integrand source string.
///
/// Precedence from loosest to tightest: `+ -`, `* /`, `^` (right
/// associative), unary minus. `-x1^2` therefore reads as `(-x1)^2` while
/// `2^-1` is `2^(-1)`.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut lexer = Lexer {
        src: source,
        pos: 0,
    };
    let (tok, offset) = lexer.next()?;
    let mut p = Parser {
        lexer,
        tok,
        offset,
        depth: 0,
    };
    let expr = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected("operator or end of input"));
    }
    Ok(expr)
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, offset) = self.lexer.next()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.offset,
            expected: expected.into(),
            found: self.tok.describe(),
        }
    }

    fn expect(&mut self, tok: Tok<'static>, expected: &str) -> Result<(), ParseError> {
        if self.tok != tok {
            return Err(self.unexpected(expected));
        }
        self.bump()
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(ParseError::Syntax {
                offset: self.offset,
                expected: format!("at most {MAX_NESTING} levels of nesting"),
                found: self.tok.describe(),
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => break,
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => break,
            };
            self.bump()?;
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let base = self.unary()?;
        let out = if self.tok == Tok::Op('^') {
            self.bump()?;
            let exponent = self.factor()?;
            Expr::binary(BinOp::Pow, base, exponent)
        } else {
            base
        };
        self.depth -= 1;
        Ok(out)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Op('-') {
            self.enter()?;
            self.bump()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::neg(inner));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let name_offset = self.offset;
                self.bump()?;
                if self.tok == Tok::LParen {
                    return self.call(name, name_offset);
                }
                identifier(name, name_offset)
            }
            _ => Err(self.unexpected("number, identifier or `(`")),
        }
    }

    fn call(&mut self, name: &str, name_offset: usize) -> Result<Expr, ParseError> {
        let func = Func::from_name(name).ok_or_else(|| ParseError::UnknownFunction {
            name: name.to_string(),
            offset: name_offset,
        })?;
        self.bump()?;
        let mut args = vec![self.expr()?];
        while self.tok == Tok::Comma {
            self.bump()?;
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        if args.len() != func.arity() {
            return Err(ParseError::ArityMismatch {
                name: name.to_string(),
                expected: func.arity(),
                found: args.len(),
                offset: name_offset,
            });
        }
        Ok(Expr::call(func, args))
    }
}

fn identifier(name: &str, offset: usize) -> Result<Expr, ParseError> {
    match name {
        "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
        "e" => return Ok(Expr::Num(std::f64::consts::E)),
        _ => {}
    }
    if Func::from_name(name).is_some() {
        return Err(ParseError::Syntax {
            offset: offset + name.len(),
            expected: format!("`(` after function `{name}`"),
            found: "no argument list".into(),
        });
    }
    if let Some(index) = variable_index(name) {
        return Ok(Expr::Var(index));
    }
    Ok(Expr::Param(name.to_string()))
}

/// `x1` → 0, `x12` → 11. Anything else (`x0`, `x01`, `xy`) is not a variable.
fn variable_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse::<usize>().ok().map(|n| n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn eval_const(src: &str) -> f64 {
        parse(src).unwrap().eval(&[], &BTreeMap::new())
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval_const("2+3*4"), 14.0);
        assert_eq!(eval_const("2^3^2"), 512.0);
        assert_eq!(eval_const("10-4-3"), 3.0);
        assert_eq!(eval_const("64/4/2"), 8.0);
        assert_eq!(eval_const("(2+3)*4"), 20.0);
        assert_eq!(eval_const("2^-1"), 0.5);
        assert_eq!(eval_const("--3"), 3.0);
        assert_eq!(eval_const("2*-3"), -6.0);
    }

    #[test]
    fn unary_minus_binds_tighter_than_pow() {
        assert_eq!(
            parse("-x1^2").unwrap(),
            Expr::binary(BinOp::Pow, Expr::neg(Expr::Var(0)), Expr::Num(2.0))
        );
        assert_eq!(eval_const("-2^2"), 4.0);
        assert_eq!(eval_const("-(2^2)"), -4.0);
    }

    #[test]
    fn numbers() {
        assert_eq!(eval_const("2.5e-3"), 2.5e-3);
        assert_eq!(eval_const("1E2"), 100.0);
        assert_eq!(eval_const("0.5"), 0.5);
        assert_eq!(eval_const("7."), 7.0);
        assert_eq!(eval_const("pi"), std::f64::consts::PI);
        assert_eq!(eval_const("e"), std::f64::consts::E);
    }

    #[test]
    fn harmonic_body() {
        let e = parse("cos(k*(x1+x2+x3+x4)) + sin(k*(x1+x2+x3+x4))").unwrap();
        let Expr::Binary {
            op: BinOp::Add,
            lhs,
            ..
        } = &e
        else {
            panic!("{e:?}")
        };
        assert!(matches!(
            **lhs,
            Expr::Call {
                func: Func::Cos,
                ..
            }
        ));
    }

    #[test]
    fn identifiers() {
        assert_eq!(parse("x12").unwrap(), Expr::Var(11));
        assert_eq!(parse("x0").unwrap(), Expr::Param("x0".into()));
        assert_eq!(parse("x01").unwrap(), Expr::Param("x01".into()));
        assert_eq!(parse("_k2").unwrap(), Expr::Param("_k2".into()));
    }

    #[test]
    fn whitespace_is_insignificant() {
        assert_eq!(
            parse(" min ( x1 ,\t2 ) ").unwrap(),
            parse("min(x1,2)").unwrap()
        );
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse("2 + * 3").unwrap_err() {
            ParseError::Syntax { offset, .. } => assert_eq!(offset, 4),
            e => panic!("{e:?}"),
        }
        match parse("(1+2").unwrap_err() {
            ParseError::Syntax {
                offset, expected, ..
            } => {
                assert_eq!(offset, 4);
                assert!(expected.contains(')'));
            }
            e => panic!("{e:?}"),
        }
        assert!(matches!(
            parse("").unwrap_err(),
            ParseError::Syntax { offset: 0, .. }
        ));
        assert!(matches!(
            parse("1 2").unwrap_err(),
            ParseError::Syntax { offset: 2, .. }
        ));
        assert!(matches!(
            parse("3 $").unwrap_err(),
            ParseError::Syntax { offset: 2, .. }
        ));
        assert!(matches!(
            parse("sin").unwrap_err(),
            ParseError::Syntax { .. }
        ));
    }

    #[test]
    fn unknown_function_and_arity() {
        assert_eq!(
            parse("1 + foo(x1)").unwrap_err(),
            ParseError::UnknownFunction {
                name: "foo".into(),
                offset: 4
            }
        );
        assert!(matches!(
            parse("pi(2)").unwrap_err(),
            ParseError::UnknownFunction { .. }
        ));
        assert_eq!(
            parse("pow(x1)").unwrap_err(),
            ParseError::ArityMismatch {
                name: "pow".into(),
                expected: 2,
                found: 1,
                offset: 0
            }
        );
        assert!(matches!(
            parse("sin(1, 2)").unwrap_err(),
            ParseError::ArityMismatch {
                expected: 1,
                found: 2,
                ..
            }
        ));
    }

    #[test]
    fn deep_nesting_is_rejected_not_overflowed() {
        let src = format!("{}1{}", "(".repeat(10_000), ")".repeat(10_000));
        assert!(parse(&src).is_err());
        let src = format!("{}1", "-".repeat(10_000));
        assert!(parse(&src).is_err());
        let ok = format!("{}1{}", "(".repeat(100), ")".repeat(100));
        assert_eq!(eval_const(&ok), 1.0);
    }
}

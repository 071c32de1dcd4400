//! Pratt parser for the immersion expression language.

use super::ast::{BinaryOp, Expr, Func};
use super::ExprError;

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if pred(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn number(&mut self, start: usize) -> Result<Token, ExprError> {
        self.take_while(|c| c.is_ascii_digit());
        if self.peek_char() == Some('.') {
            self.pos += 1;
            self.take_while(|c| c.is_ascii_digit());
        }
        if matches!(self.peek_char(), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek_char(), Some('+' | '-')) {
                self.pos += 1;
            }
            let digits = self.pos;
            self.take_while(|c| c.is_ascii_digit());
            if self.pos == digits {
                // Not an exponent; leave `e` for the identifier rule to reject.
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        if text == "." {
            return Err(ExprError::Syntax {
                offset: start,
                message: "expected digits".into(),
            });
        }
        text.parse::<f64>()
            .map(Token::Number)
            .map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }

    /// Returns the next token and its starting byte offset.
    fn next(&mut self) -> Result<(Token, usize), ExprError> {
        self.skip_ws();
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok((Token::End, start));
        };
        let tok = match c {
            '0'..='9' | '.' => self.number(start)?,
            c if c.is_ascii_alphabetic() || c == '_' => {
                self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
                Token::Ident(self.src[start..self.pos].to_string())
            }
            '+' | '-' | '*' | '/' | '^' => {
                self.pos += 1;
                Token::Op(c)
            }
            '(' => {
                self.pos += 1;
                Token::LParen
            }
            ')' => {
                self.pos += 1;
                Token::RParen
            }
            ',' => {
                self.pos += 1;
                Token::Comma
            }
            other => {
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        Ok((tok, start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: Token,
    offset: usize,
    params: &'a [String],
}

const NEG_BP: u8 = 5;

fn infix_binding(op: char) -> Option<(BinaryOp, u8, u8)> {
    Some(match op {
        '+' => (BinaryOp::Add, 1, 2),
        '-' => (BinaryOp::Sub, 1, 2),
        '*' => (BinaryOp::Mul, 3, 4),
        '/' => (BinaryOp::Div, 3, 4),
        '^' => (BinaryOp::Pow, 8, 7),
        _ => return None,
    })
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ExprError> {
        let (tok, off) = self.lexer.next()?;
        self.current = tok;
        self.offset = off;
        Ok(())
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            offset: self.offset,
            message: message.into(),
        })
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if self.current != Token::RParen {
            return self.syntax("expected `)`");
        }
        self.advance()
    }

    fn prefix(&mut self) -> Result<Expr, ExprError> {
        let start = self.offset;
        match self.current.clone() {
            Token::Number(x) => {
                self.advance()?;
                Ok(Expr::Const(x))
            }
            Token::Ident(name) => {
                self.advance()?;
                if self.current == Token::LParen {
                    self.call(&name, start)
                } else if let Some(index) = self.params.iter().position(|p| *p == name) {
                    Ok(Expr::Param { index, name })
                } else {
                    Err(ExprError::UnknownIdentifier {
                        name,
                        offset: start,
                    })
                }
            }
            Token::LParen => {
                self.advance()?;
                let inner = self.expr(0)?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Token::Op('-') => {
                self.advance()?;
                Ok(Expr::Neg(Box::new(self.expr(NEG_BP)?)))
            }
            Token::End => self.syntax("unexpected end of input"),
            other => self.syntax(format!("unexpected token {other:?}")),
        }
    }

    fn call(&mut self, name: &str, start: usize) -> Result<Expr, ExprError> {
        let func = Func::from_name(name).ok_or_else(|| ExprError::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        })?;
        self.advance()?; // `(`
        let mut args = Vec::new();
        if self.current != Token::RParen {
            loop {
                args.push(self.expr(0)?);
                if self.current == Token::Comma {
                    self.advance()?;
                } else {
                    break;
                }
            }
        }
        self.expect_rparen()?;
        if args.len() != func.arity() {
            return Err(ExprError::Arity {
                function: name.to_string(),
                expected: func.arity(),
                got: args.len(),
                offset: start,
            });
        }
        Ok(Expr::call(func, args.pop().expect("arity checked")))
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.prefix()?;
        loop {
            let Token::Op(c) = self.current else { break };
            let Some((op, lbp, rbp)) = infix_binding(c) else {
                break;
            };
            if lbp < min_bp {
                break;
            }
            self.advance()?;
            let rhs = self.expr(rbp)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }
}

/// Parses `source` against the ordered parameter list.
pub fn parse(source: &str, params: &[String]) -> Result<Expr, ExprError> {
    if source.trim().is_empty() {
        return Err(ExprError::Empty);
    }
    let mut parser = Parser {
        lexer: Lexer { src: source, pos: 0 },
        current: Token::End,
        offset: 0,
        params,
    };
    parser.advance()?;
    let expr = parser.expr(0)?;
    if parser.current != Token::End {
        return parser.syntax(format!("unexpected trailing token {:?}", parser.current));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn example_params() -> Vec<String> {
        names(&["u", "v", "theta", "phi", "t"])
    }

    #[test]
    fn product_with_call() {
        let e = parse("u*cos(theta)", &example_params()).unwrap();
        let want = Expr::binary(
            BinaryOp::Mul,
            Expr::param(0, "u"),
            Expr::call(Func::Cos, Expr::param(2, "theta")),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn unary_minus() {
        let e = parse("-t", &example_params()).unwrap();
        assert_eq!(e, Expr::Neg(Box::new(Expr::param(4, "t"))));
    }

    #[test]
    fn affine_component() {
        let e = parse("3*theta+2*phi", &example_params()).unwrap();
        let want = Expr::binary(
            BinaryOp::Add,
            Expr::binary(BinaryOp::Mul, Expr::Const(3.0), Expr::param(2, "theta")),
            Expr::binary(BinaryOp::Mul, Expr::Const(2.0), Expr::param(3, "phi")),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn power_is_right_associative_and_binds_over_negation() {
        let p = names(&["a", "b", "c"]);
        let e = parse("a^b^c", &p).unwrap();
        assert_eq!(
            e,
            Expr::binary(
                BinaryOp::Pow,
                Expr::param(0, "a"),
                Expr::binary(BinaryOp::Pow, Expr::param(1, "b"), Expr::param(2, "c"))
            )
        );
        let e = parse("-a^2", &p).unwrap();
        assert!(matches!(e, Expr::Neg(inner) if matches!(*inner, Expr::Binary(BinaryOp::Pow, ..))));
        let e = parse("a^-2", &p).unwrap();
        assert!(matches!(e, Expr::Binary(BinaryOp::Pow, _, rhs) if matches!(*rhs, Expr::Neg(_))));
    }

    #[test]
    fn subtraction_is_left_associative() {
        let p = names(&["a", "b", "c"]);
        assert_eq!(parse("a-b-c", &p).unwrap().to_string(), "a-b-c");
        assert_eq!(parse("a-(b-c)", &p).unwrap().to_string(), "a-(b-c)");
    }

    #[test]
    fn numbers_with_exponents() {
        let e = parse("1.5e-3 + .25 + 2.", &[]).unwrap();
        assert_eq!(e.to_string(), "0.0015+0.25+2.0");
    }

    #[test]
    fn errors_carry_locations() {
        let p = example_params();
        assert_eq!(
            parse("u + w", &p),
            Err(ExprError::UnknownIdentifier {
                name: "w".into(),
                offset: 4
            })
        );
        assert!(matches!(parse("u * ", &p), Err(ExprError::Syntax { offset: 4, .. })));
        assert!(matches!(parse("u $ v", &p), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(
            parse("sin(u, v)", &p),
            Err(ExprError::Arity { got: 2, expected: 1, .. })
        ));
        assert!(matches!(parse("sin()", &p), Err(ExprError::Arity { got: 0, .. })));
        assert!(matches!(parse("foo(u)", &p), Err(ExprError::UnknownIdentifier { .. })));
        assert_eq!(parse("   ", &p), Err(ExprError::Empty));
        assert!(matches!(parse("(u", &p), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("u v", &p), Err(ExprError::Syntax { offset: 2, .. })));
    }
}

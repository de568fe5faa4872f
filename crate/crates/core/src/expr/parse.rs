//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' int)?
//! base   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')' | '-' base
//! ```
//!
//! Whitespace is insignificant and identifiers may be any Unicode letters, so
//! coordinate names like `θ` and `φ` work directly. Note the grammar places
//! unary minus inside the exponent base: `-x^2` parses as `(-x)^2`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow as _, Zero};

use super::{Chart, ExprError, Primitive, ScalarExpr};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    offset: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn syntax(offset: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax { offset, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, ExprError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(offset, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let simple = match c {
            '+' => Some(Token::Plus),
            '-' => Some(Token::Minus),
            '*' => Some(Token::Star),
            '/' => Some(Token::Slash),
            '^' => Some(Token::Caret),
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            ',' => Some(Token::Comma),
            _ => None,
        };
        if let Some(token) = simple {
            chars.next();
            tokens.push(Spanned { token, offset });
            continue;
        }
        if c.is_ascii_digit() {
            let mut int_part = String::new();
            let mut frac_part = String::new();
            let mut exp_part: Option<i64> = None;
            while let Some(&(_, d)) = chars.peek() {
                if d.is_ascii_digit() {
                    int_part.push(d);
                    chars.next();
                } else {
                    break;
                }
            }
            if let Some(&(_, '.')) = chars.peek() {
                chars.next();
                while let Some(&(_, d)) = chars.peek() {
                    if d.is_ascii_digit() {
                        frac_part.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if frac_part.is_empty() {
                    return Err(syntax(offset, "expected digits after decimal point"));
                }
            }
            if let Some(&(_, e)) = chars.peek() {
                if e == 'e' || e == 'E' {
                    // Only treat as exponent when followed by digits or sign+digits;
                    // otherwise leave it for the identifier lexer (`2*e` in Weil literals).
                    let mut lookahead = chars.clone();
                    lookahead.next();
                    let mut sign = 1i64;
                    if let Some(&(_, s)) = lookahead.peek() {
                        if s == '+' || s == '-' {
                            if s == '-' {
                                sign = -1;
                            }
                            lookahead.next();
                        }
                    }
                    if matches!(lookahead.peek(), Some(&(_, d)) if d.is_ascii_digit()) {
                        chars = lookahead;
                        let mut digits = String::new();
                        while let Some(&(_, d)) = chars.peek() {
                            if d.is_ascii_digit() {
                                digits.push(d);
                                chars.next();
                            } else {
                                break;
                            }
                        }
                        let magnitude: i64 = digits
                            .parse()
                            .map_err(|_| syntax(offset, "exponent out of range"))?;
                        exp_part = Some(sign * magnitude);
                    }
                }
            }
            let mut value = BigRational::new(
                int_part.parse::<BigInt>().map_err(|_| syntax(offset, "bad number"))?,
                BigInt::from(1),
            );
            if !frac_part.is_empty() {
                let numer = frac_part.parse::<BigInt>().map_err(|_| syntax(offset, "bad number"))?;
                let denom = BigInt::from(10).pow(frac_part.len() as u32);
                value += BigRational::new(numer, denom);
            }
            if let Some(exp) = exp_part {
                let ten = BigRational::from_integer(BigInt::from(10));
                if exp >= 0 {
                    value *= ten.pow(exp as u64 as i64);
                } else {
                    value /= ten.pow((-exp) as u64 as i64);
                }
            }
            tokens.push(Spanned { token: Token::Number(value), offset });
            continue;
        }
        if is_ident_start(c) {
            let mut name = String::new();
            while let Some(&(_, d)) = chars.peek() {
                if is_ident_continue(d) {
                    name.push(d);
                    chars.next();
                } else {
                    break;
                }
            }
            tokens.push(Spanned { token: Token::Ident(name), offset });
            continue;
        }
        return Err(syntax(offset, format!("unexpected character `{c}`")));
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Spanned>,
    position: usize,
    chart: &'a Chart,
    params: &'a [String],
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.position).map(|s| &s.token)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.position).map(|s| s.offset).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.position).map(|s| s.token.clone());
        if t.is_some() {
            self.position += 1;
        }
        t
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<(), ExprError> {
        if self.peek() == Some(&token) {
            self.position += 1;
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.position += 1;
                    acc = acc + self.term()?;
                }
                Some(Token::Minus) => {
                    self.position += 1;
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<ScalarExpr, ExprError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.position += 1;
                    acc = acc * self.factor()?;
                }
                Some(Token::Slash) => {
                    let offset = self.offset();
                    self.position += 1;
                    let rhs = self.factor()?;
                    // Constant division folds to an exact rational; `5/3` is the
                    // literal syntax for the rational 5/3.
                    if let (ScalarExpr::Rational(a), ScalarExpr::Rational(b)) = (&acc, &rhs) {
                        if b.is_zero() {
                            return Err(syntax(offset, "division of constants by zero"));
                        }
                        acc = ScalarExpr::Rational(a / b);
                    } else {
                        acc = ScalarExpr::Div(Box::new(acc), Box::new(rhs));
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<ScalarExpr, ExprError> {
        let base = self.base()?;
        if self.peek() == Some(&Token::Caret) {
            self.position += 1;
            let exponent = self.integer_exponent()?;
            return Ok(base.pow(exponent));
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<i32, ExprError> {
        let offset = self.offset();
        let mut negative = false;
        if self.peek() == Some(&Token::Minus) {
            negative = true;
            self.position += 1;
        }
        match self.bump() {
            Some(Token::Number(q)) => {
                if !q.is_integer() {
                    return Err(syntax(offset, "exponent must be an integer"));
                }
                let n: i32 = q
                    .to_integer()
                    .try_into()
                    .map_err(|_| syntax(offset, "exponent out of range"))?;
                Ok(if negative { -n } else { n })
            }
            _ => Err(syntax(offset, "expected integer exponent after `^`")),
        }
    }

    fn base(&mut self) -> Result<ScalarExpr, ExprError> {
        let offset = self.offset();
        match self.bump() {
            Some(Token::Number(q)) => Ok(ScalarExpr::Rational(q)),
            Some(Token::Minus) => {
                let inner = self.base()?;
                if let ScalarExpr::Rational(q) = inner {
                    return Ok(ScalarExpr::Rational(-q));
                }
                Ok(-inner)
            }
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(e)
            }
            Some(Token::Ident(name)) => {
                if self.peek() == Some(&Token::LParen) {
                    self.position += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek() == Some(&Token::Comma) {
                        self.position += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(Token::RParen, "`)`")?;
                    let Some(prim) = Primitive::from_name(&name) else {
                        return Err(ExprError::UnknownSymbol(name));
                    };
                    if args.len() != 1 {
                        return Err(syntax(
                            offset,
                            format!("{name} expects 1 argument, got {}", args.len()),
                        ));
                    }
                    Ok(args.remove(0).apply(prim))
                } else {
                    self.resolve_symbol(name)
                }
            }
            _ => Err(syntax(offset, "expected a number, symbol, or `(`")),
        }
    }

    fn resolve_symbol(&self, name: String) -> Result<ScalarExpr, ExprError> {
        if name == "pi" || name == "π" {
            return Ok(ScalarExpr::Pi);
        }
        if self.chart.contains(&name) || self.params.iter().any(|p| *p == name) {
            return Ok(ScalarExpr::Symbol(name));
        }
        Err(ExprError::UnknownSymbol(name))
    }
}

/// Parse `text` over the chart's coordinates and the given parameter names.
pub fn parse(text: &str, chart: &Chart, params: &[String]) -> Result<ScalarExpr, ExprError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, position: 0, chart, params, end: text.len() };
    let e = parser.expr()?;
    if parser.position != parser.tokens.len() {
        return Err(syntax(parser.offset(), "unexpected trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart {
        Chart::new(&["t", "r", "θ", "φ"]).unwrap()
    }

    #[test]
    fn parses_schwarzschild_component() {
        let e = parse("1 - 2*M/r", &chart(), &["M".into()]).unwrap();
        let expected = ScalarExpr::one()
            - ScalarExpr::Div(
                Box::new(ScalarExpr::int(2) * ScalarExpr::symbol("M")),
                Box::new(ScalarExpr::symbol("r")),
            );
        assert_eq!(e, expected);
    }

    #[test]
    fn parses_sin_squared() {
        let e = parse("sin(θ)^2", &chart(), &[]).unwrap();
        assert_eq!(e, ScalarExpr::symbol("θ").sin().pow(2));
    }

    #[test]
    fn unknown_function_is_unknown_symbol() {
        let err = parse("foo(t)", &chart(), &[]).unwrap_err();
        assert_eq!(err, ExprError::UnknownSymbol("foo".into()));
    }

    #[test]
    fn unknown_identifier_is_reported() {
        let err = parse("t + q", &chart(), &[]).unwrap_err();
        assert_eq!(err, ExprError::UnknownSymbol("q".into()));
    }

    #[test]
    fn syntax_error_carries_byte_offset() {
        let err = parse("t + ", &chart(), &[]).unwrap_err();
        match err {
            ExprError::Syntax { offset, .. } => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unary_minus_binds_inside_power() {
        // Grammar: base := '-' base, so the exponent applies to the negated base.
        let e = parse("-r^2", &chart(), &[]).unwrap();
        assert_eq!(e, (-ScalarExpr::symbol("r")).pow(2));
        let e = parse("-(r^2)", &chart(), &[]).unwrap();
        assert_eq!(e, -ScalarExpr::symbol("r").pow(2));
    }

    #[test]
    fn decimal_and_scientific_literals_are_exact() {
        let e = parse("2.5", &chart(), &[]).unwrap();
        assert_eq!(e, ScalarExpr::rational(5, 2));
        let e = parse("1e-3", &chart(), &[]).unwrap();
        assert_eq!(e, ScalarExpr::rational(1, 1000));
        let e = parse("1.25e2", &chart(), &[]).unwrap();
        assert_eq!(e, ScalarExpr::int(125));
    }

    #[test]
    fn constant_quotients_fold_to_rationals() {
        let e = parse("5/3", &chart(), &[]).unwrap();
        assert_eq!(e, ScalarExpr::rational(5, 3));
        assert!(parse("1/0", &chart(), &[]).is_err());
    }

    #[test]
    fn negative_exponent_allowed() {
        let e = parse("r^-2", &chart(), &[]).unwrap();
        assert_eq!(e, ScalarExpr::symbol("r").pow(-2));
    }

    #[test]
    fn pi_resolves_without_declaration() {
        let e = parse("pi * r^2", &chart(), &[]).unwrap();
        assert_eq!(e, ScalarExpr::Pi * ScalarExpr::symbol("r").pow(2));
    }
}

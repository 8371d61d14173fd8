//! Tokenizer and recursive-descent parser for component expressions.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | "+" unary | power
//! power  := atom ("^" integer)?
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! Exponents are non-negative integer literals. The parser builds an untyped
//! [`Ast`]; [`lower_real`] and [`lower_complex`] resolve identifiers.

use std::fmt;

use super::{ComplexPair, Expr, Func};

/// Line and column (both 1-based) inside the parsed text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprErrorKind {
    Syntax,
    UnknownSymbol,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind_name} at {pos}: {message}", kind_name = self.kind_name())]
pub struct ExprError {
    pub kind: ExprErrorKind,
    pub pos: Pos,
    pub message: String,
}

impl ExprError {
    fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        ExprError { kind: ExprErrorKind::Syntax, pos, message: message.into() }
    }

    fn unknown(pos: Pos, message: impl Into<String>) -> Self {
        ExprError { kind: ExprErrorKind::UnknownSymbol, pos, message: message.into() }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ExprErrorKind::Syntax => "SyntaxError",
            ExprErrorKind::UnknownSymbol => "UnknownSymbol",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { chars: src.char_indices().peekable(), src, line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let next = self.chars.next();
        if let Some((_, c)) = next {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        next
    }

    fn tokens(mut self) -> Result<Vec<(Tok, Pos)>, ExprError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
                self.bump();
            }
            let pos = Pos { line: self.line, col: self.col };
            let Some(&(start, c)) = self.chars.peek() else {
                out.push((Tok::End, pos));
                return Ok(out);
            };
            let tok = match c {
                '+' => self.single(Tok::Plus),
                '-' => self.single(Tok::Minus),
                '*' => self.single(Tok::Star),
                '/' => self.single(Tok::Slash),
                '^' => self.single(Tok::Caret),
                '(' => self.single(Tok::LParen),
                ')' => self.single(Tok::RParen),
                c if c.is_ascii_digit() || c == '.' => self.number(start, pos)?,
                c if c.is_alphabetic() || c == '_' => {
                    let mut end = start;
                    while let Some(&(i, c)) = self.chars.peek() {
                        if c.is_alphanumeric() || c == '_' {
                            end = i + c.len_utf8();
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(self.src[start..end].to_string())
                }
                other => return Err(ExprError::syntax(pos, format!("unexpected character '{other}'"))),
            };
            out.push((tok, pos));
        }
    }

    fn single(&mut self, tok: Tok) -> Tok {
        self.bump();
        tok
    }

    fn number(&mut self, start: usize, pos: Pos) -> Result<Tok, ExprError> {
        let mut end = start;
        let mut seen_exp = false;
        let mut prev = ' ';
        while let Some(&(i, c)) = self.chars.peek() {
            let accept = c.is_ascii_digit()
                || c == '.'
                || (!seen_exp && (c == 'e' || c == 'E'))
                || ((c == '+' || c == '-') && (prev == 'e' || prev == 'E'));
            if !accept {
                break;
            }
            if c == 'e' || c == 'E' {
                seen_exp = true;
            }
            prev = c;
            end = i + c.len_utf8();
            self.bump();
        }
        let text = &self.src[start..end];
        text.parse::<f64>()
            .map(Tok::Num)
            .map_err(|_| ExprError::syntax(pos, format!("malformed number '{text}'")))
    }
}

/// Untyped syntax tree; identifiers are resolved during lowering.
#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Num(f64),
    Ident(String, Pos),
    Call(String, Box<Ast>, Pos),
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    depth: usize,
}

const MAX_DEPTH: usize = 256;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn enter(&mut self) -> Result<(), ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ExprError::syntax(self.pos(), "expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Ast, ExprError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.next();
            let rhs = self.term()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Ast, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.next();
            let rhs = self.unary()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ast, ExprError> {
        match self.peek() {
            Tok::Minus => {
                self.enter()?;
                self.next();
                let inner = self.unary()?;
                self.depth -= 1;
                Ok(Ast::Neg(Box::new(inner)))
            }
            Tok::Plus => {
                self.enter()?;
                self.next();
                let inner = self.unary();
                self.depth -= 1;
                inner
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Ast, ExprError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.next();
        let (tok, pos) = self.next();
        let exponent = match tok {
            Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 && v <= 1024.0 => v as u32,
            Tok::Num(_) | Tok::Minus => {
                return Err(ExprError::syntax(pos, "exponent must be a non-negative integer literal"))
            }
            _ => return Err(ExprError::syntax(pos, "expected integer exponent after '^'")),
        };
        if *self.peek() == Tok::Caret {
            return Err(ExprError::syntax(self.pos(), "chained '^' needs parentheses"));
        }
        Ok(Ast::Pow(Box::new(base), exponent))
    }

    fn atom(&mut self) -> Result<Ast, ExprError> {
        let (tok, pos) = self.next();
        match tok {
            Tok::Num(v) => Ok(Ast::Num(v)),
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.next();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Ast::Call(name, Box::new(arg), pos))
                } else {
                    Ok(Ast::Ident(name, pos))
                }
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::End => Err(ExprError::syntax(pos, "unexpected end of expression")),
            other => Err(ExprError::syntax(pos, format!("unexpected token {other:?}"))),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        let (tok, pos) = self.next();
        if tok == Tok::RParen {
            Ok(())
        } else {
            Err(ExprError::syntax(pos, "expected ')'"))
        }
    }
}

/// Parses `text` into an untyped syntax tree.
pub fn parse_ast(text: &str) -> Result<Ast, ExprError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, at: 0, depth: 0 };
    let ast = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(ExprError::syntax(p.pos(), "trailing input"));
    }
    Ok(ast)
}

/// Resolves identifiers against `vars` (positional) and the constant `pi`.
pub fn lower_real(ast: &Ast, vars: &[&str]) -> Result<Expr, ExprError> {
    Ok(match ast {
        Ast::Num(v) => Expr::Const(*v),
        Ast::Ident(name, pos) => match vars.iter().position(|v| v == name) {
            Some(i) => Expr::Var(i),
            None if name == "pi" => Expr::Const(std::f64::consts::PI),
            None => {
                return Err(ExprError::unknown(
                    *pos,
                    format!("unknown variable '{name}' (expected one of {vars:?})"),
                ))
            }
        },
        Ast::Call(name, arg, pos) => {
            let func = match name.as_str() {
                "sin" => Func::Sin,
                "cos" => Func::Cos,
                "exp" => Func::Exp,
                "sqrt" => Func::Sqrt,
                _ => return Err(ExprError::unknown(*pos, format!("unknown function '{name}'"))),
            };
            Expr::func(func, lower_real(arg, vars)?)
        }
        Ast::Neg(a) => Expr::neg(lower_real(a, vars)?),
        Ast::Bin(op, a, b) => {
            let (a, b) = (lower_real(a, vars)?, lower_real(b, vars)?);
            match op {
                BinOp::Add => Expr::add(a, b),
                BinOp::Sub => Expr::sub(a, b),
                BinOp::Mul => Expr::mul(a, b),
                BinOp::Div => Expr::div(a, b),
            }
        }
        Ast::Pow(a, n) => Expr::pow(lower_real(a, vars)?, *n),
    })
}

/// Expands a polynomial-rational expression in the complex variable `z`
/// (with `i`, `conj(...)` and `pi`) into real and imaginary parts over the
/// real coordinates `x1 = Re z` (var 0) and `x2 = Im z` (var 1).
pub fn lower_complex(ast: &Ast) -> Result<ComplexPair, ExprError> {
    Ok(match ast {
        Ast::Num(v) => ComplexPair::real(Expr::Const(*v)),
        Ast::Ident(name, pos) => match name.as_str() {
            "z" => ComplexPair { re: Expr::Var(0), im: Expr::Var(1) },
            "i" => ComplexPair { re: Expr::zero(), im: Expr::one() },
            "pi" => ComplexPair::real(Expr::Const(std::f64::consts::PI)),
            _ => return Err(ExprError::unknown(*pos, format!("unknown complex symbol '{name}'"))),
        },
        Ast::Call(name, arg, pos) => match name.as_str() {
            "conj" => lower_complex(arg)?.conj(),
            _ => {
                return Err(ExprError::unknown(
                    *pos,
                    format!("function '{name}' is not available in complex expressions"),
                ))
            }
        },
        Ast::Neg(a) => lower_complex(a)?.neg(),
        Ast::Bin(op, a, b) => {
            let (a, b) = (lower_complex(a)?, lower_complex(b)?);
            match op {
                BinOp::Add => a.add(&b),
                BinOp::Sub => a.sub(&b),
                BinOp::Mul => a.mul(&b),
                BinOp::Div => a.div(&b),
            }
        }
        Ast::Pow(a, n) => lower_complex(a)?.powi(*n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_unary_minus() {
        let e = lower_real(&parse_ast("-x^2 + 3*x").unwrap(), &["x"]).unwrap();
        assert_eq!(e.eval(&[2.0]), -4.0 + 6.0);
        let e = lower_real(&parse_ast("2*(x - 1)/4").unwrap(), &["x"]).unwrap();
        assert_eq!(e.eval(&[3.0]), 1.0);
    }

    #[test]
    fn unknown_symbol_reports_position() {
        let err = lower_real(&parse_ast("x1 +\n  y").unwrap(), &["x1"]).unwrap_err();
        assert_eq!(err.kind, ExprErrorKind::UnknownSymbol);
        assert_eq!(err.pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn syntax_errors() {
        for bad in ["", "x +", "(x", "x^-1", "x^1.5", "x ^ 2 ^ 2", "x $ 2", "1..2", "x y"] {
            let err = parse_ast(bad).unwrap_err();
            assert_eq!(err.kind, ExprErrorKind::Syntax, "{bad}");
        }
    }

    #[test]
    fn deep_nesting_is_rejected_not_overflowed() {
        let text = "(".repeat(10_000) + "x" + &")".repeat(10_000);
        assert!(parse_ast(&text).is_err());
        let text = "-".repeat(10_000) + "x";
        assert!(parse_ast(&text).is_err());
    }

    #[test]
    fn complex_square_expands() {
        let pair = lower_complex(&parse_ast("z^2").unwrap()).unwrap();
        // (x + iy)^2 = x^2 - y^2 + 2ixy
        assert_eq!(pair.re.eval(&[3.0, 2.0]), 5.0);
        assert_eq!(pair.im.eval(&[3.0, 2.0]), 12.0);
        let conj = lower_complex(&parse_ast("conj(z)^3").unwrap()).unwrap();
        // conj(1+i)^3 = (1-i)^3 = -2 - 2i
        assert!((conj.re.eval(&[1.0, 1.0]) + 2.0).abs() < 1e-12);
        assert!((conj.im.eval(&[1.0, 1.0]) + 2.0).abs() < 1e-12);
    }
}

//! Smooth scalar expressions in a fixed list of real variables.
//!
//! Expressions are immutable trees built through simplifying constructors, so
//! symbolic derivatives stay small. [`Tape`] is the compiled postfix form used
//! on hot paths (Newton iterations, sampling).

mod parse;
mod tape;

use std::fmt;

pub use parse::{lower_complex, lower_real, parse_ast, Ast, ExprError, ExprErrorKind, Pos};
pub use tape::Tape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Func(Func, Box<Expr>),
}

/// A value that must stay away from zero (`NonZero`) or strictly positive
/// (`Positive`) for the expression to be smooth.
#[derive(Debug, Clone, PartialEq)]
pub enum Guard {
    NonZero(Expr),
    Positive(Expr),
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(v) => Expr::Const(-v),
            Expr::Neg(inner) => *inner,
            a => Expr::Neg(Box::new(a)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), None) if x == 0.0 => b,
            (None, Some(y)) if y == 0.0 => a,
            _ => match b {
                Expr::Neg(nb) => Expr::Sub(Box::new(a), nb),
                b => Expr::Add(Box::new(a), Box::new(b)),
            },
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(x), None) if x == 0.0 => Expr::neg(b),
            (None, Some(y)) if y == 0.0 => a,
            _ => match b {
                Expr::Neg(nb) => Expr::Add(Box::new(a), nb),
                b => Expr::Sub(Box::new(a), Box::new(b)),
            },
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 0.0 => Expr::zero(),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            // keep constants on the left
            (None, Some(_)) => Expr::Mul(Box::new(b), Box::new(a)),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, n: u32) -> Expr {
        match (n, a.as_const()) {
            (0, _) => Expr::one(),
            (1, _) => a,
            (_, Some(v)) => Expr::Const(v.powi(n as i32)),
            _ => Expr::Pow(Box::new(a), n),
        }
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        match a.as_const() {
            Some(v) if !(f == Func::Sqrt && v <= 0.0) => Expr::Const(f.apply(v)),
            _ => Expr::Func(f, Box::new(a)),
        }
    }

    /// Tree-walking evaluation. Prefer [`Tape`] in loops.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, n) => a.eval(x).powi(*n as i32),
            Expr::Func(f, a) => f.apply(a.eval(x)),
        }
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.derivative(var)),
            Expr::Add(a, b) => Expr::add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => Expr::sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.derivative(var), (**b).clone()),
                Expr::mul((**a).clone(), b.derivative(var)),
            ),
            Expr::Div(a, b) => {
                let num = Expr::sub(
                    Expr::mul(a.derivative(var), (**b).clone()),
                    Expr::mul((**a).clone(), b.derivative(var)),
                );
                Expr::div(num, Expr::pow((**b).clone(), 2))
            }
            Expr::Pow(a, n) => Expr::mul(
                Expr::mul(Expr::Const(*n as f64), Expr::pow((**a).clone(), n - 1)),
                a.derivative(var),
            ),
            Expr::Func(f, a) => {
                let inner = a.derivative(var);
                if inner.as_const() == Some(0.0) {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Sin => Expr::func(Func::Cos, (**a).clone()),
                    Func::Cos => Expr::neg(Expr::func(Func::Sin, (**a).clone())),
                    Func::Exp => self.clone(),
                    Func::Sqrt => Expr::div(Expr::Const(0.5), self.clone()),
                };
                Expr::mul(outer, inner)
            }
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
        }
    }

    /// Sub-expressions that must avoid zero / stay positive for smoothness.
    pub fn guards(&self) -> Vec<Guard> {
        let mut out = Vec::new();
        self.collect_guards(&mut out);
        out
    }

    fn collect_guards(&self, out: &mut Vec<Guard>) {
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_guards(out),
            Expr::Func(f, a) => {
                if *f == Func::Sqrt {
                    out.push(Guard::Positive((**a).clone()));
                }
                a.collect_guards(out);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_guards(out);
                b.collect_guards(out);
            }
            Expr::Div(a, b) => {
                out.push(Guard::NonZero((**b).clone()));
                a.collect_guards(out);
                b.collect_guards(out);
            }
        }
    }

    /// Renders the expression with the given variable names; the output
    /// parses back to an equal value.
    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        Rendered { expr: self, names }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }
}

struct Rendered<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl Rendered<'_> {
    fn child<'b>(&'b self, e: &'b Expr) -> Rendered<'b> {
        Rendered { expr: e, names: self.names }
    }

    fn wrapped(&self, f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
        if e.precedence() < min_prec {
            write!(f, "({})", self.child(e))
        } else {
            write!(f, "{}", self.child(e))
        }
    }
}

impl fmt::Display for Rendered<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expr::Const(v) => {
                if v.is_finite() {
                    write!(f, "{v:?}")
                } else if *v > 0.0 {
                    write!(f, "1e999")
                } else {
                    write!(f, "(-1e999)")
                }
            }
            Expr::Var(i) => match self.names.get(*i) {
                Some(n) => write!(f, "{n}"),
                None => write!(f, "x{}", i + 1),
            },
            Expr::Neg(a) => {
                write!(f, "-")?;
                self.wrapped(f, a, 4)
            }
            Expr::Add(a, b) => {
                self.wrapped(f, a, 1)?;
                write!(f, " + ")?;
                self.wrapped(f, b, 2)
            }
            Expr::Sub(a, b) => {
                self.wrapped(f, a, 1)?;
                write!(f, " - ")?;
                self.wrapped(f, b, 2)
            }
            Expr::Mul(a, b) => {
                self.wrapped(f, a, 2)?;
                write!(f, "*")?;
                self.wrapped(f, b, 3)
            }
            Expr::Div(a, b) => {
                self.wrapped(f, a, 2)?;
                write!(f, "/")?;
                self.wrapped(f, b, 3)
            }
            Expr::Pow(a, n) => {
                self.wrapped(f, a, 5)?;
                write!(f, "^{n}")
            }
            Expr::Func(func, a) => write!(f, "{}({})", func.name(), self.child(a)),
        }
    }
}

/// Real and imaginary parts of a complex expression in `z = x1 + i x2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPair {
    pub re: Expr,
    pub im: Expr,
}

impl ComplexPair {
    pub fn real(re: Expr) -> Self {
        ComplexPair { re, im: Expr::zero() }
    }

    pub fn conj(self) -> Self {
        ComplexPair { re: self.re, im: Expr::neg(self.im) }
    }

    pub fn neg(self) -> Self {
        ComplexPair { re: Expr::neg(self.re), im: Expr::neg(self.im) }
    }

    pub fn add(&self, o: &Self) -> Self {
        ComplexPair {
            re: Expr::add(self.re.clone(), o.re.clone()),
            im: Expr::add(self.im.clone(), o.im.clone()),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        ComplexPair {
            re: Expr::sub(self.re.clone(), o.re.clone()),
            im: Expr::sub(self.im.clone(), o.im.clone()),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (a, b, c, d) = (&self.re, &self.im, &o.re, &o.im);
        ComplexPair {
            re: Expr::sub(Expr::mul(a.clone(), c.clone()), Expr::mul(b.clone(), d.clone())),
            im: Expr::add(Expr::mul(a.clone(), d.clone()), Expr::mul(b.clone(), c.clone())),
        }
    }

    pub fn div(&self, o: &Self) -> Self {
        let (a, b, c, d) = (&self.re, &self.im, &o.re, &o.im);
        let den = Expr::add(Expr::pow(c.clone(), 2), Expr::pow(d.clone(), 2));
        ComplexPair {
            re: Expr::div(
                Expr::add(Expr::mul(a.clone(), c.clone()), Expr::mul(b.clone(), d.clone())),
                den.clone(),
            ),
            im: Expr::div(
                Expr::sub(Expr::mul(b.clone(), c.clone()), Expr::mul(a.clone(), d.clone())),
                den,
            ),
        }
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = ComplexPair::real(Expr::one());
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }
}

/// Parses a real expression over `vars`.
pub fn parse_real(text: &str, vars: &[&str]) -> Result<Expr, ExprError> {
    lower_real(&parse_ast(text)?, vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn derivative_of_product_and_quotient() {
        let e = parse_real("x1^3*sin(x2) / (1 + x1^2)", &["x1", "x2"]).unwrap();
        let p = [0.7, -1.3];
        let h = 1e-6;
        for var in 0..2 {
            let mut lo = p;
            let mut hi = p;
            lo[var] -= h;
            hi[var] += h;
            let fd = (e.eval(&hi) - e.eval(&lo)) / (2.0 * h);
            let sym = e.derivative(var).eval(&p);
            assert!((fd - sym).abs() < 1e-8, "var {var}: {fd} vs {sym}");
        }
    }

    #[test]
    fn guards_collect_denominators_and_roots() {
        let e = parse_real("1/x1 + sqrt(x2)", &["x1", "x2"]).unwrap();
        let g = e.guards();
        assert_eq!(g.len(), 2);
        assert!(matches!(g[0], Guard::NonZero(Expr::Var(0))));
        assert!(matches!(g[1], Guard::Positive(Expr::Var(1))));
    }

    #[test]
    fn constants_fold() {
        let e = parse_real("2*3 + 0*x1 + pi - pi", &["x1"]).unwrap();
        assert_eq!(e, Expr::Const(6.0));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-5.0f64..5.0).prop_map(Expr::Const),
            (0usize..2).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Expr::neg),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
                (inner.clone(), 0u32..3).prop_map(|(a, n)| Expr::pow(a, n)),
                inner.clone().prop_map(|a| Expr::func(Func::Sin, a)),
                inner.prop_map(|a| Expr::func(Func::Cos, a)),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_round_trips(e in arb_expr(), x1 in -2.0f64..2.0, x2 in -2.0f64..2.0) {
            let n = names(2);
            let text = e.display(&n).to_string();
            let back = parse_real(&text, &["x1", "x2"]).unwrap();
            let (a, b) = (e.eval(&[x1, x2]), back.eval(&[x1, x2]));
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{} -> {} vs {}", text, a, b);
        }

        #[test]
        fn tape_matches_tree(e in arb_expr(), x1 in -2.0f64..2.0, x2 in -2.0f64..2.0) {
            let tape = Tape::compile(&e);
            let (a, b) = (e.eval(&[x1, x2]), tape.eval(&[x1, x2]));
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}

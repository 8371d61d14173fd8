use super::{Expr, Func};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(u32),
    Func(Func),
}

/// Postfix program equivalent to an [`Expr`], evaluated on a small stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    ops: Vec<Op>,
    depth: usize,
}

impl Tape {
    pub fn compile(expr: &Expr) -> Tape {
        let mut ops = Vec::new();
        let depth = emit(expr, &mut ops);
        Tape { ops, depth }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut buf = [0.0f64; 32];
        if self.depth <= buf.len() {
            self.run(x, &mut buf)
        } else {
            let mut heap = vec![0.0; self.depth];
            self.run(x, &mut heap)
        }
    }

    fn run(&self, x: &[f64], stack: &mut [f64]) -> f64 {
        let mut sp = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(v) => {
                    stack[sp] = v;
                    sp += 1;
                }
                Op::Var(i) => {
                    stack[sp] = x[i];
                    sp += 1;
                }
                Op::Neg => stack[sp - 1] = -stack[sp - 1],
                Op::Pow(n) => stack[sp - 1] = stack[sp - 1].powi(n as i32),
                Op::Func(f) => stack[sp - 1] = f.apply(stack[sp - 1]),
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    sp -= 1;
                    let (a, b) = (stack[sp - 1], stack[sp]);
                    stack[sp - 1] = match *op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        _ => a / b,
                    };
                }
            }
        }
        stack[0]
    }
}

/// Appends postfix ops for `e`; returns the stack depth it needs.
fn emit(e: &Expr, ops: &mut Vec<Op>) -> usize {
    match e {
        Expr::Const(v) => {
            ops.push(Op::Const(*v));
            1
        }
        Expr::Var(i) => {
            ops.push(Op::Var(*i));
            1
        }
        Expr::Neg(a) => {
            let d = emit(a, ops);
            ops.push(Op::Neg);
            d
        }
        Expr::Pow(a, n) => {
            let d = emit(a, ops);
            ops.push(Op::Pow(*n));
            d
        }
        Expr::Func(f, a) => {
            let d = emit(a, ops);
            ops.push(Op::Func(*f));
            d
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            let da = emit(a, ops);
            let db = emit(b, ops);
            ops.push(match e {
                Expr::Add(..) => Op::Add,
                Expr::Sub(..) => Op::Sub,
                Expr::Mul(..) => Op::Mul,
                _ => Op::Div,
            });
            da.max(db + 1)
        }
    }
}

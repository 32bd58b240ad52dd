//! Flattened expression programs with shared subresults.
//!
//! A [`Tape`] is a straight-line program: each slot is computed from earlier
//! slots. Several expressions can be emitted into one tape and chained (the
//! output slots of one become the variables of the next), which is how
//! compositions like `L(f(x, u))` avoid re-evaluating `f`.

use super::{Expr, Func, Scalar, Var};
use crate::interval::Interval;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const {
        value: f64,
        exact: bool,
        enclosure: Interval,
    },
    Input(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, i32),
    Call(Func, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    ops: Vec<Op>,
    inputs: usize,
}

/// Scratch buffers for [`Tape::gradient`].
#[derive(Debug, Default)]
pub struct GradScratch {
    re: Vec<Interval>,
    du: Vec<Interval>,
}

impl Tape {
    /// A tape with `inputs` leading input slots `0..inputs`.
    pub fn new(inputs: usize) -> Self {
        Self {
            ops: (0..inputs).map(Op::Input).collect(),
            inputs,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    fn push(&mut self, op: Op) -> usize {
        self.ops.push(op);
        self.ops.len() - 1
    }

    /// Emits `e` with state variable `i` read from slot `x[i]` and control
    /// `j` from slot `u[j]`; returns the result slot.
    pub fn emit(&mut self, e: &Expr, x: &[usize], u: &[usize]) -> usize {
        match e {
            Expr::Const { value, exact } => self.push(Op::Const {
                value: *value,
                exact: *exact,
                enclosure: Interval::from_constant(*value, *exact),
            }),
            Expr::Var(Var::State(i)) => x[*i],
            Expr::Var(Var::Control(j)) => u[*j],
            Expr::Neg(a) => {
                let a = self.emit(a, x, u);
                self.push(Op::Neg(a))
            }
            Expr::Add(a, b) => self.binary(a, b, x, u, Op::Add),
            Expr::Sub(a, b) => self.binary(a, b, x, u, Op::Sub),
            Expr::Mul(a, b) => self.binary(a, b, x, u, Op::Mul),
            Expr::Div(a, b) => self.binary(a, b, x, u, Op::Div),
            Expr::Pow(a, k) => {
                let a = self.emit(a, x, u);
                self.push(Op::Pow(a, *k))
            }
            Expr::Call(f, a) => {
                let a = self.emit(a, x, u);
                self.push(Op::Call(*f, a))
            }
        }
    }

    fn binary(
        &mut self,
        a: &Expr,
        b: &Expr,
        x: &[usize],
        u: &[usize],
        op: fn(usize, usize) -> Op,
    ) -> usize {
        let a = self.emit(a, x, u);
        let b = self.emit(b, x, u);
        self.push(op(a, b))
    }

    pub fn add(&mut self, a: usize, b: usize) -> usize {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: usize, b: usize) -> usize {
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: usize, b: usize) -> usize {
        self.push(Op::Mul(a, b))
    }

    /// Evaluates every slot; `buf[k]` holds slot `k` afterwards.
    pub fn eval_into<S: Scalar>(&self, inputs: &[S], buf: &mut Vec<S>) {
        assert_eq!(inputs.len(), self.inputs, "tape input count");
        buf.clear();
        buf.extend_from_slice(inputs);
        for op in &self.ops[self.inputs..] {
            let v = match *op {
                Op::Const { value, exact, .. } => S::constant(value, exact),
                Op::Input(i) => inputs[i].clone(),
                Op::Neg(a) => -buf[a].clone(),
                Op::Add(a, b) => buf[a].clone() + buf[b].clone(),
                Op::Sub(a, b) => buf[a].clone() - buf[b].clone(),
                Op::Mul(a, b) => buf[a].clone() * buf[b].clone(),
                Op::Div(a, b) => buf[a].clone() / buf[b].clone(),
                Op::Pow(a, k) => buf[a].powi(k),
                Op::Call(f, a) => call(f, &buf[a]),
            };
            buf.push(v);
        }
    }

    /// Interval values of all slots and enclosures of their partial
    /// derivatives with respect to the inputs flagged in `active`, in one
    /// forward pass. Returns the number of active inputs `k`; the derivative
    /// of slot `s` along the `j`-th active input is `du[s * k + j]`.
    pub fn gradient<'a>(
        &self,
        inputs: &[Interval],
        active: &[bool],
        scratch: &'a mut GradScratch,
    ) -> (usize, &'a [Interval], &'a [Interval]) {
        assert_eq!(inputs.len(), self.inputs, "tape input count");
        let k = active.iter().filter(|&&a| a).count();
        let zero = Interval::point(0.0);
        let GradScratch { re, du } = scratch;
        re.clear();
        du.clear();
        du.resize(self.ops.len() * k, zero);
        let mut j = 0;
        for (i, &v) in inputs.iter().enumerate() {
            re.push(v);
            if active[i] {
                du[i * k + j] = Interval::point(1.0);
                j += 1;
            }
        }
        for (slot, op) in self.ops.iter().enumerate().skip(self.inputs) {
            let (out, rest) = du.split_at_mut(slot * k);
            let d = &mut rest[..k];
            let row = |s: usize| &out[s * k..s * k + k];
            let v = match *op {
                Op::Const { enclosure, .. } => enclosure,
                Op::Input(i) => {
                    d.copy_from_slice(row(i));
                    re[i]
                }
                Op::Neg(a) => {
                    for (t, &s) in d.iter_mut().zip(row(a)) {
                        *t = -s;
                    }
                    -re[a]
                }
                Op::Add(a, b) => {
                    for ((t, &x), &y) in d.iter_mut().zip(row(a)).zip(row(b)) {
                        *t = x + y;
                    }
                    re[a] + re[b]
                }
                Op::Sub(a, b) => {
                    for ((t, &x), &y) in d.iter_mut().zip(row(a)).zip(row(b)) {
                        *t = x - y;
                    }
                    re[a] - re[b]
                }
                Op::Mul(a, b) => {
                    let (ra, rb) = (re[a], re[b]);
                    for ((t, &x), &y) in d.iter_mut().zip(row(a)).zip(row(b)) {
                        *t = x * rb + ra * y;
                    }
                    ra * rb
                }
                Op::Div(a, b) => {
                    let q = re[a] / re[b];
                    for ((t, &x), &y) in d.iter_mut().zip(row(a)).zip(row(b)) {
                        *t = (x - q * y) / re[b];
                    }
                    q
                }
                Op::Pow(a, p) => {
                    let ra = re[a];
                    let scale = if p == 0 {
                        zero
                    } else {
                        Interval::from_constant(p as f64, true) * ra.powi(p - 1)
                    };
                    for (t, &x) in d.iter_mut().zip(row(a)) {
                        *t = scale * x;
                    }
                    ra.powi(p)
                }
                Op::Call(f, a) => {
                    let ra = re[a];
                    let scale = match f {
                        Func::Sin => ra.cos(),
                        Func::Cos => -ra.sin(),
                        Func::Exp => ra.exp(),
                        Func::Sqr => Interval::point(2.0) * ra,
                        Func::Abs => Scalar::signum(&ra),
                    };
                    for (t, &x) in d.iter_mut().zip(row(a)) {
                        *t = scale * x;
                    }
                    call(f, &ra)
                }
            };
            re.push(v);
        }
        (k, re, du)
    }
}

fn call<S: Scalar>(f: Func, v: &S) -> S {
    match f {
        Func::Sin => v.sin(),
        Func::Cos => v.cos(),
        Func::Exp => v.exp(),
        Func::Sqr => v.sqr(),
        Func::Abs => v.abs(),
    }
}

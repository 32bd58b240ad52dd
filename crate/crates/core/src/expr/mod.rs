//! Scalar expressions over state variables `x1..xn` and controls `u1..um`.
//!
//! The same tree evaluates over reals, intervals (natural inclusion form)
//! and dual numbers (forward-mode derivatives).

mod parse;
mod scalar;
mod tape;

use std::fmt;

use thiserror::Error;

use crate::interval::{BoxVec, Interval};

pub use parse::parse;
pub use scalar::{Dual, Scalar};
pub use tape::{GradScratch, Tape};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown identifier '{name}' at line {line}, column {column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("{name} out of range")]
    VariableOutOfRange { name: String },
    #[error("empty expression")]
    Empty,
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("domain error: expression is not finite at the given point")]
    Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    State(usize),
    Control(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqr,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqr => "sqr",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqr" => Func::Sqr,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Literal value; `exact` records whether the source text was representable.
    Const {
        value: f64,
        exact: bool,
    },
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Const { value, exact: true }
    }

    pub fn state(i: usize) -> Self {
        Expr::Var(Var::State(i))
    }

    pub fn control(i: usize) -> Self {
        Expr::Var(Var::Control(i))
    }

    pub fn pow(self, k: i32) -> Self {
        Expr::Pow(Box::new(self), k)
    }

    pub fn add(self, rhs: Expr) -> Self {
        Expr::Add(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: Expr) -> Self {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }

    /// Evaluates over any [`Scalar`] domain.
    pub fn eval<S: Scalar>(&self, x: &[S], u: &[S]) -> S {
        match self {
            Expr::Const { value, exact } => S::constant(*value, *exact),
            Expr::Var(Var::State(i)) => x[*i].clone(),
            Expr::Var(Var::Control(i)) => u[*i].clone(),
            Expr::Neg(a) => -a.eval(x, u),
            Expr::Add(a, b) => a.eval(x, u) + b.eval(x, u),
            Expr::Sub(a, b) => a.eval(x, u) - b.eval(x, u),
            Expr::Mul(a, b) => a.eval(x, u) * b.eval(x, u),
            Expr::Div(a, b) => a.eval(x, u) / b.eval(x, u),
            Expr::Pow(a, k) => a.eval(x, u).powi(*k),
            Expr::Call(f, a) => {
                let v = a.eval(x, u);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Sqr => v.sqr(),
                    Func::Abs => v.abs(),
                }
            }
        }
    }

    /// Real evaluation; non-finite results are reported as domain errors.
    pub fn eval_real(&self, x: &[f64], u: &[f64]) -> Result<f64, ExprError> {
        let v = self.eval(x, u);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain)
        }
    }

    /// Natural-form inclusion over a state-control box `w = [x] × [u]`.
    pub fn eval_interval(&self, w: &BoxVec, n: usize) -> Interval {
        let (x, u) = w.dims().split_at(n);
        self.eval(x, u)
    }

    /// Gradients with respect to `x` and `u` at the origin, by forward-mode
    /// dual evaluation (one pass per variable).
    pub fn linearize(&self, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
        self.gradient_at(&vec![0.0; n], &vec![0.0; m])
    }

    pub fn gradient_at(&self, x: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (n, m) = (x.len(), u.len());
        let grads: Vec<f64> = (0..n + m)
            .map(|k| {
                let xs: Vec<Dual<f64>> = x
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| seed(v, i == k))
                    .collect();
                let us: Vec<Dual<f64>> = u
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| seed(v, n + j == k))
                    .collect();
                self.eval(&xs, &us).du
            })
            .collect();
        let (gx, gu) = grads.split_at(n);
        (gx.to_vec(), gu.to_vec())
    }

    /// Largest state index referenced plus one, and likewise for controls.
    pub fn arity(&self) -> (usize, usize) {
        let mut acc = (0, 0);
        self.visit_vars(&mut |v| match v {
            Var::State(i) => acc.0 = acc.0.max(i + 1),
            Var::Control(j) => acc.1 = acc.1.max(j + 1),
        });
        acc
    }

    fn visit_vars(&self, f: &mut impl FnMut(Var)) {
        match self {
            Expr::Const { .. } => {}
            Expr::Var(v) => f(*v),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.visit_vars(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const { value, .. } if *value < 0.0 => 3,
            _ => 5,
        }
    }
}

fn seed(v: f64, active: bool) -> Dual<f64> {
    if active {
        Dual::variable(v)
    } else {
        Dual::constant_of(v)
    }
}

struct Wrapped<'a>(&'a Expr, bool);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.precedence();
        match self {
            Expr::Const { value, .. } => write!(f, "{value:?}"),
            Expr::Var(Var::State(i)) => write!(f, "x{}", i + 1),
            Expr::Var(Var::Control(j)) => write!(f, "u{}", j + 1),
            Expr::Neg(a) => write!(f, "-{}", Wrapped(a, a.precedence() < p)),
            Expr::Add(a, b) => write!(
                f,
                "{} + {}",
                Wrapped(a, a.precedence() < p),
                Wrapped(b, b.precedence() <= p)
            ),
            Expr::Sub(a, b) => write!(
                f,
                "{} - {}",
                Wrapped(a, a.precedence() < p),
                Wrapped(b, b.precedence() <= p)
            ),
            Expr::Mul(a, b) => write!(
                f,
                "{}*{}",
                Wrapped(a, a.precedence() < p),
                Wrapped(b, b.precedence() <= p)
            ),
            Expr::Div(a, b) => write!(
                f,
                "{}/{}",
                Wrapped(a, a.precedence() < p),
                Wrapped(b, b.precedence() <= p)
            ),
            Expr::Pow(a, k) => write!(f, "{}^{}", Wrapped(a, a.precedence() <= p), k),
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}

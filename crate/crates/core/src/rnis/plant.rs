use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::RnisError;
use crate::expr::Expr;
use crate::interval::{BoxVec, Interval};

/// Uncertain plant set `x+ = f̂(x,u) + e`, `|e_i| ≤ δ_i(x,u)`, restricted to
/// the state-control box `w_cons`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantSet {
    fhat: Vec<Expr>,
    delta: Vec<Expr>,
    n: usize,
    m: usize,
    w_cons: BoxVec,
    alpha: f64,
}

impl PlantSet {
    /// Checks dimensions, `f̂(0,0) = 0`, `δ(0,0) = 0`, `alpha > 0` and that the
    /// origin lies in `w_cons`.
    pub fn new(
        fhat: Vec<Expr>,
        delta: Vec<Expr>,
        n: usize,
        m: usize,
        w_cons: BoxVec,
        alpha: f64,
    ) -> Result<Self, RnisError> {
        if fhat.len() != n || delta.len() != n {
            return Err(RnisError::Plant(format!(
                "expected {n} nominal and {n} bound expressions, got {} and {}",
                fhat.len(),
                delta.len()
            )));
        }
        if w_cons.dim() != n + m {
            return Err(RnisError::Plant(format!(
                "constraint box has dimension {}, expected {}",
                w_cons.dim(),
                n + m
            )));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(RnisError::Plant(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        for e in fhat.iter().chain(&delta) {
            let (a, b) = e.arity();
            if a > n || b > m {
                return Err(RnisError::Plant(format!(
                    "expression '{e}' uses undeclared variables"
                )));
            }
        }
        if !w_cons.contains_point(&vec![0.0; n + m]) {
            return Err(RnisError::Plant(
                "constraint box must contain the origin".into(),
            ));
        }
        let (zx, zu) = (vec![0.0; n], vec![0.0; m]);
        for (i, e) in fhat.iter().enumerate() {
            let v = e
                .eval_real(&zx, &zu)
                .map_err(|err| RnisError::Plant(err.to_string()))?;
            if v != 0.0 {
                return Err(RnisError::Plant(format!(
                    "fhat{} does not vanish at the origin ({v})",
                    i + 1
                )));
            }
        }
        for (i, e) in delta.iter().enumerate() {
            let v = e
                .eval_real(&zx, &zu)
                .map_err(|err| RnisError::Plant(err.to_string()))?;
            if v != 0.0 {
                return Err(RnisError::Plant(format!(
                    "delta{} does not vanish at the origin ({v})",
                    i + 1
                )));
            }
        }
        Ok(Self {
            fhat,
            delta,
            n,
            m,
            w_cons,
            alpha,
        })
    }

    pub fn fhat(&self) -> &[Expr] {
        &self.fhat
    }

    pub fn delta(&self) -> &[Expr] {
        &self.delta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn w_cons(&self) -> &BoxVec {
        &self.w_cons
    }

    /// State part of the constraint box.
    pub fn state_box(&self) -> BoxVec {
        self.w_cons.head(self.n)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, RnisError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(RnisError::Plant(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        self.alpha = alpha;
        Ok(self)
    }

    /// Nominal successor `f̂(x,u)`.
    pub fn nominal(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        self.fhat.iter().map(|e| e.eval(x, u)).collect()
    }

    /// Error bounds `δ(x,u)`.
    pub fn bound(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        self.delta.iter().map(|e| e.eval(x, u)).collect()
    }

    /// Enclosure of every successor `f̂(x,u) + e`, `(x,u) ∈ w`, `|e| ≤ δ(x,u)`:
    /// the hull of the natural inclusions of `f̂ − δ` and `f̂ + δ`.
    pub fn x_plus(&self, w: &BoxVec) -> BoxVec {
        let (x, u) = w.dims().split_at(self.n);
        BoxVec::new(
            self.fhat
                .iter()
                .zip(&self.delta)
                .map(|(f, d)| {
                    let fi: Interval = f.eval(x, u);
                    let di: Interval = d.eval(x, u);
                    (fi - di).hull(&(fi + di))
                })
                .collect(),
        )
    }
}

/// Candidate Lyapunov function over the state.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovFn {
    expr: Expr,
    n: usize,
}

const POSITIVITY_SAMPLES: usize = 1000;

impl LyapunovFn {
    /// Checks `L(0) = 0` and `L(x) > 0` at random nonzero points of `state_root`.
    pub fn new(expr: Expr, n: usize, state_root: &BoxVec) -> Result<Self, RnisError> {
        let l = Self::unchecked(expr, n)?;
        if state_root.dim() != n {
            return Err(RnisError::Lyapunov(format!(
                "state box has dimension {}, expected {n}",
                state_root.dim()
            )));
        }
        let zero = l.value(&vec![0.0; n]);
        if zero != 0.0 {
            return Err(RnisError::Lyapunov(format!("L(0) = {zero}, expected 0")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut x = vec![0.0; n];
        for _ in 0..POSITIVITY_SAMPLES {
            for (xi, d) in x.iter_mut().zip(state_root.dims()) {
                *xi = if d.width() > 0.0 {
                    rng.gen_range(d.lo()..=d.hi())
                } else {
                    d.lo()
                };
            }
            if x.iter().all(|&v| v == 0.0) {
                continue;
            }
            let v = l.value(&x);
            if !(v > 0.0) {
                return Err(RnisError::Lyapunov(format!(
                    "L is not positive at {x:?} (value {v})"
                )));
            }
        }
        Ok(l)
    }

    /// Skips the sampling check; only validates arity.
    pub fn unchecked(expr: Expr, n: usize) -> Result<Self, RnisError> {
        let (a, b) = expr.arity();
        if a > n || b > 0 {
            return Err(RnisError::Lyapunov(format!(
                "'{expr}' must depend on x1..x{n} only"
            )));
        }
        Ok(Self { expr, n })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.expr.eval(x, &[])
    }

    pub fn eval_box(&self, x: &BoxVec) -> Interval {
        self.expr.eval(x.dims(), &[])
    }
}

//! Sum-of-squares Lyapunov parameterization, measure maximization by
//! particle swarm, and controller extraction.

mod controller;
mod gain;
mod pchip;
mod pso;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::expr::Expr;
use crate::rnis::{rnisevia, LyapunovFn, PlantSet, RnisError, RnisOptions};

pub use controller::{
    extract_controller, extract_verified, verify_controller, ControllerComponent, ControllerSpec,
    VerifyReport,
};
pub use gain::{linear_gain, LinearGain, DEFAULT_CONTRACTION, DEFAULT_POLE};
pub use pchip::Pchip;
pub use pso::{pso_maximize, PsoOptions, PsoResult};

/// Smallest admissible pivot magnitude of `P` in the rank check.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("P not full rank")]
    RankDeficient,
    #[error("P must be {r}x{r} for n = {n}, d = {d}, got {rows}x{cols}")]
    Shape {
        n: usize,
        d: usize,
        r: usize,
        rows: usize,
        cols: usize,
    },
    #[error("Gram matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("linearization at the origin is not controllable")]
    Uncontrollable,
    #[error("no robustly contractive neighborhood")]
    NoContractiveNeighborhood,
    #[error("nothing to fit: empty paving and empty X0")]
    NothingToFit,
    #[error("controller fitting needs a one-dimensional state, got n = {0}")]
    StateDimension(usize),
    #[error("controller file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Rnis(#[from] RnisError),
}

/// Exponent vectors of all monomials of total degree `1..=d` in `n`
/// variables, graded-lexicographic (`x1² ≻ x1x2 ≻ x2²`).
pub fn monomial_exponents(n: usize, d: usize) -> Vec<Vec<u32>> {
    fn fill(rest: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rest == 1 {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=k).rev() {
            prefix.push(e);
            fill(rest - 1, k - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for k in 1..=d as u32 {
        fill(n, k, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

/// `r = C(n + d, d) − 1`.
pub fn basis_len(n: usize, d: usize) -> usize {
    let mut c: usize = 1;
    for i in 1..=d {
        c = c * (n + i) / i;
    }
    c - 1
}

/// `S_d(x)`: the monomials of [`monomial_exponents`] evaluated at `x`.
pub fn monomial_basis(n: usize, d: usize, x: &[f64]) -> Vec<f64> {
    assert!(d >= 1, "degree must be at least 1");
    assert_eq!(x.len(), n, "point dimension");
    monomial_exponents(n, d)
        .iter()
        .map(|e| e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product())
        .collect()
}

/// `L(x) = S_d(x)ᵀ PᵀP S_d(x)` with `P` of size `r × r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSpec {
    pub p: DMatrix<f64>,
    pub n: usize,
    pub d: usize,
}

impl LyapunovSpec {
    pub fn new(p: DMatrix<f64>, n: usize, d: usize) -> Result<Self, SynthError> {
        let r = basis_len(n, d);
        if d == 0 || p.nrows() != r || p.ncols() != r {
            return Err(SynthError::Shape {
                n,
                d,
                r,
                rows: p.nrows(),
                cols: p.ncols(),
            });
        }
        Ok(Self { p, n, d })
    }

    /// Row-major entries.
    pub fn from_entries(entries: &[f64], n: usize, d: usize) -> Result<Self, SynthError> {
        let r = basis_len(n, d);
        if entries.len() != r * r {
            return Err(SynthError::Shape {
                n,
                d,
                r,
                rows: entries.len(),
                cols: 1,
            });
        }
        Self::new(DMatrix::from_row_slice(r, r, entries), n, d)
    }

    /// A `P` with `PᵀP = g`, from the Cholesky factor of `g`.
    pub fn from_gram(g: DMatrix<f64>, n: usize, d: usize) -> Result<Self, SynthError> {
        let chol = g.cholesky().ok_or(SynthError::NotPositiveDefinite)?;
        Self::new(chol.l().transpose(), n, d)
    }

    pub fn r(&self) -> usize {
        self.p.nrows()
    }

    /// Row-major entries.
    pub fn entries(&self) -> Vec<f64> {
        self.p.transpose().iter().copied().collect()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.p.transpose() * &self.p
    }

    /// Smallest pivot of a fully pivoted LU factorization above [`RANK_TOL`].
    pub fn is_full_rank(&self) -> bool {
        let lu = self.p.clone().full_piv_lu();
        let u = lu.u();
        (0..self.r()).all(|i| u[(i, i)].abs() >= RANK_TOL)
    }

    /// Expanded coefficients of `L`, keyed by exponent vector.
    pub fn coefficients(&self) -> BTreeMap<Vec<u32>, f64> {
        let mono = monomial_exponents(self.n, self.d);
        let g = self.gram();
        let mut out: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (i, a) in mono.iter().enumerate() {
            for (j, b) in mono.iter().enumerate() {
                let key: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                *out.entry(key).or_insert(0.0) += g[(i, j)];
            }
        }
        out
    }
}

/// Expands `L` into a polynomial expression, highest degree first.
pub fn lyapunov_from_p(spec: &LyapunovSpec) -> Result<LyapunovFn, SynthError> {
    if !spec.is_full_rank() {
        return Err(SynthError::RankDeficient);
    }
    let mut terms: Vec<(Vec<u32>, f64)> = spec
        .coefficients()
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .collect();
    terms.sort_by(|(a, _), (b, _)| {
        let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
        db.cmp(&da).then_with(|| b.cmp(a))
    });
    let expr = terms
        .into_iter()
        .map(|(e, c)| monomial_term(c, &e))
        .reduce(Expr::add)
        .expect("full-rank P gives a nonzero polynomial");
    Ok(LyapunovFn::unchecked(expr, spec.n)?)
}

fn monomial_term(c: f64, exps: &[u32]) -> Expr {
    exps.iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .fold(Expr::constant(c), |acc, (i, &k)| {
            let v = Expr::state(i);
            acc.mul(if k == 1 { v } else { v.pow(k as i32) })
        })
}

/// Measure of the state projection of the invariant set for the `L`
/// induced by `spec`; 0 for rank-deficient `P` or a failed run.
pub fn measure_objective(p: &PlantSet, spec: &LyapunovSpec, opts: &RnisOptions) -> f64 {
    let Ok(l) = lyapunov_from_p(spec) else {
        return 0.0;
    };
    match rnisevia(p, &l, opts) {
        Ok(out) => out.projection().measure(),
        Err(_) => 0.0,
    }
}

/// Particle swarm over the `r²` entries of `P`, maximizing
/// [`measure_objective`].
pub fn pso_optimize(
    p: &PlantSet,
    d: usize,
    rnis: &RnisOptions,
    pso: &PsoOptions,
    seeds: &[LyapunovSpec],
) -> Result<(LyapunovSpec, PsoResult), SynthError> {
    let n = p.n();
    let r = basis_len(n, d);
    let seeds: Vec<Vec<f64>> = seeds
        .iter()
        .map(|s| {
            if s.n != n || s.d != d {
                return Err(SynthError::Shape {
                    n,
                    d,
                    r,
                    rows: s.r(),
                    cols: s.r(),
                });
            }
            Ok(s.entries())
        })
        .collect::<Result<_, _>>()?;
    let objective = |x: &[f64]| match LyapunovSpec::from_entries(x, n, d) {
        Ok(spec) => measure_objective(p, &spec, rnis),
        Err(_) => 0.0,
    };
    let result = pso_maximize(r * r, pso, &seeds, objective);
    let spec = LyapunovSpec::from_entries(&result.best, n, d)?;
    Ok((spec, result))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeff(spec: &LyapunovSpec, e: &[u32]) -> f64 {
        spec.coefficients().get(e).copied().unwrap_or(0.0)
    }

    #[test]
    fn basis_univariate_quadratic() {
        assert_eq!(monomial_basis(1, 2, &[2.0]), vec![2.0, 4.0]);
        assert_eq!(basis_len(1, 2), 2);
    }

    #[test]
    fn basis_bivariate_linear() {
        assert_eq!(monomial_basis(2, 1, &[3.0, 5.0]), vec![3.0, 5.0]);
        assert_eq!(basis_len(2, 1), 2);
    }

    #[test]
    fn graded_lex_order() {
        let e = monomial_exponents(2, 2);
        assert_eq!(
            e,
            vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        for (n, d) in [(1, 1), (2, 3), (3, 2), (4, 4)] {
            assert_eq!(monomial_exponents(n, d).len(), basis_len(n, d));
        }
        // C(3+2, 2) - 1
        assert_eq!(basis_len(3, 2), 9);
    }

    #[test]
    fn diagonal_p_expands_to_weighted_squares() {
        let spec = LyapunovSpec::from_entries(&[1.0, 0.0, 0.0, 0.01], 1, 2).unwrap();
        let l = lyapunov_from_p(&spec).unwrap();
        for x in [-2.0f64, -0.3, 0.0, 0.7, 1.9] {
            let want = x * x + 1e-4 * x.powi(4);
            assert!((l.value(&[x]) - want).abs() < 1e-12);
        }
        assert_eq!(coeff(&spec, &[3]), 0.0);
    }

    #[test]
    fn identity_gives_sum_of_squared_monomials() {
        let spec = LyapunovSpec::new(DMatrix::identity(5, 5), 2, 2).unwrap();
        let l = lyapunov_from_p(&spec).unwrap();
        let x = [0.6, -1.3];
        let want: f64 = monomial_basis(2, 2, &x).iter().map(|m| m * m).sum();
        assert!((l.value(&x) - want).abs() < 1e-12);
    }

    #[test]
    fn optimum_recovered_from_its_coefficients() {
        let g = DMatrix::from_row_slice(2, 2, &[1.1286, 2.3121 / 2.0, 2.3121 / 2.0, 1.5327]);
        let spec = LyapunovSpec::from_gram(g, 1, 2).unwrap();
        assert!((coeff(&spec, &[2]) - 1.1286).abs() < 1e-3);
        assert!((coeff(&spec, &[3]) - 2.3121).abs() < 1e-3);
        assert!((coeff(&spec, &[4]) - 1.5327).abs() < 1e-3);
        let l = lyapunov_from_p(&spec).unwrap();
        let x = 1.7_f64;
        let want = 1.5327 * x.powi(4) + 2.3121 * x.powi(3) + 1.1286 * x * x;
        assert!((l.value(&[x]) - want).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient_p_is_rejected() {
        let spec = LyapunovSpec::from_entries(&[1.0, 2.0, 2.0, 4.0], 1, 2).unwrap();
        assert_eq!(
            lyapunov_from_p(&spec).unwrap_err().to_string(),
            "P not full rank"
        );
        let tiny = LyapunovSpec::from_entries(&[1.0, 0.0, 0.0, 1e-11], 1, 2).unwrap();
        assert!(!tiny.is_full_rank());
    }

    #[test]
    fn scaling_p_scales_l_quadratically() {
        let spec = LyapunovSpec::from_entries(&[0.3, -1.2, 2.5, 0.8], 1, 2).unwrap();
        let scaled = LyapunovSpec::new(&spec.p * -2.5, 1, 2).unwrap();
        let (a, b) = (spec.coefficients(), scaled.coefficients());
        for (k, v) in &a {
            assert!((b[k] - 6.25 * v).abs() < 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn wrong_shape_is_an_error() {
        assert!(matches!(
            LyapunovSpec::new(DMatrix::identity(3, 3), 1, 2),
            Err(SynthError::Shape { r: 2, .. })
        ));
    }

    #[test]
    fn rank_deficient_objective_is_zero() {
        let p = crate::rnis::fixtures::example_plant();
        let spec = LyapunovSpec::from_entries(&[0.0; 4], 1, 2).unwrap();
        assert_eq!(measure_objective(&p, &spec, &RnisOptions::new(0.05)), 0.0);
    }

    #[test]
    fn nowhere_decreasing_objective_is_zero() {
        let p = crate::rnis::fixtures::plant("2*x1", "0");
        let spec = LyapunovSpec::from_entries(&[1.0, 0.0, 0.0, 0.01], 1, 2).unwrap();
        let opts = RnisOptions::new(0.05);
        assert_eq!(measure_objective(&p, &spec, &opts), 0.0);
    }
}

//! Linear gain at the origin and its verified contraction neighborhood `X₀`.

use nalgebra::{DMatrix, DVector};

use super::SynthError;
use crate::expr::{GradScratch, Tape};
use crate::interval::BoxVec;
use crate::rnis::PlantSet;
use crate::Interval;

/// Closed-loop pole reproducing the gain `u = 1.8649x` on the example plant.
pub const DEFAULT_POLE: f64 = -0.3351;

/// Required sup-norm contraction factor on `X₀`.
pub const DEFAULT_CONTRACTION: f64 = 0.9;

const H_START: f64 = 0.1;
const H_MIN: f64 = 1e-6;
// Inner box half-width relative to `h`, where the Jacobian bound is used.
const INNER_RATIO: f64 = 0.125;
// Shell pieces are refined down to `h / 2^SHELL_DEPTH`.
const SHELL_DEPTH: i32 = 12;
// Largest acceptable residual of the nominal map and error bound at the origin.
const ORIGIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGain {
    /// `m × n`, control law `u = Kx`.
    pub k: DMatrix<f64>,
    /// `[−h, h]ⁿ`.
    pub x0: BoxVec,
}

/// Places the closed-loop eigenvalues of the linearization at `pole` and
/// finds `X₀ = [−h, h]ⁿ`, halving `h` from 0.1, such that every admissible
/// successor under `u = Kx` satisfies `‖x⁺‖∞ ≤ contraction · ‖x‖∞` on `X₀`.
///
/// With several inputs the first one that makes the pair controllable is
/// used (Ackermann's formula); the others get zero gain.
pub fn linear_gain(p: &PlantSet, pole: f64, contraction: f64) -> Result<LinearGain, SynthError> {
    let (n, m) = (p.n(), p.m());
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, m);
    for (i, f) in p.fhat().iter().enumerate() {
        let (gx, gu) = f.linearize(n, m);
        for j in 0..n {
            a[(i, j)] = gx[j];
        }
        for j in 0..m {
            b[(i, j)] = gu[j];
        }
    }
    let k = place(&a, &b, pole)?;
    let cl = ClosedLoop::new(p, &k);
    let mut h = H_START;
    while h >= H_MIN {
        if cl.contracts(h, contraction) {
            let x0 = BoxVec::from_bounds(&vec![(-h, h); n]);
            return Ok(LinearGain { k, x0 });
        }
        h /= 2.0;
    }
    Err(SynthError::NoContractiveNeighborhood)
}

fn place(a: &DMatrix<f64>, b: &DMatrix<f64>, pole: f64) -> Result<DMatrix<f64>, SynthError> {
    let (n, m) = (a.nrows(), b.ncols());
    let mut phi = DMatrix::identity(n, n);
    let shifted = a - DMatrix::identity(n, n) * pole;
    for _ in 0..n {
        phi = &phi * &shifted;
    }
    for j in 0..m {
        let mut ctrb = DMatrix::zeros(n, n);
        let mut col: DVector<f64> = b.column(j).into();
        for i in 0..n {
            ctrb.set_column(i, &col);
            col = a * col;
        }
        let scale = ctrb.amax().max(1.0);
        let lu = ctrb.full_piv_lu();
        if (0..n).any(|i| lu.u()[(i, i)].abs() < 1e-10 * scale) {
            continue;
        }
        let mut last = DVector::zeros(n);
        last[n - 1] = 1.0;
        // row e_nᵀ C⁻¹ φ(A), via C⁻ᵀ e_n
        let y = lu
            .solve(&DMatrix::identity(n, n))
            .expect("checked invertible")
            .transpose()
            * last;
        let row = phi.transpose() * y;
        let mut k = DMatrix::zeros(m, n);
        for c in 0..n {
            k[(j, c)] = -row[c];
        }
        return Ok(k);
    }
    Err(SynthError::Uncontrollable)
}

struct ClosedLoop {
    tape: Tape,
    f: Vec<usize>,
    d: Vec<usize>,
    k: DMatrix<f64>,
    n: usize,
    m: usize,
}

impl ClosedLoop {
    fn new(p: &PlantSet, k: &DMatrix<f64>) -> Self {
        let (n, m) = (p.n(), p.m());
        let mut tape = Tape::new(n + m);
        let x: Vec<usize> = (0..n).collect();
        let u: Vec<usize> = (n..n + m).collect();
        let f = p.fhat().iter().map(|e| tape.emit(e, &x, &u)).collect();
        let d = p.delta().iter().map(|e| tape.emit(e, &x, &u)).collect();
        Self {
            tape,
            f,
            d,
            k: k.clone(),
            n,
            m,
        }
    }

    fn inputs(&self, x: &[Interval]) -> Vec<Interval> {
        let mut w = x.to_vec();
        for l in 0..self.m {
            let u = (0..self.n).fold(Interval::point(0.0), |acc, j| {
                acc + Interval::point(self.k[(l, j)]) * x[j]
            });
            w.push(u);
        }
        w
    }

    // Enclosures of `f̂(x, Kx)` and `δ(x, Kx)` and of their `n × n`
    // closed-loop Jacobians (row-major) over `x`.
    fn eval(&self, x: &[Interval], scratch: &mut GradScratch) -> [Vec<Interval>; 4] {
        let (n, m) = (self.n, self.m);
        let w = self.inputs(x);
        let (k, re, du) = self.tape.gradient(&w, &vec![true; n + m], scratch);
        let jac = |slot: usize| -> Vec<Interval> {
            let g = &du[slot * k..slot * k + k];
            (0..n)
                .map(|j| {
                    (0..m).fold(g[j], |acc, l| {
                        acc + g[n + l] * Interval::point(self.k[(l, j)])
                    })
                })
                .collect()
        };
        let fv = self.f.iter().map(|&s| re[s]).collect();
        let dv = self.d.iter().map(|&s| re[s]).collect();
        let fj = self.f.iter().flat_map(|&s| jac(s)).collect();
        let dj = self.d.iter().flat_map(|&s| jac(s)).collect();
        [fv, dv, fj, dj]
    }

    fn contracts(&self, h: f64, rho: f64) -> bool {
        let n = self.n;
        let mut scratch = GradScratch::default();
        let origin = vec![Interval::point(0.0); n];
        let [f0, d0, _, _] = self.eval(&origin, &mut scratch);
        if f0.iter().chain(&d0).any(|v| v.magnitude() > ORIGIN_TOL) {
            return false;
        }
        // mean-value bound around the origin on the inner box
        let h0 = h * INNER_RATIO;
        let inner = vec![Interval::new(-h0, h0); n];
        let [_, _, fj, dj] = self.eval(&inner, &mut scratch);
        let gain = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| fj[i * n + j].magnitude() + dj[i * n + j].magnitude())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        if !(gain <= rho) {
            return false;
        }
        let min_width = 2.0 * h * 2f64.powi(-SHELL_DEPTH);
        let mut region = vec![Interval::new(-h, h); n];
        self.shell(&mut region, h0, rho, min_width, &mut scratch)
    }

    // Every point of `q` outside the open inner box contracts by `rho`.
    fn shell(
        &self,
        q: &mut [Interval],
        h0: f64,
        rho: f64,
        min_width: f64,
        scratch: &mut GradScratch,
    ) -> bool {
        let inside = q.iter().all(|v| v.lo() >= -h0 && v.hi() <= h0);
        if inside {
            return true;
        }
        let clear = q.iter().any(|v| v.lo() >= h0 || v.hi() <= -h0);
        if clear && self.piece_contracts(q, rho, scratch) {
            return true;
        }
        let axis = (0..q.len())
            .max_by(|&a, &b| q[a].width().total_cmp(&q[b].width()))
            .expect("nonempty box");
        let saved = q[axis];
        if saved.width() < min_width {
            return false;
        }
        let (a, b) = saved.bisect();
        q[axis] = a;
        let ok = self.shell(q, h0, rho, min_width, scratch) && {
            q[axis] = b;
            self.shell(q, h0, rho, min_width, scratch)
        };
        q[axis] = saved;
        ok
    }

    fn piece_contracts(&self, q: &[Interval], rho: f64, scratch: &mut GradScratch) -> bool {
        let n = self.n;
        let center: Vec<Interval> = q.iter().map(|v| Interval::point(v.midpoint())).collect();
        let [fc, dc, _, _] = self.eval(&center, scratch);
        let [fv, dv, fj, dj] = self.eval(q, scratch);
        let norm_lo = q.iter().map(Interval::mignitude).fold(0.0, f64::max);
        (0..n).all(|i| {
            let centered = |c: Interval, jac: &[Interval]| {
                (0..n).fold(c, |acc, j| acc + jac[i * n + j] * (q[j] - center[j]))
            };
            let f = fv[i].intersection(&centered(fc[i], &fj));
            let d = dv[i].intersection(&centered(dc[i], &dj));
            f.magnitude() + d.magnitude() <= rho * norm_lo
        })
    }
}

//! Monte Carlo closed-loop simulation over the uncertain plant set.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::interval::BoxVec;
use crate::paving::Paving;
use crate::rnis::{LyapunovFn, PlantSet};
use crate::synth::ControllerSpec;

/// State feedback; may draw from the trajectory's random stream.
pub trait Controller: Sync {
    fn control(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64>;
}

impl Controller for ControllerSpec {
    fn control(&self, x: &[f64], _rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.eval(x)
    }
}

impl<F: Fn(&[f64]) -> Vec<f64> + Sync> Controller for F {
    fn control(&self, x: &[f64], _rng: &mut ChaCha8Rng) -> Vec<f64> {
        self(x)
    }
}

fn linear(k: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..k.nrows())
        .map(|l| (0..k.ncols()).map(|j| k[(l, j)] * x[j]).sum())
        .collect()
}

/// Draws `u` uniformly from the admissible controls at `x`, i.e. the union
/// of the control ranges of the inner boxes whose state part contains `x`.
/// Falls back to `u = Kx` where nothing is admissible.
pub struct RandomAdmissible<'a> {
    paving: &'a Paving,
    k: DMatrix<f64>,
}

impl<'a> RandomAdmissible<'a> {
    pub fn new(paving: &'a Paving, k: DMatrix<f64>) -> Self {
        Self { paving, k }
    }
}

impl Controller for RandomAdmissible<'_> {
    fn control(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = self.paving.n();
        let column: Vec<BoxVec> = self
            .paving
            .boxes_in()
            .iter()
            .filter(|b| b.dims()[..n].iter().zip(x).all(|(d, &v)| d.contains(v)))
            .map(|b| b.tail(n))
            .collect();
        if column.is_empty() {
            return linear(&self.k, x);
        }
        if self.paving.m() == 1 {
            let mut spans: Vec<(f64, f64)> = column
                .iter()
                .map(|b| (b.dims()[0].lo(), b.dims()[0].hi()))
                .collect();
            spans.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (lo, hi) in spans {
                match merged.last_mut() {
                    Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                    _ => merged.push((lo, hi)),
                }
            }
            let total: f64 = merged.iter().map(|s| s.1 - s.0).sum();
            let mut t = rng.gen_range(0.0..=total);
            for &(lo, hi) in &merged {
                if t <= hi - lo {
                    return vec![lo + t];
                }
                t -= hi - lo;
            }
            return vec![merged[merged.len() - 1].1];
        }
        sample_in(&column, rng)
    }
}

// Uniform point of a union of non-overlapping boxes.
fn sample_in(boxes: &[BoxVec], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let total: f64 = boxes.iter().map(BoxVec::volume).sum();
    let mut t = rng.gen_range(0.0..=total);
    let mut pick = &boxes[boxes.len() - 1];
    for b in boxes {
        if t <= b.volume() {
            pick = b;
            break;
        }
        t -= b.volume();
    }
    pick.dims()
        .iter()
        .map(|d| {
            if d.width() > 0.0 {
                rng.gen_range(d.lo()..=d.hi())
            } else {
                d.lo()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMode {
    /// `e ~ U[−δ, δ]` componentwise.
    #[default]
    Uniform,
    /// `e = ±δ` with random signs.
    Extreme,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub steps: usize,
    pub conv_tol: f64,
    pub errors: ErrorMode,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            steps: 200,
            conv_tol: 0.01,
            errors: ErrorMode::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `x(0), …, x(steps)`.
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub errors: Vec<Vec<f64>>,
    pub converged: bool,
    /// Left the state part of the constraint box.
    pub escaped: bool,
    pub steps: usize,
}

/// Runs `x(k+1) = f̂(x, u) + e` with `u = ctl(x)` until `‖x‖∞ < conv_tol`,
/// the state leaves the constraint box, or `opts.steps` transitions.
pub fn simulate(
    p: &PlantSet,
    ctl: &dyn Controller,
    x0: &[f64],
    opts: &SimOptions,
    seed: u64,
) -> Trajectory {
    simulate_with(p, ctl, x0, opts, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn simulate_with(
    p: &PlantSet,
    ctl: &dyn Controller,
    x0: &[f64],
    opts: &SimOptions,
    rng: &mut ChaCha8Rng,
) -> Trajectory {
    assert_eq!(x0.len(), p.n(), "state dimension");
    let root = p.state_box();
    let mut t = Trajectory {
        states: vec![x0.to_vec()],
        controls: Vec::new(),
        errors: Vec::new(),
        converged: false,
        escaped: false,
        steps: 0,
    };
    let norm = |x: &[f64]| x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut x = x0.to_vec();
    loop {
        if norm(&x) < opts.conv_tol {
            t.converged = true;
            break;
        }
        if !root.contains_point(&x) {
            t.escaped = true;
            break;
        }
        if t.steps == opts.steps {
            break;
        }
        let u = ctl.control(&x, rng);
        let f = p.nominal(&x, &u);
        let d = p.bound(&x, &u);
        let e: Vec<f64> = d
            .iter()
            .map(|&b| {
                let b = b.abs();
                match opts.errors {
                    _ if b == 0.0 => 0.0,
                    ErrorMode::Uniform => rng.gen_range(-b..=b),
                    ErrorMode::Extreme => {
                        if rng.gen::<bool>() {
                            b
                        } else {
                            -b
                        }
                    }
                }
            })
            .collect();
        x = f.iter().zip(&e).map(|(a, b)| a + b).collect();
        t.controls.push(u);
        t.errors.push(e);
        t.states.push(x.clone());
        t.steps += 1;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSummary {
    pub count: usize,
    pub converged: usize,
    pub escaped: usize,
    /// Longest run among the converged ones.
    pub max_steps: usize,
}

impl BatchSummary {
    pub fn converged_fraction(&self) -> f64 {
        self.converged as f64 / self.count as f64
    }

    pub fn escaped_fraction(&self) -> f64 {
        self.escaped as f64 / self.count as f64
    }
}

/// `count` runs from initial states uniform on the union of `region`
/// (boxes picked in proportion to volume). Run `i` uses the random stream
/// seeded by `seed + i` for its initial state, controls and errors.
pub fn batch(
    p: &PlantSet,
    ctl: &dyn Controller,
    region: &[BoxVec],
    count: usize,
    opts: &SimOptions,
    seed: u64,
) -> (Vec<Trajectory>, BatchSummary) {
    assert!(count >= 1, "count must be at least 1");
    assert!(!region.is_empty(), "empty initial region");
    let runs: Vec<Trajectory> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let x0 = sample_in(region, &mut rng);
            simulate_with(p, ctl, &x0, opts, &mut rng)
        })
        .collect();
    let summary = BatchSummary {
        count,
        converged: runs.iter().filter(|t| t.converged).count(),
        escaped: runs.iter().filter(|t| t.escaped).count(),
        max_steps: runs
            .iter()
            .filter(|t| t.converged)
            .map(|t| t.steps)
            .max()
            .unwrap_or(0),
    };
    (runs, summary)
}

/// One row per state: run, k, x…, u…, e…, L(x). The last state of each run
/// has empty control and error fields.
pub fn trajectories_csv(runs: &[Trajectory], n: usize, m: usize, l: Option<&LyapunovFn>) -> String {
    let mut s = String::from("run,k");
    for prefix in [("x", n), ("u", m), ("e", n)] {
        for i in 1..=prefix.1 {
            write!(s, ",{}{i}", prefix.0).unwrap();
        }
    }
    s.push_str(",L\n");
    for (r, t) in runs.iter().enumerate() {
        for (k, x) in t.states.iter().enumerate() {
            write!(s, "{r},{k}").unwrap();
            for v in x {
                write!(s, ",{v}").unwrap();
            }
            match (t.controls.get(k), t.errors.get(k)) {
                (Some(u), Some(e)) => {
                    for v in u.iter().chain(e) {
                        write!(s, ",{v}").unwrap();
                    }
                }
                _ => s.push_str(&",".repeat(m + n)),
            }
            match l {
                Some(l) => writeln!(s, ",{}", l.value(x)).unwrap(),
                None => s.push_str(",\n"),
            }
        }
    }
    s
}

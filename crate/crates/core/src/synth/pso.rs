//! Global-best particle swarm maximization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct PsoOptions {
    pub swarm: usize,
    /// Iterations, counting the evaluation of the initial swarm as the first.
    pub budget: usize,
    pub seed: u64,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Search box `[lo, hi]` for every coordinate.
    pub lo: f64,
    pub hi: f64,
}

impl Default for PsoOptions {
    fn default() -> Self {
        Self {
            swarm: 20,
            budget: 30,
            seed: 0,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            lo: -3.0,
            hi: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub best: Vec<f64>,
    pub objective: f64,
    /// Objective of every particle at its starting position.
    pub initial: Vec<f64>,
    /// Global best after each iteration.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Maximizes `f` over `[lo, hi]^dim`. The first particles start at `seeds`,
/// the rest uniformly in the box; velocities start at zero.
///
/// Particles are evaluated in parallel; all random draws come from one
/// stream seeded by `opts.seed`, so the result is deterministic.
pub fn pso_maximize<F>(dim: usize, opts: &PsoOptions, seeds: &[Vec<f64>], f: F) -> PsoResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(opts.budget >= 1, "budget must be at least 1");
    assert!(opts.swarm >= 1, "swarm must not be empty");
    assert!(seeds.len() <= opts.swarm, "more seeds than particles");
    assert!(opts.lo < opts.hi, "empty search box");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let vmax = opts.hi - opts.lo;

    let mut pos: Vec<Vec<f64>> = (0..opts.swarm)
        .map(|i| match seeds.get(i) {
            Some(s) => {
                assert_eq!(s.len(), dim, "seed dimension");
                s.clone()
            }
            None => (0..dim).map(|_| rng.gen_range(opts.lo..=opts.hi)).collect(),
        })
        .collect();
    let mut vel = vec![vec![0.0; dim]; opts.swarm];
    let eval = |pos: &[Vec<f64>]| -> Vec<f64> { pos.par_iter().map(|x| f(x)).collect() };

    let initial = eval(&pos);
    let mut evaluations = opts.swarm;
    let mut pbest = pos.clone();
    let mut pbest_f = initial.clone();
    let mut g = 0;
    for (i, &v) in initial.iter().enumerate() {
        if v > initial[g] {
            g = i;
        }
    }
    let mut gbest = pos[g].clone();
    let mut gbest_f = initial[g];
    let mut history = vec![gbest_f];

    for _ in 1..opts.budget {
        for (i, (x, v)) in pos.iter_mut().zip(&mut vel).enumerate() {
            for k in 0..dim {
                let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                let nv = opts.inertia * v[k]
                    + opts.cognitive * r1 * (pbest[i][k] - x[k])
                    + opts.social * r2 * (gbest[k] - x[k]);
                v[k] = nv.clamp(-vmax, vmax);
                x[k] += v[k];
                if x[k] < opts.lo || x[k] > opts.hi {
                    x[k] = x[k].clamp(opts.lo, opts.hi);
                    v[k] = 0.0;
                }
            }
        }
        let values = eval(&pos);
        evaluations += opts.swarm;
        for (i, &val) in values.iter().enumerate() {
            if val > pbest_f[i] {
                pbest_f[i] = val;
                pbest[i].clone_from(&pos[i]);
            }
            if val > gbest_f {
                gbest_f = val;
                gbest.clone_from(&pos[i]);
            }
        }
        history.push(gbest_f);
    }

    PsoResult {
        best: gbest,
        objective: gbest_f,
        initial,
        history,
        evaluations,
    }
}

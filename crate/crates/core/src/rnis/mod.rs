//! Robust negative-definite and invariant set estimation.
//!
//! The pipeline is: pave the α-strict decrease set `W_N(L)` inside the
//! constraint box, then repeatedly keep only the boxes whose successor
//! enclosure lands inside the current state projection, until the box set
//! stops changing.

mod decrease;
mod levelset;
mod plant;

use std::fmt::Write;

use thiserror::Error;

use crate::interval::BoxVec;
use crate::paving::{Coverage, Label, Paving, ProjTree};
use crate::sevia::{pave, SeviaError, Verdict};
use crate::Interval;

pub use decrease::DecreaseTest;
use decrease::MAX_VERTEX_DIM;
pub use levelset::{level_set_baseline, LevelSet};
pub use plant::{LyapunovFn, PlantSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RnisError {
    #[error("invalid plant set: {0}")]
    Plant(String),
    #[error("invalid Lyapunov function: {0}")]
    Lyapunov(String),
    #[error(transparent)]
    Sevia(#[from] SeviaError),
    #[error("no fixed point after {0} invariance passes")]
    IterationCap(usize),
    #[error("invariance pass {0} produced boxes outside the previous inner set")]
    NotShrinking(usize),
}

/// Enclosure of `L(f̂(x,u) + e) − L(x)` over `w` and all admissible errors;
/// see [`DecreaseTest::enclosure`].
pub fn decrease_enclosure(p: &PlantSet, l: &LyapunovFn, w: &BoxVec) -> Interval {
    DecreaseTest::new(p, l).enclosure(w)
}

/// Decrease test on a state-control box; see [`DecreaseTest::classify`].
/// Compile a [`DecreaseTest`] once when classifying many boxes.
pub fn nd_classify(p: &PlantSet, l: &LyapunovFn, w: &BoxVec) -> Verdict {
    DecreaseTest::new(p, l).classify(w)
}

/// Invariance test against `proj ∪ core`.
///
/// Accepts when `[X+](w)` is covered. Rejects when it misses the covered set,
/// or when the successors of one extreme plant (`e = ±δ` per component) all
/// miss it.
pub fn inv_classify(t: &ProjTree, core: Option<&BoxVec>, p: &PlantSet, w: &BoxVec) -> Verdict {
    let n = p.n();
    let (x, u) = w.dims().split_at(n);
    let f: Vec<Interval> = p.fhat().iter().map(|e| e.eval(x, u)).collect();
    let d: Vec<Interval> = p.delta().iter().map(|e| e.eval(x, u)).collect();
    let hull = BoxVec::new((0..n).map(|i| (f[i] - d[i]).hull(&(f[i] + d[i]))).collect());
    match t.covers_with(&hull, core) {
        Coverage::Inside => Verdict::Accept,
        Coverage::Outside => Verdict::Reject,
        Coverage::Straddle => {
            if n > MAX_VERTEX_DIM {
                return Verdict::Unknown;
            }
            let mut succ = hull;
            for mask in 0..1u64 << n {
                for (i, s) in succ.dims_mut().iter_mut().enumerate() {
                    *s = if mask >> i & 1 == 1 {
                        f[i] + d[i]
                    } else {
                        f[i] - d[i]
                    };
                }
                if t.covers_with(&succ, core) == Coverage::Outside {
                    return Verdict::Reject;
                }
            }
            Verdict::Unknown
        }
    }
}

/// Inner approximation of `W_N(L)`, paving the whole constraint box.
pub fn estimate_wn(p: &PlantSet, l: &LyapunovFn, eps: f64) -> Result<Paving, RnisError> {
    let dt = DecreaseTest::new(p, l);
    let test = |w: &BoxVec| dt.classify(w);
    Ok(pave(&test, p.w_cons(), p.n(), vec![p.w_cons().clone()], eps)?.paving)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnisOptions {
    pub eps: f64,
    /// Verified origin neighborhood (e.g. the linear-gain region `X₀`)
    /// counted as a safe landing set during invariance passes.
    pub core: Option<BoxVec>,
    pub max_iter: usize,
}

impl RnisOptions {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            core: None,
            max_iter: 1000,
        }
    }

    pub fn with_core(mut self, core: BoxVec) -> Self {
        self.core = Some(core);
        self
    }
}

/// One row of the fixed-point trace. Iteration 0 is the decrease set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterStat {
    pub iteration: usize,
    pub in_boxes: usize,
    pub measure: f64,
}

#[derive(Debug, Clone)]
pub struct RnisOutput {
    /// Final paving. Boxes dropped by invariance passes are labeled `Out`.
    pub paving: Paving,
    /// The decrease-set paving the loop started from.
    pub wn: Paving,
    pub stats: Vec<IterStat>,
    pub evaluations: usize,
}

impl RnisOutput {
    pub fn iterations(&self) -> usize {
        self.stats.len() - 1
    }

    pub fn projection(&self) -> ProjTree {
        self.paving.project()
    }

    pub fn stats_csv(&self) -> String {
        let mut out = String::from("iteration,in_boxes,measure\n");
        for s in &self.stats {
            writeln!(out, "{},{},{}", s.iteration, s.in_boxes, s.measure).unwrap();
        }
        out
    }
}

/// Fixed-point iteration of the invariance filter over `W_N(L)`.
pub fn rnisevia(p: &PlantSet, l: &LyapunovFn, opts: &RnisOptions) -> Result<RnisOutput, RnisError> {
    let dt = DecreaseTest::new(p, l);
    let wn_test = |w: &BoxVec| dt.classify(w);
    let first = pave(
        &wn_test,
        p.w_cons(),
        p.n(),
        vec![p.w_cons().clone()],
        opts.eps,
    )?;
    let wn = first.paving;
    let mut evaluations = first.evaluations;

    let mut current = wn.clone();
    let mut stats = vec![IterStat {
        iteration: 0,
        in_boxes: current.boxes_in().len(),
        measure: current.project().measure(),
    }];
    let mut dropped_out = Vec::new();
    let mut dropped_bou = Vec::new();
    let core = opts.core.as_ref();

    let mut iteration = 0;
    while !current.is_in_empty() {
        if iteration == opts.max_iter {
            return Err(RnisError::IterationCap(opts.max_iter));
        }
        iteration += 1;
        let tree = current.project();
        let test = |w: &BoxVec| inv_classify(&tree, core, p, w);
        let init = current.boxes_in().to_vec();
        let next = pave(&test, p.w_cons(), p.n(), init, opts.eps)?;
        evaluations += next.evaluations;
        let mut next = next.paving;
        if next.boxes_in() == current.boxes_in() {
            break;
        }
        if !is_refinement(&current, &next) {
            return Err(RnisError::NotShrinking(iteration));
        }
        dropped_out.extend(next.boxes_out().iter().cloned());
        dropped_bou.extend(next.boxes_bou().iter().cloned());
        let kept = next.take_in();
        current = Paving::new(p.w_cons().clone(), p.n());
        current.extend(Label::In, kept);
        stats.push(IterStat {
            iteration,
            in_boxes: current.boxes_in().len(),
            measure: current.project().measure(),
        });
    }

    let mut paving = Paving::new(p.w_cons().clone(), p.n());
    paving.extend(Label::In, current.take_in());
    paving.extend(
        Label::Out,
        wn.boxes_out().iter().cloned().chain(dropped_out),
    );
    paving.extend(
        Label::Bou,
        wn.boxes_bou().iter().cloned().chain(dropped_bou),
    );
    paving.canonicalize();
    Ok(RnisOutput {
        paving,
        wn,
        stats,
        evaluations,
    })
}

// Every inner box of `next` lies inside the inner set of `prev`.
fn is_refinement(prev: &Paving, next: &Paving) -> bool {
    let mut tree = ProjTree::new(prev.root().clone());
    for b in prev.boxes_in() {
        tree.insert(b);
    }
    next.boxes_in()
        .iter()
        .all(|b| tree.covers(b) == Coverage::Inside)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn nd_classify_agrees_with_grid_oracle() {
        let p = example_plant();
        let l = quadratic();
        let w = BoxVec::from_bounds(&[(-0.5, -0.4), (-0.9, -0.8)]);
        let verdict = nd_classify(&p, &l, &w);
        let mut worst = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        for i in 0..50 {
            for j in 0..50 {
                let x = -0.5 + 0.1 * i as f64 / 49.0;
                let u = -0.9 + 0.1 * j as f64 / 49.0;
                let f = p.nominal(&[x], &[u])[0];
                let d = p.bound(&[x], &[u])[0];
                for k in 0..50 {
                    let xp = f - d + 2.0 * d * k as f64 / 49.0;
                    let diff = xp * xp - x * x;
                    worst = worst.max(diff);
                    best = best.min(diff);
                }
            }
        }
        match verdict {
            Verdict::Accept => assert!(worst <= -1e-6),
            Verdict::Reject => assert!(best > -1e-6),
            Verdict::Unknown => {}
        }
        // successors leave |x| here for every admissible error
        assert!(best > 0.0);
        assert_eq!(verdict, Verdict::Reject);
        let w = BoxVec::from_bounds(&[(-0.5, -0.49), (-0.48, -0.47)]);
        assert_eq!(nd_classify(&p, &l, &w), Verdict::Accept);
    }

    #[test]
    fn origin_never_accepted() {
        let p = example_plant();
        let l = quadratic();
        assert_ne!(
            nd_classify(&p, &l, &BoxVec::point(&[0.0, 0.0])),
            Verdict::Accept
        );
        let w = BoxVec::from_bounds(&[(-0.01, 0.01), (-0.01, 0.01)]);
        assert_ne!(nd_classify(&p, &l, &w), Verdict::Accept);
    }

    #[test]
    fn contraction_plant_hand_computation() {
        // L(0.5x) − L(x) = −0.75x² ≤ −0.75 on x ∈ [1,2]
        let p = plant("0.5*x1", "0").with_alpha(0.75).unwrap();
        let l = quadratic();
        let w = BoxVec::from_bounds(&[(1.0, 2.0), (0.0, 0.0)]);
        assert_eq!(nd_classify(&p, &l, &w), Verdict::Accept);
        let p = p.with_alpha(0.76).unwrap();
        assert_ne!(nd_classify(&p, &l, &w), Verdict::Accept);
    }

    #[test]
    fn nowhere_decreasing_plant_has_empty_wn() {
        // x+ = 2x: L(x+) − L(x) = 3x² ≥ 0
        let p = plant("2*x1", "0");
        let wn = estimate_wn(&p, &quadratic(), 0.05).unwrap();
        assert!(wn.boxes_in().is_empty());
        let out = rnisevia(&p, &quadratic(), &RnisOptions::new(0.05)).unwrap();
        assert!(out.paving.boxes_in().is_empty());
        assert_eq!(out.iterations(), 0);
    }

    #[test]
    fn coarse_eps_classifies_only_root() {
        // widths must drop strictly below eps: at eps = d(root) the square
        // root is cut once along each axis
        let p = example_plant();
        let wn = estimate_wn(&p, &quadratic(), 4.0).unwrap();
        assert!(wn.len() <= 4);
        let wn = estimate_wn(&p, &quadratic(), 4.5).unwrap();
        assert_eq!(wn.len(), 1);
    }

    #[test]
    fn inv_classify_extremes() {
        let p = example_plant();
        let root = p.state_box();
        let mut full = ProjTree::new(root.clone());
        full.insert(&root);
        let empty = ProjTree::new(root);
        let w = BoxVec::from_bounds(&[(0.5, 0.6), (0.1, 0.2)]);
        assert_eq!(inv_classify(&full, None, &p, &w), Verdict::Accept);
        assert_eq!(inv_classify(&empty, None, &p, &w), Verdict::Reject);
    }

    #[test]
    fn zero_plant_collapses_without_core_and_survives_with_it() {
        // x+ = 0: every box decreases except near the origin, and every
        // successor lands at the origin, which the decrease set never covers.
        let p = plant("0", "0");
        let l = quadratic();
        let bare = rnisevia(&p, &l, &RnisOptions::new(0.01)).unwrap();
        assert!(bare.paving.boxes_in().is_empty());
        assert!(!bare.wn.boxes_in().is_empty());
        let core = BoxVec::from_bounds(&[(-0.1, 0.1)]);
        let with_core = rnisevia(&p, &l, &RnisOptions::new(0.01).with_core(core)).unwrap();
        assert_eq!(with_core.paving.boxes_in(), with_core.wn.boxes_in());
        assert_eq!(with_core.iterations(), 0);
    }

    #[test]
    fn partition_of_final_paving() {
        let p = example_plant();
        let out = rnisevia(
            &p,
            &quadratic(),
            &RnisOptions::new(0.02).with_core(BoxVec::from_bounds(&[(-0.05, 0.05)])),
        )
        .unwrap();
        let total: f64 = [Label::In, Label::Out, Label::Bou]
            .into_iter()
            .map(|l| out.paving.volume(l))
            .sum();
        assert!((total - 16.0).abs() <= 16.0 * 1e-9);
        for w in out.stats.windows(2) {
            assert!(w[1].in_boxes <= w[0].in_boxes);
            assert!(w[1].measure <= w[0].measure);
        }
        assert!(out
            .stats_csv()
            .starts_with("iteration,in_boxes,measure\n0,"));
    }
}

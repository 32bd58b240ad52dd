//! Sublevel-set baseline: the largest `{L ≤ c}` inside the decrease set's
//! state projection.

use super::{LyapunovFn, PlantSet};
use crate::interval::{BoxVec, Interval};
use crate::paving::{Coverage, Paving, ProjTree};
use crate::sevia::{pave, Verdict};

#[derive(Debug, Clone)]
pub struct LevelSet {
    pub c: f64,
    /// Paving of `{x : L(x) ≤ c}` over the state box (`m = 0`).
    pub sublevel: Paving,
}

impl LevelSet {
    /// Maximal intervals of the sublevel set (inner and boundary boxes),
    /// for one-dimensional states.
    pub fn components_1d(&self) -> Vec<(f64, f64)> {
        let mut t = ProjTree::new(self.sublevel.root().clone());
        for b in self
            .sublevel
            .boxes_in()
            .iter()
            .chain(self.sublevel.boxes_bou())
        {
            t.insert(b);
        }
        t.components_1d()
    }
}

const BISECTION_STEPS: usize = 60;

/// Largest `c` (to bisection accuracy) such that the sublevel set `{L ≤ c}` is
/// certified inside `proj(wn) ∪ core` at resolution `eps`. The set must also
/// stay clear of the state box boundary (`L > c` on every face), since
/// nothing is known about the plant outside the box.
/// Returns `c = 0` when not even a neighborhood of the origin qualifies.
pub fn level_set_baseline(
    p: &PlantSet,
    l: &LyapunovFn,
    wn: &Paving,
    core: Option<&BoxVec>,
    eps: f64,
) -> LevelSet {
    let tree = wn.project();
    let root = p.state_box();
    let fits =
        |c: f64| faces_above(l, &root, c, eps) && sublevel_fits(l, &tree, core, &root, c, eps);
    let top = l.eval_box(&root).hi();
    let c = if fits(top) {
        top
    } else {
        let (mut lo, mut hi) = (0.0, top);
        if !fits(lo) {
            hi = 0.0;
        }
        for _ in 0..BISECTION_STEPS {
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
            let mid = lo + (hi - lo) / 2.0;
            if fits(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let test = |x: &BoxVec| {
        let v = l.eval_box(x);
        if v.hi() <= c {
            Verdict::Accept
        } else if v.lo() > c {
            Verdict::Reject
        } else {
            Verdict::Unknown
        }
    };
    let sublevel = pave(&test, &root, p.n(), vec![root.clone()], eps)
        .expect("eps validated by caller")
        .paving;
    LevelSet { c, sublevel }
}

fn faces_above(l: &LyapunovFn, root: &BoxVec, c: f64, eps: f64) -> bool {
    (0..root.dim()).all(|axis| {
        let d = root.dims()[axis];
        [d.lo(), d.hi()].into_iter().all(|end| {
            let mut face = root.clone();
            face.dims_mut()[axis] = Interval::point(end);
            above(l, &face, c, eps)
        })
    })
}

fn above(l: &LyapunovFn, x: &BoxVec, c: f64, eps: f64) -> bool {
    if l.eval_box(x).lo() > c {
        return true;
    }
    if x.width() < eps {
        return false;
    }
    match x.bisect() {
        Ok((a, b)) => above(l, &a, c, eps) && above(l, &b, c, eps),
        Err(_) => false,
    }
}

fn sublevel_fits(
    l: &LyapunovFn,
    tree: &ProjTree,
    core: Option<&BoxVec>,
    x: &BoxVec,
    c: f64,
    eps: f64,
) -> bool {
    if l.eval_box(x).lo() > c {
        return true;
    }
    match tree.covers_with(x, core) {
        Coverage::Inside => true,
        _ if x.width() < eps => false,
        _ => match x.bisect() {
            Ok((a, b)) => {
                sublevel_fits(l, tree, core, &a, c, eps) && sublevel_fits(l, tree, core, &b, c, eps)
            }
            Err(_) => false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paving::Label;
    use crate::rnis::fixtures::*;

    #[test]
    fn full_projection_stops_at_the_box_boundary() {
        let p = example_plant();
        let mut wn = Paving::new(p.w_cons().clone(), 1);
        wn.push(Label::In, p.w_cons().clone());
        let ls = level_set_baseline(&p, &quadratic(), &wn, None, 0.01);
        // L = 4 on the faces x = ±2
        assert!(ls.c < 4.0 && ls.c > 4.0 - 1e-9, "c = {}", ls.c);
        let comps = ls.components_1d();
        assert_eq!(comps.len(), 1);
        assert!(comps[0].0 <= -1.99 && comps[0].1 >= 1.99);
    }

    #[test]
    fn empty_origin_gives_zero() {
        let p = example_plant();
        let mut wn = Paving::new(p.w_cons().clone(), 1);
        wn.push(Label::In, BoxVec::from_bounds(&[(1.0, 2.0), (-2.0, 2.0)]));
        let ls = level_set_baseline(&p, &quadratic(), &wn, None, 0.01);
        assert_eq!(ls.c, 0.0);
    }

    #[test]
    fn half_interval_projection() {
        // proj = [-2, 0.5]: the sublevel set stops at the right edge
        let p = example_plant();
        let mut wn = Paving::new(p.w_cons().clone(), 1);
        wn.push(Label::In, BoxVec::from_bounds(&[(-2.0, 0.0), (-2.0, 2.0)]));
        wn.push(Label::In, BoxVec::from_bounds(&[(0.0, 0.5), (-2.0, 2.0)]));
        let ls = level_set_baseline(&p, &quadratic(), &wn, None, 1e-3);
        assert!((ls.c - 0.25).abs() < 2e-3, "c = {}", ls.c);
    }
}

//! The α-strict decrease test on state-control boxes.

use super::{LyapunovFn, PlantSet};
use crate::expr::{GradScratch, Tape};
use crate::interval::{BoxVec, Interval};
use crate::sevia::Verdict;

// Above this state dimension only the nominal plant is used as the outer witness.
pub(crate) const MAX_VERTEX_DIM: usize = 8;

// Bisection depth over the normalized error `s` when the one-shot enclosure
// is undecided; a wide error range inflates `[L]([X+])` badly for quartic `L`.
const ERROR_SPLIT_DEPTH: u32 = 6;

/// Compiled `D(x, u, s) = L(f̂(x,u) + s·δ(x,u)) − L(x)`, `s ∈ [−1, 1]ⁿ`,
/// with the threshold `−α`.
#[derive(Debug, Clone)]
pub struct DecreaseTest {
    tape: Tape,
    out: usize,
    n: usize,
    wdim: usize,
    bound: f64,
}

#[derive(Default)]
struct Scratch {
    buf: Vec<Interval>,
    grad: GradScratch,
    upper: Vec<Interval>,
    lower: Vec<Interval>,
    center: Vec<Interval>,
    active: Vec<bool>,
}

impl DecreaseTest {
    pub fn new(p: &PlantSet, l: &LyapunovFn) -> Self {
        let (n, m) = (p.n(), p.m());
        let mut tape = Tape::new(2 * n + m);
        let x: Vec<usize> = (0..n).collect();
        let u: Vec<usize> = (n..n + m).collect();
        let xp: Vec<usize> = (0..n)
            .map(|i| {
                let f = tape.emit(&p.fhat()[i], &x, &u);
                let d = tape.emit(&p.delta()[i], &x, &u);
                let sd = tape.mul(n + m + i, d);
                tape.add(f, sd)
            })
            .collect();
        let after = tape.emit(l.expr(), &xp, &[]);
        let before = tape.emit(l.expr(), &x, &[]);
        let out = tape.sub(after, before);
        Self {
            tape,
            out,
            n,
            wdim: n + m,
            bound: -p.alpha(),
        }
    }

    /// Enclosure of `D` over `w` and every admissible error.
    ///
    /// Starts from the natural form, which equals `[L]([X+](w)) − [L]([x])`;
    /// when that is not decisive against `−α`, coordinates along which `D` is
    /// monotone (by a forward-mode derivative enclosure) are pinned to the
    /// maximizing or minimizing endpoint and the bounds recomputed. The same
    /// derivative enclosures also give a mean-value form around the box
    /// center. The result intersects these forms, stopping as soon as the
    /// comparison with `−α` is settled.
    pub fn enclosure(&self, w: &BoxVec) -> Interval {
        let vars = self.vars(w, Interval::new(-1.0, 1.0));
        self.enclose(&vars, usize::MAX, &mut Scratch::default()).0
    }

    /// Accepts when the enclosure of `D` lies in `(−∞, −α]`. Rejects when it
    /// misses that ray, or when one extreme plant (`e = ±δ` per component)
    /// fails to decrease by `α` anywhere in the box: every point then has an
    /// admissible plant violating the decrease condition. Undecided boxes get
    /// a second pass with the error range subdivided.
    pub fn classify(&self, w: &BoxVec) -> Verdict {
        let mut scratch = Scratch::default();
        let mut vars = self.vars(w, Interval::new(-1.0, 1.0));
        let (full, worth_splitting) = self.enclose(&vars, self.wdim, &mut scratch);
        if full.hi() <= self.bound {
            return Verdict::Accept;
        }
        if full.lo() > self.bound {
            return Verdict::Reject;
        }
        let n = self.n;
        let vertices: u64 = if n <= MAX_VERTEX_DIM { 1 << n } else { 0 };
        // a single plant not certified over the whole box rules out Accept
        // at this size, whatever the error subdivision
        let mut vertex_undecided = false;
        for mask in 0..vertices {
            for i in 0..n {
                let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                vars[self.wdim + i] = Interval::point(s);
            }
            let e = self.enclose(&vars, usize::MAX, &mut scratch).0;
            if e.lo() > self.bound {
                return Verdict::Reject;
            }
            vertex_undecided |= e.hi() > self.bound;
        }
        if vertices == 0 {
            vars[self.wdim..].fill(Interval::point(0.0));
            if self.enclose(&vars, usize::MAX, &mut scratch).0.lo() > self.bound {
                return Verdict::Reject;
            }
        }
        if !worth_splitting || vertex_undecided {
            return Verdict::Unknown;
        }
        vars[self.wdim..].fill(Interval::new(-1.0, 1.0));
        self.split_halves(&mut vars, ERROR_SPLIT_DEPTH, &mut scratch)
    }

    fn vars(&self, w: &BoxVec, s: Interval) -> Vec<Interval> {
        assert_eq!(w.dim(), self.wdim, "box dimension");
        let mut vars = w.dims().to_vec();
        vars.resize(self.wdim + self.n, s);
        vars
    }

    // Accept iff every piece of the error range decreases; Reject as soon as
    // one piece fails everywhere (those plants are admissible at every point).
    fn split_errors(&self, vars: &mut [Interval], depth: u32, scratch: &mut Scratch) -> Verdict {
        let (e, worth_splitting) = self.enclose(vars, self.wdim, scratch);
        if e.hi() <= self.bound {
            return Verdict::Accept;
        }
        if e.lo() > self.bound {
            return Verdict::Reject;
        }
        if depth == 0 || !worth_splitting {
            return Verdict::Unknown;
        }
        self.split_halves(vars, depth, scratch)
    }

    fn split_halves(&self, vars: &mut [Interval], depth: u32, scratch: &mut Scratch) -> Verdict {
        let k = (self.wdim..vars.len())
            .max_by(|&a, &b| vars[a].width().total_cmp(&vars[b].width()))
            .expect("at least one error coordinate");
        let saved = vars[k];
        if saved.is_degenerate() {
            return Verdict::Unknown;
        }
        let (a, b) = saved.bisect();
        let mut result = Verdict::Accept;
        for half in [a, b] {
            vars[k] = half;
            match self.split_errors(vars, depth - 1, scratch) {
                Verdict::Reject => {
                    vars[k] = saved;
                    return Verdict::Reject;
                }
                Verdict::Unknown => result = Verdict::Unknown,
                Verdict::Accept => {}
            }
        }
        vars[k] = saved;
        result
    }

    fn eval(&self, vars: &[Interval], buf: &mut Vec<Interval>) -> Interval {
        self.tape.eval_into(vars, buf);
        buf[self.out]
    }

    // Also reports whether the mean-value terms of coordinates `first_error..`
    // are at least as wide as all the others together, i.e. whether narrowing
    // the error range can still pay off.
    fn enclose(&self, vars: &[Interval], first_error: usize, s: &mut Scratch) -> (Interval, bool) {
        let natural = self.eval(vars, &mut s.buf);
        let bound = self.bound;
        if natural.hi() <= bound || natural.lo() > bound || natural.is_empty() {
            return (natural, true);
        }
        s.center.clear();
        s.center
            .extend(vars.iter().map(|v| Interval::point(v.midpoint())));
        let mut centered = self.eval(&s.center, &mut s.buf);

        s.active.clear();
        s.active.extend(vars.iter().map(|v| !v.is_degenerate()));
        s.upper.clear();
        s.upper.extend_from_slice(vars);
        s.lower.clear();
        s.lower.extend_from_slice(vars);
        let (mut error_width, mut other_width) = (0.0, 0.0);
        let (k, _, du) = self.tape.gradient(vars, &s.active, &mut s.grad);
        let grad = &du[self.out * k..self.out * k + k];
        let mut j = 0;
        for (i, &v) in vars.iter().enumerate() {
            if !s.active[i] {
                continue;
            }
            let g = grad[j];
            j += 1;
            let term = g * (v - s.center[i]);
            centered = centered + term;
            if i >= first_error {
                error_width += term.width();
            } else {
                other_width += term.width();
            }
            if g.lo() >= 0.0 {
                s.upper[i] = Interval::point(v.hi());
                s.lower[i] = Interval::point(v.lo());
            } else if g.hi() <= 0.0 {
                s.upper[i] = Interval::point(v.lo());
                s.lower[i] = Interval::point(v.hi());
            }
        }
        let worth = error_width >= other_width;
        let hi = natural.hi().min(centered.hi());
        let lo = natural.lo().max(centered.lo());
        if hi <= bound || lo > bound {
            return (Interval::new(lo, hi), worth);
        }
        let hi = self.eval(&s.upper, &mut s.buf).hi().min(hi);
        let lo = self.eval(&s.lower, &mut s.buf).lo().max(lo);
        (Interval::new(lo, hi), worth)
    }
}

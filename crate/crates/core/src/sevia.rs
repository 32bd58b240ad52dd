//! Branch-and-bound set estimation by bisection (inner/outer tests + width cut-off).

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use thiserror::Error;

use crate::interval::{BoxVec, IntervalFloat};
use crate::paving::{Label, Paving};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeviaError {
    #[error("eps must be positive, got {0}")]
    BadEps(f64),
    #[error("initial box has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Outcome of a box test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The box lies inside the target set.
    Accept,
    /// The box misses the target set.
    Reject,
    Unknown,
}

/// A sound box classifier. Must be pure: the paver may call it from many
/// threads and in any order.
pub trait BoxTest<T: IntervalFloat>: Sync {
    fn classify(&self, b: &BoxVec<T>) -> Verdict;
}

impl<T: IntervalFloat, F> BoxTest<T> for F
where
    F: Fn(&BoxVec<T>) -> Verdict + Sync,
{
    fn classify(&self, b: &BoxVec<T>) -> Verdict {
        self(b)
    }
}

/// Result of a paving run.
#[derive(Debug, Clone)]
pub struct PaveOutput<T: IntervalFloat = f64> {
    pub paving: Paving<T>,
    /// Number of test evaluations.
    pub evaluations: usize,
}

#[derive(Default)]
struct Leaves<T> {
    inside: Vec<BoxVec<T>>,
    outside: Vec<BoxVec<T>>,
    boundary: Vec<BoxVec<T>>,
}

impl<T> Leaves<T> {
    fn absorb(&mut self, other: Leaves<T>) {
        self.inside.extend(other.inside);
        self.outside.extend(other.outside);
        self.boundary.extend(other.boundary);
    }
}

// Below this many pending boxes the frontier is explored by a single worker.
const FAN_OUT: usize = 64;

/// Paves the union of `init` boxes.
///
/// Each box popped from a LIFO worklist goes to the inner set on `Accept`,
/// the outer set on `Reject`, the boundary set when narrower than `eps`, and
/// is bisected otherwise. `root` labels the returned paving; `n` is the number
/// of state coordinates. Output lists are sorted, so the result does not
/// depend on scheduling.
pub fn pave<T, B>(
    test: &B,
    root: &BoxVec<T>,
    n: usize,
    init: Vec<BoxVec<T>>,
    eps: T,
) -> Result<PaveOutput<T>, SeviaError>
where
    T: IntervalFloat,
    B: BoxTest<T> + ?Sized,
{
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(SeviaError::BadEps(eps.to_f64()));
    }
    if let Some(b) = init.iter().find(|b| b.dim() != root.dim()) {
        return Err(SeviaError::Dimension {
            expected: root.dim(),
            got: b.dim(),
        });
    }
    let evaluations = AtomicUsize::new(0);

    // Breadth-first expansion until there is enough independent work to share.
    let mut leaves = Leaves::default();
    let mut frontier = init;
    let workers = rayon::current_num_threads();
    while workers > 1 && !frontier.is_empty() && frontier.len() < FAN_OUT * workers {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for b in frontier {
            step(test, b, eps, &evaluations, &mut leaves, &mut next);
        }
        frontier = next;
    }

    let parts: Vec<Leaves<T>> = if workers > 1 {
        frontier
            .into_par_iter()
            .map(|b| explore(test, vec![b], eps, &evaluations))
            .collect()
    } else {
        vec![explore(test, frontier, eps, &evaluations)]
    };
    for part in parts {
        leaves.absorb(part);
    }

    let mut paving = Paving::new(root.clone(), n);
    paving.extend(Label::In, leaves.inside);
    paving.extend(Label::Out, leaves.outside);
    paving.extend(Label::Bou, leaves.boundary);
    paving.canonicalize();
    Ok(PaveOutput {
        paving,
        evaluations: evaluations.into_inner(),
    })
}

fn explore<T, B>(
    test: &B,
    mut stack: Vec<BoxVec<T>>,
    eps: T,
    evaluations: &AtomicUsize,
) -> Leaves<T>
where
    T: IntervalFloat,
    B: BoxTest<T> + ?Sized,
{
    let mut leaves = Leaves::default();
    let mut children = Vec::with_capacity(2);
    while let Some(b) = stack.pop() {
        step(test, b, eps, evaluations, &mut leaves, &mut children);
        // push in reverse so the lower half is explored first
        while let Some(c) = children.pop() {
            stack.push(c);
        }
    }
    leaves
}

fn step<T, B>(
    test: &B,
    b: BoxVec<T>,
    eps: T,
    evaluations: &AtomicUsize,
    leaves: &mut Leaves<T>,
    pending: &mut Vec<BoxVec<T>>,
) where
    T: IntervalFloat,
    B: BoxTest<T> + ?Sized,
{
    evaluations.fetch_add(1, Ordering::Relaxed);
    match test.classify(&b) {
        Verdict::Accept => leaves.inside.push(b),
        Verdict::Reject => leaves.outside.push(b),
        Verdict::Unknown if b.width() < eps => leaves.boundary.push(b),
        Verdict::Unknown => match b.bisect() {
            Ok((l, r)) => {
                pending.push(l);
                pending.push(r);
            }
            Err(_) => leaves.boundary.push(b),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;

    fn square(h: f64) -> BoxVec {
        BoxVec::from_bounds(&[(-h, h), (-h, h)])
    }

    fn disk(b: &BoxVec) -> Verdict {
        let r: Interval = b.dims()[0].sqr() + b.dims()[1].sqr();
        if r.hi() <= 1.0 {
            Verdict::Accept
        } else if r.lo() > 1.0 {
            Verdict::Reject
        } else {
            Verdict::Unknown
        }
    }

    #[test]
    fn constant_accept_keeps_init() {
        let init = vec![
            BoxVec::from_bounds(&[(0.0, 1.0), (0.0, 1.0)]),
            BoxVec::from_bounds(&[(1.0, 2.0), (0.0, 1.0)]),
        ];
        let out = pave(
            &|_: &BoxVec| Verdict::Accept,
            &square(2.0),
            1,
            init.clone(),
            0.1,
        )
        .unwrap();
        assert_eq!(out.paving.boxes_in(), &init[..]);
        assert_eq!(out.evaluations, 2);
    }

    #[test]
    fn constant_unknown_bisects_to_depth() {
        let out = pave(
            &|_: &BoxVec| Verdict::Unknown,
            &square(1.0),
            1,
            vec![square(1.0)],
            0.3,
        )
        .unwrap();
        assert!(out.paving.boxes_in().is_empty());
        assert!(out.paving.boxes_bou().iter().all(|b| b.width() < 0.3));
        // 2 -> 1 -> 0.5 -> 0.25 per axis: 8 x 8 leaves
        assert_eq!(out.paving.boxes_bou().len(), 64);
        assert_eq!(out.evaluations, 127);
    }

    #[test]
    fn bad_eps() {
        assert_eq!(
            pave(&disk, &square(2.0), 1, vec![square(2.0)], 0.0).unwrap_err(),
            SeviaError::BadEps(0.0)
        );
        assert!(pave(&disk, &square(2.0), 1, vec![square(2.0)], -1.0).is_err());
    }

    #[test]
    fn disk_area_inner_approximation() {
        let out = pave(&disk, &square(2.0), 1, vec![square(2.0)], 0.01).unwrap();
        let area = out.paving.volume(Label::In);
        let pi = std::f64::consts::PI;
        assert!(area <= pi && area >= pi - 0.15, "area {area}");
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let seq = one.install(|| pave(&disk, &square(2.0), 1, vec![square(2.0)], 0.05).unwrap());
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let par = pool.install(|| pave(&disk, &square(2.0), 1, vec![square(2.0)], 0.05).unwrap());
        assert_eq!(seq.paving, par.paving);
        assert_eq!(seq.evaluations, par.evaluations);
    }
}

//! Tri-labeled box collections produced by the pavers.

mod io;
mod proj;

use thiserror::Error;

use crate::interval::{BoxVec, IntervalError, IntervalFloat};

pub use proj::{Coverage, ProjTree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PavingError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: box dimension {got} does not match header dim {expected}")]
    DimMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    In,
    Out,
    Bou,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::In => "IN",
            Label::Out => "OUT",
            Label::Bou => "BOU",
        }
    }
}

/// Inner (`In`), outer (`Out`) and undetermined (`Bou`) boxes of a paving
/// over `root`. The first `n` coordinates are the state coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Paving<T: IntervalFloat = f64> {
    root: BoxVec<T>,
    n: usize,
    boxes_in: Vec<BoxVec<T>>,
    boxes_out: Vec<BoxVec<T>>,
    boxes_bou: Vec<BoxVec<T>>,
}

impl<T: IntervalFloat> Paving<T> {
    pub fn new(root: BoxVec<T>, n: usize) -> Self {
        assert!(n <= root.dim(), "state dimension exceeds root dimension");
        Self {
            root,
            n,
            boxes_in: Vec::new(),
            boxes_out: Vec::new(),
            boxes_bou: Vec::new(),
        }
    }

    pub fn root(&self) -> &BoxVec<T> {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.dim() - self.n
    }

    pub fn boxes_in(&self) -> &[BoxVec<T>] {
        &self.boxes_in
    }

    pub fn boxes_out(&self) -> &[BoxVec<T>] {
        &self.boxes_out
    }

    pub fn boxes_bou(&self) -> &[BoxVec<T>] {
        &self.boxes_bou
    }

    pub fn boxes(&self, label: Label) -> &[BoxVec<T>] {
        match label {
            Label::In => &self.boxes_in,
            Label::Out => &self.boxes_out,
            Label::Bou => &self.boxes_bou,
        }
    }

    pub fn push(&mut self, label: Label, b: BoxVec<T>) {
        debug_assert_eq!(b.dim(), self.dim());
        match label {
            Label::In => self.boxes_in.push(b),
            Label::Out => self.boxes_out.push(b),
            Label::Bou => self.boxes_bou.push(b),
        }
    }

    pub fn extend(&mut self, label: Label, boxes: impl IntoIterator<Item = BoxVec<T>>) {
        for b in boxes {
            self.push(label, b);
        }
    }

    pub fn take_in(&mut self) -> Vec<BoxVec<T>> {
        std::mem::take(&mut self.boxes_in)
    }

    pub fn is_in_empty(&self) -> bool {
        self.boxes_in.is_empty()
    }

    pub fn len(&self) -> usize {
        self.boxes_in.len() + self.boxes_out.len() + self.boxes_bou.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sorts every list lexicographically by lower corner.
    pub fn canonicalize(&mut self) {
        for list in [&mut self.boxes_in, &mut self.boxes_out, &mut self.boxes_bou] {
            list.sort_by(|a, b| a.lex_cmp(b));
        }
    }

    pub fn volume(&self, label: Label) -> T {
        self.boxes(label)
            .iter()
            .map(BoxVec::volume)
            .fold(T::zero(), |a, b| a + b)
    }

    /// State-space projection of the inner boxes.
    pub fn project(&self) -> ProjTree<T> {
        let mut t = ProjTree::new(self.root.head(self.n));
        for b in &self.boxes_in {
            t.insert(&b.head(self.n));
        }
        t
    }

    /// Whether a state-control point lies in some inner box.
    pub fn in_contains_point(&self, p: &[T]) -> bool {
        self.boxes_in.iter().any(|b| b.contains_point(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(bounds: &[(f64, f64)]) -> BoxVec {
        BoxVec::from_bounds(bounds)
    }

    #[test]
    fn single_in_box_projection() {
        let mut p = Paving::new(b(&[(0.0, 2.0), (-1.0, 1.0)]), 1);
        p.push(Label::In, b(&[(0.0, 1.0), (-1.0, 1.0)]));
        p.push(Label::Out, b(&[(1.0, 2.0), (-1.0, 1.0)]));
        let t = p.project();
        assert_eq!(t.measure(), 1.0);
        assert_eq!(t.components_1d(), vec![(0.0, 1.0)]);
        assert_eq!(
            p.volume(Label::In) + p.volume(Label::Out),
            p.root().volume()
        );
    }

    #[test]
    fn adjacent_union_is_covered() {
        let mut p = Paving::new(b(&[(0.0, 2.0), (-1.0, 1.0)]), 1);
        p.push(Label::In, b(&[(0.0, 1.0), (0.0, 1.0)]));
        p.push(Label::In, b(&[(1.0, 2.0), (-1.0, 0.0)]));
        let t = p.project();
        assert_eq!(t.measure(), 2.0);
        assert_eq!(t.components_1d(), vec![(0.0, 2.0)]);
        assert_eq!(t.covers(&b(&[(0.5, 1.5)])), Coverage::Inside);
    }
}

use crate::interval::{BoxVec, Interval, IntervalFloat};

/// Answer of a coverage query against a projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    Inside,
    Outside,
    Straddle,
}

impl Coverage {
    fn merge(self, other: Coverage) -> Coverage {
        if self == other {
            self
        } else {
            Coverage::Straddle
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Covered,
    Uncovered,
    Split {
        axis: usize,
        children: Box<[Node; 2]>,
    },
}

// Non-aligned insertions stop refining here and are treated as uncovered.
const MAX_DEPTH: usize = 256;

/// Binary subdivision of the state root box; leaves are covered or not.
///
/// Inserted boxes are refinements of the root by midpoint bisection, so each
/// one is an exact union of tree cells and coverage labels are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjTree<T: IntervalFloat = f64> {
    root: BoxVec<T>,
    node: Node,
}

impl<T: IntervalFloat> ProjTree<T> {
    pub fn new(root: BoxVec<T>) -> Self {
        Self {
            root,
            node: Node::Uncovered,
        }
    }

    pub fn root(&self) -> &BoxVec<T> {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.node == Node::Uncovered
    }

    /// Marks `b` as covered. Parts of `b` outside the root are ignored.
    pub fn insert(&mut self, b: &BoxVec<T>) {
        assert_eq!(b.dim(), self.dim(), "projection dimension mismatch");
        let root = self.root.clone();
        insert(&mut self.node, &root, b, 0);
    }

    pub fn covers(&self, query: &BoxVec<T>) -> Coverage {
        self.covers_with(query, None)
    }

    /// Coverage of `query` by the projection united with an optional extra box.
    /// The exterior of the root counts as uncovered.
    pub fn covers_with(&self, query: &BoxVec<T>, extra: Option<&BoxVec<T>>) -> Coverage {
        assert_eq!(query.dim(), self.dim(), "query dimension mismatch");
        if query.is_empty() {
            return Coverage::Inside;
        }
        let extra_all = extra.is_some_and(|e| e.contains(query).unwrap_or(false));
        if extra_all {
            return Coverage::Inside;
        }
        let within = self.root.contains(query).unwrap_or(false);
        if !self.root.intersects(query).unwrap_or(false) {
            return match extra {
                Some(e) if e.intersects(query).unwrap_or(false) => Coverage::Straddle,
                _ => Coverage::Outside,
            };
        }
        let clipped = query.intersection(&self.root).expect("dims checked");
        let mut region = self.root.dims().to_vec();
        let inner = covers(
            &self.node,
            &mut region,
            clipped.dims(),
            extra.map(|e| e.dims()),
        );
        if within {
            inner
        } else {
            // the part beyond the root is uncovered unless the extra box reaches it
            let beyond = match extra {
                Some(e) if e.intersects(query).unwrap_or(false) => Coverage::Straddle,
                _ => Coverage::Outside,
            };
            inner.merge(beyond)
        }
    }

    /// Lebesgue measure of the covered set.
    pub fn measure(&self) -> f64 {
        let mut total = 0.0;
        self.for_each_leaf(|region, covered| {
            if covered {
                total += region.volume().to_f64();
            }
        });
        total
    }

    /// Covered leaf cells in depth-first order.
    pub fn covered_cells(&self) -> Vec<BoxVec<T>> {
        let mut out = Vec::new();
        self.for_each_leaf(|region, covered| {
            if covered {
                out.push(region.clone());
            }
        });
        out
    }

    /// Maximal covered intervals of a one-dimensional projection.
    pub fn components_1d(&self) -> Vec<(T, T)> {
        assert_eq!(
            self.dim(),
            1,
            "components_1d needs a one-dimensional state space"
        );
        let mut cells: Vec<(T, T)> = self
            .covered_cells()
            .iter()
            .map(|c| (c.dims()[0].lo(), c.dims()[0].hi()))
            .collect();
        cells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        merge_touching(cells)
    }

    fn for_each_leaf(&self, mut f: impl FnMut(&BoxVec<T>, bool)) {
        walk(&self.node, &self.root, &mut f);
    }
}

/// Merges sorted closed intervals that touch or overlap.
pub(crate) fn merge_touching<T: IntervalFloat>(sorted: Vec<(T, T)>) -> Vec<(T, T)> {
    let mut out: Vec<(T, T)> = Vec::new();
    for (lo, hi) in sorted {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

fn walk<T: IntervalFloat>(node: &Node, region: &BoxVec<T>, f: &mut impl FnMut(&BoxVec<T>, bool)) {
    match node {
        Node::Covered => f(region, true),
        Node::Uncovered => f(region, false),
        Node::Split { axis, children, .. } => {
            let (a, b) = region.bisect_axis(*axis);
            walk(&children[0], &a, f);
            walk(&children[1], &b, f);
        }
    }
}

fn overlaps_interior<T: IntervalFloat>(a: &BoxVec<T>, b: &BoxVec<T>) -> bool {
    a.dims()
        .iter()
        .zip(b.dims())
        .all(|(x, y)| x.lo() < y.hi() && y.lo() < x.hi())
}

// Whether a cell meets the query in a set of positive measure relative to the
// query's own dimension. Cells that only touch a face of a fat query are skipped.
fn relevant<T: IntervalFloat>(cell: &[Interval<T>], query: &[Interval<T>]) -> bool {
    cell.iter().zip(query).all(|(c, q)| {
        if q.lo() < q.hi() {
            c.lo().max(q.lo()) < c.hi().min(q.hi())
        } else {
            c.lo() <= q.lo() && q.hi() <= c.hi()
        }
    })
}

fn split_axis<T: IntervalFloat>(region: &BoxVec<T>, b: &BoxVec<T>) -> usize {
    // widest coordinate of the region along which b has a face strictly inside
    let mut best: Option<usize> = None;
    for (i, (r, x)) in region.dims().iter().zip(b.dims()).enumerate() {
        let cuts = (r.lo() < x.lo() && x.lo() < r.hi()) || (r.lo() < x.hi() && x.hi() < r.hi());
        if cuts && best.is_none_or(|j| r.width() > region.dims()[j].width()) {
            best = Some(i);
        }
    }
    best.unwrap_or_else(|| region.widest_axis())
}

fn insert<T: IntervalFloat>(node: &mut Node, region: &BoxVec<T>, b: &BoxVec<T>, depth: usize) {
    if *node == Node::Covered || !overlaps_interior(region, b) {
        return;
    }
    if b.contains(region).unwrap_or(false) {
        *node = Node::Covered;
        return;
    }
    if depth >= MAX_DEPTH {
        return;
    }
    if *node == Node::Uncovered {
        *node = Node::Split {
            axis: split_axis(region, b),
            children: Box::new([Node::Uncovered, Node::Uncovered]),
        };
    }
    if let Node::Split { axis, children, .. } = node {
        let (ra, rb) = region.bisect_axis(*axis);
        insert(&mut children[0], &ra, b, depth + 1);
        insert(&mut children[1], &rb, b, depth + 1);
        if children[0] == Node::Covered && children[1] == Node::Covered {
            *node = Node::Covered;
        }
    }
}

// `region` is scratch space: bisected in place and restored on return.
fn covers<T: IntervalFloat>(
    node: &Node,
    region: &mut [Interval<T>],
    query: &[Interval<T>],
    extra: Option<&[Interval<T>]>,
) -> Coverage {
    match node {
        Node::Covered => Coverage::Inside,
        Node::Uncovered => match extra {
            None => Coverage::Outside,
            Some(e) => {
                let mut inside = true;
                for ((r, q), x) in region.iter().zip(query).zip(e) {
                    let part = q.intersection(r);
                    if !x.intersects(&part) {
                        return Coverage::Outside;
                    }
                    inside &= x.contains_interval(&part);
                }
                if inside {
                    Coverage::Inside
                } else {
                    Coverage::Straddle
                }
            }
        },
        Node::Split { axis, children, .. } => {
            let saved = region[*axis];
            let halves = saved.bisect();
            let mut acc: Option<Coverage> = None;
            for (child, half) in children.iter().zip([halves.0, halves.1]) {
                region[*axis] = half;
                if !relevant(region, query) {
                    continue;
                }
                let c = covers(child, region, query, extra);
                if c == Coverage::Straddle {
                    region[*axis] = saved;
                    return c;
                }
                acc = Some(acc.map_or(c, |a| a.merge(c)));
            }
            region[*axis] = saved;
            acc.unwrap_or(Coverage::Outside)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(bounds: &[(f64, f64)]) -> BoxVec {
        BoxVec::from_bounds(bounds)
    }

    fn tree_0_2() -> ProjTree {
        let mut t = ProjTree::new(b(&[(0.0, 2.0)]));
        t.insert(&b(&[(0.0, 2.0)]));
        t
    }

    #[test]
    fn covers_examples() {
        let t = tree_0_2();
        assert_eq!(t.covers(&b(&[(0.5, 1.5)])), Coverage::Inside);
        assert_eq!(t.covers(&b(&[(2.5, 3.0)])), Coverage::Outside);
        let mut half = ProjTree::new(b(&[(0.0, 2.0)]));
        half.insert(&b(&[(0.0, 1.0)]));
        assert_eq!(half.covers(&b(&[(0.5, 1.5)])), Coverage::Straddle);
        assert_eq!(half.covers(&b(&[(1.25, 1.5)])), Coverage::Outside);
        assert_eq!(half.covers(&b(&[(1.5, 2.5)])), Coverage::Outside);
        assert_eq!(half.covers(&b(&[(0.5, 2.5)])), Coverage::Straddle);
    }

    #[test]
    fn measure_examples() {
        assert_eq!(tree_0_2().measure(), 2.0);
        assert_eq!(ProjTree::new(b(&[(0.0, 2.0)])).measure(), 0.0);
    }

    #[test]
    fn extra_box_fills_gaps() {
        let mut t = ProjTree::new(b(&[(-2.0, 2.0)]));
        t.insert(&b(&[(-2.0, -0.0625)]));
        t.insert(&b(&[(0.0625, 2.0)]));
        let core = b(&[(-0.1, 0.1)]);
        assert_eq!(t.covers(&b(&[(-0.05, 0.05)])), Coverage::Outside);
        assert_eq!(
            t.covers_with(&b(&[(-0.05, 0.05)]), Some(&core)),
            Coverage::Inside
        );
        assert_eq!(
            t.covers_with(&b(&[(-0.5, 0.5)]), Some(&core)),
            Coverage::Inside
        );
        assert_eq!(
            t.covers_with(&b(&[(1.5, 2.5)]), Some(&core)),
            Coverage::Straddle
        );
        assert_eq!(t.covers(&b(&[(-0.5, 0.5)])), Coverage::Straddle);
    }

    #[test]
    fn two_dimensional_aligned_insertions() {
        let mut t = ProjTree::new(b(&[(0.0, 4.0), (0.0, 4.0)]));
        t.insert(&b(&[(0.0, 2.0), (0.0, 4.0)]));
        t.insert(&b(&[(2.0, 3.0), (1.0, 2.0)]));
        assert_eq!(t.measure(), 9.0);
        assert_eq!(t.covers(&b(&[(1.0, 2.5), (1.0, 2.0)])), Coverage::Inside);
        assert_eq!(t.covers(&b(&[(1.0, 2.5), (1.0, 2.5)])), Coverage::Straddle);
        assert_eq!(t.covers(&b(&[(3.5, 4.0), (0.0, 4.0)])), Coverage::Outside);
    }

    #[test]
    fn merge_of_touching_intervals() {
        let m = merge_touching(vec![(0.0, 1.0), (1.0, 2.0), (3.0, 4.0)]);
        assert_eq!(m, vec![(0.0, 2.0), (3.0, 4.0)]);
    }
}

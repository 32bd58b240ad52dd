use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::{Interval, IntervalError, IntervalFloat};

/// Axis-aligned box, one interval per coordinate.
#[derive(Clone, PartialEq)]
pub struct BoxVec<T = f64> {
    dims: Vec<Interval<T>>,
}

impl<T: IntervalFloat> BoxVec<T> {
    pub fn new(dims: Vec<Interval<T>>) -> Self {
        Self { dims }
    }

    pub fn from_bounds(bounds: &[(T, T)]) -> Self {
        Self::new(
            bounds
                .iter()
                .map(|&(lo, hi)| Interval::new(lo, hi))
                .collect(),
        )
    }

    pub fn point(coords: &[T]) -> Self {
        Self::new(coords.iter().map(|&c| Interval::point(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[Interval<T>] {
        &self.dims
    }

    pub fn dims_mut(&mut self) -> &mut [Interval<T>] {
        &mut self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.dims.iter().any(Interval::is_empty)
    }

    /// Largest coordinate width.
    pub fn width(&self) -> T {
        self.dims
            .iter()
            .map(Interval::width)
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Lowest index among the widest coordinates.
    pub fn widest_axis(&self) -> usize {
        let mut best = 0;
        for (i, iv) in self.dims.iter().enumerate() {
            if iv.width() > self.dims[best].width() {
                best = i;
            }
        }
        best
    }

    /// Splits along the widest coordinate at its midpoint.
    pub fn bisect(&self) -> Result<(Self, Self), IntervalError> {
        if self.dims.is_empty() || self.width() <= T::zero() {
            return Err(IntervalError::PointBox);
        }
        Ok(self.bisect_axis(self.widest_axis()))
    }

    pub fn bisect_axis(&self, axis: usize) -> (Self, Self) {
        let (a, b) = self.dims[axis].bisect();
        let mut left = self.clone();
        let mut right = self.clone();
        left.dims[axis] = a;
        right.dims[axis] = b;
        (left, right)
    }

    fn check_dim(&self, other: &Self) -> Result<(), IntervalError> {
        if self.dim() != other.dim() {
            Err(IntervalError::DimensionMismatch(self.dim(), other.dim()))
        } else {
            Ok(())
        }
    }

    /// Closed-set containment of `inner` in `self`.
    pub fn contains(&self, inner: &Self) -> Result<bool, IntervalError> {
        self.check_dim(inner)?;
        Ok(self
            .dims
            .iter()
            .zip(&inner.dims)
            .all(|(o, i)| o.contains_interval(i)))
    }

    pub fn contains_point(&self, p: &[T]) -> bool {
        p.len() == self.dim() && self.dims.iter().zip(p).all(|(iv, &v)| iv.contains(v))
    }

    /// Closed-set intersection test; boxes sharing a face intersect.
    pub fn intersects(&self, other: &Self) -> Result<bool, IntervalError> {
        self.check_dim(other)?;
        Ok(self
            .dims
            .iter()
            .zip(&other.dims)
            .all(|(a, b)| a.intersects(b)))
    }

    pub fn intersection(&self, other: &Self) -> Result<Self, IntervalError> {
        self.check_dim(other)?;
        Ok(Self::new(
            self.dims
                .iter()
                .zip(&other.dims)
                .map(|(a, b)| a.intersection(b))
                .collect(),
        ))
    }

    pub fn hull(&self, other: &Self) -> Result<Self, IntervalError> {
        self.check_dim(other)?;
        Ok(Self::new(
            self.dims
                .iter()
                .zip(&other.dims)
                .map(|(a, b)| a.hull(b))
                .collect(),
        ))
    }

    /// Product of widths (not rounded).
    pub fn volume(&self) -> T {
        if self.is_empty() {
            return T::zero();
        }
        self.dims
            .iter()
            .map(Interval::width)
            .fold(T::one(), |a, b| a * b)
    }

    pub fn midpoint(&self) -> Vec<T> {
        self.dims.iter().map(Interval::midpoint).collect()
    }

    pub fn lower_corner(&self) -> Vec<T> {
        self.dims.iter().map(Interval::lo).collect()
    }

    /// Leading `k` coordinates.
    pub fn head(&self, k: usize) -> Self {
        Self::new(self.dims[..k].to_vec())
    }

    /// Coordinates from `k` on.
    pub fn tail(&self, k: usize) -> Self {
        Self::new(self.dims[k..].to_vec())
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::new(dims)
    }

    /// Total order by lower corner, then upper corner.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        let key = |iv: &Interval<T>| (iv.lo(), iv.hi());
        for (a, b) in self.dims.iter().zip(&other.dims) {
            match key(a).0.partial_cmp(&key(b).0).unwrap_or(Ordering::Equal) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        for (a, b) in self.dims.iter().zip(&other.dims) {
            match a.hi().partial_cmp(&b.hi()).unwrap_or(Ordering::Equal) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.dim().cmp(&other.dim())
    }

    pub fn to_f64(&self) -> BoxVec<f64> {
        BoxVec::new(self.dims.iter().map(Interval::to_f64).collect())
    }
}

impl<T: IntervalFloat> fmt::Display for BoxVec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, iv) in self.dims.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

impl<T: IntervalFloat> fmt::Debug for BoxVec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<T: IntervalFloat> FromStr for BoxVec<T> {
    type Err = IntervalError;

    /// Parses `[a,b],[c,d],...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut dims = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let close = rest
                .find(']')
                .ok_or_else(|| IntervalError::Parse(s.to_string()))?;
            dims.push(rest[..=close].parse()?);
            rest = rest[close + 1..].trim_start();
            if let Some(r) = rest.strip_prefix(',') {
                rest = r.trim_start();
                if rest.is_empty() {
                    return Err(IntervalError::Parse(s.to_string()));
                }
            } else if !rest.is_empty() {
                return Err(IntervalError::Parse(s.to_string()));
            }
        }
        if dims.is_empty() {
            return Err(IntervalError::Parse(s.to_string()));
        }
        Ok(Self::new(dims))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(bounds: &[(f64, f64)]) -> BoxVec {
        BoxVec::from_bounds(bounds)
    }

    #[test]
    fn bisect_widest_axis() {
        let (l, r) = b(&[(0.0, 2.0), (0.0, 1.0)]).bisect().unwrap();
        assert_eq!(l, b(&[(0.0, 1.0), (0.0, 1.0)]));
        assert_eq!(r, b(&[(1.0, 2.0), (0.0, 1.0)]));
        let (l, r) = b(&[(0.0, 1.0)]).bisect().unwrap();
        assert_eq!((l, r), (b(&[(0.0, 0.5)]), b(&[(0.5, 1.0)])));
    }

    #[test]
    fn bisect_tie_uses_lowest_index() {
        let (l, _) = b(&[(0.0, 1.0), (0.0, 1.0)]).bisect().unwrap();
        assert_eq!(l, b(&[(0.0, 0.5), (0.0, 1.0)]));
    }

    #[test]
    fn bisect_point_box_fails() {
        let err = BoxVec::point(&[1.0, 2.0]).bisect().unwrap_err();
        assert_eq!(err.to_string(), "cannot bisect point box");
    }

    #[test]
    fn set_queries() {
        let outer = b(&[(0.0, 2.0), (0.0, 2.0)]);
        assert!(outer.contains(&b(&[(0.5, 1.0), (0.0, 1.0)])).unwrap());
        assert!(b(&[(0.0, 1.0)]).intersects(&b(&[(1.0, 2.0)])).unwrap());
        assert!(!b(&[(0.0, 1.0)]).intersects(&b(&[(1.5, 2.0)])).unwrap());
        assert_eq!(b(&[(0.0, 2.0), (0.0, 0.5)]).volume(), 1.0);
        assert!(outer.contains(&b(&[(0.0, 1.0)])).is_err());
        assert!(outer.intersects(&b(&[(0.0, 1.0)])).is_err());
    }

    #[test]
    fn text_form() {
        let x = b(&[(-2.0, 2.0), (0.25, 0.5)]);
        assert_eq!(x.to_string(), "[-2,2],[0.25,0.5]");
        assert_eq!(x.to_string().parse::<BoxVec>().unwrap(), x);
        assert!("[0,1],".parse::<BoxVec>().is_err());
        assert!("".parse::<BoxVec>().is_err());
    }
}

//! Closed real intervals and axis-aligned boxes with outward rounding.

mod boxvec;
mod float;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use thiserror::Error;

pub use boxvec::BoxVec;
pub use float::IntervalFloat;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("cannot bisect point box")]
    PointBox,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid interval bounds [{0}, {1}]")]
    InvalidBounds(String, String),
    #[error("malformed interval text: {0}")]
    Parse(String),
}

/// A closed interval `[lo, hi]`.
///
/// Endpoints may be infinite. The empty set is a dedicated sentinel
/// (`lo = +inf`, `hi = -inf`) that every operation propagates.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval<T = f64> {
    lo: T,
    hi: T,
}

impl<T: IntervalFloat> Interval<T> {
    /// Builds `[lo, hi]`. Panics when `lo > hi` or an endpoint is NaN.
    #[inline]
    pub fn new(lo: T, hi: T) -> Self {
        // also rejects NaN endpoints
        if !(lo <= hi) {
            invalid_bounds(lo, hi);
        }
        Self { lo, hi }
    }

    #[inline]
    pub fn try_new(lo: T, hi: T) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(IntervalError::InvalidBounds(lo.to_string(), hi.to_string()));
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn point(v: T) -> Self {
        Self::new(v, v)
    }

    #[inline]
    pub fn empty() -> Self {
        Self {
            lo: T::infinity(),
            hi: T::neg_infinity(),
        }
    }

    #[inline]
    pub fn entire() -> Self {
        Self {
            lo: T::neg_infinity(),
            hi: T::infinity(),
        }
    }

    /// Tightest enclosure of a real given as `f64`.
    #[inline]
    pub fn from_f64(v: f64) -> Self {
        let (r, exact) = T::from_f64_exact(v);
        if exact {
            Self::point(r)
        } else {
            Self::new(r.next_down(), r.next_up())
        }
    }

    /// Enclosure of a decimal constant whose nearest double is `v`.
    /// Inexact literals are widened by one ULP each side.
    #[inline]
    pub fn from_constant(v: f64, exact: bool) -> Self {
        let i = Self::from_f64(v);
        if exact || i.is_empty() {
            i
        } else {
            Self::new(i.lo.next_down(), i.hi.next_up())
        }
    }

    #[inline]
    pub fn lo(&self) -> T {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> T {
        self.hi
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    #[inline]
    pub fn width(&self) -> T {
        if self.is_empty() {
            T::zero()
        } else {
            self.hi - self.lo
        }
    }

    #[inline]
    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Midpoint used by every bisection in the crate.
    #[inline]
    pub fn midpoint(&self) -> T {
        let two = T::one() + T::one();
        let m = self.lo / two + self.hi / two;
        if m.is_finite() {
            m
        } else if self.lo.is_finite() {
            self.lo
        } else if self.hi.is_finite() {
            self.hi
        } else {
            T::zero()
        }
    }

    #[inline]
    pub fn magnitude(&self) -> T {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value over the interval.
    #[inline]
    pub fn mignitude(&self) -> T {
        if self.contains(T::zero()) {
            T::zero()
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    #[inline]
    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }

    #[inline]
    pub fn contains_interval(&self, other: &Self) -> bool {
        other.is_empty() || (self.lo <= other.lo && other.hi <= self.hi)
    }

    #[inline]
    pub fn intersects(&self, other: &Self) -> bool {
        !self.is_empty() && !other.is_empty() && self.lo <= other.hi && other.lo <= self.hi
    }

    #[inline]
    pub fn intersection(&self, other: &Self) -> Self {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi {
            Self::empty()
        } else {
            Self { lo, hi }
        }
    }

    /// Interval union (convex hull) of two intervals.
    #[inline]
    pub fn hull(&self, other: &Self) -> Self {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        Self {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Splits at the midpoint.
    #[inline]
    pub fn bisect(&self) -> (Self, Self) {
        let m = self.midpoint();
        (Self::new(self.lo, m), Self::new(m, self.hi))
    }

    #[inline]
    pub fn sqr(&self) -> Self {
        self.powi(2)
    }

    #[inline]
    pub fn abs(&self) -> Self {
        if self.is_empty() {
            return *self;
        }
        Self::new(self.mignitude(), self.magnitude())
    }

    /// Integer power with exact range for even exponents.
    #[inline]
    pub fn powi(&self, k: i32) -> Self {
        if self.is_empty() {
            return *self;
        }
        if k == 0 {
            return Self::point(T::one());
        }
        if k < 0 {
            return Self::point(T::one()) / self.powi(-k);
        }
        let k = k as u32;
        if k % 2 == 0 {
            let lo = pow_mag_down(self.mignitude(), k);
            let hi = pow_mag_up(self.magnitude(), k);
            Self::new(lo, hi)
        } else {
            Self::new(pow_odd_down(self.lo, k), pow_odd_up(self.hi, k))
        }
    }

    #[inline]
    pub fn exp(&self) -> Self {
        if self.is_empty() {
            return *self;
        }
        if self.lo.is_zero() && self.hi.is_zero() {
            return Self::point(T::one());
        }
        let lo = T::libm_down(self.lo.exp()).max(T::zero());
        let hi = if self.hi == T::infinity() {
            T::infinity()
        } else {
            T::libm_up(self.hi.exp())
        };
        Self::new(lo, hi)
    }

    #[inline]
    pub fn sin(&self) -> Self {
        // sin has maxima at pi/2 + 2k*pi and minima at -pi/2 + 2k*pi
        self.trig(T::FRAC_PI_2(), -T::FRAC_PI_2(), T::sin)
    }

    #[inline]
    pub fn cos(&self) -> Self {
        self.trig(T::zero(), T::PI(), T::cos)
    }

    #[inline]
    fn trig(&self, max_at: T, min_at: T, f: fn(T) -> T) -> Self {
        if self.is_empty() {
            return *self;
        }
        let one = T::one();
        let unit = Self::new(-one, one);
        if !self.lo.is_finite() || !self.hi.is_finite() || self.width() >= T::TAU() {
            return unit;
        }
        if self.is_degenerate() && self.lo.is_zero() {
            let v = f(T::zero());
            return Self::point(v);
        }
        let fa = f(self.lo);
        let fb = f(self.hi);
        let mut lo = T::libm_down(fa.min(fb));
        let mut hi = T::libm_up(fa.max(fb));
        if self.hits_phase(max_at) {
            hi = one;
        }
        if self.hits_phase(min_at) {
            lo = -one;
        }
        Self::new(lo.max(-one), hi.min(one))
    }

    /// Whether `phase + 2k*pi` may lie in the interval for some integer k.
    /// Errs on the side of reporting a hit, which only widens the result.
    #[inline]
    fn hits_phase(&self, phase: T) -> bool {
        let tau = T::TAU();
        let slack = T::from(16.0).unwrap() * (T::one() + self.magnitude()) * T::epsilon();
        let a = (self.lo - phase - slack) / tau;
        let b = (self.hi - phase + slack) / tau;
        a.ceil() <= b.floor()
    }

    #[inline]
    pub fn to_f64(&self) -> Interval<f64> {
        if self.is_empty() {
            return Interval::empty();
        }
        // widening conversion is exact
        Interval {
            lo: self.lo.to_f64(),
            hi: self.hi.to_f64(),
        }
    }
}

#[inline]
fn pow_mag_down<T: IntervalFloat>(base: T, k: u32) -> T {
    pow_by_squaring(base, k, T::mul_down)
}

#[inline]
fn pow_mag_up<T: IntervalFloat>(base: T, k: u32) -> T {
    pow_by_squaring(base, k, T::mul_up)
}

// For base ≥ 0 every partial product is monotone in its operands, so rounding
// each one in the same direction bounds the exact power.
#[inline]
fn pow_by_squaring<T: IntervalFloat>(base: T, k: u32, mul: impl Fn(T, T) -> T) -> T {
    let mut result: Option<T> = None;
    let mut b = base;
    let mut e = k;
    loop {
        if e & 1 == 1 {
            result = Some(result.map_or(b, |r| mul(r, b)));
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        b = mul(b, b);
    }
    result.unwrap_or_else(T::one)
}

#[inline]
fn pow_odd_down<T: IntervalFloat>(v: T, k: u32) -> T {
    if v < T::zero() {
        -pow_mag_up(-v, k)
    } else {
        pow_mag_down(v, k)
    }
}

#[inline]
fn pow_odd_up<T: IntervalFloat>(v: T, k: u32) -> T {
    if v < T::zero() {
        -pow_mag_down(-v, k)
    } else {
        pow_mag_up(v, k)
    }
}

impl<T: IntervalFloat> Default for Interval<T> {
    #[inline]
    fn default() -> Self {
        Self::point(T::zero())
    }
}

#[cold]
#[inline(never)]
fn invalid_bounds<T: IntervalFloat>(lo: T, hi: T) -> ! {
    panic!("invalid interval bounds [{lo}, {hi}]")
}

impl<T: IntervalFloat> Add for Interval<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        if self.is_empty() || rhs.is_empty() {
            return Self::empty();
        }
        Self::new(T::add_down(self.lo, rhs.lo), T::add_up(self.hi, rhs.hi))
    }
}

impl<T: IntervalFloat> Sub for Interval<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        if self.is_empty() || rhs.is_empty() {
            return Self::empty();
        }
        Self::new(T::sub_down(self.lo, rhs.hi), T::sub_up(self.hi, rhs.lo))
    }
}

impl<T: IntervalFloat> Neg for Interval<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        if self.is_empty() {
            return self;
        }
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl<T: IntervalFloat> Mul for Interval<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        if self.is_empty() || rhs.is_empty() {
            return Self::empty();
        }
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let z = T::zero();
        // sign-case table: only the endpoint products that can be extremal
        let (lo, hi) = if a >= z {
            if c >= z {
                (T::mul_down(a, c), T::mul_up(b, d))
            } else if d <= z {
                (T::mul_down(b, c), T::mul_up(a, d))
            } else {
                (T::mul_down(b, c), T::mul_up(b, d))
            }
        } else if b <= z {
            if c >= z {
                (T::mul_down(a, d), T::mul_up(b, c))
            } else if d <= z {
                (T::mul_down(b, d), T::mul_up(a, c))
            } else {
                (T::mul_down(a, d), T::mul_up(a, c))
            }
        } else if c >= z {
            (T::mul_down(a, d), T::mul_up(b, d))
        } else if d <= z {
            (T::mul_down(b, c), T::mul_up(a, c))
        } else {
            (
                T::mul_down(a, d).min(T::mul_down(b, c)),
                T::mul_up(a, c).max(T::mul_up(b, d)),
            )
        };
        Self::new(lo, hi)
    }
}

impl<T: IntervalFloat> Div for Interval<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        if self.is_empty() || rhs.is_empty() {
            return Self::empty();
        }
        if rhs.contains(T::zero()) {
            return Self::entire();
        }
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let pairs = [(a, c), (a, d), (b, c), (b, d)];
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for (x, y) in pairs {
            lo = lo.min(T::div_down(x, y));
            hi = hi.max(T::div_up(x, y));
        }
        Self::new(lo, hi)
    }
}

impl<T: IntervalFloat> fmt::Display for Interval<T> {
    #[inline]
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "[empty]")
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

impl<T: IntervalFloat> fmt::Debug for Interval<T> {
    #[inline]
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<T: IntervalFloat> FromStr for Interval<T> {
    type Err = IntervalError;

    #[inline]
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IntervalError::Parse(s.to_string());
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(bad)?;
        if inner.trim() == "empty" {
            return Ok(Self::empty());
        }
        let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
        let lo: T = parse_endpoint(lo).ok_or_else(bad)?;
        let hi: T = parse_endpoint(hi).ok_or_else(bad)?;
        Self::try_new(lo, hi)
    }
}

#[inline]
fn parse_endpoint<T: IntervalFloat>(s: &str) -> Option<T> {
    match s.trim() {
        "inf" | "+inf" => Some(T::infinity()),
        "-inf" => Some(T::neg_infinity()),
        t => t.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type I = Interval<f64>;

    #[test]
    fn hull_examples() {
        assert_eq!(I::new(0.0, 1.0).hull(&I::new(2.0, 3.0)), I::new(0.0, 3.0));
        assert_eq!(I::new(-1.0, 5.0).hull(&I::new(0.0, 2.0)), I::new(-1.0, 5.0));
        assert_eq!(I::point(0.7).hull(&I::point(0.7)), I::point(0.7));
        assert_eq!(I::empty().hull(&I::new(1.0, 2.0)), I::new(1.0, 2.0));
    }

    #[test]
    fn division_by_zero_is_unbounded() {
        let r = I::new(1.0, 2.0) / I::new(-1.0, 1.0);
        assert_eq!(r.lo(), f64::NEG_INFINITY);
        assert_eq!(r.hi(), f64::INFINITY);
    }

    #[test]
    fn even_power_is_tight() {
        assert_eq!(I::new(-1.0, 2.0).sqr(), I::new(0.0, 4.0));
        assert_eq!(I::new(-3.0, -2.0).powi(2), I::new(4.0, 9.0));
        assert_eq!(I::new(-2.0, 1.0).powi(3), I::new(-8.0, 1.0));
        let inv = I::new(2.0, 4.0).powi(-1);
        assert!(inv.contains(0.25) && inv.contains(0.5));
    }

    #[test]
    fn sine_detects_extrema() {
        let s = I::new(0.0, std::f64::consts::PI).sin();
        assert_eq!(s.hi(), 1.0);
        assert!(s.lo() <= 0.0 && s.lo() > -1e-15);
        let c = I::new(-0.5, 0.5).cos();
        assert_eq!(c.hi(), 1.0);
        let w = I::new(-10.0, 10.0).sin();
        assert_eq!(w, I::new(-1.0, 1.0));
    }

    #[test]
    fn origin_evaluations_stay_exact() {
        assert_eq!(I::point(0.0).sin(), I::point(0.0));
        assert_eq!(I::point(0.0).exp(), I::point(1.0));
        assert_eq!(I::point(0.0).cos(), I::point(1.0));
    }

    #[test]
    fn text_round_trip() {
        let a = I::new(-2.0, 0.105);
        assert_eq!(a.to_string(), "[-2,0.105]");
        assert_eq!("[-2,0.105]".parse::<I>().unwrap(), a);
        assert!("[3,1]".parse::<I>().is_err());
        assert!("3,1".parse::<I>().is_err());
    }

    #[test]
    fn inexact_constant_brackets_decimal() {
        let c = I::from_constant(0.2, false);
        assert!(c.lo() < 0.2 && 0.2 < c.hi());
        assert_eq!(I::from_constant(0.5, true), I::point(0.5));
    }

    #[test]
    fn single_precision_endpoints() {
        let a = Interval::<f32>::new(0.1, 0.2) + Interval::<f32>::new(0.3, 0.4);
        // exact real sums of the f32 endpoints
        let lo = 0.1f32 as f64 + 0.3f32 as f64;
        let hi = 0.2f32 as f64 + 0.4f32 as f64;
        assert!((a.lo() as f64) <= lo && hi <= a.hi() as f64);
        assert!(a.contains(0.5));
        let w = Interval::<f32>::from_f64(0.1);
        assert!(w.to_f64().contains(0.1));
    }
}

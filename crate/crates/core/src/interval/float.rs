//! Endpoint scalar types and directed rounding.
//!
//! Outward rounding is realized exactly for `+ - * /`: the rounded-to-nearest
//! result is computed first and an error-free transform (TwoSum for sums,
//! fused multiply-add for products and quotients) tells whether the exact
//! value lies above or below it. Only inexact results are nudged by one ULP,
//! so exact operations (e.g. anything evaluated at the origin) stay degenerate.
//!
//! Transcendental functions come from the platform `libm`, which is not
//! correctly rounded; those results are inflated by [`IntervalFloat::LIBM_ULPS`].

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FloatConst};

/// Scalar usable as an interval endpoint.
pub trait IntervalFloat:
    Float + FloatConst + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    /// Worst-case libm error budget, in ULPs, applied to `sin`, `cos` and `exp`.
    const LIBM_ULPS: u32 = 2;
    /// Veltkamp splitting constant `2^⌈p/2⌉ + 1`.
    const SPLITTER: Self;
    /// Magnitude range in which splitting can neither overflow nor underflow.
    const SPLIT_MIN: Self;
    const SPLIT_MAX: Self;

    fn next_up(self) -> Self;
    fn next_down(self) -> Self;

    /// Nearest representable value to an `f64` together with an exactness flag.
    fn from_f64_exact(v: f64) -> (Self, bool);
    fn to_f64(self) -> f64;

    #[inline]
    fn add_down(a: Self, b: Self) -> Self {
        let s = a + b;
        if !s.is_finite() {
            return overflow_down(s, a.is_finite() && b.is_finite());
        }
        match two_sum_err(a, b, s) {
            e if e < Self::zero() => s.next_down(),
            _ => s,
        }
    }

    #[inline]
    fn add_up(a: Self, b: Self) -> Self {
        let s = a + b;
        if !s.is_finite() {
            return overflow_up(s, a.is_finite() && b.is_finite());
        }
        match two_sum_err(a, b, s) {
            e if e > Self::zero() => s.next_up(),
            _ => s,
        }
    }

    #[inline]
    fn sub_down(a: Self, b: Self) -> Self {
        Self::add_down(a, -b)
    }

    #[inline]
    fn sub_up(a: Self, b: Self) -> Self {
        Self::add_up(a, -b)
    }

    #[inline]
    fn mul_down(a: Self, b: Self) -> Self {
        if a.is_zero() || b.is_zero() {
            return Self::zero();
        }
        let p = a * b;
        if !p.is_finite() {
            return overflow_down(p, a.is_finite() && b.is_finite());
        }
        if tiny(p) {
            return p.next_down();
        }
        if two_prod_err(a, b, p) < Self::zero() {
            p.next_down()
        } else {
            p
        }
    }

    #[inline]
    fn mul_up(a: Self, b: Self) -> Self {
        if a.is_zero() || b.is_zero() {
            return Self::zero();
        }
        let p = a * b;
        if !p.is_finite() {
            return overflow_up(p, a.is_finite() && b.is_finite());
        }
        if tiny(p) {
            return p.next_up();
        }
        if two_prod_err(a, b, p) > Self::zero() {
            p.next_up()
        } else {
            p
        }
    }

    /// `a / b` rounded down; `b` must be nonzero.
    #[inline]
    fn div_down(a: Self, b: Self) -> Self {
        if a.is_zero() {
            return Self::zero();
        }
        let q = a / b;
        if !q.is_finite() {
            return overflow_down(q, a.is_finite());
        }
        if tiny(q) || !b.is_finite() {
            return q.next_down();
        }
        // exact residual a - q*b; true quotient exceeds q iff residual/b > 0
        let r = residual(a, b, q);
        if (r < Self::zero()) != (b < Self::zero()) && !r.is_zero() {
            q.next_down()
        } else {
            q
        }
    }

    #[inline]
    fn div_up(a: Self, b: Self) -> Self {
        if a.is_zero() {
            return Self::zero();
        }
        let q = a / b;
        if !q.is_finite() {
            return overflow_up(q, a.is_finite());
        }
        if tiny(q) || !b.is_finite() {
            return q.next_up();
        }
        let r = residual(a, b, q);
        if (r > Self::zero()) == (b > Self::zero()) && !r.is_zero() {
            q.next_up()
        } else {
            q
        }
    }

    /// Steps `v` down by the libm error budget.
    #[inline]
    fn libm_down(v: Self) -> Self {
        (0..Self::LIBM_ULPS).fold(v, |acc, _| acc.next_down())
    }

    #[inline]
    fn libm_up(v: Self) -> Self {
        (0..Self::LIBM_ULPS).fold(v, |acc, _| acc.next_up())
    }
}

#[inline]
fn two_sum_err<T: Float>(a: T, b: T, s: T) -> T {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

/// Exact `a·b − p` for `p = fl(a·b)`: hardware FMA when the target has it,
/// Dekker's product otherwise (software FMA is far slower).
#[inline]
fn two_prod_err<T: IntervalFloat>(a: T, b: T, p: T) -> T {
    if cfg!(target_feature = "fma") || !splittable(a) || !splittable(b) {
        return a.mul_add(b, -p);
    }
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    ((ah * bh - p) + ah * bl + al * bh) + al * bl
}

/// Sign-exact `a − q·b` (the rounding of the last step preserves the sign).
#[inline]
fn residual<T: IntervalFloat>(a: T, b: T, q: T) -> T {
    if cfg!(target_feature = "fma") || !splittable(q) || !splittable(b) {
        return (-q).mul_add(b, a);
    }
    let p = q * b;
    let e = two_prod_err(q, b, p);
    (a - p) - e
}

#[inline]
fn splittable<T: IntervalFloat>(v: T) -> bool {
    let m = v.abs();
    m >= T::SPLIT_MIN && m <= T::SPLIT_MAX
}

#[inline]
fn split<T: IntervalFloat>(v: T) -> (T, T) {
    let c = T::SPLITTER * v;
    let hi = c - (c - v);
    (hi, v - hi)
}

// Products in the subnormal range lose the error-free property of FMA.
#[inline]
fn tiny<T: Float>(v: T) -> bool {
    v.abs() < T::min_positive_value() * T::from(1u64 << 53).unwrap()
}

#[inline]
fn overflow_down<T: Float>(v: T, finite_inputs: bool) -> T {
    if finite_inputs && v == T::infinity() {
        T::max_value()
    } else {
        v
    }
}

#[inline]
fn overflow_up<T: Float>(v: T, finite_inputs: bool) -> T {
    if finite_inputs && v == T::neg_infinity() {
        T::min_value()
    } else {
        v
    }
}

macro_rules! impl_interval_float {
    ($t:ty, $bits:ty, $split:expr, $min:expr, $max:expr) => {
        impl IntervalFloat for $t {
            const SPLITTER: Self = $split;
            const SPLIT_MIN: Self = $min;
            const SPLIT_MAX: Self = $max;

            #[inline]
            fn next_up(self) -> Self {
                if self.is_nan() || self == <$t>::INFINITY {
                    return self;
                }
                if self == 0.0 {
                    return <$t>::from_bits(1);
                }
                let bits = self.to_bits();
                if self > 0.0 {
                    <$t>::from_bits(bits + 1)
                } else {
                    <$t>::from_bits(bits - 1)
                }
            }

            #[inline]
            fn next_down(self) -> Self {
                -(-self).next_up()
            }

            #[inline]
            fn from_f64_exact(v: f64) -> (Self, bool) {
                let r = v as $t;
                (r, (r as f64) == v || v.is_nan())
            }

            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_interval_float!(f64, u64, 134_217_729.0, 1e-290, 1e290);
impl_interval_float!(f32, u32, 4097.0, 1e-25, 1e25);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ulp_steps() {
        assert!(1.0f64.next_up() > 1.0);
        assert!(1.0f64.next_down() < 1.0);
        assert!(0.0f64.next_down() < 0.0);
        assert_eq!((-0.0f64).next_up(), f64::from_bits(1));
        assert_eq!(f64::INFINITY.next_up(), f64::INFINITY);
        assert!(1.0f32.next_up() > 1.0);
    }

    #[test]
    fn exact_operations_are_not_inflated() {
        assert_eq!(f64::add_down(1.0, 2.0), 3.0);
        assert_eq!(f64::add_up(1.0, 2.0), 3.0);
        assert_eq!(f64::mul_down(1.5, 2.0), 3.0);
        assert_eq!(f64::div_up(3.0, 2.0), 1.5);
    }

    #[test]
    fn inexact_operations_bracket() {
        let lo = f64::add_down(0.1, 0.2);
        let hi = f64::add_up(0.1, 0.2);
        assert!(lo < hi);
        let lo = f64::div_down(1.0, 3.0);
        let hi = f64::div_up(1.0, 3.0);
        assert!(lo < hi && hi.next_down() == lo);
        let lo = f64::div_down(1.0, -3.0);
        let hi = f64::div_up(1.0, -3.0);
        assert!(lo < hi);
    }

    #[test]
    fn overflow_keeps_lower_bound_finite() {
        assert_eq!(f64::mul_down(f64::MAX, 2.0), f64::MAX);
        assert_eq!(f64::mul_up(f64::MAX, 2.0), f64::INFINITY);
    }
}

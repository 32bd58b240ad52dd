//! Scalar domains an [`Expr`](super::Expr) can be evaluated over.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::interval::{Interval, IntervalFloat};

/// Arithmetic needed by expression evaluation.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A literal; `exact` is false when the decimal text was rounded.
    fn constant(v: f64, exact: bool) -> Self;
    fn powi(&self, k: i32) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn abs(&self) -> Self;
    fn signum(&self) -> Self;

    fn sqr(&self) -> Self {
        self.powi(2)
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn constant(v: f64, _exact: bool) -> Self {
                v as $t
            }
            fn powi(&self, k: i32) -> Self {
                <$t>::powi(*self, k)
            }
            fn sin(&self) -> Self {
                <$t>::sin(*self)
            }
            fn cos(&self) -> Self {
                <$t>::cos(*self)
            }
            fn exp(&self) -> Self {
                <$t>::exp(*self)
            }
            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }
            fn signum(&self) -> Self {
                if *self == 0.0 {
                    0.0
                } else {
                    <$t>::signum(*self)
                }
            }
        }
    };
}

impl_float_scalar!(f64);
impl_float_scalar!(f32);

impl<T: IntervalFloat> Scalar for Interval<T> {
    fn constant(v: f64, exact: bool) -> Self {
        Interval::from_constant(v, exact)
    }
    fn powi(&self, k: i32) -> Self {
        Interval::powi(self, k)
    }
    fn sqr(&self) -> Self {
        Interval::sqr(self)
    }
    fn sin(&self) -> Self {
        Interval::sin(self)
    }
    fn cos(&self) -> Self {
        Interval::cos(self)
    }
    fn exp(&self) -> Self {
        Interval::exp(self)
    }
    fn abs(&self) -> Self {
        Interval::abs(self)
    }
    fn signum(&self) -> Self {
        if self.is_empty() {
            return *self;
        }
        let s = |v: T| {
            if v > T::zero() {
                T::one()
            } else if v < T::zero() {
                -T::one()
            } else {
                T::zero()
            }
        };
        Interval::new(s(self.lo()), s(self.hi()))
    }
}

/// First-order dual number `re + du·ε` with `ε² = 0`.
///
/// Over `f64` this gives exact-to-rounding derivatives; over [`Interval`]
/// it encloses the derivative over a whole box (mean-value forms).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub re: S,
    pub du: S,
}

impl<S: Scalar> Dual<S> {
    pub fn new(re: S, du: S) -> Self {
        Self { re, du }
    }

    pub fn variable(re: S) -> Self {
        Self::new(re, S::constant(1.0, true))
    }

    pub fn constant_of(re: S) -> Self {
        Self::new(re, S::constant(0.0, true))
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.du + rhs.du)
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.du - rhs.du)
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let du = self.du * rhs.re.clone() + self.re.clone() * rhs.du;
        Self::new(self.re * rhs.re, du)
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let re = self.re.clone() / rhs.re.clone();
        let du = (self.du - re.clone() * rhs.du) / rhs.re;
        Self::new(re, du)
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.du)
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn constant(v: f64, exact: bool) -> Self {
        Self::constant_of(S::constant(v, exact))
    }

    fn powi(&self, k: i32) -> Self {
        if k == 0 {
            return Self::constant(1.0, true);
        }
        let d = S::constant(k as f64, true) * self.re.powi(k - 1) * self.du.clone();
        Self::new(self.re.powi(k), d)
    }

    fn sin(&self) -> Self {
        Self::new(self.re.sin(), self.re.cos() * self.du.clone())
    }

    fn cos(&self) -> Self {
        Self::new(self.re.cos(), -(self.re.sin() * self.du.clone()))
    }

    fn exp(&self) -> Self {
        let e = self.re.exp();
        Self::new(e.clone(), e * self.du.clone())
    }

    fn abs(&self) -> Self {
        Self::new(self.re.abs(), self.re.signum() * self.du.clone())
    }

    fn signum(&self) -> Self {
        Self::constant_of(self.re.signum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_chain_rule() {
        // d/dx sin(x^2) at x = 0.3
        let x = Dual::variable(0.3f64);
        let y = x.powi(2).sin();
        let expect = (0.09f64).cos() * 0.6;
        assert!((y.du - expect).abs() < 1e-15);
    }

    #[test]
    fn interval_dual_encloses_derivative_range() {
        let x = Dual::variable(Interval::new(0.0, 1.0));
        let y = x.powi(3);
        assert!(y.du.contains(0.0) && y.du.contains(3.0));
    }
}

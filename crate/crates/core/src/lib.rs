//! Guaranteed interval computation of robust negative-definite and invariant
//! sets for uncertain discrete-time plants, with Lyapunov synthesis,
//! controller extraction and Monte Carlo validation.
//!
//! The numeric core is generic over the endpoint type (`f64` or `f32`); the
//! aliases below fix it to `f64`, which is what the pipeline uses.

pub mod expr;
pub mod interval;
pub mod paving;
pub mod rnis;
pub mod sevia;
pub mod sim;
pub mod synth;

pub use interval::IntervalFloat;

pub type Real = f64;
pub type Interval = interval::Interval<f64>;
pub type BoxVec = interval::BoxVec<f64>;
pub type Paving = paving::Paving<f64>;
pub type ProjTree = paving::ProjTree<f64>;

pub type Interval32 = interval::Interval<f32>;
pub type BoxVec32 = interval::BoxVec<f32>;
pub type Paving32 = paving::Paving<f32>;

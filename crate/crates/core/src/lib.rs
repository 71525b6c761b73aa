//! Certification of ReLU networks against few-pixel (l0) perturbations.
//!
//! The core routines are generic over [`Scalar`]; `f64` is the production
//! type and [`Exact`] (big rationals) is used to check arithmetic identities
//! without rounding. The aliases below fix the scalar to `f64`.

pub mod cover;
pub mod error;
pub mod geometry;
pub mod network;
pub mod oracles;
pub mod propagation;
pub mod scalar;
pub mod seed;
pub mod verifier;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use geometry::{Ball0Spec, BoxDomain};
pub use network::{LabeledInput, Network};
pub use propagation::{AffineExpr, Interval, Strategy};
pub use verifier::{Verdict, VerdictReport};

/// Arbitrary-precision rational scalar.
pub type Exact = num_rational::BigRational;

pub type Domain = BoxDomain<f64>;
pub type Ball = Ball0Spec<f64>;
pub type Net = Network<f64>;
pub type Input = LabeledInput<f64>;
pub type Expr = AffineExpr<f64>;
pub type Report = VerdictReport<f64>;

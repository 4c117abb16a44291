//! Nonlocal Pucci-type operators on Riemannian model manifolds with
//! nonnegative sectional curvature, together with the numerical checks of the
//! inequalities that drive their regularity theory.

pub mod barrier;
pub mod dyadic;
pub mod envelope;
pub mod error;
pub mod kernel;
pub mod lab;
pub mod manifold;
pub mod numeric;
pub mod operator;

pub use error::{Error, Result};
pub use manifold::{Coords, ManifoldModel, Point, TangentVector};

//! Stochastic geometry in the three constant-curvature models embedded in
//! `R^{n+1}`: the sphere, the affine Euclidean chart and the hyperboloid.
//!
//! The crate is organised bottom-up:
//!
//! - [`spaces`]: model constraints, distances, polar coordinates, reflections
//!   and geodesic ball volumes.
//! - [`sampling`]: counter-based random streams, uniform ball points and
//!   hyperplanes drawn from the invariant measure.
//! - [`hull`]: hull/hyperplane incidence, properness, spherical polar duals
//!   and polygon areas.
//! - [`shape`]: sampleable sets and densities used as laws of random points.
//! - [`functionals`]: the `U1` hyperplane-hitting functional, polar volumes
//!   and (paired) Monte Carlo estimators of their expectations.
//! - [`symmetrize`]: polar-grid densities on 2-dimensional models, two-point
//!   symmetrization, symmetric decreasing rearrangement and Baernstein-Taylor
//!   iteration.

pub mod error;
pub mod functionals;
pub mod hull;
pub mod numeric;
pub mod sampling;
pub mod shape;
pub mod spaces;
pub mod symmetrize;

pub use error::{GeomError, Result};
pub use functionals::{Estimate, Functional, McConfig};
pub use hull::{PointSet, SphericalPolygon};
pub use shape::{Shape, ShapeSpec};
pub use sampling::{BallRegion, RngStream};
pub use spaces::{Geometry, Hyperplane, Point, PolarCoord, Side, Space};
pub use symmetrize::{GridFunction, PolarGrid, TwoPointMap};

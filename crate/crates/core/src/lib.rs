//! Numerical laboratory for the Riemannian Cauchy problem for Einstein metrics
//! and for generalized Killing spinors.
//!
//! Cauchy data `(g, W, λ)` live on a [`Chart`]: either a periodic grid with
//! spectral differentiation or an invariant frame on a Lie group. From there
//! the crate checks the constraint equations, evolves the normal-geodesic
//! family `dt² + g_t`, computes the formal Taylor jet of `g_t`, and verifies
//! spinor identities against exact space-form solutions.

pub mod algebra;
pub mod chart;
pub mod clifford;
pub mod constraints;
pub mod curvature;
pub mod error;
pub mod evolution;
pub mod field;
pub mod homogeneous;
pub mod integrate;
pub mod jets;
pub mod random;
pub mod snapshot;
pub mod spectral;
pub mod spinor;

pub use chart::{Chart, ChartKind, Su2Model};
pub use constraints::MetricState;
pub use error::{Error, Result};
pub use evolution::{Status, Trajectory};
pub use field::{Field, Rank, ScalarField};
pub use homogeneous::LeftInvariantMetric;
pub use spinor::SpinorField;

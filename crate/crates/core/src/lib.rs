//! Brownian motion under time-dependent Riemannian metrics.
//!
//! The crate simulates `g(t)`-Brownian motion through the horizontal
//! frame-bundle SDE with its vertical (metric-change) correction, splits the
//! distance-to-pole process into drift, martingale and cut-locus local-time
//! parts, builds the Laplacian/Jacobi comparison barriers and classifies
//! explosion of one-dimensional comparison diffusions by the Feller test.
//!
//! Module map:
//!
//! * [`models`]: evolving-metric manifolds with closed-form geometry.
//! * [`frame`]: Euler–Heun integration of the frame SDE, path ensembles.
//! * [`radial`]: radial semimartingale decomposition and local time.
//! * [`comparison`]: Jacobi comparison ODE, index-form bound, `V`, `F̄`, constants.
//! * [`explosion`]: Feller test, 1D diffusions, exit-time explosion tables.
//! * [`drift`]: drifted diffusions `Δ/2 + Z`, `(∇Z)♭` and the curvature-drift check.
//! * [`verification`]: the acceptance criteria as runnable checks.

pub mod comparison;
pub mod drift;
pub mod error;
pub mod explosion;
pub mod frame;
pub mod linalg;
pub mod models;
pub mod radial;
pub mod rng;
pub mod stats;
pub mod verification;

pub use comparison::{ComparisonProfile, JacobiSolution};
pub use drift::VectorFieldSpec;
pub use error::{Error, Result};
pub use explosion::{DriftSpec, ExplosionTable, ExplosionVerdict};
pub use frame::{FrameState, PathRecord};
pub use models::{EvolvingMetricModel, MetricJet, ModelKind, Point};
pub use radial::RadialDecomposition;

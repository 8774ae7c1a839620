//! Discrete curvatures of closed polyhedral surfaces and the inverse
//! problems they pose.
//!
//! A surface here is a closed triangulated 2-manifold carrying either edge
//! lengths (a polyhedral metric with Euclidean, hyperbolic, or spherical
//! triangles) or an inversive-distance circle packing. The crate computes
//! vertex and edge curvatures of such data, solves for metrics attaining a
//! prescribed curvature by minimizing convex energies, and certifies the
//! uniqueness of solutions with seeded multi-start runs.

pub mod curvature;
pub mod geom;
pub mod integrals;
pub mod mesh;
pub mod packing;
pub mod rigidity;
pub mod schlaefli;
pub mod shapes;
pub mod solver;

pub use curvature::PolyhedralMetric;
pub use geom::{DomainClass, GeometryTag, TriangleLengths};
pub use mesh::{Field, FieldSupport, Mesh};
pub use packing::PackingData;
pub use rigidity::{MultiStartConfig, RigidityReport, StartOutcome};
pub use schlaefli::{Functional, FunctionalSpec};
pub use solver::{SolveReport, SolverConfig, SolveStatus};

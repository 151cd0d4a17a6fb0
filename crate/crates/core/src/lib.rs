//! Multi-agent coverage and inspection trajectory planning driven by a
//! Helmholtz potential of the uncovered target density.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the common double-precision instantiation.

pub mod fields;
pub mod geometry;
pub mod harness;
pub mod inspection;
pub mod pde;
pub mod scalar;
pub mod swarm;
pub mod vec3;

pub use scalar::Real;
pub use vec3::Vec3;

pub type Vec3d = Vec3<f64>;
pub type TetMesh64 = geometry::TetMesh<f64>;
pub type SurfaceMesh64 = geometry::SurfaceMesh<f64>;
pub type Domain64 = geometry::Domain<f64>;
pub type Structure64 = geometry::Structure<f64>;
pub type ScalarField64 = fields::ScalarField<f64>;
pub type HelmholtzSystem64 = pde::HelmholtzSystem<f64>;
pub type PotentialField64 = pde::PotentialField<f64>;
pub type AgentState64 = swarm::AgentState<f64>;
pub type Simulation64 = harness::Simulation<f64>;
pub type RunReport64 = harness::RunReport<f64>;

pub type Vec3f = Vec3<f32>;
pub type TetMesh32 = geometry::TetMesh<f32>;
pub type SurfaceMesh32 = geometry::SurfaceMesh<f32>;
pub type Simulation32 = harness::Simulation<f32>;

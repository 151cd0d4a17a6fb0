//! Meshes, spatial acceleration and distance / visibility queries.

mod aabb;
mod bvh;
mod grid;
mod locate;
pub mod shapes;
mod surface;
mod tet;
pub mod triangle;

pub use aabb::Aabb;
pub use bvh::{brute_force, Bvh};
pub use grid::NodeGrid;
pub use locate::{locate_brute_force, Location, PointLocator};
pub use surface::SurfaceMesh;
pub use tet::{point_inside, signed_volume, CellGeometry, TetMesh};

use crate::scalar::Real;
use crate::vec3::Vec3;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("unsupported mesh format '{0}' (expected .stl, .obj or .msh)")]
    UnsupportedFormat(String),
    #[error("face {face} is degenerate (zero area)")]
    DegenerateFace { face: usize },
    #[error("face {face} is invalid: {reason}")]
    InvalidFace { face: usize, reason: String },
    #[error("cell {cell} is invalid: {reason}")]
    InvalidCell { cell: usize, reason: String },
    #[error("empty mesh: {0}")]
    EmptyMesh(String),
    #[error("mesh cells form more than one connected component")]
    Disconnected,
    #[error("resolution {0:?} must be at least 2 per axis")]
    InvalidResolution([usize; 3]),
    #[error("point {0} is outside the domain")]
    OutsideDomain(String),
}

impl GeometryError {
    pub(crate) fn with_path(self, p: &Path) -> Self {
        match self {
            GeometryError::Parse { line, message, .. } => GeometryError::Parse {
                path: p.display().to_string(),
                line,
                message,
            },
            other => other,
        }
    }
}

/// Result of a closest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceQueryResult<T> {
    pub distance: T,
    pub closest: Vec3<T>,
    /// Unit direction; zero when `degenerate`.
    pub direction: Vec3<T>,
    /// Set when the query point lies on the surface.
    pub degenerate: bool,
    /// Set when another, distinct closest point at the same distance exists.
    pub ambiguous: bool,
    /// Face that produced `closest`.
    pub face: usize,
}

impl<T: Real> DistanceQueryResult<T> {
    /// Direction from `p` toward `closest`.
    pub fn toward(p: Vec3<T>, closest: Vec3<T>, face: usize) -> Self {
        let d = closest - p;
        let distance = d.norm();
        let degenerate = !(distance > T::zero());
        Self {
            distance,
            closest,
            direction: if degenerate { Vec3::zero() } else { d / distance },
            degenerate,
            ambiguous: false,
            face,
        }
    }

    /// Same query with the direction flipped to point away from `closest`.
    pub fn flipped(mut self) -> Self {
        self.direction = -self.direction;
        self
    }
}

/// Exact unsigned distance from `p` to a structure surface.
pub fn distance_to_surface<T: Real>(p: Vec3<T>, bvh: &Bvh<T>) -> DistanceQueryResult<T> {
    bvh.closest_point(p)
}

/// Whether the surface blocks the segment from `origin` to `target`.
///
/// Hits within `slack` of the target are ignored, as are faces in `ignore`.
pub fn ray_hits_surface_before<T: Real>(
    origin: Vec3<T>,
    target: Vec3<T>,
    bvh: &Bvh<T>,
    slack: T,
    ignore: &[usize],
) -> bool {
    let d = target - origin;
    let len = d.norm();
    if !(len > T::zero()) {
        return false;
    }
    let t_max = len - slack;
    if !(t_max > T::zero()) {
        return false;
    }
    bvh.segment_hits(origin, d / len, t_max, ignore)
}

/// Distance to the flight-domain boundary: analytic for pure boxes, BVH otherwise.
#[derive(Debug, Clone)]
enum BoundaryDistance<T> {
    Box(Aabb<T>),
    Faces(Bvh<T>),
}

/// A tet mesh bundled with point location and boundary distance queries.
#[derive(Debug, Clone)]
pub struct Domain<T> {
    mesh: TetMesh<T>,
    locator: PointLocator<T>,
    boundary: BoundaryDistance<T>,
}

impl<T: Real> Domain<T> {
    pub fn new(mesh: TetMesh<T>) -> Self {
        let locator = PointLocator::new(&mesh);
        let boundary = match mesh.box_domain() {
            Some(b) => BoundaryDistance::Box(b),
            None => BoundaryDistance::Faces(Bvh::build(mesh.boundary_triangles())),
        };
        Self { mesh, locator, boundary }
    }

    pub fn mesh(&self) -> &TetMesh<T> {
        &self.mesh
    }

    pub fn locator(&self) -> &PointLocator<T> {
        &self.locator
    }

    pub fn locate(&self, p: Vec3<T>) -> Result<Location<T>, GeometryError> {
        self.locator.locate(p)
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        match &self.boundary {
            BoundaryDistance::Box(b) => b.contains(p),
            BoundaryDistance::Faces(_) => self.locator.contains(p),
        }
    }

    /// Unsigned distance to the nearest boundary face; the direction points
    /// away from the boundary (the gradient of the distance function).
    pub fn distance_to_boundary(&self, p: Vec3<T>) -> Result<DistanceQueryResult<T>, GeometryError> {
        match &self.boundary {
            BoundaryDistance::Box(b) => {
                if !b.contains(p) {
                    return Err(GeometryError::OutsideDomain(locate::format_point(p)));
                }
                Ok(box_boundary_distance(b, p))
            }
            BoundaryDistance::Faces(bvh) => {
                self.locator.locate(p)?;
                Ok(bvh.closest_point(p).flipped())
            }
        }
    }
}

/// Nearest box face; ties resolve in the order -x, +x, -y, +y, -z, +z.
fn box_boundary_distance<T: Real>(b: &Aabb<T>, p: Vec3<T>) -> DistanceQueryResult<T> {
    let mut best = T::infinity();
    let mut axis = 0;
    let mut upper = false;
    for a in 0..3 {
        let lo = p[a] - b.min[a];
        if lo < best {
            best = lo;
            axis = a;
            upper = false;
        }
        let hi = b.max[a] - p[a];
        if hi < best {
            best = hi;
            axis = a;
            upper = true;
        }
    }
    let mut closest = p.to_array();
    closest[axis] = if upper { b.max[axis] } else { b.min[axis] };
    let closest = Vec3::from_array(closest);
    let mut inward = [T::zero(); 3];
    inward[axis] = if upper { -T::one() } else { T::one() };
    let degenerate = !(best > T::zero());
    DistanceQueryResult {
        distance: best,
        closest,
        direction: if degenerate { Vec3::zero() } else { Vec3::from_array(inward) },
        degenerate,
        ambiguous: false,
        face: axis * 2 + usize::from(upper),
    }
}

/// An inspected structure with its acceleration structure and node adjacency.
#[derive(Debug, Clone)]
pub struct Structure<T> {
    mesh: SurfaceMesh<T>,
    bvh: Bvh<T>,
    node_faces: Vec<Vec<usize>>,
}

impl<T: Real> Structure<T> {
    pub fn new(mesh: SurfaceMesh<T>) -> Self {
        let bvh = Bvh::from_surface(&mesh);
        let node_faces = mesh.node_faces();
        Self { mesh, bvh, node_faces }
    }

    pub fn mesh(&self) -> &SurfaceMesh<T> {
        &self.mesh
    }

    pub fn bvh(&self) -> &Bvh<T> {
        &self.bvh
    }

    pub fn node_faces(&self, node: usize) -> &[usize] {
        &self.node_faces[node]
    }

    pub fn distance(&self, p: Vec3<T>) -> DistanceQueryResult<T> {
        distance_to_surface(p, &self.bvh)
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        self.mesh.bounds().contains(p) && point_inside(&self.bvh, p)
    }
}

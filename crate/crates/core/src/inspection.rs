//! Camera pointing and surface observation counting with line-of-sight tests.

use crate::geometry::{brute_force as geometry_brute_force, ray_hits_surface_before, Structure};
use crate::scalar::Real;
use crate::vec3::Vec3;
use rayon::prelude::*;
use thiserror::Error;

/// Occlusion hits this close to the target (relative to the cone height) are ignored.
pub const RAY_SLACK: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum InspectionError {
    #[error("camera parameters must be positive (height {height}, diameter {diameter}, trigger {trigger})")]
    InvalidCamera { height: String, diameter: String, trigger: usize },
    #[error("camera at {0} touches the structure; orientation is undefined")]
    Degenerate(String),
}

/// Conical field of view: apex at the camera, height `C_H`, base diameter `C_D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel<T> {
    height: T,
    diameter: T,
    trigger: usize,
}

impl<T: Real> CameraModel<T> {
    pub fn new(height: T, diameter: T, trigger: usize) -> Result<Self, InspectionError> {
        if !(height > T::zero()) || !(diameter > T::zero()) || trigger == 0 {
            return Err(InspectionError::InvalidCamera {
                height: height.to_string(),
                diameter: diameter.to_string(),
                trigger,
            });
        }
        Ok(Self { height, diameter, trigger })
    }

    pub fn height(&self) -> T {
        self.height
    }

    pub fn diameter(&self) -> T {
        self.diameter
    }

    pub fn radius(&self) -> T {
        self.diameter / T::lit(2.0)
    }

    /// Record every `trigger`-th step.
    pub fn trigger(&self) -> usize {
        self.trigger
    }

    pub fn fires_at(&self, step: usize) -> bool {
        step > 0 && step % self.trigger == 0
    }

    /// Cone containment of `q` for a camera at `p` looking along unit `z`.
    pub fn contains(&self, p: Vec3<T>, z: Vec3<T>, q: Vec3<T>) -> bool {
        let d = q - p;
        let axial = d.dot(z);
        if !(axial > T::zero()) || axial > self.height {
            return false;
        }
        let radial2 = (d - z * axial).norm_squared();
        let limit = self.radius() * axial / self.height;
        radial2 <= limit * limit
    }

    fn slack(&self) -> T {
        self.height * T::lit(RAY_SLACK)
    }
}

/// Unit direction from `p` to its nearest structure point.
pub fn camera_orientation<T: Real>(p: Vec3<T>, structure: &Structure<T>) -> Result<Vec3<T>, InspectionError> {
    let q = structure.distance(p);
    if q.degenerate {
        return Err(InspectionError::Degenerate(format!("({}, {}, {})", p.x, p.y, p.z)));
    }
    Ok(q.direction)
}

/// Structure nodes seen from `p` along `z`, in ascending order.
pub fn visible_nodes<T: Real>(camera: &CameraModel<T>, p: Vec3<T>, z: Vec3<T>, structure: &Structure<T>) -> Vec<usize> {
    let slack = camera.slack();
    structure
        .mesh()
        .nodes()
        .par_iter()
        .enumerate()
        .filter(|&(i, &q)| {
            camera.contains(p, z, q) && !ray_hits_surface_before(p, q, structure.bvh(), slack, structure.node_faces(i))
        })
        .map(|(i, _)| i)
        .collect()
}

/// Per-node observation counts on the structure surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationLedger {
    counts: Vec<u32>,
}

impl ObservationLedger {
    pub fn new(nodes: usize) -> Self {
        Self { counts: vec![0; nodes] }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn add(&mut self, seen: &[usize]) {
        for &i in seen {
            self.counts[i] += 1;
        }
    }

    pub fn inspected(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Share of nodes observed at least once.
    pub fn coverage<T: Real>(&self) -> T {
        if self.counts.is_empty() {
            return T::zero();
        }
        T::from_count(self.inspected()) / T::from_count(self.counts.len())
    }

    /// Share of surface area observed, each node carrying a third of its incident area.
    pub fn area_coverage<T: Real>(&self, node_areas: &[T]) -> T {
        let total: T = node_areas.iter().copied().sum();
        if !(total > T::zero()) {
            return T::zero();
        }
        let seen: T = self.counts.iter().zip(node_areas).filter(|(&c, _)| c > 0).map(|(_, &a)| a).sum();
        seen / total
    }

    /// Mean count over the nodes selected by `mask`.
    pub fn mean_count<T: Real>(&self, mask: impl Fn(usize) -> bool) -> Option<T> {
        let sel: Vec<u32> = (0..self.counts.len()).filter(|&i| mask(i)).map(|i| self.counts[i]).collect();
        if sel.is_empty() {
            return None;
        }
        Some(T::from_count(sel.iter().map(|&c| c as usize).sum()) / T::from_count(sel.len()))
    }
}

/// Views from all `cameras` (position, axis), merged in the given order.
pub fn record_views<T: Real>(
    camera: &CameraModel<T>,
    cameras: &[(Vec3<T>, Vec3<T>)],
    structure: &Structure<T>,
    ledger: &mut ObservationLedger,
) {
    for &(p, z) in cameras {
        let seen = visible_nodes(camera, p, z, structure);
        ledger.add(&seen);
    }
}

pub fn surface_coverage<T: Real>(ledger: &ObservationLedger) -> T {
    ledger.coverage()
}

/// All-triangle reference for [`visible_nodes`].
pub mod brute_force {
    use super::*;

    pub fn visible_nodes<T: Real>(camera: &CameraModel<T>, p: Vec3<T>, z: Vec3<T>, structure: &Structure<T>) -> Vec<usize> {
        let mesh = structure.mesh();
        let tris: Vec<[Vec3<T>; 3]> = (0..mesh.face_count()).map(|f| mesh.triangle(f)).collect();
        let slack = camera.slack();
        mesh.nodes()
            .iter()
            .enumerate()
            .filter(|&(i, &q)| camera.contains(p, z, q) && !occluded(&tris, p, q, slack, structure.node_faces(i)))
            .map(|(i, _)| i)
            .collect()
    }

    /// Same segment convention as the BVH test.
    pub fn occluded<T: Real>(tris: &[[Vec3<T>; 3]], origin: Vec3<T>, target: Vec3<T>, slack: T, ignore: &[usize]) -> bool {
        let d = target - origin;
        let len = d.norm();
        if !(len > T::zero()) || !(len - slack > T::zero()) {
            return false;
        }
        geometry_brute_force::segment_hits(tris, origin, d / len, len - slack, ignore)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{shapes, Aabb, SurfaceMesh};

    fn plate() -> Structure<f64> {
        Structure::new(shapes::box_surface(
            Aabb::new(Vec3::new(-5.0, -5.0, -1.0), Vec3::new(5.0, 5.0, 0.0)),
            [10, 10, 1],
        ))
    }

    #[test]
    fn cone_containment() {
        let cam = CameraModel::new(10.0, 4.0, 1).unwrap();
        let p = Vec3::zero();
        let z = Vec3::new(0.0, 0.0, -1.0);
        assert!(cam.contains(p, z, Vec3::new(0.0, 0.0, -5.0)));
        assert!(!cam.contains(p, z, p), "apex excluded");
        assert!(!cam.contains(p, z, Vec3::new(0.0, 0.0, 5.0)));
        assert!(!cam.contains(p, z, Vec3::new(0.0, 0.0, -10.5)));
        assert!(cam.contains(p, z, Vec3::new(1.0, 0.0, -5.0)));
        assert!(!cam.contains(p, z, Vec3::new(1.01, 0.0, -5.0)));
        assert!(CameraModel::new(0.0, 1.0, 1).is_err());
        assert!(cam.fires_at(1) && !cam.fires_at(0));
    }

    #[test]
    fn orientation_above_plate() {
        let s = plate();
        let z = camera_orientation(Vec3::new(0.3, 0.2, 4.0), &s).unwrap();
        assert!((z - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
        let sphere = Structure::new(shapes::icosphere(Vec3::<f64>::zero(), 1.0, 3));
        let p = Vec3::new(0.0, 0.0, 3.0);
        let q = sphere.distance(p);
        let z = camera_orientation(p, &sphere).unwrap();
        assert!((z.dot(q.closest - p) - q.distance).abs() < 1e-12);
        assert!(z.z < -0.999);
    }

    #[test]
    fn wall_occludes() {
        // Floor plate with a wall between camera and target area.
        let floor = shapes::box_surface(Aabb::new(Vec3::new(-5.0, -5.0, -1.0), Vec3::new(5.0, 5.0, 0.0)), [10, 10, 1]);
        let wall = shapes::box_surface(Aabb::new(Vec3::new(0.5, -5.0, 0.0), Vec3::new(0.7, 5.0, 3.0)), [1, 10, 3]);
        let mut nodes = floor.nodes().to_vec();
        let off = nodes.len();
        nodes.extend_from_slice(wall.nodes());
        let mut faces = floor.faces().to_vec();
        faces.extend(wall.faces().iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
        let s = Structure::new(SurfaceMesh::new(nodes, faces).unwrap());
        let cam = CameraModel::new(20.0, 40.0, 1).unwrap();
        let p = Vec3::new(-2.0, 0.0, 2.0);
        let z = Vec3::new(0.0, 0.0, -1.0);
        let seen = visible_nodes(&cam, p, z, &s);
        assert_eq!(seen, brute_force::visible_nodes(&cam, p, z, &s));
        let target = s.mesh().nodes().iter().position(|q| (*q - Vec3::new(4.0, 0.0, 0.0)).norm() < 1e-12).unwrap();
        let near = s.mesh().nodes().iter().position(|q| (*q - Vec3::new(-2.0, 0.0, 0.0)).norm() < 1e-12).unwrap();
        assert!(!seen.contains(&target));
        assert!(seen.contains(&near));
    }

    #[test]
    fn convex_structure_never_occludes_cone_nodes() {
        let s = Structure::new(shapes::icosphere(Vec3::zero(), 2.0, 2));
        let cam = CameraModel::new(5.0, 8.0, 1).unwrap();
        let p = Vec3::new(0.0, 0.0, 4.0);
        let z = camera_orientation(p, &s).unwrap();
        let seen = visible_nodes(&cam, p, z, &s);
        // Every node in the cone on the camera-facing hemisphere is visible.
        for (i, &q) in s.mesh().nodes().iter().enumerate() {
            let facing = q.z > 0.0 && (q - p).dot(q) < 0.0;
            if cam.contains(p, z, q) && facing {
                assert!(seen.contains(&i));
            }
        }
    }

    #[test]
    fn scale_invariance() {
        let s1 = plate();
        let k = 7.5;
        let s2 = Structure::new(s1.mesh().transformed(|p| p * k).unwrap());
        let c1 = CameraModel::new(6.0, 5.0, 1).unwrap();
        let c2 = CameraModel::new(6.0 * k, 5.0 * k, 1).unwrap();
        let p = Vec3::new(0.7, -1.1, 3.0);
        let z = Vec3::new(0.1, 0.0, -1.0).try_normalize(0.0).unwrap();
        assert_eq!(visible_nodes(&c1, p, z, &s1), visible_nodes(&c2, p * k, z, &s2));
    }

    #[test]
    fn ledger_coverage() {
        let mut l = ObservationLedger::new(4);
        assert_eq!(l.coverage::<f64>(), 0.0);
        l.add(&[0, 1]);
        assert_eq!(l.coverage::<f64>(), 0.5);
        l.add(&[0, 1, 2, 3]);
        assert_eq!(l.coverage::<f64>(), 1.0);
        assert_eq!(l.counts(), &[2, 2, 1, 1]);
        assert_eq!(l.area_coverage(&[1.0, 1.0, 1.0, 1.0]), 1.0);
        assert_eq!(l.mean_count::<f64>(|i| i < 2), Some(2.0));
    }
}

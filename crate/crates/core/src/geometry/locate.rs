//! Point location in a tet mesh through a uniform spatial hash.

use super::{Aabb, GeometryError, TetMesh};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Containing cell and barycentric coordinates of a located point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location<T> {
    pub cell: usize,
    pub bary: [T; 4],
}

/// Uniform grid of buckets listing every cell whose box overlaps the bucket.
#[derive(Debug, Clone)]
pub struct PointLocator<T> {
    bounds: Aabb<T>,
    dims: [usize; 3],
    inv_size: Vec3<T>,
    offsets: Vec<usize>,
    entries: Vec<u32>,
    /// Per cell: vertex 0 and the inverse Jacobian rows.
    frames: Vec<(Vec3<T>, [Vec3<T>; 3])>,
    tol: T,
}

impl<T: Real> PointLocator<T> {
    pub fn new(mesh: &TetMesh<T>) -> Self {
        let bounds = mesh.bounds();
        let ext = bounds.extent();
        let target_buckets = (mesh.cell_count() / 2).max(1) as f64;
        let vol = ext.x.to_f64_lossy().max(1e-300) * ext.y.to_f64_lossy().max(1e-300) * ext.z.to_f64_lossy().max(1e-300);
        let size = (vol / target_buckets).cbrt();
        let dim = |e: T| ((e.to_f64_lossy() / size).ceil() as usize).clamp(1, 1024);
        let dims = [dim(ext.x), dim(ext.y), dim(ext.z)];
        let inv_size = Vec3::new(
            T::from_count(dims[0]) / ext.x.max(T::min_positive_value()),
            T::from_count(dims[1]) / ext.y.max(T::min_positive_value()),
            T::from_count(dims[2]) / ext.z.max(T::min_positive_value()),
        );
        let nb = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0usize; nb + 1];
        let pad = ext.max_component() * T::lit(1e-9);
        let ranges: Vec<[usize; 6]> = (0..mesh.cell_count())
            .map(|c| {
                let cb = Aabb::from_points(mesh.cell_vertices(c).iter()).padded(pad);
                let lo = Self::bucket_coords(&bounds, &dims, inv_size, cb.min);
                let hi = Self::bucket_coords(&bounds, &dims, inv_size, cb.max);
                [lo[0], hi[0], lo[1], hi[1], lo[2], hi[2]]
            })
            .collect();
        for r in &ranges {
            for k in r[4]..=r[5] {
                for j in r[2]..=r[3] {
                    for i in r[0]..=r[1] {
                        counts[i + dims[0] * (j + dims[1] * k) + 1] += 1;
                    }
                }
            }
        }
        for b in 0..nb {
            counts[b + 1] += counts[b];
        }
        let mut fill = counts.clone();
        let mut entries = vec![0u32; counts[nb]];
        for (c, r) in ranges.iter().enumerate() {
            for k in r[4]..=r[5] {
                for j in r[2]..=r[3] {
                    for i in r[0]..=r[1] {
                        let b = i + dims[0] * (j + dims[1] * k);
                        entries[fill[b]] = c as u32;
                        fill[b] += 1;
                    }
                }
            }
        }
        let frames = (0..mesh.cell_count())
            .map(|c| {
                let g = mesh.cell_geometry(c);
                (mesh.cell_vertices(c)[0], [g.grads[1], g.grads[2], g.grads[3]])
            })
            .collect();
        Self {
            bounds,
            dims,
            inv_size,
            offsets: counts,
            entries,
            frames,
            tol: T::lit(1e-10),
        }
    }

    fn bucket_coords(bounds: &Aabb<T>, dims: &[usize; 3], inv: Vec3<T>, p: Vec3<T>) -> [usize; 3] {
        let f = |v: T, lo: T, s: T, n: usize| {
            let x = ((v - lo) * s).floor().to_f64_lossy();
            if x < 0.0 {
                0
            } else {
                (x as usize).min(n - 1)
            }
        };
        [
            f(p.x, bounds.min.x, inv.x, dims[0]),
            f(p.y, bounds.min.y, inv.y, dims[1]),
            f(p.z, bounds.min.z, inv.z, dims[2]),
        ]
    }

    #[inline]
    pub fn barycentric(&self, cell: usize, p: Vec3<T>) -> [T; 4] {
        let (v0, g) = &self.frames[cell];
        let d = p - *v0;
        let l1 = g[0].dot(d);
        let l2 = g[1].dot(d);
        let l3 = g[2].dot(d);
        [T::one() - l1 - l2 - l3, l1, l2, l3]
    }

    /// Lowest-index cell containing `p`, with clamped barycentrics.
    pub fn locate(&self, p: Vec3<T>) -> Result<Location<T>, GeometryError> {
        let pad = self.bounds.extent().max_component() * T::lit(1e-9);
        if !self.bounds.padded(pad).contains(p) {
            return Err(GeometryError::OutsideDomain(format_point(p)));
        }
        let [i, j, k] = Self::bucket_coords(&self.bounds, &self.dims, self.inv_size, p);
        let b = i + self.dims[0] * (j + self.dims[1] * k);
        for &c in &self.entries[self.offsets[b]..self.offsets[b + 1]] {
            let c = c as usize;
            let l = self.barycentric(c, p);
            if l.iter().all(|&x| x >= -self.tol) {
                let mut l = l.map(|x| x.max(T::zero()));
                let s = l[0] + l[1] + l[2] + l[3];
                for x in l.iter_mut() {
                    *x = *x / s;
                }
                return Ok(Location { cell: c, bary: l });
            }
        }
        Err(GeometryError::OutsideDomain(format_point(p)))
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        self.locate(p).is_ok()
    }
}

pub(crate) fn format_point<T: Real>(p: Vec3<T>) -> String {
    format!("({}, {}, {})", p.x, p.y, p.z)
}

/// Linear scan over all cells; the test oracle for [`PointLocator`].
pub fn locate_brute_force<T: Real>(mesh: &TetMesh<T>, p: Vec3<T>, tol: T) -> Option<usize> {
    (0..mesh.cell_count()).find(|&c| {
        let g = mesh.cell_geometry(c);
        let v0 = mesh.cell_vertices(c)[0];
        let d = p - v0;
        let l1 = g.grads[1].dot(d);
        let l2 = g.grads[2].dot(d);
        let l3 = g.grads[3].dot(d);
        [T::one() - l1 - l2 - l3, l1, l2, l3].iter().all(|&x| x >= -tol)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh() -> TetMesh<f64> {
        TetMesh::build_box(Aabb::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 1.0, 1.5)), [5, 3, 4], None).unwrap()
    }

    #[test]
    fn centroid_locates_its_cell() {
        let m = mesh();
        let loc = PointLocator::new(&m);
        for c in (0..m.cell_count()).step_by(7) {
            let l = loc.locate(m.cell_centroid(c)).unwrap();
            assert_eq!(l.cell, c);
            for b in l.bary {
                assert!((b - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shared_node_resolves_to_lowest_cell() {
        let m = mesh();
        let loc = PointLocator::new(&m);
        for (n, p) in m.nodes().iter().enumerate().step_by(5) {
            let lowest = (0..m.cell_count()).find(|&c| m.cells()[c].contains(&n)).unwrap();
            assert_eq!(loc.locate(*p).unwrap().cell, lowest);
        }
    }

    #[test]
    fn interpolating_coordinates_reproduces_point() {
        let m = mesh();
        let loc = PointLocator::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let p = Vec3::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.5));
            let l = loc.locate(p).unwrap();
            assert_eq!(Some(l.cell), locate_brute_force(&m, p, 1e-10));
            let mut q = Vec3::zero();
            for (k, &n) in m.cells()[l.cell].iter().enumerate() {
                q += m.nodes()[n] * l.bary[k];
            }
            assert!((q - p).norm() < 1e-9);
            assert!(l.bary.iter().all(|&b| (0.0..=1.0).contains(&b)));
            assert!((l.bary.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn outside_point_not_found() {
        let m = mesh();
        let loc = PointLocator::new(&m);
        assert!(matches!(loc.locate(Vec3::new(2.5, 0.5, 0.5)), Err(GeometryError::OutsideDomain(_))));
    }
}

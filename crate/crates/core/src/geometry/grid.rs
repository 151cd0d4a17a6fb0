use super::Aabb;
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Uniform bucket grid over a point set for radius queries.
#[derive(Debug, Clone)]
pub struct NodeGrid<T> {
    bounds: Aabb<T>,
    cell: T,
    dims: [usize; 3],
    offsets: Vec<usize>,
    entries: Vec<u32>,
}

impl<T: Real> NodeGrid<T> {
    /// `cell` is the bucket edge length; pick it near the typical query radius.
    pub fn new(points: &[Vec3<T>], cell: T) -> Self {
        let bounds = Aabb::from_points(points);
        let ext = bounds.extent();
        let dim = |e: T| ((e / cell).floor().to_f64_lossy() as usize + 1).clamp(1, 2048);
        let dims = [dim(ext.x), dim(ext.y), dim(ext.z)];
        let nb = dims[0] * dims[1] * dims[2];
        let key = |p: Vec3<T>| {
            let f = |v: T, lo: T, n: usize| (((v - lo) / cell).floor().to_f64_lossy().max(0.0) as usize).min(n - 1);
            f(p.x, bounds.min.x, dims[0]) + dims[0] * (f(p.y, bounds.min.y, dims[1]) + dims[1] * f(p.z, bounds.min.z, dims[2]))
        };
        let mut offsets = vec![0usize; nb + 1];
        for p in points {
            offsets[key(*p) + 1] += 1;
        }
        for b in 0..nb {
            offsets[b + 1] += offsets[b];
        }
        let mut fill = offsets.clone();
        let mut entries = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let b = key(*p);
            entries[fill[b]] = i as u32;
            fill[b] += 1;
        }
        Self { bounds, cell, dims, offsets, entries }
    }

    /// Calls `f(index)` for every point within `radius` of `center`,
    /// bucket by bucket in ascending order.
    pub fn for_each_within(&self, points: &[Vec3<T>], center: Vec3<T>, radius: T, mut f: impl FnMut(usize, T)) {
        let r2 = radius * radius;
        let lo = center - Vec3::splat(radius);
        let hi = center + Vec3::splat(radius);
        let range = |lo: T, hi: T, min: T, n: usize| -> Option<(usize, usize)> {
            let a = ((lo - min) / self.cell).floor().to_f64_lossy();
            let b = ((hi - min) / self.cell).floor().to_f64_lossy();
            if b < 0.0 || a > (n - 1) as f64 {
                return None;
            }
            Some((a.max(0.0) as usize, (b as usize).min(n - 1)))
        };
        let (Some((i0, i1)), Some((j0, j1)), Some((k0, k1))) = (
            range(lo.x, hi.x, self.bounds.min.x, self.dims[0]),
            range(lo.y, hi.y, self.bounds.min.y, self.dims[1]),
            range(lo.z, hi.z, self.bounds.min.z, self.dims[2]),
        ) else {
            return;
        };
        for k in k0..=k1 {
            for j in j0..=j1 {
                let row = self.dims[0] * (j + self.dims[1] * k);
                for b in (row + i0)..=(row + i1) {
                    for &n in &self.entries[self.offsets[b]..self.offsets[b + 1]] {
                        let d2 = (points[n as usize] - center).norm_squared();
                        if d2 <= r2 {
                            f(n as usize, d2);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn radius_query_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Vec3<f64>> = (0..2000)
            .map(|_| Vec3::new(rng.gen_range(0.0..3.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0)))
            .collect();
        let grid = NodeGrid::new(&pts, 0.2);
        for _ in 0..50 {
            let c = Vec3::new(rng.gen_range(-0.5..3.5), rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..2.5));
            let r = rng.gen_range(0.05..0.6);
            let mut got = Vec::new();
            grid.for_each_within(&pts, c, r, |i, _| got.push(i));
            got.sort_unstable();
            let want: Vec<usize> = (0..pts.len()).filter(|&i| (pts[i] - c).norm() <= r).collect();
            assert_eq!(got, want);
        }
    }
}

//! Point–triangle and segment–triangle primitives.

use crate::scalar::Real;
use crate::vec3::Vec3;

/// Closest point to `p` on triangle `(a, b, c)` (Voronoi-region walk).
pub fn closest_point_on_triangle<T: Real>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> Vec3<T> {
    let zero = T::zero();
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= zero && d2 <= zero {
        return a;
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= zero && d4 <= d3 {
        return b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= zero && d5 <= d6 {
        return c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = T::one() / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Parameter `t` at which `origin + t * dir` crosses the triangle, if any.
///
/// Möller–Trumbore. Edge and vertex hits count as hits; rays parallel to the
/// triangle plane never hit.
#[inline]
pub fn ray_triangle_t<T: Real>(
    origin: Vec3<T>,
    dir: Vec3<T>,
    a: Vec3<T>,
    b: Vec3<T>,
    c: Vec3<T>,
) -> Option<T> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(e2);
    let det = e1.dot(pvec);
    if det == T::zero() {
        return None;
    }
    let inv_det = T::one() / det;
    let tvec = origin - a;
    let u = tvec.dot(pvec) * inv_det;
    if u < T::zero() || u > T::one() {
        return None;
    }
    let qvec = tvec.cross(e1);
    let v = dir.dot(qvec) * inv_det;
    if v < T::zero() || u + v > T::one() {
        return None;
    }
    Some(e2.dot(qvec) * inv_det)
}

/// Twice the triangle area vector (unnormalized normal).
#[inline]
pub fn area_vector<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> Vec3<T> {
    (b - a).cross(c - a)
}

#[inline]
pub fn area<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> T {
    area_vector(a, b, c).norm() * T::lit(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> [Vec3<f64>; 3] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn closest_point_regions() {
        let [a, b, c] = tri();
        let q = closest_point_on_triangle(Vec3::new(0.2, 0.2, 3.0), a, b, c);
        assert!((q - Vec3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        assert_eq!(closest_point_on_triangle(Vec3::new(-1.0, -1.0, 0.0), a, b, c), a);
        assert_eq!(closest_point_on_triangle(Vec3::new(3.0, -0.5, 0.0), a, b, c), b);
        let e = closest_point_on_triangle(Vec3::new(1.0, 1.0, 0.0), a, b, c);
        assert!((e - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn closest_point_matches_dense_sampling() {
        let a = Vec3::new(0.3, -0.2, 0.1);
        let b = Vec3::new(1.4, 0.5, -0.3);
        let c = Vec3::new(-0.2, 1.1, 0.6);
        let p = Vec3::new(1.5, 1.2, 0.9);
        let q = closest_point_on_triangle(p, a, b, c);
        let n = 400;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let u = i as f64 / n as f64;
                let v = j as f64 / n as f64;
                let s = a + (b - a) * u + (c - a) * v;
                best = best.min((s - p).norm());
            }
        }
        let d = (q - p).norm();
        assert!(d <= best + 1e-12);
        assert!(best - d < 1e-2);
    }

    #[test]
    fn ray_hits_interior_and_misses_outside() {
        let [a, b, c] = tri();
        let down = Vec3::new(0.0, 0.0, -1.0);
        assert_eq!(ray_triangle_t(Vec3::new(0.25, 0.25, 2.0), down, a, b, c), Some(2.0));
        assert_eq!(ray_triangle_t(Vec3::new(0.75, 0.75, 2.0), down, a, b, c), None);
        assert_eq!(
            ray_triangle_t(Vec3::new(0.25, 0.25, 2.0), Vec3::new(1.0, 0.0, 0.0), a, b, c),
            None
        );
    }
}

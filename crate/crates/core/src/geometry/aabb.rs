use crate::scalar::Real;
use crate::vec3::Vec3;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn new(min: Vec3<T>, max: Vec3<T>) -> Self {
        Self { min, max }
    }

    /// The empty box: any `grow` replaces it.
    pub fn empty() -> Self {
        Self {
            min: Vec3::splat(T::infinity()),
            max: Vec3::splat(T::neg_infinity()),
        }
    }

    pub fn from_points<'a, I>(points: I) -> Self
    where
        I: IntoIterator<Item = &'a Vec3<T>>,
    {
        let mut b = Self::empty();
        for p in points {
            b.grow(*p);
        }
        b
    }

    #[inline]
    pub fn grow(&mut self, p: Vec3<T>) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    #[inline]
    pub fn union(&self, o: &Self) -> Self {
        Self::new(self.min.min(o.min), self.max.max(o.max))
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    #[inline]
    pub fn extent(&self) -> Vec3<T> {
        self.max - self.min
    }

    #[inline]
    pub fn center(&self) -> Vec3<T> {
        (self.min + self.max) * T::lit(0.5)
    }

    pub fn volume(&self) -> T {
        let e = self.extent();
        e.x * e.y * e.z
    }

    /// Box enlarged by `pad` on every side.
    pub fn padded(&self, pad: T) -> Self {
        Self::new(self.min - Vec3::splat(pad), self.max + Vec3::splat(pad))
    }

    #[inline]
    pub fn contains(&self, p: Vec3<T>) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    #[inline]
    pub fn contains_box(&self, o: &Self) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    pub fn intersects(&self, o: &Self) -> bool {
        self.min.x <= o.max.x
            && self.max.x >= o.min.x
            && self.min.y <= o.max.y
            && self.max.y >= o.min.y
            && self.min.z <= o.max.z
            && self.max.z >= o.min.z
    }

    /// Squared Euclidean distance from `p` to the box (0 inside).
    #[inline]
    pub fn distance_squared(&self, p: Vec3<T>) -> T {
        let zero = T::zero();
        let dx = (self.min.x - p.x).max(zero).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(zero).max(p.y - self.max.y);
        let dz = (self.min.z - p.z).max(zero).max(p.z - self.max.z);
        dx * dx + dy * dy + dz * dz
    }

    /// Slab test for the parameter range `[t0, t1]` of `origin + t * dir`.
    pub fn overlaps_segment(&self, origin: Vec3<T>, dir: Vec3<T>, t0: T, t1: T) -> bool {
        let mut lo = t0;
        let mut hi = t1;
        for axis in 0..3 {
            let o = origin[axis];
            let d = dir[axis];
            let (bmin, bmax) = (self.min[axis], self.max[axis]);
            if d == T::zero() {
                if o < bmin || o > bmax {
                    return false;
                }
                continue;
            }
            let inv = T::one() / d;
            let mut ta = (bmin - o) * inv;
            let mut tb = (bmax - o) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            lo = lo.max(ta);
            hi = hi.min(tb);
            if lo > hi {
                return false;
            }
        }
        true
    }
}

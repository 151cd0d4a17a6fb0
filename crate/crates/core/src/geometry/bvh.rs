//! Bounding-volume hierarchy over the triangles of a surface.

use super::triangle::{closest_point_on_triangle, ray_triangle_t};
use super::{Aabb, DistanceQueryResult};
use crate::scalar::Real;
use crate::vec3::Vec3;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node<T> {
    bounds: Aabb<T>,
    kind: NodeKind,
}

#[derive(Debug, Clone, Copy)]
enum NodeKind {
    Leaf { start: usize, count: usize },
    Inner { left: usize, right: usize },
}

/// Static BVH over a triangle soup.
///
/// Triangles are copied in; face ids refer to the caller's indexing.
#[derive(Debug, Clone)]
pub struct Bvh<T> {
    nodes: Vec<Node<T>>,
    order: Vec<usize>,
    tris: Vec<[Vec3<T>; 3]>,
}

impl<T: Real> Bvh<T> {
    /// Builds the tree with median splits along the longest centroid axis.
    ///
    /// Panics on an empty triangle list; surface meshes reject that earlier.
    pub fn build(tris: Vec<[Vec3<T>; 3]>) -> Self {
        assert!(!tris.is_empty(), "BVH over zero triangles");
        let bounds_all = Aabb::from_points(tris.iter().flat_map(|t| t.iter()));
        let pad = bounds_all.extent().max_component().max(T::one()) * T::lit(1e-9);
        let centroids: Vec<Vec3<T>> = tris
            .iter()
            .map(|t| (t[0] + t[1] + t[2]) / T::lit(3.0))
            .collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        build_recursive(&tris, &centroids, &mut order, 0, tris.len(), pad, &mut nodes);
        Self { nodes, order, tris }
    }

    pub fn from_surface(mesh: &super::SurfaceMesh<T>) -> Self {
        Self::build((0..mesh.face_count()).map(|f| mesh.triangle(f)).collect())
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    pub fn triangle(&self, id: usize) -> [Vec3<T>; 3] {
        self.tris[id]
    }

    pub fn bounds(&self) -> Aabb<T> {
        self.nodes[0].bounds
    }

    /// Exact unsigned distance from `p` to the triangle set.
    ///
    /// Among equidistant candidates the first one met in traversal order wins;
    /// `DistanceQueryResult::face` records which.
    pub fn closest_point(&self, p: Vec3<T>) -> DistanceQueryResult<T> {
        let mut best_d2 = T::infinity();
        let mut best_point = p;
        let mut best_face = usize::MAX;
        let mut ambiguous = false;
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds.distance_squared(p) > best_d2 {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &f in &self.order[start..start + count] {
                        let [a, b, c] = self.tris[f];
                        let q = closest_point_on_triangle(p, a, b, c);
                        let d2 = (q - p).norm_squared();
                        if d2 < best_d2 {
                            best_d2 = d2;
                            best_point = q;
                            best_face = f;
                            ambiguous = false;
                        } else if d2 == best_d2 && q != best_point {
                            ambiguous = true;
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let dl = self.nodes[left].bounds.distance_squared(p);
                    let dr = self.nodes[right].bounds.distance_squared(p);
                    // Push the farther child first so the nearer one is visited next.
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        let mut r = DistanceQueryResult::toward(p, best_point, best_face);
        r.ambiguous = ambiguous;
        r
    }

    /// Whether any triangle not in `ignore` crosses `origin + t * dir` for
    /// `t` in the open interval `(0, t_max)`.
    pub fn segment_hits(&self, origin: Vec3<T>, dir: Vec3<T>, t_max: T, ignore: &[usize]) -> bool {
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bounds.overlaps_segment(origin, dir, T::zero(), t_max) {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &f in &self.order[start..start + count] {
                        if ignore.contains(&f) {
                            continue;
                        }
                        let [a, b, c] = self.tris[f];
                        if let Some(t) = ray_triangle_t(origin, dir, a, b, c) {
                            if t > T::zero() && t < t_max {
                                return true;
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        false
    }

    /// Number of triangle crossings of the half-line `origin + t * dir`, `t > 0`.
    pub fn ray_crossings(&self, origin: Vec3<T>, dir: Vec3<T>) -> usize {
        let far = (self.bounds().extent().norm() + (self.bounds().center() - origin).norm())
            / dir.norm()
            * T::lit(2.0)
            + T::one();
        let mut count = 0;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bounds.overlaps_segment(origin, dir, T::zero(), far) {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, count: n } => {
                    for &f in &self.order[start..start + n] {
                        let [a, b, c] = self.tris[f];
                        if let Some(t) = ray_triangle_t(origin, dir, a, b, c) {
                            if t > T::zero() {
                                count += 1;
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        count
    }

    /// Structural self-check used by tests: leaf coverage and box nesting.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = vec![0usize; self.tris.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &f in &self.order[start..start + count] {
                        seen[f] += 1;
                        for v in self.tris[f] {
                            if !node.bounds.contains(v) {
                                return Err(format!("leaf {i} does not contain triangle {f}"));
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    for c in [left, right] {
                        if !node.bounds.contains_box(&self.nodes[c].bounds) {
                            return Err(format!("node {i} does not contain child {c}"));
                        }
                    }
                }
            }
        }
        if let Some(f) = seen.iter().position(|&s| s != 1) {
            return Err(format!("triangle {f} appears in {} leaves", seen[f]));
        }
        Ok(())
    }
}

fn build_recursive<T: Real>(
    tris: &[[Vec3<T>; 3]],
    centroids: &[Vec3<T>],
    order: &mut [usize],
    start: usize,
    end: usize,
    pad: T,
    nodes: &mut Vec<Node<T>>,
) -> usize {
    let slice = &mut order[start..end];
    let bounds = Aabb::from_points(slice.iter().flat_map(|&f| tris[f].iter())).padded(pad);
    let id = nodes.len();
    if slice.len() <= LEAF_SIZE {
        nodes.push(Node {
            bounds,
            kind: NodeKind::Leaf { start, count: slice.len() },
        });
        return id;
    }
    let cb = Aabb::from_points(slice.iter().map(|&f| &centroids[f]));
    let axis = cb.extent().max_axis();
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a][axis]
            .partial_cmp(&centroids[b][axis])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    nodes.push(Node {
        bounds,
        kind: NodeKind::Leaf { start, count: 0 },
    });
    let left = build_recursive(tris, centroids, order, start, start + mid, pad, nodes);
    let right = build_recursive(tris, centroids, order, start + mid, end, pad, nodes);
    nodes[id].kind = NodeKind::Inner { left, right };
    id
}

/// Reference implementations that loop over every triangle.
pub mod brute_force {
    use super::*;

    pub fn closest_point<T: Real>(tris: &[[Vec3<T>; 3]], p: Vec3<T>) -> DistanceQueryResult<T> {
        let mut best_d2 = T::infinity();
        let mut best = (p, usize::MAX);
        for (f, &[a, b, c]) in tris.iter().enumerate() {
            let q = closest_point_on_triangle(p, a, b, c);
            let d2 = (q - p).norm_squared();
            if d2 < best_d2 {
                best_d2 = d2;
                best = (q, f);
            }
        }
        DistanceQueryResult::toward(p, best.0, best.1)
    }

    pub fn segment_hits<T: Real>(
        tris: &[[Vec3<T>; 3]],
        origin: Vec3<T>,
        dir: Vec3<T>,
        t_max: T,
        ignore: &[usize],
    ) -> bool {
        tris.iter().enumerate().any(|(f, &[a, b, c])| {
            !ignore.contains(&f)
                && matches!(ray_triangle_t(origin, dir, a, b, c), Some(t) if t > T::zero() && t < t_max)
        })
    }
}

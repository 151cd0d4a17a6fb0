//! Procedural structure surfaces used by the bundled scenarios and tests.

use super::{Aabb, SurfaceMesh};
use crate::scalar::Real;
use crate::vec3::Vec3;
use std::collections::HashMap;

/// Evenly spaced breakpoints from `a` to `b` with `n` intervals.
pub fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    (0..=n)
        .map(|i| {
            if i == n {
                b
            } else {
                a + (b - a) * T::from_count(i) / T::from_count(n)
            }
        })
        .collect()
}

/// Concatenates piecewise breakpoint lists, dropping shared endpoints.
pub fn join_breaks<T: Real>(parts: &[Vec<T>]) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for p in parts {
        let skip = usize::from(!out.is_empty());
        out.extend(p.iter().skip(skip).copied());
    }
    out
}

/// Boundary quads of a union of lattice cells, oriented outward.
///
/// Returns lattice-point nodes and quads as counter-clockwise index loops.
pub fn voxel_quads<T: Real>(
    xs: &[T],
    ys: &[T],
    zs: &[T],
    solid: impl Fn(usize, usize, usize) -> bool,
) -> (Vec<Vec3<T>>, Vec<[usize; 4]>) {
    let (nx, ny, nz) = (xs.len() - 1, ys.len() - 1, zs.len() - 1);
    let is_solid = |i: isize, j: isize, k: isize| {
        i >= 0
            && j >= 0
            && k >= 0
            && (i as usize) < nx
            && (j as usize) < ny
            && (k as usize) < nz
            && solid(i as usize, j as usize, k as usize)
    };
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut node = |p: [usize; 3]| {
        *index.entry(p).or_insert_with(|| {
            nodes.push(Vec3::new(xs[p[0]], ys[p[1]], zs[p[2]]));
            nodes.len() - 1
        })
    };
    let mut quads = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if !solid(i, j, k) {
                    continue;
                }
                let (ii, jj, kk) = (i as isize, j as isize, k as isize);
                // Each entry: neighbour offset and the outward-facing corner loop.
                let sides: [([isize; 3], [[usize; 3]; 4]); 6] = [
                    ([-1, 0, 0], [[i, j, k], [i, j, k + 1], [i, j + 1, k + 1], [i, j + 1, k]]),
                    ([1, 0, 0], [[i + 1, j, k], [i + 1, j + 1, k], [i + 1, j + 1, k + 1], [i + 1, j, k + 1]]),
                    ([0, -1, 0], [[i, j, k], [i + 1, j, k], [i + 1, j, k + 1], [i, j, k + 1]]),
                    ([0, 1, 0], [[i, j + 1, k], [i, j + 1, k + 1], [i + 1, j + 1, k + 1], [i + 1, j + 1, k]]),
                    ([0, 0, -1], [[i, j, k], [i, j + 1, k], [i + 1, j + 1, k], [i + 1, j, k]]),
                    ([0, 0, 1], [[i, j, k + 1], [i + 1, j, k + 1], [i + 1, j + 1, k + 1], [i, j + 1, k + 1]]),
                ];
                for (off, loop_) in sides {
                    if !is_solid(ii + off[0], jj + off[1], kk + off[2]) {
                        quads.push([node(loop_[0]), node(loop_[1]), node(loop_[2]), node(loop_[3])]);
                    }
                }
            }
        }
    }
    (nodes, quads)
}

/// Splits quads into triangles; quads listed in `fan` get a centre node and four triangles.
pub fn triangulate_quads<T: Real>(
    mut nodes: Vec<Vec3<T>>,
    quads: &[[usize; 4]],
    fan: &[usize],
) -> SurfaceMesh<T> {
    let mut faces = Vec::with_capacity(quads.len() * 2 + fan.len() * 2);
    let mut fan_sorted = fan.to_vec();
    fan_sorted.sort_unstable();
    for (qi, q) in quads.iter().enumerate() {
        if fan_sorted.binary_search(&qi).is_ok() {
            let c = (nodes[q[0]] + nodes[q[1]] + nodes[q[2]] + nodes[q[3]]) / T::lit(4.0);
            nodes.push(c);
            let ci = nodes.len() - 1;
            for e in 0..4 {
                faces.push([q[e], q[(e + 1) % 4], ci]);
            }
        } else {
            faces.push([q[0], q[1], q[2]]);
            faces.push([q[0], q[2], q[3]]);
        }
    }
    SurfaceMesh::new(nodes, faces).expect("procedural surface is valid")
}

/// Closed surface of an axis-aligned box with `div` intervals per axis.
pub fn box_surface<T: Real>(b: Aabb<T>, div: [usize; 3]) -> SurfaceMesh<T> {
    let xs = linspace(b.min.x, b.max.x, div[0]);
    let ys = linspace(b.min.y, b.max.y, div[1]);
    let zs = linspace(b.min.z, b.max.z, div[2]);
    let (nodes, quads) = voxel_quads(&xs, &ys, &zs, |_, _, _| true);
    triangulate_quads(nodes, &quads, &[])
}

/// Portal frame: a slab `length` thick (x) and `width` x `height` (y, z),
/// with a rectangular through-hole, centred at `center`.
///
/// The default lattice reproduces a 2 315-node, 4 630-face triangulation
/// for the 10 x 50 x 70 m frame with a 30 x 50 m opening.
pub fn portal<T: Real>(center: Vec3<T>, size: Vec3<T>, hole: [T; 2]) -> SurfaceMesh<T> {
    let half = size * T::lit(0.5);
    let (x0, x1) = (center.x - half.x, center.x + half.x);
    let (y0, y1) = (center.y - half.y, center.y + half.y);
    let (z0, z1) = (center.z - half.z, center.z + half.z);
    let (hy0, hy1) = (center.y - hole[0] * T::lit(0.5), center.y + hole[0] * T::lit(0.5));
    let (hz0, hz1) = (center.z - hole[1] * T::lit(0.5), center.z + hole[1] * T::lit(0.5));
    let xs = linspace(x0, x1, 5);
    let ys = join_breaks(&[linspace(y0, hy0, 5), linspace(hy0, hy1, 18), linspace(hy1, y1, 5)]);
    let zs = join_breaks(&[linspace(z0, hz0, 6), linspace(hz0, hz1, 26), linspace(hz1, z1, 6)]);
    let (nodes, quads) = voxel_quads(&xs, &ys, &zs, |_, j, k| {
        let in_hole_y = j >= 5 && j < 5 + 18;
        let in_hole_z = k >= 6 && k < 6 + 26;
        !(in_hole_y && in_hole_z)
    });
    // 23 evenly spread quad-centre insertions bring 2 292 lattice nodes to 2 315.
    let extra = 23usize;
    let stride = quads.len() / extra;
    let fan: Vec<usize> = (0..extra).map(|e| e * stride + stride / 2).collect();
    triangulate_quads(nodes, &quads, &fan)
}

/// Geodesic sphere from a subdivided icosahedron.
pub fn icosphere<T: Real>(center: Vec3<T>, radius: T, subdivisions: usize) -> SurfaceMesh<T> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|a| Vec3::from_array(*a) / Vec3::from_array(*a).norm())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3<f64>>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let m = (verts[a] + verts[b]) * 0.5;
                verts.push(m / m.norm());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut verts);
            let bc = midpoint(f[1], f[2], &mut verts);
            let ca = midpoint(f[2], f[0], &mut verts);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    let nodes = verts.iter().map(|v| center + v.cast::<T>() * radius).collect();
    SurfaceMesh::new(nodes, faces).expect("icosphere is valid")
}

/// Closed solid under a height field `z = height(x)` over the rectangle
/// `[x0, x1] x [y0, y1]`, with a flat base at `base`.
pub fn heightfield_solid<T: Real>(
    x_range: [T; 2],
    y_range: [T; 2],
    base: T,
    div: [usize; 2],
    wall_levels: usize,
    height: impl Fn(T) -> T,
) -> SurfaceMesh<T> {
    let xs = linspace(x_range[0], x_range[1], div[0]);
    let ys = linspace(y_range[0], y_range[1], div[1]);
    let (nx, ny) = (div[0], div[1]);
    let levels = wall_levels.max(1);
    let mut nodes = Vec::new();
    let top = |i: usize, j: usize| i + (nx + 1) * j;
    for &y in &ys {
        for &x in &xs {
            nodes.push(Vec3::new(x, y, height(x)));
        }
    }
    let bottom_start = nodes.len();
    let bottom = |i: usize, j: usize| bottom_start + i + (nx + 1) * j;
    for &y in &ys {
        for &x in &xs {
            nodes.push(Vec3::new(x, y, base));
        }
    }
    let mut faces = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (top(i, j), top(i + 1, j), top(i + 1, j + 1), top(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
            let (a, b, c, d) = (bottom(i, j), bottom(i + 1, j), bottom(i + 1, j + 1), bottom(i, j + 1));
            faces.push([a, c, b]);
            faces.push([a, d, c]);
        }
    }
    // Side walls: a column of `levels` quads between each boundary top/bottom pair.
    let mut wall = |nodes: &mut Vec<Vec3<T>>, ring: &[(usize, usize)]| {
        let closed = ring.first() == ring.last();
        let open_len = if closed { ring.len() - 1 } else { ring.len() };
        let mut columns: Vec<Vec<usize>> = Vec::with_capacity(ring.len());
        for &(i, j) in &ring[..open_len] {
            let mut col = vec![bottom(i, j)];
            let (b, t) = (nodes[bottom(i, j)], nodes[top(i, j)]);
            for l in 1..levels {
                nodes.push(b + (t - b) * (T::from_count(l) / T::from_count(levels)));
                col.push(nodes.len() - 1);
            }
            col.push(top(i, j));
            columns.push(col);
        }
        if closed {
            columns.push(columns[0].clone());
        }
        for w in 0..ring.len() - 1 {
            for l in 0..levels {
                let (a, b) = (columns[w][l], columns[w + 1][l]);
                let (c, d) = (columns[w + 1][l + 1], columns[w][l + 1]);
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
    };
    // Counter-clockwise walk seen from above gives outward walls.
    let mut ring: Vec<(usize, usize)> = (0..=nx).map(|i| (i, 0)).collect();
    ring.extend((1..=ny).map(|j| (nx, j)));
    ring.extend((0..nx).rev().map(|i| (i, ny)));
    ring.extend((0..ny).rev().map(|j| (0, j)));
    wall(&mut nodes, &ring);
    SurfaceMesh::new(nodes, faces).expect("height field solid is valid")
}

/// The S-shaped profile: flat at 4 m up to x = 20, a cosine ramp to 16 m at
/// x = 50, flat afterwards. Bowl-shaped (seen from above) on 20..35, dome-shaped on 35..50.
pub fn s_profile<T: Real>(x: T) -> T {
    let (a, b) = (T::lit(20.0), T::lit(50.0));
    if x <= a {
        T::lit(4.0)
    } else if x >= b {
        T::lit(16.0)
    } else {
        T::lit(10.0) - T::lit(6.0) * (T::PI() * (x - a) / (b - a)).cos()
    }
}

/// Solid under the S profile spanning slightly more than the 70 x 30 m
/// footprint, so only its top surface faces the flight domain.
pub fn s_surface<T: Real>() -> SurfaceMesh<T> {
    heightfield_solid([T::lit(-2.0), T::lit(72.0)], [T::lit(-2.0), T::lit(32.0)], T::lit(-2.0), [96, 44], 4, s_profile)
}

/// Closed surface of the union of cubes of size `cell` whose centres satisfy `inside`.
pub fn voxel_solid<T: Real>(bounds: Aabb<T>, cell: T, inside: impl Fn(Vec3<T>) -> bool) -> SurfaceMesh<T> {
    let e = bounds.extent();
    let n = |len: T| ((len / cell).ceil().to_f64_lossy() as usize).max(1);
    let (nx, ny, nz) = (n(e.x), n(e.y), n(e.z));
    let xs = linspace(bounds.min.x, bounds.min.x + cell * T::from_count(nx), nx);
    let ys = linspace(bounds.min.y, bounds.min.y + cell * T::from_count(ny), ny);
    let zs = linspace(bounds.min.z, bounds.min.z + cell * T::from_count(nz), nz);
    let half = cell * T::lit(0.5);
    let (nodes, quads) = voxel_quads(&xs, &ys, &zs, |i, j, k| inside(Vec3::new(xs[i] + half, ys[j] + half, zs[k] + half)));
    triangulate_quads(nodes, &quads, &[])
}

/// Voxelized three-blade wind turbine, roughly 26 x 110 x 203 m, tower base at `base`.
pub fn wind_turbine<T: Real>(base: Vec3<T>, cell: T) -> SurfaceMesh<T> {
    let hub = 142.0;
    let blade = 61.0;
    let inside = move |p: Vec3<T>| {
        let q = (p - base).cast::<f64>();
        let tower = q.z < hub && (q.x - 16.0).abs() < 2.6 - 0.008 * q.z && q.y.abs() < 2.6 - 0.008 * q.z;
        let nacelle = (q.x - 14.0).abs() < 7.0 && q.y.abs() < 2.5 && (q.z - hub).abs() < 2.5;
        let rotor_plane = (q.x - 4.0).abs() < 1.0;
        let (dy, dz) = (q.y, q.z - hub);
        let spinner = rotor_plane && dy * dy + dz * dz < 3.0 * 3.0;
        let blades = rotor_plane
            && [90.0f64, 210.0, 330.0].iter().any(|deg| {
                let (s, c) = deg.to_radians().sin_cos();
                let along = dy * c + dz * s;
                let across = -dy * s + dz * c;
                along > 0.0 && along < blade && across.abs() < 1.8 * (1.0 - 0.6 * along / blade)
            });
        tower || nacelle || spinner || blades
    };
    let b = Aabb::new(
        base + Vec3::new(T::zero(), T::lit(-64.0), T::zero()),
        base + Vec3::new(T::lit(26.0), T::lit(64.0), T::lit(hub + blade + 2.0)),
    );
    voxel_solid(b, cell, inside)
}

/// Voxelized girder bridge, 47.5 x 12.85 x 9 m: deck, two girders,
/// abutments and two pairs of piers. `origin` is the lower corner.
pub fn bridge<T: Real>(origin: Vec3<T>, cell: T) -> SurfaceMesh<T> {
    let inside = move |p: Vec3<T>| {
        let q = (p - origin).cast::<f64>();
        let (l, w) = (47.5, 12.85);
        if q.x < 0.0 || q.x > l || q.y < 0.0 || q.y > w || q.z < 0.0 || q.z > 9.0 {
            return false;
        }
        let deck = q.z > 7.8;
        let girder = q.z > 6.6 && [3.0, w - 3.0].iter().any(|g| (q.y - g).abs() < 0.6);
        let abutment = q.x < 2.0 || q.x > l - 2.0;
        let pier = q.z < 6.6
            && [l / 3.0, 2.0 * l / 3.0].iter().any(|&px| (q.x - px).abs() < 0.8)
            && [3.0, w - 3.0].iter().any(|g| (q.y - g).abs() < 0.8);
        let cap = (6.0..6.6).contains(&q.z) && [l / 3.0, 2.0 * l / 3.0].iter().any(|&px| (q.x - px).abs() < 1.0) && q.y > 1.5 && q.y < w - 1.5;
        deck || girder || abutment || pier || cap
    };
    let b = Aabb::new(origin, origin + Vec3::new(T::lit(47.5), T::lit(12.85), T::lit(9.0)));
    voxel_solid(b, cell, inside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{point_inside, Bvh};

    #[test]
    fn portal_matches_reference_counts() {
        let m = portal::<f64>(Vec3::new(25.0, 45.0, 45.0), Vec3::new(10.0, 50.0, 70.0), [30.0, 50.0]);
        assert_eq!(m.node_count(), 2315);
        assert_eq!(m.face_count(), 4630);
        let expected = 2.0 * (50.0 * 70.0 - 30.0 * 50.0) + 10.0 * (240.0 + 160.0);
        assert!((m.area() - expected).abs() < 1e-9);
    }

    #[test]
    fn closed_shapes_have_consistent_parity() {
        let b = box_surface::<f64>(Aabb::new(Vec3::zero(), Vec3::splat(1.0)), [3, 3, 3]);
        let bvh = Bvh::from_surface(&b);
        assert!(point_inside(&bvh, Vec3::new(0.3, 0.6, 0.2)));
        assert!(!point_inside(&bvh, Vec3::new(1.3, 0.6, 0.2)));
        let s = icosphere::<f64>(Vec3::zero(), 2.0, 2);
        let bvh = Bvh::from_surface(&s);
        assert!(point_inside(&bvh, Vec3::new(0.1, 0.2, -0.3)));
        assert!(!point_inside(&bvh, Vec3::new(2.1, 0.0, 0.0)));
    }

    #[test]
    fn box_surface_is_outward_oriented() {
        let b = box_surface::<f64>(Aabb::new(Vec3::zero(), Vec3::splat(1.0)), [2, 3, 4]);
        let c = Vec3::splat(0.5);
        for f in 0..b.face_count() {
            let [p, q, r] = b.triangle(f);
            let n = (q - p).cross(r - p);
            assert!(n.dot((p + q + r) / 3.0 - c) > 0.0);
        }
    }

    #[test]
    fn heightfield_encloses_volume_below_profile() {
        let s = heightfield_solid::<f64>([0.0, 10.0], [0.0, 4.0], 0.0, [20, 8], 3, |x| 2.0 + 0.1 * x);
        let bvh = Bvh::from_surface(&s);
        assert!(point_inside(&bvh, Vec3::new(5.0, 2.0, 2.4)));
        assert!(!point_inside(&bvh, Vec3::new(5.0, 2.0, 2.6)));
    }

    #[test]
    fn s_profile_regions() {
        assert_eq!(s_profile(10.0f64), 4.0);
        assert!((s_profile(35.0f64) - 10.0).abs() < 1e-12);
        assert_eq!(s_profile(60.0f64), 16.0);
        let s = s_surface::<f64>();
        let bvh = Bvh::from_surface(&s);
        assert!(point_inside(&bvh, Vec3::new(27.0, 15.0, s_profile(27.0) - 0.2)));
        assert!(!point_inside(&bvh, Vec3::new(27.0, 15.0, s_profile(27.0) + 0.2)));
    }

    #[test]
    fn voxel_structures_are_closed() {
        for s in [wind_turbine::<f64>(Vec3::zero(), 4.0), bridge::<f64>(Vec3::zero(), 1.0)] {
            let nf = s.node_faces();
            assert!(nf.iter().all(|f| !f.is_empty()));
            // Closed: every edge shared by an even number of faces.
            let mut edges = std::collections::HashMap::new();
            for f in s.faces() {
                for e in 0..3 {
                    let (a, b) = (f[e].min(f[(e + 1) % 3]), f[e].max(f[(e + 1) % 3]));
                    *edges.entry((a, b)).or_insert(0) += 1;
                }
            }
            assert!(edges.values().all(|&c| c % 2 == 0));
        }
    }
}

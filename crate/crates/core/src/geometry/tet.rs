//! Tetrahedral discretization of the flight domain.

use super::{Aabb, Bvh, GeometryError, SurfaceMesh};
use crate::scalar::Real;
use crate::vec3::Vec3;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

/// Local face `k` of a tet is the face opposite vertex `k`.
const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

#[derive(Debug, Clone)]
pub struct TetMesh<T> {
    nodes: Vec<Vec3<T>>,
    cells: Vec<[usize; 4]>,
    boundary_faces: Vec<[usize; 3]>,
    boundary_cells: Vec<usize>,
    /// Set when the mesh fills exactly this box (no exclusions).
    box_domain: Option<Aabb<T>>,
}

/// Per-cell P1 geometry: volume and gradients of the four barycentric functions.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry<T> {
    pub volume: T,
    pub grads: [Vec3<T>; 4],
}

#[inline]
pub fn signed_volume<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>, d: Vec3<T>) -> T {
    (b - a).cross(c - a).dot(d - a) / T::lit(6.0)
}

impl<T: Real> TetMesh<T> {
    /// Builds a mesh from nodes and cells, orienting every cell positively,
    /// dropping unreferenced nodes and extracting boundary faces.
    pub fn new(nodes: Vec<Vec3<T>>, cells: Vec<[usize; 4]>) -> Result<Self, GeometryError> {
        if cells.is_empty() {
            return Err(GeometryError::EmptyMesh("tet mesh has no cells".into()));
        }
        let scale = Aabb::from_points(&nodes).extent().max_component();
        let min_vol = T::epsilon() * scale * scale * scale;
        let mut cells = cells;
        for (i, c) in cells.iter_mut().enumerate() {
            if c.iter().any(|&n| n >= nodes.len()) {
                return Err(GeometryError::InvalidCell {
                    cell: i,
                    reason: "node index out of range".into(),
                });
            }
            let v = signed_volume(nodes[c[0]], nodes[c[1]], nodes[c[2]], nodes[c[3]]);
            if !(v.abs() > min_vol) {
                return Err(GeometryError::InvalidCell {
                    cell: i,
                    reason: "degenerate (zero volume) cell".into(),
                });
            }
            if v < T::zero() {
                c.swap(2, 3);
            }
        }
        let (nodes, cells) = compact_nodes(nodes, cells);
        let (boundary_faces, boundary_cells) = extract_boundary(&cells)?;
        if connected_components(&cells) > 1 {
            return Err(GeometryError::Disconnected);
        }
        Ok(Self {
            nodes,
            cells,
            boundary_faces,
            boundary_cells,
            box_domain: None,
        })
    }

    /// Structured box mesh, six tetrahedra per hexahedron.
    ///
    /// With `exclude`, cells whose centroid lies inside the closed surface
    /// (odd ray-crossing parity) are removed and only the largest
    /// face-connected remainder is kept.
    pub fn build_box(
        extent: Aabb<T>,
        resolution: [usize; 3],
        exclude: Option<&SurfaceMesh<T>>,
    ) -> Result<Self, GeometryError> {
        if resolution.iter().any(|&r| r < 2) {
            return Err(GeometryError::InvalidResolution(resolution));
        }
        if extent.is_empty() || !(extent.volume() > T::zero()) {
            return Err(GeometryError::EmptyMesh("box has zero volume".into()));
        }
        let [nx, ny, nz] = resolution;
        let e = extent.extent();
        let step = Vec3::new(
            e.x / T::from_count(nx),
            e.y / T::from_count(ny),
            e.z / T::from_count(nz),
        );
        let coord = |i: usize, n: usize, lo: T, hi: T, h: T| {
            if i == n {
                hi
            } else {
                lo + h * T::from_count(i)
            }
        };
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    nodes.push(Vec3::new(
                        coord(i, nx, extent.min.x, extent.max.x, step.x),
                        coord(j, ny, extent.min.y, extent.max.y, step.y),
                        coord(k, nz, extent.min.z, extent.max.z, step.z),
                    ));
                }
            }
        }
        let nid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
        // Kuhn subdivision: one tet per axis permutation along the 0 -> 7 diagonal.
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut cells = Vec::with_capacity(nx * ny * nz * 6);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let corner = |bits: usize| nid(i + (bits & 1), j + ((bits >> 1) & 1), k + ((bits >> 2) & 1));
                    for p in PERMS {
                        let b1 = 1 << p[0];
                        let b2 = b1 | (1 << p[1]);
                        cells.push([corner(0), corner(b1), corner(b2), corner(7)]);
                    }
                }
            }
        }
        match exclude {
            None => {
                let mut mesh = Self::new(nodes, cells)?;
                mesh.box_domain = Some(extent);
                Ok(mesh)
            }
            Some(surface) => {
                let bvh = Bvh::from_surface(surface);
                let sb = surface.bounds();
                let kept: Vec<[usize; 4]> = cells
                    .into_iter()
                    .filter(|c| {
                        let centroid = (nodes[c[0]] + nodes[c[1]] + nodes[c[2]] + nodes[c[3]]) / T::lit(4.0);
                        !(sb.contains(centroid) && point_inside(&bvh, centroid))
                    })
                    .collect();
                if kept.is_empty() {
                    return Err(GeometryError::EmptyMesh("exclusion removed every cell".into()));
                }
                // Centroid carving can leave cells hanging on by an edge or a vertex.
                Self::new(nodes, largest_component(kept))
            }
        }
    }

    /// Reads a Gmsh MSH 2.2 ASCII file; only 4-node tetrahedra are used.
    pub fn load_msh(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let (nodes, cells) = parse_msh2(&text).map_err(|e| e.with_path(path))?;
        Self::new(nodes, cells)
    }

    pub fn nodes(&self) -> &[Vec3<T>] {
        &self.nodes
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn boundary_faces(&self) -> &[[usize; 3]] {
        &self.boundary_faces
    }

    /// Owning cell of each boundary face.
    pub fn boundary_cells(&self) -> &[usize] {
        &self.boundary_cells
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn box_domain(&self) -> Option<Aabb<T>> {
        self.box_domain
    }

    pub fn bounds(&self) -> Aabb<T> {
        Aabb::from_points(&self.nodes)
    }

    #[inline]
    pub fn cell_vertices(&self, c: usize) -> [Vec3<T>; 4] {
        let n = self.cells[c];
        [self.nodes[n[0]], self.nodes[n[1]], self.nodes[n[2]], self.nodes[n[3]]]
    }

    pub fn cell_volume(&self, c: usize) -> T {
        let [a, b, d, e] = self.cell_vertices(c);
        signed_volume(a, b, d, e)
    }

    pub fn volume(&self) -> T {
        (0..self.cells.len()).map(|c| self.cell_volume(c)).sum()
    }

    pub fn cell_centroid(&self, c: usize) -> Vec3<T> {
        let [a, b, d, e] = self.cell_vertices(c);
        (a + b + d + e) / T::lit(4.0)
    }

    /// Volume and barycentric gradients of cell `c`.
    pub fn cell_geometry(&self, c: usize) -> CellGeometry<T> {
        let [p0, p1, p2, p3] = self.cell_vertices(c);
        let e1 = p1 - p0;
        let e2 = p2 - p0;
        let e3 = p3 - p0;
        let det = e1.cross(e2).dot(e3);
        let inv = T::one() / det;
        // Rows of the inverse Jacobian are the gradients of lambda_1..3.
        let g1 = e2.cross(e3) * inv;
        let g2 = e3.cross(e1) * inv;
        let g3 = e1.cross(e2) * inv;
        let g0 = -(g1 + g2 + g3);
        CellGeometry {
            volume: det / T::lit(6.0),
            grads: [g0, g1, g2, g3],
        }
    }

    /// Boundary triangles as coordinate triples.
    pub fn boundary_triangles(&self) -> Vec<[Vec3<T>; 3]> {
        self.boundary_faces
            .iter()
            .map(|f| [self.nodes[f[0]], self.nodes[f[1]], self.nodes[f[2]]])
            .collect()
    }

    /// Mean edge length, used to size spatial hashes.
    pub fn mean_edge_length(&self) -> T {
        let mut total = T::zero();
        let mut n = 0usize;
        for c in self.cells.iter().step_by((self.cells.len() / 4096).max(1)) {
            for (a, b) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
                total = total + self.nodes[c[a]].distance(self.nodes[c[b]]);
                n += 1;
            }
        }
        total / T::from_count(n)
    }

    /// Gmsh MSH 2.2 ASCII text (nodes and tets).
    pub fn to_msh2(&self) -> String {
        let mut s = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
        let _ = writeln!(s, "{}", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{} {} {} {}", i + 1, p.x, p.y, p.z);
        }
        s.push_str("$EndNodes\n$Elements\n");
        let _ = writeln!(s, "{}", self.cells.len());
        for (i, c) in self.cells.iter().enumerate() {
            let _ = writeln!(s, "{} 4 2 1 1 {} {} {} {}", i + 1, c[0] + 1, c[1] + 1, c[2] + 1, c[3] + 1);
        }
        s.push_str("$EndElements\n");
        s
    }
}

/// Odd crossing parity along a fixed, axis-skewed direction.
pub fn point_inside<T: Real>(bvh: &Bvh<T>, p: Vec3<T>) -> bool {
    let dir = Vec3::from_f64(0.5773502691896258, 0.4330127018922193, 0.6919876399483256);
    bvh.ray_crossings(p, dir) % 2 == 1
}

fn compact_nodes<T: Real>(nodes: Vec<Vec3<T>>, mut cells: Vec<[usize; 4]>) -> (Vec<Vec3<T>>, Vec<[usize; 4]>) {
    let mut map = vec![usize::MAX; nodes.len()];
    let mut used = Vec::new();
    for c in &cells {
        for &n in c {
            if map[n] == usize::MAX {
                map[n] = 0;
            }
        }
    }
    if map.iter().all(|&m| m == 0) {
        return (nodes, cells);
    }
    for (i, m) in map.iter_mut().enumerate() {
        if *m == 0 {
            *m = used.len();
            used.push(nodes[i]);
        }
    }
    for c in cells.iter_mut() {
        for n in c.iter_mut() {
            *n = map[*n];
        }
    }
    (used, cells)
}

fn face_key(f: [usize; 3]) -> [usize; 3] {
    let mut k = f;
    k.sort_unstable();
    k
}

fn extract_boundary(cells: &[[usize; 4]]) -> Result<(Vec<[usize; 3]>, Vec<usize>), GeometryError> {
    let mut seen: HashMap<[usize; 3], (u32, usize, usize)> = HashMap::with_capacity(cells.len() * 2);
    for (ci, c) in cells.iter().enumerate() {
        for (lf, local) in LOCAL_FACES.iter().enumerate() {
            let f = [c[local[0]], c[local[1]], c[local[2]]];
            let e = seen.entry(face_key(f)).or_insert((0, ci, lf));
            e.0 += 1;
            if e.0 > 2 {
                return Err(GeometryError::InvalidCell {
                    cell: ci,
                    reason: "face shared by more than two cells".into(),
                });
            }
        }
    }
    let mut faces: Vec<(usize, usize)> = seen
        .values()
        .filter(|(n, _, _)| *n == 1)
        .map(|&(_, c, lf)| (c, lf))
        .collect();
    faces.sort_unstable();
    let mut out = Vec::with_capacity(faces.len());
    let mut owners = Vec::with_capacity(faces.len());
    for (c, lf) in faces {
        let l = LOCAL_FACES[lf];
        out.push([cells[c][l[0]], cells[c][l[1]], cells[c][l[2]]]);
        owners.push(c);
    }
    Ok((out, owners))
}

/// Face-connected component root of every cell.
fn component_roots(cells: &[[usize; 4]]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..cells.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut owner: HashMap<[usize; 3], usize> = HashMap::with_capacity(cells.len() * 2);
    for (ci, c) in cells.iter().enumerate() {
        for local in LOCAL_FACES {
            let key = face_key([c[local[0]], c[local[1]], c[local[2]]]);
            if let Some(&other) = owner.get(&key) {
                let (a, b) = (find(&mut parent, ci), find(&mut parent, other));
                if a != b {
                    parent[a] = b;
                }
            } else {
                owner.insert(key, ci);
            }
        }
    }
    (0..cells.len()).map(|i| find(&mut parent, i)).collect()
}

fn connected_components(cells: &[[usize; 4]]) -> usize {
    let roots = component_roots(cells);
    roots.iter().enumerate().filter(|&(i, &r)| i == r).count()
}

/// Cells of the largest face-connected component (ties: lowest root).
fn largest_component(cells: Vec<[usize; 4]>) -> Vec<[usize; 4]> {
    let roots = component_roots(&cells);
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    for &r in &roots {
        *sizes.entry(r).or_insert(0) += 1;
    }
    let Some(keep) = sizes.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&r, _)| r) else {
        return cells;
    };
    cells.into_iter().zip(roots).filter(|&(_, r)| r == keep).map(|(c, _)| c).collect()
}

fn parse_msh2<T: Real>(text: &str) -> Result<(Vec<Vec3<T>>, Vec<[usize; 4]>), GeometryError> {
    let err = |line: usize, m: String| GeometryError::Parse {
        path: String::new(),
        line,
        message: m,
    };
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    let mut nodes = Vec::new();
    let mut tag_to_index: HashMap<i64, usize> = HashMap::new();
    let mut cells = Vec::new();
    let mut saw_format = false;
    while i < lines.len() {
        match lines[i].trim() {
            "$MeshFormat" => {
                let fmt = lines.get(i + 1).ok_or_else(|| err(i + 2, "missing format line".into()))?;
                let version = fmt.split_whitespace().next().unwrap_or("");
                if !version.starts_with('2') {
                    return Err(err(i + 2, format!("unsupported MSH version '{version}', expected 2.x")));
                }
                if fmt.split_whitespace().nth(1) != Some("0") {
                    return Err(err(i + 2, "binary MSH is not supported".into()));
                }
                saw_format = true;
                i += 3;
            }
            "$Nodes" => {
                let n: usize = lines
                    .get(i + 1)
                    .and_then(|l| l.trim().parse().ok())
                    .ok_or_else(|| err(i + 2, "invalid node count".into()))?;
                for k in 0..n {
                    let ln = i + 2 + k;
                    let t: Vec<&str> = lines.get(ln).ok_or_else(|| err(ln + 1, "truncated node block".into()))?.split_whitespace().collect();
                    if t.len() < 4 {
                        return Err(err(ln + 1, "node record needs tag and three coordinates".into()));
                    }
                    let tag: i64 = t[0].parse().map_err(|_| err(ln + 1, format!("invalid node tag '{}'", t[0])))?;
                    let mut v = [T::zero(); 3];
                    for d in 0..3 {
                        let x: f64 = t[d + 1].parse().map_err(|_| err(ln + 1, format!("invalid coordinate '{}'", t[d + 1])))?;
                        v[d] = T::lit(x);
                    }
                    tag_to_index.insert(tag, nodes.len());
                    nodes.push(Vec3::from_array(v));
                }
                i += n + 3;
            }
            "$Elements" => {
                let n: usize = lines
                    .get(i + 1)
                    .and_then(|l| l.trim().parse().ok())
                    .ok_or_else(|| err(i + 2, "invalid element count".into()))?;
                for k in 0..n {
                    let ln = i + 2 + k;
                    let t: Vec<i64> = lines
                        .get(ln)
                        .ok_or_else(|| err(ln + 1, "truncated element block".into()))?
                        .split_whitespace()
                        .map(|s| s.parse::<i64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| err(ln + 1, "invalid element record".into()))?;
                    if t.len() < 3 {
                        return Err(err(ln + 1, "element record too short".into()));
                    }
                    if t[1] != 4 {
                        continue;
                    }
                    let ntags = t[2] as usize;
                    let nodes_at = 3 + ntags;
                    if t.len() < nodes_at + 4 {
                        return Err(err(ln + 1, "tetrahedron record needs four nodes".into()));
                    }
                    let mut c = [0usize; 4];
                    for d in 0..4 {
                        c[d] = *tag_to_index
                            .get(&t[nodes_at + d])
                            .ok_or_else(|| err(ln + 1, format!("unknown node tag {}", t[nodes_at + d])))?;
                    }
                    cells.push(c);
                }
                i += n + 3;
            }
            _ => i += 1,
        }
    }
    if !saw_format {
        return Err(err(1, "missing $MeshFormat section".into()));
    }
    Ok((nodes, cells))
}

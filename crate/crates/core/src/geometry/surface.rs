//! Triangulated structure surfaces and their file formats.

use super::triangle;
use super::{Aabb, GeometryError};
use crate::scalar::Real;
use crate::vec3::Vec3;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

/// Closed or open triangle surface of an inspected structure.
#[derive(Debug, Clone)]
pub struct SurfaceMesh<T> {
    nodes: Vec<Vec3<T>>,
    faces: Vec<[usize; 3]>,
}

impl<T: Real> SurfaceMesh<T> {
    /// Validates and wraps raw node and face arrays.
    pub fn new(nodes: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        if faces.is_empty() {
            return Err(GeometryError::EmptyMesh("surface mesh has no faces".into()));
        }
        let scale = Aabb::from_points(&nodes).extent().max_component();
        let min_area = T::epsilon() * scale * scale;
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&n| n >= nodes.len()) {
                return Err(GeometryError::InvalidFace {
                    face: i,
                    reason: format!("node index out of range (mesh has {} nodes)", nodes.len()),
                });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(GeometryError::InvalidFace {
                    face: i,
                    reason: "repeated node index".into(),
                });
            }
            let a = triangle::area(nodes[f[0]], nodes[f[1]], nodes[f[2]]);
            if !(a > min_area) {
                return Err(GeometryError::DegenerateFace { face: i });
            }
        }
        Ok(Self { nodes, faces })
    }

    pub fn nodes(&self) -> &[Vec3<T>] {
        &self.nodes
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    #[inline]
    pub fn triangle(&self, face: usize) -> [Vec3<T>; 3] {
        let f = self.faces[face];
        [self.nodes[f[0]], self.nodes[f[1]], self.nodes[f[2]]]
    }

    pub fn bounds(&self) -> Aabb<T> {
        Aabb::from_points(&self.nodes)
    }

    pub fn area(&self) -> T {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                triangle::area(a, b, c)
            })
            .sum()
    }

    /// Faces incident to each node, in ascending face order.
    pub fn node_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (i, f) in self.faces.iter().enumerate() {
            for &n in f {
                out[n].push(i);
            }
        }
        out
    }

    /// One third of the incident triangle area per node.
    pub fn node_areas(&self) -> Vec<T> {
        let third = T::one() / T::lit(3.0);
        let mut out = vec![T::zero(); self.nodes.len()];
        for (i, f) in self.faces.iter().enumerate() {
            let [a, b, c] = self.triangle(i);
            let w = triangle::area(a, b, c) * third;
            for &n in f {
                out[n] = out[n] + w;
            }
        }
        out
    }

    /// Applies `map` to every node position.
    pub fn transformed(&self, map: impl Fn(Vec3<T>) -> Vec3<T>) -> Result<Self, GeometryError> {
        Self::new(self.nodes.iter().map(|&p| map(p)).collect(), self.faces.clone())
    }

    /// Loads an ASCII STL or OBJ file, chosen by extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        let (nodes, faces) = match ext.as_str() {
            "stl" => parse_ascii_stl(&text),
            "obj" => parse_obj(&text),
            other => Err(GeometryError::UnsupportedFormat(other.to_string())),
        }
        .map_err(|e| e.with_path(path))?;
        Self::new(nodes, faces)
    }

    /// Wavefront OBJ text with 1-based face indices.
    pub fn to_obj(&self) -> String {
        let mut s = String::with_capacity(self.nodes.len() * 40 + self.faces.len() * 20);
        for p in &self.nodes {
            let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }

    pub fn to_ascii_stl(&self, name: &str) -> String {
        let mut s = format!("solid {name}\n");
        for i in 0..self.faces.len() {
            let [a, b, c] = self.triangle(i);
            let n = triangle::area_vector(a, b, c)
                .try_normalize(T::zero())
                .unwrap_or_else(Vec3::zero);
            let _ = writeln!(s, "  facet normal {} {} {}", n.x, n.y, n.z);
            s.push_str("    outer loop\n");
            for v in [a, b, c] {
                let _ = writeln!(s, "      vertex {} {} {}", v.x, v.y, v.z);
            }
            s.push_str("    endloop\n  endfacet\n");
        }
        let _ = writeln!(s, "endsolid {name}");
        s
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> GeometryError {
    GeometryError::Parse {
        path: String::new(),
        line,
        message: message.into(),
    }
}

fn parse_coords<T: Real>(tokens: &[&str], line: usize) -> Result<Vec3<T>, GeometryError> {
    if tokens.len() < 3 {
        return Err(parse_error(line, "expected three coordinates"));
    }
    let mut v = [T::zero(); 3];
    for (k, tok) in tokens.iter().take(3).enumerate() {
        let x: f64 = tok
            .parse()
            .map_err(|_| parse_error(line, format!("invalid number '{tok}'")))?;
        if !x.is_finite() {
            return Err(parse_error(line, format!("non-finite coordinate '{tok}'")));
        }
        v[k] = T::lit(x);
    }
    Ok(Vec3::from_array(v))
}

/// ASCII STL; vertices with bitwise-identical coordinates are merged.
pub(crate) fn parse_ascii_stl<T: Real>(
    text: &str,
) -> Result<(Vec<Vec3<T>>, Vec<[usize; 3]>), GeometryError> {
    let mut nodes: Vec<Vec3<T>> = Vec::new();
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut faces = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(3);
    let mut saw_solid = false;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some(&head) = tokens.first() else { continue };
        match head {
            "solid" => saw_solid = true,
            "facet" | "outer" => current.clear(),
            "vertex" => {
                let p: Vec3<T> = parse_coords(&tokens[1..], line)?;
                let key = [
                    p.x.to_f64_lossy().to_bits(),
                    p.y.to_f64_lossy().to_bits(),
                    p.z.to_f64_lossy().to_bits(),
                ];
                let id = *index.entry(key).or_insert_with(|| {
                    nodes.push(p);
                    nodes.len() - 1
                });
                current.push(id);
            }
            "endloop" => {
                if current.len() != 3 {
                    return Err(parse_error(
                        line,
                        format!("facet has {} vertices, expected 3", current.len()),
                    ));
                }
            }
            "endfacet" => {
                if current.len() != 3 {
                    return Err(parse_error(line, "facet without three vertices"));
                }
                faces.push([current[0], current[1], current[2]]);
                current.clear();
            }
            "endsolid" => {}
            other => return Err(parse_error(line, format!("unexpected keyword '{other}'"))),
        }
    }
    if !saw_solid {
        return Err(parse_error(1, "missing 'solid' header (binary STL is not supported)"));
    }
    Ok((nodes, faces))
}

/// Wavefront OBJ restricted to `v` and triangular `f` records.
pub(crate) fn parse_obj<T: Real>(
    text: &str,
) -> Result<(Vec<Vec3<T>>, Vec<[usize; 3]>), GeometryError> {
    let mut nodes = Vec::new();
    let mut raw_faces: Vec<([i64; 3], usize)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some(&head) = tokens.first() else { continue };
        match head {
            "v" => nodes.push(parse_coords(&tokens[1..], line)?),
            "f" => {
                if tokens.len() != 4 {
                    return Err(parse_error(
                        line,
                        format!("face has {} vertices; only triangles are supported", tokens.len() - 1),
                    ));
                }
                let mut idx = [0i64; 3];
                for k in 0..3 {
                    let first = tokens[k + 1].split('/').next().unwrap_or("");
                    idx[k] = first
                        .parse()
                        .map_err(|_| parse_error(line, format!("invalid face index '{}'", tokens[k + 1])))?;
                    if idx[k] == 0 {
                        return Err(parse_error(line, "face index 0 is invalid in OBJ"));
                    }
                }
                raw_faces.push((idx, line));
            }
            // Normals, texture coordinates, groups and materials carry no geometry we use.
            "vn" | "vt" | "vp" | "g" | "o" | "s" | "usemtl" | "mtllib" | "l" => {}
            other => return Err(parse_error(line, format!("unsupported record '{other}'"))),
        }
    }
    let n = nodes.len() as i64;
    let mut faces = Vec::with_capacity(raw_faces.len());
    for (idx, line) in raw_faces {
        let mut f = [0usize; 3];
        for k in 0..3 {
            let i = if idx[k] < 0 { n + idx[k] } else { idx[k] - 1 };
            if i < 0 || i >= n {
                return Err(parse_error(line, format!("face index {} out of range", idx[k])));
            }
            f[k] = i as usize;
        }
        faces.push(f);
    }
    Ok((nodes, faces))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_cube_obj() -> &'static str {
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n\
         f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5\n\
         f 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8\n"
    }

    #[test]
    fn obj_cube_counts() {
        let (n, f) = parse_obj::<f64>(unit_cube_obj()).unwrap();
        let m = SurfaceMesh::new(n, f).unwrap();
        assert_eq!(m.node_count(), 8);
        assert_eq!(m.face_count(), 12);
        assert!((m.area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn stl_round_trip_merges_vertices() {
        let (n, f) = parse_obj::<f64>(unit_cube_obj()).unwrap();
        let m = SurfaceMesh::new(n, f).unwrap();
        let (n2, f2) = parse_ascii_stl::<f64>(&m.to_ascii_stl("cube")).unwrap();
        assert_eq!(n2.len(), 8);
        assert_eq!(f2.len(), 12);
    }

    #[test]
    fn zero_area_face_is_named() {
        let text = "v 0 0 0\nv 1 0 0\nv 2 0 0\nv 0 1 0\nf 1 2 4\nf 1 2 3\n";
        let (n, f) = parse_obj::<f64>(text).unwrap();
        match SurfaceMesh::new(n, f) {
            Err(GeometryError::DegenerateFace { face }) => assert_eq!(face, 1),
            other => panic!("expected degenerate face error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_obj::<f64>("v 0 0 0\nv 1 x 0\n").unwrap_err();
        assert!(matches!(err, GeometryError::Parse { line: 2, .. }));
        let err = parse_obj::<f64>("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n").unwrap_err();
        assert!(matches!(err, GeometryError::Parse { line: 5, .. }));
    }

    #[test]
    fn node_areas_sum_to_total() {
        let (n, f) = parse_obj::<f64>(unit_cube_obj()).unwrap();
        let m = SurfaceMesh::new(n, f).unwrap();
        let s: f64 = m.node_areas().iter().sum();
        assert!((s - 6.0).abs() < 1e-12);
    }
}

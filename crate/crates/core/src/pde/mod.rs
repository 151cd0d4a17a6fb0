//! Finite-element Helmholtz potential: `(k K + M) psi = M mu` on P1 tetrahedra.
//!
//! The zero-flux boundary condition is natural, so no boundary rows are
//! touched. The system matrix is factored once; each solve is one sparse
//! product and two triangular sweeps.

mod cholesky;
mod sparse;

pub use cholesky::{nested_dissection, Cholesky, NotPositiveDefinite};
pub use sparse::CsrMatrix;

use crate::fields::{FieldError, ScalarField};
use crate::geometry::{Domain, GeometryError, TetMesh};
use crate::scalar::Real;
use crate::vec3::Vec3;
use rayon::prelude::*;
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PdeError {
    #[error("conduction coefficient must be positive, got {0}")]
    InvalidCoefficient(String),
    #[error("system matrix is not positive definite (pivot at node {0}); the mesh is likely broken")]
    Singular(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// P1 stiffness and mass of one tetrahedron.
pub fn element_matrices<T: Real>(mesh: &TetMesh<T>, cell: usize) -> ([[T; 4]; 4], [[T; 4]; 4]) {
    let g = mesh.cell_geometry(cell);
    let m_off = g.volume / T::lit(20.0);
    let mut k = [[T::zero(); 4]; 4];
    let mut m = [[m_off; 4]; 4];
    for a in 0..4 {
        m[a][a] = m_off * T::lit(2.0);
        for b in 0..4 {
            k[a][b] = g.volume * g.grads[a].dot(g.grads[b]);
        }
    }
    (k, m)
}

/// Global stiffness and mass matrices, summed cell by cell in cell order.
pub fn assemble_matrices<T: Real>(mesh: &TetMesh<T>) -> (CsrMatrix<T>, CsrMatrix<T>) {
    let n = mesh.node_count();
    let mut pairs = Vec::with_capacity(mesh.cell_count() * 16);
    for c in mesh.cells() {
        for &a in c {
            for &b in c {
                pairs.push((a, b));
            }
        }
    }
    let mut stiff = CsrMatrix::from_pattern(n, pairs);
    let mut mass = stiff.clone();
    let elements: Vec<_> = (0..mesh.cell_count()).into_par_iter().map(|c| element_matrices(mesh, c)).collect();
    for (cell, (ke, me)) in mesh.cells().iter().zip(elements) {
        for a in 0..4 {
            for b in 0..4 {
                stiff.add(cell[a], cell[b], ke[a][b]);
                mass.add(cell[a], cell[b], me[a][b]);
            }
        }
    }
    (stiff, mass)
}

/// Assembled and factored Helmholtz operator for one mesh.
#[derive(Debug)]
pub struct HelmholtzSystem<T> {
    conduction: T,
    stiffness: CsrMatrix<T>,
    mass: CsrMatrix<T>,
    factor: Cholesky<T>,
    work: Mutex<(Vec<T>, Vec<T>)>,
}

impl<T: Real> HelmholtzSystem<T> {
    pub fn assemble(mesh: &TetMesh<T>, conduction: T) -> Result<Self, PdeError> {
        if !(conduction > T::zero()) || !conduction.is_finite() {
            return Err(PdeError::InvalidCoefficient(conduction.to_string()));
        }
        let (stiffness, mass) = assemble_matrices(mesh);
        let system = stiffness.combine(conduction, &mass, T::one());
        let perm = nested_dissection(mesh.nodes(), &system);
        let factor = Cholesky::factor(&system, perm).map_err(|e| PdeError::Singular(e.row))?;
        Ok(Self {
            conduction,
            stiffness,
            mass,
            factor,
            work: Mutex::new((Vec::new(), Vec::new())),
        })
    }

    pub fn conduction(&self) -> T {
        self.conduction
    }

    pub fn stiffness(&self) -> &CsrMatrix<T> {
        &self.stiffness
    }

    pub fn mass(&self) -> &CsrMatrix<T> {
        &self.mass
    }

    pub fn node_count(&self) -> usize {
        self.mass.n()
    }

    pub fn factor_nnz(&self) -> usize {
        self.factor.factor_nnz()
    }

    pub fn solve(&self, mu: &ScalarField<T>) -> Result<PotentialField<T>, PdeError> {
        let n = self.node_count();
        if mu.len() != n {
            return Err(FieldError::MeshMismatch { expected: n, got: mu.len() }.into());
        }
        let mut guard = self.work.lock().unwrap_or_else(|e| e.into_inner());
        let (rhs, scratch) = &mut *guard;
        rhs.resize(n, T::zero());
        self.mass.mul_vec(mu.values(), rhs);
        self.factor.solve_in_place(rhs, scratch);
        Ok(PotentialField {
            psi: ScalarField::from_values(rhs.clone()),
        })
    }
}

/// The potential `psi` with its piecewise-constant gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField<T> {
    psi: ScalarField<T>,
}

impl<T: Real> PotentialField<T> {
    pub fn new(psi: ScalarField<T>) -> Self {
        Self { psi }
    }

    pub fn field(&self) -> &ScalarField<T> {
        &self.psi
    }

    pub fn into_field(self) -> ScalarField<T> {
        self.psi
    }

    pub fn cell_gradient(&self, mesh: &TetMesh<T>, cell: usize) -> Vec3<T> {
        let g = mesh.cell_geometry(cell);
        let c = mesh.cells()[cell];
        (0..4).fold(Vec3::zero(), |acc, a| acc + g.grads[a] * self.psi.values()[c[a]])
    }

    pub fn grad_at(&self, domain: &Domain<T>, p: Vec3<T>) -> Result<Vec3<T>, GeometryError> {
        let loc = domain.locate(p)?;
        Ok(self.cell_gradient(domain.mesh(), loc.cell))
    }

    pub fn value_at(&self, domain: &Domain<T>, p: Vec3<T>) -> Result<T, GeometryError> {
        let loc = domain.locate(p)?;
        Ok(self.psi.interpolate(domain.mesh(), loc.cell, loc.bary))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Quadrature;
    use crate::geometry::Aabb;

    fn unit_box(n: usize) -> TetMesh<f64> {
        TetMesh::build_box(Aabb::new(Vec3::zero(), Vec3::splat(1.0)), [n, n, n], None).unwrap()
    }

    #[test]
    fn reference_tet_element_matrices() {
        let mesh = TetMesh::new(
            vec![Vec3::<f64>::zero(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)],
            vec![[0, 1, 2, 3]],
        )
        .unwrap();
        let (k, m) = element_matrices(&mesh, 0);
        let v = 1.0 / 6.0;
        // grad l0 = (-1,-1,-1), grad l_i = e_i.
        let expected_k = [
            [3.0 * v, -v, -v, -v],
            [-v, v, 0.0, 0.0],
            [-v, 0.0, v, 0.0],
            [-v, 0.0, 0.0, v],
        ];
        let c = mesh.cells()[0];
        for a in 0..4 {
            for b in 0..4 {
                let (ia, ib) = (c[a], c[b]);
                assert!((k[a][b] - expected_k[ia][ib]).abs() < 1e-15);
                let em = if a == b { v / 10.0 } else { v / 20.0 };
                assert!((m[a][b] - em).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_tets_sum_on_shared_face() {
        let nodes = vec![
            Vec3::<f64>::zero(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
        ];
        let mesh = TetMesh::new(nodes, vec![[0, 1, 2, 3], [0, 2, 1, 4]]).unwrap();
        let (k, m) = assemble_matrices(&mesh);
        let mut k_sum = 0.0;
        let mut m_sum = 0.0;
        for c in 0..2 {
            let (ke, me) = element_matrices(&mesh, c);
            let cell = mesh.cells()[c];
            for a in 0..4 {
                for b in 0..4 {
                    if mesh.nodes()[cell[a]] == Vec3::zero() && mesh.nodes()[cell[b]] == Vec3::new(1.0, 0.0, 0.0) {
                        k_sum += ke[a][b];
                        m_sum += me[a][b];
                    }
                }
            }
        }
        let i0 = mesh.nodes().iter().position(|&p| p == Vec3::zero()).unwrap();
        let i1 = mesh.nodes().iter().position(|&p| p == Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((k.get(i0, i1) - k_sum).abs() < 1e-15);
        assert!((m.get(i0, i1) - 2.0 / 6.0 / 20.0).abs() < 1e-15);
        assert!((m.get(i0, i1) - m_sum).abs() < 1e-15);
        assert!(k.is_symmetric(1e-15) && m.is_symmetric(1e-15));
        // Rows of K sum to zero; entries of M sum to the volume.
        for r in 0..mesh.node_count() {
            let s: f64 = k.row(r).1.iter().sum();
            assert!(s.abs() < 1e-14);
        }
        let total: f64 = (0..mesh.node_count()).map(|r| m.row(r).1.iter().sum::<f64>()).sum();
        assert!((total - mesh.volume()).abs() < 1e-14);
    }

    #[test]
    fn constant_and_zero_sources() {
        let mesh = unit_box(6);
        let sys = HelmholtzSystem::assemble(&mesh, 0.1).unwrap();
        let psi = sys.solve(&ScalarField::constant(mesh.node_count(), 2.5)).unwrap();
        assert!(psi.field().values().iter().all(|&v| (v - 2.5).abs() < 1e-12));
        let zero = sys.solve(&ScalarField::zeros(mesh.node_count())).unwrap();
        assert!(zero.field().values().iter().all(|&v| v == 0.0));
        assert!(HelmholtzSystem::assemble(&mesh, 0.0).is_err());
        assert!(sys.solve(&ScalarField::zeros(3)).is_err());
    }

    #[test]
    fn linearity_and_mirror_symmetry() {
        let mesh = unit_box(6);
        let sys = HelmholtzSystem::assemble(&mesh, 0.1).unwrap();
        let f1 = ScalarField::from_fn(&mesh, |p| (-(p - Vec3::splat(0.3)).norm_squared() * 10.0).exp());
        let f2 = ScalarField::from_fn(&mesh, |p| p.x * p.y + 0.1);
        let a = sys.solve(&f1).unwrap();
        let b = sys.solve(&f2).unwrap();
        let ab = sys.solve(&f1.combine(0.7, &f2, -1.3)).unwrap();
        for i in 0..mesh.node_count() {
            let lin = 0.7 * a.field().values()[i] - 1.3 * b.field().values()[i];
            assert!((ab.field().values()[i] - lin).abs() < 1e-10);
        }

        // The Kuhn split is invariant under the point reflection x -> 1 - x.
        let mirror = |p: Vec3<f64>| Vec3::splat(1.0) - p;
        let sym = ScalarField::from_fn(&mesh, |p| (p - Vec3::splat(0.2)).norm() + (mirror(p) - Vec3::splat(0.2)).norm());
        let s = sys.solve(&sym).unwrap();
        let index = |p: Vec3<f64>| mesh.nodes().iter().position(|&q| (q - p).norm() < 1e-12).unwrap();
        for (i, &p) in mesh.nodes().iter().enumerate() {
            let j = index(mirror(p));
            assert!((s.field().values()[i] - s.field().values()[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn nonnegative_for_nonnegative_source() {
        let mesh = unit_box(10);
        let sys = HelmholtzSystem::assemble(&mesh, 0.1).unwrap();
        let spike = ScalarField::from_fn(&mesh, |p| if (p - Vec3::splat(0.5)).norm() < 0.15 { 1.0 } else { 0.0 });
        let psi = sys.solve(&spike).unwrap();
        assert!(psi.field().min() >= -1e-10, "min {}", psi.field().min());
    }

    #[test]
    fn gradients() {
        let mesh = unit_box(4);
        let domain = Domain::new(mesh.clone());
        let lin = PotentialField::new(ScalarField::from_fn(&mesh, |p| 3.0 * p.x - 1.0));
        let cst = PotentialField::new(ScalarField::constant(mesh.node_count(), 4.0));
        for c in 0..mesh.cell_count() {
            assert!((lin.cell_gradient(&mesh, c) - Vec3::new(3.0, 0.0, 0.0)).norm() < 1e-12);
            assert!(cst.cell_gradient(&mesh, c).norm() < 1e-12);
        }
        assert!(lin.grad_at(&domain, Vec3::splat(2.0)).is_err());
    }

    fn manufactured_error(n: usize, k: f64) -> (f64, f64) {
        use std::f64::consts::PI;
        let mesh = unit_box(n);
        let exact = |p: Vec3<f64>| (PI * p.x).cos() * (PI * p.y).cos() * (PI * p.z).cos();
        let sys = HelmholtzSystem::assemble(&mesh, k).unwrap();
        let mu = ScalarField::from_fn(&mesh, |p| (1.0 + 3.0 * k * PI * PI) * exact(p));
        let psi = sys.solve(&mu).unwrap();
        let err = ScalarField::from_values(
            mesh.nodes().iter().zip(psi.field().values()).map(|(&p, &v)| (v - exact(p)).powi(2)).collect(),
        );
        let l2 = Quadrature::new(&mesh).integrate(&err).sqrt();
        // Gradient error at cell centroids.
        let mut gmax: f64 = 0.0;
        for c in 0..mesh.cell_count() {
            let x = mesh.cell_centroid(c);
            let g = Vec3::new(
                -PI * (PI * x.x).sin() * (PI * x.y).cos() * (PI * x.z).cos(),
                -PI * (PI * x.x).cos() * (PI * x.y).sin() * (PI * x.z).cos(),
                -PI * (PI * x.x).cos() * (PI * x.y).cos() * (PI * x.z).sin(),
            );
            gmax = gmax.max((psi.cell_gradient(&mesh, c) - g).norm());
        }
        (l2, gmax)
    }

    #[test]
    fn manufactured_convergence() {
        let (e1, g1) = manufactured_error(6, 0.1);
        let (e2, g2) = manufactured_error(12, 0.1);
        assert!(e1 / e2 >= 3.0, "ratio {}", e1 / e2);
        assert!(g1 / g2 >= 1.5, "gradient ratio {}", g1 / g2);
    }
}

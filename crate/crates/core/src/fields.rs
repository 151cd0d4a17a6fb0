//! Nodal scalar fields: target density, accumulated coverage, remaining
//! density and the spatial coverage measure.

use crate::geometry::{Aabb, NodeGrid, TetMesh};
use crate::scalar::Real;
use crate::vec3::Vec3;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("field has {got} values but the mesh has {expected} nodes")]
    MeshMismatch { expected: usize, got: usize },
    #[error("field integral is zero; cannot normalize")]
    ZeroIntegral,
    #[error("field has a negative or non-finite value at node {0}")]
    Negative(usize),
    #[error("target region contains no mesh nodes")]
    EmptyIntersection,
    #[error("invalid action parameters: {0}")]
    InvalidAction(String),
    #[error("invalid target density parameters: {0}")]
    InvalidParameters(String),
}

/// One value per mesh node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![T::zero(); n] }
    }

    pub fn constant(n: usize, v: T) -> Self {
        Self { values: vec![v; n] }
    }

    pub fn from_values(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn from_fn(mesh: &TetMesh<T>, f: impl Fn(Vec3<T>) -> T) -> Self {
        Self {
            values: mesh.nodes().iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_mesh(&self, mesh: &TetMesh<T>) -> Result<(), FieldError> {
        if self.values.len() != mesh.node_count() {
            return Err(FieldError::MeshMismatch {
                expected: mesh.node_count(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(&x, &y)| a * x + b * y).collect(),
        }
    }

    /// Linear interpolation at barycentric coordinates of `cell`.
    pub fn interpolate(&self, mesh: &TetMesh<T>, cell: usize, bary: [T; 4]) -> T {
        let c = mesh.cells()[cell];
        (0..4).map(|k| self.values[c[k]] * bary[k]).sum()
    }
}

/// Integrates P1 fields: per-cell volume times the mean of the four nodal values.
///
/// Stored as lumped node weights (a quarter of every incident cell volume),
/// which is the same rule summed node by node.
#[derive(Debug, Clone)]
pub struct Quadrature<T> {
    weights: Vec<T>,
    volume: T,
}

impl<T: Real> Quadrature<T> {
    pub fn new(mesh: &TetMesh<T>) -> Self {
        let quarter = T::lit(0.25);
        let mut weights = vec![T::zero(); mesh.node_count()];
        let mut volume = T::zero();
        for (c, cell) in mesh.cells().iter().enumerate() {
            let v = mesh.cell_volume(c);
            volume = volume + v;
            for &n in cell {
                weights[n] = weights[n] + v * quarter;
            }
        }
        Self { weights, volume }
    }

    pub fn node_weights(&self) -> &[T] {
        &self.weights
    }

    pub fn volume(&self) -> T {
        self.volume
    }

    pub fn integrate(&self, f: &ScalarField<T>) -> T {
        self.weights.iter().zip(f.values()).map(|(&w, &v)| w * v).sum()
    }
}

/// Isotropic Gaussian coverage action with a hard cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianAction<T> {
    intensity: T,
    range: T,
    cutoff: T,
    peak: T,
}

impl<T: Real> GaussianAction<T> {
    /// Action with the default cutoff of `4 sigma`.
    pub fn new(intensity: T, range: T) -> Result<Self, FieldError> {
        Self::with_cutoff(intensity, range, range * T::lit(4.0))
    }

    pub fn with_cutoff(intensity: T, range: T, cutoff: T) -> Result<Self, FieldError> {
        if !(intensity > T::zero()) || !(range > T::zero()) {
            return Err(FieldError::InvalidAction(format!(
                "intensity ({intensity}) and range ({range}) must be positive"
            )));
        }
        if !(cutoff >= range * T::lit(3.0)) {
            return Err(FieldError::InvalidAction(format!(
                "cutoff {cutoff} is below three standard deviations ({})",
                range * T::lit(3.0)
            )));
        }
        let s = range * (T::TAU()).sqrt();
        Ok(Self {
            intensity,
            range,
            cutoff,
            peak: intensity / (s * s * s),
        })
    }

    pub fn intensity(&self) -> T {
        self.intensity
    }

    pub fn range(&self) -> T {
        self.range
    }

    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    /// Density at distance `r`; exactly zero beyond the cutoff.
    #[inline]
    pub fn eval(&self, r: T) -> T {
        if r > self.cutoff {
            return T::zero();
        }
        self.eval_squared(r * r)
    }

    /// Density from a squared distance, skipping the cutoff test.
    #[inline]
    fn eval_squared(&self, r2: T) -> T {
        self.peak * (-r2 / (T::lit(2.0) * self.range * self.range)).exp()
    }
}

/// A point emitting coverage action, identified for deterministic ordering.
#[derive(Debug, Clone, Copy)]
pub struct ActionSource<T> {
    pub id: usize,
    pub position: Vec3<T>,
    pub action: GaussianAction<T>,
}

/// Indicator of `region` (closed), normalized to unit integral.
pub fn build_target_density_box<T: Real>(
    mesh: &TetMesh<T>,
    quad: &Quadrature<T>,
    region: &Aabb<T>,
) -> Result<ScalarField<T>, FieldError> {
    let f = ScalarField::from_fn(mesh, |p| if region.contains(p) { T::one() } else { T::zero() });
    if f.values().iter().all(|&v| v == T::zero()) {
        return Err(FieldError::EmptyIntersection);
    }
    normalize(quad, &f)
}

/// `exp(-(d_s - d_m)^2 / (2 d_sigma^2))` per node, normalized.
pub fn build_target_density_inspection<T: Real>(
    quad: &Quadrature<T>,
    surface_distance: &ScalarField<T>,
    inspection_distance: T,
    broadness: T,
) -> Result<ScalarField<T>, FieldError> {
    let raw = inspection_shell(surface_distance, inspection_distance, broadness)?;
    normalize(quad, &raw)
}

/// The unnormalized inspection shell.
pub fn inspection_shell<T: Real>(
    surface_distance: &ScalarField<T>,
    inspection_distance: T,
    broadness: T,
) -> Result<ScalarField<T>, FieldError> {
    if !(inspection_distance > T::zero()) || !(broadness > T::zero()) {
        return Err(FieldError::InvalidParameters(format!(
            "inspection distance ({inspection_distance}) and broadness ({broadness}) must be positive"
        )));
    }
    let two_var = T::lit(2.0) * broadness * broadness;
    Ok(ScalarField::from_values(
        surface_distance
            .values()
            .iter()
            .map(|&d| {
                let e = d - inspection_distance;
                (-(e * e) / two_var).exp()
            })
            .collect(),
    ))
}

/// Scales a nonnegative field to unit integral.
pub fn normalize<T: Real>(quad: &Quadrature<T>, f: &ScalarField<T>) -> Result<ScalarField<T>, FieldError> {
    if let Some(i) = f.values().iter().position(|&v| !(v >= T::zero()) || !v.is_finite()) {
        return Err(FieldError::Negative(i));
    }
    let total = quad.integrate(f);
    if !(total > T::zero()) {
        return Err(FieldError::ZeroIntegral);
    }
    Ok(f.scaled(T::one() / total))
}

/// Adds `dt * sum_i phi_i(|x - y_i|)` to every node within a cutoff.
///
/// Per node, contributions are summed in ascending source id before the
/// single update, so the result does not depend on the order of `sources`.
pub fn accumulate_coverage<T: Real>(
    coverage: &mut ScalarField<T>,
    nodes: &[Vec3<T>],
    grid: &NodeGrid<T>,
    sources: &[ActionSource<T>],
    dt: T,
    scratch: &mut CoverageScratch<T>,
) {
    scratch.ensure(nodes.len());
    let mut order: Vec<&ActionSource<T>> = sources.iter().collect();
    order.sort_by_key(|s| s.id);
    for s in order {
        let action = s.action;
        grid.for_each_within(nodes, s.position, action.cutoff(), |n, d2| {
            if scratch.increment[n] == T::zero() && !scratch.touched_flag[n] {
                scratch.touched_flag[n] = true;
                scratch.touched.push(n);
            }
            scratch.increment[n] = scratch.increment[n] + action.eval_squared(d2);
        });
    }
    let values = coverage.values_mut();
    for &n in &scratch.touched {
        values[n] = values[n] + dt * scratch.increment[n];
        scratch.increment[n] = T::zero();
        scratch.touched_flag[n] = false;
    }
    scratch.touched.clear();
}

/// Reusable buffers for [`accumulate_coverage`].
#[derive(Debug, Clone, Default)]
pub struct CoverageScratch<T> {
    increment: Vec<T>,
    touched_flag: Vec<bool>,
    touched: Vec<usize>,
}

impl<T: Real> CoverageScratch<T> {
    fn ensure(&mut self, n: usize) {
        if self.increment.len() != n {
            self.increment = vec![T::zero(); n];
            self.touched_flag = vec![false; n];
            self.touched.clear();
        }
    }
}

/// `mu0 * exp(-rho)` per node.
pub fn remaining_density<T: Real>(
    target: &ScalarField<T>,
    coverage: &ScalarField<T>,
) -> Result<ScalarField<T>, FieldError> {
    if target.len() != coverage.len() {
        return Err(FieldError::MeshMismatch {
            expected: target.len(),
            got: coverage.len(),
        });
    }
    Ok(ScalarField::from_values(
        target
            .values()
            .iter()
            .zip(coverage.values())
            .map(|(&m, &r)| if m == T::zero() { T::zero() } else { m * (-r).exp() })
            .collect(),
    ))
}

/// `1 - integral(mu)`, clamped to `[0, 1]`.
pub fn spatial_coverage<T: Real>(quad: &Quadrature<T>, remaining: &ScalarField<T>) -> T {
    (T::one() - quad.integrate(remaining)).max(T::zero()).min(T::one())
}

/// `integral(mu0 * (1 - exp(-rho)))`: the covered share of the target mass.
///
/// Equal to [`spatial_coverage`] for a normalized target, but exactly zero at
/// `rho = 0` and monotone in `rho` node by node.
pub fn covered_mass<T: Real>(quad: &Quadrature<T>, target: &ScalarField<T>, coverage: &ScalarField<T>) -> T {
    quad.node_weights()
        .iter()
        .zip(target.values().iter().zip(coverage.values()))
        .map(|(&w, (&m, &r))| w * m * (-(-r).exp_m1()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NodeGrid;

    fn unit_mesh(n: usize) -> TetMesh<f64> {
        TetMesh::build_box(Aabb::new(Vec3::zero(), Vec3::splat(1.0)), [n, n, n], None).unwrap()
    }

    #[test]
    fn action_values() {
        let a = GaussianAction::<f64>::new(200.0, 5.0).unwrap();
        assert!((a.eval(0.0) - 0.101_589_817_494_785_55).abs() < 1e-15);
        assert!((a.eval(0.0) - 200.0 / (5.0 * (2.0 * std::f64::consts::PI).sqrt()).powi(3)).abs() <= 1e-12 * a.eval(0.0));
        assert_eq!(a.eval(a.cutoff() + 1.0), 0.0);
        let b = GaussianAction::<f64>::new(1.0, 1.0).unwrap();
        assert!((b.eval(1.0) - 0.038_510_836_890_748_94).abs() < 1e-15);
    }

    #[test]
    fn action_rejects_bad_parameters() {
        assert!(GaussianAction::new(0.0, 1.0).is_err());
        assert!(GaussianAction::new(1.0, -1.0).is_err());
        assert!(GaussianAction::with_cutoff(1.0, 1.0, 2.9).is_err());
        assert!(GaussianAction::with_cutoff(1.0, 1.0, 3.0).is_ok());
    }

    #[test]
    fn full_box_density_is_inverse_volume() {
        let m = unit_mesh(4);
        let q = Quadrature::new(&m);
        let f = build_target_density_box(&m, &q, &Aabb::new(Vec3::splat(-1.0), Vec3::splat(2.0))).unwrap();
        assert!(f.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn half_box_density_matches_p1_integral() {
        // Indicator of x <= 1/2 on an n-grid: the P1 interpolant integrates to 1/2 + h/2.
        let n = 8;
        let h = 1.0 / n as f64;
        let m = unit_mesh(n);
        let q = Quadrature::new(&m);
        let region = Aabb::new(Vec3::splat(-1.0), Vec3::new(0.5, 2.0, 2.0));
        let f = build_target_density_box(&m, &q, &region).unwrap();
        let expected = 1.0 / (0.5 + 0.5 * h);
        for (p, &v) in m.nodes().iter().zip(f.values()) {
            if p.x <= 0.5 {
                assert!((v - expected).abs() < 1e-12);
            } else {
                assert_eq!(v, 0.0);
            }
        }
        assert!((q.integrate(&f) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_region_is_an_error() {
        let m = unit_mesh(2);
        let q = Quadrature::new(&m);
        let r = build_target_density_box(&m, &q, &Aabb::new(Vec3::splat(3.0), Vec3::splat(4.0)));
        assert_eq!(r.unwrap_err(), FieldError::EmptyIntersection);
    }

    #[test]
    fn inspection_shell_values() {
        let d = ScalarField::<f64>::from_values(vec![5.0, 11.0, 0.0]);
        let raw = inspection_shell(&d, 5.0, 2.0).unwrap();
        assert_eq!(raw.values()[0], 1.0);
        assert!((raw.values()[1] - 0.011_108_996_538_242_306).abs() < 1e-16);
    }

    #[test]
    fn normalize_is_idempotent_and_rejects_zero() {
        let m = unit_mesh(3);
        let q = Quadrature::new(&m);
        let f = ScalarField::from_fn(&m, |p| 1.0 + p.x * p.y);
        let a = normalize(&q, &f).unwrap();
        let b = normalize(&q, &a).unwrap();
        assert!((q.integrate(&a) - 1.0).abs() < 1e-12);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(normalize(&q, &ScalarField::zeros(m.node_count())).unwrap_err(), FieldError::ZeroIntegral);
        let c = normalize(&q, &ScalarField::constant(m.node_count(), 3.0)).unwrap();
        assert!(c.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn accumulation_rules() {
        let m = unit_mesh(6);
        let grid = NodeGrid::new(m.nodes(), 0.2);
        let a = GaussianAction::new(0.01, 0.1).unwrap();
        let src = |id, p| ActionSource { id, position: p, action: a };
        let c = Vec3::new(0.5, 0.5, 0.5);
        let mut scratch = CoverageScratch::default();

        let mut rho = ScalarField::zeros(m.node_count());
        accumulate_coverage(&mut rho, m.nodes(), &grid, &[], 1.0, &mut scratch);
        assert!(rho.values().iter().all(|&v| v == 0.0));

        // Stationary source for T steps.
        let steps = 30;
        for _ in 0..steps {
            accumulate_coverage(&mut rho, m.nodes(), &grid, &[src(0, c)], 1.0, &mut scratch);
        }
        for (p, &v) in m.nodes().iter().zip(rho.values()) {
            let expected = steps as f64 * a.eval((*p - c).norm());
            assert!((v - expected).abs() <= 1e-12 * expected.max(1e-300));
        }

        let mut one = ScalarField::zeros(m.node_count());
        let mut two = ScalarField::zeros(m.node_count());
        accumulate_coverage(&mut one, m.nodes(), &grid, &[src(0, c)], 0.5, &mut scratch);
        accumulate_coverage(&mut two, m.nodes(), &grid, &[src(0, c), src(1, c)], 0.5, &mut scratch);
        for (x, y) in one.values().iter().zip(two.values()) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn remaining_density_rules() {
        let mu0 = ScalarField::from_values(vec![2.0, 0.0, 1.0]);
        let rho = ScalarField::from_values(vec![std::f64::consts::LN_2, 5.0, 0.0]);
        let mu = remaining_density(&mu0, &rho).unwrap();
        assert!((mu.values()[0] - 1.0).abs() < 1e-15);
        assert_eq!(mu.values()[1], 0.0);
        assert_eq!(mu.values()[2], 1.0);
        assert!(remaining_density(&mu0, &ScalarField::zeros(2)).is_err());
    }

    #[test]
    fn coverage_measure_examples() {
        let m = unit_mesh(4);
        let q = Quadrature::new(&m);
        let mu0 = build_target_density_box(&m, &q, &Aabb::new(Vec3::splat(0.25), Vec3::splat(0.75))).unwrap();
        let zero = ScalarField::zeros(m.node_count());
        assert_eq!(covered_mass(&q, &mu0, &zero), 0.0);
        assert!(spatial_coverage(&q, &remaining_density(&mu0, &zero).unwrap()) < 1e-12);
        let rho = ScalarField::constant(m.node_count(), 4f64.ln());
        let mu = remaining_density(&mu0, &rho).unwrap();
        assert!((spatial_coverage(&q, &mu) - 0.75).abs() < 1e-12);
        assert!((covered_mass(&q, &mu0, &rho) - 0.75).abs() < 1e-12);
        let big = ScalarField::constant(m.node_count(), 800.0);
        assert!((spatial_coverage(&q, &remaining_density(&mu0, &big).unwrap()) - 1.0).abs() < 1e-15);
    }
}

//! Agent motion: potential ascent, collision avoidance and the blended
//! first-order motion law.

use crate::fields::GaussianAction;
use crate::geometry::{Domain, GeometryError};
use crate::scalar::Real;
use crate::vec3::Vec3;
use thiserror::Error;

/// Gradients below this norm leave the previous heading unchanged.
pub const GRADIENT_FLOOR: f64 = 1e-14;
/// Constraint slack accepted by the avoidance solver.
const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SwarmError {
    #[error("avoidance problem needs at least one nonzero constraint row")]
    EmptyProblem,
    #[error("agent {agent} left the flight domain at {position}")]
    LeftDomain { agent: usize, position: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState<T> {
    pub id: usize,
    pub position: Vec3<T>,
    pub speed: T,
    /// Last heading; unit length.
    pub direction: Vec3<T>,
    pub action: GaussianAction<T>,
}

/// Maximize `c . w` over unit `w` with `r . w >= 0` for every row `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct AvoidanceProblem<T> {
    rows: Vec<Vec3<T>>,
    objective: Vec3<T>,
}

impl<T: Real> AvoidanceProblem<T> {
    /// Rows are normalized; the objective is their sum. Zero rows are dropped.
    pub fn new(rows: impl IntoIterator<Item = Vec3<T>>) -> Result<Self, SwarmError> {
        let rows: Vec<Vec3<T>> = rows.into_iter().filter_map(|r| r.try_normalize(T::tiny())).collect();
        if rows.is_empty() {
            return Err(SwarmError::EmptyProblem);
        }
        let objective = rows.iter().fold(Vec3::zero(), |a, &r| a + r);
        Ok(Self { rows, objective })
    }

    pub fn with_objective(rows: impl IntoIterator<Item = Vec3<T>>, objective: Vec3<T>) -> Result<Self, SwarmError> {
        let mut p = Self::new(rows)?;
        p.objective = objective;
        Ok(p)
    }

    pub fn rows(&self) -> &[Vec3<T>] {
        &self.rows
    }

    pub fn objective(&self) -> Vec3<T> {
        self.objective
    }

    pub fn is_feasible(&self, w: Vec3<T>, tol: T) -> bool {
        self.rows.iter().all(|r| r.dot(w) >= -tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Avoidance<T> {
    Direction(Vec3<T>),
    Infeasible,
}

impl<T> Avoidance<T> {
    pub fn direction(&self) -> Option<&Vec3<T>> {
        match self {
            Avoidance::Direction(w) => Some(w),
            Avoidance::Infeasible => None,
        }
    }
}

/// Exact maximizer by enumerating the critical points of `c . w` on the
/// spherical polygon: the free optimum, the optimum on each boundary great
/// circle, and every pairwise vertex. A zero objective is reported infeasible.
pub fn solve_avoidance<T: Real>(problem: &AvoidanceProblem<T>) -> Avoidance<T> {
    let c = problem.objective;
    if !(c.norm() > T::tiny()) {
        return Avoidance::Infeasible;
    }
    let tol = T::lit(FEASIBILITY_TOL);
    let rows = &problem.rows;
    let mut best: Option<(T, Vec3<T>)> = None;
    let consider = |best: &mut Option<(T, Vec3<T>)>, v: Vec3<T>| {
        let Some(w) = v.try_normalize(T::lit(1e-9)) else { return };
        if !problem.is_feasible(w, tol) {
            return;
        }
        let value = c.dot(w);
        if best.map_or(true, |(b, _)| value > b) {
            *best = Some((value, w));
        }
    };
    consider(&mut best, c);
    for &r in rows {
        consider(&mut best, c - r * c.dot(r));
    }
    for (a, &ra) in rows.iter().enumerate() {
        for &rb in &rows[a + 1..] {
            let v = ra.cross(rb);
            consider(&mut best, v);
            consider(&mut best, -v);
        }
    }
    if best.is_none() {
        // Degenerate cones (e.g. opposite rows) where the objective is flat
        // along a feasible great circle.
        for &r in rows {
            let (e1, e2) = plane_basis(r);
            for v in [e1, -e1, e2, -e2] {
                consider(&mut best, v);
            }
        }
    }
    match best {
        Some((_, w)) => Avoidance::Direction(w),
        None => Avoidance::Infeasible,
    }
}

/// Orthonormal basis of the plane normal to unit `r`.
pub fn plane_basis<T: Real>(r: Vec3<T>) -> (Vec3<T>, Vec3<T>) {
    let helper = if r.x.abs() < T::lit(0.9) {
        Vec3::new(T::one(), T::zero(), T::zero())
    } else {
        Vec3::new(T::zero(), T::one(), T::zero())
    };
    let e1 = r.cross(helper).try_normalize(T::tiny()).unwrap_or(helper);
    (e1, r.cross(e1))
}

/// Unit ascent direction of `grad`, or `previous` when the gradient vanishes.
pub fn preferred_direction<T: Real>(grad: Vec3<T>, previous: Vec3<T>) -> Vec3<T> {
    let n = grad.norm();
    if n < T::lit(GRADIENT_FLOOR) {
        previous
    } else {
        grad / n
    }
}

/// Distances that drive avoidance for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Clearance<T> {
    /// Distance to the nearest obstacle (domain boundary or structure).
    pub obstacle: T,
    /// Unit direction away from that obstacle; zero when undefined.
    pub away: Vec3<T>,
    /// `(index, distance)` of the nearest other agent, if any.
    pub nearest: Option<(usize, T)>,
    /// Away directions of further obstacle features within `2 eps`
    /// (other walls in a corner, the structure next to a wall).
    pub walls: Vec<Vec3<T>>,
}

impl<T: Real> Clearance<T> {
    /// `min(d_b, d(i, j))` over all other agents `j`.
    pub fn min_distance(&self) -> T {
        self.nearest.map_or(self.obstacle, |(_, d)| d.min(self.obstacle))
    }

    pub fn nearest_neighbor(&self) -> T {
        self.nearest.map_or(T::infinity(), |(_, d)| d)
    }
}

/// Nearest-neighbor search over the fleet; ties go to the lower index.
pub fn nearest_neighbor<T: Real>(index: usize, positions: &[Vec3<T>]) -> Option<(usize, T)> {
    let p = positions[index];
    let mut best: Option<(usize, T)> = None;
    for (j, &q) in positions.iter().enumerate() {
        if j == index {
            continue;
        }
        let d = p.distance(q);
        if best.map_or(true, |(_, b)| d < b) {
            best = Some((j, d));
        }
    }
    best
}

/// Constraint rows for agent `index`: neighbors and the obstacle within
/// `2 eps`, plus the preferred direction.
pub fn avoidance_rows<T: Real>(
    index: usize,
    positions: &[Vec3<T>],
    clearance: &Clearance<T>,
    preferred: Vec3<T>,
    eps: T,
) -> Vec<Vec3<T>> {
    let reach = eps * T::lit(2.0);
    let p = positions[index];
    let mut rows: Vec<Vec3<T>> = positions
        .iter()
        .enumerate()
        .filter(|&(j, &q)| j != index && p.distance(q) < reach)
        .map(|(_, &q)| p - q)
        .collect();
    if clearance.obstacle < reach {
        rows.push(clearance.away);
    }
    rows.extend(clearance.walls.iter().copied());
    rows.push(preferred);
    rows
}

/// What an agent does this step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Motion<T> {
    Move(Vec3<T>),
    Hold,
}

/// The three-regime motion law: free flight beyond `2 eps`, pure avoidance
/// below `eps`, and a linear blend in between.
pub fn step_direction<T: Real>(preferred: Vec3<T>, avoidance: Option<&Avoidance<T>>, d: T, eps: T) -> Motion<T> {
    let two = T::lit(2.0);
    if d >= two * eps {
        return Motion::Move(preferred);
    }
    let w = match avoidance {
        Some(Avoidance::Direction(w)) => *w,
        _ => return Motion::Hold,
    };
    if d < eps {
        return Motion::Move(w);
    }
    let s = d / eps;
    let blend = w * (two - s) + preferred * (s - T::one());
    Motion::Move(blend.try_normalize(T::tiny()).unwrap_or(w))
}

/// Full per-agent decision for one step from a fleet snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision<T> {
    pub preferred: Vec3<T>,
    pub avoidance: Option<Avoidance<T>>,
    pub motion: Motion<T>,
}

pub fn decide<T: Real>(
    index: usize,
    positions: &[Vec3<T>],
    clearance: &Clearance<T>,
    preferred: Vec3<T>,
    eps: T,
) -> Decision<T> {
    let d = clearance.min_distance();
    let avoidance = if d < eps * T::lit(2.0) {
        let rows = avoidance_rows(index, positions, clearance, preferred, eps);
        Some(match AvoidanceProblem::new(rows) {
            Ok(problem) => solve_avoidance(&problem),
            Err(_) => Avoidance::Infeasible,
        })
    } else {
        None
    };
    let motion = step_direction(preferred, avoidance.as_ref(), d, eps);
    Decision { preferred, avoidance, motion }
}

/// Moves the agent by `speed * dt` along the motion; the new position must lie in the domain.
pub fn advance<T: Real>(
    agent: &AgentState<T>,
    motion: Motion<T>,
    dt: T,
    domain: &Domain<T>,
) -> Result<AgentState<T>, SwarmError> {
    let mut next = *agent;
    if let Motion::Move(dir) = motion {
        next.position = agent.position + dir * (agent.speed * dt);
        next.direction = dir;
    }
    if !domain.contains(next.position) {
        return Err(SwarmError::LeftDomain {
            agent: agent.id,
            position: format!("({}, {}, {})", next.position.x, next.position.y, next.position.z),
        });
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample<T> {
    pub t: T,
    pub position: Vec3<T>,
    pub direction: Vec3<T>,
    /// Camera axis; zero without a structure.
    pub camera: Vec3<T>,
    pub obstacle_distance: T,
    pub neighbor_distance: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub agent_id: usize,
    pub samples: Vec<TrajectorySample<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(agent_id: usize) -> Self {
        Self { agent_id, samples: Vec::new() }
    }

    pub fn push(&mut self, s: TrajectorySample<T>) {
        self.samples.push(s);
    }

    /// Largest displacement between consecutive samples.
    pub fn max_step(&self) -> T {
        self.samples
            .windows(2)
            .map(|w| w[0].position.distance(w[1].position))
            .fold(T::zero(), T::max)
    }
}

/// Brute-force reference for the avoidance optimum.
pub mod oracle {
    use super::*;
    use rand::Rng;

    /// Best feasible objective over `area` uniform sphere samples plus
    /// `circle` evenly spaced samples on each constraint great circle
    /// (where vertex and edge optima live). `None` when no sample is feasible.
    pub fn sphere_sweep<R: Rng>(
        problem: &AvoidanceProblem<f64>,
        area: usize,
        circle: usize,
        tol: f64,
        rng: &mut R,
    ) -> Option<f64> {
        let c = problem.objective();
        let mut best: Option<f64> = None;
        let mut take = |w: Vec3<f64>| {
            if problem.is_feasible(w, tol) {
                let v = c.dot(w);
                if best.map_or(true, |b| v > b) {
                    best = Some(v);
                }
            }
        };
        for _ in 0..area {
            take(uniform_unit(rng));
        }
        for &r in problem.rows() {
            let (e1, e2) = plane_basis(r);
            for k in 0..circle {
                let t = std::f64::consts::TAU * k as f64 / circle as f64;
                take(e1 * t.cos() + e2 * t.sin());
            }
        }
        best
    }

    /// Uniform point on the unit sphere by rejection from the cube.
    pub fn uniform_unit<R: Rng>(rng: &mut R) -> Vec3<f64> {
        loop {
            let v: Vec3<f64> = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n2: f64 = v.norm_squared();
            if n2 > 1e-6 && n2 <= 1.0 {
                return v / n2.sqrt();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    #[test]
    fn spec_examples() {
        // Neighbor at +x (row -x), preferred +y.
        let p = AvoidanceProblem::with_objective([v(-1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)], v(-1.0, 1.0, 0.0)).unwrap();
        let w = *solve_avoidance(&p).direction().unwrap();
        assert!((w - v(-1.0, 1.0, 0.0) / 2f64.sqrt()).norm() < 1e-12);

        let r = v(0.3, -0.4, 0.5).try_normalize(0.0).unwrap();
        let p = AvoidanceProblem::new([r]).unwrap();
        assert!((*solve_avoidance(&p).direction().unwrap() - r).norm() < 1e-12);

        let axes = [v(1.0, 0.0, 0.0), v(-1.0, 0.0, 0.0), v(0.0, 1.0, 0.0), v(0.0, -1.0, 0.0), v(0.0, 0.0, 1.0), v(0.0, 0.0, -1.0)];
        let p = AvoidanceProblem::with_objective(axes, v(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(solve_avoidance(&p), Avoidance::Infeasible);
        let p = AvoidanceProblem::new(axes).unwrap();
        assert_eq!(solve_avoidance(&p), Avoidance::Infeasible, "zero objective");
        assert!(matches!(AvoidanceProblem::<f64>::new([Vec3::zero()]), Err(SwarmError::EmptyProblem)));
    }

    #[test]
    fn flat_great_circle() {
        // Opposite rows leave the x = 0 circle, on which c = e_x is flat.
        let p = AvoidanceProblem::with_objective([v(1.0, 0.0, 0.0), v(-1.0, 0.0, 0.0)], v(1.0, 0.0, 0.0)).unwrap();
        let w = *solve_avoidance(&p).direction().unwrap();
        assert!(w.x.abs() < 1e-12 && (w.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn motion_law_cases() {
        let u = v(0.0, 1.0, 0.0);
        let w = v(1.0, 0.0, 0.0);
        let a = Avoidance::Direction(w);
        assert_eq!(step_direction(u, Some(&a), 0.3, 0.1), Motion::Move(u));
        assert_eq!(step_direction(u, Some(&a), 0.1, 0.1), Motion::Move(w));
        assert_eq!(step_direction(u, Some(&a), 0.05, 0.1), Motion::Move(w));
        let Motion::Move(m) = step_direction(u, Some(&a), 0.15, 0.1) else { panic!() };
        assert!((m - (w * 0.5 + u * 0.5).try_normalize(0.0).unwrap()).norm() < 1e-12);
        assert_eq!(step_direction(u, Some(&Avoidance::Infeasible), 0.15, 0.1), Motion::Hold);
        // Continuity at 2 eps.
        let Motion::Move(near) = step_direction(u, Some(&a), 0.2 - 1e-12, 0.1) else { panic!() };
        assert!((near - u).norm() < 1e-9);
    }

    #[test]
    fn preferred_direction_rules() {
        assert_eq!(preferred_direction(v(0.0, 0.0, 5.0), v(1.0, 0.0, 0.0)), v(0.0, 0.0, 1.0));
        assert_eq!(preferred_direction(v(0.0, 0.0, 1e-15), v(1.0, 0.0, 0.0)), v(1.0, 0.0, 0.0));
    }

    #[test]
    fn neighbor_distances() {
        let pos = vec![v(0.0, 0.0, 0.0), v(3.0, 0.0, 0.0), v(0.0, 5.0, 0.0)];
        assert_eq!(nearest_neighbor(0, &pos), Some((1, 3.0)));
        assert_eq!(nearest_neighbor(0, &pos[..1]), None);
        let c = Clearance { obstacle: 2.0, away: v(1.0, 0.0, 0.0), nearest: None, walls: vec![] };
        assert_eq!(c.min_distance(), 2.0);
    }

    #[test]
    fn decision_holds_when_boxed_in() {
        let eps = 1.0;
        let pos = vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(-1.0, 0.0, 0.0), v(0.0, 1.0, 0.0), v(0.0, -1.0, 0.0), v(0.0, 0.0, 1.0)];
        let clearance = Clearance { obstacle: 0.5, away: v(0.0, 0.0, 1.0), nearest: nearest_neighbor(0, &pos), walls: vec![] };
        let d = decide(0, &pos, &clearance, v(0.0, 0.0, 1.0), eps);
        assert_eq!(d.motion, Motion::Hold);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn solver_matches_sweep(seed in any::<u64>(), k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<_> = (0..k).map(|_| oracle::uniform_unit(&mut rng)).collect();
            let p = AvoidanceProblem::new(rows).unwrap();
            let sweep = oracle::sphere_sweep(&p, 20_000, 4_000, 1e-8, &mut rng);
            match solve_avoidance(&p) {
                Avoidance::Direction(w) => {
                    prop_assert!((w.norm() - 1.0).abs() < 1e-10);
                    prop_assert!(p.is_feasible(w, 1e-8));
                    if let Some(b) = sweep {
                        prop_assert!(p.objective().dot(w) >= b - 1e-6);
                        prop_assert!(p.objective().dot(w) - b < 1e-2);
                    }
                }
                Avoidance::Infeasible => prop_assert!(sweep.is_none()),
            }
        }

        #[test]
        fn blend_is_unit_and_between(d in 0.0f64..0.3) {
            let u = v(0.0, 1.0, 0.0);
            let w = v(0.6, 0.8, 0.0);
            if let Motion::Move(m) = step_direction(u, Some(&Avoidance::Direction(w)), d, 0.1) {
                prop_assert!((m.norm() - 1.0).abs() < 1e-12);
                prop_assert!(m.dot(u) >= w.dot(u) - 1e-12);
            }
        }
    }
}

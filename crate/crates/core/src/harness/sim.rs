//! The simulation loop: remaining density -> potential -> directions ->
//! motion -> coverage -> camera views.

use super::config::{ConfigError, Scenario, TargetSpec};
use crate::fields::{
    accumulate_coverage, build_target_density_box, build_target_density_inspection, covered_mass, remaining_density,
    ActionSource, CoverageScratch, FieldError, GaussianAction, Quadrature, ScalarField,
};
use crate::geometry::{Aabb, Domain, GeometryError, NodeGrid, Structure, SurfaceMesh, TetMesh};
use crate::inspection::{camera_orientation, visible_nodes, CameraModel, InspectionError, ObservationLedger};
use crate::pde::{HelmholtzSystem, PdeError, PotentialField};
use crate::scalar::Real;
use crate::swarm::{
    advance, decide, nearest_neighbor, preferred_direction, AgentState, Clearance, SwarmError, Trajectory,
    TrajectorySample,
};
use crate::vec3::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::{Duration, Instant};
use thiserror::Error;

const SPAWN_ATTEMPTS: usize = 100_000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error("step {step}: {source}")]
    Swarm { step: usize, source: SwarmError },
    #[error("step {step}: {source}")]
    Inspection { step: usize, source: InspectionError },
    #[error("could not place agent {agent} in the spawn box after {attempts} attempts")]
    Spawn { agent: usize, attempts: usize },
    #[error("start position of agent {agent} is invalid: {reason}")]
    StartPosition { agent: usize, reason: String },
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("{0}")]
    Format(String),
}

/// One row of the metrics series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord<T> {
    pub step: usize,
    pub t: T,
    pub eta_v: T,
    pub eta_a: T,
    /// Smallest agent-agent distance seen during the step (over sub-steps).
    pub min_agent_distance: T,
    /// Smallest agent-obstacle distance seen during the step.
    pub min_obstacle_distance: T,
    /// Fleet mean of the distance to the structure; NaN without one.
    pub mean_structure_distance: T,
}

/// Wall-clock time per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub initialization: Duration,
    pub factorization: Duration,
    pub potential: Duration,
    pub avoidance: Duration,
    pub coverage: Duration,
    pub inspection: Duration,
    pub bookkeeping: Duration,
    /// Sum of whole-step wall times.
    pub steps: Duration,
}

impl Timings {
    pub fn phase_sum(&self) -> Duration {
        self.potential + self.avoidance + self.coverage + self.inspection + self.bookkeeping
    }
}

pub struct Simulation<T: Real> {
    scenario: Scenario,
    domain: Domain<T>,
    structure: Option<Structure<T>>,
    quad: Quadrature<T>,
    grid: NodeGrid<T>,
    target: ScalarField<T>,
    coverage: ScalarField<T>,
    system: HelmholtzSystem<T>,
    agents: Vec<AgentState<T>>,
    clearances: Vec<Clearance<T>>,
    camera: Option<CameraModel<T>>,
    ledger: Option<ObservationLedger>,
    trajectories: Vec<Trajectory<T>>,
    metrics: Vec<MetricsRecord<T>>,
    potential: Option<PotentialField<T>>,
    scratch: CoverageScratch<T>,
    eps: T,
    bounds: Aabb<T>,
    step: usize,
    timings: Timings,
}

/// Loads the structure surface named by the scenario, if any.
pub fn load_structure<T: Real>(scenario: &Scenario) -> Result<Option<Structure<T>>, RunError> {
    match &scenario.structure {
        Some(s) => Ok(Some(Structure::new(SurfaceMesh::load(scenario.resolve(&s.file))?))),
        None => Ok(None),
    }
}

/// Builds (or loads) the flight-domain tet mesh.
pub fn build_domain_mesh<T: Real>(scenario: &Scenario, structure: Option<&Structure<T>>) -> Result<TetMesh<T>, RunError> {
    let d = &scenario.domain;
    if let Some(file) = &d.mesh {
        return Ok(TetMesh::load_msh(scenario.resolve(file))?);
    }
    let (lo, hi, res) = (d.min.unwrap_or_default(), d.max.unwrap_or_default(), d.resolution.unwrap_or_default());
    let extent = Aabb::new(v3(lo), v3(hi));
    let carve = if d.carve_structure { structure.map(|s| s.mesh()) } else { None };
    Ok(TetMesh::build_box(extent, res, carve)?)
}

impl<T: Real> Simulation<T> {
    pub fn new(scenario: Scenario) -> Result<Self, RunError> {
        scenario.validate()?;
        let start = Instant::now();
        let structure = load_structure::<T>(&scenario)?;
        let mesh = build_domain_mesh(&scenario, structure.as_ref())?;
        let quad = Quadrature::new(&mesh);
        let fleet = &scenario.fleet;
        let action = GaussianAction::new(T::lit(fleet.intensity), T::lit(fleet.range))?;
        let grid = NodeGrid::new(mesh.nodes(), action.cutoff());
        let target = match &scenario.target {
            TargetSpec::Box { min, max } => {
                build_target_density_box(&mesh, &quad, &Aabb::new(v3(*min), v3(*max)))?
            }
            TargetSpec::Inspection { distance, broadness } => {
                let s = structure.as_ref().expect("validated: inspection target has a structure");
                let ds: Vec<T> = mesh.nodes().par_iter().map(|&p| s.distance(p).distance).collect();
                build_target_density_inspection(&quad, &ScalarField::from_values(ds), T::lit(*distance), T::lit(*broadness))?
            }
        };
        let factor_start = Instant::now();
        let system = HelmholtzSystem::assemble(&mesh, T::lit(scenario.conduction))?;
        let factorization = factor_start.elapsed();
        let domain = Domain::new(mesh);
        let camera = match &scenario.camera {
            Some(c) => Some(
                CameraModel::new(T::lit(c.height), T::lit(c.diameter), c.trigger)
                    .map_err(|source| RunError::Inspection { step: 0, source })?,
            ),
            None => None,
        };
        let ledger = structure.as_ref().filter(|_| camera.is_some()).map(|s| ObservationLedger::new(s.mesh().node_count()));
        let coverage = ScalarField::zeros(domain.mesh().node_count());

        let domain_bounds = domain.mesh().bounds();
        let mut sim = Self {
            domain,
            structure,
            quad,
            grid,
            target,
            coverage,
            system,
            agents: Vec::new(),
            clearances: Vec::new(),
            camera,
            ledger,
            trajectories: Vec::new(),
            metrics: Vec::new(),
            potential: None,
            scratch: CoverageScratch::default(),
            eps: T::lit(scenario.safety_distance),
            bounds: domain_bounds,
            step: 0,
            timings: Timings::default(),
            scenario,
        };
        sim.agents = sim.place_agents(action)?;
        sim.clearances = sim.clearances_of(&sim.agents).map_err(|source| RunError::Swarm { step: 0, source })?;
        sim.trajectories = sim.agents.iter().map(|a| Trajectory::new(a.id)).collect();
        sim.record(sim.clearances_min())?;
        sim.timings = Timings {
            initialization: start.elapsed(),
            factorization,
            ..Timings::default()
        };
        Ok(sim)
    }

    fn place_agents(&self, action: GaussianAction<T>) -> Result<Vec<AgentState<T>>, RunError> {
        let fleet = &self.scenario.fleet;
        let eps2 = T::lit(2.0 * self.scenario.safety_distance);
        let make = |id: usize, p: Vec3<T>| AgentState {
            id,
            position: p,
            speed: T::lit(fleet.speed),
            direction: Vec3::new(T::one(), T::zero(), T::zero()),
            action,
        };
        if let Some(ps) = &fleet.positions {
            let agents: Vec<_> = ps.iter().enumerate().map(|(i, &p)| make(i, v3(p))).collect();
            for a in &agents {
                if !self.domain.contains(a.position) || self.structure.as_ref().is_some_and(|s| s.contains(a.position)) {
                    return Err(RunError::StartPosition { agent: a.id, reason: "outside the flight domain".into() });
                }
            }
            return Ok(agents);
        }
        let (lo, hi) = (fleet.spawn_min.unwrap_or_default(), fleet.spawn_max.unwrap_or_default());
        let mut rng = ChaCha8Rng::seed_from_u64(self.scenario.seed);
        let mut agents: Vec<AgentState<T>> = Vec::with_capacity(fleet.count);
        for id in 0..fleet.count {
            let mut placed = false;
            for _ in 0..SPAWN_ATTEMPTS {
                let p = Vec3::new(
                    T::lit(rng.gen_range(lo[0]..hi[0])),
                    T::lit(rng.gen_range(lo[1]..hi[1])),
                    T::lit(rng.gen_range(lo[2]..hi[2])),
                );
                if !self.domain.contains(p) || agents.iter().any(|a| a.position.distance(p) < eps2) {
                    continue;
                }
                if self.structure.as_ref().is_some_and(|s| s.contains(p)) {
                    continue;
                }
                match self.obstacle(p) {
                    Ok((d, _, _)) if d >= eps2 => {}
                    _ => continue,
                }
                agents.push(make(id, p));
                placed = true;
                break;
            }
            if !placed {
                return Err(RunError::Spawn { agent: id, attempts: SPAWN_ATTEMPTS });
            }
        }
        Ok(agents)
    }

    /// Nearest obstacle `(distance, away)` plus the away directions of every
    /// other obstacle feature closer than `2 eps`.
    fn obstacle(&self, p: Vec3<T>) -> Result<(T, Vec3<T>, Vec<Vec3<T>>), SwarmError> {
        let reach = self.eps * T::lit(2.0);
        let b = self.domain.distance_to_boundary(p)?;
        let mut found = vec![(b.distance, b.direction)];
        if let Some(s) = &self.structure {
            let q = s.distance(p);
            found.push((q.distance, -q.direction));
        }
        // The nearest-face query sees one wall at a time; in a corner the
        // others must constrain the avoidance direction as well.
        for axis in 0..3 {
            for (gap, sign) in [(p[axis] - self.bounds.min[axis], T::one()), (self.bounds.max[axis] - p[axis], -T::one())] {
                if gap < reach {
                    let mut a = [T::zero(); 3];
                    a[axis] = sign;
                    found.push((gap, Vec3::from_array(a)));
                }
            }
        }
        let (mut obstacle, mut away) = found[0];
        for &(d, dir) in &found[1..] {
            if d < obstacle {
                obstacle = d;
                away = dir;
            }
        }
        let walls = found
            .into_iter()
            .filter(|&(d, dir)| d < reach && dir != away && dir != Vec3::zero())
            .map(|(_, dir)| dir)
            .collect();
        Ok((obstacle, away, walls))
    }

    fn clearances_of(&self, agents: &[AgentState<T>]) -> Result<Vec<Clearance<T>>, SwarmError> {
        let positions: Vec<Vec3<T>> = agents.iter().map(|a| a.position).collect();
        (0..agents.len())
            .into_par_iter()
            .map(|i| {
                let (obstacle, away, walls) = self.obstacle(positions[i])?;
                Ok(Clearance { obstacle, away, nearest: nearest_neighbor(i, &positions), walls })
            })
            .collect()
    }

    fn clearances_min(&self) -> (T, T) {
        self.clearances.iter().fold((T::infinity(), T::infinity()), |(a, o), c| {
            (a.min(c.nearest_neighbor()), o.min(c.obstacle))
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn structure(&self) -> Option<&Structure<T>> {
        self.structure.as_ref()
    }

    pub fn agents(&self) -> &[AgentState<T>] {
        &self.agents
    }

    pub fn target(&self) -> &ScalarField<T> {
        &self.target
    }

    pub fn coverage(&self) -> &ScalarField<T> {
        &self.coverage
    }

    pub fn quadrature(&self) -> &Quadrature<T> {
        &self.quad
    }

    pub fn system(&self) -> &HelmholtzSystem<T> {
        &self.system
    }

    /// Potential of the most recent step.
    pub fn potential(&self) -> Option<&PotentialField<T>> {
        self.potential.as_ref()
    }

    pub fn ledger(&self) -> Option<&ObservationLedger> {
        self.ledger.as_ref()
    }

    pub fn metrics(&self) -> &[MetricsRecord<T>] {
        &self.metrics
    }

    pub fn trajectories(&self) -> &[Trajectory<T>] {
        &self.trajectories
    }

    pub fn timings(&self) -> &Timings {
        &self.timings
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.scenario.steps()
    }

    pub fn remaining(&self) -> Result<ScalarField<T>, FieldError> {
        remaining_density(&self.target, &self.coverage)
    }

    /// Advances one planning step.
    pub fn step(&mut self) -> Result<(), RunError> {
        let step_start = Instant::now();
        self.step += 1;
        let step = self.step;

        let t0 = Instant::now();
        let mu = self.remaining()?;
        let psi = self.system.solve(&mu)?;
        self.timings.potential += t0.elapsed();

        let m = self.scenario.motion_substeps;
        let sub_dt = T::lit(self.scenario.substep_dt());
        let eps = T::lit(self.scenario.safety_distance);
        let (mut min_agent, mut min_obstacle) = (T::infinity(), T::infinity());
        for _ in 0..m {
            let t1 = Instant::now();
            let positions: Vec<Vec3<T>> = self.agents.iter().map(|a| a.position).collect();
            let next: Result<Vec<AgentState<T>>, SwarmError> = (0..self.agents.len())
                .into_par_iter()
                .map(|i| {
                    let agent = &self.agents[i];
                    let grad = psi.grad_at(&self.domain, agent.position)?;
                    let u = preferred_direction(grad, agent.direction);
                    let decision = decide(i, &positions, &self.clearances[i], u, eps);
                    advance(agent, decision.motion, sub_dt, &self.domain)
                })
                .collect();
            self.agents = next.map_err(|source| RunError::Swarm { step, source })?;
            self.clearances = self.clearances_of(&self.agents).map_err(|source| RunError::Swarm { step, source })?;
            let (a, o) = self.clearances_min();
            min_agent = min_agent.min(a);
            min_obstacle = min_obstacle.min(o);
            self.timings.avoidance += t1.elapsed();

            let t2 = Instant::now();
            let sources: Vec<ActionSource<T>> =
                self.agents.iter().map(|a| ActionSource { id: a.id, position: a.position, action: a.action }).collect();
            accumulate_coverage(&mut self.coverage, self.domain.mesh().nodes(), &self.grid, &sources, sub_dt, &mut self.scratch);
            self.timings.coverage += t2.elapsed();
        }
        self.potential = Some(psi);
        self.record((min_agent, min_obstacle))?;
        self.timings.steps += step_start.elapsed();
        Ok(())
    }

    /// Camera views (when due), metrics and trajectory samples for the current state.
    fn record(&mut self, (min_agent, min_obstacle): (T, T)) -> Result<(), RunError> {
        let step = self.step;
        let t3 = Instant::now();
        let mut cameras = vec![Vec3::zero(); self.agents.len()];
        let mut structure_distance = T::nan();
        if let Some(s) = &self.structure {
            let mut sum = T::zero();
            for (a, z) in self.agents.iter().zip(cameras.iter_mut()) {
                *z = camera_orientation(a.position, s).map_err(|source| RunError::Inspection { step, source })?;
                sum = sum + s.distance(a.position).distance;
            }
            structure_distance = sum / T::from_count(self.agents.len());
            if let (Some(cam), Some(ledger)) = (&self.camera, &mut self.ledger) {
                if cam.fires_at(step) {
                    for (a, &z) in self.agents.iter().zip(&cameras) {
                        let seen = visible_nodes(cam, a.position, z, s);
                        ledger.add(&seen);
                    }
                }
            }
        }
        let eta_a = self.ledger.as_ref().map_or(T::zero(), |l| l.coverage());
        self.timings.inspection += t3.elapsed();

        let t4 = Instant::now();
        let eta_v = covered_mass(&self.quad, &self.target, &self.coverage);
        self.timings.coverage += t4.elapsed();

        let t5 = Instant::now();
        let t = T::lit(self.scenario.dt) * T::from_count(step);
        self.metrics.push(MetricsRecord {
            step,
            t,
            eta_v,
            eta_a,
            min_agent_distance: min_agent,
            min_obstacle_distance: min_obstacle,
            mean_structure_distance: structure_distance,
        });
        for ((traj, a), (c, &z)) in self.trajectories.iter_mut().zip(&self.agents).zip(self.clearances.iter().zip(&cameras)) {
            traj.push(TrajectorySample {
                t,
                position: a.position,
                direction: a.direction,
                camera: z,
                obstacle_distance: c.obstacle,
                neighbor_distance: c.nearest_neighbor(),
            });
        }
        self.timings.bookkeeping += t5.elapsed();
        Ok(())
    }
}

fn v3<T: Real>(a: [f64; 3]) -> Vec3<T> {
    Vec3::from_f64(a[0], a[1], a[2])
}

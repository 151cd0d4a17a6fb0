//! Scenario loading, the run driver, trajectory re-assessment and artifacts.

mod config;
mod output;
mod sim;

pub use config::{CameraSpec, ConfigError, DomainSpec, FleetSpec, OutputSpec, Scenario, StructureSpec, TargetSpec};
pub use output::{
    metrics_csv, parse_trajectories, trajectories_csv, vtk_domain, vtk_surface, vtk_trajectories, TrajectoryRow,
    METRICS_HEADER, TRAJECTORY_HEADER,
};
pub use sim::{build_domain_mesh, load_structure, MetricsRecord, RunError, Simulation, Timings};

use crate::inspection::{camera_orientation, visible_nodes, CameraModel, ObservationLedger};
use crate::scalar::Real;
use crate::swarm::Trajectory;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Where artifacts go; nothing is written when `None`.
    pub output_dir: Option<PathBuf>,
    /// Overrides the scenario's snapshot interval.
    pub snapshot_every: Option<usize>,
    /// Print a progress line every this many steps (0 = silent).
    pub progress_every: usize,
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunReport<T> {
    pub name: String,
    pub steps: usize,
    pub node_count: usize,
    pub cell_count: usize,
    pub factor_nnz: usize,
    pub metrics: Vec<MetricsRecord<T>>,
    pub trajectories: Vec<Trajectory<T>>,
    /// Per structure node observation counts.
    pub counts: Option<Vec<u32>>,
    pub timings: Timings,
}

impl<T: Real> RunReport<T> {
    pub fn final_metrics(&self) -> &MetricsRecord<T> {
        self.metrics.last().expect("a run always has the t = 0 record")
    }

    /// Minimum over the run (t > 0 and the initial placement).
    pub fn min_agent_distance(&self) -> T {
        self.metrics.iter().map(|m| m.min_agent_distance).fold(T::infinity(), T::min)
    }

    pub fn min_obstacle_distance(&self) -> T {
        self.metrics.iter().map(|m| m.min_obstacle_distance).fold(T::infinity(), T::min)
    }

    /// Time average of the fleet-mean structure distance over steps `>= 1`.
    pub fn mean_structure_distance(&self) -> T {
        let v: Vec<T> = self.metrics.iter().skip(1).map(|m| m.mean_structure_distance).collect();
        if v.is_empty() {
            return T::nan();
        }
        v.iter().copied().sum::<T>() / T::from_count(v.len())
    }

    pub fn text(&self) -> String {
        let f = self.final_metrics();
        let mut out = String::new();
        let _ = writeln!(out, "scenario         {}", self.name);
        let _ = writeln!(out, "steps            {}", self.steps);
        let _ = writeln!(out, "domain nodes     {}", self.node_count);
        let _ = writeln!(out, "domain cells     {}", self.cell_count);
        let _ = writeln!(out, "factor nonzeros  {}", self.factor_nnz);
        let _ = writeln!(out, "final t          {}", f.t);
        let _ = writeln!(out, "final eta_v      {}", f.eta_v);
        let _ = writeln!(out, "final eta_a      {}", f.eta_a);
        let _ = writeln!(out, "min agent dist   {}", self.min_agent_distance());
        let _ = writeln!(out, "min obstacle     {}", self.min_obstacle_distance());
        let _ = writeln!(out, "mean structure   {}", self.mean_structure_distance());
        out.push('\n');
        out.push_str(&output::timings_table(&self.timings));
        out
    }
}

fn ensure_dir(dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
        context: format!("creating {}", dir.display()),
        source,
    })
}

fn write_snapshot<T: Real>(sim: &Simulation<T>, dir: &Path) -> Result<(), RunError> {
    let snaps = dir.join("snapshots");
    ensure_dir(&snaps)?;
    let mu = sim.remaining()?;
    let mut fields = vec![("mu0", sim.target()), ("rho", sim.coverage()), ("mu", &mu)];
    if let Some(p) = sim.potential() {
        fields.push(("psi", p.field()));
    }
    let text = output::vtk_domain(sim.domain().mesh(), &fields);
    output::write_file(&snaps.join(format!("step_{:06}.vtk", sim.step_index())), &text)
}

/// Runs a scenario to completion, writing artifacts when an output directory is given.
pub fn run<T: Real>(scenario: Scenario, options: &RunOptions) -> Result<RunReport<T>, RunError> {
    let snapshot_every = options.snapshot_every.unwrap_or(scenario.output.snapshot_every);
    let mut sim = Simulation::<T>::new(scenario)?;
    if let Some(dir) = &options.output_dir {
        ensure_dir(dir)?;
        if snapshot_every > 0 {
            write_snapshot(&sim, dir)?;
        }
    }
    let total = sim.scenario().steps();
    while !sim.is_finished() {
        sim.step()?;
        let k = sim.step_index();
        if options.progress_every > 0 && (k % options.progress_every == 0 || k == total) {
            let m = sim.metrics().last().expect("recorded");
            eprintln!("step {k}/{total}  t={}  eta_v={}  eta_a={}", m.t, m.eta_v, m.eta_a);
        }
        if let Some(dir) = &options.output_dir {
            if snapshot_every > 0 && (k % snapshot_every == 0 || k == total) {
                write_snapshot(&sim, dir)?;
            }
        }
    }
    let report = RunReport {
        name: sim.scenario().name.clone(),
        steps: total,
        node_count: sim.domain().mesh().node_count(),
        cell_count: sim.domain().mesh().cell_count(),
        factor_nnz: sim.system().factor_nnz(),
        metrics: sim.metrics().to_vec(),
        trajectories: sim.trajectories().to_vec(),
        counts: sim.ledger().map(|l| l.counts().to_vec()),
        timings: *sim.timings(),
    };
    if let Some(dir) = &options.output_dir {
        output::write_file(&dir.join("metrics.csv"), &metrics_csv(&report.metrics))?;
        output::write_file(&dir.join("trajectories.csv"), &trajectories_csv(&report.trajectories))?;
        output::write_file(&dir.join("trajectories.vtk"), &vtk_trajectories(&report.trajectories))?;
        if let Some(s) = sim.structure() {
            output::write_file(&dir.join("structure.vtk"), &vtk_surface(s.mesh(), report.counts.as_deref()))?;
        }
        output::write_file(&dir.join("report.txt"), &report.text())?;
    }
    Ok(report)
}

/// Re-scores a trajectory with the scenario's camera and structure.
///
/// Rows at `t = step * dt` fire the camera on the same steps as a run; the
/// axis is recomputed from the position.
pub fn assess<T: Real + FromStr>(scenario: &Scenario, trajectory_csv: &str) -> Result<ObservationLedger, RunError> {
    let structure = load_structure::<T>(scenario)?
        .ok_or_else(|| RunError::Format("assessment needs a structure in the scenario".into()))?;
    let cam = scenario
        .camera
        .as_ref()
        .ok_or_else(|| RunError::Format("assessment needs a camera in the scenario".into()))?;
    let camera = CameraModel::new(T::lit(cam.height), T::lit(cam.diameter), cam.trigger)
        .map_err(|source| RunError::Inspection { step: 0, source })?;
    let mut rows = parse_trajectories::<T>(trajectory_csv)?;
    let dt = T::lit(scenario.dt);
    let step_of = |t: T| (t / dt).round().to_f64_lossy() as usize;
    rows.sort_by(|a, b| step_of(a.t).cmp(&step_of(b.t)).then(a.agent_id.cmp(&b.agent_id)));
    let mut ledger = ObservationLedger::new(structure.mesh().node_count());
    for r in rows {
        let step = step_of(r.t);
        if !camera.fires_at(step) {
            continue;
        }
        let z = camera_orientation(r.position, &structure).map_err(|source| RunError::Inspection { step, source })?;
        ledger.add(&visible_nodes(&camera, r.position, z, &structure));
    }
    Ok(ledger)
}

/// Validated parameters and derived quantities, for `info`.
pub fn describe(scenario: &Scenario) -> Result<String, RunError> {
    let structure = load_structure::<f64>(scenario)?;
    let mesh = build_domain_mesh::<f64>(scenario, structure.as_ref())?;
    let mut out = String::new();
    let s = scenario;
    let _ = writeln!(out, "scenario              {}", s.name);
    let _ = writeln!(out, "domain nodes          {}", mesh.node_count());
    let _ = writeln!(out, "domain cells          {}", mesh.cell_count());
    let _ = writeln!(out, "domain volume         {}", mesh.volume());
    let _ = writeln!(out, "mean edge length      {}", mesh.mean_edge_length());
    if let Some(st) = &structure {
        let _ = writeln!(out, "structure nodes       {}", st.mesh().node_count());
        let _ = writeln!(out, "structure faces       {}", st.mesh().face_count());
        let _ = writeln!(out, "structure area        {}", st.mesh().area());
    }
    match &s.target {
        TargetSpec::Box { min, max } => {
            let _ = writeln!(out, "target                box {min:?} .. {max:?}");
        }
        TargetSpec::Inspection { distance, broadness } => {
            let _ = writeln!(out, "target                inspection d_m = {distance}, d_sigma = {broadness}");
        }
    }
    let f = &s.fleet;
    let _ = writeln!(out, "agents                {}", f.count);
    let _ = writeln!(out, "speed                 {}", f.speed);
    let _ = writeln!(out, "intensity / range     {} / {}", f.intensity, f.range);
    let _ = writeln!(out, "safety distance       {}", s.safety_distance);
    let _ = writeln!(out, "safety bound          {} (v dt / substeps + M)", s.safety_bound());
    let _ = writeln!(out, "pairwise bound        {} (2 v dt / substeps + M)", s.pairwise_safety_bound());
    let _ = writeln!(out, "motion substeps       {}", s.motion_substeps);
    let _ = writeln!(out, "conduction k          {}", s.conduction);
    let _ = writeln!(out, "dt / duration / steps {} / {} / {}", s.dt, s.duration, s.steps());
    if let Some(c) = &s.camera {
        let _ = writeln!(out, "camera C_H / C_D      {} / {} (every {} steps)", c.height, c.diameter, c.trigger);
    }
    let _ = writeln!(out, "seed                  {}", s.seed);
    Ok(out)
}

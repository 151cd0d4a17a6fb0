//! Run artifacts: CSV series, legacy VTK files and the text report.

use super::sim::{MetricsRecord, RunError, Timings};
use crate::fields::ScalarField;
use crate::geometry::{SurfaceMesh, TetMesh};
use crate::scalar::Real;
use crate::swarm::Trajectory;
use crate::vec3::Vec3;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

pub const METRICS_HEADER: &str = "step,t,eta_v,eta_a,min_agent_distance,min_obstacle_distance,mean_structure_distance";
pub const TRAJECTORY_HEADER: &str = "agent_id,t,x,y,z,ux,uy,uz,zx,zy,zz,d_b,d_min_neighbor";

pub fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents).map_err(|source| RunError::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}

pub fn metrics_csv<T: Real>(metrics: &[MetricsRecord<T>]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in metrics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            m.step, m.t, m.eta_v, m.eta_a, m.min_agent_distance, m.min_obstacle_distance, m.mean_structure_distance
        );
    }
    out
}

/// Rows ordered by time, then agent id. Values use shortest round-trip formatting.
pub fn trajectories_csv<T: Real>(trajectories: &[Trajectory<T>]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    let samples = trajectories.iter().map(|t| t.samples.len()).max().unwrap_or(0);
    for k in 0..samples {
        for tr in trajectories {
            let Some(s) = tr.samples.get(k) else { continue };
            let (p, u, z) = (s.position, s.direction, s.camera);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                tr.agent_id, s.t, p.x, p.y, p.z, u.x, u.y, u.z, z.x, z.y, z.z, s.obstacle_distance, s.neighbor_distance
            );
        }
    }
    out
}

/// One parsed trajectory row: agent id, time and position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow<T> {
    pub agent_id: usize,
    pub t: T,
    pub position: Vec3<T>,
}

/// Reads `agent_id`, `t`, `x`, `y`, `z` from a trajectory CSV; other columns are ignored.
pub fn parse_trajectories<T: Real + FromStr>(text: &str) -> Result<Vec<TrajectoryRow<T>>, RunError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(RunError::Format("trajectory file is empty".into()));
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| RunError::Format(format!("trajectory header lacks column `{name}`")))
    };
    let idx = [find("agent_id")?, find("t")?, find("x")?, find("y")?, find("z")?];
    let mut rows = Vec::new();
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |k: usize| {
            fields.get(idx[k]).copied().ok_or_else(|| RunError::Format(format!("line {}: missing column", ln + 1)))
        };
        let num = |k: usize| -> Result<T, RunError> {
            let s = get(k)?;
            s.parse::<T>().map_err(|_| RunError::Format(format!("line {}: bad number `{s}`", ln + 1)))
        };
        let agent_id = get(0)?
            .parse::<usize>()
            .map_err(|_| RunError::Format(format!("line {}: bad agent id", ln + 1)))?;
        rows.push(TrajectoryRow {
            agent_id,
            t: num(1)?,
            position: Vec3::new(num(2)?, num(3)?, num(4)?),
        });
    }
    Ok(rows)
}

fn vtk_points<T: Real>(out: &mut String, nodes: &[Vec3<T>]) {
    let _ = writeln!(out, "POINTS {} double", nodes.len());
    for p in nodes {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
}

/// Legacy ASCII unstructured grid with nodal scalars.
pub fn vtk_domain<T: Real>(mesh: &TetMesh<T>, fields: &[(&str, &ScalarField<T>)]) -> String {
    let mut out = String::from("# vtk DataFile Version 3.0\nhedac domain\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    vtk_points(&mut out, mesh.nodes());
    let cells = mesh.cells();
    let _ = writeln!(out, "CELLS {} {}", cells.len(), cells.len() * 5);
    for c in cells {
        let _ = writeln!(out, "4 {} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    let _ = writeln!(out, "CELL_TYPES {}", cells.len());
    for _ in cells {
        out.push_str("10\n");
    }
    let _ = writeln!(out, "POINT_DATA {}", mesh.node_count());
    for (name, f) in fields {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in f.values() {
            let _ = writeln!(out, "{v}");
        }
    }
    out
}

/// Structure surface with per-node observation counts.
pub fn vtk_surface<T: Real>(mesh: &SurfaceMesh<T>, counts: Option<&[u32]>) -> String {
    let mut out = String::from("# vtk DataFile Version 3.0\nhedac structure\nASCII\nDATASET POLYDATA\n");
    vtk_points(&mut out, mesh.nodes());
    let faces = mesh.faces();
    let _ = writeln!(out, "POLYGONS {} {}", faces.len(), faces.len() * 4);
    for f in faces {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    if let Some(counts) = counts {
        let _ = writeln!(out, "POINT_DATA {}\nSCALARS observations int 1\nLOOKUP_TABLE default", mesh.node_count());
        for c in counts {
            let _ = writeln!(out, "{c}");
        }
    }
    out
}

/// Polyline per agent.
pub fn vtk_trajectories<T: Real>(trajectories: &[Trajectory<T>]) -> String {
    let mut out = String::from("# vtk DataFile Version 3.0\nhedac trajectories\nASCII\nDATASET POLYDATA\n");
    let pts: Vec<Vec3<T>> = trajectories.iter().flat_map(|t| t.samples.iter().map(|s| s.position)).collect();
    vtk_points(&mut out, &pts);
    let total: usize = trajectories.iter().map(|t| t.samples.len() + 1).sum();
    let _ = writeln!(out, "LINES {} {}", trajectories.len(), total);
    let mut base = 0;
    for t in trajectories {
        let _ = write!(out, "{}", t.samples.len());
        for k in 0..t.samples.len() {
            let _ = write!(out, " {}", base + k);
        }
        out.push('\n');
        base += t.samples.len();
    }
    out
}

pub fn format_duration(d: std::time::Duration) -> String {
    format!("{:.3} s", d.as_secs_f64())
}

pub fn timings_table(t: &Timings) -> String {
    let steps = t.steps.as_secs_f64();
    let share = |d: std::time::Duration| if steps > 0.0 { 100.0 * d.as_secs_f64() / steps } else { 0.0 };
    let mut out = String::new();
    let _ = writeln!(out, "initialization   {:>12}  (factorization {})", format_duration(t.initialization), format_duration(t.factorization));
    for (name, d) in [
        ("potential", t.potential),
        ("avoidance", t.avoidance),
        ("coverage", t.coverage),
        ("inspection", t.inspection),
        ("bookkeeping", t.bookkeeping),
    ] {
        let _ = writeln!(out, "{name:<16} {:>12}  {:5.1}%", format_duration(d), share(d));
    }
    let _ = writeln!(out, "step loop        {:>12}  phases cover {:.1}%", format_duration(t.steps), share(t.phase_sum()));
    out
}

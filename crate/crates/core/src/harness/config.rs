//! Scenario files (TOML) and their validation.

use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid `{field}`: expected {expected}, got {got}")]
    Invalid { field: String, expected: String, got: String },
    #[error(
        "safety inequality violated: safety_distance ({eps}) must exceed speed * dt / motion_substeps + radius \
         ({speed} * {dt} / {substeps} + {radius} = {bound})"
    )]
    Safety { eps: f64, speed: f64, dt: f64, substeps: usize, radius: f64, bound: f64 },
}

fn invalid(field: &str, expected: &str, got: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        expected: expected.to_string(),
        got: got.to_string(),
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Planning time step [s].
    pub dt: f64,
    /// Total simulated time [s]; a whole number of steps.
    pub duration: f64,
    /// Helmholtz conduction coefficient `k`.
    pub conduction: f64,
    /// Safety distance `eps` [m].
    pub safety_distance: f64,
    /// Kinematic sub-steps per planning step; the potential is solved once per planning step.
    #[serde(default = "one")]
    pub motion_substeps: usize,
    pub domain: DomainSpec,
    #[serde(default)]
    pub structure: Option<StructureSpec>,
    pub target: TargetSpec,
    pub fleet: FleetSpec,
    #[serde(default)]
    pub camera: Option<CameraSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative paths resolve against; set by [`Scenario::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// Box domain corners; ignored when `mesh` is given.
    #[serde(default)]
    pub min: Option<[f64; 3]>,
    #[serde(default)]
    pub max: Option<[f64; 3]>,
    #[serde(default)]
    pub resolution: Option<[usize; 3]>,
    /// Gmsh 2.2 ASCII tetrahedral mesh.
    #[serde(default)]
    pub mesh: Option<String>,
    /// Remove box cells inside the structure.
    #[serde(default = "yes")]
    pub carve_structure: bool,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    /// STL or OBJ surface.
    pub file: String,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Uniform density over a box.
    Box { min: [f64; 3], max: [f64; 3] },
    /// Shell at `distance` from the structure with Gaussian `broadness`.
    Inspection { distance: f64, broadness: f64 },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FleetSpec {
    pub count: usize,
    /// [m/s]
    pub speed: f64,
    /// Coverage action intensity `Phi`.
    pub intensity: f64,
    /// Coverage action range `sigma` [m].
    pub range: f64,
    /// Physical radius `M` [m].
    #[serde(default)]
    pub radius: f64,
    #[serde(default)]
    pub spawn_min: Option<[f64; 3]>,
    #[serde(default)]
    pub spawn_max: Option<[f64; 3]>,
    /// Explicit start positions; overrides the spawn box.
    #[serde(default)]
    pub positions: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    /// Cone height `C_H` [m].
    pub height: f64,
    /// Cone base diameter `C_D` [m].
    pub diameter: f64,
    #[serde(default = "one")]
    pub trigger: usize,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Write a field snapshot every this many steps; 0 disables.
    #[serde(default)]
    pub snapshot_every: usize,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut s = Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<string>"),
            message: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn resolve(&self, file: &str) -> PathBuf {
        let p = Path::new(file);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Number of planning steps.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn substep_dt(&self) -> f64 {
        self.dt / self.motion_substeps as f64
    }

    /// Right-hand side of the safety inequality.
    pub fn safety_bound(&self) -> f64 {
        self.fleet.speed * self.substep_dt() + self.fleet.radius
    }

    /// Same bound for two agents closing head-on at twice the speed. Not
    /// enforced: the single-sub-step portal scenario violates it.
    pub fn pairwise_safety_bound(&self) -> f64 {
        2.0 * self.fleet.speed * self.substep_dt() + self.fleet.radius
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(field, "a positive finite number", v))
            }
        };
        positive("dt", self.dt)?;
        positive("conduction", self.conduction)?;
        positive("safety_distance", self.safety_distance)?;
        positive("fleet.speed", self.fleet.speed)?;
        positive("fleet.intensity", self.fleet.intensity)?;
        positive("fleet.range", self.fleet.range)?;
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(invalid("duration", "a nonnegative finite number", self.duration));
        }
        let steps = (self.duration / self.dt).round();
        if (steps * self.dt - self.duration).abs() > 1e-9 * self.duration.max(1.0) {
            return Err(invalid("duration", "a whole multiple of dt", self.duration));
        }
        if self.motion_substeps == 0 {
            return Err(invalid("motion_substeps", "at least 1", 0));
        }
        if !(self.fleet.radius >= 0.0) {
            return Err(invalid("fleet.radius", "a nonnegative number", self.fleet.radius));
        }
        if self.fleet.count == 0 {
            return Err(invalid("fleet.count", "at least one agent", 0));
        }
        let bound = self.safety_bound();
        if !(self.safety_distance > bound) {
            return Err(ConfigError::Safety {
                eps: self.safety_distance,
                speed: self.fleet.speed,
                dt: self.dt,
                substeps: self.motion_substeps,
                radius: self.fleet.radius,
                bound,
            });
        }
        match &self.fleet.positions {
            Some(p) if p.len() != self.fleet.count => {
                return Err(invalid("fleet.positions", &format!("{} positions", self.fleet.count), p.len()));
            }
            Some(_) => {}
            None => {
                let (Some(lo), Some(hi)) = (self.fleet.spawn_min, self.fleet.spawn_max) else {
                    return Err(invalid("fleet.spawn_min/spawn_max", "a spawn box or explicit positions", "neither"));
                };
                if (0..3).any(|a| !(lo[a] < hi[a])) {
                    return Err(invalid("fleet.spawn_min", "strictly below spawn_max", format!("{lo:?} vs {hi:?}")));
                }
            }
        }
        let d = &self.domain;
        if d.mesh.is_none() {
            let (Some(lo), Some(hi), Some(res)) = (d.min, d.max, d.resolution) else {
                return Err(invalid("domain", "either `mesh` or `min`, `max` and `resolution`", "incomplete box"));
            };
            if (0..3).any(|a| !(lo[a] < hi[a])) {
                return Err(invalid("domain.min", "strictly below domain.max", format!("{lo:?} vs {hi:?}")));
            }
            if res.iter().any(|&r| r < 2) {
                return Err(invalid("domain.resolution", "at least 2 cells per axis", format!("{res:?}")));
            }
        }
        match &self.target {
            TargetSpec::Box { min, max } => {
                if (0..3).any(|a| !(min[a] < max[a])) {
                    return Err(invalid("target.min", "strictly below target.max", format!("{min:?} vs {max:?}")));
                }
            }
            TargetSpec::Inspection { distance, broadness } => {
                positive("target.distance", *distance)?;
                positive("target.broadness", *broadness)?;
                if self.structure.is_none() {
                    return Err(invalid("structure", "a structure for an inspection target", "none"));
                }
            }
        }
        if let Some(c) = &self.camera {
            positive("camera.height", c.height)?;
            positive("camera.diameter", c.diameter)?;
            if c.trigger == 0 {
                return Err(invalid("camera.trigger", "at least 1", 0));
            }
            if self.structure.is_none() {
                return Err(invalid("structure", "a structure when a camera is configured", "none"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
dt = 1.0
duration = 10.0
conduction = 0.1
safety_distance = 0.2
[domain]
min = [0.0, 0.0, 0.0]
max = [1.0, 1.0, 1.0]
resolution = [4, 4, 4]
[target]
kind = "box"
min = [0.1, 0.1, 0.1]
max = [0.9, 0.9, 0.5]
[fleet]
count = 2
speed = 0.1
intensity = 0.002
range = 0.05
spawn_min = [0.4, 0.4, 0.4]
spawn_max = [0.6, 0.6, 0.6]
"#;

    #[test]
    fn parses_minimal() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.steps(), 10);
        assert_eq!(s.motion_substeps, 1);
        assert!(s.structure.is_none());
    }

    #[test]
    fn rejects_unsafe_and_malformed() {
        let unsafe_ = MINIMAL.replace("safety_distance = 0.2", "safety_distance = 0.1");
        let e = Scenario::parse(&unsafe_).unwrap_err();
        assert!(matches!(e, ConfigError::Safety { .. }));
        assert!(e.to_string().contains("safety inequality"));
        let fixed = unsafe_.replace("conduction = 0.1", "conduction = 0.1\nmotion_substeps = 2");
        assert!(Scenario::parse(&fixed).is_ok());
        let bad = MINIMAL.replace("duration = 10.0", "duration = 10.5");
        assert!(matches!(Scenario::parse(&bad).unwrap_err(), ConfigError::Invalid { .. }));
        let typo = MINIMAL.replace("conduction", "conductoin");
        assert!(matches!(Scenario::parse(&typo).unwrap_err(), ConfigError::Parse { .. }));
    }
}

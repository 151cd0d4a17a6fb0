//! Small scenarios written into a temporary directory.

use hedac::geometry::{shapes, Aabb};
use hedac::Vec3;
use std::path::{Path, PathBuf};

pub const TINY_INSPECTION: &str = r#"
name = "tiny"
seed = 3
dt = 1.0
duration = 12.0
conduction = 2.0
safety_distance = 0.6

[domain]
min = [0.0, 0.0, 0.0]
max = [10.0, 10.0, 10.0]
resolution = [10, 10, 10]

[structure]
file = "block.obj"

[target]
kind = "inspection"
distance = 2.0
broadness = 1.0

[fleet]
count = 3
speed = 0.5
intensity = 20.0
range = 1.0
radius = 0.05
spawn_min = [0.8, 0.8, 0.8]
spawn_max = [3.0, 9.0, 9.0]

[camera]
height = 4.0
diameter = 4.0
trigger = 2
"#;

/// Writes the tiny inspection scenario plus its block structure; returns the config path.
pub fn write_tiny(dir: &Path) -> PathBuf {
    let block = shapes::box_surface(Aabb::new(Vec3::new(4.0, 4.0, 4.0), Vec3::new(6.0, 6.0, 6.0)), [4, 4, 4]);
    std::fs::write(dir.join("block.obj"), block.to_obj()).unwrap();
    let path = dir.join("tiny.toml");
    std::fs::write(&path, TINY_INSPECTION).unwrap();
    path
}

//! Writes the bundled structure surfaces as OBJ files.
//!
//! cargo run --release --example gen_structures -- scenarios

use hedac::geometry::shapes;
use hedac::Vec3d;
use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "scenarios".into()));
    std::fs::create_dir_all(&dir)?;
    let meshes = [
        ("portal.obj", shapes::portal(Vec3d::new(25.0, 45.0, 45.0), Vec3d::new(10.0, 50.0, 70.0), [30.0, 50.0])),
        ("s_surface.obj", shapes::s_surface()),
        ("wind_turbine.obj", shapes::wind_turbine(Vec3d::new(20.0, 81.45, 0.0), 0.8)),
        ("bridge.obj", shapes::bridge(Vec3d::new(5.4, 5.0, 0.0), 0.5)),
    ];
    for (name, mesh) in meshes {
        std::fs::write(dir.join(name), mesh.to_obj())?;
        println!("{name}: {} nodes, {} faces", mesh.node_count(), mesh.face_count());
    }
    Ok(())
}

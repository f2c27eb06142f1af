//! Writes a scene to JSON, reads it back and shows a validation error report.
//!
//! `cargo run --example scene_roundtrip`

use springsim::io::{parse_scene, render_scene};
use springsim::lattice::voxel_block;
use springsim::model::{ActuationGroup, ContactPlane, Material};
use springsim::Vec3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut scene = voxel_block(Vec3::zeros(), [1, 1, 1], 0.01, &Material::default());
    scene.planes.push(ContactPlane::floor(0.0, 0.5));
    scene.actuation.push(ActuationGroup::sinusoid("pump", 0.1, 2.0, 0.0));
    scene.springs[0].group = Some("pump".into());

    let text = render_scene(&scene);
    let back = parse_scene(&text)?;
    println!("{} bytes of JSON, round trip exact: {}", text.len(), back == scene);

    let broken = text.replacen("\"dt\": 0.0001", "\"dt\": -1.0", 1);
    match parse_scene(&broken) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}

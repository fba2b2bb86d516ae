//! Renders a small two-subject scene from every named view into a directory.

use scratchpad_core::render::camera::{view_camera, MULTIVIEW_DIRECTIONS, PROPOSAL_DIRECTIONS};
use scratchpad_core::render::output::write_render;
use scratchpad_core::{cuboid, icosphere, place_in_bbox, render, Bbox3, RenderDesign, Scene, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "render-demo".into());
    let design: RenderDesign = std::env::args().nth(2).map(|d| d.parse()).transpose()?.unwrap_or_default();
    let mut scene = Scene::default().with_subject("ball", "a ball")?.with_subject("crate", "a crate")?;
    for (id, mesh, bbox) in [
        ("ball", icosphere("ball", 0.5, 2), Bbox3::new(Vec3::new(1.5, 0.5, 0.0), Vec3::splat(1.0))),
        ("crate", cuboid("crate", Vec3::new(1.0, 1.2, 1.0)), Bbox3::new(Vec3::new(-1.0, 0.6, 0.5), Vec3::new(1.0, 1.2, 1.0))),
    ] {
        scene = scene.map_subject(id, |s| {
            s.transform = place_in_bbox(&mesh, &bbox);
            s.mesh = Some(mesh);
            s.planned_bbox = Some(bbox);
            Ok(())
        })?;
    }
    for (name, _) in MULTIVIEW_DIRECTIONS.iter().chain(PROPOSAL_DIRECTIONS.iter()) {
        let cam = view_camera(&scene, name, 50.0, 512, 512)?;
        write_render(&render(&scene, &cam, design)?, std::path::Path::new(&out), name)?;
    }
    Ok(())
}

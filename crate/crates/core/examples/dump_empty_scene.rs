//! Prints the canonical serialization of the default empty scene.

use std::io::Write;

fn main() {
    let bytes = scratchpad_core::serialize_scene(&scratchpad_core::Scene::default());
    std::io::stdout().write_all(&bytes).unwrap();
}

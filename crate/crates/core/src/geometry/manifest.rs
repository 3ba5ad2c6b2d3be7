//! JSON scene manifest: a list of OBJ files with optional per-file albedo and
//! a camera.
//!
//! ```json
//! {
//!   "meshes": [{ "obj": "room.obj", "albedo": [0.8, 0.8, 0.8] }],
//!   "camera": { "position": [0, 1, 4], "look_at": [0, 0, 0], "up": [0, 1, 0],
//!               "fov_y_deg": 45, "width": 256, "height": 256 }
//! }
//! ```

use std::path::{Path, PathBuf};

use glam::Vec3;
use serde::{Deserialize, Serialize};

use super::{load_obj, Scene};
use crate::nao::Camera;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshEntry {
    /// Path to the OBJ file, relative to the manifest.
    pub obj: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub albedo: Option<[f32; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub meshes: Vec<MeshEntry>,
    pub camera: Camera,
}

/// Loads every OBJ in the manifest, in order, into one scene.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<(Scene, Camera)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let manifest: SceneManifest = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut meshes = Vec::new();
    for entry in &manifest.meshes {
        let scene = load_obj(base.join(&entry.obj))?;
        for mut m in scene.meshes().iter().cloned() {
            if let Some(a) = entry.albedo {
                let a = Vec3::from(a);
                if !a.is_finite() || a.min_element() < 0.0 || a.max_element() > 1.0 {
                    return Err(Error::InvalidScene(format!("albedo {a} of {} outside [0,1]^3", entry.obj.display())));
                }
                m.albedo = Some(a);
            }
            meshes.push(m);
        }
    }
    manifest.camera.validate()?;
    Ok((Scene::new(meshes)?, manifest.camera))
}

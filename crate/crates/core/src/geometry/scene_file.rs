//! Scene description file (TOML).
//!
//! Schema, version 1:
//!
//! ```toml
//! schema = "twinlos-scene"
//! version = 1
//!
//! [area]
//! min = [0.0, 0.0]        # XY corner, meters
//! max = [90.0, 90.0]
//! ground_z = 0.0
//!
//! [base_station]
//! position = [45.0, 45.0, 21.7]
//! bearing_deg = 135.0     # clockwise from north
//!
//! [material]
//! reflection_coeff = 0.6  # amplitude per bounce, (0, 1]
//!
//! [tracer]
//! max_bounces = 2
//!
//! [[building]]            # axis-aligned box corners, meters
//! min = [10.0, 10.0, 0.0]
//! max = [22.0, 22.0, 15.0]
//! ```

use super::{AxisBox, Scene};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

const SCHEMA: &str = "twinlos-scene";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct SceneFile {
    schema: String,
    version: u32,
    area: AreaSection,
    base_station: BsSection,
    material: MaterialSection,
    tracer: TracerSection,
    #[serde(default)]
    building: Vec<BuildingSection>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AreaSection {
    min: [f64; 2],
    max: [f64; 2],
    ground_z: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BsSection {
    position: [f64; 3],
    bearing_deg: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MaterialSection {
    reflection_coeff: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TracerSection {
    max_bounces: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct BuildingSection {
    min: [f64; 3],
    max: [f64; 3],
}

pub fn scene_from_toml_str(text: &str) -> Result<Scene> {
    let file: SceneFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("scene file: {e}")))?;
    if file.schema != SCHEMA {
        return Err(Error::Config(format!(
            "scene file: schema: expected \"{SCHEMA}\", got \"{}\"",
            file.schema
        )));
    }
    if file.version != VERSION {
        return Err(Error::Config(format!(
            "scene file: version: expected {VERSION}, got {}",
            file.version
        )));
    }
    let buildings = file
        .building
        .iter()
        .enumerate()
        .map(|(i, b)| {
            AxisBox::new(b.min.into(), b.max.into())
                .map_err(|e| Error::Config(format!("scene file: building[{i}]: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Scene::new(
        buildings,
        file.area.min,
        file.area.max,
        file.area.ground_z,
        file.base_station.position.into(),
        file.base_station.bearing_deg.to_radians(),
        file.material.reflection_coeff,
        file.tracer.max_bounces,
    )
    .map_err(|e| Error::Config(format!("scene file: {e}")))
}

pub fn scene_to_toml_string(scene: &Scene) -> Result<String> {
    let file = SceneFile {
        schema: SCHEMA.to_string(),
        version: VERSION,
        area: AreaSection {
            min: scene.area_min,
            max: scene.area_max,
            ground_z: scene.ground_z,
        },
        base_station: BsSection {
            position: scene.bs_position.into(),
            bearing_deg: scene.bs_bearing.to_degrees(),
        },
        material: MaterialSection {
            reflection_coeff: scene.reflection_coeff,
        },
        tracer: TracerSection {
            max_bounces: scene.max_bounces,
        },
        building: scene
            .buildings
            .iter()
            .map(|b| BuildingSection {
                min: b.min.into(),
                max: b.max.into(),
            })
            .collect(),
    };
    toml::to_string(&file).map_err(|e| Error::Config(format!("scene file: serialize: {e}")))
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
        Error::Data(format!("cannot read scene file {}: {e}", path.as_ref().display()))
    })?;
    scene_from_toml_str(&text)
}

pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), scene_to_toml_string(scene)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::Vec3;

    #[test]
    fn round_trip() {
        let scene = Scene::new(
            vec![AxisBox::new(Vec3::new(1.0, 2.0, 0.0), Vec3::new(5.0, 6.0, 12.0)).unwrap()],
            [0.0, 0.0],
            [50.0, 40.0],
            0.0,
            Vec3::new(25.0, 20.0, 18.0),
            135f64.to_radians(),
            0.6,
            2,
        )
        .unwrap();
        let text = scene_to_toml_string(&scene).unwrap();
        let back = scene_from_toml_str(&text).unwrap();
        assert_eq!(back.buildings, scene.buildings);
        assert_eq!(back.bs_position, scene.bs_position);
        assert!((back.bs_bearing - scene.bs_bearing).abs() < 1e-12);
        assert_eq!(back.max_bounces, 2);
    }

    #[test]
    fn rejects_wrong_schema() {
        let text = "schema = \"other\"\nversion = 1\n";
        assert!(scene_from_toml_str(text).is_err());
    }

    #[test]
    fn rejects_degenerate_building() {
        let scene = Scene::new(
            vec![],
            [0.0, 0.0],
            [10.0, 10.0],
            0.0,
            Vec3::new(5.0, 5.0, 10.0),
            0.0,
            0.6,
            2,
        )
        .unwrap();
        let mut text = scene_to_toml_string(&scene).unwrap();
        text.push_str("\n[[building]]\nmin = [0.0, 0.0, 0.0]\nmax = [0.0, 5.0, 5.0]\n");
        let err = scene_from_toml_str(&text).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}

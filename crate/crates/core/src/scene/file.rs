//! TOML scene description.
//!
//! ```toml
//! environment = [0.0, 0.0, 0.0]       # optional constant radiance
//!
//! [camera]
//! position = [0.0, 1.0, 3.4]
//! look_at = [0.0, 1.0, 0.0]
//! up = [0.0, 1.0, 0.0]                # optional
//! vfov = 39.0                         # degrees
//! width = 64
//! height = 64
//!
//! [[materials]]
//! name = "white"
//! base_color = [0.73, 0.73, 0.73]
//! roughness = 1.0                     # optional, default 0.5
//! metallic = 0.0                      # optional, default 0
//! specular = 0.0                      # optional, default 1
//! emission = [0.0, 0.0, 0.0]          # optional
//!
//! [[meshes]]
//! name = "box"
//! file = "box.obj"                    # relative to the scene file
//!
//! [[instances]]
//! mesh = "box"
//! material = "white"
//! # Either a row-major 3x4 matrix ...
//! matrix = [1, 0, 0, 0,  0, 1, 0, 0,  0, 0, 1, 0]
//! # ... or scale, then rotate (axis x, y, z, degrees), then translate.
//! scale = [1.0, 1.0, 1.0]
//! rotate = [0.0, 1.0, 0.0, 15.0]
//! translate = [0.0, 0.0, 0.0]
//! ```

use super::builtin::builtin;
use super::{parse_obj, Camera, Material, Scene, SceneBuilder, SceneError};
use crate::Rgb;
use glam::{DAffine3, DMat3, DVec3};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    #[serde(default)]
    environment: Option<[f64; 3]>,
    camera: CameraDesc,
    #[serde(default)]
    materials: Vec<MaterialDesc>,
    #[serde(default)]
    meshes: Vec<MeshDesc>,
    #[serde(default)]
    instances: Vec<InstanceDesc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraDesc {
    position: [f64; 3],
    look_at: [f64; 3],
    #[serde(default = "default_up")]
    up: [f64; 3],
    vfov: f64,
    width: u32,
    height: u32,
}

fn default_up() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialDesc {
    name: String,
    base_color: [f64; 3],
    #[serde(default = "default_roughness")]
    roughness: f64,
    #[serde(default)]
    metallic: f64,
    #[serde(default = "default_specular")]
    specular: f64,
    #[serde(default)]
    emission: [f64; 3],
}

fn default_roughness() -> f64 {
    0.5
}

fn default_specular() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshDesc {
    name: String,
    file: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDesc {
    mesh: String,
    material: String,
    matrix: Option<[f64; 12]>,
    scale: Option<ScaleDesc>,
    rotate: Option<[f64; 4]>,
    translate: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScaleDesc {
    Uniform(f64),
    Axes([f64; 3]),
}

impl InstanceDesc {
    fn transform(&self, path: &Path) -> Result<DAffine3, SceneError> {
        if let Some(m) = self.matrix {
            if self.scale.is_some() || self.rotate.is_some() || self.translate.is_some() {
                return Err(SceneError::Parse {
                    path: path.to_path_buf(),
                    message: "instance gives both matrix and scale/rotate/translate".into(),
                });
            }
            let linear = DMat3::from_cols(
                DVec3::new(m[0], m[4], m[8]),
                DVec3::new(m[1], m[5], m[9]),
                DVec3::new(m[2], m[6], m[10]),
            );
            return Ok(DAffine3::from_mat3_translation(linear, DVec3::new(m[3], m[7], m[11])));
        }
        let scale = match self.scale {
            None => DVec3::ONE,
            Some(ScaleDesc::Uniform(s)) => DVec3::splat(s),
            Some(ScaleDesc::Axes(a)) => DVec3::from(a),
        };
        let rotation = match self.rotate {
            None => DAffine3::IDENTITY,
            Some([x, y, z, deg]) => {
                let axis = DVec3::new(x, y, z).normalize_or_zero();
                if axis == DVec3::ZERO {
                    return Err(SceneError::Parse {
                        path: path.to_path_buf(),
                        message: "rotation axis must be nonzero".into(),
                    });
                }
                DAffine3::from_axis_angle(axis, deg.to_radians())
            }
        };
        let translate = DVec3::from(self.translate.unwrap_or([0.0; 3]));
        Ok(DAffine3::from_translation(translate) * rotation * DAffine3::from_scale(scale))
    }
}

/// Loads a built-in scene by name (`cornell`, `furnace-sphere`) or a TOML
/// scene file with OBJ meshes.
pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
    let path = path.as_ref();
    if let Some(scene) = path.to_str().and_then(builtin) {
        return Ok(scene);
    }
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scene_str(&text, path, |file| {
        let full = base.join(file);
        match std::fs::read_to_string(&full) {
            Ok(t) => Ok(t),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(SceneError::MissingMesh(full)),
            Err(source) => Err(SceneError::Io { path: full, source }),
        }
    })
}

/// Parses scene TOML. `read_mesh` resolves a mesh file reference to OBJ text.
pub fn parse_scene_str<F>(text: &str, path: &Path, mut read_mesh: F) -> Result<Scene, SceneError>
where
    F: FnMut(&Path) -> Result<String, SceneError>,
{
    let parse_err = |message: String| SceneError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let desc: SceneFile = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let mut b = SceneBuilder::new();

    let mut material_ids = Vec::new();
    for m in &desc.materials {
        let mat = Material {
            base_color: Rgb::from(m.base_color),
            roughness: m.roughness,
            metallic: m.metallic,
            specular: m.specular,
            emission: Rgb::from(m.emission),
        };
        mat.validate()
            .map_err(|e| parse_err(format!("material '{}': {e}", m.name)))?;
        if material_ids.iter().any(|(n, _)| n == &m.name) {
            return Err(parse_err(format!("duplicate material '{}'", m.name)));
        }
        material_ids.push((m.name.clone(), b.add_material(mat)));
    }

    let mut mesh_ids = Vec::new();
    for m in &desc.meshes {
        let obj = read_mesh(&m.file)?;
        let data = parse_obj(&obj).map_err(|(line, message)| SceneError::Obj {
            path: m.file.clone(),
            line,
            message,
        })?;
        if mesh_ids.iter().any(|(n, _)| n == &m.name) {
            return Err(parse_err(format!("duplicate mesh '{}'", m.name)));
        }
        mesh_ids.push((m.name.clone(), b.add_mesh(data)));
    }

    let lookup = |table: &[(String, u32)], name: &str, kind: &'static str| {
        table
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, id)| id)
            .ok_or_else(|| SceneError::UnknownReference {
                kind,
                name: name.to_string(),
            })
    };
    for inst in &desc.instances {
        let mesh = lookup(&mesh_ids, &inst.mesh, "mesh")?;
        let material = lookup(&material_ids, &inst.material, "material")?;
        b.add_instance(mesh, material, inst.transform(path)?);
    }

    if let Some(env) = desc.environment {
        let env = Rgb::from(env);
        if !(env.is_finite() && env.min_element() >= 0.0) {
            return Err(parse_err("environment radiance must be finite and non-negative".into()));
        }
        b.environment(env);
    }
    let c = &desc.camera;
    if c.width == 0 || c.height == 0 || !(c.vfov > 0.0 && c.vfov < 180.0) {
        return Err(parse_err("camera needs nonzero resolution and 0 < vfov < 180".into()));
    }
    let camera = Camera::look_at(
        DVec3::from(c.position),
        DVec3::from(c.look_at),
        DVec3::from(c.up),
        c.vfov,
        c.width,
        c.height,
    );
    if !(camera.forward.is_finite() && camera.right.is_finite()) {
        return Err(parse_err(
            "camera look_at must differ from position and not be parallel to up".into(),
        ));
    }
    b.build(camera)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI_OBJ: &str = "v -1 -1 0\nv 1 -1 0\nv 0 1 0\nf 1 2 3\n";

    fn scene_text(instances: &str) -> String {
        format!(
            r#"
environment = [0.1, 0.2, 0.3]
[camera]
position = [0, 0, -3]
look_at = [0, 0, 0]
vfov = 45
width = 8
height = 6

[[materials]]
name = "lamp"
base_color = [0.5, 0.5, 0.5]
emission = [2, 2, 2]

[[meshes]]
name = "tri"
file = "tri.obj"
{instances}
"#
        )
    }

    fn parse(text: &str) -> Result<Scene, SceneError> {
        parse_scene_str(text, Path::new("test.toml"), |p| {
            if p == Path::new("tri.obj") {
                Ok(TRI_OBJ.to_string())
            } else {
                Err(SceneError::MissingMesh(p.to_path_buf()))
            }
        })
    }

    #[test]
    fn parses_instances_and_lights() {
        let text = scene_text(
            "[[instances]]\nmesh = \"tri\"\nmaterial = \"lamp\"\ntranslate = [0, 0, 1]\n\
             [[instances]]\nmesh = \"tri\"\nmaterial = \"lamp\"\nmatrix = [2,0,0,0, 0,2,0,0, 0,0,2,5]\n",
        );
        let s = parse(&text).unwrap();
        assert_eq!(s.instances.len(), 2);
        assert_eq!(s.lights.len(), 2);
        assert_eq!(s.environment, Rgb::new(0.1, 0.2, 0.3));
        assert_eq!(s.camera.width, 8);
        assert_eq!(s.instances[1].transform.translation, DVec3::new(0.0, 0.0, 5.0));
        assert_eq!(s, parse(&text).unwrap());
    }

    #[test]
    fn error_cases() {
        assert!(matches!(parse("not toml ["), Err(SceneError::Parse { .. })));
        assert!(matches!(parse(&scene_text("")), Err(SceneError::EmptyScene)));
        let singular = scene_text("[[instances]]\nmesh = \"tri\"\nmaterial = \"lamp\"\nscale = 0.0\n");
        assert!(matches!(parse(&singular), Err(SceneError::NonInvertibleTransform(0))));
        let unknown = scene_text("[[instances]]\nmesh = \"nope\"\nmaterial = \"lamp\"\n");
        assert!(matches!(
            parse(&unknown),
            Err(SceneError::UnknownReference { kind: "mesh", .. })
        ));
        let missing = scene_text("").replace("tri.obj", "gone.obj");
        assert!(matches!(parse(&missing), Err(SceneError::MissingMesh(_))));
    }

    #[test]
    fn builtins_by_name() {
        assert_eq!(load_scene("cornell").unwrap().lights.len(), 2);
        assert!(load_scene("furnace-sphere").unwrap().lights.is_empty());
        assert!(matches!(
            load_scene("/definitely/not/here.toml"),
            Err(SceneError::Io { .. })
        ));
    }
}

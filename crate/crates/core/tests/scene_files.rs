use std::fs;
use wavetrace_core::config::RenderConfig;
use wavetrace_core::{load_scene, make_integrator, Film, IntegratorKind, SceneError};

const BOX_OBJ: &str = "\
# unit cube
v -0.5 -0.5 -0.5
v  0.5 -0.5 -0.5
v  0.5  0.5 -0.5
v -0.5  0.5 -0.5
v -0.5 -0.5  0.5
v  0.5 -0.5  0.5
v  0.5  0.5  0.5
v -0.5  0.5  0.5
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 4 8 7 3
f 1 5 8 4
f 2 3 7 6
";

const QUAD_OBJ: &str = "v -1 0 -1\nv 1 0 -1\nv 1 0 1\nv -1 0 1\nf 1 2 3 4\n";

fn scene_toml() -> String {
    r#"
environment = [0.2, 0.2, 0.2]

[camera]
position = [0.0, 1.0, 4.0]
look_at = [0.0, 0.5, 0.0]
vfov = 45.0
width = 16
height = 12

[[materials]]
name = "grey"
base_color = [0.5, 0.5, 0.5]
roughness = 1.0
specular = 0.0

[[materials]]
name = "lamp"
base_color = [0.0, 0.0, 0.0]
emission = [4.0, 4.0, 4.0]

[[meshes]]
name = "box"
file = "meshes/box.obj"

[[meshes]]
name = "quad"
file = "meshes/quad.obj"

[[instances]]
mesh = "box"
material = "grey"
rotate = [0.0, 1.0, 0.0, 30.0]
translate = [0.0, 0.5, 0.0]

[[instances]]
mesh = "quad"
material = "grey"
scale = [3.0, 1.0, 3.0]

[[instances]]
mesh = "quad"
material = "lamp"
scale = [0.3, 1.0, 0.3]
matrix = [0.3, 0, 0, 0,  0, -1, 0, 2.5,  0, 0, 0.3, 0]
"#
    .to_string()
}

#[test]
fn loads_toml_with_obj_meshes_and_renders() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("meshes")).unwrap();
    fs::write(dir.path().join("meshes/box.obj"), BOX_OBJ).unwrap();
    fs::write(dir.path().join("meshes/quad.obj"), QUAD_OBJ).unwrap();
    let text = scene_toml().replace("scale = [0.3, 1.0, 0.3]\n", "");
    let path = dir.path().join("scene.toml");
    fs::write(&path, text).unwrap();

    let scene = load_scene(&path).unwrap();
    assert_eq!(scene.instances.len(), 3);
    assert_eq!(scene.triangle_count(), 12 + 2 + 2);
    assert_eq!(scene.lights.len(), 2);
    assert_eq!((scene.camera.width, scene.camera.height), (16, 12));

    let config = RenderConfig {
        spp: 4,
        nee: true,
        ..RenderConfig::default()
    };
    let mut films = Vec::new();
    for kind in IntegratorKind::ALL {
        let mut film = Film::new(16, 12);
        make_integrator(kind, &config).render(&scene, &mut film).unwrap();
        assert!(film.accum.iter().all(|c| c.is_finite() && c.min_element() >= 0.0));
        films.push(film);
    }
    assert_eq!(films[0], films[1]);
    assert_eq!(films[0], films[2]);
    assert!(films[0].accum.iter().any(|c| c.max_element() > 0.0));
}

#[test]
fn conflicting_transform_keys_or_bad_obj_fail() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("meshes")).unwrap();
    fs::write(dir.path().join("meshes/box.obj"), BOX_OBJ).unwrap();
    fs::write(dir.path().join("meshes/quad.obj"), "v 0 0 0\nf 1 2 3\n").unwrap();
    let path = dir.path().join("scene.toml");
    fs::write(&path, scene_toml()).unwrap();
    match load_scene(&path) {
        Err(SceneError::Obj { line, .. }) => assert_eq!(line, 2),
        Err(SceneError::Parse { .. }) => {}
        other => panic!("expected an error, got {other:?}"),
    }
}

#[test]
fn zero_triangle_file_is_an_empty_scene() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.obj"), "# nothing\nv 0 0 0\n").unwrap();
    let text = r#"
[camera]
position = [0.0, 0.0, 3.0]
look_at = [0.0, 0.0, 0.0]
vfov = 40.0
width = 4
height = 4

[[materials]]
name = "m"
base_color = [0.5, 0.5, 0.5]

[[meshes]]
name = "e"
file = "empty.obj"

[[instances]]
mesh = "e"
material = "m"
"#;
    let path = dir.path().join("s.toml");
    fs::write(&path, text).unwrap();
    assert!(matches!(load_scene(&path), Err(SceneError::EmptyScene)));
}

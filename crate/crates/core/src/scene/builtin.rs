//! Procedural scenes that need no files on disk.

use super::{Camera, Material, MeshData, Scene, SceneBuilder};
use crate::Rgb;
use glam::{DAffine3, DMat3, DVec3};
use std::collections::HashMap;

pub const BUILTIN_SCENES: [&str; 2] = ["cornell", "furnace-sphere"];

pub(super) fn builtin(name: &str) -> Option<Scene> {
    match name {
        "cornell" => Some(cornell_box()),
        "furnace-sphere" => Some(furnace_sphere()),
        _ => None,
    }
}

fn affine(x: [f64; 3], y: [f64; 3], z: [f64; 3], t: [f64; 3]) -> DAffine3 {
    DAffine3::from_mat3_translation(
        DMat3::from_cols(DVec3::from(x), DVec3::from(y), DVec3::from(z)),
        DVec3::from(t),
    )
}

/// Unit square in the XZ plane, centered at the origin, front face +Y.
pub(crate) fn quad_mesh() -> MeshData {
    MeshData {
        positions: vec![
            DVec3::new(-0.5, 0.0, -0.5),
            DVec3::new(0.5, 0.0, -0.5),
            DVec3::new(0.5, 0.0, 0.5),
            DVec3::new(-0.5, 0.0, 0.5),
        ],
        normals: Vec::new(),
        uvs: Vec::new(),
        triangles: vec![[0, 2, 1], [0, 3, 2]],
    }
}

/// Axis-aligned cube spanning `[-0.5, 0.5]^3` with outward-facing triangles.
pub(crate) fn cube_mesh() -> MeshData {
    let corner = |i: u32| {
        DVec3::new(
            if i & 1 == 0 { -0.5 } else { 0.5 },
            if i & 2 == 0 { -0.5 } else { 0.5 },
            if i & 4 == 0 { -0.5 } else { 0.5 },
        )
    };
    let faces: [[u32; 4]; 6] = [
        [0, 2, 6, 4], // -x
        [1, 5, 7, 3], // +x
        [0, 4, 5, 1], // -y
        [2, 3, 7, 6], // +y
        [0, 1, 3, 2], // -z
        [4, 6, 7, 5], // +z
    ];
    let mut triangles = Vec::new();
    for f in faces {
        triangles.push([f[0], f[1], f[2]]);
        triangles.push([f[0], f[2], f[3]]);
    }
    let positions: Vec<DVec3> = (0..8).map(corner).collect();
    let mut mesh = MeshData {
        positions,
        normals: Vec::new(),
        uvs: Vec::new(),
        triangles,
    };
    orient_outward(&mut mesh);
    mesh
}

/// Flips any triangle whose winding normal points toward the origin.
fn orient_outward(mesh: &mut MeshData) {
    for tri in &mut mesh.triangles {
        let [a, b, c] = tri.map(|i| mesh.positions[i as usize]);
        let n = (b - a).cross(c - a);
        if n.dot(a + b + c) < 0.0 {
            tri.swap(1, 2);
        }
    }
}

/// Flat-shaded icosphere of unit radius.
pub(crate) fn icosphere(subdivisions: u32) -> MeshData {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut positions: Vec<DVec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| DVec3::new(x, y, z).normalize())
    .collect();
    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, positions: &mut Vec<DVec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                positions.push(((positions[a as usize] + positions[b as usize]) * 0.5).normalize());
                (positions.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for [a, b, c] in triangles {
            let ab = mid(a, b, &mut positions);
            let bc = mid(b, c, &mut positions);
            let ca = mid(c, a, &mut positions);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    let mut mesh = MeshData {
        positions,
        normals: Vec::new(),
        uvs: Vec::new(),
        triangles,
    };
    orient_outward(&mut mesh);
    mesh
}

/// Cornell box: interior `[-1, 1] x [0, 2] x [-1, 1]`, open toward +z.
///
/// Instances 0-4 are the floor, ceiling, back, left (red) and right (green)
/// walls, 5 is the ceiling light, 6 the short box and 7 the tall box.
pub fn cornell_box() -> Scene {
    let mut b = SceneBuilder::new();
    let quad = b.add_mesh(quad_mesh());
    let cube = b.add_mesh(cube_mesh());

    let white = b.add_material(Material::diffuse(Rgb::splat(0.73)));
    let red = b.add_material(Material::diffuse(Rgb::new(0.65, 0.05, 0.05)));
    let green = b.add_material(Material::diffuse(Rgb::new(0.12, 0.45, 0.15)));
    let light = b.add_material(Material::diffuse(Rgb::splat(0.78)).with_emission(Rgb::new(17.0, 12.0, 4.0)));
    let metal = b.add_material(Material {
        base_color: Rgb::new(0.9, 0.8, 0.6),
        roughness: 0.35,
        metallic: 1.0,
        specular: 1.0,
        emission: Rgb::ZERO,
    });

    b.add_instance(
        quad,
        white,
        affine([2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0], [0.0, 0.0, 0.0]),
    );
    b.add_instance(
        quad,
        white,
        affine([2.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -2.0], [0.0, 2.0, 0.0]),
    );
    b.add_instance(
        quad,
        white,
        affine([2.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -2.0, 0.0], [0.0, 1.0, -1.0]),
    );
    b.add_instance(
        quad,
        red,
        affine([0.0, -2.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0], [-1.0, 1.0, 0.0]),
    );
    b.add_instance(
        quad,
        green,
        affine([0.0, 2.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 2.0], [1.0, 1.0, 0.0]),
    );
    b.add_instance(
        quad,
        light,
        affine([0.5, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -0.5], [0.0, 1.98, 0.0]),
    );

    let short_box = DAffine3::from_translation(DVec3::new(0.42, 0.3, 0.35))
        * DAffine3::from_rotation_y((-17.0f64).to_radians())
        * DAffine3::from_scale(DVec3::splat(0.6));
    let tall_box = DAffine3::from_translation(DVec3::new(-0.4, 0.6, -0.3))
        * DAffine3::from_rotation_y(17.0f64.to_radians())
        * DAffine3::from_scale(DVec3::new(0.6, 1.2, 0.6));
    b.add_instance(cube, white, short_box);
    b.add_instance(cube, metal, tall_box);

    let camera = Camera::look_at(
        DVec3::new(0.0, 1.0, 3.4),
        DVec3::new(0.0, 1.0, 0.0),
        DVec3::Y,
        39.0,
        64,
        64,
    );
    b.build(camera).expect("cornell box is well formed")
}

/// Flat-shaded Lambertian sphere (albedo 0.5) in a uniform white environment.
pub fn furnace_sphere() -> Scene {
    let mut b = SceneBuilder::new();
    let sphere = b.add_mesh(icosphere(3));
    let grey = b.add_material(Material::diffuse(Rgb::splat(0.5)));
    b.add_instance(sphere, grey, DAffine3::IDENTITY);
    b.environment(Rgb::ONE);
    let camera = Camera::look_at(DVec3::new(0.0, 0.0, 4.0), DVec3::ZERO, DVec3::Y, 40.0, 32, 32);
    b.build(camera).expect("furnace sphere is well formed")
}

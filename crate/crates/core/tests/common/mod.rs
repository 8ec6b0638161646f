//! Brute-force oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use glam::{DAffine3, DMat3, DQuat, DVec3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use wavetrace_core::scene::{Camera, MeshData, SceneBuilder};
use wavetrace_core::{Material, Ray, Rgb, Scene};

/// Textbook world-space Möller–Trumbore, two-sided, open range.
pub fn mt(o: DVec3, d: DVec3, a: DVec3, b: DVec3, c: DVec3, t_min: f64, t_max: f64) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = d.cross(e2);
    let det = e1.dot(p);
    if det == 0.0 {
        return None;
    }
    let inv = 1.0 / det;
    let s = o - a;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = d.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > t_min && t < t_max).then_some(t)
}

/// Every triangle of the scene in world space with its (instance, primitive) id.
pub fn world_triangles(scene: &Scene) -> Vec<(u32, u32, [DVec3; 3])> {
    let mut out = Vec::new();
    for (ii, inst) in scene.instances.iter().enumerate() {
        let mesh = &scene.meshes[inst.mesh as usize];
        for (pi, tri) in mesh.triangles.iter().enumerate() {
            let v = tri.map(|k| inst.transform.transform_point3(mesh.positions[k as usize]));
            out.push((ii as u32, pi as u32, v));
        }
    }
    out
}

/// Closest hit over all triangles: (t, instance, primitive).
pub fn brute_intersect(tris: &[(u32, u32, [DVec3; 3])], ray: &Ray) -> Option<(f64, u32, u32)> {
    let mut best: Option<(f64, u32, u32)> = None;
    for &(i, p, [a, b, c]) in tris {
        if let Some(t) = mt(ray.origin, ray.direction, a, b, c, ray.t_min, ray.t_max) {
            if best.is_none_or(|(bt, bi, bp)| t < bt || (t == bt && (i, p) < (bi, bp))) {
                best = Some((t, i, p));
            }
        }
    }
    best
}

pub fn brute_occluded(tris: &[(u32, u32, [DVec3; 3])], ray: &Ray) -> bool {
    tris.iter()
        .any(|&(_, _, [a, b, c])| mt(ray.origin, ray.direction, a, b, c, ray.t_min, ray.t_max).is_some())
}

pub fn unit_vector(rng: &mut StdRng) -> DVec3 {
    loop {
        let v = DVec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let l = v.length_squared();
        if l > 1e-6 && l <= 1.0 {
            return v / l.sqrt();
        }
    }
}

/// Random rays starting inside `[lo, hi]^3`, some with a finite range.
pub fn random_rays(seed: u64, n: usize, lo: DVec3, hi: DVec3) -> Vec<Ray> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let o = DVec3::new(
                rng.gen_range(lo.x..hi.x),
                rng.gen_range(lo.y..hi.y),
                rng.gen_range(lo.z..hi.z),
            );
            let ray = Ray::new(o, unit_vector(&mut rng));
            if k % 3 == 0 {
                ray.with_range(1e-4, rng.gen_range(0.05..2.0))
            } else {
                ray
            }
        })
        .collect()
}

/// `n` random small triangles in the unit cube, placed under a rotated and
/// scaled instance transform.
pub fn random_mesh_scene(seed: u64, n: usize) -> Scene {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut mesh = MeshData::default();
    for _ in 0..n {
        let c = DVec3::new(rng.gen(), rng.gen(), rng.gen());
        let base = mesh.positions.len() as u32;
        for _ in 0..3 {
            let off = DVec3::new(
                rng.gen_range(-0.05..0.05),
                rng.gen_range(-0.05..0.05),
                rng.gen_range(-0.05..0.05),
            );
            mesh.positions.push(c + off);
        }
        mesh.triangles.push([base, base + 1, base + 2]);
    }
    let mut b = SceneBuilder::new();
    let m = b.add_mesh(mesh);
    let mat = b.add_material(Material::diffuse(Rgb::splat(0.5)));
    let transform = DAffine3::from_mat3_translation(
        DMat3::from_quat(DQuat::from_rotation_y(0.4) * DQuat::from_rotation_x(-0.3))
            * DMat3::from_diagonal(DVec3::new(2.0, 1.5, 1.0)),
        DVec3::new(-1.0, -0.5, -0.5),
    );
    b.add_instance(m, mat, transform);
    let camera = Camera::look_at(DVec3::new(0.0, 0.0, 4.0), DVec3::ZERO, DVec3::Y, 40.0, 16, 16);
    b.build(camera).expect("random mesh scene")
}

pub fn same_t(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1e-12)
}

/// Oracle triangles whose distance equals the closest one up to rounding
/// (coplanar faces, shared edges). Empty on a miss.
pub fn closest_set(tris: &[(u32, u32, [DVec3; 3])], ray: &Ray) -> (f64, Vec<(u32, u32)>) {
    let hits: Vec<(f64, u32, u32)> = tris
        .iter()
        .filter_map(|&(i, p, [a, b, c])| {
            mt(ray.origin, ray.direction, a, b, c, ray.t_min, ray.t_max).map(|t| (t, i, p))
        })
        .collect();
    let best = hits.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
    let ties = hits
        .iter()
        .filter(|h| (h.0 - best).abs() <= 1e-12 * best.abs().max(1e-12))
        .map(|h| (h.1, h.2))
        .collect();
    (best, ties)
}

/// Checks `scene.intersect` and `scene.occluded` against the brute-force loop
/// and returns the number of mismatches. A unique closest triangle must be
/// matched exactly; among rounding-level ties any member is accepted.
pub fn bvh_mismatches(scene: &Scene, rays: &[Ray]) -> usize {
    let tris = world_triangles(scene);
    let mut bad = 0;
    for ray in rays {
        let h = scene.intersect(ray);
        let (t, ties) = closest_set(&tris, ray);
        let ok = if ties.is_empty() {
            !h.hit
        } else {
            h.hit && ties.contains(&(h.instance_id, h.primitive_id)) && same_t(h.t, t)
        };
        if !ok || scene.occluded(ray) != brute_occluded(&tris, ray) {
            bad += 1;
        }
    }
    bad
}

/// Number of rays whose closest oracle hit is not unique.
pub fn tie_count(scene: &Scene, rays: &[Ray]) -> usize {
    let tris = world_triangles(scene);
    rays.iter().filter(|r| closest_set(&tris, r).1.len() > 1).count()
}

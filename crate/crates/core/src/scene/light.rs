use super::{Instance, Material, Mesh, Scene, SceneError};
use crate::Rgb;
use glam::DVec3;

/// An emissive triangle in world space. Emits from its front face only,
/// the side `normal` points to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightTriangle {
    pub instance_id: u32,
    pub primitive_id: u32,
    pub v0: DVec3,
    pub e1: DVec3,
    pub e2: DVec3,
    pub normal: DVec3,
    pub area: f64,
    pub emission: Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightSample {
    /// Unit direction from the shading point toward the light point.
    pub direction: DVec3,
    pub distance: f64,
    /// Zero when the light point faces away.
    pub radiance: Rgb,
    /// Solid-angle density at the shading point.
    pub pdf: f64,
}

pub(super) fn collect_lights(meshes: &[Mesh], instances: &[Instance], materials: &[Material]) -> Vec<LightTriangle> {
    let mut lights = Vec::new();
    for (idx, inst) in instances.iter().enumerate() {
        let mat = &materials[inst.material as usize];
        if !mat.is_emissive() {
            continue;
        }
        let mesh = &meshes[inst.mesh as usize];
        for prim in 0..mesh.triangles.len() as u32 {
            let [a, b, c] = mesh.vertices(prim).map(|p| inst.transform.transform_point3(p));
            let cross = (b - a).cross(c - a);
            let area = 0.5 * cross.length();
            if !(area > 0.0) {
                continue;
            }
            lights.push(LightTriangle {
                instance_id: idx as u32,
                primitive_id: prim,
                v0: a,
                e1: b - a,
                e2: c - a,
                normal: cross / (2.0 * area),
                area,
                emission: mat.emission,
            });
        }
    }
    lights
}

/// Picks a light triangle uniformly and a point on it uniformly by area.
pub fn sample_light(scene: &Scene, point: DVec3, u_pick: f64, u1: f64, u2: f64) -> Result<LightSample, SceneError> {
    let n = scene.lights.len();
    if n == 0 {
        return Err(SceneError::NoLights);
    }
    let light = &scene.lights[((u_pick * n as f64) as usize).min(n - 1)];
    let su = u1.sqrt();
    let target = light.v0 + light.e1 * (su * (1.0 - u2)) + light.e2 * (su * u2);
    let to = target - point;
    let dist2 = to.length_squared();
    let distance = dist2.sqrt();
    let direction = to / distance;
    let cos_light = light.normal.dot(-direction);
    if !(cos_light > 0.0) || !(distance > 0.0) {
        return Ok(LightSample {
            direction,
            distance,
            radiance: Rgb::ZERO,
            pdf: 0.0,
        });
    }
    Ok(LightSample {
        direction,
        distance,
        radiance: light.emission,
        pdf: dist2 / (cos_light * light.area * n as f64),
    })
}

//! Scene representation and ray queries.
//!
//! Triangle meshes are instanced with affine transforms. Each mesh owns a
//! bottom-level BVH in object space and the scene owns a top-level BVH over
//! instance world bounds. Rays are carried into object space unnormalized,
//! so hit distances are identical in both spaces.

mod bsdf;
mod builtin;
mod bvh;
mod camera;
mod file;
mod light;
mod obj;
mod triangle;

pub use bsdf::{bsdf_eval, bsdf_sample, BsdfEval, BsdfSample, DELTA_ROUGHNESS};
pub use builtin::{cornell_box, furnace_sphere, BUILTIN_SCENES};
pub use bvh::{Aabb, Bvh, BvhNode, MAX_LEAF_PRIMS, SAH_BINS};
pub use camera::Camera;
pub use file::{load_scene, parse_scene_str};
pub use light::{sample_light, LightSample, LightTriangle};
pub use obj::{parse_obj, MeshData};
pub use triangle::intersect_triangle;

use crate::Rgb;
use glam::{DAffine3, DMat3, DVec2, DVec3};
use std::path::PathBuf;
use thiserror::Error;

/// Offset applied to the start of every secondary and shadow ray.
pub const RAY_EPSILON: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scene file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Obj {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("mesh file not found: {0}")]
    MissingMesh(PathBuf),
    #[error("instance {0} has a non-invertible transform")]
    NonInvertibleTransform(usize),
    #[error("unknown {kind} '{name}'")]
    UnknownReference { kind: &'static str, name: String },
    #[error("scene contains no triangles")]
    EmptyScene,
    #[error("hit references instance {instance}, primitive {primitive}, which do not exist")]
    InvalidHit { instance: u32, primitive: u32 },
    #[error("scene has no emissive triangles to sample")]
    NoLights,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: DVec3,
    pub direction: DVec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    /// Ray over `(RAY_EPSILON, inf)`.
    pub fn new(origin: DVec3, direction: DVec3) -> Ray {
        Ray {
            origin,
            direction,
            t_min: RAY_EPSILON,
            t_max: f64::INFINITY,
        }
    }

    pub fn with_range(mut self, t_min: f64, t_max: f64) -> Ray {
        self.t_min = t_min;
        self.t_max = t_max;
        self
    }

    pub fn at(&self, t: f64) -> DVec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitRecord {
    pub t: f64,
    pub instance_id: u32,
    pub primitive_id: u32,
    /// Barycentric weights of the second and third vertex.
    pub b1: f64,
    pub b2: f64,
    pub hit: bool,
}

impl HitRecord {
    pub const MISS: HitRecord = HitRecord {
        t: f64::INFINITY,
        instance_id: u32::MAX,
        primitive_id: u32::MAX,
        b1: 0.0,
        b2: 0.0,
        hit: false,
    };

    #[inline]
    fn closer_than(&self, t: f64, instance: u32, primitive: u32) -> bool {
        t < self.t || (t == self.t && (instance, primitive) < (self.instance_id, self.primitive_id))
    }
}

impl Default for HitRecord {
    fn default() -> Self {
        HitRecord::MISS
    }
}

/// Reconstructed world-space surface data at a hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceGeometry {
    pub position: DVec3,
    pub shading_normal: DVec3,
    pub geometric_normal: DVec3,
    pub tangent: DVec3,
    pub bitangent: DVec3,
    pub uv: DVec2,
}

impl SurfaceGeometry {
    pub fn to_local(&self, v: DVec3) -> DVec3 {
        DVec3::new(v.dot(self.tangent), v.dot(self.bitangent), v.dot(self.shading_normal))
    }

    pub fn to_world(&self, v: DVec3) -> DVec3 {
        self.tangent * v.x + self.bitangent * v.y + self.shading_normal * v.z
    }

    /// Flips both normals onto the side of `wo` when it arrives from behind
    /// the geometric surface.
    pub fn facing(mut self, wo: DVec3) -> SurfaceGeometry {
        if self.geometric_normal.dot(wo) < 0.0 {
            self.geometric_normal = -self.geometric_normal;
            self.shading_normal = -self.shading_normal;
        }
        self
    }
}

/// Branchless orthonormal basis around a unit normal.
pub fn orthonormal_basis(n: DVec3) -> (DVec3, DVec3) {
    let sign = 1.0f64.copysign(n.z);
    let a = -1.0 / (sign + n.z);
    let b = n.x * n.y * a;
    let t = DVec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x);
    let bt = DVec3::new(b, sign + n.y * n.y * a, -n.y);
    (t, bt)
}

/// Reduced physically based material: a Lambertian base plus a GGX
/// microfacet lobe with Schlick Fresnel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub base_color: Rgb,
    pub roughness: f64,
    pub metallic: f64,
    /// Weight of the dielectric specular layer; 0 gives a pure Lambertian
    /// surface when `metallic` is 0.
    pub specular: f64,
    pub emission: Rgb,
}

impl Material {
    pub fn diffuse(base_color: Rgb) -> Material {
        Material {
            base_color,
            roughness: 1.0,
            metallic: 0.0,
            specular: 0.0,
            emission: Rgb::ZERO,
        }
    }

    pub fn with_emission(mut self, emission: Rgb) -> Material {
        self.emission = emission;
        self
    }

    pub fn is_emissive(&self) -> bool {
        self.emission.max_element() > 0.0
    }

    pub fn validate(&self) -> Result<(), String> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.base_color.x) && unit(self.base_color.y) && unit(self.base_color.z)) {
            return Err("base_color components must lie in [0, 1]".into());
        }
        if !(unit(self.roughness) && unit(self.metallic) && unit(self.specular)) {
            return Err("roughness, metallic and specular must lie in [0, 1]".into());
        }
        if !(self.emission.is_finite() && self.emission.min_element() >= 0.0) {
            return Err("emission must be finite and non-negative".into());
        }
        Ok(())
    }
}

impl Default for Material {
    fn default() -> Self {
        Material {
            base_color: Rgb::splat(0.8),
            roughness: 0.5,
            metallic: 0.0,
            specular: 1.0,
            emission: Rgb::ZERO,
        }
    }
}

/// Triangle mesh in object space with its bottom-level BVH.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub positions: Vec<DVec3>,
    /// Per-vertex normals; empty for flat-shaded meshes.
    pub normals: Vec<DVec3>,
    /// Per-vertex texture coordinates; may be empty.
    pub uvs: Vec<DVec2>,
    pub triangles: Vec<[u32; 3]>,
    pub bvh: Bvh,
    pub bounds: Aabb,
}

impl Mesh {
    fn from_data(data: MeshData) -> Option<Mesh> {
        if data.triangles.is_empty() {
            return None;
        }
        let prim_bounds: Vec<Aabb> = data
            .triangles
            .iter()
            .map(|t| Aabb::from_points(&t.map(|i| data.positions[i as usize])))
            .collect();
        let bvh = Bvh::build(&prim_bounds);
        let bounds = bvh.nodes[0].bounds;
        Some(Mesh {
            positions: data.positions,
            normals: data.normals,
            uvs: data.uvs,
            triangles: data.triangles,
            bvh,
            bounds,
        })
    }

    #[inline]
    pub fn vertices(&self, prim: u32) -> [DVec3; 3] {
        self.triangles[prim as usize].map(|i| self.positions[i as usize])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub mesh: u32,
    pub material: u32,
    pub transform: DAffine3,
    pub inverse: DAffine3,
    /// Inverse transpose of the linear part.
    pub normal_matrix: DMat3,
    pub world_bounds: Aabb,
}

/// Accumulates meshes, materials and instances, then builds both BVH levels.
#[derive(Debug, Default)]
pub struct SceneBuilder {
    meshes: Vec<MeshData>,
    materials: Vec<Material>,
    instances: Vec<(u32, u32, DAffine3)>,
    environment: Rgb,
}

impl SceneBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_mesh(&mut self, mesh: MeshData) -> u32 {
        self.meshes.push(mesh);
        (self.meshes.len() - 1) as u32
    }

    pub fn add_material(&mut self, material: Material) -> u32 {
        self.materials.push(material);
        (self.materials.len() - 1) as u32
    }

    pub fn add_instance(&mut self, mesh: u32, material: u32, transform: DAffine3) -> u32 {
        self.instances.push((mesh, material, transform));
        (self.instances.len() - 1) as u32
    }

    pub fn environment(&mut self, radiance: Rgb) -> &mut Self {
        self.environment = radiance;
        self
    }

    pub fn build(self, camera: Camera) -> Result<Scene, SceneError> {
        let mesh_count = self.meshes.len();
        let mut meshes: Vec<Option<Mesh>> = self.meshes.into_iter().map(Mesh::from_data).collect();
        let mut instances = Vec::new();
        for (idx, &(mesh, material, transform)) in self.instances.iter().enumerate() {
            if mesh as usize >= mesh_count {
                return Err(SceneError::UnknownReference {
                    kind: "mesh",
                    name: mesh.to_string(),
                });
            }
            if material as usize >= self.materials.len() {
                return Err(SceneError::UnknownReference {
                    kind: "material",
                    name: material.to_string(),
                });
            }
            let det = transform.matrix3.determinant();
            if !(det.is_finite() && det.abs() > 1e-12) || !transform.translation.is_finite() {
                return Err(SceneError::NonInvertibleTransform(idx));
            }
            // Empty meshes contribute nothing and are dropped with their instances.
            let Some(m) = meshes[mesh as usize].as_ref() else {
                continue;
            };
            let corners: Vec<DVec3> = (0..8)
                .map(|c| {
                    DVec3::new(
                        if c & 1 == 0 { m.bounds.min.x } else { m.bounds.max.x },
                        if c & 2 == 0 { m.bounds.min.y } else { m.bounds.max.y },
                        if c & 4 == 0 { m.bounds.min.z } else { m.bounds.max.z },
                    )
                })
                .map(|p| transform.transform_point3(p))
                .collect();
            instances.push(Instance {
                mesh,
                material,
                transform,
                inverse: transform.inverse(),
                normal_matrix: transform.matrix3.inverse().transpose(),
                world_bounds: Aabb::from_points(&corners),
            });
        }
        if instances.is_empty() {
            return Err(SceneError::EmptyScene);
        }
        let meshes: Vec<Mesh> = meshes
            .iter_mut()
            .map(|m| {
                m.take().unwrap_or_else(|| Mesh {
                    positions: Vec::new(),
                    normals: Vec::new(),
                    uvs: Vec::new(),
                    triangles: Vec::new(),
                    bvh: Bvh {
                        nodes: Vec::new(),
                        prim_indices: Vec::new(),
                    },
                    bounds: Aabb::EMPTY,
                })
            })
            .collect();
        let tlas = Bvh::build(&instances.iter().map(|i| i.world_bounds).collect::<Vec<_>>());
        let lights = light::collect_lights(&meshes, &instances, &self.materials);
        Ok(Scene {
            meshes,
            materials: self.materials,
            instances,
            tlas,
            lights,
            environment: self.environment,
            camera,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub meshes: Vec<Mesh>,
    pub materials: Vec<Material>,
    pub instances: Vec<Instance>,
    pub tlas: Bvh,
    pub lights: Vec<LightTriangle>,
    pub environment: Rgb,
    pub camera: Camera,
}

impl Scene {
    pub fn triangle_count(&self) -> usize {
        self.instances
            .iter()
            .map(|i| self.meshes[i.mesh as usize].triangles.len())
            .sum()
    }

    pub fn material_of(&self, instance_id: u32) -> &Material {
        &self.materials[self.instances[instance_id as usize].material as usize]
    }

    /// Replaces the camera's raster resolution, keeping its pose.
    pub fn set_resolution(&mut self, width: u32, height: u32) {
        self.camera = self.camera.with_resolution(width, height);
    }

    /// Closest hit in `(t_min, t_max)`; exact ties go to the lowest
    /// `(instance_id, primitive_id)`.
    pub fn intersect(&self, ray: &Ray) -> HitRecord {
        let mut best = HitRecord::MISS;
        let mut t_max = ray.t_max;
        self.tlas
            .traverse(ray.origin, ray.direction, ray.t_min, &mut t_max, |inst_idx, t_max| {
                let inst = &self.instances[inst_idx as usize];
                let mesh = &self.meshes[inst.mesh as usize];
                let o = inst.inverse.transform_point3(ray.origin);
                let d = inst.inverse.transform_vector3(ray.direction);
                mesh.bvh.traverse(o, d, ray.t_min, t_max, |prim, t_max| {
                    let [v0, v1, v2] = mesh.vertices(prim);
                    // Inclusive upper bound keeps exact ties alive for the id comparison.
                    let upper = if best.hit { next_up(*t_max) } else { *t_max };
                    if let Some((t, b1, b2)) = intersect_triangle(o, d, v0, v1, v2, ray.t_min, upper) {
                        if best.closer_than(t, inst_idx, prim) {
                            best = HitRecord {
                                t,
                                instance_id: inst_idx,
                                primitive_id: prim,
                                b1,
                                b2,
                                hit: true,
                            };
                            *t_max = t;
                        }
                    }
                    false
                });
                false
            });
        best
    }

    /// True iff any surface lies in `(t_min, t_max)`. Stops at the first hit.
    pub fn occluded(&self, ray: &Ray) -> bool {
        let mut found = false;
        let mut t_max = ray.t_max;
        self.tlas
            .traverse(ray.origin, ray.direction, ray.t_min, &mut t_max, |inst_idx, t_max| {
                let inst = &self.instances[inst_idx as usize];
                let mesh = &self.meshes[inst.mesh as usize];
                let o = inst.inverse.transform_point3(ray.origin);
                let d = inst.inverse.transform_vector3(ray.direction);
                mesh.bvh.traverse(o, d, ray.t_min, t_max, |prim, _| {
                    let [v0, v1, v2] = mesh.vertices(prim);
                    found = intersect_triangle(o, d, v0, v1, v2, ray.t_min, ray.t_max).is_some();
                    found
                });
                found
            });
        found
    }

    /// World-space position, normals, frame and uv at a hit.
    pub fn surface_geometry(&self, hit: &HitRecord) -> Result<SurfaceGeometry, SceneError> {
        let invalid = SceneError::InvalidHit {
            instance: hit.instance_id,
            primitive: hit.primitive_id,
        };
        let inst = self.instances.get(hit.instance_id as usize).ok_or(invalid)?;
        let mesh = &self.meshes[inst.mesh as usize];
        let tri = *mesh
            .triangles
            .get(hit.primitive_id as usize)
            .ok_or(SceneError::InvalidHit {
                instance: hit.instance_id,
                primitive: hit.primitive_id,
            })?;
        let w0 = 1.0 - hit.b1 - hit.b2;
        let [v0, v1, v2] = tri.map(|i| mesh.positions[i as usize]);
        let local = v0 * w0 + v1 * hit.b1 + v2 * hit.b2;
        let position = inst.transform.transform_point3(local);
        let geometric_normal = (inst.normal_matrix * (v1 - v0).cross(v2 - v0)).normalize();
        let shading_normal = if mesh.normals.is_empty() {
            geometric_normal
        } else {
            let [n0, n1, n2] = tri.map(|i| mesh.normals[i as usize]);
            let n = (inst.normal_matrix * (n0 * w0 + n1 * hit.b1 + n2 * hit.b2)).normalize();
            if n.is_finite() {
                n
            } else {
                geometric_normal
            }
        };
        let uv = if mesh.uvs.is_empty() {
            DVec2::new(hit.b1, hit.b2)
        } else {
            let [t0, t1, t2] = tri.map(|i| mesh.uvs[i as usize]);
            t0 * w0 + t1 * hit.b1 + t2 * hit.b2
        };
        let (tangent, bitangent) = orthonormal_basis(shading_normal);
        Ok(SurfaceGeometry {
            position,
            shading_normal,
            geometric_normal,
            tangent,
            bitangent,
            uv,
        })
    }
}

#[inline]
fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

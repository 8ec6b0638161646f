//! Per-bounce path arithmetic shared by both integrators.
//!
//! The megakernel calls [`shade`] in a loop on a local [`PathState`]; the
//! wavefront shade stage loads the same struct from its buffers, calls the
//! same function, and stores it back. Neither integrator has its own copy of
//! the transport math, which is what makes their films bitwise equal.

use crate::config::RenderConfig;
use crate::sampler::{pixel_jitter, uniform, Dimension, SampleKey};
use crate::scene::{bsdf_eval, bsdf_sample, sample_light, HitRecord, Ray, Scene, RAY_EPSILON};
use crate::Rgb;

/// Russian roulette applies from this bounce on.
pub const RR_START_DEPTH: u32 = 3;
pub const RR_MIN_SURVIVAL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub ray: Ray,
    /// Running product of `f * |cos| / pdf` (and roulette weights).
    pub throughput: Rgb,
    pub radiance: Rgb,
    /// Index of the bounce about to be shaded.
    pub depth: u32,
    pub alive: bool,
    /// The previous scattering event was a mirror reflection.
    pub after_delta: bool,
}

impl PathState {
    pub fn new(ray: Ray) -> PathState {
        PathState {
            ray,
            throughput: Rgb::ONE,
            radiance: Rgb::ZERO,
            depth: 0,
            alive: true,
            after_delta: false,
        }
    }
}

/// A next-event estimation candidate: added to the path's radiance unless
/// `ray` is occluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowRay {
    pub ray: Ray,
    pub contribution: Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShadeOutcome {
    pub shadow: Option<ShadowRay>,
    /// Non-finite values replaced by zero during this bounce.
    pub clamped: u32,
}

pub fn pixel_coords(scene: &Scene, pixel_index: u32) -> (u32, u32) {
    let w = scene.camera.width;
    (pixel_index % w, pixel_index / w)
}

pub fn primary_ray(scene: &Scene, pixel_index: u32, sample_index: u32, seed: u64) -> Ray {
    let (px, py) = pixel_coords(scene, pixel_index);
    scene
        .camera
        .camera_ray(px, py, pixel_jitter(seed, pixel_index, sample_index))
}

#[inline]
fn is_finite(c: Rgb) -> bool {
    c.is_finite()
}

/// Shades one bounce of `state` at `hit`: accumulates emission (or the
/// environment on a miss), prepares an optional shadow ray, samples the next
/// direction, updates throughput and applies Russian roulette.
pub fn shade(
    scene: &Scene,
    config: &RenderConfig,
    state: &mut PathState,
    hit: &HitRecord,
    pixel_index: u32,
    sample_index: u32,
) -> ShadeOutcome {
    let mut out = ShadeOutcome::default();
    debug_assert!(state.alive);
    if !hit.hit {
        state.radiance += state.throughput * scene.environment;
        state.alive = false;
        return out;
    }
    let key = SampleKey::new(config.seed, pixel_index, sample_index, state.depth, Dimension::BsdfU1);
    let draw = |dim: Dimension| uniform(key.with_dimension(dim));

    let geom = match scene.surface_geometry(hit) {
        Ok(g) => g,
        Err(_) => {
            state.alive = false;
            return out;
        }
    };
    let material = scene.material_of(hit.instance_id);
    let wo = -state.ray.direction;

    // Emitters radiate from the geometric front face only.
    if material.is_emissive() && geom.geometric_normal.dot(wo) > 0.0 {
        let count_emission = !config.nee || state.depth == 0 || state.after_delta;
        if count_emission {
            state.radiance += state.throughput * material.emission;
        }
    }

    if state.depth + 1 >= config.max_depth {
        state.alive = false;
        return out;
    }

    let geom = geom.facing(wo);

    if config.nee && !scene.lights.is_empty() {
        if let Ok(ls) = sample_light(
            scene,
            geom.position,
            draw(Dimension::LightPick),
            draw(Dimension::LightU1),
            draw(Dimension::LightU2),
        ) {
            if ls.pdf > 0.0 && ls.distance > 2.0 * RAY_EPSILON {
                let e = bsdf_eval(material, wo, ls.direction, &geom);
                let cos = ls.direction.dot(geom.shading_normal).abs();
                let contribution = state.throughput * e.f * ls.radiance * (cos / ls.pdf);
                if contribution.max_element() > 0.0 {
                    if is_finite(contribution) {
                        out.shadow = Some(ShadowRay {
                            ray: Ray::new(geom.position, ls.direction)
                                .with_range(RAY_EPSILON, ls.distance - RAY_EPSILON),
                            contribution,
                        });
                    } else {
                        out.clamped += 1;
                    }
                }
            }
        }
    }

    let s = bsdf_sample(material, wo, &geom, draw(Dimension::BsdfU1), draw(Dimension::BsdfU2));
    if s.is_degenerate() {
        state.alive = false;
        return out;
    }
    let cos = s.wi.dot(geom.shading_normal).abs();
    let throughput = state.throughput * s.f * (cos / s.pdf);
    if !is_finite(throughput) {
        state.throughput = Rgb::ZERO;
        state.alive = false;
        out.clamped += 1;
        return out;
    }
    state.throughput = throughput;

    if config.russian_roulette && state.depth >= RR_START_DEPTH {
        let survive = state.throughput.max_element().clamp(RR_MIN_SURVIVAL, 1.0);
        if draw(Dimension::RussianRoulette) >= survive {
            state.alive = false;
            return out;
        }
        state.throughput /= survive;
    }

    if state.throughput.max_element() <= 0.0 {
        state.alive = false;
        return out;
    }

    state.ray = Ray::new(geom.position, s.wi);
    state.depth += 1;
    state.after_delta = s.delta;
    out
}

#[inline]
pub fn apply_shadow(state: &mut PathState, shadow: &ShadowRay, occluded: bool) {
    if !occluded {
        state.radiance += shadow.contribution;
    }
}

/// Final sanity pass on a finished path's radiance. Returns the value to
/// accumulate and whether it had to be clamped.
#[inline]
pub fn resolve_radiance(radiance: Rgb) -> (Rgb, bool) {
    if is_finite(radiance) && radiance.min_element() >= 0.0 {
        (radiance, false)
    } else {
        (Rgb::ZERO, true)
    }
}

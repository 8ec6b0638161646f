//! Megakernel integrator: one logical worker traces a pixel sample from the
//! camera to termination in a single loop.

use super::path::{apply_shadow, primary_ray, resolve_radiance, shade, PathState};
use super::{check_film, Integrator, WorkerPool, CHUNK_SIZE};
use crate::config::{IntegratorKind, RenderConfig};
use crate::film::{Film, FilmError};
use crate::metrics::{megakernel_bounce_stats, StageStats};
use crate::scene::Scene;
use crate::Rgb;
use rayon::prelude::*;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub radiance: Rgb,
    /// Intersection queries issued; the path was active at bounces `0..intersections`.
    pub intersections: u32,
    pub clamped: u32,
}

/// Traces one sample of pixel `(px, py)`.
pub fn trace_path(scene: &Scene, px: u32, py: u32, sample_index: u32, config: &RenderConfig) -> PathSample {
    trace_path_observed(scene, px, py, sample_index, config, |_| {})
}

/// [`trace_path`] that reports the path state after every bounce, including
/// any shadow-ray contribution of that bounce.
pub fn trace_path_observed(
    scene: &Scene,
    px: u32,
    py: u32,
    sample_index: u32,
    config: &RenderConfig,
    mut observe: impl FnMut(&PathState),
) -> PathSample {
    let pixel_index = py * scene.camera.width + px;
    let mut state = PathState::new(primary_ray(scene, pixel_index, sample_index, config.seed));
    let mut intersections = 0;
    let mut clamped = 0;
    while state.alive {
        let hit = scene.intersect(&state.ray);
        intersections += 1;
        let out = shade(scene, config, &mut state, &hit, pixel_index, sample_index);
        clamped += out.clamped;
        if let Some(shadow) = out.shadow {
            let occluded = scene.occluded(&shadow.ray);
            apply_shadow(&mut state, &shadow, occluded);
        }
        observe(&state);
    }
    let (radiance, bad) = resolve_radiance(state.radiance);
    PathSample {
        radiance,
        intersections,
        clamped: clamped + bad as u32,
    }
}

#[derive(Debug)]
pub struct MegakernelIntegrator {
    config: RenderConfig,
    pool: WorkerPool,
    radiance: Vec<Rgb>,
    intersections: Vec<u32>,
}

impl MegakernelIntegrator {
    pub fn new(config: RenderConfig) -> MegakernelIntegrator {
        let pool = WorkerPool::new(config.workers);
        MegakernelIntegrator {
            config,
            pool,
            radiance: Vec::new(),
            intersections: Vec::new(),
        }
    }

    /// Per-pixel intersection counts of the last frame.
    pub fn last_path_lengths(&self) -> &[u32] {
        &self.intersections
    }
}

impl Integrator for MegakernelIntegrator {
    fn kind(&self) -> IntegratorKind {
        IntegratorKind::Mega
    }

    fn config(&self) -> &RenderConfig {
        &self.config
    }

    fn render_frame(&mut self, scene: &Scene, film: &mut Film, sample_index: u32) -> Result<StageStats, FilmError> {
        check_film(scene, film)?;
        let start = Instant::now();
        let n = scene.camera.pixel_count();
        let width = scene.camera.width;
        self.radiance.resize(n, Rgb::ZERO);
        self.intersections.resize(n, 0);
        let config = &self.config;
        let radiance = &mut self.radiance;
        let lengths = &mut self.intersections;
        let clamped: u64 = self.pool.install(|| {
            radiance
                .par_chunks_mut(CHUNK_SIZE)
                .zip(lengths.par_chunks_mut(CHUNK_SIZE))
                .enumerate()
                .map(|(chunk, (rad, len))| {
                    let base = chunk * CHUNK_SIZE;
                    let mut clamped = 0u64;
                    for (k, (r, l)) in rad.iter_mut().zip(len.iter_mut()).enumerate() {
                        let p = (base + k) as u32;
                        let s = trace_path(scene, p % width, p / width, sample_index, config);
                        *r = s.radiance;
                        *l = s.intersections;
                        clamped += s.clamped as u64;
                    }
                    clamped
                })
                .sum()
        });
        let trace_ns = start.elapsed().as_nanos() as u64;
        let acc_start = Instant::now();
        film.add_sample_frame(&self.radiance)?;
        let accumulate_ns = acc_start.elapsed().as_nanos() as u64;
        Ok(StageStats {
            integrator: IntegratorKind::Mega,
            sample_index,
            trace_ns,
            raygen_ns: 0,
            accumulate_ns,
            frame_ns: start.elapsed().as_nanos() as u64,
            clamped,
            bounces: megakernel_bounce_stats(&self.intersections, config.max_depth, config.warp_size),
        })
    }
}

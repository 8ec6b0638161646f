//! Wavefront integrator: all paths advance one bounce at a time through
//! separate stages over structure-of-arrays buffers.
//!
//! Per frame: raygen, then per bounce intersect, shade, shadow (with NEE),
//! compact and prepare-indirect, then accumulate. Each stage is a full
//! parallel join, so every write of one stage is visible to the next.

use super::compact::{compact, prepare_indirect, ActiveSet, DispatchArgs};
use super::path::{primary_ray, resolve_radiance, shade, PathState};
use super::slots::Slots;
use super::{check_film, Integrator, WorkerPool, CHUNK_SIZE};
use crate::config::{IntegratorKind, RenderConfig};
use crate::film::{Film, FilmError};
use crate::metrics::{occupancy, BounceStats, StageStats};
use crate::scene::{HitRecord, Ray, Scene};
use crate::Rgb;
use glam::DVec3;
use rayon::prelude::*;
use std::time::Instant;

/// Persistent per-path state, one entry per pixel. Entries of dead paths are
/// left stale.
#[derive(Debug, Clone, Default)]
pub struct PathBuffers {
    pub origin: Vec<DVec3>,
    pub direction: Vec<DVec3>,
    pub hit: Vec<HitRecord>,
    pub throughput: Vec<Rgb>,
    pub radiance: Vec<Rgb>,
    pub depth: Vec<u32>,
    pub alive: Vec<bool>,
    pub after_delta: Vec<bool>,
    pub pixel_index: Vec<u32>,
    pub sample_index: Vec<u32>,
    pub shadow_ray: Vec<Ray>,
    pub shadow_contribution: Vec<Rgb>,
    pub has_shadow: Vec<bool>,
}

impl PathBuffers {
    pub fn new(n: usize) -> PathBuffers {
        let mut b = PathBuffers::default();
        b.resize(n);
        b
    }

    pub fn len(&self) -> usize {
        self.alive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alive.is_empty()
    }

    pub fn resize(&mut self, n: usize) {
        self.origin.resize(n, DVec3::ZERO);
        self.direction.resize(n, DVec3::Z);
        self.hit.resize(n, HitRecord::MISS);
        self.throughput.resize(n, Rgb::ONE);
        self.radiance.resize(n, Rgb::ZERO);
        self.depth.resize(n, 0);
        self.alive.resize(n, false);
        self.after_delta.resize(n, false);
        self.pixel_index.resize(n, 0);
        self.sample_index.resize(n, 0);
        self.shadow_ray.resize(n, Ray::new(DVec3::ZERO, DVec3::Z));
        self.shadow_contribution.resize(n, Rgb::ZERO);
        self.has_shadow.resize(n, false);
    }

    pub fn ray(&self, i: usize) -> Ray {
        Ray::new(self.origin[i], self.direction[i])
    }

    /// Gathers path `i` into the struct form used by [`shade`].
    pub fn path_state(&self, i: usize) -> PathState {
        PathState {
            ray: self.ray(i),
            throughput: self.throughput[i],
            radiance: self.radiance[i],
            depth: self.depth[i],
            alive: self.alive[i],
            after_delta: self.after_delta[i],
        }
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }
}

/// Disjoint-index write access to the shading fields of [`PathBuffers`].
struct ShadeSlots<'a> {
    origin: Slots<'a, DVec3>,
    direction: Slots<'a, DVec3>,
    throughput: Slots<'a, Rgb>,
    radiance: Slots<'a, Rgb>,
    depth: Slots<'a, u32>,
    alive: Slots<'a, bool>,
    after_delta: Slots<'a, bool>,
    shadow_ray: Slots<'a, Ray>,
    shadow_contribution: Slots<'a, Rgb>,
    has_shadow: Slots<'a, bool>,
}

fn for_each_active(pool: &WorkerPool, active: &[u32], f: impl Fn(usize) + Sync) {
    pool.install(|| {
        active
            .par_chunks(CHUNK_SIZE)
            .for_each(|chunk| chunk.iter().for_each(|&i| f(i as usize)))
    });
}

/// Initialises every path with its camera ray and resets `active` to all
/// indices.
pub fn stage_raygen(
    scene: &Scene,
    buffers: &mut PathBuffers,
    active: &mut ActiveSet,
    sample_index: u32,
    config: &RenderConfig,
    pool: &WorkerPool,
) {
    let n = scene.camera.pixel_count();
    buffers.resize(n);
    let b = buffers;
    pool.install(|| {
        (
            b.origin.par_chunks_mut(CHUNK_SIZE),
            b.direction.par_chunks_mut(CHUNK_SIZE),
            b.throughput.par_chunks_mut(CHUNK_SIZE),
            b.radiance.par_chunks_mut(CHUNK_SIZE),
            b.depth.par_chunks_mut(CHUNK_SIZE),
            b.alive.par_chunks_mut(CHUNK_SIZE),
            b.after_delta.par_chunks_mut(CHUNK_SIZE),
            b.pixel_index.par_chunks_mut(CHUNK_SIZE),
            b.sample_index.par_chunks_mut(CHUNK_SIZE),
            b.has_shadow.par_chunks_mut(CHUNK_SIZE),
        )
            .into_par_iter()
            .enumerate()
            .for_each(|(c, (o, d, t, r, dp, a, ad, pi, si, hs))| {
                for k in 0..o.len() {
                    let p = (c * CHUNK_SIZE + k) as u32;
                    let ray = primary_ray(scene, p, sample_index, config.seed);
                    o[k] = ray.origin;
                    d[k] = ray.direction;
                    t[k] = Rgb::ONE;
                    r[k] = Rgb::ZERO;
                    dp[k] = 0;
                    a[k] = true;
                    ad[k] = false;
                    pi[k] = p;
                    si[k] = sample_index;
                    hs[k] = false;
                }
            });
    });
    active.reset_full(n);
}

/// Traces the ray of every live path in `active` and stores its hit record.
pub fn stage_intersect(scene: &Scene, buffers: &mut PathBuffers, active: &[u32], pool: &WorkerPool) {
    let PathBuffers {
        origin,
        direction,
        hit,
        alive,
        ..
    } = buffers;
    let hits = Slots::new(hit);
    for_each_active(pool, active, |i| {
        if !alive[i] {
            return;
        }
        let h = scene.intersect(&Ray::new(origin[i], direction[i]));
        // SAFETY: active indices are distinct.
        unsafe { *hits.get(i) = h };
    });
}

/// Runs the shared shading step on every live path in `active`. Returns the
/// number of clamped values.
pub fn stage_shade(
    scene: &Scene,
    buffers: &mut PathBuffers,
    active: &[u32],
    config: &RenderConfig,
    pool: &WorkerPool,
) -> u64 {
    let PathBuffers {
        origin,
        direction,
        hit,
        throughput,
        radiance,
        depth,
        alive,
        after_delta,
        pixel_index,
        sample_index,
        shadow_ray,
        shadow_contribution,
        has_shadow,
    } = buffers;
    let (hit, pixel_index, sample_index) = (&*hit, &*pixel_index, &*sample_index);
    let s = ShadeSlots {
        origin: Slots::new(origin),
        direction: Slots::new(direction),
        throughput: Slots::new(throughput),
        radiance: Slots::new(radiance),
        depth: Slots::new(depth),
        alive: Slots::new(alive),
        after_delta: Slots::new(after_delta),
        shadow_ray: Slots::new(shadow_ray),
        shadow_contribution: Slots::new(shadow_contribution),
        has_shadow: Slots::new(has_shadow),
    };
    pool.install(|| {
        active
            .par_chunks(CHUNK_SIZE)
            .map(|chunk| {
                let mut clamped = 0u64;
                for &i in chunk {
                    let i = i as usize;
                    // SAFETY: active indices are distinct, so each slot is
                    // touched by exactly one worker.
                    unsafe {
                        if !*s.alive.get(i) {
                            continue;
                        }
                        let mut state = PathState {
                            ray: Ray::new(*s.origin.get(i), *s.direction.get(i)),
                            throughput: *s.throughput.get(i),
                            radiance: *s.radiance.get(i),
                            depth: *s.depth.get(i),
                            alive: true,
                            after_delta: *s.after_delta.get(i),
                        };
                        let out = shade(scene, config, &mut state, &hit[i], pixel_index[i], sample_index[i]);
                        clamped += out.clamped as u64;
                        *s.origin.get(i) = state.ray.origin;
                        *s.direction.get(i) = state.ray.direction;
                        *s.throughput.get(i) = state.throughput;
                        *s.radiance.get(i) = state.radiance;
                        *s.depth.get(i) = state.depth;
                        *s.alive.get(i) = state.alive;
                        *s.after_delta.get(i) = state.after_delta;
                        *s.has_shadow.get(i) = out.shadow.is_some();
                        if let Some(sh) = out.shadow {
                            *s.shadow_ray.get(i) = sh.ray;
                            *s.shadow_contribution.get(i) = sh.contribution;
                        }
                    }
                }
                clamped
            })
            .sum()
    })
}

/// Tests each pending shadow ray and adds unoccluded contributions.
/// Clears the pending flag.
pub fn stage_shadow(scene: &Scene, buffers: &mut PathBuffers, active: &[u32], pool: &WorkerPool) {
    let PathBuffers {
        radiance,
        shadow_ray,
        shadow_contribution,
        has_shadow,
        ..
    } = buffers;
    let (shadow_ray, shadow_contribution) = (&*shadow_ray, &*shadow_contribution);
    let radiance = Slots::new(radiance);
    let pending = Slots::new(has_shadow);
    for_each_active(pool, active, |i| {
        // SAFETY: active indices are distinct.
        unsafe {
            let flag = pending.get(i);
            if !*flag {
                return;
            }
            *flag = false;
            if !scene.occluded(&shadow_ray[i]) {
                *radiance.get(i) += shadow_contribution[i];
            }
        }
    });
}

/// Resolves every path's radiance into `frame` (pixel order) and blends it
/// into the film. Returns the number of clamped pixels.
pub fn stage_accumulate(buffers: &PathBuffers, film: &mut Film, frame: &mut Vec<Rgb>) -> Result<u64, FilmError> {
    frame.clear();
    let mut clamped = 0;
    frame.extend(buffers.radiance.iter().map(|&r| {
        let (v, bad) = resolve_radiance(r);
        clamped += bad as u64;
        v
    }));
    film.add_sample_frame(frame)?;
    Ok(clamped)
}

#[derive(Debug)]
pub struct WavefrontIntegrator {
    config: RenderConfig,
    compaction: bool,
    pool: WorkerPool,
    buffers: PathBuffers,
    active: ActiveSet,
    frame: Vec<Rgb>,
}

fn elapsed_ns(t: Instant) -> u64 {
    t.elapsed().as_nanos() as u64
}

impl WavefrontIntegrator {
    /// With `compaction` off every bounce dispatches all W·H paths.
    pub fn new(config: RenderConfig, compaction: bool) -> WavefrontIntegrator {
        let pool = WorkerPool::new(config.workers);
        WavefrontIntegrator {
            config,
            compaction,
            pool,
            buffers: PathBuffers::default(),
            active: ActiveSet::default(),
            frame: Vec::new(),
        }
    }

    pub fn compaction(&self) -> bool {
        self.compaction
    }

    pub fn buffers(&self) -> &PathBuffers {
        &self.buffers
    }

    pub fn active(&self) -> &ActiveSet {
        &self.active
    }
}

impl Integrator for WavefrontIntegrator {
    fn kind(&self) -> IntegratorKind {
        if self.compaction {
            IntegratorKind::Wave
        } else {
            IntegratorKind::WaveNocompact
        }
    }

    fn config(&self) -> &RenderConfig {
        &self.config
    }

    fn render_frame(&mut self, scene: &Scene, film: &mut Film, sample_index: u32) -> Result<StageStats, FilmError> {
        check_film(scene, film)?;
        let frame_start = Instant::now();
        let config = &self.config;
        let pool = &self.pool;
        let buffers = &mut self.buffers;
        let active = &mut self.active;
        let n = scene.camera.pixel_count();
        let group_size = config.group_size;
        let warp = config.warp_size;

        let t = Instant::now();
        stage_raygen(scene, buffers, active, sample_index, config, pool);
        let raygen_ns = elapsed_ns(t);

        let trace_start = Instant::now();
        let mut clamped = 0;
        let mut bounces = Vec::with_capacity(config.max_depth as usize);
        let mut alive_before = n;
        for bounce in 0..config.max_depth {
            let mut stats = BounceStats {
                bounce,
                ..BounceStats::default()
            };
            stats.active_pre = if self.compaction { active.count() } else { alive_before };
            if self.compaction && active.count() == 0 {
                bounces.push(stats);
                continue;
            }
            stats.occupancy = if self.compaction {
                occupancy(&vec![true; active.count()], warp)
            } else {
                occupancy(&buffers.alive, warp)
            };
            let dispatch = DispatchArgs::for_count(active.count(), group_size);
            stats.dispatched = active.count() as u64;
            stats.workgroups = dispatch.workgroup_count as u64;

            let t = Instant::now();
            stage_intersect(scene, buffers, active.active(), pool);
            stats.intersect_ns = elapsed_ns(t);

            let t = Instant::now();
            clamped += stage_shade(scene, buffers, active.active(), config, pool);
            stats.shade_ns = elapsed_ns(t);

            if config.nee {
                let t = Instant::now();
                stage_shadow(scene, buffers, active.active(), pool);
                stats.shadow_ns = elapsed_ns(t);
            }

            let last = bounce + 1 == config.max_depth;
            if self.compaction && !last {
                let t = Instant::now();
                compact(&buffers.alive, active, config.compaction, pool);
                stats.compact_ns = elapsed_ns(t);
                let t = Instant::now();
                prepare_indirect(active, group_size);
                stats.prepare_ns = elapsed_ns(t);
                stats.active_post = active.count();
            } else {
                let alive = &buffers.alive;
                stats.active_post = active.active().iter().filter(|&&i| alive[i as usize]).count();
            }
            alive_before = stats.active_post;
            bounces.push(stats);
        }
        let trace_ns = elapsed_ns(trace_start);

        let t = Instant::now();
        clamped += stage_accumulate(buffers, film, &mut self.frame)?;
        let accumulate_ns = elapsed_ns(t);

        Ok(StageStats {
            integrator: self.kind(),
            sample_index,
            trace_ns,
            raygen_ns,
            accumulate_ns,
            frame_ns: elapsed_ns(frame_start),
            clamped,
            bounces,
        })
    }
}

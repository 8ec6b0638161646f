//! Megakernel and wavefront Monte Carlo path tracers sharing one scene,
//! sampling and shading core.
//!
//! The two integrators consume identical random streams (see [`sampler`]) and
//! run the exact same per-bounce arithmetic (see [`integrator::path`]), so for
//! a given seed they produce bitwise-identical films. What differs is the
//! schedule: the megakernel traces each pixel to termination in one loop,
//! while the wavefront integrator advances all paths one bounce at a time
//! through staged passes over structure-of-arrays buffers, compacting the
//! active set between bounces.

// NaN-rejecting comparisons are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod film;
pub mod integrator;
pub mod metrics;
pub mod sampler;
pub mod scene;

pub use config::{CompactionMode, IntegratorKind, RenderConfig};
pub use film::{Film, FilmError, ImageFormat};
pub use integrator::{make_integrator, Integrator, MegakernelIntegrator, WavefrontIntegrator, WorkerPool};
pub use metrics::{BenchReport, ImageDiff, StageStats};
pub use scene::{load_scene, HitRecord, Material, Ray, Scene, SceneError};

/// Linear RGB triple. Radiance, throughput and reflectance all use it.
pub type Rgb = glam::DVec3;

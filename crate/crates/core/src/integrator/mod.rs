//! Megakernel and wavefront integrators.

pub mod compact;
pub mod mega;
pub mod path;
mod slots;
pub mod wave;

pub use compact::{exclusive_scan, ActiveSet, DispatchArgs};
pub use mega::{trace_path, trace_path_observed, MegakernelIntegrator, PathSample};
pub use path::{PathState, ShadowRay};
pub use wave::{PathBuffers, WavefrontIntegrator};

use crate::config::{IntegratorKind, RenderConfig};
use crate::film::{Film, FilmError};
use crate::metrics::StageStats;
use crate::scene::Scene;

/// Work items handed to a worker at a time. Independent of the worker count,
/// so results never depend on how many workers run.
pub const CHUNK_SIZE: usize = 256;

/// Fixed-size worker pool shared by all stages of one integrator.
pub struct WorkerPool {
    pool: rayon::ThreadPool,
}

impl WorkerPool {
    pub fn new(workers: usize) -> WorkerPool {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .thread_name(|i| format!("wavetrace-worker-{i}"))
            .build()
            .expect("failed to spawn worker threads");
        WorkerPool { pool }
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> R {
        self.pool.install(op)
    }
}

impl std::fmt::Debug for WorkerPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerPool").field("workers", &self.workers()).finish()
    }
}

pub trait Integrator: Send {
    fn kind(&self) -> IntegratorKind;

    fn config(&self) -> &RenderConfig;

    /// Adds one sample per pixel to `film` using `sample_index`.
    fn render_frame(&mut self, scene: &Scene, film: &mut Film, sample_index: u32) -> Result<StageStats, FilmError>;

    /// Renders `config().spp` frames, continuing from the film's sample count.
    fn render(&mut self, scene: &Scene, film: &mut Film) -> Result<Vec<StageStats>, FilmError> {
        let start = film.sample_count;
        (start..start + self.config().spp)
            .map(|s| self.render_frame(scene, film, s))
            .collect()
    }
}

pub fn make_integrator(kind: IntegratorKind, config: &RenderConfig) -> Box<dyn Integrator> {
    match kind {
        IntegratorKind::Mega => Box::new(MegakernelIntegrator::new(config.clone())),
        IntegratorKind::Wave => Box::new(WavefrontIntegrator::new(config.clone(), true)),
        IntegratorKind::WaveNocompact => Box::new(WavefrontIntegrator::new(config.clone(), false)),
    }
}

pub(crate) fn check_film(scene: &Scene, film: &Film) -> Result<(), FilmError> {
    let expected = scene.camera.pixel_count();
    if film.width != scene.camera.width || film.height != scene.camera.height {
        return Err(FilmError::LengthMismatch {
            expected,
            got: film.len(),
        });
    }
    Ok(())
}

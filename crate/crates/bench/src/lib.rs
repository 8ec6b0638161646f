//! Shared workloads for the criterion benchmarks.

use wavetrace_core::integrator::path::primary_ray;
use wavetrace_core::sampler::{uniform, Dimension, SampleKey};
use wavetrace_core::scene::cornell_box;
use wavetrace_core::{Ray, RenderConfig, Scene};

/// Cornell box at `size`x`size` with a one-sample frame configuration.
pub fn cornell_workload(size: u32, max_depth: u32, nee: bool) -> (Scene, RenderConfig) {
    let mut scene = cornell_box();
    scene.set_resolution(size, size);
    let config = RenderConfig {
        spp: 1,
        max_depth,
        nee,
        workers: 1,
        ..RenderConfig::default()
    };
    (scene, config)
}

/// Deterministic alive mask where each entry survives with probability `p`.
pub fn alive_mask(n: usize, p: f64, seed: u64) -> Vec<bool> {
    (0..n)
        .map(|i| uniform(SampleKey::new(seed, i as u32, 0, 0, Dimension::RussianRoulette)) < p)
        .collect()
}

/// One camera ray per pixel.
pub fn camera_rays(scene: &Scene) -> Vec<Ray> {
    (0..scene.camera.pixel_count() as u32)
        .map(|p| primary_ray(scene, p, 0, 0))
        .collect()
}

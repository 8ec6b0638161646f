use glam::DVec3;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use wavetrace_core::config::RenderConfig;
use wavetrace_core::integrator::{make_integrator, trace_path};
use wavetrace_core::sampler::{radical_inverse, sample_cosine_hemisphere, uniform, Dimension, SampleKey};
use wavetrace_core::scene::{cornell_box, orthonormal_basis, sample_light};
use wavetrace_core::{Film, IntegratorKind, Ray};

fn keys(n: u32) -> impl Iterator<Item = SampleKey> {
    (0..n).map(|k| SampleKey::new(9, k % 4096, k / 4096, k % 7, Dimension::BsdfU1))
}

#[test]
fn uniform_mean_and_chi_square() {
    let n = 100_000u32;
    let mut bins = [0u32; 16];
    let mut sum = 0.0;
    for key in keys(n) {
        let u = uniform(key);
        assert!((0.0..1.0).contains(&u));
        sum += u;
        bins[(u * 16.0) as usize] += 1;
    }
    let mean = sum / n as f64;
    // Standard error of the mean of U(0,1) is 1/sqrt(12 n).
    assert!((mean - 0.5).abs() < 4.0 / (12.0 * n as f64).sqrt(), "mean {mean}");
    let expected = n as f64 / 16.0;
    let chi2: f64 = bins.iter().map(|&b| (b as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new(15.0).unwrap().inverse_cdf(0.999);
    assert!((critical - 37.697).abs() < 1e-3);
    assert!(chi2 < critical, "chi2 {chi2}");
}

#[test]
fn halton_prefix_is_van_der_corput() {
    for base in [2u32, 3] {
        for i in 1..=16u64 {
            // Digits of i reversed about the radix point, exact rational.
            let (mut num, mut den, mut k) = (0u64, 1u64, i);
            while k > 0 {
                num = num * base as u64 + k % base as u64;
                den *= base as u64;
                k /= base as u64;
            }
            assert_eq!(
                radical_inverse(base, i),
                num as f64 / den as f64,
                "base {base} index {i}"
            );
        }
    }
}

fn pixel_mean(config: &RenderConfig, n: u32) -> (f64, f64) {
    let scene = cornell_box();
    let (mut s, mut s2) = (0.0, 0.0);
    for i in 0..n {
        let v = trace_path(&scene, 32, 40, i, config).radiance.element_sum() / 3.0;
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0);
    (mean, (var / n as f64).sqrt())
}

#[test]
fn russian_roulette_is_unbiased() {
    let base = RenderConfig {
        max_depth: 10,
        seed: 1,
        ..RenderConfig::default()
    };
    let off = RenderConfig {
        russian_roulette: false,
        seed: 2,
        ..base.clone()
    };
    let (m_on, se_on) = pixel_mean(&base, 40_000);
    let (m_off, se_off) = pixel_mean(&off, 40_000);
    let se = (se_on * se_on + se_off * se_off).sqrt();
    assert!((m_on - m_off).abs() <= 3.0 * se, "rr {m_on} vs {m_off} (se {se})");
}

#[test]
fn light_sampling_matches_hemisphere_quadrature() {
    let scene = cornell_box();
    let p = DVec3::new(0.1, 0.0, 0.6);
    let n = DVec3::Y;
    let albedo = 0.73;
    let samples = 200_000u32;
    let key = |i: u32, d| uniform(SampleKey::new(5, 0, i, 0, d));

    let mut nee = 0.0;
    for i in 0..samples {
        let ls = sample_light(
            &scene,
            p,
            key(i, Dimension::LightPick),
            key(i, Dimension::LightU1),
            key(i, Dimension::LightU2),
        )
        .unwrap();
        let cos = ls.direction.dot(n);
        if ls.pdf > 0.0 && cos > 0.0 {
            let shadow = Ray::new(p, ls.direction).with_range(1e-4, ls.distance - 1e-4);
            if !scene.occluded(&shadow) {
                nee += albedo / std::f64::consts::PI * ls.radiance.y * cos / ls.pdf;
            }
        }
    }
    nee /= samples as f64;

    let (t, b) = orthonormal_basis(n);
    let mut hemi = 0.0;
    for i in 0..samples * 4 {
        let (local, _) = sample_cosine_hemisphere(key(i, Dimension::BsdfU1), key(i, Dimension::BsdfU2));
        let wi = t * local.x + b * local.y + n * local.z;
        let hit = scene.intersect(&Ray::new(p, wi));
        if hit.hit {
            let m = scene.material_of(hit.instance_id);
            let g = scene.surface_geometry(&hit).unwrap();
            if m.is_emissive() && g.geometric_normal.dot(-wi) > 0.0 {
                hemi += albedo * m.emission.y;
            }
        }
    }
    hemi /= (samples * 4) as f64;
    assert!((nee - hemi).abs() <= 0.02 * hemi, "nee {nee} hemisphere {hemi}");
}

#[test]
fn nee_and_pure_path_tracing_agree_on_the_image_mean() {
    let mut scene = cornell_box();
    scene.set_resolution(24, 24);
    let mean = |nee: bool| {
        let config = RenderConfig {
            spp: 512,
            nee,
            ..RenderConfig::default()
        };
        let mut film = Film::new(24, 24);
        make_integrator(IntegratorKind::Mega, &config)
            .render(&scene, &mut film)
            .unwrap();
        film.accum.iter().map(|c| c.element_sum()).sum::<f64>() / (3.0 * film.len() as f64)
    };
    let (with, without) = (mean(true), mean(false));
    assert!((with - without).abs() <= 0.03 * without, "nee {with} vs pt {without}");
}

//! Stateless sample generation.
//!
//! Pixel jitter comes from a Halton (2, 3) sequence with a per-pixel
//! Cranley-Patterson rotation. Every other random decision is drawn from a
//! counter-based generator keyed by `(seed, pixel, sample, bounce, dimension)`,
//! which lets the megakernel and wavefront integrators consume the same
//! values without sharing any mutable state.

use glam::DVec3;
use std::f64::consts::PI;

/// Fixed layout of the per-bounce decision stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u32)]
pub enum Dimension {
    BsdfU1 = 0,
    BsdfU2 = 1,
    RussianRoulette = 2,
    LightPick = 3,
    LightU1 = 4,
    LightU2 = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleKey {
    pub seed: u64,
    pub pixel_index: u32,
    pub sample_index: u32,
    pub bounce: u32,
    pub dimension: u32,
}

impl SampleKey {
    pub fn new(seed: u64, pixel_index: u32, sample_index: u32, bounce: u32, dim: Dimension) -> Self {
        Self {
            seed,
            pixel_index,
            sample_index,
            bounce,
            dimension: dim as u32,
        }
    }

    pub fn with_dimension(self, dim: Dimension) -> Self {
        Self {
            dimension: dim as u32,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelJitter {
    pub jx: f64,
    pub jy: f64,
}

impl PixelJitter {
    pub const CENTER: PixelJitter = PixelJitter { jx: 0.5, jy: 0.5 };
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a full-avalanche bijection on 64-bit words.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Maps the top 53 bits of a hash to `[0, 1)`.
#[inline]
fn to_unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Digit-reversed fraction of `index` in `base`, as the single rounded
/// quotient `reversed / base^digits`.
pub fn radical_inverse(base: u32, mut index: u64) -> f64 {
    assert!(base >= 2, "radical inverse base must be at least 2");
    let b = base as u128;
    let mut reversed: u128 = 0;
    let mut denom: u128 = 1;
    while index > 0 {
        let digit = index as u128 % b;
        index /= base as u64;
        reversed = reversed * b + digit;
        denom *= b;
    }
    (reversed as f64 / denom as f64).min(1.0 - f64::EPSILON / 2.0)
}

/// Adds `offset` modulo one, keeping the result in `[0, 1)`.
#[inline]
pub fn rotate(value: f64, offset: f64) -> f64 {
    let v = value + offset;
    let wrapped = v - v.floor();
    // v slightly below an integer can round up to exactly 1.0.
    if wrapped >= 1.0 {
        0.0
    } else {
        wrapped
    }
}

/// Per-pixel Cranley-Patterson offsets hashed from `(seed, pixel_index)`.
pub fn rotation_offset(seed: u64, pixel_index: u32) -> (f64, f64) {
    let h = mix64(mix64(seed ^ 0x5bd1_e995_0000_0000) ^ pixel_index as u64);
    (to_unit(mix64(h)), to_unit(mix64(h ^ 0xa076_1d64_78bd_642f)))
}

pub fn jitter_with_offset(sample_index: u32, offset: (f64, f64)) -> PixelJitter {
    let i = sample_index as u64 + 1;
    PixelJitter {
        jx: rotate(radical_inverse(2, i), offset.0),
        jy: rotate(radical_inverse(3, i), offset.1),
    }
}

/// Sub-pixel position for one sample of one pixel.
pub fn pixel_jitter(seed: u64, pixel_index: u32, sample_index: u32) -> PixelJitter {
    jitter_with_offset(sample_index, rotation_offset(seed, pixel_index))
}

/// Uniform value in `[0, 1)`, a pure function of the key.
pub fn uniform(key: SampleKey) -> f64 {
    let mut h = mix64(key.seed);
    h = mix64(h ^ key.pixel_index as u64);
    h = mix64(h ^ key.sample_index as u64);
    h = mix64(h ^ key.bounce as u64);
    h = mix64(h ^ key.dimension as u64);
    to_unit(h)
}

/// Cosine-weighted direction about +z and its solid-angle density.
pub fn sample_cosine_hemisphere(u1: f64, u2: f64) -> (DVec3, f64) {
    let r = u1.sqrt();
    let phi = 2.0 * PI * u2;
    let z = (1.0 - u1).max(0.0).sqrt();
    let dir = DVec3::new(r * phi.cos(), r * phi.sin(), z);
    (dir, z / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_examples() {
        assert_eq!(radical_inverse(2, 0), 0.0);
        assert_eq!(radical_inverse(2, 1), 0.5);
        assert_eq!(radical_inverse(2, 3), 0.75);
        assert_eq!(radical_inverse(3, 1), 1.0 / 3.0);
        assert!((radical_inverse(5, 7) - (2.0 / 5.0 + 1.0 / 25.0)).abs() < 1e-15);
    }

    #[test]
    fn rotation_wraps() {
        assert_eq!(rotate(0.75, 0.5), 0.25);
        assert_eq!(rotate(0.3, 0.0), 0.3);
        let j = jitter_with_offset(0, (0.0, 0.0));
        assert_eq!(j.jx, 0.5);
        assert_eq!(j.jy, 1.0 / 3.0);
    }

    #[test]
    fn jitter_is_deterministic_and_decorrelated() {
        assert_eq!(pixel_jitter(7, 12, 3), pixel_jitter(7, 12, 3));
        assert_ne!(rotation_offset(7, 12), rotation_offset(7, 13));
        assert_ne!(rotation_offset(7, 12), rotation_offset(8, 12));
    }

    #[test]
    fn uniform_changes_with_every_field() {
        let base = SampleKey::new(1, 2, 3, 4, Dimension::LightPick);
        let v = uniform(base);
        assert_eq!(v, uniform(base));
        let variants = [
            SampleKey { seed: 2, ..base },
            SampleKey { pixel_index: 3, ..base },
            SampleKey {
                sample_index: 4,
                ..base
            },
            SampleKey { bounce: 5, ..base },
            base.with_dimension(Dimension::LightU1),
        ];
        for k in variants {
            assert_ne!(uniform(k), v);
        }
    }

    #[test]
    fn cosine_hemisphere_pole() {
        let (d, pdf) = sample_cosine_hemisphere(0.0, 0.37);
        assert!((d - DVec3::Z).length() < 1e-15);
        assert!((pdf - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn cosine_hemisphere_mean_z() {
        // E[z] under p = z/pi is 2/3.
        let n = 100_000;
        let mut sum = 0.0;
        for i in 0..n {
            let k = SampleKey::new(0, 0, i, 0, Dimension::BsdfU1);
            let (d, _) = sample_cosine_hemisphere(uniform(k), uniform(k.with_dimension(Dimension::BsdfU2)));
            sum += d.z;
        }
        let mean = sum / n as f64;
        assert!((mean - 2.0 / 3.0).abs() / (2.0 / 3.0) < 0.01, "mean z {mean}");
    }

    proptest::proptest! {
        #[test]
        fn uniform_in_unit_interval(seed: u64, p: u32, s: u32, b in 0u32..64, d in 0u32..6) {
            let v = uniform(SampleKey { seed, pixel_index: p, sample_index: s, bounce: b, dimension: d });
            proptest::prop_assert!((0.0..1.0).contains(&v));
        }

        #[test]
        fn cosine_samples_are_unit(u1 in 0.0f64..1.0, u2 in 0.0f64..1.0) {
            let (d, pdf) = sample_cosine_hemisphere(u1, u2);
            proptest::prop_assert!((d.length() - 1.0).abs() < 1e-6);
            proptest::prop_assert!(d.z >= 0.0);
            proptest::prop_assert!((pdf - d.z / PI).abs() < 1e-15);
        }
    }
}

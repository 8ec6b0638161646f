//! Reduced material model: Lambertian base plus a GGX microfacet lobe with
//! Schlick Fresnel. Evaluation happens in the shading frame (z = normal).
//!
//! ```text
//! F(c)  = (1 - metallic) * specular * schlick(0.04, c) + metallic * schlick(base, c)
//! f     = (1 - metallic) * (1 - specular * schlick(0.04, cos_o)) * base / pi
//!       + D(h) G(o, i) F(i.h) / (4 cos_o cos_i)
//! ```
//!
//! Roughness below [`DELTA_ROUGHNESS`] turns the microfacet lobe into a
//! perfect mirror, which is only reachable through sampling.

use super::SurfaceGeometry;
use crate::sampler::sample_cosine_hemisphere;
use crate::scene::Material;
use crate::Rgb;
use glam::DVec3;
use std::f64::consts::PI;

pub const DELTA_ROUGHNESS: f64 = 1e-3;
const MIN_ALPHA: f64 = 1e-3;
const DIELECTRIC_F0: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsdfEval {
    pub f: Rgb,
    pub pdf: f64,
}

impl BsdfEval {
    pub const ZERO: BsdfEval = BsdfEval { f: Rgb::ZERO, pdf: 0.0 };
}

/// A sampled incident direction. For mirror samples `delta` is set,
/// `pdf` is the discrete lobe probability, and `f` is scaled so that
/// `f * |cos| / pdf` is the sample weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsdfSample {
    pub wi: DVec3,
    pub f: Rgb,
    pub pdf: f64,
    pub delta: bool,
}

impl BsdfSample {
    pub const DEGENERATE: BsdfSample = BsdfSample {
        wi: DVec3::ZERO,
        f: Rgb::ZERO,
        pdf: 0.0,
        delta: false,
    };

    pub fn is_degenerate(&self) -> bool {
        !(self.pdf > 0.0) || self.f == Rgb::ZERO
    }
}

#[inline]
fn schlick(f0: Rgb, cos: f64) -> Rgb {
    let m = (1.0 - cos).clamp(0.0, 1.0);
    let m5 = (m * m) * (m * m) * m;
    f0 + (Rgb::ONE - f0) * m5
}

#[inline]
fn mean(c: Rgb) -> f64 {
    (c.x + c.y + c.z) / 3.0
}

struct Lobes {
    diffuse: Rgb,
    alpha: f64,
    delta: bool,
    spec_prob: f64,
}

impl Lobes {
    fn new(m: &Material, cos_o: f64) -> Lobes {
        let dielectric = (1.0 - m.metallic) * m.specular;
        let diffuse =
            m.base_color * ((1.0 - m.metallic) * (1.0 - m.specular * schlick(Rgb::splat(DIELECTRIC_F0), cos_o).x));
        let spec_weight = mean(fresnel(m, dielectric, cos_o));
        let diffuse_weight = mean(diffuse);
        let total = spec_weight + diffuse_weight;
        let spec_prob = if total > 0.0 { spec_weight / total } else { 0.0 };
        Lobes {
            diffuse,
            alpha: (m.roughness * m.roughness).max(MIN_ALPHA),
            delta: m.roughness < DELTA_ROUGHNESS,
            spec_prob,
        }
    }
}

#[inline]
fn fresnel(m: &Material, dielectric: f64, cos: f64) -> Rgb {
    schlick(Rgb::splat(DIELECTRIC_F0), cos) * dielectric + schlick(m.base_color, cos) * m.metallic
}

#[inline]
fn ggx_d(alpha: f64, cos_h: f64) -> f64 {
    let a2 = alpha * alpha;
    let d = cos_h * cos_h * (a2 - 1.0) + 1.0;
    a2 / (PI * d * d)
}

#[inline]
fn smith_g1(alpha: f64, cos: f64) -> f64 {
    let a2 = alpha * alpha;
    2.0 * cos / (cos + (a2 + (1.0 - a2) * cos * cos).sqrt())
}

fn eval_local(m: &Material, lobes: &Lobes, lo: DVec3, li: DVec3) -> BsdfEval {
    if lo.z <= 0.0 || li.z <= 0.0 {
        return BsdfEval::ZERO;
    }
    let mut f = lobes.diffuse / PI;
    let mut pdf = (1.0 - lobes.spec_prob) * li.z / PI;
    if !lobes.delta && lobes.spec_prob > 0.0 {
        let h = (lo + li).normalize();
        let d = ggx_d(lobes.alpha, h.z);
        let g = smith_g1(lobes.alpha, lo.z) * smith_g1(lobes.alpha, li.z);
        let dielectric = (1.0 - m.metallic) * m.specular;
        let fr = fresnel(m, dielectric, li.dot(h));
        f += fr * (d * g / (4.0 * lo.z * li.z));
        pdf += lobes.spec_prob * d * h.z / (4.0 * lo.dot(h));
    }
    BsdfEval { f, pdf }
}

/// Evaluates `f(wo, wi)` and the sampling density of `wi`. Both directions
/// point away from the surface. Zero below the shading hemisphere.
pub fn bsdf_eval(m: &Material, wo: DVec3, wi: DVec3, geom: &SurfaceGeometry) -> BsdfEval {
    let lo = geom.to_local(wo);
    let li = geom.to_local(wi);
    if lo.z <= 0.0 {
        return BsdfEval::ZERO;
    }
    eval_local(m, &Lobes::new(m, lo.z), lo, li)
}

/// Samples an incident direction. `u1` picks the lobe and is then stretched
/// back to `[0, 1)` for the lobe's own warp. A zero `pdf` means the path
/// should terminate.
pub fn bsdf_sample(m: &Material, wo: DVec3, geom: &SurfaceGeometry, u1: f64, u2: f64) -> BsdfSample {
    let lo = geom.to_local(wo);
    if lo.z <= 0.0 {
        return BsdfSample::DEGENERATE;
    }
    let lobes = Lobes::new(m, lo.z);
    let below_one = 1.0 - f64::EPSILON / 2.0;
    let li = if u1 < lobes.spec_prob {
        let u = (u1 / lobes.spec_prob).min(below_one);
        if lobes.delta {
            let li = DVec3::new(-lo.x, -lo.y, lo.z);
            let dielectric = (1.0 - m.metallic) * m.specular;
            return BsdfSample {
                wi: geom.to_world(li),
                f: fresnel(m, dielectric, lo.z) / li.z,
                pdf: lobes.spec_prob,
                delta: true,
            };
        }
        let a2 = lobes.alpha * lobes.alpha;
        let cos2 = (1.0 - u) / (1.0 + (a2 - 1.0) * u);
        let cos_h = cos2.sqrt();
        let sin_h = (1.0 - cos2).max(0.0).sqrt();
        let phi = 2.0 * PI * u2;
        let h = DVec3::new(sin_h * phi.cos(), sin_h * phi.sin(), cos_h);
        let li = h * (2.0 * lo.dot(h)) - lo;
        if li.z <= 0.0 {
            return BsdfSample::DEGENERATE;
        }
        li
    } else {
        let u = ((u1 - lobes.spec_prob) / (1.0 - lobes.spec_prob)).min(below_one);
        sample_cosine_hemisphere(u, u2).0
    };
    let e = eval_local(m, &lobes, lo, li);
    if !(e.pdf > 0.0) {
        return BsdfSample::DEGENERATE;
    }
    BsdfSample {
        wi: geom.to_world(li),
        f: e.f,
        pdf: e.pdf,
        delta: false,
    }
}

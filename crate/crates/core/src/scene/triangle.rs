use glam::DVec3;

/// Two-sided Möller-Trumbore test.
///
/// Returns `(t, b1, b2)` for hits with `t` strictly inside `(t_min, t_max)`,
/// where `b1` and `b2` weight `v1` and `v2`. Edges are always formed from
/// `v0` in stored winding order. `dir` need not be unit length; `t` is in
/// units of `dir`.
#[inline]
pub fn intersect_triangle(
    origin: DVec3,
    dir: DVec3,
    v0: DVec3,
    v1: DVec3,
    v2: DVec3,
    t_min: f64,
    t_max: f64,
) -> Option<(f64, f64, f64)> {
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = origin - v0;
    let b1 = s.dot(p) * inv_det;
    if !(0.0..=1.0).contains(&b1) {
        return None;
    }
    let q = s.cross(e1);
    let b2 = dir.dot(q) * inv_det;
    if b2 < 0.0 || b1 + b2 > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv_det;
    if t > t_min && t < t_max {
        Some((t, b1, b2))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const V0: DVec3 = DVec3::new(-1.0, -1.0, 0.0);
    const V1: DVec3 = DVec3::new(1.0, -1.0, 0.0);
    const V2: DVec3 = DVec3::new(0.0, 1.0, 0.0);

    #[test]
    fn symmetric_hit() {
        let (t, b1, b2) =
            intersect_triangle(DVec3::new(0.0, 0.0, -1.0), DVec3::Z, V0, V1, V2, 0.0, f64::INFINITY).unwrap();
        assert_eq!(t, 1.0);
        assert_eq!((1.0 - b1 - b2, b1, b2), (0.25, 0.25, 0.5));
    }

    #[test]
    fn both_faces_and_range() {
        let o = DVec3::new(0.0, 0.0, 1.0);
        assert!(intersect_triangle(o, -DVec3::Z, V0, V1, V2, 0.0, f64::INFINITY).is_some());
        assert!(intersect_triangle(o, DVec3::Z, V0, V1, V2, 0.0, f64::INFINITY).is_none());
        assert!(intersect_triangle(o, -DVec3::Z, V0, V1, V2, 0.0, 1.0).is_none());
        assert!(intersect_triangle(o, -DVec3::Z, V0, V1, V2, 1.0, 2.0).is_none());
    }

    #[test]
    fn degenerate_triangle_misses() {
        let o = DVec3::new(0.0, 0.0, -1.0);
        assert!(intersect_triangle(o, DVec3::Z, V0, V0, V2, 0.0, f64::INFINITY).is_none());
    }
}

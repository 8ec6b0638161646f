//! Binned-SAH bounding volume hierarchy used for both the per-mesh (bottom)
//! and the per-instance (top) levels.

use glam::DVec3;

pub const SAH_BINS: usize = 16;
pub const MAX_LEAF_PRIMS: usize = 4;
const TRAVERSAL_COST: f64 = 1.0;
const INTERSECT_COST: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: DVec3,
    pub max: DVec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: DVec3::splat(f64::INFINITY),
        max: DVec3::splat(f64::NEG_INFINITY),
    };

    pub fn from_points(points: &[DVec3]) -> Aabb {
        points.iter().fold(Aabb::EMPTY, |b, &p| b.grow(p))
    }

    pub fn grow(self, p: DVec3) -> Aabb {
        Aabb {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    pub fn union(self, other: Aabb) -> Aabb {
        Aabb {
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        self.min.cmple(other.min).all() && self.max.cmpge(other.max).all()
    }

    pub fn centroid(&self) -> DVec3 {
        (self.min + self.max) * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let d = self.max - self.min;
        2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    /// Slab test. Returns the entry distance when the box overlaps
    /// `[t_min, t_max]`. Both ends are widened by a few ulps so that
    /// primitives lying on a face are never culled.
    #[inline]
    pub fn hit(&self, origin: DVec3, inv_dir: DVec3, t_min: f64, t_max: f64) -> Option<f64> {
        let t0 = (self.min - origin) * inv_dir;
        let t1 = (self.max - origin) * inv_dir;
        // f64::min/max drop NaN operands (0 * inf), which leaves that axis unbounded.
        let near = t0.x.min(t1.x).max(t0.y.min(t1.y)).max(t0.z.min(t1.z));
        let far = t0.x.max(t1.x).min(t0.y.max(t1.y)).min(t0.z.max(t1.z));
        let slack = |x: f64| {
            if x.is_finite() {
                x.abs() * 4.0 * f64::EPSILON
            } else {
                0.0
            }
        };
        let near = (near - slack(near)).max(t_min);
        let far = (far + slack(far)).min(t_max);
        (near <= far).then_some(near)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    /// Leaf: offset into `prim_indices`. Interior: left child node.
    pub first: u32,
    /// Leaf primitive count; zero for interior nodes.
    pub count: u32,
    /// Right child node for interior nodes.
    pub right: u32,
}

impl BvhNode {
    pub fn is_leaf(&self) -> bool {
        self.count > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bvh {
    pub nodes: Vec<BvhNode>,
    pub prim_indices: Vec<u32>,
}

#[derive(Clone, Copy)]
struct Bin {
    bounds: Aabb,
    count: usize,
}

impl Bvh {
    /// Builds a binary hierarchy over primitive bounds. Panics when `bounds`
    /// is empty or contains non-finite boxes.
    pub fn build(bounds: &[Aabb]) -> Bvh {
        assert!(!bounds.is_empty(), "BVH needs at least one primitive");
        assert!(
            bounds
                .iter()
                .all(|b| b.min.is_finite() && b.max.is_finite() && !b.is_empty()),
            "BVH primitive bounds must be finite"
        );
        let centroids: Vec<DVec3> = bounds.iter().map(Aabb::centroid).collect();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * bounds.len()),
            prim_indices: (0..bounds.len() as u32).collect(),
        };
        bvh.nodes.push(BvhNode {
            bounds: Aabb::EMPTY,
            first: 0,
            count: 0,
            right: 0,
        });
        let mut stack = vec![(0usize, 0usize, bounds.len())];
        while let Some((node, start, end)) = stack.pop() {
            let node_bounds = bvh.prim_indices[start..end]
                .iter()
                .fold(Aabb::EMPTY, |b, &p| b.union(bounds[p as usize]));
            bvh.nodes[node].bounds = node_bounds;
            let count = end - start;
            let split = if count > 1 {
                bvh.choose_split(start, end, bounds, &centroids, node_bounds)
            } else {
                None
            };
            let mid = match split {
                Some(mid) => mid,
                None if count <= MAX_LEAF_PRIMS => {
                    bvh.nodes[node].first = start as u32;
                    bvh.nodes[node].count = count as u32;
                    continue;
                }
                // Coincident centroids: split by position in the list.
                None => start + count / 2,
            };
            let left = bvh.nodes.len();
            let blank = bvh.nodes[node];
            bvh.nodes.push(blank);
            bvh.nodes.push(blank);
            bvh.nodes[node].first = left as u32;
            bvh.nodes[node].right = (left + 1) as u32;
            bvh.nodes[node].count = 0;
            stack.push((left + 1, mid, end));
            stack.push((left, start, mid));
        }
        bvh
    }

    /// Returns the partition point of the best SAH split, or `None` when a
    /// leaf is at least as cheap (and small enough) or no split separates
    /// the centroids.
    fn choose_split(
        &mut self,
        start: usize,
        end: usize,
        bounds: &[Aabb],
        centroids: &[DVec3],
        node_bounds: Aabb,
    ) -> Option<usize> {
        let prims = &self.prim_indices[start..end];
        let cbounds = prims.iter().fold(Aabb::EMPTY, |b, &p| b.grow(centroids[p as usize]));
        let extent = cbounds.max - cbounds.min;
        let count = prims.len();
        let bin_of = |c: f64, axis: usize| -> usize {
            let rel = (c - cbounds.min[axis]) / extent[axis];
            ((rel * SAH_BINS as f64) as usize).min(SAH_BINS - 1)
        };

        let mut best: Option<(f64, usize, usize)> = None;
        for axis in 0..3 {
            if !(extent[axis] > 0.0) {
                continue;
            }
            let mut bins = [Bin {
                bounds: Aabb::EMPTY,
                count: 0,
            }; SAH_BINS];
            for &p in prims {
                let b = bin_of(centroids[p as usize][axis], axis);
                bins[b].count += 1;
                bins[b].bounds = bins[b].bounds.union(bounds[p as usize]);
            }
            // Suffix sweep for right-hand sides, prefix sweep for the left.
            let mut right_area = [0.0; SAH_BINS];
            let mut right_count = [0usize; SAH_BINS];
            let mut acc = Aabb::EMPTY;
            let mut n = 0;
            for i in (1..SAH_BINS).rev() {
                acc = acc.union(bins[i].bounds);
                n += bins[i].count;
                right_area[i] = acc.surface_area();
                right_count[i] = n;
            }
            let mut acc = Aabb::EMPTY;
            let mut n = 0;
            for split in 1..SAH_BINS {
                acc = acc.union(bins[split - 1].bounds);
                n += bins[split - 1].count;
                if n == 0 || right_count[split] == 0 {
                    continue;
                }
                let cost = acc.surface_area() * n as f64 + right_area[split] * right_count[split] as f64;
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, axis, split));
                }
            }
        }

        let (cost, axis, split) = best?;
        let parent_area = node_bounds.surface_area();
        let split_cost = if parent_area > 0.0 {
            TRAVERSAL_COST + INTERSECT_COST * cost / parent_area
        } else {
            TRAVERSAL_COST + INTERSECT_COST * count as f64
        };
        if count <= MAX_LEAF_PRIMS && split_cost >= INTERSECT_COST * count as f64 {
            return None;
        }

        let (left, right): (Vec<u32>, Vec<u32>) = prims
            .iter()
            .partition(|&&p| bin_of(centroids[p as usize][axis], axis) < split);
        let mid = start + left.len();
        self.prim_indices[start..mid].copy_from_slice(&left);
        self.prim_indices[mid..end].copy_from_slice(&right);
        Some(mid)
    }

    /// Depth-first traversal in near-child-first order. `visit` receives a
    /// primitive id and the current closest distance, which it may shrink;
    /// returning `true` stops the traversal.
    ///
    /// Nodes are culled only when their entry distance strictly exceeds the
    /// current closest distance, so primitives tied at that distance are
    /// still visited.
    #[inline]
    pub fn traverse<F>(&self, origin: DVec3, dir: DVec3, t_min: f64, t_max: &mut f64, mut visit: F)
    where
        F: FnMut(u32, &mut f64) -> bool,
    {
        let inv_dir = dir.recip();
        let mut stack = [0u32; 128];
        let mut sp = 0usize;
        if self.nodes[0].bounds.hit(origin, inv_dir, t_min, *t_max).is_none() {
            return;
        }
        let mut current = 0u32;
        loop {
            let node = &self.nodes[current as usize];
            if node.is_leaf() {
                let first = node.first as usize;
                for &p in &self.prim_indices[first..first + node.count as usize] {
                    if visit(p, t_max) {
                        return;
                    }
                }
            } else {
                let l = node.first;
                let r = node.right;
                let hl = self.nodes[l as usize].bounds.hit(origin, inv_dir, t_min, *t_max);
                let hr = self.nodes[r as usize].bounds.hit(origin, inv_dir, t_min, *t_max);
                match (hl, hr) {
                    (Some(tl), Some(tr)) => {
                        let (near, far) = if tl <= tr { (l, r) } else { (r, l) };
                        stack[sp] = far;
                        sp += 1;
                        current = near;
                        continue;
                    }
                    (Some(_), None) => {
                        current = l;
                        continue;
                    }
                    (None, Some(_)) => {
                        current = r;
                        continue;
                    }
                    (None, None) => {}
                }
            }
            // Pop, re-checking nodes against the (possibly shrunk) range.
            loop {
                if sp == 0 {
                    return;
                }
                sp -= 1;
                let n = stack[sp];
                if self.nodes[n as usize]
                    .bounds
                    .hit(origin, inv_dir, t_min, *t_max)
                    .is_some()
                {
                    current = n;
                    break;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(bvh: &Bvh, n: usize) -> usize {
            let node = &bvh.nodes[n];
            if node.is_leaf() {
                1
            } else {
                1 + walk(bvh, node.first as usize).max(walk(bvh, node.right as usize))
            }
        }
        walk(self, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box_at(x: f64) -> Aabb {
        Aabb {
            min: DVec3::new(x, 0.0, 0.0),
            max: DVec3::new(x + 1.0, 1.0, 1.0),
        }
    }

    #[test]
    fn single_primitive_is_one_leaf() {
        let bvh = Bvh::build(&[unit_box_at(0.0)]);
        assert_eq!(bvh.nodes.len(), 1);
        assert!(bvh.nodes[0].is_leaf());
        assert_eq!(bvh.prim_indices, vec![0]);
    }

    #[test]
    fn coincident_boxes_still_respect_leaf_cap() {
        let boxes = vec![unit_box_at(0.0); 37];
        let bvh = Bvh::build(&boxes);
        for n in &bvh.nodes {
            if n.is_leaf() {
                assert!(n.count as usize <= MAX_LEAF_PRIMS);
            }
        }
        let mut ids = bvh.prim_indices.clone();
        ids.sort_unstable();
        assert_eq!(ids, (0..37).collect::<Vec<_>>());
    }

    #[test]
    fn slab_test_handles_axis_parallel_rays() {
        let b = unit_box_at(0.0);
        let o = DVec3::new(0.5, 0.5, -1.0);
        let inv = DVec3::Z.recip();
        assert_eq!(b.hit(o, inv, 0.0, f64::INFINITY).map(|t| t.round()), Some(1.0));
        let o = DVec3::new(2.0, 0.5, -1.0);
        assert!(b.hit(o, inv, 0.0, f64::INFINITY).is_none());
    }

    #[test]
    fn flat_box_is_hit() {
        let b = Aabb {
            min: DVec3::new(-1.0, 0.0, -1.0),
            max: DVec3::new(1.0, 0.0, 1.0),
        };
        let inv = DVec3::new(0.1, -1.0, 0.2).normalize().recip();
        assert!(b.hit(DVec3::new(0.0, 1.0, 0.0), inv, 1e-4, f64::INFINITY).is_some());
    }
}

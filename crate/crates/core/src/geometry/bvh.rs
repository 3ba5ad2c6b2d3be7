//! Binned-SAH bounding volume hierarchy over every triangle of a scene.

use glam::Vec3;

use super::{Aabb, Hit, Ray, Scene, SurfacePoint};

const BINS: usize = 12;
const MAX_LEAF: usize = 4;
const MAX_SAH_DEPTH: usize = 40;
const STACK: usize = 96;

#[derive(Debug, Clone, Copy)]
struct Tri {
    v0: Vec3,
    e1: Vec3,
    e2: Vec3,
    mesh_id: u32,
    tri_id: u32,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    /// Leaf: first triangle. Interior: index of the second child (the first
    /// child always follows its parent).
    offset: u32,
    count: u32,
}

/// Immutable ray-query accelerator. Safe to share between threads.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    tris: Vec<Tri>,
}

/// Möller-Trumbore. Returns `(t, b1, b2)` for hits with `t` in `[t_min, t_max]`.
#[inline]
pub fn intersect_triangle(ray: &Ray, v0: Vec3, e1: Vec3, e2: Vec3) -> Option<(f32, f32, f32)> {
    let p = ray.dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-12 {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - v0;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = ray.dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t >= ray.t_min && t <= ray.t_max).then_some((t, u, v))
}

#[inline]
fn hit_box(b: &Aabb, origin: Vec3, inv_dir: Vec3, t_min: f32, t_max: f32) -> Option<f32> {
    let t0 = (b.min - origin) * inv_dir;
    let t1 = (b.max - origin) * inv_dir;
    let near = t0.min(t1).max_element().max(t_min);
    let far = t0.max(t1).min_element().min(t_max);
    // NaN from 0 * inf compares false and is treated as a miss-free overlap.
    (near <= far).then_some(near)
}

struct BuildItem {
    bounds: Aabb,
    centroid: Vec3,
    tri: Tri,
}

impl Bvh {
    pub fn build(scene: &Scene) -> Bvh {
        let mut items: Vec<BuildItem> = Vec::with_capacity(scene.triangle_count());
        for (mi, mesh) in scene.meshes().iter().enumerate() {
            for t in 0..mesh.triangle_count() {
                let [a, b, c] = mesh.triangle(t);
                let mut bounds = Aabb::EMPTY;
                bounds.grow(a);
                bounds.grow(b);
                bounds.grow(c);
                items.push(BuildItem {
                    bounds,
                    centroid: (a + b + c) / 3.0,
                    tri: Tri {
                        v0: a,
                        e1: b - a,
                        e2: c - a,
                        mesh_id: mi as u32,
                        tri_id: t as u32,
                    },
                });
            }
        }
        let mut nodes = Vec::with_capacity(2 * items.len().max(1));
        let n = items.len();
        build_recursive(&mut items, 0, n, 0, &mut nodes);
        Bvh {
            nodes,
            tris: items.into_iter().map(|i| i.tri).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root_is_leaf(&self) -> bool {
        self.nodes[0].count > 0
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Nearest hit in `[t_min, t_max]`.
    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        let inv_dir = ray.dir.recip();
        let mut best: Option<(usize, f32, f32, f32)> = None;
        let mut t_max = ray.t_max;
        let mut stack = [0u32; STACK];
        let mut sp = 0usize;
        let mut node = 0usize;
        loop {
            let n = &self.nodes[node];
            if n.count > 0 {
                let first = n.offset as usize;
                for i in first..first + n.count as usize {
                    let tr = &self.tris[i];
                    let r = Ray { t_max, ..*ray };
                    if let Some((t, u, v)) = intersect_triangle(&r, tr.v0, tr.e1, tr.e2) {
                        t_max = t;
                        best = Some((i, t, u, v));
                    }
                }
            } else {
                let a = node + 1;
                let b = n.offset as usize;
                let ha = hit_box(&self.nodes[a].bounds, ray.origin, inv_dir, ray.t_min, t_max);
                let hb = hit_box(&self.nodes[b].bounds, ray.origin, inv_dir, ray.t_min, t_max);
                match (ha, hb) {
                    (Some(ta), Some(tb)) => {
                        let (near, far) = if ta <= tb { (a, b) } else { (b, a) };
                        stack[sp] = far as u32;
                        sp += 1;
                        node = near;
                        continue;
                    }
                    (Some(_), None) => {
                        node = a;
                        continue;
                    }
                    (None, Some(_)) => {
                        node = b;
                        continue;
                    }
                    (None, None) => {}
                }
            }
            if sp == 0 {
                break;
            }
            sp -= 1;
            node = stack[sp] as usize;
        }
        best.map(|(i, t, u, v)| {
            let tr = &self.tris[i];
            let bary = [(1.0 - u - v).max(0.0), u, v];
            Hit {
                point: SurfacePoint::new(tr.mesh_id, tr.tri_id, bary),
                t,
                geo_normal: tr.e1.cross(tr.e2).normalize_or_zero(),
                position: tr.v0 + u * tr.e1 + v * tr.e2,
            }
        })
    }

    /// True iff any triangle is hit in `[t_min, t_max]`.
    pub fn occluded(&self, ray: &Ray) -> bool {
        let inv_dir = ray.dir.recip();
        let mut stack = [0u32; STACK];
        let mut sp = 0usize;
        let mut node = 0usize;
        loop {
            let n = &self.nodes[node];
            if hit_box(&n.bounds, ray.origin, inv_dir, ray.t_min, ray.t_max).is_some() {
                if n.count > 0 {
                    let first = n.offset as usize;
                    for tr in &self.tris[first..first + n.count as usize] {
                        if intersect_triangle(ray, tr.v0, tr.e1, tr.e2).is_some() {
                            return true;
                        }
                    }
                } else {
                    stack[sp] = n.offset;
                    sp += 1;
                    node += 1;
                    continue;
                }
            }
            if sp == 0 {
                return false;
            }
            sp -= 1;
            node = stack[sp] as usize;
        }
    }
}

fn build_recursive(items: &mut [BuildItem], start: usize, end: usize, depth: usize, nodes: &mut Vec<Node>) -> usize {
    let idx = nodes.len();
    let mut bounds = Aabb::EMPTY;
    let mut cbounds = Aabb::EMPTY;
    for it in &items[start..end] {
        bounds = bounds.union(&it.bounds);
        cbounds.grow(it.centroid);
    }
    nodes.push(Node {
        bounds,
        offset: start as u32,
        count: (end - start) as u32,
    });
    let count = end - start;
    if count <= MAX_LEAF {
        return idx;
    }

    let ext = cbounds.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let lo = cbounds.min[axis];
    let span = ext[axis];
    // Median splits past MAX_SAH_DEPTH bound the tree depth by the traversal stack.
    let sah_split = if span > 0.0 && depth < MAX_SAH_DEPTH {
        let bin_of = |c: f32| (((c - lo) / span * BINS as f32) as usize).min(BINS - 1);
        let mut bin_bounds = [Aabb::EMPTY; BINS];
        let mut bin_count = [0usize; BINS];
        for it in &items[start..end] {
            let b = bin_of(it.centroid[axis]);
            bin_bounds[b] = bin_bounds[b].union(&it.bounds);
            bin_count[b] += 1;
        }
        let mut best = (f32::INFINITY, BINS / 2);
        for split in 1..BINS {
            let (mut lb, mut rb) = (Aabb::EMPTY, Aabb::EMPTY);
            let (mut lc, mut rc) = (0, 0);
            for b in 0..split {
                lb = lb.union(&bin_bounds[b]);
                lc += bin_count[b];
            }
            for b in split..BINS {
                rb = rb.union(&bin_bounds[b]);
                rc += bin_count[b];
            }
            if lc == 0 || rc == 0 {
                continue;
            }
            let cost = lb.surface_area() * lc as f32 + rb.surface_area() * rc as f32;
            if cost < best.0 {
                best = (cost, split);
            }
        }
        let slice = &mut items[start..end];
        let mut left = 0;
        for i in 0..slice.len() {
            if bin_of(slice[i].centroid[axis]) < best.1 {
                slice.swap(i, left);
                left += 1;
            }
        }
        (left > 0 && left < count).then_some(start + left)
    } else {
        None
    };
    let mid = sah_split.unwrap_or_else(|| {
        items[start..end].sort_by(|a, b| a.centroid[axis].total_cmp(&b.centroid[axis]));
        start + count / 2
    });

    build_recursive(items, start, mid, depth + 1, nodes);
    let right = build_recursive(items, mid, end, depth + 1, nodes);
    nodes[idx].offset = right as u32;
    nodes[idx].count = 0;
    idx
}

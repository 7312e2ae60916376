//! Mesh–mesh intersection.
//!
//! Two meshes collide when their AABBs overlap by more than the contact
//! tolerance on every axis and either their surfaces intersect or one lies
//! inside the other. The main path uses the interval-overlap triangle test
//! and ray-parity containment; [`reference_meshes_collide`] answers the same
//! question with edge-segment tests and winding numbers, and is only meant
//! for validation.

use nalgebra::{Point3, Vector3};

use crate::geometry::{Aabb, TriangleMesh};

/// Stacked or adjacent objects whose boxes overlap by at most this much on
/// some axis are in contact, not colliding.
pub const CONTACT_TOLERANCE: f64 = 1e-3;

/// Plane distances below this are treated as zero (meters).
const PLANE_EPS: f64 = 1e-12;

type Tri = [Point3<f64>; 3];

fn tri_aabb(t: &Tri) -> Aabb {
    Aabb::from_points(t)
}

/// Broad-phase gate shared by both narrow phases.
pub fn boxes_overlap_beyond_contact(a: &Aabb, b: &Aabb) -> bool {
    a.overlap(b).iter().all(|&o| o > CONTACT_TOLERANCE)
}

fn unit_normal(t: &Tri) -> Option<Vector3<f64>> {
    let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
    let len = n.norm();
    (len > 1e-300).then(|| n / len)
}

fn plane_distances(t: &Tri, n: &Vector3<f64>, origin: &Point3<f64>) -> [f64; 3] {
    t.map(|p| {
        let d = n.dot(&(p - origin));
        if d.abs() < PLANE_EPS {
            0.0
        } else {
            d
        }
    })
}

fn same_strict_side(d: &[f64; 3]) -> bool {
    (d[0] > 0.0 && d[1] > 0.0 && d[2] > 0.0) || (d[0] < 0.0 && d[1] < 0.0 && d[2] < 0.0)
}

/// Interval where a triangle crosses the other triangle's plane, as
/// parameters along the intersection line.
fn crossing_interval(p: [f64; 3], d: [f64; 3]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut take = |t: f64| {
        lo = lo.min(t);
        hi = hi.max(t);
    };
    for i in 0..3 {
        if d[i] == 0.0 {
            take(p[i]);
        }
    }
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        if d[i] * d[j] < 0.0 {
            take(p[i] + (p[j] - p[i]) * d[i] / (d[i] - d[j]));
        }
    }
    (lo, hi)
}

/// Triangle–triangle intersection (touching counts).
pub fn tri_tri_intersect(t1: &Tri, t2: &Tri) -> bool {
    let (Some(n1), Some(n2)) = (unit_normal(t1), unit_normal(t2)) else {
        return false;
    };
    let d1 = plane_distances(t1, &n2, &t2[0]);
    if same_strict_side(&d1) {
        return false;
    }
    let d2 = plane_distances(t2, &n1, &t1[0]);
    if same_strict_side(&d2) {
        return false;
    }
    if d1 == [0.0; 3] || d2 == [0.0; 3] {
        return coplanar_intersect(t1, t2, &n1);
    }
    let dir = n1.cross(&n2);
    // project onto the dominant axis of the intersection line
    let k = dir.iamax();
    let p1 = t1.map(|p| p[k]);
    let p2 = t2.map(|p| p[k]);
    let (a0, a1) = crossing_interval(p1, d1);
    let (b0, b1) = crossing_interval(p2, d2);
    a0.max(b0) <= a1.min(b1)
}

fn drop_axis(n: &Vector3<f64>) -> (usize, usize) {
    match n.iamax() {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn orient2(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect_2d(p: [f64; 2], q: [f64; 2], r: [f64; 2], s: [f64; 2]) -> bool {
    let o1 = orient2(p, q, r);
    let o2 = orient2(p, q, s);
    let o3 = orient2(r, s, p);
    let o4 = orient2(r, s, q);
    let on = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on(p, q, r))
        || (o2 == 0.0 && on(p, q, s))
        || (o3 == 0.0 && on(r, s, p))
        || (o4 == 0.0 && on(r, s, q))
}

fn point_in_tri_2d(p: [f64; 2], t: &[[f64; 2]; 3]) -> bool {
    let a = orient2(t[0], t[1], p);
    let b = orient2(t[1], t[2], p);
    let c = orient2(t[2], t[0], p);
    (a >= 0.0 && b >= 0.0 && c >= 0.0) || (a <= 0.0 && b <= 0.0 && c <= 0.0)
}

fn coplanar_intersect(t1: &Tri, t2: &Tri, n: &Vector3<f64>) -> bool {
    let (i, j) = drop_axis(n);
    let a = t1.map(|p| [p[i], p[j]]);
    let b = t2.map(|p| [p[i], p[j]]);
    for e in 0..3 {
        for f in 0..3 {
            if segments_intersect_2d(a[e], a[(e + 1) % 3], b[f], b[(f + 1) % 3]) {
                return true;
            }
        }
    }
    point_in_tri_2d(a[0], &b) || point_in_tri_2d(b[0], &a)
}

/// Fixed direction for parity rays, chosen off every lattice diagonal so
/// rays from grid-aligned points do not graze edges or vertices.
const RAY_DIR: [f64; 3] = [0.3141592653589793, 0.5772156649015329, 0.7536621508893257];

fn ray_hits(origin: &Point3<f64>, dir: &Vector3<f64>, t: &Tri) -> bool {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return false;
    }
    let inv = 1.0 / det;
    let s = origin - t[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    e2.dot(&q) * inv > 0.0
}

/// Ray-parity inside test for a closed mesh.
pub fn point_inside_mesh(p: &Point3<f64>, mesh: &TriangleMesh) -> bool {
    let dir = Vector3::from(RAY_DIR).normalize();
    let hits = (0..mesh.triangles().len())
        .filter(|&i| ray_hits(p, &dir, &mesh.triangle(i)))
        .count();
    hits % 2 == 1
}

/// Indices of triangles whose boxes touch `region`.
fn triangles_in(mesh: &TriangleMesh, region: &Aabb) -> Vec<(Tri, Aabb)> {
    (0..mesh.triangles().len())
        .map(|i| mesh.triangle(i))
        .map(|t| (t, tri_aabb(&t)))
        .filter(|(_, b)| b.intersection(region).is_some())
        .collect()
}

fn contained_vertex(inner: &TriangleMesh, outer: &TriangleMesh, region: &Aabb) -> bool {
    inner
        .vertices()
        .iter()
        .filter(|v| region.contains_point(v))
        .any(|v| point_inside_mesh(v, outer))
}

/// Narrow phase for two meshes already past the broad-phase gate.
pub fn meshes_collide(a: &TriangleMesh, b: &TriangleMesh) -> bool {
    let (ba, bb) = (a.aabb(), b.aabb());
    let Some(region) = ba.intersection(&bb) else {
        return false;
    };
    let ta = triangles_in(a, &region);
    let tb = triangles_in(b, &region);
    for (t1, b1) in &ta {
        for (t2, b2) in &tb {
            if b1.intersection(b2).is_some() && tri_tri_intersect(t1, t2) {
                return true;
            }
        }
    }
    contained_vertex(a, b, &region) || contained_vertex(b, a, &region)
}

/// Full predicate: broad-phase gate and narrow phase.
pub fn instances_collide(a: &TriangleMesh, b: &TriangleMesh) -> bool {
    boxes_overlap_beyond_contact(&a.aabb(), &b.aabb()) && meshes_collide(a, b)
}

// Reference path.

fn segment_hits_triangle(p: &Point3<f64>, q: &Point3<f64>, t: &Tri) -> bool {
    let Some(n) = unit_normal(t) else {
        return false;
    };
    let dp = n.dot(&(p - t[0]));
    let dq = n.dot(&(q - t[0]));
    let dp = if dp.abs() < PLANE_EPS { 0.0 } else { dp };
    let dq = if dq.abs() < PLANE_EPS { 0.0 } else { dq };
    if dp == 0.0 && dq == 0.0 {
        let (i, j) = drop_axis(&n);
        let tt = t.map(|v| [v[i], v[j]]);
        let (a, b) = ([p[i], p[j]], [q[i], q[j]]);
        return (0..3).any(|e| segments_intersect_2d(a, b, tt[e], tt[(e + 1) % 3]))
            || point_in_tri_2d(a, &tt);
    }
    if dp * dq > 0.0 {
        return false;
    }
    let s = dp / (dp - dq);
    let x = p + (q - p) * s;
    // barycentric inside test in 3D
    let v0 = t[1] - t[0];
    let v1 = t[2] - t[0];
    let v2 = x - t[0];
    let d00 = v0.dot(&v0);
    let d01 = v0.dot(&v1);
    let d11 = v1.dot(&v1);
    let d20 = v2.dot(&v0);
    let d21 = v2.dot(&v1);
    let den = d00 * d11 - d01 * d01;
    let v = (d11 * d20 - d01 * d21) / den;
    let w = (d00 * d21 - d01 * d20) / den;
    v >= 0.0 && w >= 0.0 && v + w <= 1.0
}

fn reference_tri_tri(t1: &Tri, t2: &Tri) -> bool {
    (0..3).any(|e| segment_hits_triangle(&t1[e], &t1[(e + 1) % 3], t2))
        || (0..3).any(|e| segment_hits_triangle(&t2[e], &t2[(e + 1) % 3], t1))
}

/// Generalized winding number (solid-angle sum over 4π).
pub fn winding_number(p: &Point3<f64>, mesh: &TriangleMesh) -> f64 {
    let mut total = 0.0;
    for i in 0..mesh.triangles().len() {
        let t = mesh.triangle(i);
        let a = t[0] - p;
        let b = t[1] - p;
        let c = t[2] - p;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        total += 2.0 * num.atan2(den);
    }
    total / (4.0 * std::f64::consts::PI)
}

/// Exhaustive all-triangle-pairs check with winding-number containment.
pub fn reference_meshes_collide(a: &TriangleMesh, b: &TriangleMesh) -> bool {
    if !boxes_overlap_beyond_contact(&a.aabb(), &b.aabb()) {
        return false;
    }
    for i in 0..a.triangles().len() {
        let t1 = a.triangle(i);
        for j in 0..b.triangles().len() {
            if reference_tri_tri(&t1, &b.triangle(j)) {
                return true;
            }
        }
    }
    a.vertices().iter().any(|v| winding_number(v, b).abs() > 0.5)
        || b.vertices().iter().any(|v| winding_number(v, a).abs() > 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64, z: f64) -> Point3<f64> {
        Point3::new(x, y, z)
    }

    fn cube_at(x: f64, side: f64) -> TriangleMesh {
        TriangleMesh::cuboid(p(x, 0.0, 0.0), p(x + side, side, side))
    }

    #[test]
    fn crossing_triangles() {
        let a = [p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.0, 1.0, 0.0)];
        let b = [p(0.2, 0.2, -1.0), p(0.2, 0.2, 1.0), p(0.3, 0.1, 0.0)];
        assert!(tri_tri_intersect(&a, &b));
        let far = [p(5.0, 5.0, -1.0), p(5.0, 5.0, 1.0), p(6.0, 5.0, 0.0)];
        assert!(!tri_tri_intersect(&a, &far));
        // coplanar overlapping and disjoint
        let c = [p(0.5, 0.5, 0.0), p(-0.2, 0.1, 0.0), p(0.1, -0.3, 0.0)];
        assert!(tri_tri_intersect(&a, &c));
        let d = [p(2.0, 2.0, 0.0), p(3.0, 2.0, 0.0), p(2.0, 3.0, 0.0)];
        assert!(!tri_tri_intersect(&a, &d));
    }

    #[test]
    fn cube_pairs() {
        assert!(!instances_collide(&cube_at(0.0, 1.0), &cube_at(2.0, 1.0)));
        assert!(instances_collide(&cube_at(0.0, 1.0), &cube_at(0.5, 1.0)));
        // face contact within tolerance is not a collision
        assert!(!instances_collide(&cube_at(0.0, 1.0), &cube_at(0.9995, 1.0)));
    }

    #[test]
    fn containment_counts() {
        let outer = TriangleMesh::cuboid(p(0.0, 0.0, 0.0), p(1.0, 1.0, 1.0));
        let inner = TriangleMesh::cuboid(p(0.4, 0.4, 0.4), p(0.6, 0.6, 0.6));
        assert!(instances_collide(&outer, &inner));
        assert!(instances_collide(&inner, &outer));
        assert!(reference_meshes_collide(&outer, &inner));
        assert!(point_inside_mesh(&p(0.5, 0.5, 0.5), &outer));
        assert!(!point_inside_mesh(&p(1.5, 0.5, 0.5), &outer));
        assert!((winding_number(&p(0.5, 0.5, 0.5), &outer) - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn tri_tri_agrees_with_reference(c in proptest::collection::vec(-1.0f64..1.0, 18)) {
            let a = [p(c[0], c[1], c[2]), p(c[3], c[4], c[5]), p(c[6], c[7], c[8])];
            let b = [p(c[9], c[10], c[11]), p(c[12], c[13], c[14]), p(c[15], c[16], c[17])];
            prop_assert_eq!(tri_tri_intersect(&a, &b), reference_tri_tri(&a, &b));
            prop_assert_eq!(tri_tri_intersect(&a, &b), tri_tri_intersect(&b, &a));
        }
    }
}

//! Incremental 3-D convex hull (volume and surface area).
//!
//! Points are inserted in lexicographic order so the facet list, and every
//! tie broken on the way, is independent of the caller's point order.

use std::cmp::Ordering;
use std::collections::HashMap;

use nalgebra::Vector3;

use crate::scalar::Real;

/// Distance below which points are treated as coplanar / collinear / coincident, m.
pub const COPLANAR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Hull<T: Real> {
    pub volume: T,
    pub area: T,
    /// Outward-oriented triangles, indices into `vertices`.
    pub faces: Vec<[usize; 3]>,
    pub vertices: Vec<Vector3<T>>,
}

#[derive(Debug, Clone)]
struct Face<T: Real> {
    v: [usize; 3],
    normal: Vector3<T>,
    offset: T,
    alive: bool,
}

fn lexicographic<T: Real>(a: &Vector3<T>, b: &Vector3<T>) -> Ordering {
    for i in 0..3 {
        match a[i].partial_cmp(&b[i]) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

impl<T: Real> Face<T> {
    /// Face with the winding given by `v` (normal by the right-hand rule).
    fn new(v: [usize; 3], pts: &[Vector3<T>]) -> Self {
        let mut normal = (pts[v[1]] - pts[v[0]]).cross(&(pts[v[2]] - pts[v[0]]));
        let len = normal.norm();
        if len > T::zero() {
            normal /= len;
        }
        let offset = normal.dot(&pts[v[0]]);
        Self {
            v,
            normal,
            offset,
            alive: true,
        }
    }

    /// Face wound so that `inside` lies behind it.
    fn facing_away(v: [usize; 3], pts: &[Vector3<T>], inside: &Vector3<T>) -> Self {
        let f = Self::new(v, pts);
        if f.distance(inside) > T::zero() {
            Self::new([v[0], v[2], v[1]], pts)
        } else {
            f
        }
    }

    fn distance(&self, p: &Vector3<T>) -> T {
        self.normal.dot(p) - self.offset
    }
}

/// Area of the planar convex hull of points lying (within tolerance) in a plane
/// with unit normal `normal`.
fn planar_hull_area<T: Real>(pts: &[Vector3<T>], normal: &Vector3<T>) -> T {
    let seed = if normal.x.abs() < T::of(0.9) {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = normal.cross(&seed).normalize();
    let w = normal.cross(&u);
    let mut flat: Vec<(T, T)> = pts.iter().map(|p| (p.dot(&u), p.dot(&w))).collect();
    flat.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
    });
    let cross =
        |o: (T, T), a: (T, T), b: (T, T)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    // Andrew's monotone chain.
    let mut hull: Vec<(T, T)> = Vec::with_capacity(flat.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(T, T)>> = if pass == 0 {
            Box::new(flat.iter())
        } else {
            Box::new(flat.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero()
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let mut twice = T::zero();
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        twice += a.0 * b.1 - b.0 * a.1;
    }
    twice.abs() * T::of(0.5)
}

impl<T: Real> Hull<T> {
    /// Convex hull of `points`.
    ///
    /// Degenerate input never fails: a planar set has zero volume and an area
    /// of twice its planar hull (both sides), fewer than three independent
    /// points give zero for both.
    pub fn build(points: &[Vector3<T>]) -> Self {
        let tol = T::of(COPLANAR_TOLERANCE);
        let mut pts: Vec<Vector3<T>> = points
            .iter()
            .filter(|p| p.iter().all(|c| c.is_finite()))
            .copied()
            .collect();
        pts.sort_by(lexicographic);
        pts.dedup_by(|a, b| (*a - *b).norm() <= tol);

        let empty = |pts: Vec<Vector3<T>>, area: T| Self {
            volume: T::zero(),
            area,
            faces: Vec::new(),
            vertices: pts,
        };
        if pts.len() < 3 {
            return empty(pts, T::zero());
        }

        // Initial simplex from the first independent points in sorted order.
        let i0 = 0;
        let i1 = match (1..pts.len()).find(|&i| (pts[i] - pts[i0]).norm() > tol) {
            Some(i) => i,
            None => return empty(pts, T::zero()),
        };
        let axis = (pts[i1] - pts[i0]).normalize();
        let i2 = match (1..pts.len()).find(|&i| (pts[i] - pts[i0]).cross(&axis).norm() > tol) {
            Some(i) => i,
            None => return empty(pts, T::zero()),
        };
        let plane_normal = (pts[i1] - pts[i0]).cross(&(pts[i2] - pts[i0])).normalize();
        let i3 = match (1..pts.len()).find(|&i| (pts[i] - pts[i0]).dot(&plane_normal).abs() > tol) {
            Some(i) => i,
            None => {
                let area = T::of(2.0) * planar_hull_area(&pts, &plane_normal);
                return empty(pts, area);
            }
        };

        let inside = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) * T::of(0.25);
        let mut faces: Vec<Face<T>> = Vec::new();
        // Directed edge -> owning alive face.
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        let add_face =
            |faces: &mut Vec<Face<T>>, edges: &mut HashMap<(usize, usize), usize>, f: Face<T>| {
                let k = faces.len();
                for e in 0..3 {
                    edges.insert((f.v[e], f.v[(e + 1) % 3]), k);
                }
                faces.push(f);
            };
        for tri in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
            add_face(
                &mut faces,
                &mut edges,
                Face::facing_away(tri, &pts, &inside),
            );
        }
        let seeds = [i0, i1, i2, i3];

        let mut visible: Vec<usize> = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for p in 0..pts.len() {
            if seeds.contains(&p) {
                continue;
            }
            // Most visible face seeds a connected flood over faces that see p.
            let mut best: Option<(usize, T)> = None;
            for (k, f) in faces.iter().enumerate() {
                if !f.alive {
                    continue;
                }
                let d = f.distance(&pts[p]);
                if d > tol && best.is_none_or(|(_, b)| d > b) {
                    best = Some((k, d));
                }
            }
            let Some((first, _)) = best else { continue };
            visible.clear();
            stack.clear();
            stack.push(first);
            faces[first].alive = false;
            while let Some(k) = stack.pop() {
                visible.push(k);
                let v = faces[k].v;
                for e in 0..3 {
                    if let Some(&n) = edges.get(&(v[(e + 1) % 3], v[e])) {
                        if faces[n].alive && faces[n].distance(&pts[p]) > tol {
                            faces[n].alive = false;
                            stack.push(n);
                        }
                    }
                }
            }
            boundary.clear();
            for &k in &visible {
                let v = faces[k].v;
                for e in 0..3 {
                    let (a, b) = (v[e], v[(e + 1) % 3]);
                    let twin_dead = edges.get(&(b, a)).is_none_or(|&n| !faces[n].alive);
                    if !twin_dead {
                        boundary.push((a, b));
                    }
                }
            }
            for &k in &visible {
                let v = faces[k].v;
                for e in 0..3 {
                    edges.remove(&(v[e], v[(e + 1) % 3]));
                }
            }
            for &(a, b) in &boundary {
                add_face(&mut faces, &mut edges, Face::new([a, b, p], &pts));
            }
        }

        let faces: Vec<[usize; 3]> = faces.into_iter().filter(|f| f.alive).map(|f| f.v).collect();
        let sixth = T::of(1.0 / 6.0);
        let half = T::of(0.5);
        let mut volume = T::zero();
        let mut area = T::zero();
        for f in &faces {
            let (a, b, c) = (pts[f[0]] - inside, pts[f[1]] - inside, pts[f[2]] - inside);
            volume += a.dot(&b.cross(&c)) * sixth;
            area += (b - a).cross(&(c - a)).norm() * half;
        }
        Self {
            volume: volume.abs(),
            area,
            faces,
            vertices: pts,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cube(side: f64) -> Vec<Vector3<f64>> {
        let mut v = Vec::new();
        for i in 0..8 {
            v.push(Vector3::new(
                side * (i & 1) as f64,
                side * ((i >> 1) & 1) as f64,
                side * ((i >> 2) & 1) as f64,
            ));
        }
        v
    }

    #[test]
    fn cube_of_side_two() {
        let h = Hull::build(&cube(2.0));
        assert_relative_eq!(h.volume, 8.0, epsilon = 1e-12);
        assert_relative_eq!(h.area, 24.0, epsilon = 1e-12);
    }

    #[test]
    fn unit_cube_with_interior_and_face_points() {
        let mut pts = cube(1.0);
        pts.push(Vector3::new(0.5, 0.5, 0.5));
        pts.push(Vector3::new(0.5, 0.5, 1.0));
        pts.push(Vector3::new(0.25, 0.0, 0.75));
        let h = Hull::build(&pts);
        assert_relative_eq!(h.volume, 1.0, epsilon = 1e-12);
        assert_relative_eq!(h.area, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn coplanar_points_have_zero_volume_and_double_area() {
        let pts: Vec<_> = (0..5)
            .flat_map(|i| (0..5).map(move |j| Vector3::new(i as f64, j as f64, 0.5)))
            .collect();
        let h = Hull::build(&pts);
        assert_eq!(h.volume, 0.0);
        assert_relative_eq!(h.area, 2.0 * 16.0, epsilon = 1e-12);
    }

    #[test]
    fn collinear_and_tiny_inputs() {
        let line: Vec<_> = (0..4).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect();
        assert_eq!(Hull::build(&line).volume, 0.0);
        assert_eq!(Hull::build(&line).area, 0.0);
        assert_eq!(Hull::build(&line[..2]).area, 0.0);
        assert_eq!(Hull::<f64>::build(&[]).volume, 0.0);
    }

    #[test]
    fn regular_tetrahedron() {
        let pts = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
        ];
        let h = Hull::build(&pts);
        assert_relative_eq!(h.volume, 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(h.area, 1.5 + 3f64.sqrt() / 2.0, epsilon = 1e-12);
        assert_eq!(h.faces.len(), 4);
    }

    fn cloud() -> impl Strategy<Value = Vec<[f64; 3]>> {
        prop::collection::vec(prop::array::uniform3(-5.0f64..5.0), 5..60)
    }

    proptest! {
        #[test]
        fn volume_invariant_under_rigid_motion(pts in cloud(), angles in prop::array::uniform3(-3.0f64..3.0), shift in prop::array::uniform3(-50.0f64..50.0)) {
            let p: Vec<_> = pts.iter().map(|a| Vector3::new(a[0], a[1], a[2])).collect();
            let r = nalgebra::Rotation3::from_euler_angles(angles[0], angles[1], angles[2]);
            let t = Vector3::new(shift[0], shift[1], shift[2]);
            let q: Vec<_> = p.iter().map(|x| r * x + t).collect();
            let (a, b) = (Hull::build(&p), Hull::build(&q));
            prop_assert!((a.volume - b.volume).abs() <= 1e-9 * a.volume.max(1.0));
            prop_assert!((a.area - b.area).abs() <= 1e-9 * a.area.max(1.0));
        }

        #[test]
        fn adding_a_point_never_shrinks_volume(pts in cloud(), extra in prop::array::uniform3(-8.0f64..8.0)) {
            let mut p: Vec<_> = pts.iter().map(|a| Vector3::new(a[0], a[1], a[2])).collect();
            let before = Hull::build(&p).volume;
            p.push(Vector3::new(extra[0], extra[1], extra[2]));
            prop_assert!(Hull::build(&p).volume >= before * (1.0 - 1e-12));
        }

        #[test]
        fn input_order_does_not_matter(pts in cloud()) {
            let p: Vec<_> = pts.iter().map(|a| Vector3::new(a[0], a[1], a[2])).collect();
            let mut rev = p.clone();
            rev.reverse();
            prop_assert_eq!(Hull::build(&p), Hull::build(&rev));
        }

        #[test]
        fn every_point_is_inside_every_face(pts in cloud()) {
            let p: Vec<_> = pts.iter().map(|a| Vector3::new(a[0], a[1], a[2])).collect();
            let h = Hull::build(&p);
            for f in &h.faces {
                let (a, b, c) = (h.vertices[f[0]], h.vertices[f[1]], h.vertices[f[2]]);
                let n = (b - a).cross(&(c - a));
                let n = n / n.norm().max(1e-300);
                for x in &p {
                    prop_assert!(n.dot(&(x - a)) <= 1e-7);
                }
            }
        }
    }
}

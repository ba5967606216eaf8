//! Triangulated surfaces: region boundaries, domain boundaries and the a/c
//! interface.

use std::collections::HashMap;

use crate::geom::{Aabb, Vec3};
use crate::mesh::edge_key;
use crate::predicates::orient3d;
use crate::Point3;

/// A triangle soup with shared vertices. `source[i]` is the index of point
/// `i` in the mesh it came from (or `usize::MAX` when it has no origin).
/// `apex[t]` optionally records the opposite vertex of the tet that owned
/// triangle `t` (it lies on the inner side).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Surface {
    pub points: Vec<Point3>,
    pub tris: Vec<[usize; 3]>,
    pub source: Vec<usize>,
    pub apex: Vec<Option<Point3>>,
}

impl Surface {
    /// Builds a compact surface from faces given by mesh node indices.
    pub fn from_mesh_faces(
        nodes: &[Point3],
        faces: impl IntoIterator<Item = ([usize; 3], Option<usize>)>,
    ) -> Self {
        let mut map: HashMap<usize, usize> = HashMap::new();
        let mut s = Surface::default();
        for (tri, apex) in faces {
            let local = tri.map(|v| {
                *map.entry(v).or_insert_with(|| {
                    s.points.push(nodes[v]);
                    s.source.push(v);
                    s.points.len() - 1
                })
            });
            s.tris.push(local);
            s.apex.push(apex.map(|a| nodes[a]));
        }
        s
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    pub fn tri_points(&self, t: usize) -> [Point3; 3] {
        self.tris[t].map(|i| self.points[i])
    }

    pub fn bbox(&self) -> Aabb<f64> {
        Aabb::from_points(&self.points)
    }

    /// Edge → number of incident triangles.
    pub fn edge_counts(&self) -> HashMap<[usize; 2], usize> {
        let mut m = HashMap::new();
        for t in &self.tris {
            for k in 0..3 {
                *m.entry(edge_key(t[k], t[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        m
    }

    /// Every directed edge is matched by its reverse. Pinched edges shared by
    /// four triangles (two sheets touching) are allowed.
    pub fn is_closed(&self) -> bool {
        let mut d: HashMap<[usize; 2], i64> = HashMap::new();
        for t in &self.tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *d.entry(edge_key(a, b)).or_insert(0) += if a < b { 1 } else { -1 };
            }
        }
        !self.tris.is_empty() && d.values().all(|&c| c == 0)
    }

    /// Number of edges with more than two incident triangles.
    pub fn pinched_edges(&self) -> usize {
        self.edge_counts().values().filter(|&&c| c > 2).count()
    }

    pub fn euler_characteristic(&self) -> i64 {
        let used: std::collections::HashSet<usize> = self.tris.iter().flatten().copied().collect();
        used.len() as i64 - self.edge_counts().len() as i64 + self.tris.len() as i64
    }

    /// Signed enclosed volume (positive for outward orientation).
    pub fn enclosed_volume(&self) -> f64 {
        self.tris
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.points[i]);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    pub fn flipped(&self) -> Self {
        let mut s = self.clone();
        for t in &mut s.tris {
            t.swap(1, 2);
        }
        s.apex = vec![None; s.tris.len()];
        s
    }

    /// Concatenates two surfaces (no vertex merging).
    pub fn merged(&self, o: &Surface) -> Self {
        let off = self.points.len();
        let mut s = self.clone();
        s.points.extend_from_slice(&o.points);
        s.source.extend_from_slice(&o.source);
        s.tris.extend(o.tris.iter().map(|t| t.map(|i| i + off)));
        s.apex.extend_from_slice(&o.apex);
        s
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edge_counts()
            .keys()
            .map(|e| self.points[e[0]].dist(self.points[e[1]]))
            .collect()
    }

    /// Parity point-in-closed-surface test with exact predicates.
    /// `None` if `p` lies on the surface.
    pub fn contains(&self, p: Point3) -> Option<bool> {
        if self.tris.is_empty() {
            return Some(false);
        }
        let bb = self.bbox();
        if !bb.contains(p, 0.0) {
            return Some(false);
        }
        let reach = 4.0 * (bb.diagonal() + (p - bb.center()).norm()) + 1.0;
        for dir in RAY_DIRECTIONS.iter() {
            let d = Vec3::new(dir[0], dir[1], dir[2]);
            let q = p + d * (reach / d.norm());
            match self.count_crossings(p, q) {
                Crossings::On => return None,
                Crossings::Degenerate => continue,
                Crossings::Count(n) => return Some(n % 2 == 1),
            }
        }
        // Every probe direction grazed an edge or vertex; fall back to the
        // nearest triangle's side.
        Some(self.nearest_side(p))
    }

    fn count_crossings(&self, p: Point3, q: Point3) -> Crossings {
        let mut n = 0;
        for t in &self.tris {
            let [a, b, c] = t.map(|i| self.points[i]);
            let s1 = orient3d(a, b, c, p);
            let s2 = orient3d(a, b, c, q);
            if s1 == 0.0 {
                if point_in_triangle_coplanar(p, a, b, c) {
                    return Crossings::On;
                }
                if s2 == 0.0 {
                    return Crossings::Degenerate;
                }
                continue;
            }
            if s2 == 0.0 {
                return Crossings::Degenerate;
            }
            if (s1 > 0.0) == (s2 > 0.0) {
                continue;
            }
            let e1 = orient3d(p, q, a, b);
            let e2 = orient3d(p, q, b, c);
            let e3 = orient3d(p, q, c, a);
            if e1 == 0.0 || e2 == 0.0 || e3 == 0.0 {
                // A zero here with the other two of the same sign means the
                // ray grazes an edge or vertex.
                let pos = [e1, e2, e3].iter().filter(|&&x| x > 0.0).count();
                let neg = [e1, e2, e3].iter().filter(|&&x| x < 0.0).count();
                if pos == 0 || neg == 0 {
                    return Crossings::Degenerate;
                }
                continue;
            }
            if (e1 > 0.0) == (e2 > 0.0) && (e2 > 0.0) == (e3 > 0.0) {
                n += 1;
            }
        }
        Crossings::Count(n)
    }

    fn nearest_side(&self, p: Point3) -> bool {
        let mut best = (f64::INFINITY, false);
        for t in &self.tris {
            let [a, b, c] = t.map(|i| self.points[i]);
            let cen = (a + b + c) / 3.0;
            let d = cen.dist2(p);
            if d < best.0 {
                best = (d, orient3d(a, b, c, p) < 0.0);
            }
        }
        best.1
    }
}

enum Crossings {
    On,
    Degenerate,
    Count(usize),
}

const RAY_DIRECTIONS: [[f64; 3]; 8] = [
    [0.5772156649, 0.3183091862, 0.7519612087],
    [-0.6180339887, 0.4142135624, 0.2718281828],
    [0.1234567891, -0.9876543211, 0.3141592654],
    [0.7071061812, 0.1732050808, -0.5772156649],
    [-0.2236067977, -0.3605551275, -0.9055385138],
    [0.9486832981, -0.2645751311, 0.1414213562],
    [-0.4472135955, 0.8944271910, -0.0316227766],
    [0.0288675135, 0.0577350269, 0.9979146165],
];

/// Whether `p`, known to be coplanar with `a, b, c`, lies in the closed
/// triangle.
pub fn point_in_triangle_coplanar(p: Point3, a: Point3, b: Point3, c: Point3) -> bool {
    let n = (b - a).cross(c - a);
    let drop = dominant_axis(n);
    let o = crate::predicates::orient2d_dropping(a, b, c, drop);
    if o == 0.0 {
        return false;
    }
    let s = o.signum();
    let o1 = crate::predicates::orient2d_dropping(a, b, p, drop) * s;
    let o2 = crate::predicates::orient2d_dropping(b, c, p, drop) * s;
    let o3 = crate::predicates::orient2d_dropping(c, a, p, drop) * s;
    o1 >= 0.0 && o2 >= 0.0 && o3 >= 0.0
}

pub fn dominant_axis(n: Point3) -> usize {
    let a = [n.x.abs(), n.y.abs(), n.z.abs()];
    if a[0] >= a[1] && a[0] >= a[2] {
        0
    } else if a[1] >= a[2] {
        1
    } else {
        2
    }
}

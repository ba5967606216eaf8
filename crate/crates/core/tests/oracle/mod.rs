//! Brute-force reference implementations shared by the integration tests.

#![allow(dead_code)]

use qcmesh::geom::{barycentric, tet_volume};
use qcmesh::predicates::{insphere, orient3d, Sphere};
use qcmesh::{Point3, TetMesh};

/// Every tet against every other input point.
pub fn violates_empty_sphere(m: &TetMesh, pts: &[Point3]) -> Option<(usize, usize)> {
    for (t, tet) in m.tets.iter().enumerate() {
        let [a, b, c, d] = tet.map(|i| m.nodes[i]);
        for (i, p) in pts.iter().enumerate() {
            if tet.contains(&i) {
                continue;
            }
            if insphere(a, b, c, d, *p).ok() == Some(Sphere::Inside) {
                return Some((t, i));
            }
        }
    }
    None
}

/// Convex hull volume by beneath-beyond facet updates.
pub fn hull_volume(pts: &[Point3]) -> f64 {
    let n = pts.len();
    let mut simplex = None;
    'outer: for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    if orient3d(pts[a], pts[b], pts[c], pts[d]) != 0.0 {
                        simplex = Some([a, b, c, d]);
                        break 'outer;
                    }
                }
            }
        }
    }
    let Some(mut s) = simplex else { return 0.0 };
    if orient3d(pts[s[0]], pts[s[1]], pts[s[2]], pts[s[3]]) < 0.0 {
        s.swap(0, 1);
    }
    let [a, b, c, d] = s;
    // Outward: interior points give a negative orientation.
    let mut facets: Vec<[usize; 3]> = vec![[b, c, d], [a, d, c], [a, b, d], [a, c, b]];
    let centre = (pts[a] + pts[b] + pts[c] + pts[d]) * 0.25;
    for p in 0..n {
        if s.contains(&p) {
            continue;
        }
        let visible: Vec<bool> = facets
            .iter()
            .map(|f| orient3d(pts[f[0]], pts[f[1]], pts[f[2]], pts[p]) > 0.0)
            .collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut vis_edges = std::collections::HashSet::new();
        for (f, &v) in facets.iter().zip(&visible) {
            if v {
                for k in 0..3 {
                    vis_edges.insert((f[k], f[(k + 1) % 3]));
                }
            }
        }
        let mut next = Vec::new();
        for (f, &v) in facets.iter().zip(&visible) {
            if !v {
                next.push(*f);
            }
        }
        for &(u, w) in &vis_edges {
            if !vis_edges.contains(&(w, u)) {
                next.push([u, w, p]);
            }
        }
        facets = next;
    }
    facets
        .iter()
        .map(|f| tet_volume(centre, pts[f[0]], pts[f[1]], pts[f[2]]))
        .sum()
}

/// Point-in-tet interpolation by scanning every tet, lowest index first.
pub fn brute_interpolate(m: &TetMesh, vals: &[Point3], p: Point3, eps: f64) -> Option<Point3> {
    for t in 0..m.tets.len() {
        let tp = m.tet_points(t);
        if let Some(w) = barycentric(&tp, p) {
            if w.iter().all(|&x| x >= -eps) {
                let v = m.tets[t];
                return Some(vals[v[0]] * w[0] + vals[v[1]] * w[1] + vals[v[2]] * w[2] + vals[v[3]] * w[3]);
            }
        }
    }
    None
}

/// Sites of an FCC lattice with `n` conventional cells per side, half-open
/// box, lattice constant 1.
pub fn fcc_block(n: usize) -> Vec<Point3> {
    let basis = [[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]];
    let mut v = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for b in basis {
                    v.push(Point3::new(i as f64 + b[0], j as f64 + b[1], k as f64 + b[2]));
                }
            }
        }
    }
    v
}

//! Incremental 3D Delaunay triangulation.
//!
//! Bowyer–Watson insertion in BRIO order. The convex hull is closed off by
//! ghost tetrahedra sharing a vertex at infinity, so every point inside the
//! configured limits can be inserted and the finite tets always cover the
//! convex hull of the inserted points. Cospherical and coplanar ties are
//! broken by a symbolic perturbation keyed on the lexicographic order of the
//! points, which makes the output independent of insertion order and of how
//! the points are numbered.

mod brio;

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use brio::{brio_sort, hilbert_key, InsertionOrder};

use crate::geom::{Aabb, TET_FACES};
use crate::mesh::{NodeFlags, Region, TetMesh, EPS_NODE_REL};
use crate::predicates::{incircle_coplanar, insphere_raw, orient2d_dropping, orient3d};
use crate::surface::dominant_axis;
use crate::Point3;

/// Vertex id of the point at infinity.
pub const INF: usize = usize::MAX;
const NONE: usize = usize::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DelaunayError {
    #[error("at least four points are required, got {0}")]
    TooFewPoints(usize),
    #[error("all points are coplanar")]
    DegenerateInput,
    #[error("point {point:?} coincides with existing node {existing}")]
    DuplicatePoint { point: Point3, existing: usize },
    #[error("point {0:?} lies outside the triangulation limits")]
    OutOfHull(Point3),
    #[error("point {0:?} has a non-finite coordinate")]
    NonFinite(Point3),
}

#[derive(Debug, Clone)]
pub struct DelaunayConfig {
    /// BRIO and walk seed.
    pub seed: u64,
    /// Points farther than this many bounding-box diagonals from the
    /// bounding box are rejected as out of hull.
    pub limit_scale: f64,
    /// Relative coincidence tolerance (times the bounding-box diagonal).
    pub eps_rel: f64,
}

impl Default for DelaunayConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            limit_scale: 10.0,
            eps_rel: EPS_NODE_REL,
        }
    }
}

/// Incremental triangulation state.
#[derive(Debug, Clone)]
pub struct Delaunay {
    points: Vec<Point3>,
    tets: Vec<[usize; 4]>,
    nbr: Vec<[usize; 4]>,
    alive: Vec<bool>,
    free: Vec<usize>,
    mark: Vec<u8>,
    last: usize,
    limits: Aabb<f64>,
    eps: f64,
    rng: ChaCha8Rng,
    /// Points inserted before four affinely independent ones were seen.
    pending: Vec<usize>,
    walk_steps: u64,
}

impl Delaunay {
    /// Empty triangulation accepting points within `limits`. Points closer
    /// than `eps` to an existing vertex are rejected.
    pub fn new(limits: Aabb<f64>, eps: f64, seed: u64) -> Self {
        Self {
            points: Vec::new(),
            tets: Vec::new(),
            nbr: Vec::new(),
            alive: Vec::new(),
            free: Vec::new(),
            mark: Vec::new(),
            last: NONE,
            limits,
            eps,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
            pending: Vec::new(),
            walk_steps: 0,
        }
    }

    /// Triangulation sized for a known bounding box.
    pub fn for_bounds(bb: &Aabb<f64>, cfg: &DelaunayConfig) -> Self {
        let d = bb.diagonal().max(f64::MIN_POSITIVE);
        let pad = cfg.limit_scale * d;
        let limits = Aabb {
            min: bb.min - Point3::splat(pad),
            max: bb.max + Point3::splat(pad),
        };
        Self::new(limits, cfg.eps_rel * d, cfg.seed)
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn is_initialized(&self) -> bool {
        self.last != NONE
    }

    /// Total number of walk steps taken by point location so far.
    pub fn walk_steps(&self) -> u64 {
        self.walk_steps
    }

    /// Finite tetrahedra, positively oriented.
    pub fn finite_tets(&self) -> Vec<[usize; 4]> {
        (0..self.tets.len())
            .filter(|&t| self.alive[t] && !self.tets[t].contains(&INF))
            .map(|t| self.tets[t])
            .collect()
    }

    /// Finite tets as a mesh over all inserted points.
    pub fn to_mesh(&self) -> TetMesh {
        TetMesh::new(
            self.points.clone(),
            self.finite_tets(),
            Region::Continuum,
            NodeFlags::NONE,
        )
    }

    /// Inserts `p` and returns its vertex id.
    pub fn insert(&mut self, p: Point3) -> Result<usize, DelaunayError> {
        if !p.is_finite() {
            return Err(DelaunayError::NonFinite(p));
        }
        if !self.limits.contains(p, 0.0) {
            return Err(DelaunayError::OutOfHull(p));
        }
        if !self.is_initialized() {
            return self.insert_pending(p);
        }
        let id = self.points.len();
        self.points.push(p);
        match self.insert_id(id) {
            Ok(()) => Ok(id),
            Err(e) => {
                self.points.pop();
                Err(e)
            }
        }
    }

    fn insert_pending(&mut self, p: Point3) -> Result<usize, DelaunayError> {
        for &i in &self.pending {
            if self.points[i].dist(p) <= self.eps {
                return Err(DelaunayError::DuplicatePoint { point: p, existing: i });
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.pending.push(id);
        if let Some(simplex) = find_simplex(&self.points, &self.pending) {
            self.bootstrap(simplex);
            let rest: Vec<usize> = self
                .pending
                .iter()
                .copied()
                .filter(|i| !simplex.contains(i))
                .collect();
            self.pending.clear();
            for i in rest {
                // Pending points were already checked against each other.
                self.insert_id(i)?;
            }
        }
        Ok(id)
    }

    fn bootstrap(&mut self, s: [usize; 4]) {
        let [a, b, c, d] = s;
        let t = if orient3d(self.points[a], self.points[b], self.points[c], self.points[d]) > 0.0 {
            [a, b, c, d]
        } else {
            [b, a, c, d]
        };
        let mut new = vec![self.alloc(t)];
        for f in TET_FACES {
            new.push(self.alloc([t[f[0]], t[f[1]], t[f[2]], INF]));
        }
        link_by_faces(&self.tets, &mut self.nbr, &new);
        self.last = new[0];
    }

    fn alloc(&mut self, t: [usize; 4]) -> usize {
        if let Some(i) = self.free.pop() {
            self.tets[i] = t;
            self.nbr[i] = [NONE; 4];
            self.alive[i] = true;
            self.mark[i] = 0;
            i
        } else {
            self.tets.push(t);
            self.nbr.push([NONE; 4]);
            self.alive.push(true);
            self.mark.push(0);
            self.tets.len() - 1
        }
    }

    #[inline]
    fn pt(&self, v: usize, p: Point3) -> Point3 {
        if v == INF {
            p
        } else {
            self.points[v]
        }
    }

    /// Perturbation order: lexicographic on coordinates, then id.
    fn pcmp(&self, i: usize, j: usize) -> Ordering {
        let (a, b) = (self.points[i], self.points[j]);
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(a.z.total_cmp(&b.z))
            .then(i.cmp(&j))
    }

    fn in_conflict(&self, t: usize, q: usize) -> bool {
        let v = self.tets[t];
        let p = self.points[q];
        if let Some(k) = v.iter().position(|&x| x == INF) {
            let w = v.map(|x| self.pt(x, p));
            let o = orient3d(w[0], w[1], w[2], w[3]);
            if o != 0.0 {
                return o > 0.0;
            }
            let face: Vec<usize> = (0..4).filter(|&j| j != k).map(|j| v[j]).collect();
            let f = self.nbr[t][k];
            let apex = self.tets[f]
                .iter()
                .copied()
                .find(|x| !face.contains(x))
                .expect("finite neighbour of a ghost has an apex");
            let [a, b, c] = [face[0], face[1], face[2]].map(|x| self.points[x]);
            let s = incircle_coplanar(a, b, c, p, self.points[apex]);
            if s != 0.0 {
                return s > 0.0;
            }
            return self.perturbed_incircle([face[0], face[1], face[2]], q);
        }
        let [a, b, c, d] = v.map(|x| self.points[x]);
        let s = insphere_raw(a, b, c, d, p);
        if s != 0.0 {
            return s > 0.0;
        }
        self.perturbed_insphere(v, q)
    }

    fn perturbed_insphere(&self, v: [usize; 4], q: usize) -> bool {
        let mut all = [v[0], v[1], v[2], v[3], q];
        all.sort_by(|&i, &j| self.pcmp(j, i));
        let p = self.points[q];
        for &top in &all[..3] {
            if top == q {
                return false;
            }
            let j = v.iter().position(|&x| x == top).unwrap();
            let mut w = v.map(|x| self.points[x]);
            w[j] = p;
            let o = orient3d(w[0], w[1], w[2], w[3]);
            if o != 0.0 {
                return o > 0.0;
            }
        }
        false
    }

    fn perturbed_incircle(&self, f: [usize; 3], q: usize) -> bool {
        let fp = f.map(|x| self.points[x]);
        let drop = dominant_axis((fp[1] - fp[0]).cross(fp[2] - fp[0]));
        let local = orient2d_dropping(fp[0], fp[1], fp[2], drop);
        let mut all = [f[0], f[1], f[2], q];
        all.sort_by(|&i, &j| self.pcmp(j, i));
        let p = self.points[q];
        for &top in &all[..3] {
            if top == q {
                return false;
            }
            let j = f.iter().position(|&x| x == top).unwrap();
            let mut w = fp;
            w[j] = p;
            let o = orient2d_dropping(w[0], w[1], w[2], drop);
            if o != 0.0 {
                return o * local > 0.0;
            }
        }
        false
    }

    /// Finds some tet in conflict with point `q`.
    fn locate(&mut self, q: usize) -> usize {
        let p = self.points[q];
        let mut t = self.last;
        if t == NONE || !self.alive[t] {
            t = (0..self.tets.len()).find(|&i| self.alive[i]).expect("live tet");
        }
        let mut prev = NONE;
        let cap = 4 * self.tets.len() + 64;
        for _ in 0..cap {
            self.walk_steps += 1;
            let v = self.tets[t];
            if let Some(k) = v.iter().position(|&x| x == INF) {
                let w = v.map(|x| self.pt(x, p));
                if orient3d(w[0], w[1], w[2], w[3]) > 0.0 {
                    return t;
                }
                prev = t;
                t = self.nbr[t][k];
                continue;
            }
            let start = self.rng.random_range(0..4usize);
            let mut moved = false;
            for r in 0..4 {
                let i = (start + r) % 4;
                let n = self.nbr[t][i];
                if n == prev {
                    continue;
                }
                let mut w = v.map(|x| self.points[x]);
                w[i] = p;
                if orient3d(w[0], w[1], w[2], w[3]) < 0.0 {
                    prev = t;
                    t = n;
                    moved = true;
                    break;
                }
            }
            if !moved {
                return t;
            }
        }
        log::warn!("point location walk did not terminate; scanning");
        (0..self.tets.len())
            .find(|&i| self.alive[i] && self.in_conflict(i, q))
            .expect("some tet conflicts with an in-limits point")
    }

    fn insert_id(&mut self, q: usize) -> Result<(), DelaunayError> {
        let p = self.points[q];
        let seed = self.locate(q);
        for &v in &self.tets[seed] {
            if v != INF && self.points[v].dist(p) <= self.eps {
                return Err(DelaunayError::DuplicatePoint { point: p, existing: v });
            }
        }
        debug_assert!(self.in_conflict(seed, q));
        const IN: u8 = 1;
        const OUT: u8 = 2;
        let mut cavity = vec![seed];
        let mut touched = vec![seed];
        self.mark[seed] = IN;
        let mut boundary: Vec<(usize, usize, usize)> = Vec::new();
        let mut k = 0;
        while k < cavity.len() {
            let t = cavity[k];
            k += 1;
            for i in 0..4 {
                let n = self.nbr[t][i];
                match self.mark[n] {
                    IN => {}
                    OUT => boundary.push((t, i, n)),
                    _ => {
                        touched.push(n);
                        if self.in_conflict(n, q) {
                            self.mark[n] = IN;
                            cavity.push(n);
                        } else {
                            self.mark[n] = OUT;
                            boundary.push((t, i, n));
                        }
                    }
                }
            }
        }
        for &t in &touched {
            self.mark[t] = 0;
        }
        for &t in &cavity {
            for &v in &self.tets[t] {
                if v != INF && self.points[v].dist(p) <= self.eps {
                    return Err(DelaunayError::DuplicatePoint { point: p, existing: v });
                }
            }
        }
        let mut created = Vec::with_capacity(boundary.len());
        let mut by_face: HashMap<[usize; 2], (usize, usize)> = HashMap::with_capacity(boundary.len() * 2);
        for &(t, i, n) in &boundary {
            let mut v = self.tets[t];
            v[i] = q;
            let m = self.nbr[n].iter().position(|&x| x == t).expect("mirror face");
            let nt = self.alloc(v);
            self.nbr[nt][i] = n;
            self.nbr[n][m] = nt;
            for j in 0..4 {
                if j == i {
                    continue;
                }
                let mut e = [NONE; 2];
                let mut c = 0;
                for l in 0..4 {
                    if l != i && l != j {
                        e[c] = v[l];
                        c += 1;
                    }
                }
                if e[0] > e[1] {
                    e.swap(0, 1);
                }
                if let Some((ot, oj)) = by_face.remove(&e) {
                    self.nbr[nt][j] = ot;
                    self.nbr[ot][oj] = nt;
                } else {
                    by_face.insert(e, (nt, j));
                }
            }
            created.push(nt);
        }
        debug_assert!(by_face.is_empty(), "cavity boundary is not closed");
        for &t in &cavity {
            self.alive[t] = false;
            self.free.push(t);
        }
        self.last = created
            .iter()
            .copied()
            .find(|&t| !self.tets[t].contains(&INF))
            .unwrap_or(created[0]);
        Ok(())
    }

    /// Structural self-check: neighbour symmetry and orientation of every
    /// live tet (ghosts are checked with the infinite vertex replaced by a
    /// point beyond the hull face). Returns a description of the first
    /// problem found.
    pub fn check(&self) -> Result<(), String> {
        for t in 0..self.tets.len() {
            if !self.alive[t] {
                continue;
            }
            let v = self.tets[t];
            for i in 0..4 {
                let n = self.nbr[t][i];
                if n == NONE || !self.alive[n] {
                    return Err(format!("tet {t} face {i} has no live neighbour"));
                }
                if !self.nbr[n].contains(&t) {
                    return Err(format!("tets {t} and {n} disagree on adjacency"));
                }
                let mut f: Vec<usize> = (0..4).filter(|&j| j != i).map(|j| v[j]).collect();
                f.sort_unstable();
                let mut g: Vec<usize> = self.tets[n].iter().copied().filter(|x| f.contains(x)).collect();
                g.sort_unstable();
                if f != g {
                    return Err(format!("tets {t} and {n} do not share face {f:?}"));
                }
            }
            if !v.contains(&INF) {
                let [a, b, c, d] = v.map(|x| self.points[x]);
                if !(orient3d(a, b, c, d) > 0.0) {
                    return Err(format!("tet {t} is not positively oriented"));
                }
            } else {
                let k = v.iter().position(|&x| x == INF).unwrap();
                let f = self.nbr[t][k];
                let apex = self.tets[f].iter().copied().find(|x| !v.contains(x)).unwrap();
                let w = v.map(|x| self.pt(x, self.points[apex]));
                if !(orient3d(w[0], w[1], w[2], w[3]) < 0.0) {
                    return Err(format!("ghost tet {t} is not oriented away from the hull"));
                }
            }
        }
        Ok(())
    }
}

fn link_by_faces(tets: &[[usize; 4]], nbr: &mut [[usize; 4]], set: &[usize]) {
    let mut m: HashMap<[usize; 3], (usize, usize)> = HashMap::new();
    for &t in set {
        for i in 0..4 {
            let mut k = [NONE; 3];
            let mut c = 0;
            for j in 0..4 {
                if j != i {
                    k[c] = tets[t][j];
                    c += 1;
                }
            }
            k.sort_unstable();
            if let Some((o, oi)) = m.remove(&k) {
                nbr[t][i] = o;
                nbr[o][oi] = t;
            } else {
                m.insert(k, (t, i));
            }
        }
    }
}

/// First four affinely independent points of `ids` (in order), greedily.
fn find_simplex(pts: &[Point3], ids: &[usize]) -> Option<[usize; 4]> {
    let a = *ids.first()?;
    let b = *ids.iter().find(|&&i| pts[i] != pts[a])?;
    let c = *ids.iter().find(|&&i| {
        (0..3).any(|ax| orient2d_dropping(pts[a], pts[b], pts[i], ax) != 0.0)
    })?;
    let d = *ids
        .iter()
        .find(|&&i| orient3d(pts[a], pts[b], pts[c], pts[i]) != 0.0)?;
    Some([a, b, c, d])
}

/// Delaunay tetrahedralization of `points`. The output mesh has the input
/// points as nodes (same indices) and positively oriented tets covering the
/// convex hull. Regions default to continuum and flags to none.
pub fn triangulate(points: &[Point3], cfg: &DelaunayConfig) -> Result<TetMesh, DelaunayError> {
    if points.len() < 4 {
        return Err(DelaunayError::TooFewPoints(points.len()));
    }
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(DelaunayError::NonFinite(*p));
    }
    let order = brio_sort(points, cfg.seed);
    if find_simplex(points, &order.order).is_none() {
        return Err(DelaunayError::DegenerateInput);
    }
    let mut dt = Delaunay::for_bounds(&Aabb::from_points(points), cfg);
    let mut id_of = vec![NONE; points.len()];
    for &i in &order.order {
        match dt.insert(points[i]) {
            Ok(id) => id_of[i] = id,
            Err(DelaunayError::DuplicatePoint { point, existing }) => {
                let orig = id_of.iter().position(|&x| x == existing).unwrap_or(existing);
                return Err(DelaunayError::DuplicatePoint { point, existing: orig });
            }
            Err(e) => return Err(e),
        }
    }
    // Map internal ids (insertion order) back to input indices.
    let mut input_of = vec![NONE; points.len()];
    for (i, &id) in id_of.iter().enumerate() {
        input_of[id] = i;
    }
    let tets = dt
        .finite_tets()
        .into_iter()
        .map(|t| t.map(|v| input_of[v]))
        .collect();
    Ok(TetMesh::new(points.to_vec(), tets, Region::Continuum, NodeFlags::NONE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::validate;
    use crate::predicates::{insphere, Sphere};

    fn corner4() -> Vec<Point3> {
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ]
    }

    fn cube8() -> Vec<Point3> {
        (0..8)
            .map(|i| Point3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
            .collect()
    }

    fn empty_sphere_ok(m: &TetMesh) -> bool {
        m.tets.iter().all(|t| {
            let [a, b, c, d] = t.map(|i| m.nodes[i]);
            (0..m.nodes.len())
                .filter(|i| !t.contains(i))
                .all(|i| insphere(a, b, c, d, m.nodes[i]).unwrap() != Sphere::Inside)
        })
    }

    #[test]
    fn four_points_one_tet() {
        let m = triangulate(&corner4(), &DelaunayConfig::default()).unwrap();
        assert_eq!(m.tets.len(), 1);
        assert!(validate(&m).is_ok());
    }

    #[test]
    fn cube_corners() {
        for seed in 0..10 {
            let cfg = DelaunayConfig {
                seed,
                ..Default::default()
            };
            let m = triangulate(&cube8(), &cfg).unwrap();
            assert!(m.tets.len() == 5 || m.tets.len() == 6, "{}", m.tets.len());
            assert!((m.total_volume() - 1.0).abs() < 1e-14);
            assert!(validate(&m).is_ok());
            assert!(empty_sphere_ok(&m));
        }
    }

    #[test]
    fn centroid_split_and_face_insertion() {
        let mut dt = Delaunay::for_bounds(&Aabb::from_points(&corner4()), &DelaunayConfig::default());
        for p in corner4() {
            dt.insert(p).unwrap();
        }
        dt.insert(Point3::splat(0.25)).unwrap();
        assert_eq!(dt.finite_tets().len(), 4);
        dt.check().unwrap();

        // Two tets glued on a face; a point on that face.
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.3, 0.3, 1.0),
            Point3::new(0.3, 0.3, -1.0),
        ];
        let mut dt = Delaunay::for_bounds(&Aabb::from_points(&pts), &DelaunayConfig::default());
        for p in &pts {
            dt.insert(*p).unwrap();
        }
        assert_eq!(dt.finite_tets().len(), 2);
        dt.insert(Point3::new(0.25, 0.25, 0.0)).unwrap();
        assert_eq!(dt.finite_tets().len(), 6);
        dt.check().unwrap();
    }

    #[test]
    fn duplicate_and_out_of_hull() {
        let mut dt = Delaunay::for_bounds(&Aabb::from_points(&corner4()), &DelaunayConfig::default());
        for p in corner4() {
            dt.insert(p).unwrap();
        }
        let before = dt.finite_tets();
        assert!(matches!(
            dt.insert(Point3::new(1.0, 0.0, 0.0)),
            Err(DelaunayError::DuplicatePoint { existing: 1, .. })
        ));
        assert_eq!(dt.finite_tets(), before);
        dt.check().unwrap();
        assert!(matches!(
            dt.insert(Point3::new(1e3, 0.0, 0.0)),
            Err(DelaunayError::OutOfHull(_))
        ));
        // Outside the hull but inside the limits grows the hull.
        dt.insert(Point3::new(2.0, 2.0, 2.0)).unwrap();
        dt.check().unwrap();
    }

    #[test]
    fn coplanar_input_is_rejected() {
        let pts: Vec<Point3> = (0..10)
            .map(|i| Point3::new(i as f64, (i * i % 7) as f64, 0.0))
            .collect();
        assert_eq!(
            triangulate(&pts, &DelaunayConfig::default()),
            Err(DelaunayError::DegenerateInput)
        );
        assert_eq!(
            triangulate(&pts[..3], &DelaunayConfig::default()),
            Err(DelaunayError::TooFewPoints(3))
        );
    }

    #[test]
    fn grid_is_valid_after_every_insertion() {
        let mut pts = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..3 {
                    pts.push(Point3::new(i as f64, j as f64, k as f64));
                }
            }
        }
        let order = brio_sort(&pts, 5);
        let mut dt = Delaunay::for_bounds(&Aabb::from_points(&pts), &DelaunayConfig::default());
        for &i in &order.order {
            dt.insert(pts[i]).unwrap();
            if dt.is_initialized() {
                dt.check().unwrap();
                let m = dt.to_mesh();
                assert!(validate(&m).is_ok());
                assert!(empty_sphere_ok(&m));
            }
        }
        let m = dt.to_mesh();
        assert!((m.total_volume() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn pending_points_before_bootstrap() {
        // Collinear then coplanar points arrive before a full simplex.
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.5, 0.5, 1.0),
        ];
        let mut dt = Delaunay::for_bounds(&Aabb::from_points(&pts), &DelaunayConfig::default());
        for p in &pts {
            dt.insert(*p).unwrap();
        }
        dt.check().unwrap();
        let m = dt.to_mesh();
        assert!(validate(&m).is_ok());
        assert!(empty_sphere_ok(&m));
    }
}

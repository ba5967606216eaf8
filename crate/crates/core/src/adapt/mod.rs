//! Local mesh adaptation: barycentric refinement with edge swaps, guarded
//! Laplacian smoothing, and growth of the atomistic region.

mod extend;

use std::collections::HashMap;

use thiserror::Error;

use crate::atomistic::AtomisticError;
use crate::continuum::ContinuumError;
use crate::geom::{centroid, element_quality, TET_EDGES};
use crate::mesh::{MeshError, NodeFlags, Region, TetMesh};
use crate::predicates::orient3d;
use crate::Point3;

pub use extend::{
    extend_atomistic, regenerate, tets_intersecting, ExtendParams, Extension, ExtensionRequest,
};

/// Default swap acceptance factor: a swap must raise the kernel's minimum
/// quality by more than this factor.
pub const SWAP_ACCEPT: f64 = 1.01;
pub const MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdaptError {
    #[error("no tetrahedron contains edge {0:?}")]
    NoSuchEdge([usize; 2]),
    #[error("tetrahedron {0} does not exist")]
    NoSuchTet(usize),
    #[error("tetrahedron {0} is not in the continuum region")]
    NotContinuum(usize),
    #[error("swap sweeps did not settle within {0} sweeps")]
    SwapCycle(usize),
    #[error("cavity meshing failed: {0}")]
    CavityFailed(String),
    #[error("adapted mesh is invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Atomistic(#[from] AtomisticError),
    #[error(transparent)]
    Continuum(#[from] ContinuumError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// A tet mesh with cheap removal and insertion of tets. Removed tets leave
/// holes in the index space until [`EditMesh::to_mesh`] compacts.
#[derive(Debug, Clone)]
pub struct EditMesh {
    pub nodes: Vec<Point3>,
    pub flags: Vec<NodeFlags>,
    tets: Vec<[usize; 4]>,
    regions: Vec<Region>,
    alive: Vec<bool>,
    node_tets: Vec<Vec<usize>>,
}

impl EditMesh {
    pub fn from_mesh(m: &TetMesh) -> Self {
        let mut e = Self {
            nodes: m.nodes.clone(),
            flags: m.flags.clone(),
            tets: Vec::with_capacity(m.tets.len()),
            regions: Vec::with_capacity(m.tets.len()),
            alive: Vec::with_capacity(m.tets.len()),
            node_tets: vec![Vec::new(); m.nodes.len()],
        };
        for (t, &tet) in m.tets.iter().enumerate() {
            e.add_tet(tet, m.regions[t]);
        }
        e
    }

    /// Live tets in index order.
    pub fn to_mesh(&self) -> TetMesh {
        let mut m = TetMesh {
            nodes: self.nodes.clone(),
            flags: self.flags.clone(),
            ..Default::default()
        };
        for t in 0..self.tets.len() {
            if self.alive[t] {
                m.tets.push(self.tets[t]);
                m.regions.push(self.regions[t]);
            }
        }
        m
    }

    pub fn tet_slots(&self) -> usize {
        self.tets.len()
    }

    pub fn num_tets(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn is_alive(&self, t: usize) -> bool {
        self.alive.get(t).copied().unwrap_or(false)
    }

    pub fn tet(&self, t: usize) -> [usize; 4] {
        self.tets[t]
    }

    pub fn region(&self, t: usize) -> Region {
        self.regions[t]
    }

    pub fn tet_points(&self, t: usize) -> [Point3; 4] {
        self.tets[t].map(|v| self.nodes[v])
    }

    pub fn quality(&self, t: usize) -> f64 {
        element_quality(&self.tet_points(t))
    }

    pub fn add_node(&mut self, p: Point3, f: NodeFlags) -> usize {
        self.nodes.push(p);
        self.flags.push(f);
        self.node_tets.push(Vec::new());
        self.nodes.len() - 1
    }

    fn add_tet(&mut self, tet: [usize; 4], r: Region) -> usize {
        let t = self.tets.len();
        self.tets.push(tet);
        self.regions.push(r);
        self.alive.push(true);
        for v in tet {
            self.node_tets[v].push(t);
        }
        t
    }

    fn remove_tet(&mut self, t: usize) {
        self.alive[t] = false;
        for v in self.tets[t] {
            self.node_tets[v].retain(|&x| x != t);
        }
    }

    /// Live tets incident to node `n`, sorted.
    pub fn tets_of_node(&self, n: usize) -> Vec<usize> {
        let mut v = self.node_tets[n].clone();
        v.sort_unstable();
        v
    }

    /// Live tets containing edge `ab`, sorted.
    pub fn tets_around_edge(&self, a: usize, b: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.node_tets[a]
            .iter()
            .copied()
            .filter(|&t| self.tets[t].contains(&b))
            .collect();
        v.sort_unstable();
        v
    }

    /// Distinct nodes sharing an edge with `n`, sorted.
    pub fn node_neighbors(&self, n: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.node_tets[n]
            .iter()
            .flat_map(|&t| self.tets[t])
            .filter(|&x| x != n)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Replaces tet `t` by four tets sharing a new node at its barycentre.
/// Returns the new tets; child `i` replaces vertex `i`.
pub fn split_barycentric(m: &mut EditMesh, t: usize) -> Result<[usize; 4], AdaptError> {
    if !m.is_alive(t) {
        return Err(AdaptError::NoSuchTet(t));
    }
    let tet = m.tets[t];
    let region = m.regions[t];
    let p = m.add_node(centroid(&m.tet_points(t)), NodeFlags::FEM_NODE);
    m.remove_tet(t);
    let mut out = [0; 4];
    for i in 0..4 {
        let mut c = tet;
        c[i] = p;
        out[i] = m.add_tet(c, region);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapReject {
    /// The edge touches a tet outside the continuum region.
    Protected,
    /// No alternative beats the acceptance factor.
    Quality,
    /// Ring size outside 3..=7.
    UnsupportedRing,
    /// The edge lies on the mesh boundary (open ring).
    BoundaryEdge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SwapOutcome {
    Swapped {
        removed: Vec<usize>,
        added: Vec<usize>,
        before: f64,
        after: f64,
    },
    Rejected(SwapReject),
}

/// Ordered ring of vertices around edge `ab`: tets are `(a, b, r[i], r[i+1])`
/// with positive orientation. `None` when the ring is not a single cycle.
fn edge_ring(m: &EditMesh, a: usize, b: usize, tets: &[usize]) -> Option<Vec<usize>> {
    let mut next: HashMap<usize, usize> = HashMap::new();
    let (pa, pb) = (m.nodes[a], m.nodes[b]);
    for &t in tets {
        let mut o = m.tets[t].iter().copied().filter(|&v| v != a && v != b);
        let (c, d) = (o.next()?, o.next()?);
        let (from, to) = if orient3d(pa, pb, m.nodes[c], m.nodes[d]) > 0.0 {
            (c, d)
        } else {
            (d, c)
        };
        if next.insert(from, to).is_some() {
            return None;
        }
    }
    let start = *next.keys().min()?;
    let mut ring = vec![start];
    let mut cur = start;
    for _ in 1..tets.len() {
        cur = *next.get(&cur)?;
        if cur == start {
            return None;
        }
        ring.push(cur);
    }
    (next.get(&cur) == Some(&start)).then_some(ring)
}

/// Best triangulation of the ring polygon: for every triangle `(i, j, k)`
/// the tets `(ri, rj, rk, b)` and `(ri, rk, rj, a)` must be positively
/// oriented. Maximises the minimum quality. Returns the quality and the
/// triangles.
fn best_ring_triangulation(pa: Point3, pb: Point3, ring: &[Point3]) -> Option<(f64, Vec<[usize; 3]>)> {
    let m = ring.len();
    let tri_q = |i: usize, j: usize, k: usize| -> f64 {
        let (x, y, z) = (ring[i], ring[j], ring[k]);
        if orient3d(x, y, z, pb) <= 0.0 || orient3d(x, z, y, pa) <= 0.0 {
            return f64::NEG_INFINITY;
        }
        element_quality(&[x, y, z, pb]).min(element_quality(&[x, z, y, pa]))
    };
    let mut best = vec![vec![f64::NEG_INFINITY; m]; m];
    let mut arg = vec![vec![usize::MAX; m]; m];
    for i in 0..m - 1 {
        best[i][i + 1] = f64::INFINITY;
    }
    for len in 2..m {
        for i in 0..m - len {
            let j = i + len;
            for k in i + 1..j {
                let v = best[i][k].min(best[k][j]).min(tri_q(i, k, j));
                if v > best[i][j] {
                    best[i][j] = v;
                    arg[i][j] = k;
                }
            }
        }
    }
    let q = best[0][m - 1];
    if !q.is_finite() {
        return None;
    }
    let mut tris = Vec::with_capacity(m - 2);
    let mut stack = vec![(0, m - 1)];
    while let Some((i, j)) = stack.pop() {
        if j - i < 2 {
            continue;
        }
        let k = arg[i][j];
        tris.push([i, k, j]);
        stack.push((i, k));
        stack.push((k, j));
    }
    Some((q, tris))
}

/// Replaces the tets around edge `ab` with the best retetrahedralisation of
/// their union when it raises the minimum quality by more than `accept`.
pub fn try_edge_swap(m: &mut EditMesh, a: usize, b: usize, accept: f64) -> Result<SwapOutcome, AdaptError> {
    let tets = if a < m.nodes.len() && b < m.nodes.len() && a != b {
        m.tets_around_edge(a, b)
    } else {
        Vec::new()
    };
    if tets.is_empty() {
        return Err(AdaptError::NoSuchEdge([a, b]));
    }
    if tets.iter().any(|&t| m.regions[t] != Region::Continuum) {
        return Ok(SwapOutcome::Rejected(SwapReject::Protected));
    }
    let Some(ring) = edge_ring(m, a, b, &tets) else {
        return Ok(SwapOutcome::Rejected(SwapReject::BoundaryEdge));
    };
    if !(3..=7).contains(&ring.len()) {
        return Ok(SwapOutcome::Rejected(SwapReject::UnsupportedRing));
    }
    let before = tets.iter().map(|&t| m.quality(t)).fold(f64::INFINITY, f64::min);
    let pts: Vec<Point3> = ring.iter().map(|&v| m.nodes[v]).collect();
    let Some((after, tris)) = best_ring_triangulation(m.nodes[a], m.nodes[b], &pts) else {
        return Ok(SwapOutcome::Rejected(SwapReject::Quality));
    };
    if !(after > accept * before) {
        return Ok(SwapOutcome::Rejected(SwapReject::Quality));
    }
    for &t in &tets {
        m.remove_tet(t);
    }
    let mut added = Vec::with_capacity(2 * tris.len());
    for [i, j, k] in tris {
        let (x, y, z) = (ring[i], ring[j], ring[k]);
        added.push(m.add_tet([x, y, z, b], Region::Continuum));
        added.push(m.add_tet([x, z, y, a], Region::Continuum));
    }
    Ok(SwapOutcome::Swapped {
        removed: tets,
        added,
        before,
        after,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineParams {
    pub accept: f64,
    pub max_sweeps: usize,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            accept: SWAP_ACCEPT,
            max_sweeps: MAX_SWEEPS,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefineStats {
    pub split: usize,
    pub swaps: usize,
    pub sweeps: usize,
    /// Nodes created at barycentres.
    pub new_nodes: Vec<usize>,
}

/// Splits every marked continuum tet at its barycentre, then sweeps edge
/// swaps over the new tets (and tets created by swaps) until a sweep
/// produces nothing new.
pub fn refine_continuum(m: &mut EditMesh, marked: &[usize], params: &RefineParams) -> Result<RefineStats, AdaptError> {
    let mut marked = marked.to_vec();
    marked.sort_unstable();
    marked.dedup();
    for &t in &marked {
        if !m.is_alive(t) {
            return Err(AdaptError::NoSuchTet(t));
        }
        if m.regions[t] != Region::Continuum {
            return Err(AdaptError::NotContinuum(t));
        }
    }
    let mut stats = RefineStats::default();
    let mut work = Vec::new();
    for &t in &marked {
        work.extend(split_barycentric(m, t)?);
        stats.new_nodes.push(m.nodes.len() - 1);
        stats.split += 1;
    }
    while !work.is_empty() {
        if stats.sweeps == params.max_sweeps {
            return Err(AdaptError::SwapCycle(params.max_sweeps));
        }
        stats.sweeps += 1;
        let mut next = Vec::new();
        for &t in &work {
            for e in TET_EDGES {
                // The tet may have been consumed by an earlier swap.
                if !m.is_alive(t) {
                    break;
                }
                let tet = m.tets[t];
                if let SwapOutcome::Swapped { added, .. } = try_edge_swap(m, tet[e[0]], tet[e[1]], params.accept)? {
                    stats.swaps += 1;
                    next.extend(added);
                }
            }
        }
        work = next;
    }
    Ok(stats)
}

/// Continuum tets below this quality are swept by [`remove_slivers`] after
/// meshing.
pub const SLIVER_Q: f64 = 0.05;

/// Sweeps edge swaps over continuum tets with quality below `below` until a
/// sweep swaps nothing or `max_sweeps` is reached. Returns the swap count.
pub fn remove_slivers(m: &mut EditMesh, below: f64, max_sweeps: usize) -> Result<usize, AdaptError> {
    let mut swaps = 0;
    for _ in 0..max_sweeps {
        let bad: Vec<usize> = (0..m.tet_slots())
            .filter(|&t| m.is_alive(t) && m.regions[t] == Region::Continuum && m.quality(t) < below)
            .collect();
        let mut changed = false;
        for t in bad {
            for e in TET_EDGES {
                if !m.is_alive(t) {
                    break;
                }
                let tet = m.tets[t];
                if let SwapOutcome::Swapped { .. } = try_edge_swap(m, tet[e[0]], tet[e[1]], 1.0)? {
                    swaps += 1;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(swaps)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SmoothStats {
    pub moved: usize,
    pub rejected: usize,
}

fn min_mean(q: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut sum, mut k) = (f64::INFINITY, 0.0, 0usize);
    for v in q {
        lo = lo.min(v);
        sum += v;
        k += 1;
    }
    (lo, sum / k.max(1) as f64)
}

/// Moves each movable node toward the average of its edge neighbours. A move
/// is kept only if every incident tet stays positively oriented, the
/// incident minimum quality strictly rises and the incident mean quality does
/// not drop; a half step is tried before giving up. ATOM and domain-boundary
/// nodes never move.
pub fn laplacian_smooth(m: &mut EditMesh, movable: &[usize], rounds: usize) -> SmoothStats {
    let mut nodes: Vec<usize> = movable
        .iter()
        .copied()
        .filter(|&n| n < m.nodes.len() && !m.flags[n].is_atom() && !m.flags[n].is_boundary())
        .collect();
    nodes.sort_unstable();
    nodes.dedup();
    let mut stats = SmoothStats::default();
    for _ in 0..rounds {
        for &n in &nodes {
            let nb = m.node_neighbors(n);
            if nb.is_empty() {
                continue;
            }
            let target = nb.iter().fold(Point3::zero(), |s, &v| s + m.nodes[v]) / nb.len() as f64;
            let old = m.nodes[n];
            if target == old {
                continue;
            }
            let inc = m.tets_of_node(n);
            let (floor, mean) = min_mean(inc.iter().map(|&t| m.quality(t)));
            let mut accepted = false;
            for step in [1.0, 0.5] {
                let p = old + (target - old) * step;
                m.nodes[n] = p;
                let ok = inc.iter().all(|&t| {
                    let tp = m.tet_points(t);
                    orient3d(tp[0], tp[1], tp[2], tp[3]) > 0.0
                }) && {
                    let (lo, avg) = min_mean(inc.iter().map(|&t| m.quality(t)));
                    lo > floor && avg >= mean
                };
                if ok {
                    accepted = true;
                    break;
                }
            }
            if accepted {
                stats.moved += 1;
            } else {
                m.nodes[n] = old;
                stats.rejected += 1;
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::validate;

    fn regular() -> [Point3; 4] {
        let s = 1.0 / (2.0 * 2f64.sqrt());
        [
            Point3::new(s, s, s),
            Point3::new(s, -s, -s),
            Point3::new(-s, s, -s),
            Point3::new(-s, -s, s),
        ]
    }

    fn single(p: [Point3; 4]) -> EditMesh {
        let mut m = TetMesh::new(p.to_vec(), vec![[0, 1, 2, 3]], Region::Continuum, NodeFlags::FEM_NODE);
        if m.volume(0) < 0.0 {
            m.tets[0].swap(0, 1);
        }
        EditMesh::from_mesh(&m)
    }

    #[test]
    fn split_regular_tet() {
        let mut m = single(regular());
        let v0 = m.to_mesh().total_volume();
        let kids = split_barycentric(&mut m, 0).unwrap();
        let out = m.to_mesh();
        assert_eq!(out.nodes.len(), 5);
        assert_eq!(out.tets.len(), 4);
        assert!(validate(&out).is_ok());
        // Three unit edges and three of length sqrt(3/8) around a quarter of
        // the original volume.
        let vol = 1.0 / (6.0 * 2f64.sqrt()) / 4.0;
        let s2: f64 = 3.0 + 3.0 * 0.375;
        let q = 72.0 * 3f64.sqrt() * vol / s2.powf(1.5);
        for k in kids {
            assert!((m.to_mesh().volume(k - 1) - v0 / 4.0).abs() < 1e-15);
            assert!((m.quality(k) - q).abs() < 1e-12);
        }
        assert!((out.total_volume() - v0).abs() <= 1e-12 * v0);
        assert_eq!(split_barycentric(&mut m, 0), Err(AdaptError::NoSuchTet(0)));
    }

    /// Three tets around the edge (0, 0, ±h) with a triangular ring.
    fn three_ring(h: f64) -> EditMesh {
        let ring = [
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(-0.5, 0.8660254037844386, 0.0),
            Point3::new(-0.5, -0.8660254037844386, 0.0),
        ];
        let mut nodes = vec![Point3::new(0.0, 0.0, -h), Point3::new(0.0, 0.0, h)];
        nodes.extend(ring);
        let tets = vec![[0, 1, 2, 3], [0, 1, 3, 4], [0, 1, 4, 2]];
        let m = TetMesh::new(nodes, tets, Region::Continuum, NodeFlags::FEM_NODE);
        assert!((0..3).all(|t| m.volume(t) > 0.0));
        EditMesh::from_mesh(&m)
    }

    #[test]
    fn three_to_two_swap_improves_slivers() {
        let mut m = three_ring(2.0);
        let v0 = m.to_mesh().total_volume();
        let q_old = (0..3).map(|t| m.quality(t)).fold(f64::INFINITY, f64::min);
        // The only alternative: the ring triangle capped from each apex.
        let ring: Vec<Point3> = (2..5).map(|v| m.nodes[v]).collect();
        let q_new = element_quality(&[ring[0], ring[1], ring[2], m.nodes[1]])
            .min(element_quality(&[ring[0], ring[2], ring[1], m.nodes[0]]));
        assert!(q_new > 1.01 * q_old);
        match try_edge_swap(&mut m, 0, 1, SWAP_ACCEPT).unwrap() {
            SwapOutcome::Swapped { added, before, after, .. } => {
                assert_eq!(added.len(), 2);
                assert!((before - q_old).abs() < 1e-15);
                assert!((after - q_new).abs() < 1e-15);
            }
            o => panic!("{o:?}"),
        }
        let out = m.to_mesh();
        assert!(validate(&out).is_ok());
        assert!((out.total_volume() - v0).abs() <= 1e-12 * v0);
        assert!(matches!(try_edge_swap(&mut m, 0, 1, SWAP_ACCEPT), Err(AdaptError::NoSuchEdge(_))));
    }

    #[test]
    fn sliver_sweep_swaps_only_below_the_threshold() {
        let mut m = three_ring(2.0);
        let q_old = (0..3).map(|t| m.quality(t)).fold(f64::INFINITY, f64::min);
        assert_eq!(remove_slivers(&mut m, 0.5 * q_old, 4).unwrap(), 0);
        assert_eq!(m.num_tets(), 3);
        assert_eq!(remove_slivers(&mut m, 2.0 * q_old, 4).unwrap(), 1);
        let out = m.to_mesh();
        assert!(validate(&out).is_ok());
        assert!(out.tets.len() == 2 && (0..2).all(|t| out.quality(t) > q_old));
    }

    #[test]
    fn swap_rejections() {
        // Flat apexes: the two-tet alternative is worse.
        let mut m = three_ring(0.3);
        assert_eq!(
            try_edge_swap(&mut m, 0, 1, SWAP_ACCEPT).unwrap(),
            SwapOutcome::Rejected(SwapReject::Quality)
        );
        let mut p = three_ring(2.0);
        p.regions[1] = Region::Atomistic;
        assert_eq!(
            try_edge_swap(&mut p, 0, 1, SWAP_ACCEPT).unwrap(),
            SwapOutcome::Rejected(SwapReject::Protected)
        );
        // Edge of a lone tet is on the boundary.
        let mut s = single(regular());
        assert_eq!(
            try_edge_swap(&mut s, 0, 1, SWAP_ACCEPT).unwrap(),
            SwapOutcome::Rejected(SwapReject::BoundaryEdge)
        );
    }

    #[test]
    fn refine_all_of_a_block() {
        let m0 = crate::mesh::tests::cube5();
        let mut m = EditMesh::from_mesh(&m0);
        let all: Vec<usize> = (0..m0.tets.len()).collect();
        let stats = refine_continuum(&mut m, &all, &RefineParams::default()).unwrap();
        let out = m.to_mesh();
        assert_eq!(out.nodes.len(), m0.nodes.len() + m0.tets.len());
        assert_eq!(stats.split, m0.tets.len());
        assert!(validate(&out).is_ok());
        assert!((out.total_volume() - m0.total_volume()).abs() < 1e-12);
        let mut e = EditMesh::from_mesh(&m0);
        refine_continuum(&mut e, &[], &RefineParams::default()).unwrap();
        assert_eq!(e.to_mesh(), m0);
    }

    #[test]
    fn smoothing_recentres_a_star() {
        let m0 = crate::mesh::tests::cube5();
        let mut m = EditMesh::from_mesh(&m0);
        // Split the central tet; nudge the new node and smooth it back.
        let centre_tet = (0..m0.tets.len())
            .max_by(|&a, &b| m0.volume(a).total_cmp(&m0.volume(b)))
            .unwrap();
        split_barycentric(&mut m, centre_tet).unwrap();
        let n = m.nodes.len() - 1;
        let nb = m.node_neighbors(n);
        let avg = nb.iter().fold(Point3::zero(), |s, &v| s + m.nodes[v]) / nb.len() as f64;
        m.nodes[n] = avg + Point3::new(0.01, -0.02, 0.015);
        laplacian_smooth(&mut m, &[n], 10);
        assert!(m.nodes[n].dist(avg) < 1e-9);
        // Already at the centroid: no movement.
        let st = laplacian_smooth(&mut m, &[n], 1);
        assert_eq!(st.moved, 0);
        assert!(validate(&m.to_mesh()).is_ok());
    }

    #[test]
    fn smoothing_refuses_inversion() {
        // A node whose neighbour average lies outside its star.
        let nodes = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(0.05, 0.05, 0.05),
        ];
        let tets = vec![[4, 1, 2, 3]];
        let mut tm = TetMesh::new(nodes, tets, Region::Continuum, NodeFlags::FEM_NODE);
        if tm.volume(0) < 0.0 {
            tm.tets[0].swap(1, 2);
        }
        let mut m = EditMesh::from_mesh(&tm);
        // Neighbour average (1/3, 1/3, 1/3) lies on the opposite face.
        let st = laplacian_smooth(&mut m, &[4], 1);
        assert_eq!(st.moved, 0);
        assert_eq!(m.nodes[4], Point3::new(0.05, 0.05, 0.05));
    }
}

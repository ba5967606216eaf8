//! The tetrahedral mesh shared by the atomistic, continuum and coupled stages.

use std::collections::HashMap;

use thiserror::Error;

use crate::geom::{element_quality, tet_volume_of, Aabb, TET_EDGES, TET_FACES};
use crate::predicates::orient3d;
use crate::surface::Surface;
use crate::Point3;

/// Relative node coincidence tolerance (times the bounding-box diagonal).
pub const EPS_NODE_REL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeshError {
    #[error("face {face:?} is shared by more than two tetrahedra")]
    NonManifold { face: [usize; 3] },
    #[error("tetrahedron {tet} references node {node} but the mesh has {count} nodes")]
    BadIndex { tet: usize, node: usize, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Atomistic,
    Blend,
    Continuum,
}

/// Per-node role bits. A node on the a/c interface is both an atom and a
/// finite element node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct NodeFlags(u8);

impl NodeFlags {
    pub const NONE: Self = Self(0);
    pub const ATOM: Self = Self(1);
    pub const FEM_NODE: Self = Self(2);
    pub const DOMAIN_BOUNDARY: Self = Self(4);

    #[inline]
    pub fn contains(self, o: Self) -> bool {
        self.0 & o.0 == o.0 && o.0 != 0
    }

    #[inline]
    pub fn insert(&mut self, o: Self) {
        self.0 |= o.0;
    }

    #[inline]
    pub fn remove(&mut self, o: Self) {
        self.0 &= !o.0;
    }

    #[inline]
    pub fn union(self, o: Self) -> Self {
        Self(self.0 | o.0)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(b: u8) -> Self {
        Self(b & 7)
    }

    pub fn is_atom(self) -> bool {
        self.contains(Self::ATOM)
    }

    pub fn is_boundary(self) -> bool {
        self.contains(Self::DOMAIN_BOUNDARY)
    }

    /// Output label: ATOM wins over the other roles.
    pub fn label(self) -> &'static str {
        if self.is_atom() {
            "ATOM"
        } else if self.is_boundary() {
            "DOMAIN_BOUNDARY"
        } else if self.contains(Self::FEM_NODE) {
            "FEM_NODE"
        } else {
            "NONE"
        }
    }
}

/// Sorted node triple identifying a face independent of orientation.
pub type FaceKey = [usize; 3];

#[inline]
pub fn face_key(a: usize, b: usize, c: usize) -> FaceKey {
    let mut k = [a, b, c];
    k.sort_unstable();
    k
}

#[inline]
pub fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TetMesh {
    pub nodes: Vec<Point3>,
    pub tets: Vec<[usize; 4]>,
    pub regions: Vec<Region>,
    pub flags: Vec<NodeFlags>,
}

impl TetMesh {
    /// Mesh with every tet tagged `region` and every node flagged `flag`.
    pub fn new(nodes: Vec<Point3>, tets: Vec<[usize; 4]>, region: Region, flag: NodeFlags) -> Self {
        let regions = vec![region; tets.len()];
        let flags = vec![flag; nodes.len()];
        Self {
            nodes,
            tets,
            regions,
            flags,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    #[inline]
    pub fn tet_points(&self, t: usize) -> [Point3; 4] {
        self.tets[t].map(|i| self.nodes[i])
    }

    pub fn volume(&self, t: usize) -> f64 {
        tet_volume_of(&self.tet_points(t))
    }

    pub fn quality(&self, t: usize) -> f64 {
        element_quality(&self.tet_points(t))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.volume(t)).sum()
    }

    pub fn bbox(&self) -> Aabb<f64> {
        Aabb::from_points(&self.nodes)
    }

    /// Absolute node coincidence tolerance for this mesh.
    pub fn eps_node(&self) -> f64 {
        EPS_NODE_REL * self.bbox().diagonal()
    }

    /// Tets incident to each node.
    pub fn node_tets(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.nodes.len()];
        for (t, tet) in self.tets.iter().enumerate() {
            for &v in tet {
                inc[v].push(t);
            }
        }
        inc
    }

    /// Sorted unique edges.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = self
            .tets
            .iter()
            .flat_map(|t| TET_EDGES.iter().map(move |l| edge_key(t[l[0]], t[l[1]])))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Edge neighbours of each node, sorted.
    pub fn node_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.nodes.len()];
        for [a, b] in self.edges() {
            nb[a].push(b);
            nb[b].push(a);
        }
        for v in &mut nb {
            v.sort_unstable();
        }
        nb
    }

    pub fn is_atom(&self, n: usize) -> bool {
        self.flags[n].is_atom()
    }

    pub fn count_region(&self, r: Region) -> usize {
        self.regions.iter().filter(|&&x| x == r).count()
    }

    /// Sub-mesh of the tets in `keep`, reindexing only referenced nodes.
    /// Returns the sub-mesh and the old index of each new node.
    pub fn submesh(&self, keep: impl Fn(usize) -> bool) -> (TetMesh, Vec<usize>) {
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut old = Vec::new();
        let mut out = TetMesh::default();
        for t in 0..self.tets.len() {
            if !keep(t) {
                continue;
            }
            let nt = self.tets[t].map(|v| {
                if map[v] == usize::MAX {
                    map[v] = old.len();
                    old.push(v);
                }
                map[v]
            });
            out.tets.push(nt);
            out.regions.push(self.regions[t]);
        }
        out.nodes = old.iter().map(|&v| self.nodes[v]).collect();
        out.flags = old.iter().map(|&v| self.flags[v]).collect();
        (out, old)
    }

    /// Drops nodes not referenced by any tet. Returns the old index of each
    /// kept node.
    pub fn remove_unused_nodes(&mut self) -> Vec<usize> {
        let mut used = vec![false; self.nodes.len()];
        for t in &self.tets {
            for &v in t {
                used[v] = true;
            }
        }
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut old = Vec::new();
        for (i, &u) in used.iter().enumerate() {
            if u {
                map[i] = old.len();
                old.push(i);
            }
        }
        self.nodes = old.iter().map(|&i| self.nodes[i]).collect();
        self.flags = old.iter().map(|&i| self.flags[i]).collect();
        for t in &mut self.tets {
            *t = t.map(|v| map[v]);
        }
        old
    }
}

/// Face-to-tet incidence plus per-tet neighbour table.
#[derive(Debug, Clone, Default)]
pub struct Adjacency {
    /// Face key → (first tet, local face index, second tet if interior).
    pub faces: HashMap<FaceKey, FaceTets>,
    /// `neighbors[t][i]` is the tet across the face opposite local vertex `i`.
    pub neighbors: Vec<[Option<usize>; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceTets {
    pub first: (usize, usize),
    pub second: Option<(usize, usize)>,
}

impl Adjacency {
    pub fn interior_faces(&self) -> usize {
        self.faces.values().filter(|f| f.second.is_some()).count()
    }

    pub fn boundary_faces(&self) -> usize {
        self.faces.values().filter(|f| f.second.is_none()).count()
    }

    #[inline]
    pub fn is_boundary_tet(&self, t: usize) -> bool {
        self.neighbors[t].iter().any(|n| n.is_none())
    }
}

/// Builds the face adjacency. Faces shared by three or more tets are an error.
pub fn build_adjacency(mesh: &TetMesh) -> Result<Adjacency, MeshError> {
    let n = mesh.nodes.len();
    let mut faces: HashMap<FaceKey, FaceTets> = HashMap::with_capacity(mesh.tets.len() * 2 + 4);
    let mut neighbors = vec![[None; 4]; mesh.tets.len()];
    for (t, tet) in mesh.tets.iter().enumerate() {
        if let Some(&bad) = tet.iter().find(|&&v| v >= n) {
            return Err(MeshError::BadIndex {
                tet: t,
                node: bad,
                count: n,
            });
        }
        for (i, f) in TET_FACES.iter().enumerate() {
            let key = face_key(tet[f[0]], tet[f[1]], tet[f[2]]);
            match faces.get_mut(&key) {
                None => {
                    faces.insert(
                        key,
                        FaceTets {
                            first: (t, i),
                            second: None,
                        },
                    );
                }
                Some(ft) if ft.second.is_none() => {
                    ft.second = Some((t, i));
                    neighbors[t][i] = Some(ft.first.0);
                    neighbors[ft.first.0][ft.first.1] = Some(t);
                }
                Some(_) => return Err(MeshError::NonManifold { face: key }),
            }
        }
    }
    Ok(Adjacency { faces, neighbors })
}

/// Boundary of the tets selected by `filter`: faces with exactly one incident
/// selected tet, oriented away from the selection. Triangles are sorted by
/// face key so the output is deterministic.
pub fn extract_boundary(
    mesh: &TetMesh,
    adj: &Adjacency,
    filter: impl Fn(usize) -> bool,
) -> Surface {
    let mut found: Vec<(FaceKey, [usize; 3], usize)> = Vec::new();
    for (t, tet) in mesh.tets.iter().enumerate() {
        if !filter(t) {
            continue;
        }
        for (i, f) in TET_FACES.iter().enumerate() {
            let inside_neighbor = adj.neighbors[t][i].map(&filter).unwrap_or(false);
            if !inside_neighbor {
                let tri = [tet[f[0]], tet[f[1]], tet[f[2]]];
                found.push((face_key(tri[0], tri[1], tri[2]), tri, tet[i]));
            }
        }
    }
    found.sort_unstable_by_key(|f| f.0);
    Surface::from_mesh_faces(
        &mesh.nodes,
        found.iter().map(|f| (f.1, Some(f.2))),
    )
}

/// Boundary of the region tagged `r`.
pub fn region_boundary(mesh: &TetMesh, adj: &Adjacency, r: Region) -> Surface {
    extract_boundary(mesh, adj, |t| mesh.regions[t] == r)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    LengthMismatch { what: &'static str },
    BadIndex { tet: usize },
    RepeatedVertex { tet: usize },
    Orientation { tet: usize },
    NonManifold { face: FaceKey },
    /// Both tets of an interior face lie on the same side of it.
    FoldedFace { face: FaceKey },
    DuplicateNode { a: usize, b: usize },
    NonFiniteNode { node: usize },
    AtomisticNonAtomNode { tet: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every structural invariant of `mesh` without modifying it.
pub fn validate(mesh: &TetMesh) -> ValidationReport {
    let mut v = Vec::new();
    let n = mesh.nodes.len();
    if mesh.regions.len() != mesh.tets.len() {
        v.push(Violation::LengthMismatch { what: "regions" });
    }
    if mesh.flags.len() != n {
        v.push(Violation::LengthMismatch { what: "flags" });
    }
    for (i, p) in mesh.nodes.iter().enumerate() {
        if !p.is_finite() {
            v.push(Violation::NonFiniteNode { node: i });
        }
    }
    let mut index_ok = true;
    for (t, tet) in mesh.tets.iter().enumerate() {
        if tet.iter().any(|&x| x >= n) {
            v.push(Violation::BadIndex { tet: t });
            index_ok = false;
            continue;
        }
        let mut s = *tet;
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            v.push(Violation::RepeatedVertex { tet: t });
            continue;
        }
        let p = mesh.tet_points(t);
        if !(orient3d(p[0], p[1], p[2], p[3]) > 0.0) {
            v.push(Violation::Orientation { tet: t });
        }
        if mesh.regions.get(t) == Some(&Region::Atomistic)
            && mesh.flags.len() == n
            && tet.iter().any(|&x| !mesh.flags[x].is_atom())
        {
            v.push(Violation::AtomisticNonAtomNode { tet: t });
        }
    }
    if index_ok {
        let mut faces: HashMap<FaceKey, Vec<(usize, usize)>> = HashMap::new();
        for (t, tet) in mesh.tets.iter().enumerate() {
            for (i, f) in TET_FACES.iter().enumerate() {
                faces
                    .entry(face_key(tet[f[0]], tet[f[1]], tet[f[2]]))
                    .or_default()
                    .push((t, i));
            }
        }
        let mut keys: Vec<_> = faces.keys().copied().collect();
        keys.sort_unstable();
        for k in keys {
            let inc = &faces[&k];
            if inc.len() > 2 {
                v.push(Violation::NonManifold { face: k });
            } else if inc.len() == 2 {
                let (t0, i0) = inc[0];
                let (t1, i1) = inc[1];
                let f = TET_FACES[i0];
                let tri = [mesh.tets[t0][f[0]], mesh.tets[t0][f[1]], mesh.tets[t0][f[2]]];
                let [a, b, c] = tri.map(|x| mesh.nodes[x]);
                let s0 = orient3d(a, b, c, mesh.nodes[mesh.tets[t0][i0]]);
                let s1 = orient3d(a, b, c, mesh.nodes[mesh.tets[t1][i1]]);
                if s0 * s1 >= 0.0 {
                    v.push(Violation::FoldedFace { face: k });
                }
            }
        }
    }
    for (a, b) in duplicate_nodes(&mesh.nodes, EPS_NODE_REL * Aabb::from_points(&mesh.nodes).diagonal()) {
        v.push(Violation::DuplicateNode { a, b });
    }
    ValidationReport { violations: v }
}

/// Pairs `(a, b)`, `a < b`, closer than `eps`. Grid hashed, near-linear.
pub fn duplicate_nodes(nodes: &[Point3], eps: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if nodes.len() < 2 {
        return out;
    }
    let cell = if eps > 0.0 { eps * 2.0 } else { f64::MIN_POSITIVE };
    let key = |p: &Point3| {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in nodes.iter().enumerate() {
        if p.is_finite() {
            grid.entry(key(p)).or_default().push(i);
        }
    }
    for (i, p) in nodes.iter().enumerate() {
        if !p.is_finite() {
            continue;
        }
        let (x, y, z) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(c) = grid.get(&(x + dx, y + dy, z + dz)) {
                        for &j in c {
                            if j > i && nodes[j].dist(*p) <= eps {
                                out.push((i, j));
                            }
                        }
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Per-tet quality with a ten-bin histogram over (0,0.1], ..., (0.9,1].
/// Quality exactly zero is counted in the first bin.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub per_tet_q: Vec<f64>,
    pub histogram: [usize; 10],
    pub min_q: f64,
    pub fraction_high: f64,
}

pub fn quality_bin(q: f64) -> usize {
    let mut k = (q * 10.0).ceil() as isize - 1;
    if k >= 1 && q <= k as f64 / 10.0 {
        k -= 1;
    }
    k.clamp(0, 9) as usize
}

impl QualityReport {
    pub fn new(mesh: &TetMesh) -> Self {
        Self::from_values((0..mesh.tets.len()).map(|t| mesh.quality(t)).collect())
    }

    /// Report over the tets selected by `filter` only.
    pub fn filtered(mesh: &TetMesh, filter: impl Fn(usize) -> bool) -> Self {
        Self::from_values(
            (0..mesh.tets.len())
                .filter(|&t| filter(t))
                .map(|t| mesh.quality(t))
                .collect(),
        )
    }

    pub fn from_values(per_tet_q: Vec<f64>) -> Self {
        let mut histogram = [0usize; 10];
        for &q in &per_tet_q {
            histogram[quality_bin(q)] += 1;
        }
        let min_q = per_tet_q.iter().copied().fold(f64::INFINITY, f64::min);
        let fraction_high = if per_tet_q.is_empty() {
            0.0
        } else {
            histogram[9] as f64 / per_tet_q.len() as f64
        };
        Self {
            per_tet_q,
            histogram,
            min_q,
            fraction_high,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn corner_mesh() -> TetMesh {
        TetMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
            Region::Continuum,
            NodeFlags::FEM_NODE,
        )
    }

    /// Unit cube split into five tets around the central one.
    pub(crate) fn cube5() -> TetMesh {
        let mut nodes = Vec::new();
        for i in 0..8 {
            nodes.push(Point3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64));
        }
        let mut tets = vec![[0, 1, 2, 4], [1, 3, 2, 7], [1, 4, 5, 7], [2, 6, 4, 7], [1, 2, 4, 7]];
        for t in &mut tets {
            let p = t.map(|i| nodes[i]);
            if tet_volume_of(&p) < 0.0 {
                t.swap(0, 1);
            }
        }
        TetMesh::new(nodes, tets, Region::Continuum, NodeFlags::FEM_NODE)
    }

    #[test]
    fn single_and_glued_adjacency() {
        let m = corner_mesh();
        let adj = build_adjacency(&m).unwrap();
        assert_eq!((adj.interior_faces(), adj.boundary_faces()), (0, 4));

        let mut g = corner_mesh();
        g.nodes.push(Point3::new(1.0, 1.0, 1.0));
        g.tets.push([1, 2, 3, 4]);
        if g.volume(1) < 0.0 {
            g.tets[1].swap(0, 1);
        }
        g.regions.push(Region::Continuum);
        g.flags.push(NodeFlags::FEM_NODE);
        assert!(validate(&g).is_ok(), "{:?}", validate(&g));
        let adj = build_adjacency(&g).unwrap();
        assert_eq!((adj.interior_faces(), adj.boundary_faces()), (1, 6));

        let mut d = corner_mesh();
        d.tets.push([0, 1, 2, 3]);
        d.tets.push([0, 1, 2, 3]);
        d.regions = vec![Region::Continuum; 3];
        assert!(matches!(build_adjacency(&d), Err(MeshError::NonManifold { .. })));
    }

    #[test]
    fn cube_boundary_has_twelve_triangles() {
        let m = cube5();
        assert!(validate(&m).is_ok());
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
        let adj = build_adjacency(&m).unwrap();
        let s = extract_boundary(&m, &adj, |_| true);
        assert_eq!(s.tris.len(), 12);
        assert!(s.is_closed());
        // Outward: the enclosed signed volume is positive.
        assert!((s.enclosed_volume() - 1.0).abs() < 1e-14);
        let s1 = extract_boundary(&m, &adj, |t| t == 4);
        assert_eq!(s1.tris.len(), 4);
    }

    #[test]
    fn validate_reports_violations() {
        let mut m = cube5();
        m.tets[2].swap(0, 1);
        let r = validate(&m);
        assert!(r.violations.contains(&Violation::Orientation { tet: 2 }));

        let mut m = corner_mesh();
        m.nodes.push(Point3::new(1.0 + 1e-12, 0.0, 0.0));
        m.flags.push(NodeFlags::FEM_NODE);
        let r = validate(&m);
        assert!(r.violations.contains(&Violation::DuplicateNode { a: 1, b: 4 }));

        let mut m = corner_mesh();
        m.regions[0] = Region::Atomistic;
        assert_eq!(
            validate(&m).violations,
            vec![Violation::AtomisticNonAtomNode { tet: 0 }]
        );
    }

    #[test]
    fn quality_histogram_bins() {
        assert_eq!(quality_bin(0.0), 0);
        assert_eq!(quality_bin(0.1), 0);
        assert_eq!(quality_bin(0.3), 2);
        assert_eq!(quality_bin(0.30001), 3);
        assert_eq!(quality_bin(0.95), 9);
        assert_eq!(quality_bin(1.0), 9);
        let r = QualityReport::new(&cube5());
        assert_eq!(r.histogram.iter().sum::<usize>(), 5);
        assert_eq!(r.histogram[9], 1);
        assert!((r.fraction_high - 0.2).abs() < 1e-15);
        assert_eq!(r.min_q, r.per_tet_q.iter().copied().fold(1.0, f64::min));
    }

    #[test]
    fn flags_label_prefers_atom() {
        let f = NodeFlags::ATOM.union(NodeFlags::FEM_NODE);
        assert_eq!(f.label(), "ATOM");
        assert!(f.contains(NodeFlags::FEM_NODE));
        assert!(!NodeFlags::FEM_NODE.is_atom());
    }
}

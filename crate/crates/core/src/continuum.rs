//! Continuum mesh between the domain boundary and the atomistic surface.
//!
//! Interface faces are kept in the Delaunay complex by construction: every
//! interface triangle comes with a witness sphere (the circumsphere of the
//! atomistic tet that owned it, or its diametral sphere), and continuum nodes
//! are never placed inside a witness sphere. An empty sphere through the
//! triangle then certifies it as a Delaunay face of the combined point set.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::delaunay::{brio_sort, Delaunay, DelaunayConfig, DelaunayError};
use crate::geom::{circumsphere, element_quality, longest_edge, Aabb, TET_FACES};
use crate::interp::{AabbTree, KdTree};
use crate::mesh::{build_adjacency, face_key, FaceKey, MeshError, NodeFlags, Region, TetMesh};
use crate::predicates::orient3d;
use crate::surface::Surface;
use crate::Point3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuumError {
    #[error("outer surface does not enclose the inner surface (inner point {0})")]
    OuterDoesNotEnclose(usize),
    #[error("{what} surface is not closed")]
    OpenSurface { what: &'static str },
    #[error("{missing} interface faces could not be recovered")]
    BoundaryNotRecovered { missing: usize, faces: Vec<[usize; 3]> },
    #[error("refinement exceeded the node budget of {0}")]
    BudgetExceeded(usize),
    #[error("invalid domain: {0}")]
    BadDomain(String),
    #[error(transparent)]
    Delaunay(#[from] DelaunayError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainShape {
    Box { min: Point3, max: Point3 },
    Sphere { center: Point3, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub shape: DomainShape,
    /// Target edge length on the domain boundary.
    pub h_bdry: f64,
    /// Maximum longest-edge ratio between face-adjacent tets.
    pub grading: f64,
}

impl DomainSpec {
    pub fn cube(center: Point3, half: f64, h_bdry: f64) -> Self {
        Self {
            shape: DomainShape::Box {
                min: center - Point3::splat(half),
                max: center + Point3::splat(half),
            },
            h_bdry,
            grading: 2.0,
        }
    }

    pub fn validate(&self) -> Result<(), ContinuumError> {
        if !(self.h_bdry > 0.0) {
            return Err(ContinuumError::BadDomain("h_bdry must be positive".into()));
        }
        if !(self.grading >= 1.0) {
            return Err(ContinuumError::BadDomain("grading must be at least 1".into()));
        }
        match self.shape {
            DomainShape::Box { min, max } => {
                if !(min.x < max.x && min.y < max.y && min.z < max.z) {
                    return Err(ContinuumError::BadDomain("empty box".into()));
                }
            }
            DomainShape::Sphere { radius, .. } => {
                if !(radius > 0.0) {
                    return Err(ContinuumError::BadDomain("sphere radius must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Signed distance to the boundary, positive inside.
    pub fn depth(&self, p: Point3) -> f64 {
        match self.shape {
            DomainShape::Box { min, max } => {
                let mut d = f64::INFINITY;
                for k in 0..3 {
                    d = d.min(p[k] - min[k]).min(max[k] - p[k]);
                }
                d
            }
            DomainShape::Sphere { center, radius } => radius - p.dist(center),
        }
    }

    pub fn bbox(&self) -> Aabb<f64> {
        match self.shape {
            DomainShape::Box { min, max } => Aabb { min, max },
            DomainShape::Sphere { center, radius } => Aabb {
                min: center - Point3::splat(radius),
                max: center + Point3::splat(radius),
            },
        }
    }

    pub fn volume(&self) -> f64 {
        match self.shape {
            DomainShape::Box { min, max } => {
                let e = max - min;
                e.x * e.y * e.z
            }
            DomainShape::Sphere { radius, .. } => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
        }
    }
}

/// Closed, outward-oriented triangulation of the domain boundary.
pub fn init_boundary(spec: &DomainSpec) -> Surface {
    match spec.shape {
        DomainShape::Box { min, max } => box_surface(min, max, spec.h_bdry),
        DomainShape::Sphere { center, radius } => sphere_surface(center, radius, spec.h_bdry),
    }
}

fn box_surface(min: Point3, max: Point3, h: f64) -> Surface {
    let ext = max - min;
    let n = [0, 1, 2].map(|k| ((ext[k] / (std::f64::consts::SQRT_2 * h)).ceil() as usize).max(1));
    let mut s = Surface::default();
    let mut ids: HashMap<[usize; 3], usize> = HashMap::new();
    let mut id = |g: [usize; 3], s: &mut Surface| -> usize {
        *ids.entry(g).or_insert_with(|| {
            let p = Point3::new(
                if g[0] == n[0] { max.x } else { min.x + ext.x * g[0] as f64 / n[0] as f64 },
                if g[1] == n[1] { max.y } else { min.y + ext.y * g[1] as f64 / n[1] as f64 },
                if g[2] == n[2] { max.z } else { min.z + ext.z * g[2] as f64 / n[2] as f64 },
            );
            s.points.push(p);
            s.source.push(usize::MAX);
            s.points.len() - 1
        })
    };
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2 {
            for i in 0..n[u] {
                for j in 0..n[v] {
                    let mut g = [[0usize; 3]; 4];
                    for (c, (di, dj)) in [(0, 0), (1, 0), (1, 1), (0, 1)].iter().enumerate() {
                        g[c][axis] = side * n[axis];
                        g[c][u] = i + di;
                        g[c][v] = j + dj;
                    }
                    let q = g.map(|x| id(x, &mut s));
                    // (u, v, axis) is right-handed, so counter-clockwise in
                    // (u, v) points along +axis.
                    let (t1, t2) = if side == 1 {
                        ([q[0], q[1], q[2]], [q[0], q[2], q[3]])
                    } else {
                        ([q[0], q[2], q[1]], [q[0], q[3], q[2]])
                    };
                    s.tris.push(t1);
                    s.tris.push(t2);
                }
            }
        }
    }
    s.apex = vec![None; s.tris.len()];
    s
}

fn sphere_surface(center: Point3, radius: f64, h: f64) -> Surface {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts: Vec<Point3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|a| {
        let p = Point3::new(a[0], a[1], a[2]);
        p / p.norm()
    })
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let edge = |pts: &[Point3]| pts[0].dist(pts[11]) * radius;
    let mut cur = edge(&pts);
    while cur > std::f64::consts::SQRT_2 * h {
        let mut mid: HashMap<[usize; 2], usize> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for t in &tris {
            let mut m = [0; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = if a < b { [a, b] } else { [b, a] };
                m[k] = *mid.entry(key).or_insert_with(|| {
                    let p = (pts[a] + pts[b]) * 0.5;
                    pts.push(p / p.norm());
                    pts.len() - 1
                });
            }
            next.push([t[0], m[0], m[2]]);
            next.push([t[1], m[1], m[0]]);
            next.push([t[2], m[2], m[1]]);
            next.push([m[0], m[1], m[2]]);
        }
        tris = next;
        cur /= 2.0;
    }
    let mut s = Surface {
        points: pts.iter().map(|&p| center + p * radius).collect(),
        tris,
        ..Default::default()
    };
    s.source = vec![usize::MAX; s.points.len()];
    s.apex = vec![None; s.tris.len()];
    s
}

/// Options for [`mesh_between`] and [`qmr_refine`].
#[derive(Debug, Clone)]
pub struct ShellParams {
    /// Interior nodes closer than this to a surface vertex or to an earlier
    /// interior node are dropped.
    pub min_sep: f64,
    /// Face recovery passes before giving up.
    pub recovery_passes: usize,
    pub seed: u64,
}

impl Default for ShellParams {
    fn default() -> Self {
        Self {
            min_sep: 0.0,
            recovery_passes: 3,
            seed: 0x5eed,
        }
    }
}

/// Tet mesh of the region between two closed surfaces.
#[derive(Debug, Clone)]
pub struct ShellMesh {
    /// Nodes: inner surface points (in surface order), then outer surface
    /// points not shared with the inner surface, then interior nodes.
    pub mesh: TetMesh,
    /// Mesh node of each inner surface point.
    pub inner_nodes: Vec<usize>,
    /// Mesh node of each outer surface point.
    pub outer_nodes: Vec<usize>,
    /// Nodes added on the domain boundary during refinement.
    pub boundary_extra: Vec<usize>,
}

/// Working state: the Delaunay complex of all candidate points plus the
/// barrier surfaces used to cut out the shell.
pub struct Shell {
    inner: Surface,
    outer: Surface,
    convex_outer: bool,
    /// Canonical point list: inner, outer (deduplicated), interior.
    pts: Vec<Point3>,
    n_inner: usize,
    n_surface: usize,
    outer_map: Vec<usize>,
    outer_flag: Vec<bool>,
    /// Canonical ids of refinement nodes placed on a convex outer boundary.
    extra_bdry: Vec<usize>,
    /// Barrier faces in canonical ids.
    barrier: HashMap<FaceKey, usize>,
    spheres: Vec<(Point3, f64)>,
    sphere_tree: AabbTree,
    params: ShellParams,
    dt: Delaunay,
    /// Delaunay vertex id → canonical index.
    canon: Vec<usize>,
    bounds: Aabb<f64>,
    eps: f64,
}

#[derive(Debug, Clone)]
struct Classified {
    mesh: TetMesh,
    missing: Vec<FaceKey>,
}

impl Shell {
    pub fn new(
        outer: &Surface,
        inner: &Surface,
        interior: &[Point3],
        params: &ShellParams,
    ) -> Result<Self, ContinuumError> {
        if !outer.is_closed() {
            return Err(ContinuumError::OpenSurface { what: "outer" });
        }
        if !inner.is_empty() && !inner.is_closed() {
            return Err(ContinuumError::OpenSurface { what: "inner" });
        }
        for (i, &p) in inner.points.iter().enumerate() {
            match outer.contains(p) {
                Some(true) => {}
                // Shared vertices (touching surfaces) are allowed.
                None if outer.points.contains(&p) => {}
                _ => return Err(ContinuumError::OuterDoesNotEnclose(i)),
            }
        }
        let bounds = outer.bbox().merge(&inner.bbox());
        let eps = 1e-8 * bounds.diagonal();
        let convex_outer = is_convex(outer);

        let mut pts: Vec<Point3> = inner.points.clone();
        let n_inner = pts.len();
        let kd_inner = KdTree::new(&inner.points);
        let mut outer_map = Vec::with_capacity(outer.points.len());
        for &p in &outer.points {
            match kd_inner.nearest(p) {
                Some((j, d)) if d <= eps => outer_map.push(j),
                _ => {
                    outer_map.push(pts.len());
                    pts.push(p);
                }
            }
        }
        let n_surface = pts.len();
        let mut outer_flag = vec![false; n_surface];
        for &v in &outer_map {
            outer_flag[v] = true;
        }

        let mut barrier: HashMap<FaceKey, usize> = HashMap::new();
        for t in &inner.tris {
            *barrier.entry(face_key(t[0], t[1], t[2])).or_insert(0) += 1;
        }
        if !convex_outer {
            for t in &outer.tris {
                let m = t.map(|v| outer_map[v]);
                *barrier.entry(face_key(m[0], m[1], m[2])).or_insert(0) += 1;
            }
        }
        // A face on both surfaces bounds no shell tet.
        barrier.retain(|_, c| *c == 1);

        let mut spheres = Vec::with_capacity(inner.tris.len());
        for (t, tri) in inner.tris.iter().enumerate() {
            let [a, b, c] = tri.map(|v| inner.points[v]);
            spheres.push(witness_sphere(a, b, c, inner.apex.get(t).copied().flatten()));
        }
        if !convex_outer {
            let kd_surface = KdTree::new(&pts);
            for (t, tri) in outer.tris.iter().enumerate() {
                let [a, b, c] = tri.map(|v| outer.points[v]);
                let s = match outer.apex.get(t).copied().flatten() {
                    Some(d) => witness_sphere(a, b, c, Some(d)),
                    None => bulged_sphere(a, b, c, &pts, &kd_surface),
                };
                spheres.push(s);
            }
        }
        let sphere_tree = AabbTree::from_boxes(
            spheres
                .iter()
                .map(|&(c, r)| Aabb {
                    min: c - Point3::splat(r),
                    max: c + Point3::splat(r),
                })
                .collect(),
        );

        let cfg = DelaunayConfig {
            seed: params.seed,
            ..Default::default()
        };
        let mut shell = Self {
            inner: inner.clone(),
            outer: outer.clone(),
            convex_outer,
            pts,
            n_inner,
            n_surface,
            outer_map,
            outer_flag,
            extra_bdry: Vec::new(),
            barrier,
            spheres,
            sphere_tree,
            params: params.clone(),
            dt: Delaunay::for_bounds(&bounds, &cfg),
            canon: Vec::new(),
            bounds,
            eps,
        };
        let kept = shell.filter_interior(interior);
        log::debug!("shell: {} of {} interior nodes kept", kept.len(), interior.len());
        shell.pts.extend(kept);
        shell.rebuild()?;
        Ok(shell)
    }

    /// Like [`Shell::new`] with extra nodes known to lie on a convex outer
    /// boundary (from an earlier refinement).
    pub fn with_boundary_nodes(
        outer: &Surface,
        inner: &Surface,
        interior: &[Point3],
        boundary: &[Point3],
        params: &ShellParams,
    ) -> Result<Self, ContinuumError> {
        let mut shell = Self::new(outer, inner, interior, params)?;
        for &p in boundary {
            if shell.insert(p)? {
                shell.extra_bdry.push(shell.pts.len() - 1);
            }
        }
        Ok(shell)
    }

    /// Drops candidate interior nodes that would break the surfaces.
    fn filter_interior(&self, interior: &[Point3]) -> Vec<Point3> {
        let sep = self.params.min_sep.max(self.eps);
        let surf_kd = KdTree::new(&self.pts[..self.n_surface]);
        let mut kept: Vec<Point3> = Vec::new();
        let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        let cell = sep.max(1e-300);
        let key = |p: Point3| {
            (
                (p.x / cell).floor() as i64,
                (p.y / cell).floor() as i64,
                (p.z / cell).floor() as i64,
            )
        };
        for &p in interior {
            if !p.is_finite() || !self.accepts(p) {
                continue;
            }
            if let Some((_, d)) = surf_kd.nearest(p) {
                if d < sep {
                    continue;
                }
            }
            let (x, y, z) = key(p);
            let mut close = false;
            'n: for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(c) = grid.get(&(x + dx, y + dy, z + dz)) {
                            if c.iter().any(|&j| kept[j].dist(p) < sep) {
                                close = true;
                                break 'n;
                            }
                        }
                    }
                }
            }
            if close {
                continue;
            }
            grid.entry((x, y, z)).or_default().push(kept.len());
            kept.push(p);
        }
        kept
    }

    /// Whether a new node at `p` keeps every barrier face protected: strictly
    /// inside the shell and outside every witness sphere.
    fn accepts(&self, p: Point3) -> bool {
        if self.in_witness_sphere(p) {
            return false;
        }
        self.in_shell(p)
    }

    fn in_witness_sphere(&self, p: Point3) -> bool {
        let tol = 1e-9;
        self.sphere_tree
            .candidates_point(p, 0.0)
            .into_iter()
            .any(|s| {
                let (c, r) = self.spheres[s];
                p.dist(c) <= r * (1.0 + tol)
            })
    }

    fn in_shell(&self, p: Point3) -> bool {
        let inside_outer = if self.convex_outer {
            // Strictly inside every face plane.
            self.outer.tris.iter().all(|t| {
                let [a, b, c] = t.map(|v| self.outer.points[v]);
                orient3d(a, b, c, p) < 0.0
            })
        } else {
            self.outer.contains(p) == Some(true)
        };
        inside_outer && (self.inner.is_empty() || self.inner.contains(p) == Some(false))
    }

    fn rebuild(&mut self) -> Result<(), ContinuumError> {
        let cfg = DelaunayConfig {
            seed: self.params.seed,
            ..Default::default()
        };
        self.dt = Delaunay::for_bounds(&self.bounds, &cfg);
        self.canon.clear();
        let order = brio_sort(&self.pts, self.params.seed);
        for &i in &order.order {
            self.dt.insert(self.pts[i])?;
            self.canon.push(i);
        }
        Ok(())
    }

    fn insert(&mut self, p: Point3) -> Result<bool, ContinuumError> {
        match self.dt.insert(p) {
            Ok(_) => {
                self.canon.push(self.pts.len());
                self.pts.push(p);
                Ok(true)
            }
            Err(DelaunayError::DuplicatePoint { .. }) => Ok(false),
            Err(e) => Err(e.into()),
        }
    }

    /// Cuts the shell out of the Delaunay complex.
    fn classify(&self) -> Result<Classified, ContinuumError> {
        let tets: Vec<[usize; 4]> = self
            .dt
            .finite_tets()
            .into_iter()
            .map(|t| t.map(|v| self.canon[v]))
            .collect();
        let all = TetMesh::new(self.pts.clone(), tets, Region::Continuum, NodeFlags::FEM_NODE);
        let adj = build_adjacency(&all)?;
        let missing: Vec<FaceKey> = {
            let mut m: Vec<FaceKey> = self
                .barrier
                .keys()
                .filter(|k| !adj.faces.contains_key(*k))
                .copied()
                .collect();
            m.sort_unstable();
            m
        };
        let n = all.tets.len();
        let mut comp = vec![usize::MAX; n];
        let mut keep_comp = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = keep_comp.len();
            comp[s] = id;
            let mut stack = vec![s];
            while let Some(t) = stack.pop() {
                for (i, f) in TET_FACES.iter().enumerate() {
                    let tet = all.tets[t];
                    let k = face_key(tet[f[0]], tet[f[1]], tet[f[2]]);
                    if self.barrier.contains_key(&k) {
                        continue;
                    }
                    if let Some(nb) = adj.neighbors[t][i] {
                        if comp[nb] == usize::MAX {
                            comp[nb] = id;
                            stack.push(nb);
                        }
                    }
                }
            }
            let c = crate::geom::centroid(&all.tet_points(s));
            keep_comp.push(self.in_shell_region(c));
        }
        let mut mesh = TetMesh {
            nodes: self.pts.clone(),
            flags: vec![NodeFlags::FEM_NODE; self.pts.len()],
            ..Default::default()
        };
        for t in 0..n {
            if keep_comp[comp[t]] {
                mesh.tets.push(all.tets[t]);
                mesh.regions.push(Region::Continuum);
            }
        }
        Ok(Classified { mesh, missing })
    }

    /// Shell membership of a tet centroid (no witness-sphere condition).
    fn in_shell_region(&self, p: Point3) -> bool {
        let inside_outer = if self.convex_outer {
            true
        } else {
            self.outer.contains(p) == Some(true)
        };
        inside_outer && (self.inner.is_empty() || self.inner.contains(p) == Some(false))
    }

    fn conformity_errors(&self, mesh: &TetMesh) -> Vec<FaceKey> {
        let mut count: HashMap<FaceKey, usize> = HashMap::new();
        for t in &mesh.tets {
            for f in TET_FACES {
                *count.entry(face_key(t[f[0]], t[f[1]], t[f[2]])).or_insert(0) += 1;
            }
        }
        let mut bad: Vec<FaceKey> = Vec::new();
        for k in self.barrier.keys() {
            if count.get(k) != Some(&1) {
                bad.push(*k);
            }
        }
        for (k, &c) in &count {
            if c == 1 && !self.barrier.contains_key(k) {
                // A kept boundary face on the convex hull is the domain
                // boundary; anything else is a leak.
                let on_hull = self.convex_outer && k.iter().all(|&v| self.is_outer_point(v));
                if !on_hull {
                    bad.push(*k);
                }
            }
        }
        bad.sort_unstable();
        bad
    }

    fn is_outer_point(&self, v: usize) -> bool {
        self.outer_flag.get(v).copied().unwrap_or(false) || self.extra_bdry.contains(&v)
    }

    /// Interior nodes inside the witness sphere of any of `faces`.
    fn offenders(&self, faces: &[FaceKey]) -> HashSet<usize> {
        let mut out = HashSet::new();
        let face_set: HashSet<FaceKey> = faces.iter().copied().collect();
        let mut sphere_of: Vec<(Point3, f64)> = Vec::new();
        for (t, tri) in self.inner.tris.iter().enumerate() {
            if face_set.contains(&face_key(tri[0], tri[1], tri[2])) {
                sphere_of.push(self.spheres[t]);
            }
        }
        for k in faces {
            let [a, b, c] = k.map(|v| self.pts[v]);
            let (cc, r) = witness_sphere(a, b, c, None);
            sphere_of.push((cc, r));
        }
        for i in self.n_surface..self.pts.len() {
            if self.extra_bdry.contains(&i) {
                continue;
            }
            let p = self.pts[i];
            if sphere_of.iter().any(|&(c, r)| p.dist(c) <= r * 1.5) {
                out.insert(i);
            }
        }
        out
    }

    fn drop_points(&mut self, drop: &HashSet<usize>) -> Result<(), ContinuumError> {
        let mut keep = Vec::with_capacity(self.pts.len());
        let mut new_of = vec![usize::MAX; self.pts.len()];
        for (i, &p) in self.pts.iter().enumerate() {
            if i < self.n_surface || !drop.contains(&i) {
                new_of[i] = keep.len();
                keep.push(p);
            }
        }
        self.pts = keep;
        self.extra_bdry = self.extra_bdry.iter().map(|&i| new_of[i]).filter(|&i| i != usize::MAX).collect();
        self.rebuild()
    }

    /// Classifies and recovers missing barrier faces by dropping nearby
    /// interior nodes, up to the configured number of passes.
    pub fn finish(&mut self) -> Result<ShellMesh, ContinuumError> {
        for pass in 0..=self.params.recovery_passes {
            let cl = self.classify()?;
            let mut bad = self.conformity_errors(&cl.mesh);
            bad.extend(cl.missing.iter().copied());
            bad.sort_unstable();
            bad.dedup();
            if bad.is_empty() {
                return Ok(self.output(cl.mesh));
            }
            log::debug!("shell recovery pass {pass}: {} faces not conforming", bad.len());
            let off = self.offenders(&bad);
            if off.is_empty() || pass == self.params.recovery_passes {
                return Err(ContinuumError::BoundaryNotRecovered {
                    missing: bad.len(),
                    faces: bad,
                });
            }
            self.drop_points(&off)?;
        }
        unreachable!()
    }

    fn output(&self, mut mesh: TetMesh) -> ShellMesh {
        let old = mesh.remove_unused_nodes();
        let mut new_of = vec![usize::MAX; self.pts.len()];
        for (n, &o) in old.iter().enumerate() {
            new_of[o] = n;
        }
        ShellMesh {
            mesh,
            inner_nodes: (0..self.n_inner).map(|i| new_of[i]).collect(),
            outer_nodes: self.outer_map.iter().map(|&i| new_of[i]).collect(),
            boundary_extra: self.extra_bdry.iter().map(|&i| new_of[i]).filter(|&i| i != usize::MAX).collect(),
        }
    }

    /// Inserts circumcentres (or centroids) of poor or badly graded tets that
    /// do not touch the inner surface, until none can be improved.
    pub fn refine(&mut self, q: &QmrParams) -> Result<QmrStats, ContinuumError> {
        let mut stats = QmrStats::default();
        if q.q_min <= 0.0 && q.grading.is_infinite() {
            return Ok(stats);
        }
        let mut prev_bad = usize::MAX;
        let mut before = self.pts.len();
        for _ in 0..q.max_passes {
            let cl = self.classify()?;
            let mesh = &cl.mesh;
            let cand = self.refinement_candidates(mesh, q)?;
            if cand.len() >= prev_bad {
                // The last pass did not help: undo it and stop.
                self.pts.truncate(before);
                self.rebuild()?;
                stats.inserted -= stats.last_pass;
                stats.rolled_back = true;
                break;
            }
            if cand.is_empty() {
                break;
            }
            prev_bad = cand.len();
            before = self.pts.len();
            let mut inserted = 0;
            let kd = KdTree::new(&self.pts);
            let mut fresh: Vec<Point3> = Vec::new();
            for t in cand {
                let tp = mesh.tet_points(t);
                let sep = (0.25 * crate::geom::shortest_edge(&tp)).max(0.5 * q.min_edge);
                let cen = crate::geom::centroid(&tp);
                let mut options = Vec::new();
                if let Ok((c, _)) = circumsphere(&tp) {
                    options.push(c);
                }
                options.push(cen);
                for p in options {
                    if !self.accepts(p) {
                        continue;
                    }
                    if kd.nearest(p).is_some_and(|(_, d)| d < sep) || fresh.iter().any(|f| f.dist(p) < sep) {
                        continue;
                    }
                    if self.insert(p)? {
                        fresh.push(p);
                        inserted += 1;
                        break;
                    }
                }
                if self.pts.len() > q.max_nodes {
                    return Err(ContinuumError::BudgetExceeded(q.max_nodes));
                }
            }
            stats.inserted += inserted;
            stats.last_pass = inserted;
            stats.passes += 1;
            if inserted == 0 {
                break;
            }
        }
        let cl = self.classify()?;
        stats.remaining = self.refinement_candidates(&cl.mesh, q)?.len();
        Ok(stats)
    }

    fn refinement_candidates(&self, mesh: &TetMesh, q: &QmrParams) -> Result<Vec<usize>, ContinuumError> {
        let protected = |t: usize| mesh.tets[t].iter().any(|&v| v < self.n_inner);
        let mut bad: Vec<(f64, usize)> = Vec::new();
        let adj = build_adjacency(mesh)?;
        let le: Vec<f64> = (0..mesh.tets.len()).map(|t| longest_edge(&mesh.tet_points(t))).collect();
        for t in 0..mesh.tets.len() {
            if protected(t) || le[t] < q.min_edge {
                continue;
            }
            let qt = element_quality(&mesh.tet_points(t));
            let mut is_bad = qt < q.q_min;
            if !is_bad && q.grading.is_finite() {
                is_bad = adj.neighbors[t].iter().flatten().any(|&n| le[t] > q.grading * le[n]);
            }
            if is_bad {
                bad.push((qt, t));
            }
        }
        bad.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(bad.into_iter().map(|x| x.1).collect())
    }
}

/// Sphere certifying triangle `abc`: circumsphere with the apex when given,
/// otherwise the smallest sphere through the three points.
fn witness_sphere(a: Point3, b: Point3, c: Point3, apex: Option<Point3>) -> (Point3, f64) {
    if let Some(d) = apex {
        if let Ok(s) = circumsphere(&[a, b, c, d]) {
            return s;
        }
    }
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(ac);
    let n2 = n.norm2();
    if n2 == 0.0 {
        let cen = (a + b + c) / 3.0;
        return (cen, a.dist(cen).max(b.dist(cen)).max(c.dist(cen)));
    }
    let off = (n.cross(ab) * ac.norm2() + ac.cross(n) * ab.norm2()) / (2.0 * n2);
    (a + off, off.norm())
}

/// Largest sphere through `abc` whose centre lies on the outer side of the
/// face (the side `orient3d` calls positive) and that holds none of `pts`
/// strictly inside. The centre moves at most two circumradii off the face.
fn bulged_sphere(a: Point3, b: Point3, c: Point3, pts: &[Point3], kd: &KdTree) -> (Point3, f64) {
    let (cc, r0) = witness_sphere(a, b, c, None);
    let mut n = (b - a).cross(c - a);
    let len = n.norm();
    if len == 0.0 || r0 == 0.0 {
        return (cc, r0);
    }
    n = n / len;
    if orient3d(a, b, c, a + n * r0) < 0.0 {
        n = -n;
    }
    let t_cap = 2.0 * r0;
    let far = cc + n * t_cap;
    let mut cand = kd.radius(cc, r0);
    cand.extend(kd.radius(far, (r0 * r0 + t_cap * t_cap).sqrt()));
    let mut t = t_cap;
    for i in cand {
        let p = pts[i];
        if p == a || p == b || p == c {
            continue;
        }
        let d = p - cc;
        let g = n.dot(d);
        if g > 0.0 {
            // Inside sphere(t) iff |d|² - r0² < 2 t g.
            t = t.min(0.5 * (d.norm2() - r0 * r0) / g);
        }
    }
    // Shrink a little so surface points stay strictly outside.
    let t = 0.99 * t.max(0.0);
    (cc + n * t, (r0 * r0 + t * t).sqrt())
}

fn is_convex(s: &Surface) -> bool {
    s.tris.iter().all(|t| {
        let [a, b, c] = t.map(|v| s.points[v]);
        s.points.iter().all(|&p| orient3d(a, b, c, p) <= 0.0)
    })
}

/// Tet mesh of the region between `outer` and `inner` using the surface
/// vertices plus those `interior` nodes that keep the surfaces protected.
pub fn mesh_between(
    outer: &Surface,
    inner: &Surface,
    interior: &[Point3],
    params: &ShellParams,
) -> Result<ShellMesh, ContinuumError> {
    Shell::new(outer, inner, interior, params)?.finish()
}

#[derive(Debug, Clone)]
pub struct QmrParams {
    pub q_min: f64,
    pub grading: f64,
    pub max_nodes: usize,
    pub max_passes: usize,
    /// Tets whose longest edge is below this are left alone, and new nodes
    /// keep at least half this distance from existing ones.
    pub min_edge: f64,
}

impl Default for QmrParams {
    fn default() -> Self {
        Self {
            q_min: 0.3,
            grading: 2.0,
            max_nodes: 200_000,
            max_passes: 30,
            min_edge: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QmrStats {
    pub inserted: usize,
    pub passes: usize,
    /// Unprotected tets still below target.
    pub remaining: usize,
    /// Whether the final pass was undone for making things worse.
    pub rolled_back: bool,
    last_pass: usize,
}

/// Shell meshing followed by quality refinement.
pub fn mesh_between_refined(
    outer: &Surface,
    inner: &Surface,
    interior: &[Point3],
    params: &ShellParams,
    qmr: &QmrParams,
) -> Result<(ShellMesh, QmrStats), ContinuumError> {
    let mut shell = Shell::new(outer, inner, interior, params)?;
    // Recover first so refinement starts from a conforming complex.
    shell.finish()?;
    let stats = shell.refine(qmr)?;
    Ok((shell.finish()?, stats))
}

/// Quality refinement of an existing conforming shell mesh. Nodes of `inner`
/// are protected; the region is cut out again by the same surfaces.
pub fn qmr_refine(
    shell: &ShellMesh,
    outer: &Surface,
    inner: &Surface,
    params: &ShellParams,
    qmr: &QmrParams,
) -> Result<(ShellMesh, QmrStats), ContinuumError> {
    let surface: HashSet<usize> = shell
        .inner_nodes
        .iter()
        .chain(shell.outer_nodes.iter())
        .chain(shell.boundary_extra.iter())
        .copied()
        .collect();
    let boundary: Vec<Point3> = shell.boundary_extra.iter().map(|&i| shell.mesh.nodes[i]).collect();
    let interior: Vec<Point3> = (0..shell.mesh.nodes.len())
        .filter(|i| !surface.contains(i))
        .map(|i| shell.mesh.nodes[i])
        .collect();
    let p = ShellParams {
        min_sep: 0.0,
        ..params.clone()
    };
    let mut sh = Shell::with_boundary_nodes(outer, inner, &interior, &boundary, &p)?;
    sh.finish()?;
    let stats = sh.refine(qmr)?;
    Ok((sh.finish()?, stats))
}

/// Interior node candidates on nested BCC lattices. The local spacing is
/// `h_min + slope * dist(x, seeds)`, rounded down to a power-of-two fraction
/// of the coarsest spacing. For a box the coarsest lattice coincides with
/// the boundary grid of [`init_boundary`]; otherwise it has spacing `h_max`.
pub fn graded_bcc_nodes(
    domain: &DomainSpec,
    seeds: &[Point3],
    h_min: f64,
    h_max: f64,
    slope: f64,
) -> GradedNodes {
    let bb = domain.bbox();
    let (origin, s_top) = match domain.shape {
        DomainShape::Box { min, max } => {
            let ext = max - min;
            let s = (0..3)
                .map(|k| ext[k] / (ext[k] / (std::f64::consts::SQRT_2 * domain.h_bdry)).ceil().max(1.0))
                .fold(f64::INFINITY, f64::min);
            (min, s)
        }
        DomainShape::Sphere { center, .. } => (center, h_max),
    };
    let mut kmax = 0usize;
    while s_top / (1u64 << (kmax + 1)) as f64 >= h_min {
        kmax += 1;
    }
    let s0 = s_top / (1u64 << kmax) as f64;
    let kd = KdTree::new(seeds);
    let target_level = |p: Point3| -> usize {
        let d = kd.nearest(p).map(|x| x.1).unwrap_or(f64::INFINITY);
        let h = h_min + slope * d;
        let mut k = 0;
        while k < kmax && s0 * (1u64 << (k + 1)) as f64 <= h {
            k += 1;
        }
        k
    };
    let lo = [0, 1, 2].map(|k| ((bb.min[k] - origin[k]) / s0).floor() as i64 - 1);
    let hi = [0, 1, 2].map(|k| ((bb.max[k] - origin[k]) / s0).ceil() as i64 + 1);
    let mut out = GradedNodes::default();
    let surface_grid = match domain.shape {
        DomainShape::Box { .. } => KdTree::new(&init_boundary(domain).points),
        DomainShape::Sphere { .. } => KdTree::new(&[]),
    };
    // Enumerate the finest lattice once: corners at s0 * integer, centres
    // at s0 * (integer + 1/2). A point's own level is the coarsest lattice
    // containing it.
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            for k in lo[2]..=hi[2] {
                for centre in [false, true] {
                    let o = if centre { 0.5 } else { 0.0 };
                    let mut p = origin + Point3::new(i as f64 + o, j as f64 + o, k as f64 + o) * s0;
                    let own = bcc_level(i, j, k, centre, kmax);
                    if target_level(p) > own {
                        continue;
                    }
                    if let DomainShape::Box { min, max } = domain.shape {
                        let snap = 1e-9 * s0;
                        let mut on_face = false;
                        for a in 0..3 {
                            for b in [min[a], max[a]] {
                                if (p[a] - b).abs() < snap {
                                    p[a] = b;
                                    on_face = true;
                                }
                            }
                        }
                        if on_face {
                            let inside = (0..3).all(|a| p[a] >= min[a] && p[a] <= max[a]);
                            let known = surface_grid.nearest(p).is_some_and(|(_, d)| d < 1e-6 * s0);
                            if inside && !known {
                                out.boundary.push(p);
                            }
                            continue;
                        }
                    }
                    if domain.depth(p) > 0.25 * s0 * (1u64 << own) as f64 {
                        out.interior.push(p);
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradedNodes {
    pub interior: Vec<Point3>,
    /// Nodes on a box face that refine the boundary grid.
    pub boundary: Vec<Point3>,
}

/// Coarsest level `l ≤ kmax` whose BCC lattice (spacing 2^l) contains the
/// finest-lattice point `(i, j, k)` (+½ if `centre`).
fn bcc_level(i: i64, j: i64, k: i64, centre: bool, kmax: usize) -> usize {
    if centre {
        return 0;
    }
    let mut l = 0;
    while l < kmax {
        // Level l+1 corners: multiples of 2^(l+1). Level l+1 centres:
        // odd multiples of 2^l.
        let m = 1i64 << (l + 1);
        let h = 1i64 << l;
        let corner = i % m == 0 && j % m == 0 && k % m == 0;
        let cen = [i, j, k].iter().all(|&x| x.rem_euclid(m) == h);
        if corner || cen {
            l += 1;
        } else {
            break;
        }
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{extract_boundary, validate};

    fn tet_surface(scale: f64, c: Point3) -> Surface {
        let m = TetMesh::new(
            vec![
                c + Point3::new(0.0, 0.0, 0.0) * scale,
                c + Point3::new(1.0, 0.0, 0.0) * scale,
                c + Point3::new(0.0, 1.0, 0.0) * scale,
                c + Point3::new(0.0, 0.0, 1.0) * scale,
            ],
            vec![[0, 1, 2, 3]],
            Region::Atomistic,
            NodeFlags::ATOM,
        );
        let adj = build_adjacency(&m).unwrap();
        extract_boundary(&m, &adj, |_| true)
    }

    #[test]
    fn box_boundary_counts() {
        let spec = DomainSpec::cube(Point3::zero(), 0.5, 1.0);
        let s = init_boundary(&spec);
        assert_eq!((s.points.len(), s.tris.len()), (8, 12));
        assert!(s.is_closed());
        assert!((s.enclosed_volume() - 1.0).abs() < 1e-12);
        let s = init_boundary(&DomainSpec::cube(Point3::zero(), 0.5, 0.5));
        assert_eq!(s.points.len(), 26);
        assert!(s.is_closed());
        let h = 0.5;
        for l in s.edge_lengths() {
            assert!(l >= h / 2.0 - 1e-12 && l <= 2.0 * h + 1e-12, "{l}");
        }
    }

    #[test]
    fn sphere_boundary_is_closed() {
        let spec = DomainSpec {
            shape: DomainShape::Sphere {
                center: Point3::new(1.0, 2.0, 3.0),
                radius: 5.0,
            },
            h_bdry: 1.5,
            grading: 2.0,
        };
        let s = init_boundary(&spec);
        assert!(s.is_closed());
        assert_eq!(s.euler_characteristic(), 2);
        assert!(s.enclosed_volume() > 0.0);
    }

    #[test]
    fn shell_around_single_tet() {
        let inner = tet_surface(1.0, Point3::splat(-0.3));
        let outer = init_boundary(&DomainSpec::cube(Point3::zero(), 3.0, 1.5));
        let nodes = graded_bcc_nodes(&DomainSpec::cube(Point3::zero(), 3.0, 1.5), &inner.points, 0.6, 2.4, 0.5).interior;
        let params = ShellParams {
            min_sep: 0.3,
            ..Default::default()
        };
        let sm = mesh_between(&outer, &inner, &nodes, &params).unwrap();
        assert!(validate(&sm.mesh).is_ok());
        let vol = 216.0 - 1.0 / 6.0;
        assert!((sm.mesh.total_volume() - vol).abs() < 1e-9);
        let adj = build_adjacency(&sm.mesh).unwrap();
        for t in &inner.tris {
            let k = face_key(sm.inner_nodes[t[0]], sm.inner_nodes[t[1]], sm.inner_nodes[t[2]]);
            let f = adj.faces.get(&k).expect("interface face present");
            assert!(f.second.is_none());
        }
    }

    #[test]
    fn empty_inner_fills_box() {
        let spec = DomainSpec::cube(Point3::zero(), 1.0, 1.0);
        let outer = init_boundary(&spec);
        let sm = mesh_between(&outer, &Surface::default(), &[], &ShellParams::default()).unwrap();
        assert!(validate(&sm.mesh).is_ok());
        assert!((sm.mesh.total_volume() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn outer_must_enclose() {
        let inner = tet_surface(1.0, Point3::splat(0.5));
        let outer = init_boundary(&DomainSpec::cube(Point3::zero(), 1.0, 1.0));
        assert!(matches!(
            mesh_between(&outer, &inner, &[], &ShellParams::default()),
            Err(ContinuumError::OuterDoesNotEnclose(_))
        ));
    }

    #[test]
    fn refinement_meets_quality_target() {
        let inner = tet_surface(1.0, Point3::splat(-0.3));
        let spec = DomainSpec::cube(Point3::zero(), 3.0, 1.5);
        let outer = init_boundary(&spec);
        let (sm, stats) = mesh_between_refined(
            &outer,
            &inner,
            &[],
            &ShellParams::default(),
            &QmrParams::default(),
        )
        .unwrap();
        assert!(validate(&sm.mesh).is_ok());
        let protected: HashSet<usize> = sm.inner_nodes.iter().copied().collect();
        let bad = (0..sm.mesh.tets.len())
            .filter(|&t| sm.mesh.tets[t].iter().all(|v| !protected.contains(v)))
            .filter(|&t| sm.mesh.quality(t) < 0.3)
            .count();
        assert_eq!(bad, stats.remaining);
        assert!((sm.mesh.total_volume() - (216.0 - 1.0 / 6.0)).abs() < 1e-9);
    }

    #[test]
    fn bcc_levels_nest() {
        assert_eq!(bcc_level(1, 0, 0, false, 3), 0);
        assert_eq!(bcc_level(2, 0, 2, false, 3), 1);
        assert_eq!(bcc_level(1, 1, 1, false, 3), 1);
        assert_eq!(bcc_level(4, 4, 0, false, 3), 2);
        assert_eq!(bcc_level(8, 0, 0, false, 3), 3);
        assert_eq!(bcc_level(3, 5, 7, true, 3), 0);
    }
}

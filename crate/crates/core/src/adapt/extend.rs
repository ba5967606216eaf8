//! Growth of the atomistic region: rebuild the atomistic mesh on the enlarged
//! atom set, cut the overlapped continuum tets out, remesh the cavity and
//! smooth around the seam.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::atomistic::build_atomistic_mesh;
use crate::continuum::{QmrParams, Shell, ShellMesh, ShellParams};
use crate::coupled::fuse;
use crate::delaunay::DelaunayConfig;
use crate::geom::{tets_intersect, Aabb};
use crate::interp::{AabbTree, KdTree};
use crate::mesh::{build_adjacency, extract_boundary, validate, NodeFlags, Region, TetMesh};
use crate::surface::Surface;
use crate::Point3;

use super::{laplacian_smooth, remove_slivers, AdaptError, EditMesh, SmoothStats, SLIVER_Q};

/// Tets of `mesh` selected by `filter` whose closed hull meets the closed
/// hull of some tet of `other`. Sorted.
pub fn tets_intersecting(mesh: &TetMesh, filter: impl Fn(usize) -> bool, other: &TetMesh) -> Vec<usize> {
    let ids: Vec<usize> = (0..mesh.tets.len()).filter(|&t| filter(t)).collect();
    if ids.is_empty() || other.tets.is_empty() {
        return Vec::new();
    }
    let tree = AabbTree::from_boxes(ids.iter().map(|&t| Aabb::from_points(&mesh.tet_points(t))).collect());
    let mut hit = vec![false; ids.len()];
    for s in 0..other.tets.len() {
        let sp = other.tet_points(s);
        for c in tree.candidates_box(&Aabb::from_points(&sp), 0.0) {
            if !hit[c] && tets_intersect(&mesh.tet_points(ids[c]), &sp, 0.0) {
                hit[c] = true;
            }
        }
    }
    (0..ids.len()).filter(|&i| hit[i]).map(|i| ids[i]).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtensionRequest {
    /// Lattice sites to add to the atomistic region.
    pub atoms: Vec<Point3>,
}

#[derive(Debug, Clone)]
pub struct ExtendParams {
    pub r_max: f64,
    pub shell: ShellParams,
    /// Cavity growth passes after a failed cavity remesh.
    pub grow_passes: usize,
    pub smooth_rounds: usize,
    pub smooth_hops: usize,
    /// Only band nodes with an incident tet below this quality move.
    pub smooth_below: f64,
    pub delaunay: DelaunayConfig,
    /// Candidate interior nodes for the cavity remesh, e.g. a graded grid
    /// around the new atom set. The old cavity nodes are reused when `None`.
    pub cavity_nodes: Option<Vec<Point3>>,
    /// Continuum tets with a node this close to an atom join the cavity.
    pub cavity_margin: f64,
    /// Quality refinement of the cavity mesh.
    pub cavity_qmr: Option<QmrParams>,
}

impl ExtendParams {
    pub fn new(r_max: f64) -> Self {
        Self {
            r_max,
            shell: ShellParams::default(),
            grow_passes: 3,
            smooth_rounds: 3,
            smooth_hops: 2,
            smooth_below: f64::INFINITY,
            delaunay: DelaunayConfig::default(),
            cavity_nodes: None,
            cavity_margin: 0.0,
            cavity_qmr: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Extension {
    pub mesh: TetMesh,
    /// Old node index of each new node, `None` for nodes that did not exist.
    pub old_of: Vec<Option<usize>>,
    /// Requested atoms that were already atom nodes.
    pub skipped: Vec<usize>,
    pub added_atoms: usize,
    pub cavity_tets: usize,
    pub grow_passes: usize,
    pub smooth: SmoothStats,
}

fn point_key(p: Point3) -> [u64; 3] {
    [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]
}

/// Old atom nodes followed by the requested atoms that are new.
fn union_atoms(mesh: &TetMesh, req: &ExtensionRequest) -> (Vec<Point3>, Vec<usize>, Vec<usize>) {
    let old_atoms: Vec<usize> = (0..mesh.nodes.len()).filter(|&n| mesh.flags[n].is_atom()).collect();
    let mut atoms: Vec<Point3> = old_atoms.iter().map(|&n| mesh.nodes[n]).collect();
    let eps = mesh.eps_node();
    let kd = KdTree::new(&atoms);
    let mut seen: HashSet<[u64; 3]> = HashSet::new();
    let mut skipped = Vec::new();
    for (i, &p) in req.atoms.iter().enumerate() {
        let dup = kd.nearest(p).is_some_and(|(_, d)| d <= eps) || !seen.insert(point_key(p));
        if dup {
            skipped.push(i);
        } else {
            atoms.push(p);
        }
    }
    if !skipped.is_empty() {
        log::debug!("{} requested atoms are already in the atomistic region", skipped.len());
    }
    (atoms, old_atoms, skipped)
}

/// Adds the requested atoms to the atomistic region, rebuilding it from
/// scratch and remeshing the continuum cavity it overlaps.
pub fn extend_atomistic(mesh: &TetMesh, req: &ExtensionRequest, params: &ExtendParams) -> Result<Extension, AdaptError> {
    let (atoms, old_atoms, skipped) = union_atoms(mesh, req);
    let added_atoms = atoms.len() - old_atoms.len();
    if added_atoms == 0 {
        return Ok(Extension {
            mesh: mesh.clone(),
            old_of: (0..mesh.nodes.len()).map(Some).collect(),
            skipped,
            added_atoms,
            cavity_tets: 0,
            grow_passes: 0,
            smooth: SmoothStats::default(),
        });
    }
    let am = build_atomistic_mesh(&atoms, Some(params.r_max), &params.delaunay)?.mesh;
    let adj_a = build_adjacency(&am)?;
    let inner = extract_boundary(&am, &adj_a, |_| true);

    let is_cont = |t: usize| mesh.regions[t] == Region::Continuum;
    let mut in_cavity = vec![false; mesh.tets.len()];
    for t in tets_intersecting(mesh, is_cont, &am) {
        in_cavity[t] = true;
    }
    if params.cavity_margin > 0.0 {
        let kd = KdTree::new(&am.nodes);
        for t in 0..mesh.tets.len() {
            if is_cont(t)
                && !in_cavity[t]
                && mesh.tets[t].iter().any(|&n| kd.nearest(mesh.nodes[n]).is_some_and(|(_, d)| d < params.cavity_margin))
            {
                in_cavity[t] = true;
            }
        }
    }
    let adj = build_adjacency(mesh)?;
    let node_tets = mesh.node_tets();
    let mut last_err = String::new();
    for pass in 0..=params.grow_passes {
        let in_r = |t: usize| !is_cont(t) || in_cavity[t];
        let mut outer = extract_boundary(mesh, &adj, in_r);
        outer.apex.iter_mut().for_each(|a| *a = None);
        let on_outer: HashSet<usize> = outer.source.iter().copied().collect();
        let interior: Vec<Point3> = if let Some(c) = &params.cavity_nodes {
            let bb = outer.bbox();
            c.iter().copied().filter(|&p| bb.contains(p, 0.0)).collect()
        } else {
            let mut v: Vec<usize> = (0..mesh.tets.len())
                .filter(|&t| is_cont(t) && in_cavity[t])
                .flat_map(|t| mesh.tets[t])
                .filter(|n| !on_outer.contains(n) && !mesh.flags[*n].is_atom())
                .collect();
            v.sort_unstable();
            v.dedup();
            v.into_iter().map(|n| mesh.nodes[n]).collect()
        };
        let attempt = Shell::new(&outer, &inner, &interior, &params.shell).and_then(|mut s| {
            if let Some(q) = &params.cavity_qmr {
                s.finish()?;
                s.refine(q)?;
            }
            s.finish()
        });
        match attempt {
            Ok(shell) => {
                let cavity_tets = in_cavity.iter().filter(|&&c| c).count();
                return assemble(mesh, &am, &inner, &outer, &shell, &in_cavity, &old_atoms, skipped, added_atoms, cavity_tets, pass, params);
            }
            Err(e) => {
                log::debug!("cavity pass {pass} failed: {e}");
                last_err = e.to_string();
                // Grow by every continuum tet touching the cavity surface.
                let mut grew = false;
                for &n in &on_outer {
                    if mesh.flags[n].is_boundary() {
                        continue;
                    }
                    for &t in &node_tets[n] {
                        if is_cont(t) && !in_cavity[t] {
                            in_cavity[t] = true;
                            grew = true;
                        }
                    }
                }
                if !grew {
                    break;
                }
            }
        }
    }
    Err(AdaptError::CavityFailed(last_err))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    mesh: &TetMesh,
    am: &TetMesh,
    inner: &Surface,
    outer: &Surface,
    shell: &ShellMesh,
    in_cavity: &[bool],
    old_atoms: &[usize],
    skipped: Vec<usize>,
    added_atoms: usize,
    cavity_tets: usize,
    grow_passes: usize,
    params: &ExtendParams,
) -> Result<Extension, AdaptError> {
    // New node order: union atoms, then old non-atom nodes, then anything
    // the cavity mesh created.
    let mut nodes = am.nodes.clone();
    let mut flags = vec![NodeFlags::ATOM; nodes.len()];
    let mut old_of: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut new_of = vec![usize::MAX; mesh.nodes.len()];
    for (k, &o) in old_atoms.iter().enumerate() {
        new_of[o] = k;
        old_of[k] = Some(o);
        flags[k] = mesh.flags[o];
    }
    for o in 0..mesh.nodes.len() {
        if new_of[o] == usize::MAX {
            new_of[o] = nodes.len();
            nodes.push(mesh.nodes[o]);
            flags.push(mesh.flags[o]);
            old_of.push(Some(o));
        }
    }
    let by_pos: HashMap<[u64; 3], usize> = mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &p)| (point_key(p), new_of[i]))
        .collect();
    let mut shell_map = vec![usize::MAX; shell.mesh.nodes.len()];
    for (i, &n) in shell.inner_nodes.iter().enumerate() {
        if n != usize::MAX {
            shell_map[n] = inner.source[i];
        }
    }
    for (i, &n) in shell.outer_nodes.iter().enumerate() {
        if n != usize::MAX && shell_map[n] == usize::MAX {
            shell_map[n] = new_of[outer.source[i]];
        }
    }
    for (n, &p) in shell.mesh.nodes.iter().enumerate() {
        if shell_map[n] == usize::MAX {
            shell_map[n] = match by_pos.get(&point_key(p)) {
                Some(&i) => i,
                None => {
                    nodes.push(p);
                    flags.push(NodeFlags::FEM_NODE);
                    old_of.push(None);
                    nodes.len() - 1
                }
            };
        }
    }
    let mut out = TetMesh {
        nodes,
        flags,
        ..Default::default()
    };
    for &tet in &am.tets {
        out.tets.push(tet);
        out.regions.push(Region::Atomistic);
    }
    for (t, &tet) in mesh.tets.iter().enumerate() {
        if mesh.regions[t] == Region::Continuum && !in_cavity[t] {
            out.tets.push(tet.map(|v| new_of[v]));
            out.regions.push(Region::Continuum);
        }
    }
    let first_cavity = out.tets.len();
    for &tet in &shell.mesh.tets {
        out.tets.push(tet.map(|v| shell_map[v]));
        out.regions.push(Region::Continuum);
    }
    // Every node of a continuum tet carries a displacement DoF.
    for t in 0..out.tets.len() {
        if out.regions[t] == Region::Continuum {
            for v in out.tets[t] {
                out.flags[v].insert(NodeFlags::FEM_NODE);
            }
        }
    }

    // Smooth around the seam: nodes within a few edge hops of the cavity
    // surfaces.
    let seeds: HashSet<usize> = inner
        .source
        .iter()
        .copied()
        .chain(outer.source.iter().map(|&o| new_of[o]))
        .collect();
    let mut edit = EditMesh::from_mesh(&out);
    remove_slivers(&mut edit, SLIVER_Q, 8)?;
    let band = hop_band(&edit, &seeds, params.smooth_hops);
    let movable: Vec<usize> = band
        .into_iter()
        .filter(|&n| {
            let star = edit.tets_of_node(n);
            star.iter().all(|&t| edit.region(t) == Region::Continuum)
                && star.iter().any(|&t| edit.quality(t) < params.smooth_below)
        })
        .collect();
    let smooth = laplacian_smooth(&mut edit, &movable, params.smooth_rounds);
    let mut out = edit.to_mesh();
    let old = out.remove_unused_nodes();
    let old_of = old.iter().map(|&i| old_of[i]).collect();
    let rep = validate(&out);
    if !rep.is_ok() {
        return Err(AdaptError::Invalid(format!("{:?}", rep.violations.iter().take(4).collect::<Vec<_>>())));
    }
    log::debug!(
        "extension: +{added_atoms} atoms, {cavity_tets} cavity tets, {} new continuum tets",
        out.tets.len().saturating_sub(first_cavity)
    );
    Ok(Extension {
        mesh: out,
        old_of,
        skipped,
        added_atoms,
        cavity_tets,
        grow_passes,
        smooth,
    })
}

fn hop_band(m: &EditMesh, seeds: &HashSet<usize>, hops: usize) -> Vec<usize> {
    let mut dist: HashMap<usize, usize> = HashMap::new();
    let mut q: VecDeque<usize> = VecDeque::new();
    let mut start: Vec<usize> = seeds.iter().copied().collect();
    start.sort_unstable();
    for s in start {
        dist.insert(s, 0);
        q.push_back(s);
    }
    while let Some(n) = q.pop_front() {
        let d = dist[&n];
        if d == hops {
            continue;
        }
        for nb in m.node_neighbors(n) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(nb) {
                e.insert(d + 1);
                q.push_back(nb);
            }
        }
    }
    let mut v: Vec<usize> = dist.into_keys().collect();
    v.sort_unstable();
    v
}

/// Rebuilds the whole continuum region around the atomistic mesh of the
/// enlarged atom set, reusing the existing continuum nodes. Fallback when
/// the cavity cannot be remeshed locally.
pub fn regenerate(
    mesh: &TetMesh,
    req: &ExtensionRequest,
    domain_boundary: &Surface,
    params: &ExtendParams,
) -> Result<Extension, AdaptError> {
    let (atoms, old_atoms, skipped) = union_atoms(mesh, req);
    let added_atoms = atoms.len() - old_atoms.len();
    let am = build_atomistic_mesh(&atoms, Some(params.r_max), &params.delaunay)?.mesh;
    let adj_a = build_adjacency(&am)?;
    let inner = extract_boundary(&am, &adj_a, |_| true);
    let on_surface: HashSet<[u64; 3]> = domain_boundary.points.iter().map(|&p| point_key(p)).collect();
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for (n, &p) in mesh.nodes.iter().enumerate() {
        let f = mesh.flags[n];
        if f.is_atom() {
            continue;
        }
        if f.is_boundary() {
            if !on_surface.contains(&point_key(p)) {
                boundary.push(p);
            }
        } else {
            interior.push(p);
        }
    }
    let mut sh = Shell::with_boundary_nodes(domain_boundary, &inner, &interior, &boundary, &params.shell)
        .map_err(|e| AdaptError::CavityFailed(e.to_string()))?;
    let shell = sh.finish().map_err(|e| AdaptError::CavityFailed(e.to_string()))?;
    let (out, atom_ids) = fuse(&am, &shell, &inner);
    let by_pos: HashMap<[u64; 3], usize> =
        mesh.nodes.iter().enumerate().map(|(i, &p)| (point_key(p), i)).collect();
    let old_of = out.nodes.iter().map(|&p| by_pos.get(&point_key(p)).copied()).collect();
    debug_assert_eq!(atom_ids.len(), out.flags.iter().filter(|f| f.is_atom()).count());
    let rep = validate(&out);
    if !rep.is_ok() {
        return Err(AdaptError::Invalid(format!("{:?}", rep.violations.iter().take(4).collect::<Vec<_>>())));
    }
    Ok(Extension {
        cavity_tets: mesh.count_region(Region::Continuum),
        mesh: out,
        old_of,
        skipped,
        added_atoms,
        grow_passes: 0,
        smooth: SmoothStats::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::DomainSpec;
    use crate::coupled::{build_coupled_mesh, CoupledParams};

    fn fcc_ball(n: i64, r: f64) -> Vec<Point3> {
        let b = [[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]];
        let mut v = Vec::new();
        for i in -n..=n {
            for j in -n..=n {
                for k in -n..=n {
                    for o in b {
                        let p = Point3::new(i as f64 + o[0], j as f64 + o[1], k as f64 + o[2]);
                        if p.norm() <= r {
                            v.push(p);
                        }
                    }
                }
            }
        }
        v
    }

    #[test]
    fn intersecting_matches_brute_force() {
        let cm = build_coupled_mesh(
            &fcc_ball(2, 1.6),
            &CoupledParams::new(DomainSpec::cube(Point3::zero(), 4.0, 2.0), 1.0),
        )
        .unwrap();
        let m = &cm.mesh;
        let shifted = TetMesh {
            nodes: m.nodes.iter().map(|&p| p + Point3::new(0.37, -0.21, 0.13)).collect(),
            ..m.submesh(|t| m.regions[t] == Region::Atomistic).0
        };
        let shifted = TetMesh {
            flags: vec![NodeFlags::ATOM; shifted.nodes.len()],
            ..shifted
        };
        let got = tets_intersecting(m, |t| m.regions[t] == Region::Continuum, &shifted);
        let want: Vec<usize> = (0..m.tets.len())
            .filter(|&t| m.regions[t] == Region::Continuum)
            .filter(|&t| {
                (0..shifted.tets.len()).any(|s| tets_intersect(&m.tet_points(t), &shifted.tet_points(s), 0.0))
            })
            .collect();
        assert_eq!(got, want);
        assert!(!got.is_empty());
        let far = TetMesh {
            nodes: shifted.nodes.iter().map(|&p| p + Point3::splat(100.0)).collect(),
            ..shifted.clone()
        };
        assert!(tets_intersecting(m, |_| true, &far).is_empty());
    }

    #[test]
    fn extension_by_a_shell_of_atoms() {
        let core = fcc_ball(3, 1.8);
        let cm = build_coupled_mesh(
            &core,
            &CoupledParams::new(DomainSpec::cube(Point3::zero(), 6.0, 3.0), 1.0),
        )
        .unwrap();
        let r_max = cm.r_max;
        let layer: Vec<Point3> = fcc_ball(3, 2.4).into_iter().filter(|p| p.norm() > 1.8).collect();
        let ext = extend_atomistic(
            &cm.mesh,
            &ExtensionRequest { atoms: layer.clone() },
            &ExtendParams::new(r_max),
        )
        .unwrap();
        let m = &ext.mesh;
        assert!(validate(m).is_ok());
        assert_eq!(ext.added_atoms, layer.len());
        assert_eq!(m.flags.iter().filter(|f| f.is_atom()).count(), core.len() + layer.len());
        assert!((m.total_volume() - 1728.0).abs() < 1e-8);
        // Atomistic part equals a from-scratch build on the union.
        let mut union = core.clone();
        union.extend(layer.iter().copied());
        let fresh = build_atomistic_mesh(&union, Some(r_max), &DelaunayConfig::default()).unwrap().mesh;
        let canon = |nodes: &[Point3], tets: &[[usize; 4]]| {
            let mut v: Vec<[[u64; 3]; 4]> = tets
                .iter()
                .map(|t| {
                    let mut k = t.map(|i| point_key(nodes[i]));
                    k.sort_unstable();
                    k
                })
                .collect();
            v.sort_unstable();
            v
        };
        let (sub, _) = m.submesh(|t| m.regions[t] == Region::Atomistic);
        assert_eq!(canon(&sub.nodes, &sub.tets), canon(&fresh.nodes, &fresh.tets));
        // Existing atoms did not move.
        for p in &core {
            assert!(m.nodes.iter().any(|q| q == p));
        }
        // Asking again for the same atoms is a no-op.
        let again = extend_atomistic(m, &ExtensionRequest { atoms: layer }, &ExtendParams::new(r_max)).unwrap();
        assert_eq!(again.added_atoms, 0);
        assert_eq!(&again.mesh, m);
    }
}

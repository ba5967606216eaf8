//! Full coupled mesh: atomistic tets, continuum shell, fused along the
//! interface.

use thiserror::Error;

use crate::adapt::{remove_slivers, EditMesh, SLIVER_Q};
use crate::atomistic::{build_atomistic_mesh, AtomisticError};
use crate::continuum::{
    graded_bcc_nodes, init_boundary, ContinuumError, DomainSpec, QmrParams, QmrStats, Shell,
    ShellMesh, ShellParams,
};
use crate::delaunay::DelaunayConfig;
use crate::mesh::{build_adjacency, extract_boundary, MeshError, NodeFlags, TetMesh};
use crate::surface::Surface;
use crate::Point3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoupledError {
    #[error(transparent)]
    Atomistic(#[from] AtomisticError),
    #[error(transparent)]
    Continuum(#[from] ContinuumError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("sliver removal failed: {0}")]
    Sliver(String),
}

#[derive(Debug, Clone)]
pub struct CoupledParams {
    pub domain: DomainSpec,
    /// Deletion threshold; derived from the atoms when `None`.
    pub r_max: Option<f64>,
    /// Interior node spacing next to the interface.
    pub h_min: f64,
    /// Growth of interior node spacing per unit distance from the interface.
    pub slope: f64,
    pub shell: ShellParams,
    pub qmr: QmrParams,
    pub delaunay: DelaunayConfig,
}

impl CoupledParams {
    pub fn new(domain: DomainSpec, h_min: f64) -> Self {
        Self {
            domain,
            r_max: None,
            h_min,
            slope: 0.5,
            shell: ShellParams {
                min_sep: 0.5 * h_min,
                ..Default::default()
            },
            qmr: QmrParams {
                grading: domain.grading,
                min_edge: 0.5 * h_min,
                ..Default::default()
            },
            delaunay: DelaunayConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoupledMesh {
    /// Atom nodes first, then continuum-only nodes.
    pub mesh: TetMesh,
    /// Input atom index of each atom node.
    pub atom_ids: Vec<usize>,
    pub r_max: f64,
    pub qmr: QmrStats,
}

/// Atomistic mesh of `atoms`, continuum shell out to the domain boundary,
/// then the two fused on the shared interface nodes.
pub fn build_coupled_mesh(atoms: &[Point3], params: &CoupledParams) -> Result<CoupledMesh, CoupledError> {
    params.domain.validate()?;
    let am = build_atomistic_mesh(atoms, params.r_max, &params.delaunay)?;
    let adj = build_adjacency(&am.mesh)?;
    let inner = extract_boundary(&am.mesh, &adj, |_| true);
    let outer = init_boundary(&params.domain);
    let nodes = graded_bcc_nodes(
        &params.domain,
        &inner.points,
        params.h_min,
        params.domain.h_bdry,
        params.slope,
    );
    let mut shell = Shell::with_boundary_nodes(&outer, &inner, &nodes.interior, &nodes.boundary, &params.shell)?;
    shell.finish()?;
    let qmr = shell.refine(&params.qmr)?;
    let sm = shell.finish()?;
    let (mesh, atom_ids) = fuse(&am.mesh, &sm, &inner);
    let mut edit = EditMesh::from_mesh(&mesh);
    remove_slivers(&mut edit, SLIVER_Q, 8).map_err(|e| CoupledError::Sliver(e.to_string()))?;
    let mesh = edit.to_mesh();
    Ok(CoupledMesh {
        mesh,
        atom_ids,
        r_max: am.r_max,
        qmr,
    })
}

/// Joins an atomistic mesh and a shell meshed against its boundary surface
/// `inner` (whose `source` holds atomistic node ids). Unused atom nodes are
/// dropped. Returns the mesh and the atomistic node id of each atom node.
pub fn fuse(atomistic: &TetMesh, shell: &ShellMesh, inner: &Surface) -> (TetMesh, Vec<usize>) {
    let mut mesh = atomistic.clone();
    for f in mesh.flags.iter_mut() {
        f.insert(NodeFlags::ATOM);
    }
    let mut map = vec![usize::MAX; shell.mesh.nodes.len()];
    for (i, &n) in shell.inner_nodes.iter().enumerate() {
        if n != usize::MAX {
            map[n] = inner.source[i];
            mesh.flags[inner.source[i]].insert(NodeFlags::FEM_NODE);
        }
    }
    let mut on_outer = vec![false; shell.mesh.nodes.len()];
    for &n in &shell.outer_nodes {
        if n != usize::MAX {
            on_outer[n] = true;
        }
    }
    for &n in &shell.boundary_extra {
        on_outer[n] = true;
    }
    for (n, &p) in shell.mesh.nodes.iter().enumerate() {
        if map[n] == usize::MAX {
            map[n] = mesh.nodes.len();
            mesh.nodes.push(p);
            let mut f = NodeFlags::FEM_NODE;
            if on_outer[n] {
                f.insert(NodeFlags::DOMAIN_BOUNDARY);
            }
            mesh.flags.push(f);
        } else if on_outer[n] {
            mesh.flags[map[n]].insert(NodeFlags::DOMAIN_BOUNDARY);
        }
    }
    for (t, tet) in shell.mesh.tets.iter().enumerate() {
        mesh.tets.push(tet.map(|v| map[v]));
        mesh.regions.push(shell.mesh.regions[t]);
    }
    let n_atoms = atomistic.nodes.len();
    let old = mesh.remove_unused_nodes();
    let atom_ids = old.iter().copied().take_while(|&o| o < n_atoms).collect();
    (mesh, atom_ids)
}

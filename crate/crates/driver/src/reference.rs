//! Fully atomistic reference solution and the errors of a coupled solution
//! against it.

use qcmesh::atomistic::build_atomistic_mesh;
use qcmesh::delaunay::DelaunayConfig;
use qcmesh::geom::p1_gradient;
use qcmesh::interp::transfer_to_points;
use qcmesh::{Point3, TetMesh};
use qcmesh_model::atomistic::AtomisticModel;
use qcmesh_model::lattice::Lattice;
use qcmesh_model::minimize::{minimize, MinimizeParams, Objective};
use qcmesh_model::potential::Potential;

use crate::DriverError;

#[derive(Debug, Clone)]
pub struct Reference {
    /// Delaunay mesh of the lattice sites in the closed domain.
    pub mesh: TetMesh,
    /// Reference displacement at each mesh node.
    pub u: Vec<Point3>,
    /// `ℰ(u^a)`.
    pub energy: f64,
    pub grad_inf: f64,
    pub iters: u64,
}

/// Minimises the atomistic energy on the whole lattice (defects included).
pub fn solve_reference(lattice: &Lattice, potential: Potential, params: &MinimizeParams) -> Result<Reference, DriverError> {
    let model = AtomisticModel::new(lattice.clone(), potential);
    let r = minimize(&model, vec![0.0; model.n_dof()], params)?;
    let u_sites = model.site_displacements(&r.x);
    let tol = 1e-9 * lattice.spec.a;
    let keep: Vec<usize> = (0..lattice.len()).filter(|&i| lattice.spec.depth(lattice.sites[i]) >= -tol).collect();
    let pts: Vec<Point3> = keep.iter().map(|&i| lattice.sites[i]).collect();
    let mesh = build_atomistic_mesh(&pts, None, &DelaunayConfig::default())
        .map_err(|e| DriverError::Coupled(e.into()))?
        .mesh;
    // Orphaned sites are dropped from the mesh; map nodes back by position.
    let by_pos: std::collections::HashMap<[u64; 3], usize> =
        keep.iter().map(|&i| (key(lattice.sites[i]), i)).collect();
    let u = mesh.nodes.iter().map(|p| u_sites[by_pos[&key(*p)]]).collect();
    Ok(Reference { mesh, u, energy: r.energy, grad_inf: r.grad_inf, iters: r.iters })
}

fn key(p: Point3) -> [u64; 3] {
    [(p.x + 0.0).to_bits(), (p.y + 0.0).to_bits(), (p.z + 0.0).to_bits()]
}

/// `‖∇(v - w)‖_{L²}` for two nodal fields on the same mesh.
pub fn gradient_error(mesh: &TetMesh, v: &[Point3], w: &[Point3]) -> f64 {
    let mut s = 0.0;
    for t in 0..mesh.tets.len() {
        let d = mesh.tets[t].map(|n| v[n] - w[n]);
        if let Some(g) = p1_gradient(&mesh.tet_points(t), &d) {
            s += mesh.volume(t).abs() * g.iter().flatten().map(|x| x * x).sum::<f64>();
        }
    }
    s.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceErrors {
    /// `‖∇u^a - ∇u_h‖_{L²}` on the reference mesh.
    pub geometry: f64,
    /// `|ℰ(u^a) - ℰ^bgfc(u_h)|`.
    pub energy: f64,
}

/// Errors of the coupled solution `u_h` on `mesh` (BGFC energy
/// `energy_h`). `u_h` is sampled at the reference nodes, so both gradients
/// are piecewise constant on the reference mesh.
pub fn reference_errors(
    reference: &Reference,
    mesh: &TetMesh,
    u_h: &[Point3],
    energy_h: f64,
    eps: f64,
) -> Result<ReferenceErrors, DriverError> {
    let tr = transfer_to_points(mesh, u_h, &reference.mesh.nodes, eps);
    if !tr.warnings.is_empty() {
        return Err(DriverError::NoCommonRefinement(tr.warnings.len()));
    }
    Ok(ReferenceErrors {
        geometry: gradient_error(&reference.mesh, &reference.u, &tr.values),
        energy: (reference.energy - energy_h).abs(),
    })
}

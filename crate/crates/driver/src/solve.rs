//! One BGFC solve on a fixed coupled mesh, and the masked estimator.

use qcmesh::{Point3, Region, TetMesh};
use qcmesh_model::blend::Blend;
use qcmesh_model::coupled::{Bgfc, CoupledModel};
use qcmesh_model::estimate::{estimate_error, Estimate};
use qcmesh_model::lattice::Lattice;
use qcmesh_model::minimize::{minimize, MinimizeParams, Objective};
use qcmesh_model::potential::Potential;

use crate::DriverError;

#[derive(Debug, Clone)]
pub struct Solution {
    /// Nodal displacements, zero on clamped nodes.
    pub u: Vec<Point3>,
    pub energy: f64,
    pub grad_inf: f64,
    pub iters: u64,
    pub converged: bool,
    pub n_dof: usize,
    /// Lattice points inside the domain that no tet contains.
    pub unlocated: usize,
}

/// Minimises the BGFC energy on `mesh`, warm-started from `u0` (nodal).
pub fn solve_bgfc(
    mesh: &TetMesh,
    lattice: &Lattice,
    blend: &Blend,
    potential: Potential,
    u0: Option<&[Point3]>,
    params: &MinimizeParams,
) -> Result<Solution, DriverError> {
    let model = CoupledModel::new(mesh, lattice, blend, potential)?;
    let gc = model.ghost_correction(mesh, lattice, blend)?;
    let bgfc = Bgfc::new(&model, &gc)?;
    let x0 = match u0 {
        Some(u) => model.pack(u),
        None => vec![0.0; model.n_dof()],
    };
    let r = minimize(&bgfc, x0, params)?;
    Ok(Solution {
        u: model.node_displacements(&r.x),
        energy: r.energy,
        grad_inf: r.grad_inf,
        iters: r.iters,
        converged: r.converged,
        n_dof: model.n_dof(),
        unlocated: model.unlocated,
    })
}

/// `η_T` on blend and continuum tets; atomistic tets carry zero.
pub fn estimate(mesh: &TetMesh, u: &[Point3]) -> Estimate {
    estimate_error(mesh, u).masked(|t| mesh.regions[t] != Region::Atomistic)
}

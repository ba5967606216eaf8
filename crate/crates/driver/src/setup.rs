//! Problem construction: lattice, blend, initial atom set and coupled mesh.

use qcmesh::adapt::ExtendParams;
use qcmesh::continuum::{graded_bcc_nodes, DomainSpec};
use qcmesh::coupled::{build_coupled_mesh, CoupledMesh, CoupledParams};
use qcmesh::geom::centroid;
use qcmesh::{Point3, Region, TetMesh};
use qcmesh_model::blend::Blend;
use qcmesh_model::lattice::{build_lattice, Lattice, LatticeSpec};
use qcmesh_model::potential::{Potential, SitePotential};

use crate::config::RunConfig;
use crate::DriverError;

/// Everything that stays fixed over an adaptive run.
#[derive(Debug, Clone)]
pub struct Problem {
    pub lattice: Lattice,
    pub potential: Potential,
    pub domain: DomainSpec,
    /// Lattice constant.
    pub a: f64,
    pub d_layer: f64,
    pub h_min: f64,
    pub atom_pad: f64,
    pub clearance: f64,
}

impl Problem {
    pub fn new(cfg: &RunConfig) -> Result<Self, DriverError> {
        let spec = cfg.lattice_spec();
        let potential = cfg.potential();
        let lattice = build_lattice(&spec, potential.cutoff())?;
        let a = spec.a;
        let domain = DomainSpec::cube(spec.center(), spec.half_width, cfg.mesh.h_bdry * a);
        domain.validate().map_err(|e| DriverError::Config(e.to_string()))?;
        Ok(Self {
            lattice,
            potential,
            domain,
            a,
            d_layer: cfg.d_layer(a),
            h_min: cfg.mesh.h_min * a,
            atom_pad: cfg.mesh.atom_pad * a,
            clearance: cfg.mesh.clearance * a,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.lattice.spec
    }

    /// The configured blend, centred on the voids when no centres are given.
    pub fn initial_blend(&self, cfg: &RunConfig) -> Result<Blend, DriverError> {
        let spec = self.spec();
        let centers: Vec<Point3> = if !cfg.blend.centers.is_empty() {
            cfg.blend.centers.iter().map(|c| Point3::from_array(*c) * self.a).collect()
        } else if !spec.voids.is_empty() {
            spec.voids.iter().map(|v| v.center()).collect()
        } else {
            vec![spec.center()]
        };
        Ok(Blend::new(centers, cfg.blend.r_a * self.a, cfg.blend.l_b * self.a)?)
    }

    /// Domain sites resolved atomistically for `blend`: out to the outer
    /// blend radius plus the pad, and not closer than the clearance to the
    /// domain boundary.
    pub fn atoms_for(&self, blend: &Blend) -> Vec<Point3> {
        let reach = blend.r_outer() + self.atom_pad;
        self.lattice
            .domain_sites()
            .into_iter()
            .filter(|&p| blend.distance(p) <= reach && self.spec().depth(p) >= self.clearance)
            .collect()
    }

    pub fn coupled_params(&self) -> CoupledParams {
        CoupledParams::new(self.domain, self.h_min)
    }

    /// Extension parameters that remesh the cavity on the same graded grid
    /// as the initial mesh, graded around `atoms`.
    pub fn extend_params(&self, r_max: f64, atoms: &[Point3]) -> ExtendParams {
        let cp = self.coupled_params();
        let grid = graded_bcc_nodes(&self.domain, atoms, cp.h_min, self.domain.h_bdry, cp.slope);
        let mut p = ExtendParams::new(r_max);
        p.shell = cp.shell;
        p.cavity_nodes = Some(grid.interior);
        p.cavity_margin = 2.0 * cp.h_min;
        p.smooth_below = cp.qmr.q_min;
        p.cavity_qmr = Some(cp.qmr);
        p
    }

    pub fn initial_mesh(&self, blend: &Blend) -> Result<CoupledMesh, DriverError> {
        let atoms = self.atoms_for(blend);
        if atoms.is_empty() {
            return Err(DriverError::Config("the initial blend selects no atoms".into()));
        }
        let mut cm = build_coupled_mesh(&atoms, &self.coupled_params())?;
        retag(&mut cm.mesh, blend);
        Ok(cm)
    }

    /// Equality tolerance for node positions.
    pub fn eps(&self) -> f64 {
        1e-8 * self.a
    }
}

/// Atomistic-mesh tets become ATOMISTIC where `β(centroid) = 0` and BLEND
/// otherwise; continuum tets are untouched.
pub fn retag(mesh: &mut TetMesh, blend: &Blend) {
    for t in 0..mesh.tets.len() {
        if mesh.regions[t] != Region::Continuum {
            mesh.regions[t] = if blend.beta(centroid(&mesh.tet_points(t))) == 0.0 {
                Region::Atomistic
            } else {
                Region::Blend
            };
        }
    }
}

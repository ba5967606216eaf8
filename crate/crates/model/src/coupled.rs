//! Blended energy-based coupling (BQCE) on a coupled mesh and its
//! ghost-force corrected variant (BGFC).
//!
//! The unknown is the nodal displacement of a piecewise-affine field on the
//! mesh, clamped to zero on the domain boundary. Lattice sites that are not
//! mesh nodes see the interpolated field; sites outside the mesh see zero.

use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::ops::Range;

use qcmesh::geom::{centroid, p1_shape_gradients};
use qcmesh::interp::{locate, AabbTree, EPS_BARY};
use qcmesh::TetMesh;

use crate::blend::Blend;
use crate::cauchy_born::CauchyBorn;
use crate::lattice::{build_lattice, Lattice, LatticeSpec};
use crate::minimize::Objective;
use crate::potential::{Potential, SitePotential};
use crate::{pos_key, ModelError, Point3, IDENTITY};

#[derive(Debug, Clone)]
struct TetTerm {
    /// Mesh tet index.
    tet: usize,
    dofs: [Option<usize>; 4],
    grads: [Point3; 4],
    /// `|T| β(midpoint)`.
    weight: f64,
}

#[derive(Debug, Clone)]
pub struct CoupledModel {
    dof_of: Vec<Option<usize>>,
    n_dof: usize,
    potential: Potential,
    cb: CauchyBorn,
    w0: f64,
    site_pos: Vec<Point3>,
    site_weight: Vec<f64>,
    site_v0: Vec<f64>,
    site_self: Vec<Range<usize>>,
    site_bonds: Vec<Range<usize>>,
    bond_ref: Vec<Point3>,
    bond_interp: Vec<Range<usize>>,
    interp_dof: Vec<usize>,
    interp_w: Vec<f64>,
    tets: Vec<TetTerm>,
    fingerprint: u64,
    /// Lattice points inside the domain that no tet contains.
    pub unlocated: usize,
}

/// `δE^bqce_hom(0)` for a given mesh, blend and potential.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostCorrection {
    pub g: Vec<f64>,
    fingerprint: u64,
}

fn fingerprint(mesh: &TetMesh, spec: &LatticeSpec, blend: &Blend, potential: &Potential) -> u64 {
    let mut h = DefaultHasher::new();
    for p in &mesh.nodes {
        pos_key(*p).hash(&mut h);
    }
    mesh.tets.hash(&mut h);
    for f in &mesh.flags {
        f.bits().hash(&mut h);
    }
    format!("{:?}", spec.homogeneous()).hash(&mut h);
    format!("{blend:?}").hash(&mut h);
    format!("{potential:?}").hash(&mut h);
    h.finish()
}

impl CoupledModel {
    /// BQCE on `mesh` for the sites of `lattice`. Every site with `β < 1`
    /// contributes `(1 - β)` times its energy difference; every tet with
    /// `β(midpoint) > 0` contributes `β |T| (W(F) - W(I))`.
    pub fn new(mesh: &TetMesh, lattice: &Lattice, blend: &Blend, potential: Potential) -> Result<Self, ModelError> {
        blend.validate()?;
        potential.validate()?;
        let spec = &lattice.spec;
        let tol = 1e-9 * spec.a;
        let mut n_dof = 0;
        let dof_of: Vec<Option<usize>> = (0..mesh.nodes.len())
            .map(|n| {
                let clamped = mesh.flags[n].is_boundary() || spec.depth(mesh.nodes[n]) <= tol;
                (!clamped).then(|| {
                    n_dof += 1;
                    n_dof - 1
                })
            })
            .collect();
        let by_pos: HashMap<[u64; 3], usize> = mesh.nodes.iter().enumerate().map(|(i, &p)| (pos_key(p), i)).collect();
        let tree = AabbTree::new(mesh);

        let mut m = CoupledModel {
            dof_of,
            n_dof,
            cb: CauchyBorn::new(spec.structure, spec.a, potential),
            w0: 0.0,
            potential,
            site_pos: Vec::new(),
            site_weight: Vec::new(),
            site_v0: Vec::new(),
            site_self: Vec::new(),
            site_bonds: Vec::new(),
            bond_ref: Vec::new(),
            bond_interp: Vec::new(),
            interp_dof: Vec::new(),
            interp_w: Vec::new(),
            tets: Vec::new(),
            fingerprint: fingerprint(mesh, spec, blend, &potential),
            unlocated: 0,
        };
        m.w0 = m.cb.w(&IDENTITY)?;

        let interp = |m: &mut CoupledModel, p: Point3| -> Range<usize> {
            let start = m.interp_dof.len();
            if let Some(&n) = by_pos.get(&pos_key(p)) {
                if let Some(d) = m.dof_of[n] {
                    m.interp_dof.push(d);
                    m.interp_w.push(1.0);
                }
            } else if spec.depth(p) > tol {
                match locate(&tree, mesh, p, EPS_BARY) {
                    Ok((t, w)) => {
                        for (k, &n) in mesh.tets[t].iter().enumerate() {
                            if let (Some(d), true) = (m.dof_of[n], w[k] != 0.0) {
                                m.interp_dof.push(d);
                                m.interp_w.push(w[k]);
                            }
                        }
                    }
                    Err(_) => m.unlocated += 1,
                }
            }
            start..m.interp_dof.len()
        };

        for i in 0..lattice.len() {
            let p = lattice.sites[i];
            let beta = blend.beta(p);
            if beta >= 1.0 {
                continue;
            }
            let self_r = interp(&mut m, p);
            let b0 = m.bond_ref.len();
            let mut refs = Vec::new();
            for &j in lattice.neighbors(i) {
                let q = lattice.sites[j];
                refs.push(q - p);
                m.bond_ref.push(q - p);
                let r = interp(&mut m, q);
                m.bond_interp.push(r);
            }
            m.site_pos.push(p);
            m.site_weight.push(1.0 - beta);
            m.site_v0.push(m.potential.energy(&refs));
            m.site_self.push(self_r);
            m.site_bonds.push(b0..m.bond_ref.len());
        }
        if m.unlocated > 0 {
            log::warn!("coupled model: {} lattice points inside the domain are outside the mesh", m.unlocated);
        }

        for t in 0..mesh.tets.len() {
            let pts = mesh.tet_points(t);
            let beta = blend.beta(centroid(&pts));
            if beta <= 0.0 {
                continue;
            }
            let vol = mesh.volume(t);
            let grads = p1_shape_gradients(&pts).ok_or(ModelError::DegenerateElement(t))?;
            if !(vol > 0.0) {
                return Err(ModelError::DegenerateElement(t));
            }
            m.tets.push(TetTerm { tet: t, dofs: mesh.tets[t].map(|n| m.dof_of[n]), grads, weight: vol * beta });
        }
        Ok(m)
    }

    /// The ghost-force correction for this model's mesh, blend and potential,
    /// computed on the defect-free lattice.
    pub fn ghost_correction(&self, mesh: &TetMesh, lattice: &Lattice, blend: &Blend) -> Result<GhostCorrection, ModelError> {
        let hom = build_lattice(&lattice.spec.homogeneous(), lattice.r_cut)?;
        let hm = CoupledModel::new(mesh, &hom, blend, self.potential)?;
        if hm.fingerprint != self.fingerprint || hm.n_dof != self.n_dof {
            return Err(ModelError::StaleCorrection);
        }
        let mut g = vec![0.0; 3 * hm.n_dof];
        hm.energy_grad(&vec![0.0; 3 * hm.n_dof], &mut g)?;
        Ok(GhostCorrection { g, fingerprint: hm.fingerprint })
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn num_sites(&self) -> usize {
        self.site_pos.len()
    }

    pub fn num_quadrature_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn dof_of(&self, node: usize) -> Option<usize> {
        self.dof_of[node]
    }

    /// Nodal displacements (clamped nodes get zero).
    pub fn node_displacements(&self, x: &[f64]) -> Vec<Point3> {
        self.dof_of
            .iter()
            .map(|d| d.map_or(Point3::zero(), |d| Point3::new(x[3 * d], x[3 * d + 1], x[3 * d + 2])))
            .collect()
    }

    pub fn pack(&self, u: &[Point3]) -> Vec<f64> {
        let mut x = vec![0.0; 3 * self.n_dof];
        for (n, d) in self.dof_of.iter().enumerate() {
            if let Some(d) = d {
                x[3 * d..3 * d + 3].copy_from_slice(&u[n].to_array());
            }
        }
        x
    }

    fn value(&self, x: &[f64], r: &Range<usize>) -> Point3 {
        let mut v = Point3::zero();
        for k in r.clone() {
            let d = self.interp_dof[k];
            v += Point3::new(x[3 * d], x[3 * d + 1], x[3 * d + 2]) * self.interp_w[k];
        }
        v
    }

    fn scatter(&self, g: &mut [f64], r: &Range<usize>, v: Point3) {
        for k in r.clone() {
            let d = self.interp_dof[k];
            let w = self.interp_w[k];
            g[3 * d] += w * v.x;
            g[3 * d + 1] += w * v.y;
            g[3 * d + 2] += w * v.z;
        }
    }

    fn eval(&self, x: &[f64], mut grad: Option<&mut [f64]>) -> Result<f64, ModelError> {
        if x.len() != 3 * self.n_dof {
            return Err(ModelError::DofMismatch { got: x.len(), want: 3 * self.n_dof });
        }
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut e_sites = 0.0;
        let mut bonds = Vec::new();
        let mut dv = Vec::new();
        for s in 0..self.site_pos.len() {
            let us = self.value(x, &self.site_self[s]);
            let br = self.site_bonds[s].clone();
            bonds.clear();
            for b in br.clone() {
                bonds.push(self.bond_ref[b] + self.value(x, &self.bond_interp[b]) - us);
            }
            let w = self.site_weight[s];
            match grad.as_deref_mut() {
                None => e_sites += w * (self.potential.energy(&bonds) - self.site_v0[s]),
                Some(g) => {
                    dv.resize(bonds.len(), Point3::zero());
                    e_sites += w * (self.potential.energy_grad(&bonds, &mut dv) - self.site_v0[s]);
                    let mut total = Point3::zero();
                    for (k, b) in br.enumerate() {
                        let f = dv[k] * w;
                        self.scatter(g, &self.bond_interp[b], f);
                        total += f;
                    }
                    self.scatter(g, &self.site_self[s], -total);
                }
            }
        }
        let mut e_cont = 0.0;
        for t in &self.tets {
            let mut f = IDENTITY;
            for a in 0..4 {
                if let Some(d) = t.dofs[a] {
                    for i in 0..3 {
                        for j in 0..3 {
                            f[i][j] += x[3 * d + i] * t.grads[a][j];
                        }
                    }
                }
            }
            match grad.as_deref_mut() {
                None => {
                    let w = self.cb.w(&f).map_err(|_| ModelError::DegenerateElement(t.tet))?;
                    e_cont += t.weight * (w - self.w0);
                }
                Some(g) => {
                    let (w, p) = self.cb.w_stress(&f).map_err(|_| ModelError::DegenerateElement(t.tet))?;
                    e_cont += t.weight * (w - self.w0);
                    for a in 0..4 {
                        if let Some(d) = t.dofs[a] {
                            for i in 0..3 {
                                let pg: f64 = (0..3).map(|j| p[i][j] * t.grads[a][j]).sum();
                                g[3 * d + i] += t.weight * pg;
                            }
                        }
                    }
                }
            }
        }
        Ok(e_sites + e_cont)
    }
}

impl Objective for CoupledModel {
    fn n_dof(&self) -> usize {
        3 * self.n_dof
    }

    fn energy(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.eval(x, None)
    }

    fn energy_grad(&self, x: &[f64], grad: &mut [f64]) -> Result<f64, ModelError> {
        self.eval(x, Some(grad))
    }
}

/// `E^bgfc(u) = E^bqce(u) - <g, u>`.
#[derive(Debug, Clone, Copy)]
pub struct Bgfc<'a> {
    pub model: &'a CoupledModel,
    pub correction: &'a GhostCorrection,
}

impl<'a> Bgfc<'a> {
    pub fn new(model: &'a CoupledModel, correction: &'a GhostCorrection) -> Result<Self, ModelError> {
        if model.fingerprint != correction.fingerprint || 3 * model.n_dof != correction.g.len() {
            return Err(ModelError::StaleCorrection);
        }
        Ok(Self { model, correction })
    }
}

impl Objective for Bgfc<'_> {
    fn n_dof(&self) -> usize {
        self.model.n_dof()
    }

    fn energy(&self, x: &[f64]) -> Result<f64, ModelError> {
        let lin: f64 = self.correction.g.iter().zip(x).map(|(g, u)| g * u).sum();
        Ok(self.model.energy(x)? - lin)
    }

    fn energy_grad(&self, x: &[f64], grad: &mut [f64]) -> Result<f64, ModelError> {
        let e = self.model.energy_grad(x, grad)?;
        let lin: f64 = self.correction.g.iter().zip(x).map(|(g, u)| g * u).sum();
        for (gr, c) in grad.iter_mut().zip(&self.correction.g) {
            *gr -= c;
        }
        Ok(e - lin)
    }
}

//! Fully atomistic energy-difference functional on a lattice.

use crate::lattice::Lattice;
use crate::minimize::Objective;
use crate::potential::{Potential, SitePotential};
use crate::{ModelError, Point3};

/// Bonds shorter than this fraction of the shortest reference bond trigger a
/// warning.
const BLOWUP_FRACTION: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct AtomisticModel {
    pub lattice: Lattice,
    pub potential: Potential,
    dof_of: Vec<Option<usize>>,
    n_dof: usize,
    v0: Vec<f64>,
    min_bond: f64,
}

impl AtomisticModel {
    pub fn new(lattice: Lattice, potential: Potential) -> Self {
        let mut n_dof = 0;
        let dof_of = lattice
            .fixed
            .iter()
            .map(|&f| {
                (!f).then(|| {
                    n_dof += 1;
                    n_dof - 1
                })
            })
            .collect();
        let mut min_bond = f64::INFINITY;
        let v0 = (0..lattice.len())
            .map(|i| {
                let b = reference_bonds(&lattice, i);
                min_bond = b.iter().map(|g| g.norm()).fold(min_bond, f64::min);
                potential.energy(&b)
            })
            .collect();
        Self { lattice, potential, dof_of, n_dof, v0, min_bond }
    }

    pub fn dof_of(&self, site: usize) -> Option<usize> {
        self.dof_of[site]
    }

    /// Per-site displacements from a packed state (fixed sites get zero).
    pub fn site_displacements(&self, x: &[f64]) -> Vec<Point3> {
        self.dof_of
            .iter()
            .map(|d| d.map_or(Point3::zero(), |d| Point3::new(x[3 * d], x[3 * d + 1], x[3 * d + 2])))
            .collect()
    }

    pub fn pack(&self, u: &[Point3]) -> Vec<f64> {
        let mut x = vec![0.0; 3 * self.n_dof];
        for (i, d) in self.dof_of.iter().enumerate() {
            if let Some(d) = d {
                x[3 * d..3 * d + 3].copy_from_slice(&u[i].to_array());
            }
        }
        x
    }

    fn eval(&self, x: &[f64], mut grad: Option<&mut [f64]>) -> Result<f64, ModelError> {
        if x.len() != 3 * self.n_dof {
            return Err(ModelError::DofMismatch { got: x.len(), want: 3 * self.n_dof });
        }
        let u = self.site_displacements(x);
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut e = 0.0;
        let mut bonds = Vec::new();
        let mut dv = Vec::new();
        let mut blowup = false;
        for i in 0..self.lattice.len() {
            let nb = self.lattice.neighbors(i);
            bonds.clear();
            bonds.extend(nb.iter().map(|&j| self.lattice.sites[j] - self.lattice.sites[i] + u[j] - u[i]));
            blowup |= bonds.iter().any(|b| b.norm() < BLOWUP_FRACTION * self.min_bond);
            match grad.as_deref_mut() {
                None => e += self.potential.energy(&bonds) - self.v0[i],
                Some(g) => {
                    dv.resize(bonds.len(), Point3::zero());
                    e += self.potential.energy_grad(&bonds, &mut dv) - self.v0[i];
                    for (&j, d) in nb.iter().zip(&dv) {
                        add(g, self.dof_of[j], *d);
                        add(g, self.dof_of[i], -*d);
                    }
                }
            }
        }
        if blowup {
            log::warn!("atomistic energy: bond compressed below {BLOWUP_FRACTION} of the shortest lattice bond");
        }
        Ok(e)
    }
}

fn reference_bonds(l: &Lattice, i: usize) -> Vec<Point3> {
    l.neighbors(i).iter().map(|&j| l.sites[j] - l.sites[i]).collect()
}

fn add(g: &mut [f64], d: Option<usize>, v: Point3) {
    if let Some(d) = d {
        g[3 * d] += v.x;
        g[3 * d + 1] += v.y;
        g[3 * d + 2] += v.z;
    }
}

impl Objective for AtomisticModel {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, LatticeSpec, Structure};

    #[test]
    fn zero_state_has_zero_energy() {
        let l = build_lattice(&LatticeSpec::cube(Structure::Bcc, 1.0, 2.0), 1.1).unwrap();
        let m = AtomisticModel::new(l, Potential::default_morse(1.0));
        let x = vec![0.0; m.n_dof()];
        assert_eq!(m.energy(&x).unwrap(), 0.0);
    }
}

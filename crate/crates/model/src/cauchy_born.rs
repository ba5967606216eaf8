//! Cauchy-Born energy density `W(F) = V({Fρ}) / |det A|`.

use crate::lattice::Structure;
use crate::potential::{Potential, SitePotential};
use crate::{det3, mat_vec, Mat3, ModelError, Point3};

#[derive(Debug, Clone, PartialEq)]
pub struct CauchyBorn {
    pub potential: Potential,
    pub stencil: Vec<Point3>,
    pub site_volume: f64,
}

impl CauchyBorn {
    pub fn new(structure: Structure, a: f64, potential: Potential) -> Self {
        Self {
            stencil: structure.stencil(a, potential.cutoff()),
            site_volume: structure.site_volume(a),
            potential,
        }
    }

    fn bonds(&self, f: &Mat3) -> Vec<Point3> {
        self.stencil.iter().map(|&r| mat_vec(f, r)).collect()
    }

    /// Energy per unit reference volume.
    pub fn w(&self, f: &Mat3) -> Result<f64, ModelError> {
        let det = det3(f);
        if !(det > 0.0) {
            return Err(ModelError::InvertedDeformation(det));
        }
        Ok(self.potential.energy(&self.bonds(f)) / self.site_volume)
    }

    /// `W(F)` and the first Piola stress `∂W/∂F`.
    pub fn w_stress(&self, f: &Mat3) -> Result<(f64, Mat3), ModelError> {
        let det = det3(f);
        if !(det > 0.0) {
            return Err(ModelError::InvertedDeformation(det));
        }
        let bonds = self.bonds(f);
        let mut g = vec![Point3::zero(); bonds.len()];
        let e = self.potential.energy_grad(&bonds, &mut g);
        let mut p = [[0.0; 3]; 3];
        for (gr, r) in g.iter().zip(&self.stencil) {
            for i in 0..3 {
                for j in 0..3 {
                    p[i][j] += gr[i] * r[j];
                }
            }
        }
        for row in &mut p {
            for x in row.iter_mut() {
                *x /= self.site_volume;
            }
        }
        Ok((e / self.site_volume, p))
    }

    /// Per-site energy of the undeformed lattice.
    pub fn site_energy(&self) -> f64 {
        self.potential.energy(&self.stencil)
    }

    /// Lattice constant minimising the per-site energy of a uniformly
    /// dilated lattice: root of the dilation derivative in `[lo, hi]` by
    /// bisection.
    pub fn equilibrium_constant(structure: Structure, potential: &Potential, lo: f64, hi: f64) -> f64 {
        // Stencil taken at the lower end so every bond that can enter the
        // cutoff is present.
        let stencil = structure.stencil(1.0, potential.cutoff() / lo);
        let mut g = vec![Point3::zero(); stencil.len()];
        let mut slope = |a: f64| {
            let b: Vec<Point3> = stencil.iter().map(|&r| r * a).collect();
            potential.energy_grad(&b, &mut g);
            g.iter().zip(&stencil).map(|(g, r)| g.dot(*r)).sum::<f64>()
        };
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if slope(m) > 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }
}

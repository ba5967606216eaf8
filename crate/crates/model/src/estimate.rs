//! Gradient-based error indicator `η_T = ‖∇u_h‖_{L²(T)}`.

use qcmesh::geom::p1_gradient;
use qcmesh::TetMesh;

use crate::Point3;

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub per_tet: Vec<f64>,
    /// `Σ_T η_T`.
    pub sum: f64,
    /// `(Σ_T η_T²)^{1/2} = ‖∇u_h‖_{L²}`.
    pub l2: f64,
}

impl Estimate {
    pub fn from_values(per_tet: Vec<f64>) -> Self {
        let sum = per_tet.iter().sum();
        let l2 = per_tet.iter().map(|e| e * e).sum::<f64>().sqrt();
        Self { per_tet, sum, l2 }
    }

    /// The same indicator with the tets rejected by `keep` zeroed.
    pub fn masked(&self, keep: impl Fn(usize) -> bool) -> Self {
        Self::from_values(
            self.per_tet.iter().enumerate().map(|(t, &e)| if keep(t) { e } else { 0.0 }).collect(),
        )
    }
}

/// `η_T = |∇u_h|_F |T|^{1/2}` for the piecewise-affine field with nodal
/// values `u`. Degenerate tets get zero.
pub fn estimate_error(mesh: &TetMesh, u: &[Point3]) -> Estimate {
    let per_tet = (0..mesh.tets.len())
        .map(|t| {
            let vals = mesh.tets[t].map(|n| u[n]);
            match p1_gradient(&mesh.tet_points(t), &vals) {
                Some(g) => {
                    let f2: f64 = g.iter().flatten().map(|x| x * x).sum();
                    (f2 * mesh.volume(t).abs()).sqrt()
                }
                None => 0.0,
            }
        })
        .collect();
    Estimate::from_values(per_tet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qcmesh::{NodeFlags, Region};

    #[test]
    fn affine_field_on_one_tet() {
        let nodes = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(0.0, 2.0, 0.0),
            Point3::new(0.0, 0.0, 2.0),
        ];
        let m = TetMesh::new(nodes.clone(), vec![[0, 1, 2, 3]], Region::Continuum, NodeFlags::FEM_NODE);
        let b = [[0.1, -0.2, 0.3], [0.0, 0.5, 0.1], [0.2, 0.2, -0.4]];
        let u: Vec<Point3> = nodes
            .iter()
            .map(|p| Point3::new(
                b[0][0] * p.x + b[0][1] * p.y + b[0][2] * p.z,
                b[1][0] * p.x + b[1][1] * p.y + b[1][2] * p.z,
                b[2][0] * p.x + b[2][1] * p.y + b[2][2] * p.z,
            ))
            .collect();
        let e = estimate_error(&m, &u);
        let bf: f64 = b.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        assert!((e.per_tet[0] - bf * (8.0f64 / 6.0).sqrt()).abs() < 1e-14);
        assert_eq!(estimate_error(&m, &[Point3::zero(); 4]).sum, 0.0);
    }
}

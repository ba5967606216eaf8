//! Atomistic, Cauchy-Born and blended coupling energies evaluated on
//! `qcmesh` meshes, plus the geometry optimiser and the gradient-based
//! error indicator.
//!
//! Displacements of a coupled state live on mesh nodes and are packed into a
//! flat `Vec<f64>` of free degrees of freedom (three per node not on the
//! domain boundary). Energies are energy differences: every functional
//! vanishes at zero displacement.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod atomistic;
pub mod blend;
pub mod cauchy_born;
pub mod coupled;
pub mod estimate;
pub mod lattice;
pub mod minimize;
pub mod potential;

use thiserror::Error;

pub use qcmesh::Point3;

/// 3x3 matrix, row major: `m[i][j]`.
pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("inconsistent lattice geometry: {0}")]
    BadGeometry(String),
    #[error("deformation gradient has det {0} <= 0")]
    InvertedDeformation(f64),
    #[error("tet {0} is degenerate")]
    DegenerateElement(usize),
    #[error("ghost-force correction was built for a different mesh or blend")]
    StaleCorrection,
    #[error("state vector has length {got}, model expects {want}")]
    DofMismatch { got: usize, want: usize },
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

pub(crate) fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub(crate) fn mat_vec(m: &Mat3, v: Point3) -> Point3 {
    Point3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Exact-bits key of a position, with `-0.0` folded onto `0.0`.
pub(crate) fn pos_key(p: Point3) -> [u64; 3] {
    [(p.x + 0.0).to_bits(), (p.y + 0.0).to_bits(), (p.z + 0.0).to_bits()]
}

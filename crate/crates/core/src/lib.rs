//! Tetrahedral meshing for atomistic-to-continuum coupled simulations.
//!
//! The crate covers the geometric side of the workflow: exact predicates,
//! incremental Delaunay triangulation, the atomistic and continuum meshes,
//! local adaptation and field transfer between meshes.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adapt;
pub mod atomistic;
pub mod continuum;
pub mod coupled;
pub mod delaunay;
pub mod geom;
pub mod interp;
pub mod mesh;
pub mod predicates;
pub mod scalar;
pub mod surface;

/// Point / vector type used by all mesh data structures.
pub type Point3 = geom::Vec3<f64>;

pub use mesh::{NodeFlags, Region, TetMesh};

//! Point location and nodal field transfer between meshes.

mod aabb;
mod kdtree;

use thiserror::Error;

pub use aabb::AabbTree;
pub use kdtree::KdTree;

use crate::geom::barycentric;
use crate::mesh::TetMesh;
use crate::Point3;

/// Slack on barycentric weights when testing containment.
pub const EPS_BARY: f64 = 1e-12;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum LocateError {
    #[error("no tetrahedron contains {0:?}")]
    NotFound(Point3),
}

/// Lowest-index tet containing `p` with all barycentric weights at least
/// `-eps_bary`, and those weights.
pub fn locate(
    tree: &AabbTree,
    mesh: &TetMesh,
    p: Point3,
    eps_bary: f64,
) -> Result<(usize, [f64; 4]), LocateError> {
    let slack = 1e-9 * tree.root_box().diagonal().max(1.0);
    for t in tree.candidates_point(p, slack) {
        if let Some(w) = barycentric(&mesh.tet_points(t), p) {
            if w.iter().all(|&x| x >= -eps_bary) {
                return Ok((t, w));
            }
        }
    }
    Err(LocateError::NotFound(p))
}

/// How a target node obtained its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferSource {
    Coincident(usize),
    Interpolated(usize),
    Nearest(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    pub values: Vec<Point3>,
    pub sources: Vec<TransferSource>,
    /// Target nodes that fell outside the source mesh.
    pub warnings: Vec<usize>,
}

/// Nodal transfer from `old` to `new`: copy at coincident nodes (within
/// `eps`), barycentric interpolation inside the old mesh, nearest old node
/// otherwise (with a warning).
pub fn transfer(old: &TetMesh, values: &[Point3], new: &TetMesh, eps: f64) -> Transfer {
    transfer_to_points(old, values, &new.nodes, eps)
}

pub fn transfer_to_points(old: &TetMesh, values: &[Point3], targets: &[Point3], eps: f64) -> Transfer {
    assert_eq!(values.len(), old.nodes.len(), "one value per source node");
    let kd = KdTree::new(&old.nodes);
    let bvh = AabbTree::new(old);
    let mut out = Transfer {
        values: Vec::with_capacity(targets.len()),
        sources: Vec::with_capacity(targets.len()),
        warnings: Vec::new(),
    };
    for (i, &p) in targets.iter().enumerate() {
        if let Some(&q) = kd.radius(p, eps).first() {
            out.values.push(values[q]);
            out.sources.push(TransferSource::Coincident(q));
            continue;
        }
        match locate(&bvh, old, p, EPS_BARY) {
            Ok((t, w)) => {
                let v = old.tets[t];
                let mut acc = Point3::zero();
                for k in 0..4 {
                    acc += values[v[k]] * w[k];
                }
                out.values.push(acc);
                out.sources.push(TransferSource::Interpolated(t));
            }
            Err(_) => {
                let (q, _) = kd.nearest(p).expect("nonempty source mesh");
                log::warn!("transfer: node {i} outside source mesh, using nearest node {q}");
                out.values.push(values[q]);
                out.sources.push(TransferSource::Nearest(q));
                out.warnings.push(i);
            }
        }
    }
    out
}

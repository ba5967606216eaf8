//! The canonical atomistic mesh: Delaunay tets of the atom positions with
//! oversized boundary elements peeled off.

use thiserror::Error;

use crate::delaunay::{triangulate, DelaunayConfig, DelaunayError};
use crate::geom::circumradius;
use crate::interp::KdTree;
use crate::mesh::{build_adjacency, MeshError, NodeFlags, Region, TetMesh};
use crate::Point3;

/// Default multiplier on the largest nearest-neighbour distance.
pub const DEFAULT_C_R: f64 = 1.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtomisticError {
    #[error("need at least two atoms, got {0}")]
    TooFewAtoms(usize),
    #[error("element deletion removed every tetrahedron")]
    MeshVanished,
    #[error("element deletion did not settle within {0} rounds")]
    NoConvergence(usize),
    #[error("r_max must be positive, got {0}")]
    BadRadius(f64),
    #[error(transparent)]
    Delaunay(#[from] DelaunayError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeletionParams {
    pub r_max: f64,
    pub max_rounds: usize,
}

impl DeletionParams {
    pub fn new(r_max: f64) -> Self {
        Self {
            r_max,
            max_rounds: 10_000,
        }
    }
}

/// `c_r` times the largest nearest-neighbour distance among `atoms`.
pub fn compute_rmax(atoms: &[Point3], c_r: f64) -> Result<f64, AtomisticError> {
    if atoms.len() < 2 {
        return Err(AtomisticError::TooFewAtoms(atoms.len()));
    }
    Ok(c_r * max_nn_distance(atoms))
}

pub fn max_nn_distance(atoms: &[Point3]) -> f64 {
    let kd = KdTree::new(atoms);
    atoms
        .iter()
        .enumerate()
        .map(|(i, &p)| kd.nearest_filtered(p, |j| j == i).map(|x| x.1).unwrap_or(0.0))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deletion {
    pub mesh: TetMesh,
    /// Input tet indices deleted in each round, in round order.
    pub rounds: Vec<Vec<usize>>,
    /// Nodes that had tets before deletion and have none after.
    pub orphans: Vec<usize>,
    /// Input index of each output tet.
    pub kept: Vec<usize>,
}

/// Repeatedly deletes tets that share a face with the current boundary and
/// whose circumradius exceeds `r_max`, until a round deletes nothing.
pub fn delete_elements(mesh: &TetMesh, params: &DeletionParams) -> Result<Deletion, AtomisticError> {
    if !(params.r_max > 0.0) {
        return Err(AtomisticError::BadRadius(params.r_max));
    }
    let adj = build_adjacency(mesh)?;
    let n = mesh.tets.len();
    let radius: Vec<f64> = (0..n).map(|t| circumradius(&mesh.tet_points(t))).collect();
    let mut alive = vec![true; n];
    let on_boundary = |t: usize, alive: &[bool]| {
        adj.neighbors[t]
            .iter()
            .any(|nb| nb.map(|x| !alive[x]).unwrap_or(true))
    };
    let mut candidates: Vec<usize> = (0..n).filter(|&t| on_boundary(t, &alive)).collect();
    let mut rounds = Vec::new();
    loop {
        if rounds.len() >= params.max_rounds {
            return Err(AtomisticError::NoConvergence(params.max_rounds));
        }
        let deleted: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&t| alive[t] && radius[t] > params.r_max)
            .collect();
        if deleted.is_empty() {
            break;
        }
        for &t in &deleted {
            alive[t] = false;
        }
        let mut next: Vec<usize> = deleted
            .iter()
            .flat_map(|&t| adj.neighbors[t].iter().flatten().copied())
            .filter(|&x| alive[x])
            .collect();
        next.sort_unstable();
        next.dedup();
        candidates = next;
        rounds.push(deleted);
    }
    let kept: Vec<usize> = (0..n).filter(|&t| alive[t]).collect();
    if kept.is_empty() && n > 0 {
        return Err(AtomisticError::MeshVanished);
    }
    let mut had = vec![false; mesh.nodes.len()];
    let mut has = vec![false; mesh.nodes.len()];
    for (t, tet) in mesh.tets.iter().enumerate() {
        for &v in tet {
            had[v] = true;
            if alive[t] {
                has[v] = true;
            }
        }
    }
    let orphans = (0..mesh.nodes.len()).filter(|&v| had[v] && !has[v]).collect();
    let out = TetMesh {
        nodes: mesh.nodes.clone(),
        tets: kept.iter().map(|&t| mesh.tets[t]).collect(),
        regions: kept.iter().map(|&t| mesh.regions[t]).collect(),
        flags: mesh.flags.clone(),
    };
    Ok(Deletion {
        mesh: out,
        rounds,
        orphans,
        kept,
    })
}

/// Result of building the atomistic mesh from atom positions.
#[derive(Debug, Clone)]
pub struct AtomisticMesh {
    /// All atoms as nodes (same order as the input), flagged ATOM; every tet
    /// tagged ATOMISTIC.
    pub mesh: TetMesh,
    pub r_max: f64,
    pub orphans: Vec<usize>,
}

/// Delaunay triangulation plus element deletion. `r_max` defaults to
/// [`compute_rmax`] with [`DEFAULT_C_R`].
pub fn build_atomistic_mesh(
    atoms: &[Point3],
    r_max: Option<f64>,
    cfg: &DelaunayConfig,
) -> Result<AtomisticMesh, AtomisticError> {
    let r_max = match r_max {
        Some(r) => r,
        None => compute_rmax(atoms, DEFAULT_C_R)?,
    };
    let mut pre = triangulate(atoms, cfg)?;
    pre.regions.iter_mut().for_each(|r| *r = Region::Atomistic);
    pre.flags.iter_mut().for_each(|f| *f = NodeFlags::ATOM);
    let del = delete_elements(&pre, &DeletionParams::new(r_max))?;
    if !del.orphans.is_empty() {
        log::warn!("{} atoms lost all their tetrahedra during deletion", del.orphans.len());
    }
    Ok(AtomisticMesh {
        mesh: del.mesh,
        r_max,
        orphans: del.orphans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::validate;

    fn fcc(n: usize) -> Vec<Point3> {
        let b = [[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]];
        let mut v = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for o in b {
                        v.push(Point3::new(i as f64 + o[0], j as f64 + o[1], k as f64 + o[2]));
                    }
                }
            }
        }
        v
    }

    #[test]
    fn rmax_reference_values() {
        let r = compute_rmax(&fcc(2), 1.0).unwrap();
        assert!((r - 0.5f64.sqrt()).abs() < 1e-12);
        let two = [Point3::zero(), Point3::new(0.0, 2.5, 0.0)];
        assert!((compute_rmax(&two, 1.05).unwrap() - 2.625).abs() < 1e-12);
        assert_eq!(compute_rmax(&two[..1], 1.05), Err(AtomisticError::TooFewAtoms(1)));
    }

    #[test]
    fn infinite_radius_keeps_everything() {
        let pts = fcc(2);
        let m = triangulate(&pts, &DelaunayConfig::default()).unwrap();
        let d = delete_elements(&m, &DeletionParams::new(f64::INFINITY)).unwrap();
        assert_eq!(d.mesh, m);
        assert!(d.rounds.is_empty());
    }

    #[test]
    fn tiny_radius_vanishes() {
        let pts = fcc(1);
        let m = triangulate(&pts, &DelaunayConfig::default()).unwrap();
        assert_eq!(
            delete_elements(&m, &DeletionParams::new(1e-6)),
            Err(AtomisticError::MeshVanished)
        );
    }

    #[test]
    fn fcc_block_keeps_lattice_tets() {
        let pts = fcc(3);
        let am = build_atomistic_mesh(&pts, None, &DelaunayConfig::default()).unwrap();
        assert!(validate(&am.mesh).is_ok());
        // Every kept tet has lattice-scale circumradius.
        for t in 0..am.mesh.tets.len() {
            assert!(circumradius(&am.mesh.tet_points(t)) <= 0.75 + 1e-9);
        }
    }
}

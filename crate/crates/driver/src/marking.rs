//! Bulk marking and interface-layer selection.

use thiserror::Error;

use qcmesh::geom::centroid;
use qcmesh::interp::KdTree;
use qcmesh::{Point3, Region, TetMesh};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkError {
    #[error("every indicator is zero")]
    ConvergedOrDegenerate,
    #[error("indicator {0} is negative or not finite")]
    BadIndicator(usize),
    #[error("the mesh has no atom nodes")]
    NoAtomisticRegion,
    #[error("indicator count {got} does not match {want} tets")]
    LengthMismatch { got: usize, want: usize },
}

/// Tet indices by descending indicator, ties by index.
pub fn descending(eta: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..eta.len()).collect();
    order.sort_by(|&a, &b| eta[b].total_cmp(&eta[a]).then(a.cmp(&b)));
    order
}

/// Smallest prefix of the descending order whose indicator sum reaches
/// `tau` times the total.
pub fn dorfler(eta: &[f64], tau: f64) -> Result<Vec<usize>, MarkError> {
    if let Some(i) = eta.iter().position(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(MarkError::BadIndicator(i));
    }
    let total: f64 = eta.iter().sum();
    if total <= 0.0 {
        return Err(MarkError::ConvergedOrDegenerate);
    }
    let goal = tau * total;
    let order = descending(eta);
    let mut acc = 0.0;
    let mut out = Vec::new();
    for t in order {
        out.push(t);
        acc += eta[t];
        if acc >= goal {
            break;
        }
    }
    Ok(out)
}

/// Distances in layers of `d_layer` from tet centroids to the nearest atom.
pub struct LayerIndex {
    atoms: Vec<Point3>,
    tree: KdTree,
    pub d_layer: f64,
}

impl LayerIndex {
    pub fn new(mesh: &TetMesh, d_layer: f64) -> Result<Self, MarkError> {
        let atoms: Vec<Point3> = (0..mesh.nodes.len()).filter(|&n| mesh.is_atom(n)).map(|n| mesh.nodes[n]).collect();
        if atoms.is_empty() {
            return Err(MarkError::NoAtomisticRegion);
        }
        let tree = KdTree::new(&atoms);
        Ok(Self { atoms, tree, d_layer })
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    /// `⌈dist(p, Λᵃ) / d_layer⌉`.
    pub fn layers_at(&self, p: Point3) -> usize {
        let (_, d) = self.tree.nearest(p).expect("atom set is not empty");
        (d / self.d_layer).ceil() as usize
    }

    pub fn layers(&self, mesh: &TetMesh, t: usize) -> usize {
        self.layers_at(centroid(&mesh.tet_points(t)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marking {
    /// The bulk set, by descending indicator.
    pub marked: Vec<usize>,
    /// Number of interface layers to grow; 0 when the interface share is
    /// not reached for any admissible layer count.
    pub p: usize,
    /// Marked blend or continuum tets within `p` layers of the atoms.
    pub interface: Vec<usize>,
    /// Marked tets not in `interface`.
    pub split: Vec<usize>,
}

impl Marking {
    /// Layers added to the atomistic core and to the blending shell.
    pub fn growth(&self) -> (usize, usize) {
        growth(self.p)
    }
}

/// `(⌈p/2⌉, p - ⌈p/2⌉)`.
pub fn growth(p: usize) -> (usize, usize) {
    let a = p.div_ceil(2);
    (a, p - a)
}

pub fn mark_elements(
    eta: &[f64],
    mesh: &TetMesh,
    tau1: f64,
    tau2: f64,
    max_layers: usize,
    d_layer: f64,
) -> Result<Marking, MarkError> {
    if eta.len() != mesh.tets.len() {
        return Err(MarkError::LengthMismatch { got: eta.len(), want: mesh.tets.len() });
    }
    let marked = dorfler(eta, tau1)?;
    let index = LayerIndex::new(mesh, d_layer)?;
    let layer: Vec<Option<usize>> = marked
        .iter()
        .map(|&t| (mesh.regions[t] != Region::Atomistic).then(|| index.layers(mesh, t)))
        .collect();
    let total: f64 = marked.iter().map(|&t| eta[t]).sum();
    let within = |p: usize| marked.iter().zip(&layer).filter(move |(_, l)| l.is_some_and(|l| l <= p)).map(|(&t, _)| t);
    let p = (1..=max_layers)
        .find(|&p| within(p).map(|t| eta[t]).sum::<f64>() >= tau2 * total)
        .unwrap_or(0);
    let interface: Vec<usize> = if p == 0 { Vec::new() } else { within(p).collect() };
    let mut in_interface = vec![false; mesh.tets.len()];
    for &t in &interface {
        in_interface[t] = true;
    }
    let split = marked.iter().copied().filter(|&t| !in_interface[t]).collect();
    Ok(Marking { marked, p, interface, split })
}

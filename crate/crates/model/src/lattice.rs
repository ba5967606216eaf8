//! Cubic Bravais lattices in a box, spherical voids, neighbour lists and the
//! homogeneous interaction stencil.

use serde::{Deserialize, Serialize};

use qcmesh::interp::KdTree;

use crate::{det3, Mat3, ModelError, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Fcc,
    Bcc,
}

impl Structure {
    /// Basis of the conventional cubic cell in units of the lattice constant.
    pub fn basis(self) -> &'static [[f64; 3]] {
        match self {
            Structure::Fcc => &[[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]],
            Structure::Bcc => &[[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]],
        }
    }

    /// Primitive lattice vectors as matrix columns.
    pub fn primitive(self, a: f64) -> Mat3 {
        let h = 0.5 * a;
        match self {
            Structure::Fcc => [[0.0, h, h], [h, 0.0, h], [h, h, 0.0]],
            Structure::Bcc => [[-h, h, h], [h, -h, h], [h, h, -h]],
        }
    }

    /// Volume per site, `|det A|`.
    pub fn site_volume(self, a: f64) -> f64 {
        det3(&self.primitive(a)).abs()
    }

    pub fn nearest_neighbour(self, a: f64) -> f64 {
        match self {
            Structure::Fcc => a / 2f64.sqrt(),
            Structure::Bcc => a * 3f64.sqrt() / 2.0,
        }
    }

    /// Lattice vectors with `0 < |ρ| <= r_cut`, ordered by length then
    /// lexicographically.
    pub fn stencil(self, a: f64, r_cut: f64) -> Vec<Point3> {
        let n = (r_cut / a).ceil() as i64 + 1;
        let mut v = Vec::new();
        for i in -n..=n {
            for j in -n..=n {
                for k in -n..=n {
                    for b in self.basis() {
                        let p = Point3::new(i as f64 + b[0], j as f64 + b[1], k as f64 + b[2]) * a;
                        let r2 = p.norm2();
                        if r2 > 0.0 && r2 <= r_cut * r_cut {
                            v.push(p);
                        }
                    }
                }
            }
        }
        v.sort_by(|p, q| {
            p.norm2()
                .total_cmp(&q.norm2())
                .then(p.x.total_cmp(&q.x))
                .then(p.y.total_cmp(&q.y))
                .then(p.z.total_cmp(&q.z))
        });
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Void {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Void {
    pub fn center(&self) -> Point3 {
        Point3::from_array(self.center)
    }

    pub fn contains(&self, p: Point3) -> bool {
        p.dist(self.center()) < self.radius
    }
}

/// A lattice filling the closed cube `center ± half_width`, extended by a
/// frame of `margin` whose sites are held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub structure: Structure,
    pub a: f64,
    pub center: [f64; 3],
    pub half_width: f64,
    #[serde(default)]
    pub margin: f64,
    #[serde(default)]
    pub voids: Vec<Void>,
}

impl LatticeSpec {
    pub fn cube(structure: Structure, a: f64, half_width: f64) -> Self {
        Self { structure, a, center: [0.0; 3], half_width, margin: 0.0, voids: Vec::new() }
    }

    pub fn center(&self) -> Point3 {
        Point3::from_array(self.center)
    }

    /// The same lattice without defects.
    pub fn homogeneous(&self) -> Self {
        Self { voids: Vec::new(), ..self.clone() }
    }

    /// Distance from `p` to the domain boundary, positive inside.
    pub fn depth(&self, p: Point3) -> f64 {
        let d = p - self.center();
        (0..3).map(|k| self.half_width - d[k].abs()).fold(f64::INFINITY, f64::min)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !(self.a > 0.0 && self.half_width > 0.0 && self.margin >= 0.0) {
            return Err(ModelError::BadGeometry(format!(
                "a = {}, half width = {}, margin = {}",
                self.a, self.half_width, self.margin
            )));
        }
        for v in &self.voids {
            if !(v.radius > 0.0) || self.depth(v.center()) <= v.radius {
                return Err(ModelError::BadGeometry(format!("void {v:?} not strictly inside the box")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub spec: LatticeSpec,
    pub sites: Vec<Point3>,
    /// Sites on or outside the domain boundary (displacement clamped to 0).
    pub fixed: Vec<bool>,
    pub r_cut: f64,
    nbr_start: Vec<usize>,
    nbr: Vec<usize>,
}

/// Sites of the lattice; lattice origin at the box centre.
pub fn build_lattice(spec: &LatticeSpec, r_cut: f64) -> Result<Lattice, ModelError> {
    spec.validate()?;
    if !(r_cut > 0.0) {
        return Err(ModelError::BadParameter(format!("r_cut = {r_cut}")));
    }
    let a = spec.a;
    let ext = spec.half_width + spec.margin;
    let tol = 1e-9 * a;
    let n = (ext / a).ceil() as i64 + 1;
    let c = spec.center();
    let mut sites = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                for b in spec.structure.basis() {
                    let d = Point3::new(i as f64 + b[0], j as f64 + b[1], k as f64 + b[2]) * a;
                    if (0..3).all(|q| d[q].abs() <= ext + tol) {
                        let p = c + d;
                        if !spec.voids.iter().any(|v| v.contains(p)) {
                            sites.push(p);
                        }
                    }
                }
            }
        }
    }
    let fixed = sites.iter().map(|&p| spec.depth(p) <= tol).collect();
    let tree = KdTree::new(&sites);
    let mut nbr_start = vec![0];
    let mut nbr = Vec::new();
    for (i, &p) in sites.iter().enumerate() {
        nbr.extend(tree.radius(p, r_cut).into_iter().filter(|&j| j != i));
        nbr_start.push(nbr.len());
    }
    Ok(Lattice { spec: spec.clone(), sites, fixed, r_cut, nbr_start, nbr })
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Interaction neighbourhood of site `i`, sorted by index.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.nbr[self.nbr_start[i]..self.nbr_start[i + 1]]
    }

    /// Sites inside the domain (not fixed).
    pub fn free_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.sites.len()).filter(|&i| !self.fixed[i])
    }

    /// Sites strictly inside the domain and outside every void.
    pub fn domain_sites(&self) -> Vec<Point3> {
        self.free_sites().map(|i| self.sites[i]).collect()
    }

    /// Finite-difference stencil `{u(ℓ') - u(ℓ)}` over the neighbourhood.
    pub fn stencil_differences(&self, u: &[Point3], i: usize) -> Vec<Point3> {
        self.neighbors(i).iter().map(|&j| u[j] - u[i]).collect()
    }
}

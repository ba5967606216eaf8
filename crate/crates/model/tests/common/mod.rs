#![allow(dead_code)]

use qcmesh::continuum::DomainSpec;
use qcmesh::coupled::{build_coupled_mesh, CoupledParams};
use qcmesh::{Point3, TetMesh};
use qcmesh_model::blend::Blend;
use qcmesh_model::lattice::{build_lattice, Lattice, LatticeSpec, Structure, Void};
use qcmesh_model::minimize::Objective;
use qcmesh_model::potential::Potential;
use rand::{Rng, RngExt};

pub struct Setup {
    pub lattice: Lattice,
    pub mesh: TetMesh,
    pub blend: Blend,
    pub potential: Potential,
}

/// FCC cube of half width `half` (lattice constant 1) with an optional void
/// at the centre, resolved atomistically out to the blend shell.
pub fn coupled_setup(half: f64, void: Option<f64>, r_a: f64, l_b: f64, h_bdry: f64, potential: Potential) -> Setup {
    let r_cut = potential_cutoff(&potential);
    let mut spec = LatticeSpec::cube(Structure::Fcc, 1.0, half);
    spec.margin = 2.0 * r_cut;
    if let Some(r) = void {
        spec.voids.push(Void { center: [0.1, 0.05, 0.0], radius: r });
    }
    let lattice = build_lattice(&spec, r_cut).unwrap();
    let blend = Blend::new(vec![Point3::zero()], r_a, l_b).unwrap();
    let atoms: Vec<Point3> = lattice
        .domain_sites()
        .into_iter()
        .filter(|p| blend.distance(*p) <= blend.r_outer() + 0.5)
        .collect();
    let params = CoupledParams::new(DomainSpec::cube(Point3::zero(), half, h_bdry), 1.0);
    let mesh = build_coupled_mesh(&atoms, &params).unwrap().mesh;
    Setup { lattice, mesh, blend, potential }
}

pub fn potential_cutoff(p: &Potential) -> f64 {
    use qcmesh_model::potential::SitePotential;
    p.cutoff()
}

pub fn random_state(rng: &mut impl Rng, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-amp..amp)).collect()
}

/// Worst component error of the analytic gradient against central
/// differences, relative to `|g|_inf`.
pub fn fd_gradient_error(obj: &dyn Objective, x: &[f64], h: f64) -> f64 {
    let mut g = vec![0.0; x.len()];
    obj.energy_grad(x, &mut g).unwrap();
    let scale = g.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
    let mut xp = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let ep = obj.energy(&xp).unwrap();
        xp[i] = x[i] - h;
        let em = obj.energy(&xp).unwrap();
        xp[i] = x[i];
        let fd = (ep - em) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / scale);
    }
    worst
}

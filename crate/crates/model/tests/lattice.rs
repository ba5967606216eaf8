use proptest::prelude::*;
use qcmesh::Point3;
use qcmesh_model::cauchy_born::CauchyBorn;
use qcmesh_model::lattice::{build_lattice, LatticeSpec, Structure, Void};
use qcmesh_model::potential::{Potential, SitePotential};
use qcmesh_model::Mat3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn structure() -> impl Strategy<Value = Structure> {
    prop_oneof![Just(Structure::Fcc), Just(Structure::Bcc)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn neighbour_lists_equal_brute_force(
        s in structure(),
        a in 0.8f64..1.5,
        half in 0.6f64..1.6,
        margin in 0.0f64..1.0,
        r_cut in 0.6f64..1.6,
    ) {
        let mut spec = LatticeSpec::cube(s, a, half);
        spec.margin = margin;
        let l = build_lattice(&spec, r_cut).unwrap();
        for i in 0..l.len() {
            let want: Vec<usize> = (0..l.len())
                .filter(|&j| j != i && l.sites[i].dist(l.sites[j]) <= r_cut)
                .collect();
            prop_assert_eq!(l.neighbors(i), &want[..]);
        }
    }

    #[test]
    fn affine_fields_have_affine_stencil_differences(
        s in structure(),
        b in prop::array::uniform9(-1.0f64..1.0),
        c in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let l = build_lattice(&LatticeSpec::cube(s, 1.0, 1.0), 1.2).unwrap();
        let apply = |p: Point3| Point3::new(
            b[0] * p.x + b[1] * p.y + b[2] * p.z,
            b[3] * p.x + b[4] * p.y + b[5] * p.z,
            b[6] * p.x + b[7] * p.y + b[8] * p.z,
        );
        let u: Vec<Point3> = l.sites.iter().map(|&p| apply(p) + Point3::from_array(c)).collect();
        for i in 0..l.len() {
            for (&j, d) in l.neighbors(i).iter().zip(l.stencil_differences(&u, i)) {
                let want = apply(l.sites[j] - l.sites[i]);
                prop_assert!((d - want).norm() < 1e-12);
            }
        }
        let k: Vec<Point3> = vec![Point3::from_array(c); l.len()];
        prop_assert!((0..l.len()).all(|i| l.stencil_differences(&k, i).iter().all(|d| d.norm() == 0.0)));
    }
}

#[test]
fn three_site_chain_by_hand() {
    // Along a cube edge of a tiny FCC box the sites at x = -1, 0, 1 (y = z = -1)
    // are second neighbours of each other.
    let l = build_lattice(&LatticeSpec::cube(Structure::Fcc, 1.0, 1.0), 1.0).unwrap();
    let find = |p: Point3| l.sites.iter().position(|&q| q.dist(p) < 1e-12).unwrap();
    let ids = [-1.0, 0.0, 1.0].map(|x| find(Point3::new(x, -1.0, -1.0)));
    let mut u = vec![Point3::zero(); l.len()];
    u[ids[0]] = Point3::new(0.1, 0.0, 0.0);
    u[ids[1]] = Point3::new(0.0, 0.2, 0.0);
    u[ids[2]] = Point3::new(0.0, 0.0, 0.3);
    let d = l.stencil_differences(&u, ids[1]);
    let at = |j: usize| d[l.neighbors(ids[1]).iter().position(|&k| k == j).unwrap()];
    assert_eq!(at(ids[0]), Point3::new(0.1, -0.2, 0.0));
    assert_eq!(at(ids[2]), Point3::new(0.0, -0.2, 0.3));
}

#[test]
fn void_sites_are_removed() {
    let mut spec = LatticeSpec::cube(Structure::Bcc, 1.0, 3.0);
    let full = build_lattice(&spec, 1.0).unwrap();
    spec.voids.push(Void { center: [0.0; 3], radius: 2.0 });
    let l = build_lattice(&spec, 1.0).unwrap();
    assert!(l.sites.iter().all(|p| p.norm() >= 2.0));
    let inside = full.sites.iter().filter(|p| p.norm() < 2.0).count();
    assert_eq!(l.len() + inside, full.len());
}

#[test]
fn shifting_a_cluster_leaves_its_site_energies_unchanged() {
    let pot = Potential::default_eam(1.0);
    let l = build_lattice(&LatticeSpec::cube(Structure::Fcc, 1.0, 2.0), pot.cutoff()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u: Vec<Point3> = (0..l.len())
        .map(|_| Point3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), 0.0))
        .collect();
    let shift = Point3::new(0.3, -0.2, 0.1);
    // Shift a ball; sites whose whole neighbourhood moved keep their energy.
    let moved: Vec<bool> = l.sites.iter().map(|p| p.norm() < 1.3).collect();
    let v: Vec<Point3> = (0..l.len()).map(|i| if moved[i] { u[i] + shift } else { u[i] }).collect();
    let site_energy = |w: &[Point3], i: usize| {
        let bonds: Vec<Point3> = l
            .neighbors(i)
            .iter()
            .zip(l.stencil_differences(w, i))
            .map(|(&j, d)| l.sites[j] - l.sites[i] + d)
            .collect();
        pot.energy(&bonds)
    };
    let mut checked = 0;
    for i in 0..l.len() {
        if moved[i] && l.neighbors(i).iter().all(|&j| moved[j]) {
            assert!((site_energy(&u, i) - site_energy(&v, i)).abs() < 1e-13);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

fn rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    // Unit quaternion to rotation matrix.
    let mut q = [0.0f64; 4];
    for v in q.iter_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

#[test]
fn cauchy_born_density_is_frame_indifferent() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (s, pot) in [(Structure::Fcc, Potential::default_morse(1.0)), (Structure::Bcc, Potential::default_eam(1.0))] {
        let cb = CauchyBorn::new(s, 1.0, pot);
        let f: Mat3 = [[1.02, 0.03, 0.0], [-0.01, 0.97, 0.02], [0.01, 0.0, 1.01]];
        let w = cb.w(&f).unwrap();
        for _ in 0..10 {
            let q = rotation(&mut rng);
            assert!((cb.w(&mul(&q, &f)).unwrap() - w).abs() < 1e-10);
        }
    }
}

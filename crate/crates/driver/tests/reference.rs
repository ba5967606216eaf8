use qcmesh::delaunay::{triangulate, DelaunayConfig};
use qcmesh::{Point3, TetMesh};
use qcmesh_driver::reference::{gradient_error, reference_errors, Reference};
use qcmesh_driver::DriverError;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random points in `[0, 1]³` plus the cube corners, so the hull is the cube.
fn cube_mesh(n: usize, seed: u64) -> TetMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Point3> = (0..8).map(|i| Point3::new((i & 1) as f64, ((i >> 1) & 1) as f64, (i >> 2) as f64)).collect();
    pts.extend((0..n).map(|_| Point3::new(rng.random(), rng.random(), rng.random())));
    triangulate(&pts, &DelaunayConfig::default()).unwrap()
}

const B: [[f64; 3]; 3] = [[0.3, -1.2, 0.5], [2.0, 0.1, -0.4], [0.0, 0.7, 1.1]];

fn affine(p: Point3) -> Point3 {
    let r = |i: usize| B[i][0] * p.x + B[i][1] * p.y + B[i][2] * p.z;
    Point3::new(r(0) + 0.2, r(1) - 1.0, r(2))
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// `∫|∇w|²` for a P1 field: each gradient row by Cramer's rule on the edge
/// system `E g = δw`, weighted by `|det E| / 6`.
fn quadrature(mesh: &TetMesh, w: &[Point3]) -> f64 {
    let mut s = 0.0;
    for tet in &mesh.tets {
        let p = tet.map(|n| mesh.nodes[n]);
        let e: [[f64; 3]; 3] = std::array::from_fn(|k| (p[k + 1] - p[0]).to_array());
        let det = det3(e);
        let dw: [[f64; 3]; 3] = std::array::from_fn(|k| (w[tet[k + 1]] - w[tet[0]]).to_array());
        for c in 0..3 {
            for j in 0..3 {
                let mut m = e;
                for k in 0..3 {
                    m[k][j] = dw[k][c];
                }
                let g = det3(m) / det;
                s += g * g * det.abs() / 6.0;
            }
        }
    }
    s.sqrt()
}

#[test]
fn identical_fields_have_zero_error() {
    let m = cube_mesh(60, 1);
    let u: Vec<Point3> = m.nodes.iter().map(|&p| affine(p) * p.x).collect();
    assert_eq!(gradient_error(&m, &u, &u), 0.0);
    let r = Reference { mesh: m.clone(), u: u.clone(), energy: -2.0, grad_inf: 0.0, iters: 0 };
    let e = reference_errors(&r, &m, &u, -2.5, 1e-9).unwrap();
    assert_eq!(e.geometry, 0.0);
    assert!((e.energy - 0.5).abs() < 1e-15);
}

#[test]
fn affine_error_is_frobenius_times_root_volume() {
    let fine = cube_mesh(200, 2);
    let coarse = cube_mesh(10, 3);
    let u: Vec<Point3> = fine.nodes.iter().map(|&p| affine(p)).collect();
    let r = Reference { mesh: fine, u, energy: 0.0, grad_inf: 0.0, iters: 0 };
    let zero = vec![Point3::zero(); coarse.nodes.len()];
    let e = reference_errors(&r, &coarse, &zero, 0.0, 1e-9).unwrap();
    let frob = B.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    assert!((e.geometry - frob).abs() < 1e-12 * frob, "{} vs {frob}", e.geometry);
    // An affine coupled solution is transferred exactly: no error at all.
    let exact: Vec<Point3> = coarse.nodes.iter().map(|&p| affine(p)).collect();
    assert!(reference_errors(&r, &coarse, &exact, 0.0, 1e-9).unwrap().geometry < 1e-12);
}

#[test]
fn random_fields_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for seed in 0..10 {
        let m = cube_mesh(30 + 10 * seed as usize, seed);
        let v: Vec<Point3> = (0..m.nodes.len()).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect();
        let w: Vec<Point3> = (0..m.nodes.len()).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect();
        let d: Vec<Point3> = v.iter().zip(&w).map(|(a, b)| *a - *b).collect();
        let want = quadrature(&m, &d);
        let got = gradient_error(&m, &v, &w);
        assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
    }
}

#[test]
fn uncovered_reference_is_rejected() {
    let big = cube_mesh(20, 5);
    let mut small = cube_mesh(20, 6);
    small.nodes.iter_mut().for_each(|p| *p = *p * 0.5);
    let r = Reference { u: vec![Point3::zero(); big.nodes.len()], mesh: big, energy: 0.0, grad_inf: 0.0, iters: 0 };
    let e = reference_errors(&r, &small, &vec![Point3::zero(); small.nodes.len()], 0.0, 1e-9).unwrap_err();
    assert!(matches!(e, DriverError::NoCommonRefinement(n) if n > 0));
}

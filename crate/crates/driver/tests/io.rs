mod common;

use std::path::Path;

use qcmesh::{NodeFlags, Point3, Region, TetMesh};
use qcmesh_driver::adaptive::initial_state;
use qcmesh_driver::io::{self, AtomSet, Checkpoint, VtkFields};
use qcmesh_driver::runlog::RunLog;
use qcmesh_driver::setup::Problem;
use qcmesh_driver::DriverError;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vtkio::model::{DataSet, Piece, VertexNumbers};
use vtkio::Vtk;

fn awkward_mesh() -> TetMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let nodes: Vec<Point3> = (0..40)
        .map(|_| Point3::new(rng.random::<f64>() * 1e-7, rng.random::<f64>() * 3e5 - 1e5, -rng.random::<f64>() / 3.0))
        .collect();
    let tets = (0..30).map(|i| [i, i + 1, i + 5, i + 9]).collect();
    let mut m = TetMesh::new(nodes, tets, Region::Continuum, NodeFlags::FEM_NODE);
    for t in 0..m.tets.len() {
        m.regions[t] = [Region::Atomistic, Region::Blend, Region::Continuum][t % 3];
    }
    for (n, f) in m.flags.iter_mut().enumerate() {
        *f = NodeFlags::from_bits((n % 8) as u8);
    }
    m
}

#[test]
fn native_mesh_round_trip_is_bitwise() {
    let cfg = common::small_config();
    let s = initial_state(&Problem::new(&cfg).unwrap(), &cfg).unwrap();
    for m in [s.mesh, awkward_mesh()] {
        let back = io::parse_mesh(Path::new("m"), &io::format_mesh(&m)).unwrap();
        assert_eq!(back.tets, m.tets);
        assert_eq!(back.regions, m.regions);
        assert_eq!(back.flags, m.flags);
        for (a, b) in back.nodes.iter().zip(&m.nodes) {
            assert_eq!(a.to_array().map(f64::to_bits), b.to_array().map(f64::to_bits));
        }
    }
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let m = awkward_mesh();
    let p = dir.path().join("a.mesh");
    io::write_mesh(&p, &m).unwrap();
    assert_eq!(io::read_mesh(&p).unwrap(), m);

    let atoms = AtomSet {
        positions: vec![Point3::new(0.1, 0.2, 0.3), Point3::new(-1e-9, 4.0, 5.5)],
        flags: vec![None, Some(3)],
        species: vec!["Cu".into(), "Ni".into()],
    };
    let p = dir.path().join("a.xyz");
    io::write_xyz(&p, &atoms, "two").unwrap();
    assert_eq!(io::read_xyz(&p).unwrap(), atoms);

    let cfg = common::small_config();
    let mut s = initial_state(&Problem::new(&cfg).unwrap(), &cfg).unwrap();
    s.u.iter_mut().enumerate().for_each(|(i, u)| *u = Point3::new(i as f64 / 7.0, -0.1, 1e-12));
    let p = dir.path().join("s.json");
    io::write_checkpoint(&p, &Checkpoint::from_state(&s)).unwrap();
    let back = io::read_checkpoint(&p).unwrap().into_state(s.mesh.clone()).unwrap();
    assert_eq!(back.u, s.u);
    assert_eq!(back.blend, s.blend);
    assert!(io::read_checkpoint(&p).unwrap().into_state(awkward_mesh()).is_err());
}

#[test]
fn missing_files_are_io_errors() {
    let e = io::read_mesh(Path::new("/nonexistent/x.mesh")).unwrap_err();
    assert!(matches!(e, DriverError::Io { .. }));
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn vtk_reparses_with_matching_cells() {
    let cfg = common::small_config();
    let s = initial_state(&Problem::new(&cfg).unwrap(), &cfg).unwrap();
    let eta: Vec<f64> = (0..s.mesh.tets.len()).map(|t| t as f64).collect();
    let text = io::format_vtk(&s.mesh, &VtkFields { eta: Some(&eta), u: Some(&s.u), beta: None });
    let vtk = Vtk::parse_legacy_be(text.as_bytes()).unwrap();
    let DataSet::UnstructuredGrid { pieces, .. } = vtk.data else {
        panic!("not an unstructured grid");
    };
    let Piece::Inline(piece) = &pieces[0] else {
        panic!("piece not inline");
    };
    assert_eq!(piece.num_points(), s.mesh.nodes.len());
    assert_eq!(piece.cells.types.len(), s.mesh.tets.len());
    assert!(piece.cells.types.iter().all(|&t| t == vtkio::model::CellType::Tetra));
    let conn: Vec<u64> = match &piece.cells.cell_verts {
        VertexNumbers::Legacy { vertices, .. } => vertices
            .chunks(5)
            .flat_map(|c| {
                assert_eq!(c[0], 4);
                c[1..].iter().map(|&v| v as u64).collect::<Vec<_>>()
            })
            .collect(),
        VertexNumbers::XML { connectivity, .. } => connectivity.clone(),
    };
    let want: Vec<u64> = s.mesh.tets.iter().flatten().map(|&v| v as u64).collect();
    assert_eq!(conn, want);
}

#[test]
fn run_log_json_lines_round_trip() {
    let cfg = common::small_config();
    let out = qcmesh_driver::adaptive::adaptive_solve(&cfg, |_, _| {}).unwrap();
    assert!(out.error.is_none());
    let text = out.log.to_json_lines();
    assert_eq!(text.lines().count(), out.log.records.len());
    assert_eq!(RunLog::from_json_lines(&text).unwrap(), out.log);
    assert!(out.log.table().lines().count() == out.log.records.len() + 1);
}

//! File formats: extended XYZ atoms in, legacy ASCII VTK out, and the
//! native plain-text mesh format.
//!
//! Native format, version 1:
//!
//! ```text
//! qcmesh-mesh 1
//! nodes <n>
//! <x> <y> <z> <flag bits>      (n lines)
//! tets <m>
//! <a> <b> <c> <d> <region>     (m lines; region a, b or c)
//! end
//! ```
//!
//! Coordinates are written in shortest round-trip decimal form, so a write
//! followed by a read reproduces every bit.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use qcmesh::{NodeFlags, Point3, Region, TetMesh};
use qcmesh_model::blend::Blend;

use crate::adaptive::State;
use crate::DriverError;

const MESH_MAGIC: &str = "qcmesh-mesh";
const MESH_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AtomSet {
    pub species: Vec<String>,
    pub positions: Vec<Point3>,
    /// Optional integer flag column.
    pub flags: Vec<Option<u8>>,
}

impl AtomSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn read(path: &Path) -> Result<String, DriverError> {
    std::fs::read_to_string(path).map_err(|e| DriverError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), DriverError> {
    std::fs::write(path, text).map_err(|e| DriverError::io(path, e))
}

/// Line-oriented parser that reports 1-based line numbers.
struct Lines<'a> {
    path: String,
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &Path, text: &'a str) -> Self {
        Self { path: path.display().to_string(), it: text.lines().enumerate(), line: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> DriverError {
        DriverError::Parse { path: self.path.clone(), line: self.line, msg: msg.into() }
    }

    fn next(&mut self) -> Result<&'a str, DriverError> {
        match self.it.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => {
                self.line += 1;
                Err(self.err("unexpected end of file"))
            }
        }
    }

    fn parse<T: FromStr>(&self, tok: Option<&str>, what: &str) -> Result<T, DriverError> {
        let tok = tok.ok_or_else(|| self.err(format!("missing {what}")))?;
        tok.parse().map_err(|_| self.err(format!("bad {what} '{tok}'")))
    }

    /// `<keyword> <count>` header.
    fn header(&mut self, keyword: &str) -> Result<usize, DriverError> {
        let l = self.next()?;
        let mut t = l.split_whitespace();
        if t.next() != Some(keyword) {
            return Err(self.err(format!("expected '{keyword} <count>'")));
        }
        self.parse(t.next(), "count")
    }
}

pub fn parse_xyz(path: &Path, text: &str) -> Result<AtomSet, DriverError> {
    let mut lines = Lines::new(path, text);
    let n: usize = {
        let l = lines.next()?;
        lines.parse(Some(l.trim()), "atom count")?
    };
    lines.next()?;
    let mut atoms = AtomSet::default();
    for _ in 0..n {
        let l = lines.next()?;
        let mut t = l.split_whitespace();
        let species = t.next().ok_or_else(|| lines.err("missing species"))?.to_string();
        let x: f64 = lines.parse(t.next(), "x")?;
        let y: f64 = lines.parse(t.next(), "y")?;
        let z: f64 = lines.parse(t.next(), "z")?;
        let flag = match t.next() {
            Some(f) => Some(lines.parse(Some(f), "flag")?),
            None => None,
        };
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(lines.err("non-finite coordinate"));
        }
        atoms.species.push(species);
        atoms.positions.push(Point3::new(x, y, z));
        atoms.flags.push(flag);
    }
    Ok(atoms)
}

pub fn read_xyz(path: &Path) -> Result<AtomSet, DriverError> {
    parse_xyz(path, &read(path)?)
}

pub fn format_xyz(atoms: &AtomSet, comment: &str) -> String {
    let mut s = format!("{}\n{}\n", atoms.len(), comment.replace('\n', " "));
    for i in 0..atoms.len() {
        let p = atoms.positions[i];
        let sp = atoms.species.get(i).map_or("X", |s| s.as_str());
        let _ = write!(s, "{sp} {:?} {:?} {:?}", p.x, p.y, p.z);
        if let Some(Some(f)) = atoms.flags.get(i) {
            let _ = write!(s, " {f}");
        }
        s.push('\n');
    }
    s
}

pub fn write_xyz(path: &Path, atoms: &AtomSet, comment: &str) -> Result<(), DriverError> {
    write(path, &format_xyz(atoms, comment))
}

fn region_char(r: Region) -> char {
    match r {
        Region::Atomistic => 'a',
        Region::Blend => 'b',
        Region::Continuum => 'c',
    }
}

pub fn format_mesh(mesh: &TetMesh) -> String {
    let mut s = format!("{MESH_MAGIC} {MESH_VERSION}\nnodes {}\n", mesh.nodes.len());
    for (p, f) in mesh.nodes.iter().zip(&mesh.flags) {
        let _ = writeln!(s, "{:?} {:?} {:?} {}", p.x, p.y, p.z, f.bits());
    }
    let _ = writeln!(s, "tets {}", mesh.tets.len());
    for (t, r) in mesh.tets.iter().zip(&mesh.regions) {
        let _ = writeln!(s, "{} {} {} {} {}", t[0], t[1], t[2], t[3], region_char(*r));
    }
    s.push_str("end\n");
    s
}

pub fn parse_mesh(path: &Path, text: &str) -> Result<TetMesh, DriverError> {
    let mut lines = Lines::new(path, text);
    {
        let l = lines.next()?;
        let mut t = l.split_whitespace();
        if t.next() != Some(MESH_MAGIC) {
            return Err(lines.err(format!("not a {MESH_MAGIC} file")));
        }
        let v: u32 = lines.parse(t.next(), "version")?;
        if v != MESH_VERSION {
            return Err(lines.err(format!("unsupported version {v}")));
        }
    }
    let n = lines.header("nodes")?;
    let mut nodes = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for _ in 0..n {
        let l = lines.next()?;
        let mut t = l.split_whitespace();
        let x: f64 = lines.parse(t.next(), "x")?;
        let y: f64 = lines.parse(t.next(), "y")?;
        let z: f64 = lines.parse(t.next(), "z")?;
        let f: u8 = lines.parse(t.next(), "flags")?;
        nodes.push(Point3::new(x, y, z));
        flags.push(NodeFlags::from_bits(f));
    }
    let m = lines.header("tets")?;
    let mut tets = Vec::with_capacity(m);
    let mut regions = Vec::with_capacity(m);
    for _ in 0..m {
        let l = lines.next()?;
        let mut t = l.split_whitespace();
        let mut tet = [0usize; 4];
        for v in tet.iter_mut() {
            *v = lines.parse(t.next(), "node index")?;
            if *v >= n {
                return Err(lines.err(format!("node index {v} out of range")));
            }
        }
        let r = match t.next() {
            Some("a") => Region::Atomistic,
            Some("b") => Region::Blend,
            Some("c") => Region::Continuum,
            other => return Err(lines.err(format!("bad region {other:?}"))),
        };
        tets.push(tet);
        regions.push(r);
    }
    if lines.next()?.trim() != "end" {
        return Err(lines.err("expected 'end'"));
    }
    Ok(TetMesh { nodes, tets, regions, flags })
}

pub fn read_mesh(path: &Path) -> Result<TetMesh, DriverError> {
    parse_mesh(path, &read(path)?)
}

pub fn write_mesh(path: &Path, mesh: &TetMesh) -> Result<(), DriverError> {
    write(path, &format_mesh(mesh))
}

/// Optional fields written alongside the mesh.
#[derive(Debug, Clone, Copy, Default)]
pub struct VtkFields<'a> {
    pub eta: Option<&'a [f64]>,
    pub u: Option<&'a [Point3]>,
    pub beta: Option<&'a [f64]>,
}

/// Legacy ASCII unstructured grid: tets as `VTK_TETRA`, cell data region,
/// q (and η), point data u and β when given.
pub fn format_vtk(mesh: &TetMesh, fields: &VtkFields) -> String {
    let n = mesh.nodes.len();
    let m = mesh.tets.len();
    let mut s = String::from("# vtk DataFile Version 3.0\nqcmesh coupled mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    let _ = writeln!(s, "CELLS {m} {}", 5 * m);
    for t in &mesh.tets {
        let _ = writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        s.push_str("10\n");
    }
    let _ = writeln!(s, "CELL_DATA {m}\nSCALARS region int 1\nLOOKUP_TABLE default");
    for r in &mesh.regions {
        let _ = writeln!(s, "{}", *r as u8);
    }
    s.push_str("SCALARS q double 1\nLOOKUP_TABLE default\n");
    for t in 0..m {
        let _ = writeln!(s, "{:?}", mesh.quality(t));
    }
    if let Some(eta) = fields.eta {
        s.push_str("SCALARS eta double 1\nLOOKUP_TABLE default\n");
        for e in eta {
            let _ = writeln!(s, "{e:?}");
        }
    }
    if fields.u.is_some() || fields.beta.is_some() {
        let _ = writeln!(s, "POINT_DATA {n}");
        if let Some(u) = fields.u {
            s.push_str("VECTORS u double\n");
            for v in u {
                let _ = writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z);
            }
        }
        if let Some(beta) = fields.beta {
            s.push_str("SCALARS beta double 1\nLOOKUP_TABLE default\n");
            for b in beta {
                let _ = writeln!(s, "{b:?}");
            }
        }
    }
    s
}

pub fn write_vtk(path: &Path, mesh: &TetMesh, fields: &VtkFields) -> Result<(), DriverError> {
    write(path, &format_vtk(mesh, fields))
}

/// Blend, deletion threshold and nodal displacement of a run, stored as
/// JSON next to a native mesh file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub blend: Blend,
    pub r_max: f64,
    pub u: Vec<[f64; 3]>,
}

impl Checkpoint {
    pub fn from_state(s: &State) -> Self {
        Self { blend: s.blend.clone(), r_max: s.r_max, u: s.u.iter().map(|v| v.to_array()).collect() }
    }

    pub fn into_state(self, mesh: TetMesh) -> Result<State, DriverError> {
        if self.u.len() != mesh.nodes.len() {
            return Err(DriverError::Config(format!(
                "checkpoint has {} displacements for {} nodes",
                self.u.len(),
                mesh.nodes.len()
            )));
        }
        let u = self.u.into_iter().map(Point3::from_array).collect();
        Ok(State { mesh, blend: self.blend, u, r_max: self.r_max })
    }
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, DriverError> {
    serde_json::from_str(&read(path)?).map_err(|e| DriverError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })
}

pub fn write_checkpoint(path: &Path, c: &Checkpoint) -> Result<(), DriverError> {
    write(path, &serde_json::to_string(c).expect("checkpoint serialises"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_atom_xyz() {
        let a = parse_xyz(Path::new("x"), "1\ncomment\nCu 0.5 1 -2\n").unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.positions[0], Point3::new(0.5, 1.0, -2.0));
        assert_eq!(a.flags[0], None);
    }

    #[test]
    fn xyz_errors_carry_line_numbers() {
        let e = parse_xyz(Path::new("f.xyz"), "2\n\nCu 0 0 0 1\nCu 0 zero 0\n").unwrap_err();
        assert!(matches!(e, DriverError::Parse { line: 4, .. }), "{e}");
        let e = parse_xyz(Path::new("f.xyz"), "3\n\nCu 0 0 0\n").unwrap_err();
        assert!(matches!(e, DriverError::Parse { line: 4, .. }), "{e}");
    }

    #[test]
    fn mesh_errors_carry_line_numbers() {
        let e = parse_mesh(Path::new("m"), "qcmesh-mesh 1\nnodes 1\n0 0 0 1\ntets 1\n0 0 0 7 a\nend\n").unwrap_err();
        assert!(matches!(e, DriverError::Parse { line: 5, .. }), "{e}");
        let e = parse_mesh(Path::new("m"), "qcmesh-mesh 2\n").unwrap_err();
        assert!(matches!(e, DriverError::Parse { line: 1, .. }), "{e}");
    }
}

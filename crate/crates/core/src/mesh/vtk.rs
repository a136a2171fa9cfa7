//! Legacy ASCII VTK (unstructured grid) output.

use std::fmt::Write as _;
use std::io::Write;

use super::Mesh;
use crate::error::Result;

pub enum PointData<'a> {
    Scalar(&'a str, &'a [f64]),
    Vector(&'a str, &'a [[f64; 2]]),
}

pub enum CellData<'a> {
    Scalar(&'a str, &'a [f64]),
    /// Symmetric 2×2 tensor per cell as `[xx, xy, yy]`.
    Tensor(&'a str, &'a [[f64; 3]]),
}

pub fn to_string(mesh: &Mesh, title: &str, points: &[PointData], cells: &[CellData]) -> String {
    let mut s = String::new();
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let _ = writeln!(
        s,
        "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID"
    );
    let _ = writeln!(s, "POINTS {} double", mesh.node_count());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:e} {:e} 0", p.x, p.y);
    }
    let nt = mesh.triangles().len();
    let _ = writeln!(s, "CELLS {} {}", nt, 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    if !points.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.node_count());
        for d in points {
            match d {
                PointData::Scalar(name, v) => {
                    let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                    for x in v.iter() {
                        let _ = writeln!(s, "{x:e}");
                    }
                }
                PointData::Vector(name, v) => {
                    let _ = writeln!(s, "VECTORS {name} double");
                    for x in v.iter() {
                        let _ = writeln!(s, "{:e} {:e} 0", x[0], x[1]);
                    }
                }
            }
        }
    }
    if !cells.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nt}");
        for d in cells {
            match d {
                CellData::Scalar(name, v) => {
                    let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                    for x in v.iter() {
                        let _ = writeln!(s, "{x:e}");
                    }
                }
                CellData::Tensor(name, v) => {
                    let _ = writeln!(s, "TENSORS {name} double");
                    for x in v.iter() {
                        let _ = writeln!(s, "{:e} {:e} 0\n{:e} {:e} 0\n0 0 0", x[0], x[1], x[1], x[2]);
                    }
                }
            }
        }
    }
    s
}

pub fn write(path: &std::path::Path, mesh: &Mesh, title: &str, points: &[PointData], cells: &[CellData]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(to_string(mesh, title, points, cells).as_bytes())?;
    f.flush()?;
    Ok(())
}

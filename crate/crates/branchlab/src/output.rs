//! File emission: CSV tables, legacy ASCII VTK unstructured grids, and the
//! plain-text run report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use branchlab_core::math::Vec3;
use branchlab_core::mesh::{Mesh, MeshKind};

use crate::config::RunConfig;
use crate::RunError;

/// Formats a number as the shortest string that parses back to the same
/// `f64`; identical values always print identically.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Output directory of one run; records every file written.
#[derive(Debug)]
pub struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn record(&mut self, name: &str) -> PathBuf {
        let p = self.path(name);
        self.written.push(p.clone());
        p
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), RunError> {
        let path = self.record(name);
        let io = |e: csv::Error| RunError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(&table.header).map_err(io)?;
        for row in &table.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush()
            .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let path = self.record(name);
        fs::write(&path, body).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
    }

    pub fn vtk(
        &mut self,
        name: &str,
        grid: &VtkGrid,
        fields: &[(&str, &[f64])],
    ) -> Result<(), RunError> {
        let body = grid.render(name, fields)?;
        self.text(name, &body)
    }
}

/// A CSV table with a header row; cells are preformatted strings.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Cell types of the legacy VTK format used here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellType {
    Line = 3,
    Triangle = 5,
    Tetra = 10,
}

impl CellType {
    fn nodes(self) -> usize {
        match self {
            CellType::Line => 2,
            CellType::Triangle => 3,
            CellType::Tetra => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VtkGrid {
    pub points: Vec<Vec3>,
    pub cells: Vec<Vec<usize>>,
    pub cell_type: CellType,
}

impl VtkGrid {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        let cell_type = match mesh.kind() {
            MeshKind::Surface => CellType::Triangle,
            MeshKind::Volume => CellType::Tetra,
        };
        Self {
            points: mesh.nodes().to_vec(),
            cells: mesh.elements().map(|e| e.to_vec()).collect(),
            cell_type,
        }
    }

    /// Polyline through the points in order.
    pub fn polyline(points: Vec<Vec3>) -> Self {
        let cells = (1..points.len()).map(|i| vec![i - 1, i]).collect();
        Self {
            points,
            cells,
            cell_type: CellType::Line,
        }
    }

    fn render(&self, title: &str, fields: &[(&str, &[f64])]) -> Result<String, RunError> {
        let n = self.points.len();
        if let Some((name, _)) = fields.iter().find(|(_, v)| v.len() != n) {
            return Err(RunError::Io(format!(
                "field '{name}' does not match the point count"
            )));
        }
        let k = self.cell_type.nodes();
        let mut s = String::new();
        // writing to a String cannot fail
        let _ = writeln!(
            s,
            "# vtk DataFile Version 3.0\nbranchlab {title}\nASCII\nDATASET UNSTRUCTURED_GRID"
        );
        let _ = writeln!(s, "POINTS {n} double");
        for p in &self.points {
            let _ = writeln!(s, "{} {} {}", num(p[0]), num(p[1]), num(p[2]));
        }
        let _ = writeln!(
            s,
            "CELLS {} {}",
            self.cells.len(),
            self.cells.len() * (k + 1)
        );
        for c in &self.cells {
            let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{k} {}", ids.join(" "));
        }
        let _ = writeln!(s, "CELL_TYPES {}", self.cells.len());
        for _ in &self.cells {
            let _ = writeln!(s, "{}", self.cell_type as u8);
        }
        if !fields.is_empty() {
            let _ = writeln!(s, "POINT_DATA {n}");
            for (name, values) in fields {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for v in *values {
                    let _ = writeln!(s, "{}", num(*v));
                }
            }
        }
        Ok(s)
    }
}

/// Plain-text report. Every value line carries the mesh level and
/// tolerance that produced it.
#[derive(Debug, Clone)]
pub struct Report {
    body: String,
}

impl Report {
    pub fn new(cfg: &RunConfig) -> Self {
        let mut body = format!("branchlab {} report\n\n[config]\n", cfg.command);
        for (k, v) in cfg.entries() {
            let _ = writeln!(body, "{k} = {v}");
        }
        body.push_str("\n[results]\n");
        Self { body }
    }

    pub fn value(&mut self, name: &str, value: f64, at: &str) {
        let _ = writeln!(self.body, "{name} = {}  [{at}]", num(value));
    }

    pub fn count(&mut self, name: &str, value: usize, at: &str) {
        let _ = writeln!(self.body, "{name} = {value}  [{at}]");
    }

    pub fn text(&mut self, name: &str, value: &str, at: &str) {
        let _ = writeln!(self.body, "{name} = {value}  [{at}]");
    }

    pub fn note(&mut self, line: &str) {
        let _ = writeln!(self.body, "# {line}");
    }

    pub fn as_str(&self) -> &str {
        &self.body
    }
}

/// Provenance tag: mesh level, mesh size and tolerance.
pub fn at(level: &str, h: f64, tol: f64) -> String {
    format!("mesh {level} h={} tol={}", num(h), num(tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [5.159, 1e-10, -0.0, 1.0 / 3.0, 2.5e20] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn vtk_layout() {
        let g = VtkGrid::polyline(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        let s = g.render("t", &[("u", &[0.0, 0.5, 0.0])]).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[4], "POINTS 3 double");
        assert_eq!(lines[8], "CELLS 2 6");
        assert_eq!(lines[9], "2 0 1");
        assert_eq!(lines[11], "CELL_TYPES 2");
        assert_eq!(lines[12], "3");
        assert_eq!(lines[14], "POINT_DATA 3");
        assert_eq!(lines[17], "0.0");
        assert!(g.render("t", &[("u", &[0.0])]).is_err());
    }
}

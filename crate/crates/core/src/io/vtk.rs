//! Legacy ASCII VTK output, one unstructured-grid file per grid of a
//! mixed-dimensional grid, and a structural checker for such files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::csv::format_exact;
use crate::mesh::{Grid, MixedDimGrid};
use crate::{Error, Result};

pub const VTK_HEADER: &str = "# vtk DataFile Version 2.0";

const VTK_VERTEX: u8 = 1;
const VTK_LINE: u8 = 3;
const VTK_TRIANGLE: u8 = 5;
const VTK_POLYGON: u8 = 7;
const VTK_QUAD: u8 = 9;

/// A named cell field with one array per grid. An empty array leaves the
/// field out of that grid's file.
#[derive(Clone, Debug, PartialEq)]
pub struct CellField {
    pub name: String,
    pub values: Vec<Vec<f64>>,
}

impl CellField {
    pub fn new(name: impl Into<String>, values: Vec<Vec<f64>>) -> Self {
        Self { name: name.into(), values }
    }
}

pub fn vtk_file_name(prefix: &str, dim: usize, grid: usize, step: usize) -> String {
    format!("{prefix}_dim{dim}_grid{grid}_t{step}.vtk")
}

fn cell_type(grid: &Grid, nodes: usize) -> u8 {
    match (grid.dim, nodes) {
        (0, _) => VTK_VERTEX,
        (1, _) => VTK_LINE,
        (_, 3) => VTK_TRIANGLE,
        (_, 4) => VTK_QUAD,
        _ => VTK_POLYGON,
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && !name.chars().any(char::is_whitespace)
}

/// Text of the file for grid `g`.
pub fn grid_to_vtk(mdg: &MixedDimGrid, g: usize, fields: &[CellField], title: &str) -> Result<String> {
    let grid = &mdg.grids[g];
    let nc = grid.num_cells();
    let mut s = String::new();
    writeln!(s, "{VTK_HEADER}").unwrap();
    writeln!(s, "{}", title.lines().next().unwrap_or("")).unwrap();
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {} double", grid.num_nodes()).unwrap();
    for p in &grid.nodes {
        writeln!(s, "{} {} 0", format_exact(p.x), format_exact(p.y)).unwrap();
    }
    let size: usize = grid.cell_nodes.iter().map(|c| c.len() + 1).sum();
    writeln!(s, "CELLS {nc} {size}").unwrap();
    for cell in &grid.cell_nodes {
        let ids: Vec<String> = cell.iter().map(usize::to_string).collect();
        writeln!(s, "{} {}", cell.len(), ids.join(" ")).unwrap();
    }
    writeln!(s, "CELL_TYPES {nc}").unwrap();
    for cell in &grid.cell_nodes {
        writeln!(s, "{}", cell_type(grid, cell.len())).unwrap();
    }
    writeln!(s, "CELL_DATA {nc}").unwrap();
    let dim = vec![grid.dim as f64; nc];
    let own = fields.iter().filter_map(|f| match f.values.get(g) {
        Some(v) if !v.is_empty() || nc == 0 => Some((f.name.as_str(), v.as_slice())),
        _ => None,
    });
    for (name, values) in std::iter::once(("grid_dim", dim.as_slice())).chain(own) {
        if !valid_name(name) {
            return Err(Error::Config(format!("field name '{name}' must be non-empty without whitespace")));
        }
        if values.len() != nc {
            return Err(Error::MissingParameters(format!(
                "field '{name}' has {} values on grid {g} with {nc} cells",
                values.len()
            )));
        }
        writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for v in values {
            writeln!(s, "{}", format_exact(*v)).unwrap();
        }
    }
    Ok(s)
}

/// Writes `<prefix>_dim<d>_grid<i>_t<step>.vtk` for every grid into `dir`
/// and returns the paths in grid order.
pub fn write_vtk(mdg: &MixedDimGrid, fields: &[CellField], dir: impl AsRef<Path>, prefix: &str, step: usize) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for f in fields {
        if f.values.len() != mdg.num_grids() {
            return Err(Error::MissingParameters(format!(
                "field '{}' has arrays for {} grids, expected {}",
                f.name,
                f.values.len(),
                mdg.num_grids()
            )));
        }
    }
    let mut out = Vec::with_capacity(mdg.num_grids());
    for (g, grid) in mdg.grids.iter().enumerate() {
        let text = grid_to_vtk(mdg, g, fields, &format!("{prefix} grid {g} dim {} step {step}", grid.dim))?;
        let path = dir.join(vtk_file_name(prefix, grid.dim, g, step));
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        out.push(path);
    }
    Ok(out)
}

/// Declared sizes and field names of a checked file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VtkSummary {
    pub points: usize,
    pub cells: usize,
    pub cell_types: Vec<u8>,
    pub fields: Vec<String>,
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    path: String,
}

impl<'a> Tokens<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        let line = self.items.get(self.pos.min(self.items.len().saturating_sub(1))).map_or(0, |t| t.0);
        Error::Parse { path: self.path.clone(), line, msg: msg.into() }
    }

    fn next(&mut self) -> Result<&'a str> {
        let t = self.items.get(self.pos).map(|t| t.1).ok_or_else(|| self.err("unexpected end of file"))?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|t| t.1)
    }

    fn keyword(&mut self, k: &str) -> Result<()> {
        let t = self.next()?;
        if t != k {
            self.pos -= 1;
            return Err(self.err(format!("expected {k}, found '{t}'")));
        }
        Ok(())
    }

    fn int(&mut self) -> Result<usize> {
        let t = self.next()?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected a non-negative integer, found '{t}'"))
        })
    }

    fn float(&mut self) -> Result<f64> {
        let t = self.next()?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected a number, found '{t}'"))
        })
    }
}

/// Checks that the declared point, cell and data counts of a legacy ASCII
/// unstructured-grid file match the lengths of its data blocks.
pub fn check_vtk(path: impl AsRef<Path>) -> Result<VtkSummary> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line, msg: &str| Error::Parse { path: path.display().to_string(), line, msg: msg.into() };
    let mut lines = text.lines();
    if lines.next() != Some(VTK_HEADER) {
        return Err(parse_err(1, "first line is not the legacy VTK header"));
    }
    lines.next().ok_or_else(|| parse_err(2, "missing title line"))?;
    let items = text
        .lines()
        .enumerate()
        .skip(2)
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
        .collect();
    let mut t = Tokens { items, pos: 0, path: path.display().to_string() };
    t.keyword("ASCII")?;
    t.keyword("DATASET")?;
    t.keyword("UNSTRUCTURED_GRID")?;
    t.keyword("POINTS")?;
    let points = t.int()?;
    let ty = t.next()?;
    if !["float", "double"].contains(&ty) {
        return Err(t.err(format!("unsupported point type '{ty}'")));
    }
    for _ in 0..3 * points {
        t.float()?;
    }
    t.keyword("CELLS")?;
    let cells = t.int()?;
    let size = t.int()?;
    let mut read = 0;
    for _ in 0..cells {
        let n = t.int()?;
        for _ in 0..n {
            if t.int()? >= points {
                return Err(t.err("cell refers to a missing point"));
            }
        }
        read += n + 1;
    }
    if read != size {
        return Err(t.err(format!("CELLS declares size {size} but lists {read} integers")));
    }
    t.keyword("CELL_TYPES")?;
    if t.int()? != cells {
        return Err(t.err("CELL_TYPES count differs from CELLS count"));
    }
    let mut cell_types = Vec::with_capacity(cells);
    for _ in 0..cells {
        let v = t.int()?;
        cell_types.push(u8::try_from(v).map_err(|_| t.err("cell type out of range"))?);
    }
    let mut fields = Vec::new();
    if t.peek().is_some() {
        t.keyword("CELL_DATA")?;
        if t.int()? != cells {
            return Err(t.err("CELL_DATA count differs from CELLS count"));
        }
        while t.peek().is_some() {
            t.keyword("SCALARS")?;
            let name = t.next()?;
            t.next()?;
            let ncomp = if t.peek().is_some_and(|x| x.parse::<usize>().is_ok()) { t.int()? } else { 1 };
            t.keyword("LOOKUP_TABLE")?;
            t.next()?;
            for _ in 0..cells * ncomp {
                t.float()?;
            }
            fields.push(name.to_string());
        }
    }
    Ok(VtkSummary { points, cells, cell_types, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Network2, Segment2};
    use crate::mesh::{build_mixed_grid, MeshSizeSpec, Rect};

    fn mdg(segs: &[[f64; 4]]) -> MixedDimGrid {
        let f = segs.iter().enumerate().map(|(i, s)| Segment2::from_coords(i, s[0], s[1], s[2], s[3]).unwrap()).collect();
        let net = crate::geometry::find_intersections(&Network2::new(f)).unwrap();
        build_mixed_grid(&Rect::unit(), &net, &MeshSizeSpec::uniform(0.25)).unwrap()
    }

    fn pressure(m: &MixedDimGrid) -> CellField {
        CellField::new("pressure", m.grids.iter().map(|g| g.cell_centers.iter().map(|c| c.x).collect()).collect())
    }

    #[test]
    fn matrix_only_gives_one_file() {
        let m = mdg(&[]);
        let dir = tempfile::tempdir().unwrap();
        let files = write_vtk(&m, &[pressure(&m)], dir.path(), "run", 0).unwrap();
        assert_eq!(files.len(), 1);
        assert!(files[0].ends_with("run_dim2_grid0_t0.vtk"));
        let text = fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text.lines().next(), Some(VTK_HEADER));
        assert!(text.contains(&format!("CELL_DATA {}", m.grids[0].num_cells())));
        let s = check_vtk(&files[0]).unwrap();
        assert_eq!(s.fields, ["grid_dim", "pressure"]);
        assert!(s.cell_types.iter().all(|&t| t == VTK_TRIANGLE));
    }

    #[test]
    fn crossing_pair_gives_file_per_grid() {
        let m = mdg(&[[0.2, 0.5, 0.8, 0.5], [0.5, 0.2, 0.5, 0.8]]);
        assert_eq!(m.num_grids(), 4);
        let dir = tempfile::tempdir().unwrap();
        let files = write_vtk(&m, &[pressure(&m)], dir.path(), "x", 3).unwrap();
        assert_eq!(files.len(), 4);
        for (g, f) in files.iter().enumerate() {
            let s = check_vtk(f).unwrap();
            assert_eq!(s.points, m.grids[g].num_nodes());
            assert_eq!(s.cells, m.grids[g].num_cells());
            let want = [VTK_VERTEX, VTK_LINE, VTK_TRIANGLE][m.grids[g].dim];
            assert!(s.cell_types.iter().all(|&t| t == want));
            assert!(f.file_name().unwrap().to_str().unwrap().ends_with(&format!("grid{g}_t3.vtk")));
        }
    }

    #[test]
    fn field_on_some_grids_only() {
        let m = mdg(&[[0.2, 0.5, 0.8, 0.5]]);
        let mut values = vec![Vec::new(); m.num_grids()];
        values[0] = vec![1.0; m.grids[0].num_cells()];
        let dir = tempfile::tempdir().unwrap();
        let files = write_vtk(&m, &[CellField::new("ux", values)], dir.path(), "m", 0).unwrap();
        assert_eq!(check_vtk(&files[0]).unwrap().fields, ["grid_dim", "ux"]);
        assert_eq!(check_vtk(&files[1]).unwrap().fields, ["grid_dim"]);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let m = mdg(&[]);
        let dir = tempfile::tempdir().unwrap();
        let bad = CellField::new("p", vec![vec![0.0; 3]]);
        assert!(write_vtk(&m, &[bad], dir.path(), "m", 0).is_err());
    }

    #[test]
    fn checker_detects_inconsistent_counts() {
        let m = mdg(&[]);
        let dir = tempfile::tempdir().unwrap();
        let files = write_vtk(&m, &[], dir.path(), "m", 0).unwrap();
        let text = fs::read_to_string(&files[0]).unwrap();
        let n = m.grids[0].num_cells();
        let broken = text.replace(&format!("CELL_DATA {n}"), &format!("CELL_DATA {}", n + 1));
        fs::write(&files[0], broken).unwrap();
        assert!(check_vtk(&files[0]).is_err());
        let truncated: String = text.lines().take(text.lines().count() - 2).map(|l| format!("{l}\n")).collect();
        fs::write(&files[0], truncated).unwrap();
        assert!(check_vtk(&files[0]).is_err());
    }
}

//! Fracture files. 2D: one trace per row `x0,y0,x1,y1`. 3D: one polygon per
//! block of `x,y,z` rows, blocks separated by blank lines. Lines starting
//! with `#` are comments; a header row of column names may precede the data.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::geometry::{Fracture3, FractureDefect, Point3, Segment2};
use crate::{Error, Result};

const HEADER_2D: [&str; 4] = ["x0", "y0", "x1", "y1"];
const HEADER_3D: [&str; 3] = ["x", "y", "z"];

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn is_header(fields: &[&str], names: &[&str]) -> bool {
    fields.len() == names.len() && fields.iter().zip(names).all(|(f, n)| f.eq_ignore_ascii_case(n))
}

/// Parses a row of exactly `n` decimal numbers.
fn parse_row(path: &Path, line: usize, fields: &[&str], n: usize) -> Result<Vec<f64>> {
    let err = |msg: String| Error::Parse { path: path.display().to_string(), line, msg };
    if fields.len() != n {
        return Err(err(format!("expected {n} values, found {}", fields.len())));
    }
    fields
        .iter()
        .map(|f| match f.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(err(format!("invalid number '{f}'"))),
        })
        .collect()
}

/// Scientific notation with 17 significant digits, enough to read back the same `f64`.
pub fn format_exact(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads 2D fracture traces. Fracture ids follow the row order.
pub fn read_fractures_csv_2d(path: impl AsRef<Path>) -> Result<Vec<Segment2>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut out = Vec::new();
    let mut data_seen = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !data_seen && is_header(&fields, &HEADER_2D) {
            data_seen = true;
            continue;
        }
        data_seen = true;
        let v = parse_row(path, i + 1, &fields, 4)?;
        let seg = Segment2::from_coords(out.len(), v[0], v[1], v[2], v[3]).map_err(|e| match e {
            Error::DegenerateFracture { .. } => Error::DegenerateSegment { path: path.display().to_string(), line: i + 1 },
            e => e,
        })?;
        out.push(seg);
    }
    Ok(out)
}

pub fn write_fractures_csv_2d(path: impl AsRef<Path>, segments: &[Segment2]) -> Result<()> {
    let mut s = String::from("x0,y0,x1,y1\n");
    for seg in segments {
        let (a, b) = (seg.start(), seg.end());
        let row = [a.x, a.y, b.x, b.y].map(format_exact).join(",");
        writeln!(s, "{row}").unwrap();
    }
    write(path.as_ref(), &s)
}

/// Reads 3D fracture polygons. Fracture ids are the block indices.
pub fn read_fractures_csv_3d(path: impl AsRef<Path>) -> Result<Vec<Fracture3>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut blocks: Vec<Vec<Point3>> = Vec::new();
    let mut current: Vec<Point3> = Vec::new();
    let mut data_seen = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !data_seen && is_header(&fields, &HEADER_3D) {
            data_seen = true;
            continue;
        }
        data_seen = true;
        let v = parse_row(path, i + 1, &fields, 3)?;
        current.push(Point3::new(v[0], v[1], v[2]));
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    blocks
        .into_iter()
        .enumerate()
        .map(|(block, vertices)| {
            Fracture3::new(block, vertices).map_err(|e| {
                let path = path.display().to_string();
                match e {
                    Error::DegenerateFracture { defect: FractureDefect::NonPlanar, .. } => {
                        Error::NonPlanarPolygon { path, block }
                    }
                    Error::DegenerateFracture { defect: FractureDefect::NonConvex, .. } => {
                        Error::NonConvexPolygon { path, block }
                    }
                    Error::DegenerateFracture { defect, .. } => {
                        Error::Parse { path, line: 0, msg: format!("block {block}: {defect}") }
                    }
                    e => e,
                }
            })
        })
        .collect()
}

pub fn write_fractures_csv_3d(path: impl AsRef<Path>, fractures: &[Fracture3]) -> Result<()> {
    let mut s = String::from("x,y,z\n");
    for (k, f) in fractures.iter().enumerate() {
        if k > 0 {
            s.push('\n');
        }
        for p in f.vertices() {
            writeln!(s, "{},{},{}", format_exact(p.x), format_exact(p.y), format_exact(p.z)).unwrap();
        }
    }
    write(path.as_ref(), &s)
}

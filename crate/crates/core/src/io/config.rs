//! Scenario configuration: `[section]` headers followed by `key = value`
//! lines. `#` and `;` start comment lines. Keys are unique within a section,
//! so their order does not matter.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::flow::{Bc, Scheme};
use crate::linalg::{Preconditioner, SolverChoice, SolverKind};
use crate::mechanics::{Component, MechBc, CLAMPED};
use crate::mesh::{MeshSizeSpec, Rect, Side, SizeMode};
use crate::transport::TimeScheme;
use crate::{Error, Result};

/// Raw `key -> (value, line)` tables per section.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ini {
    pub sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

impl Ini {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let err = |line, msg: String| Error::Parse { path: path.to_string(), line, msg };
        let mut ini = Ini::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err(i + 1, "unterminated section header".into()))?;
                let name = name.trim().to_ascii_lowercase();
                if ini.sections.contains_key(&name) {
                    return Err(err(i + 1, format!("section [{name}] appears twice")));
                }
                ini.sections.insert(name.clone(), BTreeMap::new());
                current = Some(name);
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(err(i + 1, format!("expected key = value, found '{line}'")));
            };
            let Some(section) = &current else {
                return Err(err(i + 1, "key outside of any section".into()));
            };
            let key = k.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(err(i + 1, "empty key".into()));
            }
            let table = ini.sections.get_mut(section).unwrap();
            if table.insert(key.clone(), (v.trim().to_string(), i + 1)).is_some() {
                return Err(err(i + 1, format!("key '{key}' repeated in section [{section}]")));
            }
        }
        Ok(ini)
    }
}

/// Boundary condition of one side of the domain for the elastic problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SideSupport {
    Free,
    /// Zero normal displacement, zero shear traction.
    Roller,
    Clamped,
    /// Prescribed traction (Pa) in x and y.
    Traction(f64, f64),
    /// Prescribed displacement (m) in x and y.
    Displacement(f64, f64),
}

impl SideSupport {
    pub fn to_bc(self, side: Side) -> MechBc {
        match self {
            SideSupport::Free => [Component::Traction(0.0); 2],
            SideSupport::Roller => match side {
                Side::West | Side::East => crate::mechanics::ROLLER_X,
                Side::South | Side::North => crate::mechanics::ROLLER_Y,
            },
            SideSupport::Clamped => CLAMPED,
            SideSupport::Traction(x, y) => [Component::Traction(x), Component::Traction(y)],
            SideSupport::Displacement(x, y) => [Component::Displacement(x), Component::Displacement(y)],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FractureConfig {
    /// Fracture file, relative paths resolved against the configuration file.
    pub file: Option<PathBuf>,
    /// Geometric tolerance; `None` scales with the domain.
    pub tol: Option<f64>,
    pub extrusion_height: f64,
    /// Degrees.
    pub dip_angle: f64,
    /// Degrees.
    pub strike_angle: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    pub permeability: f64,
    /// `None` uses the cubic law of the aperture.
    pub fracture_permeability: Option<f64>,
    pub porosity: f64,
    pub aperture: f64,
    pub compressibility: f64,
    /// `None` uses `2 k / a` of the fracture cell.
    pub normal_transmissivity: Option<f64>,
    pub scheme: Scheme,
    pub dfn: bool,
    pub bc: [Option<Bc>; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportConfig {
    pub heat_capacity: f64,
    pub heat_capacity_fluid: f64,
    pub conductivity: f64,
    pub fracture_conductivity: Option<f64>,
    pub initial_temperature: f64,
    pub cfl_safety: f64,
    pub bc: [Option<Bc>; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct MechanicsConfig {
    pub shear_modulus: f64,
    pub lame_lambda: f64,
    pub friction_coefficient: f64,
    /// Degrees.
    pub dilation_angle: f64,
    pub slip_tolerance: f64,
    pub slip_relaxation: Option<f64>,
    pub max_iterations: usize,
    pub support: [SideSupport; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: TimeScheme,
}

/// Which fracture receives the injection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FractureSelector {
    Index(usize),
    /// The fracture with the lowest midpoint.
    Lowest,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InjectionConfig {
    pub fracture: FractureSelector,
    /// Injection point; `None` takes the fracture midpoint.
    pub point: Option<(f64, f64)>,
    /// `(time, rate)` breakpoints.
    pub schedule: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub prefix: String,
    /// Output times; empty records every step.
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub path: PathBuf,
    /// Sections present in the file.
    pub sections: Vec<String>,
    pub warnings: Vec<String>,
    /// `section.key` entries that took their default value.
    pub defaults_applied: Vec<String>,
    pub domain: Rect,
    pub fractures: FractureConfig,
    pub mesh: MeshSizeSpec,
    pub flow: FlowConfig,
    pub transport: TransportConfig,
    pub mechanics: MechanicsConfig,
    pub time: TimeConfig,
    pub injection: InjectionConfig,
    pub output: OutputConfig,
    pub solver: Option<SolverChoice>,
}

const SIDE_KEYS: [(&str, Side); 4] =
    [("bc_west", Side::West), ("bc_east", Side::East), ("bc_south", Side::South), ("bc_north", Side::North)];

pub fn side_index(side: Side) -> usize {
    match side {
        Side::West => 0,
        Side::East => 1,
        Side::South => 2,
        Side::North => 3,
    }
}

/// Parses `auto`, `direct`, `cg`, `bicgstab`, optionally followed by
/// `+none`, `+jacobi` or `+ilu0` (ILU0 by default for Krylov solvers).
pub fn parse_solver(s: &str) -> std::result::Result<Option<SolverChoice>, String> {
    let s = s.trim().to_ascii_lowercase();
    let (kind, pre) = match s.split_once('+') {
        Some((k, p)) => (k.trim(), Some(p.trim())),
        None => (s.as_str(), None),
    };
    let kind = match kind {
        "auto" => return if pre.is_none() { Ok(None) } else { Err("auto takes no preconditioner".into()) },
        "direct" => SolverKind::Direct,
        "cg" => SolverKind::Cg,
        "bicgstab" => SolverKind::BiCgStab,
        other => return Err(format!("unknown solver '{other}' (expected auto, direct, cg or bicgstab)")),
    };
    let pre = match pre {
        None | Some("ilu0") => Preconditioner::Ilu0,
        Some("none") => Preconditioner::None,
        Some("jacobi") => Preconditioner::Jacobi,
        Some(other) => return Err(format!("unknown preconditioner '{other}' (expected none, jacobi or ilu0)")),
    };
    Ok(Some(match kind {
        SolverKind::Direct => SolverChoice::direct(),
        k => SolverChoice::iterative(k, pre),
    }))
}

fn parse_bc(s: &str) -> std::result::Result<Bc, String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    let value = |p: Option<&&str>| -> std::result::Result<f64, String> {
        let t = p.ok_or("missing value")?;
        t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("invalid number '{t}'"))
    };
    match parts.first().map(|p| p.to_ascii_lowercase()).as_deref() {
        Some("dirichlet") if parts.len() == 2 => Ok(Bc::Dirichlet(value(parts.get(1))?)),
        Some("neumann") if parts.len() == 2 => Ok(Bc::Neumann(value(parts.get(1))?)),
        _ => Err(format!("expected 'dirichlet <value>' or 'neumann <value>', found '{s}'")),
    }
}

fn parse_support(s: &str) -> std::result::Result<SideSupport, String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    let nums = || -> std::result::Result<(f64, f64), String> {
        if parts.len() != 3 {
            return Err(format!("expected two values after '{}'", parts[0]));
        }
        let f = |t: &str| t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("invalid number '{t}'"));
        Ok((f(parts[1])?, f(parts[2])?))
    };
    match parts.first().map(|p| p.to_ascii_lowercase()).as_deref() {
        Some("free") if parts.len() == 1 => Ok(SideSupport::Free),
        Some("roller") if parts.len() == 1 => Ok(SideSupport::Roller),
        Some("clamped") if parts.len() == 1 => Ok(SideSupport::Clamped),
        Some("traction") => nums().map(|(x, y)| SideSupport::Traction(x, y)),
        Some("displacement") => nums().map(|(x, y)| SideSupport::Displacement(x, y)),
        _ => Err(format!(
            "expected free, roller, clamped, 'traction <x> <y>' or 'displacement <x> <y>', found '{s}'"
        )),
    }
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("invalid number '{t}'")))
        .collect()
}

fn parse_schedule(s: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (t, r) = item.split_once(':').ok_or_else(|| format!("expected time:rate, found '{item}'"))?;
        let num = |x: &str| x.trim().parse::<f64>().ok().filter(|v| v.is_finite());
        match (num(t), num(r)) {
            (Some(t), Some(r)) => out.push((t, r)),
            _ => return Err(format!("invalid breakpoint '{item}'")),
        }
    }
    if out.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err("breakpoint times must increase".into());
    }
    Ok(out)
}

/// Typed access to one section that records consumed keys and defaults.
struct Reader<'a> {
    path: &'a str,
    section: &'static str,
    table: Option<&'a BTreeMap<String, (String, usize)>>,
    used: Vec<&'static str>,
    defaults: &'a mut Vec<String>,
}

impl Reader<'_> {
    fn raw(&mut self, key: &'static str) -> Option<(&str, usize)> {
        self.used.push(key);
        self.table.and_then(|t| t.get(key)).map(|(v, l)| (v.as_str(), *l))
    }

    fn parse<T>(&mut self, key: &'static str, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        let path = self.path;
        let section = self.section;
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => f(v).map(Some).map_err(|m| Error::Parse {
                path: path.to_string(),
                line,
                msg: format!("[{section}] key '{key}': {m}"),
            }),
        }
    }

    fn or<T>(&mut self, key: &'static str, default: T, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<T> {
        match self.parse(key, f)? {
            Some(v) => Ok(v),
            None => {
                self.defaults.push(format!("{}.{key}", self.section));
                Ok(default)
            }
        }
    }

    fn num(&mut self, key: &'static str, default: f64) -> Result<f64> {
        self.or(key, default, number)
    }

    fn positive(&mut self, key: &'static str, default: f64) -> Result<f64> {
        self.or(key, default, |s| number(s).and_then(|v| if v > 0.0 { Ok(v) } else { Err(format!("must be positive, got {v}")) }))
    }

    fn opt_positive(&mut self, key: &'static str) -> Result<Option<f64>> {
        self.parse(key, |s| number(s).and_then(|v| if v > 0.0 { Ok(v) } else { Err(format!("must be positive, got {v}")) }))
    }

    fn unknown(&self) -> Vec<String> {
        self.table
            .map(|t| {
                t.iter()
                    .filter(|(k, _)| !self.used.contains(&k.as_str()))
                    .map(|(k, (_, line))| format!("{}:{line}: unknown key '{k}' in [{}]", self.path, self.section))
                    .collect()
            })
            .unwrap_or_default()
    }
}

fn number(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("invalid number '{s}'"))
}

fn boolean(s: &str) -> std::result::Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, found '{s}'")),
    }
}

const SECTIONS: [&str; 10] =
    ["domain", "fractures", "mesh", "flow", "transport", "mechanics", "time", "injection", "output", "solver"];

pub fn read_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Parses configuration text; relative file paths are resolved against the
/// directory of `path`.
pub fn parse_config(text: &str, path: &Path) -> Result<ScenarioConfig> {
    let name = path.display().to_string();
    let ini = Ini::parse(text, &name)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve = |s: &str| -> std::result::Result<PathBuf, String> {
        if s.is_empty() {
            return Err("empty path".into());
        }
        let p = PathBuf::from(s);
        Ok(if p.is_absolute() { p } else { base.join(p) })
    };
    let mut defaults = Vec::new();
    let mut warnings = Vec::new();
    for (s, table) in &ini.sections {
        if !SECTIONS.contains(&s.as_str()) {
            let line = table.values().map(|v| v.1).min().unwrap_or(0);
            warnings.push(format!("{name}: unknown section [{s}] (near line {line})"));
        }
    }
    macro_rules! reader {
        ($s:literal) => {
            Reader { path: &name, section: $s, table: ini.sections.get($s), used: Vec::new(), defaults: &mut defaults }
        };
    }

    let mut r = reader!("domain");
    let (xmin, ymin, xmax, ymax) = (r.num("xmin", 0.0)?, r.num("ymin", 0.0)?, r.num("xmax", 1.0)?, r.num("ymax", 1.0)?);
    warnings.extend(r.unknown());
    if !(xmax > xmin && ymax > ymin) {
        return Err(Error::Config(format!("domain [{xmin}, {xmax}] x [{ymin}, {ymax}] is empty")));
    }
    let domain = Rect::new(xmin, ymin, xmax, ymax);

    let mut r = reader!("fractures");
    let fractures = FractureConfig {
        file: r.parse("file", resolve)?,
        tol: r.parse("tol", |s| number(s).and_then(|v| if v >= 0.0 { Ok(v) } else { Err("must be non-negative".into()) }))?,
        extrusion_height: r.positive("extrusion_height", 1.0)?,
        dip_angle: r.or("dip_angle", 90.0, |s| {
            number(s).and_then(|v| if v > 0.0 && v <= 90.0 { Ok(v) } else { Err("must lie in (0, 90] degrees".into()) })
        })?,
        strike_angle: r.num("strike_angle", 0.0)?,
    };
    warnings.extend(r.unknown());

    let mut r = reader!("mesh");
    let h_background = r.positive("h_background", 0.1)?;
    let h_min = r.positive("h_min", h_background)?;
    let mode = r.or("mode", SizeMode::Uniform, |s| match s.to_ascii_lowercase().as_str() {
        "uniform" => Ok(SizeMode::Uniform),
        "weighted" => Ok(SizeMode::Weighted),
        _ => Err(format!("expected uniform or weighted, found '{s}'")),
    })?;
    let min_angle = r.num("min_angle", 20.0)?;
    let mesh = MeshSizeSpec { h_background, h_min, mode, min_angle };
    warnings.extend(r.unknown());

    let mut r = reader!("flow");
    let mut flow = FlowConfig {
        permeability: r.positive("permeability", 1.0)?,
        fracture_permeability: r.opt_positive("fracture_permeability")?,
        porosity: r.positive("porosity", 1.0)?,
        aperture: r.positive("aperture", 1.0)?,
        compressibility: r.or("compressibility", 1.0, |s| {
            number(s).and_then(|v| if v >= 0.0 { Ok(v) } else { Err("must be non-negative".into()) })
        })?,
        normal_transmissivity: r.opt_positive("normal_transmissivity")?,
        scheme: r.or("scheme", Scheme::Tpfa, |s| s.parse())?,
        dfn: r.or("dfn", false, boolean)?,
        bc: [None; 4],
    };
    for (key, side) in SIDE_KEYS {
        flow.bc[side_index(side)] = r.parse(key, parse_bc)?;
    }
    warnings.extend(r.unknown());

    let mut r = reader!("transport");
    let mut transport = TransportConfig {
        heat_capacity: r.positive("heat_capacity", 1.0)?,
        heat_capacity_fluid: r.positive("heat_capacity_fluid", 1.0)?,
        conductivity: r.or("conductivity", 1.0, |s| {
            number(s).and_then(|v| if v >= 0.0 { Ok(v) } else { Err("must be non-negative".into()) })
        })?,
        fracture_conductivity: r.parse("fracture_conductivity", |s| {
            number(s).and_then(|v| if v >= 0.0 { Ok(v) } else { Err("must be non-negative".into()) })
        })?,
        initial_temperature: r.num("initial_temperature", 0.0)?,
        cfl_safety: r.or("cfl_safety", crate::transport::DEFAULT_CFL_SAFETY, |s| {
            number(s).and_then(|v| if v > 0.0 && v <= 1.0 { Ok(v) } else { Err("must lie in (0, 1]".into()) })
        })?,
        bc: [None; 4],
    };
    for (key, side) in SIDE_KEYS {
        transport.bc[side_index(side)] = r.parse(key, parse_bc)?;
    }
    warnings.extend(r.unknown());

    let mut r = reader!("mechanics");
    let mut mechanics = MechanicsConfig {
        shear_modulus: r.positive("shear_modulus", 1.0)?,
        lame_lambda: r.num("lame_lambda", 1.0)?,
        friction_coefficient: r.or("friction_coefficient", 0.6, |s| {
            number(s).and_then(|v| if v >= 0.0 { Ok(v) } else { Err("must be non-negative".into()) })
        })?,
        dilation_angle: r.or("dilation_angle", 0.0, |s| {
            number(s).and_then(|v| if (0.0..90.0).contains(&v) { Ok(v) } else { Err("must lie in [0, 90) degrees".into()) })
        })?,
        slip_tolerance: r.or("slip_tolerance", 1e-6, |s| {
            number(s).and_then(|v| if v >= 0.0 { Ok(v) } else { Err("must be non-negative".into()) })
        })?,
        slip_relaxation: r.opt_positive("slip_relaxation")?,
        max_iterations: r.or("max_iterations", 200, |s| {
            s.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| format!("expected a positive integer, found '{s}'"))
        })?,
        support: [SideSupport::Free; 4],
    };
    for (key, side) in SIDE_KEYS {
        if let Some(s) = r.parse(key, parse_support)? {
            mechanics.support[side_index(side)] = s;
        }
    }
    warnings.extend(r.unknown());

    let mut r = reader!("time");
    let time = TimeConfig {
        dt: r.positive("dt", 1.0)?,
        t_end: r.positive("t_end", 1.0)?,
        scheme: r.or("scheme", TimeScheme::ImplicitEuler, |s| s.parse())?,
    };
    warnings.extend(r.unknown());

    let mut r = reader!("injection");
    let injection = InjectionConfig {
        fracture: r.or("fracture", FractureSelector::Lowest, |s| {
            if s.eq_ignore_ascii_case("lowest") {
                Ok(FractureSelector::Lowest)
            } else {
                s.parse().map(FractureSelector::Index).map_err(|_| format!("expected a fracture index or 'lowest', found '{s}'"))
            }
        })?,
        point: r.parse("point", |s| match parse_list(s)?.as_slice() {
            [x, y] => Ok((*x, *y)),
            _ => Err("expected x, y".into()),
        })?,
        schedule: match r.parse("schedule", parse_schedule)? {
            Some(s) => s,
            None => vec![(0.0, r.num("rate", 1.0)?)],
        },
    };
    warnings.extend(r.unknown());

    let mut r = reader!("output");
    let output = OutputConfig {
        directory: r.or("directory", base.join("output"), resolve)?,
        prefix: r.or("prefix", "run".to_string(), |s| {
            if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                Ok(s.to_string())
            } else {
                Err(format!("prefix '{s}' must be alphanumeric"))
            }
        })?,
        times: r.or("times", Vec::new(), parse_list)?,
    };
    warnings.extend(r.unknown());

    let mut r = reader!("solver");
    let mut solver = r.or("kind", None, parse_solver)?;
    if let Some(tol) = r.opt_positive("tol")? {
        solver.get_or_insert_with(SolverChoice::direct).tol = tol;
    }
    if let Some(n) = r.parse("max_iter", |s| s.parse::<usize>().map_err(|_| format!("expected an integer, found '{s}'")))? {
        solver.get_or_insert_with(SolverChoice::direct).max_iter = n;
    }
    warnings.extend(r.unknown());

    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(ScenarioConfig {
        path: path.to_path_buf(),
        sections: ini.sections.keys().cloned().collect(),
        warnings,
        defaults_applied: defaults,
        domain,
        fractures,
        mesh,
        flow,
        transport,
        mechanics,
        time,
        injection,
        output,
        solver,
    })
}

impl ScenarioConfig {
    pub fn has_section(&self, s: &str) -> bool {
        self.sections.iter().any(|x| x == s)
    }

    /// Errors on the first missing section.
    pub fn require_sections(&self, names: &[&str]) -> Result<()> {
        match names.iter().find(|s| !self.has_section(s)) {
            Some(s) => Err(Error::MissingSection(s.to_string())),
            None => Ok(()),
        }
    }

    /// The fracture file, or an error listing the defaults that were applied.
    pub fn fracture_file(&self) -> Result<&Path> {
        self.fractures.file.as_deref().ok_or_else(|| {
            Error::Config(format!(
                "{}: [fractures] needs the key 'file' (defaults applied: {})",
                self.path.display(),
                if self.defaults_applied.is_empty() { "none".to_string() } else { self.defaults_applied.join(", ") }
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig> {
        parse_config(text, Path::new("/cases/a.ini"))
    }

    #[test]
    fn minimal_flow_config_takes_unit_defaults() {
        let c = parse("[domain]\n[fractures]\nfile = f.csv\n[mesh]\nh_background = 0.2\n").unwrap();
        assert_eq!(c.fractures.file.as_deref(), Some(Path::new("/cases/f.csv")));
        assert_eq!(c.mesh.h_min, 0.2);
        assert_eq!(c.domain, Rect::unit());
        let f = &c.flow;
        for v in [f.permeability, f.porosity, f.aperture, f.compressibility] {
            assert_eq!(v, 1.0);
        }
        let t = &c.transport;
        for v in [t.heat_capacity, t.heat_capacity_fluid, t.conductivity] {
            assert_eq!(v, 1.0);
        }
        assert_eq!(c.mechanics.shear_modulus, 1.0);
        assert_eq!(c.mechanics.lame_lambda, 1.0);
        assert!(c.defaults_applied.contains(&"flow.permeability".to_string()));
        assert!(c.warnings.is_empty());
        c.require_sections(&["domain", "fractures", "mesh"]).unwrap();
    }

    #[test]
    fn override_is_visible() {
        let c = parse("[flow]\npermeability = 5\nbc_west = dirichlet 1\nbc_east = neumann -0.5\n").unwrap();
        assert_eq!(c.flow.permeability, 5.0);
        assert_eq!(c.flow.bc[0], Some(Bc::Dirichlet(1.0)));
        assert_eq!(c.flow.bc[1], Some(Bc::Neumann(-0.5)));
        assert_eq!(c.flow.bc[2], None);
        assert!(!c.defaults_applied.contains(&"flow.permeability".to_string()));
    }

    #[test]
    fn malformed_number_names_key_and_line() {
        match parse("[flow]\n\nporosity = 0.1\npermeability = 1e-3x\n") {
            Err(Error::Parse { line: 4, msg, .. }) => assert!(msg.contains("permeability"), "{msg}"),
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_sections_warn() {
        let c = parse("[flow]\npermeabilty = 2\n[extra]\na = 1\n").unwrap();
        assert_eq!(c.warnings.len(), 2);
        assert!(c.warnings.iter().any(|w| w.contains("permeabilty")));
        assert!(c.warnings.iter().any(|w| w.contains("[extra]")));
    }

    #[test]
    fn missing_section_and_key() {
        let c = parse("[domain]\n").unwrap();
        assert!(matches!(c.require_sections(&["domain", "mesh"]), Err(Error::MissingSection(s)) if s == "mesh"));
        match c.fracture_file() {
            Err(Error::Config(m)) => assert!(m.contains("mesh.h_background"), "{m}"),
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn order_within_section_is_irrelevant() {
        let a = parse("[domain]\nxmin = -1\nxmax = 2\n[time]\ndt = 0.5\nt_end = 3\n").unwrap();
        let b = parse("[time]\nt_end = 3\ndt = 0.5\n[domain]\nxmax = 2\nxmin = -1\n").unwrap();
        assert_eq!(a.domain, b.domain);
        assert_eq!(a.time, b.time);
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(parse("a = 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("[flow\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("[flow]\nscheme = tpfa\nscheme = mpfa\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse("[flow]\njust text\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("[domain]\nxmin = 2\nxmax = 1\n"), Err(Error::Config(_))));
    }

    #[test]
    fn mechanics_injection_output_and_solver() {
        let c = parse(
            "[mechanics]\nbc_south = roller\nbc_east = traction -2 0\nbc_north = displacement 0 -0.1\ndilation_angle = 3\n\
             [injection]\nfracture = lowest\nschedule = 0:1e-3, 5:0\npoint = 0.5, 0.25\n\
             [output]\ndirectory = out\ntimes = 1, 2.5\n[solver]\nkind = bicgstab+jacobi\ntol = 1e-9\n",
        )
        .unwrap();
        assert_eq!(c.mechanics.support[side_index(Side::South)], SideSupport::Roller);
        assert_eq!(c.mechanics.support[side_index(Side::East)], SideSupport::Traction(-2.0, 0.0));
        assert_eq!(SideSupport::Roller.to_bc(Side::South), crate::mechanics::ROLLER_Y);
        assert_eq!(c.mechanics.support[side_index(Side::West)], SideSupport::Free);
        assert_eq!(c.injection.fracture, FractureSelector::Lowest);
        assert_eq!(c.injection.schedule, vec![(0.0, 1e-3), (5.0, 0.0)]);
        assert_eq!(c.injection.point, Some((0.5, 0.25)));
        assert_eq!(c.output.directory, Path::new("/cases/out"));
        assert_eq!(c.output.times, vec![1.0, 2.5]);
        let s = c.solver.unwrap();
        assert_eq!((s.kind, s.preconditioner, s.tol), (SolverKind::BiCgStab, Preconditioner::Jacobi, 1e-9));
        assert!(parse("[injection]\nschedule = 1:1, 0:2\n").is_err());
    }

    #[test]
    fn solver_names() {
        assert_eq!(parse_solver("auto").unwrap(), None);
        assert_eq!(parse_solver("direct").unwrap().unwrap().kind, SolverKind::Direct);
        assert_eq!(parse_solver("CG").unwrap().unwrap().preconditioner, Preconditioner::Ilu0);
        assert!(parse_solver("gmres").is_err());
        assert!(parse_solver("cg+amg").is_err());
    }
}

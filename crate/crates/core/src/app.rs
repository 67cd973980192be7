//! Command-line front end: configuration, meshing, solvers and output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::flow::{cubic_law, mass_balance_residual, solve_incompressible, FlowProblem, Scheme, Tensor2};
use crate::geometry::{
    extrude_outcrop, find_intersections, ExtrusionSpec, IntersectionGeometry, Network2, Network3, Point2,
};
use crate::io::{self, format_exact, CellField, FractureSelector, ScenarioConfig};
use crate::mechanics::{
    stimulate, ElasticParameters, FrictionParameters, InjectionSchedule, StimulationRecord, StimulationSetup,
};
use crate::mesh::{build_mixed_grid, FaceTag, Grid, MixedDimGrid, Side};
use crate::transport::{run_transport, TimeStepper, TransportOperator, TransportProblem};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "dfm", version, about = "Mixed-dimensional discrete-fracture-matrix simulator")]
pub struct Cli {
    /// Log level: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Intersect a fracture network and report the intersection objects.
    Intersect(RunArgs),
    /// Extrude 2D traces into vertical or dipping 3D fracture polygons.
    Extrude(RunArgs),
    /// Build the mixed-dimensional grid and write it as VTK.
    Mesh(RunArgs),
    /// Steady incompressible flow.
    Flow(RunArgs),
    /// Steady flow followed by transient heat transport.
    FlowTransport(RunArgs),
    /// Injection with pressure-driven fracture slip and dilation.
    Stimulate(RunArgs),
}

#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    /// Scenario configuration file.
    pub config: PathBuf,
    /// Background mesh size.
    #[arg(long)]
    pub h: Option<f64>,
    /// Flux discretization: tpfa or mpfa.
    #[arg(long)]
    pub scheme: Option<Scheme>,
    /// Linear solver: auto, direct, cg or bicgstab, optionally with +none, +jacobi or +ilu0.
    #[arg(long)]
    pub solver: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drop the matrix and solve on the fracture network only.
    #[arg(long)]
    pub dfn: bool,
    /// Geometric tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Intersect(a)
            | Command::Extrude(a)
            | Command::Mesh(a)
            | Command::Flow(a)
            | Command::FlowTransport(a)
            | Command::Stimulate(a) => a,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Intersect(_) => "intersect",
            Command::Extrude(_) => "extrude",
            Command::Mesh(_) => "mesh",
            Command::Flow(_) => "flow",
            Command::FlowTransport(_) => "flow-transport",
            Command::Stimulate(_) => "stimulate",
        }
    }

    fn required_sections(&self) -> &'static [&'static str] {
        match self {
            Command::Intersect(_) | Command::Extrude(_) => &["fractures"],
            Command::Mesh(_) | Command::Flow(_) => &["domain", "fractures", "mesh"],
            Command::FlowTransport(_) => &["domain", "fractures", "mesh", "time"],
            Command::Stimulate(_) => &["domain", "fractures", "mesh", "mechanics", "time", "injection"],
        }
    }
}

/// Files written and summary lines of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

impl Report {
    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }
}

/// Reads the configuration and applies the command-line overrides.
pub fn load_config(cmd: &Command) -> Result<ScenarioConfig> {
    let args = cmd.args();
    let mut cfg = io::read_config(&args.config)?;
    cfg.require_sections(cmd.required_sections())?;
    if let Some(h) = args.h {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("--h must be positive, got {h}")));
        }
        let follow = cfg.defaults_applied.iter().any(|k| k == "mesh.h_min");
        cfg.mesh.h_background = h;
        cfg.mesh.h_min = if follow { h } else { cfg.mesh.h_min.min(h) };
    }
    if let Some(s) = args.scheme {
        cfg.flow.scheme = s;
    }
    if let Some(s) = &args.solver {
        cfg.solver = io::parse_solver(s).map_err(Error::Config)?;
    }
    if let Some(o) = &args.out {
        cfg.output.directory = o.clone();
    }
    if args.dfn {
        cfg.flow.dfn = true;
    }
    if let Some(t) = args.tol {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("--tol must be non-negative, got {t}")));
        }
        cfg.fractures.tol = Some(t);
    }
    Ok(cfg)
}

pub fn run(cmd: &Command) -> Result<Report> {
    let cfg = load_config(cmd)?;
    match cmd {
        Command::Intersect(_) => run_intersect(&cfg),
        Command::Extrude(_) => run_extrude(&cfg),
        Command::Mesh(_) => run_mesh(&cfg),
        Command::Flow(_) => run_flow(&cfg),
        Command::FlowTransport(_) => run_flow_transport(&cfg),
        Command::Stimulate(_) => run_stimulate(&cfg),
    }
}

fn out_file(cfg: &ScenarioConfig, name: &str) -> Result<PathBuf> {
    let dir = &cfg.output.directory;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir.join(format!("{}_{name}", cfg.output.prefix)))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Number of comma-separated values on the first data row of a fracture file.
fn fracture_file_columns(path: &Path) -> Result<usize> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let row = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#') && l.split(',').next().is_some_and(|f| f.trim().parse::<f64>().is_ok()));
    Ok(row.map_or(4, |r| r.split(',').count()))
}

pub fn load_network(cfg: &ScenarioConfig) -> Result<Network2> {
    let segs = io::read_fractures_csv_2d(cfg.fracture_file()?)?;
    let net = match cfg.fractures.tol {
        Some(t) => Network2::with_tol(segs, t),
        None => Network2::new(segs),
    };
    find_intersections(&net)
}

pub fn build_grid(cfg: &ScenarioConfig) -> Result<MixedDimGrid> {
    cfg.mesh.validate()?;
    let net = load_network(cfg)?;
    let mdg = build_mixed_grid(&cfg.domain, &net, &cfg.mesh)?;
    if cfg.flow.dfn {
        mdg.dfn_mode()
    } else {
        Ok(mdg)
    }
}

fn side_of(tag: FaceTag) -> Option<Side> {
    match tag {
        FaceTag::Domain(s) => Some(s),
        _ => None,
    }
}

pub fn flow_problem(cfg: &ScenarioConfig, mdg: &MixedDimGrid) -> FlowProblem {
    let f = &cfg.flow;
    let mut p = FlowProblem::unit(mdg);
    for (g, grid) in mdg.grids.iter().enumerate() {
        let q = &mut p.grids[g];
        q.porosity.iter_mut().for_each(|x| *x = f.porosity);
        q.compressibility = f.compressibility;
        if grid.dim == 2 {
            q.set_isotropic_permeability(f.permeability);
        } else {
            q.aperture.iter_mut().for_each(|x| *x = f.aperture);
            q.set_isotropic_permeability(f.fracture_permeability.unwrap_or(cubic_law(f.aperture)));
        }
        for face in 0..grid.num_faces() {
            if let Some(bc) = side_of(grid.face_tags[face]).and_then(|s| f.bc[io::side_index(s)]) {
                q.bc[face] = Some(bc);
            }
        }
    }
    p.reset_normal_transmissivity(mdg);
    if let Some(kn) = f.normal_transmissivity {
        p.interfaces.iter_mut().for_each(|i| i.normal_transmissivity.iter_mut().for_each(|x| *x = kn));
    }
    p
}

pub fn transport_problem(cfg: &ScenarioConfig, mdg: &MixedDimGrid, flow: &FlowProblem) -> TransportProblem {
    let t = &cfg.transport;
    let mut p = TransportProblem::from_flow(mdg, flow);
    p.heat_capacity_fluid = t.heat_capacity_fluid;
    p.conduction = cfg.flow.scheme;
    for (g, grid) in mdg.grids.iter().enumerate() {
        let q = &mut p.grids[g];
        q.heat_capacity_eff.iter_mut().for_each(|x| *x = t.heat_capacity);
        let c = if grid.dim == 2 { t.conductivity } else { t.fracture_conductivity.unwrap_or(t.conductivity) };
        q.conductivity.iter_mut().for_each(|k| *k = Tensor2::identity() * c);
        for face in 0..grid.num_faces() {
            if let Some(bc) = side_of(grid.face_tags[face]).and_then(|s| t.bc[io::side_index(s)]) {
                q.bc[face] = Some(bc);
            }
        }
    }
    p.reset_thermal_normal(mdg);
    p
}

fn nearest_cell(g: &Grid, x: Point2) -> usize {
    (0..g.num_cells())
        .min_by(|&a, &b| (g.cell_centers[a] - x).norm().total_cmp(&(g.cell_centers[b] - x).norm()))
        .expect("grid without cells")
}

/// Grid and cell receiving the injection.
pub fn injection_cell(cfg: &ScenarioConfig, mdg: &MixedDimGrid, net: &Network2) -> Result<(usize, usize)> {
    let mid = |i: usize| (net.fractures[i].start() + net.fractures[i].end()) / 2.0;
    let frac = match cfg.injection.fracture {
        FractureSelector::Index(i) if i < net.fractures.len() => i,
        FractureSelector::Index(i) => {
            return Err(Error::Config(format!("injection fracture {i} does not exist ({} fractures)", net.fractures.len())))
        }
        FractureSelector::Lowest => (0..net.fractures.len())
            .min_by(|&a, &b| mid(a).y.total_cmp(&mid(b).y))
            .ok_or_else(|| Error::Config("injection needs at least one fracture".into()))?,
    };
    let id = net.fractures[frac].id;
    let g = (0..mdg.num_grids())
        .find(|&g| mdg.grids[g].dim == 1 && mdg.grids[g].fracture_ids.first() == Some(&id))
        .ok_or_else(|| Error::Config(format!("fracture {id} has no grid inside the domain")))?;
    let x = cfg.injection.point.map_or(mid(frac), |(x, y)| Point2::new(x, y));
    Ok((g, nearest_cell(&mdg.grids[g], x)))
}

pub fn stimulation_setup(cfg: &ScenarioConfig, mdg: &MixedDimGrid, net: &Network2) -> Result<StimulationSetup> {
    let m = &cfg.mechanics;
    let g0 = &mdg.grids[0];
    if g0.dim != 2 {
        return Err(Error::Config("stimulation needs the matrix grid; remove --dfn".into()));
    }
    let mut elastic = ElasticParameters::uniform(g0, m.shear_modulus, m.lame_lambda);
    for side in Side::ALL {
        let bc = m.support[io::side_index(side)].to_bc(side);
        elastic.set_bc_where(g0, |t| t == FaceTag::Domain(side), bc);
    }
    Ok(StimulationSetup {
        flow: flow_problem(cfg, mdg),
        elastic,
        friction: FrictionParameters {
            friction_coefficient: m.friction_coefficient,
            dilation_angle: m.dilation_angle.to_radians(),
            slip_relaxation: m.slip_relaxation,
            slip_tolerance: m.slip_tolerance,
            max_iterations: m.max_iterations,
        },
        schedule: InjectionSchedule { breakpoints: cfg.injection.schedule.clone() },
        injection: injection_cell(cfg, mdg, net)?,
        scheme: cfg.flow.scheme,
        dt: cfg.time.dt,
        t_end: cfg.time.t_end,
        initial_pressure: None,
        solver: cfg.solver,
    })
}

fn run_intersect(cfg: &ScenarioConfig) -> Result<Report> {
    let file = cfg.fracture_file()?;
    let mut r = Report::default();
    let mut csv = String::new();
    let (n, segments, points) = if fracture_file_columns(file)? == 3 {
        let fr = io::read_fractures_csv_3d(file)?;
        let net = match cfg.fractures.tol {
            Some(t) => Network3::with_tol(fr, t),
            None => Network3::new(fr),
        };
        let net = find_intersections(&net)?;
        csv.push_str("kind,fractures,x0,y0,z0,x1,y1,z1\n");
        for i in &net.intersections {
            let parents: Vec<String> = i.parents.iter().map(usize::to_string).collect();
            let (kind, a, b) = match i.geometry {
                IntersectionGeometry::Point(p) => ("point", p, p),
                IntersectionGeometry::Segment(a, b) => ("segment", a, b),
            };
            let c: Vec<String> = [a.x, a.y, a.z, b.x, b.y, b.z].iter().map(|&v| format_exact(v)).collect();
            writeln!(csv, "{kind},{},{}", parents.join(";"), c.join(",")).unwrap();
        }
        (net.fractures.len(), net.num_segments(), net.num_points())
    } else {
        let net = load_network(cfg)?;
        csv.push_str("kind,fractures,x0,y0,x1,y1\n");
        for i in &net.intersections {
            let parents: Vec<String> = i.parents.iter().map(usize::to_string).collect();
            let (kind, a, b) = match i.geometry {
                IntersectionGeometry::Point(p) => ("point", p, p),
                IntersectionGeometry::Segment(a, b) => ("segment", a, b),
            };
            let c: Vec<String> = [a.x, a.y, b.x, b.y].iter().map(|&v| format_exact(v)).collect();
            writeln!(csv, "{kind},{},{}", parents.join(";"), c.join(",")).unwrap();
        }
        (net.fractures.len(), net.num_segments(), net.num_points())
    };
    let path = out_file(cfg, "intersections.csv")?;
    write_text(&path, &csv)?;
    r.files.push(path);
    r.line(format!("fractures: {n}"));
    r.line(format!("segment intersections: {segments}"));
    r.line(format!("point intersections: {points}"));
    Ok(r)
}

fn run_extrude(cfg: &ScenarioConfig) -> Result<Report> {
    let traces = io::read_fractures_csv_2d(cfg.fracture_file()?)?;
    let f = &cfg.fractures;
    let spec = ExtrusionSpec {
        height: f.extrusion_height,
        dip_angle: f.dip_angle.to_radians(),
        strike_angle: f.strike_angle.to_radians(),
    };
    let polygons = extrude_outcrop(&traces, &vec![spec; traces.len()])?;
    let path = out_file(cfg, "fractures_3d.csv")?;
    io::write_fractures_csv_3d(&path, &polygons)?;
    let mut r = Report::default();
    r.files.push(path);
    r.line(format!("extruded fractures: {}", polygons.len()));
    Ok(r)
}

fn grid_summary(mdg: &MixedDimGrid, r: &mut Report) {
    for d in (0..=2).rev() {
        let gs = mdg.grids_of_dim(d);
        let cells: usize = gs.iter().map(|&g| mdg.grids[g].num_cells()).sum();
        r.line(format!("{d}D grids: {}, cells: {cells}", gs.len()));
    }
}

fn per_grid(mdg: &MixedDimGrid, f: impl Fn(&Grid) -> Vec<f64>) -> Vec<Vec<f64>> {
    mdg.grids.iter().map(f).collect()
}

fn run_mesh(cfg: &ScenarioConfig) -> Result<Report> {
    let mdg = build_grid(cfg)?;
    let mut r = Report::default();
    grid_summary(&mdg, &mut r);
    let fields = [CellField::new("cell_volume", per_grid(&mdg, |g| g.cell_volumes.clone()))];
    r.files = io::write_vtk(&mdg, &fields, &cfg.output.directory, &cfg.output.prefix, 0)?;
    Ok(r)
}

fn max_relative(res: &[f64], scale: f64) -> f64 {
    res.iter().fold(0.0_f64, |m, x| m.max(x.abs())) / scale.max(f64::MIN_POSITIVE)
}

/// Largest face flux magnitude, the scale of the mass-balance check.
fn flux_scale(face_flux: &[Vec<f64>]) -> f64 {
    face_flux.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn run_flow(cfg: &ScenarioConfig) -> Result<Report> {
    let mdg = build_grid(cfg)?;
    let problem = flow_problem(cfg, &mdg);
    let sol = solve_incompressible(&mdg, &problem, cfg.flow.scheme, cfg.solver)?;
    let mut r = Report::default();
    grid_summary(&mdg, &mut r);
    let res = mass_balance_residual(&mdg, &problem, &sol, None);
    r.line(format!("relative mass balance residual: {:e}", max_relative(&res, flux_scale(&sol.face_flux))));
    let fields = [CellField::new("pressure", sol.pressure.clone())];
    r.files = io::write_vtk(&mdg, &fields, &cfg.output.directory, &cfg.output.prefix, 0)?;
    Ok(r)
}

fn run_flow_transport(cfg: &ScenarioConfig) -> Result<Report> {
    let mdg = build_grid(cfg)?;
    let flow = flow_problem(cfg, &mdg);
    let sol = solve_incompressible(&mdg, &flow, cfg.flow.scheme, cfg.solver)?;
    let transport = transport_problem(cfg, &mdg, &flow);
    let op = TransportOperator::new(&mdg, &transport, &sol.face_flux)?;
    let mut stepper = TimeStepper::new(cfg.time.scheme, cfg.time.dt, cfg.time.t_end);
    stepper.cfl_safety = cfg.transport.cfl_safety;
    stepper.solver = cfg.solver;
    let initial = per_grid(&mdg, |g| vec![cfg.transport.initial_temperature; g.num_cells()]);
    let mut r = Report::default();
    grid_summary(&mdg, &mut r);
    let mut files = Vec::new();
    let mut times = String::from("step,time\n");
    let mut k = 0;
    let mut err = None;
    let run = run_transport(&mdg, &op, &stepper, &initial, &cfg.output.times, |t, temp| {
        if err.is_some() {
            return;
        }
        let fields = [CellField::new("pressure", sol.pressure.clone()), CellField::new("temperature", temp.to_vec())];
        match io::write_vtk(&mdg, &fields, &cfg.output.directory, &cfg.output.prefix, k) {
            Ok(f) => files.extend(f),
            Err(e) => err = Some(e),
        }
        writeln!(times, "{k},{}", format_exact(t)).unwrap();
        k += 1;
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let path = out_file(cfg, "times.csv")?;
    write_text(&path, &times)?;
    files.push(path);
    r.files = files;
    r.line(format!("time steps: {}", run.steps));
    r.line(format!("largest relative energy residual: {:e}", run.max_energy_error));
    Ok(r)
}

fn stimulation_fields(mdg: &MixedDimGrid, rec: &StimulationRecord) -> Vec<CellField> {
    let on_fractures = |v: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        (0..mdg.num_grids()).map(|g| if mdg.grids[g].dim == 1 { v[g].clone() } else { Vec::new() }).collect()
    };
    let matrix = |f: fn(&nalgebra::Vector2<f64>) -> f64| -> Vec<Vec<f64>> {
        let mut v = vec![Vec::new(); mdg.num_grids()];
        v[0] = rec.displacement.cell.iter().map(f).collect();
        v
    };
    vec![
        CellField::new("pressure", rec.pressure.clone()),
        CellField::new("aperture", rec.apertures.clone()),
        CellField::new("slip", on_fractures(&rec.slip.slip)),
        CellField::new("cumulative_slip", on_fractures(&rec.slip.cumulative)),
        CellField::new("ux", matrix(|u| u.x)),
        CellField::new("uy", matrix(|u| u.y)),
    ]
}

fn run_stimulate(cfg: &ScenarioConfig) -> Result<Report> {
    if cfg.flow.dfn {
        return Err(Error::Config("stimulation needs the matrix grid; remove --dfn".into()));
    }
    let net = load_network(cfg)?;
    let mdg = build_grid(cfg)?;
    let setup = stimulation_setup(cfg, &mdg, &net)?;
    let mut r = Report::default();
    grid_summary(&mdg, &mut r);
    let (ig, ic) = setup.injection;
    r.line(format!("injection: grid {ig}, cell {ic}"));
    let fracture_grids = mdg.grids_of_dim(1);
    let mut history = String::from("step,time,inner_iterations");
    for &g in &fracture_grids {
        write!(history, ",max_slip_fracture{}", mdg.grids[g].fracture_ids[0]).unwrap();
    }
    history.push('\n');
    let mut files = Vec::new();
    let mut err = None;
    let mut next = cfg.output.times.iter().copied().peekable();
    let eps = 1e-9 * cfg.time.dt;
    let mut k = 0;
    let records = stimulate(&mdg, &setup, |rec| {
        let mut record = cfg.output.times.is_empty();
        while next.peek().is_some_and(|&o| rec.time >= o - eps) {
            next.next();
            record = true;
        }
        if !record || err.is_some() {
            return;
        }
        match io::write_vtk(&mdg, &stimulation_fields(&mdg, rec), &cfg.output.directory, &cfg.output.prefix, k) {
            Ok(f) => files.extend(f),
            Err(e) => err = Some(e),
        }
        k += 1;
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    for (step, rec) in records.iter().enumerate() {
        write!(history, "{},{},{}", step + 1, format_exact(rec.time), rec.inner_iterations).unwrap();
        for &g in &fracture_grids {
            let m = rec.slip.cumulative[g].iter().fold(0.0_f64, |a, &b| a.max(b));
            write!(history, ",{}", format_exact(m)).unwrap();
        }
        history.push('\n');
    }
    let path = out_file(cfg, "slip_history.csv")?;
    write_text(&path, &history)?;
    files.push(path);
    r.files = files;
    let total: f64 = records.last().map_or(0.0, |rec| rec.slip.cumulative.iter().flatten().sum());
    r.line(format!("time steps: {}", records.len()));
    r.line(format!("total cumulative slip: {total:e}"));
    Ok(r)
}

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command as Proc, Output};

use common::*;
use dfm::app::{build_grid, flow_problem, load_config, Command, RunArgs};
use dfm::flow::{solve_incompressible, Scheme};
use dfm::io::check_vtk;

fn dfm(args: &[&str]) -> Output {
    Proc::new(env!("CARGO_BIN_EXE_dfm")).args(args).output().expect("binary runs")
}

fn run_to(sub: &str, ini: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = scenario(ini);
    let mut args = vec![sub, cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    dfm(&args)
}

fn listing(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "status {:?}\nstdout:\n{}\nstderr:\n{}", o.status, String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}

fn check_all_vtk(dir: &Path) -> usize {
    let mut n = 0;
    for p in listing(dir) {
        if p.extension().is_some_and(|e| e == "vtk") {
            check_vtk(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    n
}

/// Runs a scenario twice into separate directories and compares every output byte.
fn deterministic(sub: &str, ini: &str) -> (tempfile::TempDir, Output) {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let oa = run_to(sub, ini, a.path(), &[]);
    assert_ok(&oa);
    let ob = run_to(sub, ini, b.path(), &[]);
    assert_ok(&ob);
    let (la, lb) = (listing(a.path()), listing(b.path()));
    assert_eq!(la.iter().map(|p| p.file_name()).collect::<Vec<_>>(), lb.iter().map(|p| p.file_name()).collect::<Vec<_>>());
    assert!(!la.is_empty());
    for (x, y) in la.iter().zip(&lb) {
        assert!(std::fs::read(x).unwrap() == std::fs::read(y).unwrap(), "{} differs between runs", x.display());
    }
    (a, oa)
}

#[test]
fn flow_scenario_is_deterministic_and_valid() {
    let (dir, out) = deterministic("flow", "flow_left_right.ini");
    assert_eq!(check_all_vtk(dir.path()), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("mass balance"));
}

#[test]
fn flow_transport_scenario_is_deterministic_and_valid() {
    let (dir, _) = deterministic("flow-transport", "flow_transport.ini");
    assert!(check_all_vtk(dir.path()) > 0);
    let times = std::fs::read_to_string(dir.path().join("ft_times.csv")).unwrap();
    assert!(times.lines().count() >= 3);
}

#[test]
fn stimulate_scenario_is_deterministic_and_valid() {
    let (dir, _) = deterministic("stimulate", "stimulate.ini");
    assert!(check_all_vtk(dir.path()) > 0);
    let hist = std::fs::read_to_string(dir.path().join("stim_slip_history.csv")).unwrap();
    assert_eq!(hist.lines().count(), 13);
}

#[test]
fn mesh_and_intersect_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_to("mesh", "flow_transport.ini", dir.path(), &[]));
    assert!(check_all_vtk(dir.path()) > 1);
    let o = run_to("intersect", "flow_transport.ini", dir.path(), &[]);
    assert_ok(&o);
    assert!(listing(dir.path()).iter().any(|p| p.to_string_lossy().ends_with("_intersections.csv")));
}

#[test]
fn left_right_pressure_is_linear() {
    let cmd = Command::Flow(RunArgs { config: scenario("flow_left_right.ini"), ..Default::default() });
    let cfg = load_config(&cmd).unwrap();
    assert_eq!(cfg.flow.scheme, Scheme::Mpfa);
    let mdg = build_grid(&cfg).unwrap();
    let sol = solve_incompressible(&mdg, &flow_problem(&cfg, &mdg), cfg.flow.scheme, None).unwrap();
    let mut err: f64 = 0.0;
    for (g, grid) in mdg.grids.iter().enumerate() {
        for (c, x) in grid.cell_centers.iter().enumerate() {
            err = err.max((sol.pressure[g][c] - (1.0 - x.x)).abs());
        }
    }
    assert!(err < 1e-10, "max deviation {err:e}");
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const BASE: &str = "[domain]\nxmin = 0\nymin = 0\nxmax = 1\nymax = 1\n[fractures]\nfile = f.csv\n[mesh]\nh_background = 0.2\n[flow]\nbc_west = dirichlet 1\nbc_east = dirichlet 0\n";

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "f.csv", "0.2,0.5,0.8,0.5\n0.3,0.3,abc,0.4\n");
    let cfg = write(dir.path(), "bad_number.ini", BASE);
    let o = dfm(&["flow", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("f.csv:2:") && msg.contains("abc"), "{msg}");

    let missing = write(dir.path(), "missing.ini", "[fractures]\nfile = f.csv\n");
    assert_eq!(dfm(&["flow", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(dfm(&["flow", dir.path().join("nope.ini").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn geometry_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "f.csv", "0.2,0.5,0.8,0.5\n");
    let cfg = write(dir.path(), "fine.ini", BASE);
    let o = dfm(&["flow", cfg.to_str().unwrap(), "--h", "1e-7"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn solver_errors_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "f.csv", "0.2,0.5,0.8,0.5\n");
    let cfg = write(dir.path(), "s.ini", &format!("{BASE}[solver]\nkind = cg\nmax_iter = 1\ntol = 1e-14\n"));
    let o = dfm(&["flow", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

use std::fs;
use std::path::Path;
use std::process::Command;

use limcycle::cli::{run, SolutionFile};
use tempfile::tempdir;

fn run_args(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["limcycle"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn solve_writes_header_and_nodes() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("lin.csv");
    let (code, _, err) = run_args(&["solve", "--model", "linear", "--N", "7", "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    let sol = SolutionFile::load(&out).unwrap();
    assert_eq!(sol.meta["model"], "linear");
    assert_eq!(sol.meta["N"], "7");
    assert_eq!(sol.meta["converged"], "true");
    assert_eq!(sol.meta["iterations"], "1");
    assert_eq!(sol.columns, ["phase", "time", "x1"]);
    assert_eq!(sol.rows.len(), 7);
    for row in &sol.rows {
        let t = row[0];
        assert!((row[2] - (t.cos() + t.sin()) / 2.0).abs() < 1e-12);
    }
}

#[test]
fn file_guess_round_trip_converges_immediately() {
    let dir = tempdir().unwrap();
    let first = dir.path().join("p2.csv");
    let second = dir.path().join("p2b.csv");
    let common = ["--model", "pendulum", "--param", "b=181", "--subharmonic", "2"];
    let mut a = vec!["solve", "--guess", "sin:1.0", "--out", p(&first)];
    a.extend_from_slice(&common);
    assert_eq!(run_args(&a).0, 0);
    let g = format!("file:{}", p(&first));
    let mut b = vec!["solve", "--guess", g.as_str(), "--out", p(&second)];
    b.extend_from_slice(&common);
    assert_eq!(run_args(&b).0, 0);
    let s2 = SolutionFile::load(&second).unwrap();
    let its: usize = s2.meta["iterations"].parse().unwrap();
    assert!(its <= 2);
    let s1 = SolutionFile::load(&first).unwrap();
    assert_eq!(s1.rows, s2.rows);
}

#[test]
fn file_guess_resamples_to_new_grid() {
    let dir = tempdir().unwrap();
    let first = dir.path().join("coarse.csv");
    let fine = dir.path().join("fine.csv");
    let common = ["--model", "pendulum", "--param", "b=181", "--subharmonic", "2"];
    let mut a = vec!["solve", "--guess", "sin:1.0", "--out", p(&first)];
    a.extend_from_slice(&common);
    assert_eq!(run_args(&a).0, 0);
    let g = format!("file:{}", p(&first));
    let mut b = vec!["solve", "--N", "151", "--guess", g.as_str(), "--out", p(&fine)];
    b.extend_from_slice(&common);
    assert_eq!(run_args(&b).0, 0);
    assert_eq!(SolutionFile::load(&fine).unwrap().rows.len(), 151);
}

#[test]
fn solve_is_deterministic() {
    let args = ["solve", "--model", "pendulum", "--N", "31", "--param", "b=181", "--subharmonic", "2", "--guess", "sin:1.0"];
    let (c1, o1, _) = run_args(&args);
    let (c2, o2, _) = run_args(&args);
    assert_eq!(c1, c2);
    assert_eq!(o1, o2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "model = \"linear\"\nN = 5\n[linear]\np = 2.0\n").unwrap();
    let (code, out, _) = run_args(&["solve", "--config", p(&cfg), "--param", "p=4.0"]);
    assert_eq!(code, 0);
    let sol = SolutionFile::parse(&out).unwrap();
    assert_eq!(sol.meta["param.p"].parse::<f64>().unwrap(), 4.0);
    assert_eq!(sol.rows.len(), 5);
}

#[test]
fn unconverged_solve_exits_one_and_flags_header() {
    let (code, out, _) = run_args(&[
        "solve", "--model", "pendulum", "--N", "21", "--param", "b=10", "--guess", "sin:0.3",
        "--max-iter", "1", "--tol", "1e-300",
    ]);
    assert_eq!(code, 1);
    let sol = SolutionFile::parse(&out).unwrap();
    assert_eq!(sol.meta["converged"], "false");
    assert!(sol.meta.contains_key("WARNING"));
}

#[test]
fn invalid_input_exits_two() {
    for args in [
        vec!["solve", "--model", "linear", "--N", "4"],
        vec!["solve", "--model", "nothing"],
        vec!["solve", "--model", "linear", "--param", "q=1"],
        vec!["solve", "--model", "linear", "--guess", "cos:1"],
        vec!["solve", "--model", "pendulum", "--guess", "file:/nonexistent/x.csv"],
        vec!["sweep", "--model", "pendulum", "--sweep", "b=1:1:1"],
        vec!["sweep", "--model", "pendulum", "--sweep", "z=0:1:1"],
        vec!["matrix", "--N", "6"],
        vec!["bogus"],
    ] {
        assert_eq!(run_args(&args).0, 2, "{args:?}");
    }
}

#[test]
fn sweep_reports_extrema_per_point() {
    let (code, out, _) = run_args(&[
        "sweep", "--model", "pendulum", "--N", "21", "--sweep", "b=0:10:2.5", "--component", "1,2",
    ]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "b,component,max,min,iterations,converged");
    assert_eq!(rows.len(), 1 + 5 * 2);
    assert!(out.contains("# status = completed"));
}

#[test]
fn interp_reproduces_nodes() {
    let dir = tempdir().unwrap();
    let sol = dir.path().join("s.csv");
    let dense = dir.path().join("d.csv");
    assert_eq!(
        run_args(&["solve", "--model", "pendulum", "--N", "21", "--param", "b=181", "--subharmonic", "2", "--guess", "sin:1.0", "--out", p(&sol)]).0,
        0
    );
    assert_eq!(
        run_args(&["interp", "--solution", p(&sol), "--points", "63", "--out", p(&dense)]).0,
        0
    );
    let s = SolutionFile::load(&sol).unwrap();
    let d = SolutionFile::load(&dense).unwrap();
    assert_eq!(d.rows.len(), 63);
    for (j, row) in s.rows.iter().enumerate() {
        let drow = &d.rows[3 * j + 2];
        assert_eq!(&drow[2..], &row[2..]);
    }
}

#[test]
fn matrix_and_simulate() {
    let (code, out, _) = run_args(&["matrix", "--N", "3"]);
    assert_eq!(code, 0);
    let rows: Vec<Vec<f64>> = out
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let c = 1.0 / 3f64.sqrt();
    assert!((rows[0][1] - c).abs() < 1e-15 && (rows[1][0] + c).abs() < 1e-15);

    let (code, out, _) = run_args(&["simulate", "--model", "circuit", "--cycles", "2", "--steps", "100", "--stride", "10"]);
    assert_eq!(code, 0);
    let sim = SolutionFile::parse(&out).unwrap();
    assert_eq!(sim.columns, ["time", "phase", "x1", "x2", "x3", "i_d", "V0"]);
    assert_eq!(sim.rows.len(), 21);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_limcycle");
    let ok = Command::new(bin)
        .args(["solve", "--model", "linear", "--N", "3"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("# converged = true"));
    let bad = Command::new(bin).args(["matrix", "--N", "2"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

use std::io::{BufRead, BufReader};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use springsim::analysis::freq::zero_cross_frequency_interpolated;
use springsim::analysis::TraceSeries;
use springsim::io::{load_scene, render_scene, save_scene};
use springsim::lattice::TriangleMesh;
use springsim::model::{Mass, SceneBuilder, Spring};
use springsim::steer::{decode, Message};
use springsim::validate::triaxial_oscillator;
use springsim::Vec3;
use tempfile::TempDir;

fn springsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_springsim"))
        .args(args)
        .env_remove("SPRINGSIM_THREADS")
        .output()
        .unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn cube_mesh(dir: &TempDir) -> PathBuf {
    let p = dir.path().join("cube.obj");
    std::fs::write(&p, TriangleMesh::unit_cube().to_obj()).unwrap();
    p
}

fn oscillator_scene(dir: &TempDir) -> PathBuf {
    let mut scene = triaxial_oscillator(10_000.0, 0.1, 0.1);
    scene.masses[0].x.y = 1e-4;
    let p = dir.path().join("osc.json");
    save_scene(&p, &scene).unwrap();
    p
}

#[test]
fn generate_unit_voxel_summary() {
    let dir = TempDir::new().unwrap();
    let mesh = cube_mesh(&dir);
    let out = dir.path().join("cube.json");
    let o = springsim(&["generate", "--mesh", path_str(&mesh), "--dim", "1", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.starts_with("8 masses, 28 springs"), "{stdout}");
    let scene = load_scene(&out).unwrap();
    assert_eq!((scene.masses.len(), scene.springs.len()), (8, 28));
}

#[test]
fn generate_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let mesh = cube_mesh(&dir);
    let gen = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = springsim(&[
            "generate", "--mesh", path_str(&mesh), "--mode", "random", "--cutoff", "0.2", "--seed", seed, "--out",
            path_str(&out),
        ]);
        assert!(o.status.success(), "{}", text(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = gen("7", "a.json");
    assert_eq!(a, gen("7", "b.json"));
    assert_ne!(a, gen("8", "c.json"));
}

#[test]
fn generate_argument_and_io_errors() {
    let dir = TempDir::new().unwrap();
    let mesh = cube_mesh(&dir);
    let out = dir.path().join("x.json");
    let o = springsim(&["generate", "--mesh", path_str(&mesh), "--mode", "random", "--cutoff", "0", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o.stderr));
    let o = springsim(&["generate", "--mesh", "/nonexistent.obj", "--dim", "1", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(4), "{}", text(&o.stderr));
    let o = springsim(&["generate", "--mesh", path_str(&mesh), "--mode", "voxel", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o.stderr));
}

#[test]
fn zero_duration_simulation_has_one_row() {
    let dir = TempDir::new().unwrap();
    let scene = oscillator_scene(&dir);
    let o = springsim(&["simulate", "--scene", path_str(&scene), "--duration", "0", "--trace", "0"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let csv = text(&o.stdout);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "{csv}");
    assert_eq!(lines[0], "t,0.x,0.y,0.z,epe,gpe,ke,total");
    assert!(lines[1].starts_with("0.0000000000000000e0,"));
}

#[test]
fn oscillator_csv_frequency_is_analytic() {
    let dir = TempDir::new().unwrap();
    let scene = oscillator_scene(&dir);
    let out = dir.path().join("osc.csv");
    let o = springsim(&[
        "simulate", "--scene", path_str(&scene), "--duration", "1", "--trace", "0", "--exec", "serial", "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(out).unwrap();
    let (mut t, mut y) = (Vec::new(), Vec::new());
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        t.push(cols[0]);
        y.push(cols[2]);
    }
    let f = zero_cross_frequency_interpolated(&TraceSeries::new(t, y).unwrap(), 0.0);
    let analytic = (10_000.0f64 / 0.1).sqrt() / (2.0 * std::f64::consts::PI);
    assert!((f - analytic).abs() / analytic < 0.005, "{f} vs {analytic}");
}

#[test]
fn invalid_integrator_lists_choices() {
    let o = springsim(&["simulate", "--scene", "s.json", "--integrator", "midpoint"]);
    assert_eq!(o.status.code(), Some(1));
    let err = text(&o.stderr);
    assert!(err.contains("euler") && err.contains("verlet") && err.contains("rk4"), "{err}");
}

#[test]
fn divergence_and_invalid_scene_exit_codes() {
    let dir = TempDir::new().unwrap();
    let mut b = SceneBuilder::new().gravity(Vec3::zeros()).dt(1e-2).damping(0.0);
    let a = b.add_mass(Mass::new(0.1, Vec3::zeros()).anchored());
    let m = b.add_mass(Mass::new(0.1, Vec3::new(1.1, 0.0, 0.0)));
    b.add_spring(Spring::new(a, m, 1e12, 1.0)).unwrap();
    let stiff = b.build();
    let path = dir.path().join("stiff.json");
    save_scene(&path, &stiff).unwrap();
    let o = springsim(&["simulate", "--scene", path_str(&path), "--duration", "10", "--integrator", "euler"]);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o.stderr));
    assert!(text(&o.stderr).contains("diverge"), "{}", text(&o.stderr));

    let bad = render_scene(&stiff).replace("\"k\": 1000000000000.0", "\"k\": -1.0");
    assert!(bad.contains("-1.0"));
    let path = dir.path().join("bad.json");
    std::fs::write(&path, bad).unwrap();
    let o = springsim(&["simulate", "--scene", path_str(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("k > 0"), "{}", text(&o.stderr));
}

#[test]
fn deterministic_mode_gives_identical_artifacts() {
    let dir = TempDir::new().unwrap();
    let mesh = cube_mesh(&dir);
    let scene = dir.path().join("lattice.json");
    let o = springsim(&["generate", "--mesh", path_str(&mesh), "--dim", "0.25", "--out", path_str(&scene)]);
    assert!(o.status.success());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = springsim(&[
            "simulate", "--scene", path_str(&scene), "--duration", "0.05", "--trace", "0,7,50", "--exec",
            "parallel-det", "--threads", "3", "--out", path_str(&out),
        ]);
        assert!(o.status.success(), "{}", text(&o.stderr));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn natfreq_reports_oscillator_mode() {
    let dir = TempDir::new().unwrap();
    let scene = oscillator_scene(&dir);
    let o = springsim(&["natfreq", "--scene", path_str(&scene), "--count", "3", "--trace", "0"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let out = text(&o.stdout);
    let freqs: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(freqs.len(), 4, "{out}");
    for f in freqs {
        assert!((f - 50.3292).abs() / 50.3292 < 0.005, "{out}");
    }
}

#[test]
fn validate_natfreq_passes_and_writes_table() {
    let dir = TempDir::new().unwrap();
    let o = springsim(&["validate", "natfreq", "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}{}", text(&o.stdout), text(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("natfreq.csv")).unwrap();
    assert!(table.starts_with("case,predicted_hz,measured_hz"));
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn validate_energy_passes_on_default_cantilever() {
    let dir = TempDir::new().unwrap();
    let o = springsim(&["validate", "energy", "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}{}", text(&o.stdout), text(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    assert!(table.starts_with("t,epe,gpe,ke,total"));
}

#[test]
fn validate_reports_failing_rows_with_exit_2() {
    // A 10 ms trace holds no oscillation at all.
    let o = springsim(&["validate", "beam", "--vary", "length", "--duration", "0.01"]);
    assert_ne!(o.status.code(), Some(0), "{}", text(&o.stdout));
    assert!(matches!(o.status.code(), Some(2)), "{}", text(&o.stderr));
}

#[test]
fn bench_writes_csv_and_honours_thread_env() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_springsim"))
        .args(["bench", "--springs", "3000", "--integrator", "euler,rk4", "--out", path_str(&out)])
        .env("SPRINGSIM_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).lines().all(|l| l.contains("on 1 thread(s)")), "{}", text(&o.stdout));
    let csv = std::fs::read_to_string(out).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(2).unwrap().contains(",rk4,"));

    let o = Command::new(env!("CARGO_BIN_EXE_springsim"))
        .args(["bench", "--springs", "3000"])
        .env("SPRINGSIM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn serve_speaks_the_protocol() {
    let dir = TempDir::new().unwrap();
    let scene = oscillator_scene(&dir);
    let mut child = Command::new(env!("CARGO_BIN_EXE_springsim"))
        .args(["serve", "--scene", path_str(&scene), "--port", "0", "--rate", "50"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut banner = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut banner).unwrap();
    let addr = banner.trim().strip_prefix("listening on ").expect(&banner).to_owned();
    let stream = TcpStream::connect(addr).unwrap();
    let mut lines = BufReader::new(stream.try_clone().unwrap()).lines();
    let hello = decode(&lines.next().unwrap().unwrap()).unwrap();
    assert_eq!(hello, Message::Hello { version: 1 });
    std::io::Write::write_all(&mut &stream, b"{\"type\":\"hello\",\"version\":1}\n").unwrap();
    let snap = decode(&lines.next().unwrap().unwrap()).unwrap();
    assert!(matches!(snap, Message::Snapshot(ref s) if s.positions.len() == 7), "{snap:?}");
    child.kill().unwrap();
    child.wait().unwrap();
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nozzleflow::cli::{load_config, RawConfig, RunConfig, Snapshot};
use nozzleflow::Error;
use tempfile::TempDir;

const CYLINDER: &str = "\
mode = solve
gas.gamma = 1.4
nozzle.kind = cylinder
nozzle.radius = 0.5
domain.L = 1
mesh.N_t = 2
mesh.N_a = 4
flux.m0 = 0.5
";

fn nozzleflow(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let path = dir.join("run.conf");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_nozzleflow"))
        .arg(&path)
        .arg("--output-dir")
        .arg(dir.join("out"))
        .args(extra)
        .env("NOZZLEFLOW_THREADS", "2")
        .output()
        .unwrap()
}

#[test]
fn validate_cylinder_defaults_succeed() {
    let dir = TempDir::new().unwrap();
    let out = nozzleflow(
        dir.path(),
        "mode = validate-cylinder\ngas.gamma = 1.4\n",
        &[],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let err: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("max_gradient_error: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err < 1e-8);
}

#[test]
fn choked_flux_exits_uncertified() {
    let dir = TempDir::new().unwrap();
    let out = nozzleflow(dir.path(), CYLINDER, &["--override", "flux.m0=1.05"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.path().join("out/solution.snapshot").exists());
}

#[test]
fn missing_gamma_names_the_key() {
    let dir = TempDir::new().unwrap();
    let config = CYLINDER.replace("gas.gamma = 1.4\n", "");
    let out = nozzleflow(dir.path(), &config, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gas.gamma"));
}

#[test]
fn unknown_key_reports_line() {
    let err = RawConfig::parse("mode = solve\n# note\nmesh.Nx = 3\n").unwrap_err();
    match err {
        Error::Config { line, key, .. } => {
            assert_eq!(line, 3);
            assert_eq!(key, "mesh.Nx");
        }
        other => panic!("{other:?}"),
    }
    assert!(RawConfig::parse("mode = solve\nmode = sweep\n").is_err());
    assert!(RawConfig::parse("just words\n").is_err());
    let raw =
        RawConfig::parse(&CYLINDER.replace("nozzle.radius = 0.5", "nozzle.radius = -1")).unwrap();
    match RunConfig::from_raw(&raw).unwrap_err() {
        Error::Config { key, line, .. } => {
            assert_eq!(key, "nozzle.radius");
            assert_eq!(line, 4);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn overrides_replace_file_values_and_change_the_hash() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("c.conf");
    fs::write(&path, CYLINDER).unwrap();
    let a = load_config(&path, None, &[]).unwrap();
    let b = load_config(&path, None, &["flux.m0=0.25".into()]).unwrap();
    assert_eq!(a.m0, 0.5);
    assert_eq!(b.m0, 0.25);
    assert_ne!(a.hash, b.hash);
    assert!(load_config(&path, None, &["bogus=1".into()]).is_err());
}

#[test]
fn vtk_layout_matches_mesh() {
    let dir = TempDir::new().unwrap();
    let out = nozzleflow(dir.path(), CYLINDER, &[]);
    assert_eq!(out.status.code(), Some(0));
    let vtk = fs::read_to_string(dir.path().join("out/solution.vtk")).unwrap();
    let lines: Vec<&str> = vtk.lines().collect();
    assert_eq!(lines[0], "# vtk DataFile Version 3.0");
    assert!(lines.contains(&"DATASET STRUCTURED_GRID"));
    assert!(lines.contains(&"DIMENSIONS 3 1 5"));
    assert!(lines.contains(&"POINTS 15 double"));
    assert!(lines.contains(&"POINT_DATA 15"));
    assert!(lines.contains(&"SCALARS phi double 1"));
    assert!(lines.contains(&"VECTORS velocity double"));
    assert!(lines.contains(&"SCALARS mach double 1"));
}

#[test]
fn flux_table_on_cylinder_is_uniform() {
    let dir = TempDir::new().unwrap();
    let out = nozzleflow(dir.path(), CYLINDER, &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/fluxes.csv")).unwrap();
    let mut rows = csv.lines();
    assert_eq!(rows.next(), Some("station,flux,deviation"));
    let mut n = 0;
    for row in rows {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cells[1] - 0.5).abs() < 1e-10);
        n += 1;
    }
    assert_eq!(n, 4);
}

#[test]
fn snapshot_round_trips_bitwise() {
    let dir = TempDir::new().unwrap();
    nozzleflow(dir.path(), CYLINDER, &[]);
    let path = dir.path().join("out/solution.snapshot");
    let text = fs::read_to_string(&path).unwrap();
    let snap = Snapshot::load(&path).unwrap();
    assert_eq!(snap.to_text(), text);
    assert_eq!(snap.values.len(), 15);
    assert_eq!(snap.config_hash.len(), 64);
    assert!(Snapshot::parse("garbage").is_err());
}

#[test]
fn outputs_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let config = "\
mode = far-field
gas.gamma = 1.4
nozzle.kind = tanh
nozzle.r_minus = 0.5
nozzle.r_plus = 1
nozzle.length = 1
domain.L = 4
mesh.N_t = 8
mesh.N_a = 32
flux.m0 = 0.3
";
    nozzleflow(a.path(), config, &[]);
    nozzleflow(b.path(), config, &[]);
    for name in [
        "fluxes.csv",
        "convergence.csv",
        "far_field.csv",
        "solution.snapshot",
        "solution.vtk",
    ] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn sweep_and_critical_modes_write_tables() {
    let dir = TempDir::new().unwrap();
    let sweep = CYLINDER
        .replace("mode = solve", "mode = sweep")
        .replace("flux.m0 = 0.5\n", "sweep.m0 = 0.1, 0.5, 0.9\n");
    let out = nozzleflow(dir.path(), &sweep, &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/q_vs_m0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let crit = CYLINDER
        .replace("mode = solve", "mode = critical-flux")
        .replace("flux.m0 = 0.5\n", "critical.bisections = 6\n");
    let out = nozzleflow(dir.path(), &crit, &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/critical_flux.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("delta0,m_lo,m_hi,width"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn bad_thread_count_fails() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("run.conf");
    fs::write(&path, CYLINDER).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nozzleflow"))
        .arg(&path)
        .env("NOZZLEFLOW_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NOZZLEFLOW_THREADS"));
}

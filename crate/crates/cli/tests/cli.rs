use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sbgnc::config::ScenarioConfig;
use tempfile::TempDir;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/castalia_like.tab")
}

fn header() -> String {
    format!(
        "[model]\nshape = {:?}\ndensity = 2100.0\n\n[environment]\nrotation_period = 14652.0\n\n[site]\nvertex = 0\n",
        fixture().display().to_string()
    )
}

const DESCENT: &str = "
[descent]
r0 = [-500.0, 1000.0, 1100.0]
v0 = [2.2, -1.2, -0.1]
r_final = [0.0, 0.0, 100.0]
v_final = [0.0, 0.0, -0.2]
dt = 1.0
";

fn sbgnc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbgnc"))
        .args(args)
        .env_remove("SBGNC_OUT_DIR")
        .output()
        .unwrap()
}

fn run_config(dir: &TempDir, body: &str, sub: &str, out: &str) -> (Output, PathBuf) {
    let cfg = dir.path().join(format!("{out}.toml"));
    std::fs::write(&cfg, body).unwrap();
    let out = dir.path().join(out);
    let o = sbgnc(&[
        sub,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    (o, out)
}

fn data_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_owned)
        .collect()
}

#[test]
fn version_prints() {
    let o = sbgnc(&["version"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("sbgnc "));
}

#[test]
fn descent_only_writes_csv_and_summary() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_config(&dir, &(header() + DESCENT), "run", "descent");
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(out.join("descent.csv").exists());
    assert!(out.join("summary.json").exists());
    assert!(!out.join("landing.csv").exists());

    let text = std::fs::read_to_string(out.join("descent.csv")).unwrap();
    assert!(text.starts_with("# frame: site\n"));
    let rows = data_rows(&out.join("descent.csv"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let tau = summary["phases"][0]["transfer_time"].as_f64().unwrap();
    let expected = (tau / 1.0).floor() as i64 + 1;
    assert!(
        (rows.len() as i64 - expected).abs() <= 1,
        "{} vs {expected}",
        rows.len()
    );
    assert!(rows.iter().all(|r| r.split(',').count() == 24));
}

#[test]
fn missing_mesh_is_a_config_error_with_no_outputs() {
    let dir = TempDir::new().unwrap();
    let body = header().replace("castalia_like.tab", "no_such_mesh.tab") + DESCENT;
    let (o, out) = run_config(&dir, &body, "run", "missing");
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let body = header() + DESCENT + "kp_typo = 1.0\n";
    let (o, out) = run_config(&dir, &body, "run", "typo");
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn divergence_exits_with_physics_code_and_keeps_the_log() {
    let dir = TempDir::new().unwrap();
    let body = header()
        + "\n[landing]\nr0 = [0.0, 0.0, 100.0]\nv0 = [0.0, 0.0, 8.0]\ndt = 1.0\nt_max = 5000.0\n";
    let (o, out) = run_config(&dir, &body, "run", "diverge");
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(data_rows(&out.join("landing.csv")).len() > 10);
    assert!(out.join("summary.json").exists());
}

#[test]
fn hop_non_convergence_exits_with_its_own_code() {
    let dir = TempDir::new().unwrap();
    let body = header()
        + "\n[[hops]]\nlaunch = { vertex = 0 }\ntarget = { vertex = 192 }\ntime_of_flight = 1000.0\ntolerance = 1e-12\nmax_iterations = 1\n";
    let (o, out) = run_config(&dir, &body, "run", "stuck");
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(out.join("summary.json").exists());
}

#[test]
fn eight_launch_batch_writes_eight_tracks_and_a_table() {
    let dir = TempDir::new().unwrap();
    let body = header()
        + "\n[hop_batch]\nlaunch = { vertex = 0 }\nspeeds = [0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45]\nazimuths_deg = [90.0]\nwidth = 4\n";
    let (o, out) = run_config(&dir, &body, "hop-batch", "batch");
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let tracks = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            let name = e.as_ref().unwrap().file_name().into_string().unwrap();
            name.starts_with("hop_") && name.len() == "hop_000.csv".len()
        })
        .count();
    assert_eq!(tracks, 8);
    assert_eq!(data_rows(&out.join("hop_batch.csv")).len(), 8);
}

#[test]
fn gravity_sampling_rows() {
    let dir = TempDir::new().unwrap();
    let body = header()
        + "\n[gravity]\npoints = [[20000.0, 0.0, 0.0], [726.0, 0.0, 286.0]]\ngrid = { min = [0.0, 0.0, 0.0], max = [1200.0, 0.0, 0.0], counts = [13, 1, 1] }\n";
    let (o, out) = run_config(&dir, &body, "gravity", "grav");
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows: Vec<Vec<String>> = data_rows(&out.join("gravity_samples.csv"))
        .iter()
        .map(|r| r.split(',').map(str::to_owned).collect())
        .collect();
    assert_eq!(rows.len(), 15);
    // The vertex sample is singular and flagged, not dropped.
    assert!(rows[1][3].is_empty() && !rows[1][8].is_empty());
    // Grid along +x crosses the surface: Laplacian goes from -4 pi G rho to 0.
    let four_pi_g_rho = 4.0 * std::f64::consts::PI * 6.674_30e-11 * 2100.0;
    let lap: Vec<f64> = rows[2..].iter().map(|r| r[7].parse().unwrap()).collect();
    assert!((lap[0] + four_pi_g_rho).abs() < 1e-6 * four_pi_g_rho);
    assert!(lap.last().unwrap().abs() < 1e-6 * four_pi_g_rho);
}

#[test]
fn empty_gravity_sample_set_is_header_only() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_config(
        &dir,
        &(header() + "\n[gravity]\npoints = []\n"),
        "gravity",
        "empty",
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("gravity_samples.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn summary_echoes_a_reparseable_config() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_config(&dir, &(header() + DESCENT), "run", "echo");
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let echoed: ScenarioConfig = serde_json::from_value(summary["config"].clone()).unwrap();
    let loaded = ScenarioConfig::load(&dir.path().join("echo.toml")).unwrap();
    assert_eq!(echoed, loaded);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let dir = TempDir::new().unwrap();
    let (a, out_a) = run_config(&dir, &(header() + DESCENT), "run", "first");
    let (b, out_b) = run_config(&dir, &(header() + DESCENT), "run", "second");
    assert!(a.status.success() && b.status.success());
    for f in ["descent.csv", "summary.json", "plot_descent_state.csv"] {
        let x = std::fs::read(out_a.join(f)).unwrap();
        let y = std::fs::read(out_b.join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn validate_mesh_accepts_fixture_and_rejects_open_mesh() {
    let o = sbgnc(&["validate-mesh", fixture().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("642 vertices"));

    let dir = TempDir::new().unwrap();
    let open = dir.path().join("open.obj");
    std::fs::write(
        &open,
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 1 4 3\n",
    )
    .unwrap();
    let o = sbgnc(&["validate-mesh", open.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("env.toml");
    std::fs::write(
        &cfg,
        header() + "\n[gravity]\npoints = [[5000.0, 0.0, 0.0]]\n",
    )
    .unwrap();
    let out = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_sbgnc"))
        .args(["gravity", "--config", cfg.to_str().unwrap(), "--quiet"])
        .env("SBGNC_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.join("gravity_samples.csv").exists());
}

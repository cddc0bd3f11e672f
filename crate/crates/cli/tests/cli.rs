use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn activeview(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_activeview"))
        .args(args)
        .current_dir(cwd)
        .env_remove("ACTIVEVIEW_ENDPOINT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn synth(dir: &Path, kind: &str, seed: &str, out: &str) {
    let o = activeview(&["synth", kind, "--seed", seed, "--out", out], dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn synth_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "occluder_wall", "9", "a");
    synth(dir.path(), "occluder_wall", "9", "b");
    for f in ["scene.ply", "scenario.toml", "ground_truth.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    synth(dir.path(), "occluder_wall", "10", "c");
    assert_ne!(
        fs::read(dir.path().join("a/scene.ply")).unwrap(),
        fs::read(dir.path().join("c/scene.ply")).unwrap()
    );
}

#[test]
fn run_writes_a_reproducible_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "planted_sphere", "3", "scene");
    for out in ["run1", "run2"] {
        let o = activeview(&["run", "scene/scenario.toml", "--out", out], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "trace.json",
        "action.json",
        "report.json",
        "coarse/volume.f32",
        "fine/volume.json",
    ] {
        let a = fs::read(dir.path().join("run1").join(f)).unwrap();
        let b = fs::read(dir.path().join("run2").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    assert!(dir.path().join("run1/timings.json").exists());
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("run1/report.json")).unwrap()).unwrap();
    assert_eq!(report["scenario_id"], "planted_sphere_3");
    assert_eq!(report["within_one_voxel"], true);
    assert!(report["localization_error"].as_f64().unwrap() < 0.01);
}

#[test]
fn compare_runs_random_once_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "planted_sphere", "5", "scene");
    let o = activeview(
        &[
            "compare",
            "scene/scenario.toml",
            "--strategies",
            "active,random,fixed",
            "--trials",
            "2",
            "--out",
            "cmp",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("cmp/compare.csv")).unwrap();
    let strategies: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(strategies, ["active", "random", "random", "fixed"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout), csv);
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("cmp/summary.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 3);
}

#[test]
fn input_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&activeview(&["run", "missing.toml"], dir.path())), 2);
    fs::write(dir.path().join("bad.toml"), "scene = \"x.ply\"\nunknown = 1\n").unwrap();
    assert_eq!(code(&activeview(&["run", "bad.toml"], dir.path())), 2);
    fs::write(dir.path().join("noscene.toml"), "scene = \"x.ply\"\n").unwrap();
    assert_eq!(code(&activeview(&["run", "noscene.toml"], dir.path())), 2);
    assert_eq!(
        code(&activeview(
            &["synth", "teapot", "--seed", "1", "--out", "t"],
            dir.path()
        )),
        2
    );
    assert_eq!(code(&activeview(&["frobnicate"], dir.path())), 2);

    synth(dir.path(), "planted_sphere", "1", "scene");
    let o = activeview(
        &["compare", "scene/scenario.toml", "--strategies", "active,best"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    let toml = fs::read_to_string(dir.path().join("scene/scenario.toml")).unwrap();
    fs::write(
        dir.path().join("scene/zoom.toml"),
        toml.replace("zoom_z = 4.0", "zoom_z = 0.5"),
    )
    .unwrap();
    assert_eq!(code(&activeview(&["run", "scene/zoom.toml"], dir.path())), 2);
}

#[test]
fn unreachable_remote_is_a_pipeline_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "planted_sphere", "1", "scene");
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let o = Command::new(env!("CARGO_BIN_EXE_activeview"))
        .args(["run", "scene/scenario.toml", "--provider", "remote", "--out", "r"])
        .current_dir(dir.path())
        .env("ACTIVEVIEW_ENDPOINT", format!("http://127.0.0.1:{port}"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("coarse"));
}

#[test]
fn remote_without_endpoint_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "planted_sphere", "1", "scene");
    let o = activeview(&["run", "scene/scenario.toml", "--provider", "remote"], dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

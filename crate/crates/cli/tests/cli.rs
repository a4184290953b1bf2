use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use idbm_cli::{LoadedScenario, RunManifest};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_idbm"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).arg("-o").arg(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bundled_scenarios_pass() {
    let mut names: Vec<String> = std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios"))
        .unwrap()
        .map(|e| e.unwrap().path().file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert!(names.len() >= 5);
    for name in names {
        let dir = tempfile::tempdir().unwrap();
        let out = run_in(dir.path(), &["run", scenario(&name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}{}", stdout(&out), String::from_utf8_lossy(&out.stderr));
        let manifest: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert!(manifest.passed);
        assert_eq!(manifest.scenario, name);
        for a in &manifest.artifacts {
            assert!(dir.path().join(a).exists(), "{a}");
        }
    }
}

#[test]
fn trajectories_and_heatmaps_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["run", scenario("harmonic_grid_pair").to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("trajectory_standard_1.csv")).unwrap();
    assert!(csv.starts_with("t,x1_1,x2_1,steps,halvings,node_rejections,status"));
    assert_eq!(csv.lines().count(), 4);
    let heat = std::fs::read_to_string(dir.path().join("density_1.dat")).unwrap();
    assert!(heat.lines().filter(|l| l.is_empty()).count() > 10);
    assert!(dir.path().join("trajectories_identity_based.gp").exists());
}

#[test]
fn malformed_config_exits_2_with_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(scenario("electron_muon_disjoint")).unwrap();
    std::fs::write(&bad, text.replace("mass = 206.8", "mass = -206.8")).unwrap();
    let out = run_in(dir.path(), &["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.toml:14:"), "{err}");

    std::fs::write(&bad, text.replace("[checks]", "[checks\n")).unwrap();
    let out = run_in(dir.path(), &["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let near = dir.path().join("near.toml");
    let text = std::fs::read_to_string(scenario("electron_muon_disjoint")).unwrap();
    std::fs::write(&near, text.replace("center = [20.0]", "center = [0.5]")).unwrap();
    let out = run_in(dir.path(), &["run", near.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("FAIL disjoint_reduction"));
}

#[test]
fn selftest_passes_and_zero_tolerance_fails() {
    let ok = bin().args(["selftest"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let broken = bin().args(["selftest", "--tolerance-scale", "0"]).output().unwrap();
    assert_eq!(broken.status.code(), Some(1));
    assert!(stdout(&broken).contains("FAIL selftest"));
}

#[test]
fn compare_same_law_has_zero_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["compare", scenario("symmetric_equal_mass").to_str().unwrap(), "--law-a", "standard", "--law-b", "standard"],
    );
    assert!(out.status.success());
    assert!(stdout(&out).contains("trajectory divergence 0.0000e0"));
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["run", scenario("n1_reduction").to_str().unwrap(), "--seed", "99"]);
    assert!(out.status.success());
    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.seed, 99);
    let loaded = LoadedScenario::from_file(&scenario("n1_reduction")).unwrap();
    assert_eq!(manifest.scenario_hash, loaded.hash());
}

#[test]
fn transform_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let configs = dir.path().join("configs.json");
    std::fs::write(&configs, "[[[0.1], [0.6]], [[2.0], [-1.0]]]").unwrap();
    let out = run_in(
        dir.path(),
        &["transform", scenario("electron_muon_overlap").to_str().unwrap(), "--configs", configs.to_str().unwrap()],
    );
    assert!(out.status.success());
    let entries: Vec<idbm_cli::TransformEntry> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("transform.json")).unwrap()).unwrap();
    assert_eq!(entries.len(), 2);
    assert!(entries.iter().all(|e| e.round_trip && e.fiber.components().len() == 2));
}

//! The `hypenergy` binary: exit codes, outputs and reproducibility.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hypenergy");

fn hypenergy(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(BIN);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.arg("--out").arg(out).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn dump_defaults_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(BIN).arg("--dump-defaults").output().unwrap();
    assert!(out.status.success());
    let cfg = write_config(tmp.path(), std::str::from_utf8(&out.stdout).unwrap());
    let run = hypenergy(&["energy"], Some(&cfg), &tmp.path().join("out"));
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn malformed_configs_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    for text in [
        "bogus = 1\n",
        "[space]\nn = 1\n",
        "[space]\nc = -1.0\n",
        "[potential]\nfamily = \"teleport\"\n",
        "[steady]\ndamping = 2.0\n",
        "seed = \"one\"\n",
    ] {
        let cfg = write_config(tmp.path(), text);
        let run = hypenergy(&["energy"], Some(&cfg), &tmp.path().join("out"));
        assert_eq!(run.status.code(), Some(2), "config {text:?}");
        let err = String::from_utf8_lossy(&run.stderr);
        assert!(err.contains("code=2") && err.contains("kind=config"), "{err}");
    }
    let missing = hypenergy(&["energy"], Some(&tmp.path().join("absent.toml")), &tmp.path().join("out"));
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let run = hypenergy(&["selftest"], None, tmp.path());
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert_eq!(run.status.code(), Some(0), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    assert!(tmp.path().join("selftest.csv").exists());
}

#[test]
fn energy_writes_csv_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "seed = 3\n[density]\nkind = \"uniform_ball\"\nradius = 0.5\n");
    let out = tmp.path().join("out");
    let run = hypenergy(&["energy"], Some(&cfg), &out);
    assert_eq!(run.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("energy.csv")).unwrap();
    assert!(csv.starts_with("entropy,interaction,total,quad_error\n"));
    let manifest = std::fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"energy\""));
    assert!(manifest.contains("seed = 3"));
    let hash = manifest.lines().find(|l| l.starts_with("config_sha256")).unwrap();
    assert_eq!(hash.split('"').nth(1).unwrap().len(), 64);
}

#[test]
fn simulate_and_steady_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "seed = 9\n[simulate]\nparticles = 30\nsteps = 100\n[steady]\ncells = 96\ntol = 1e-8\n",
    );
    for cmd in ["simulate", "steady"] {
        let (a, b) = (tmp.path().join(format!("{cmd}_a")), tmp.path().join(format!("{cmd}_b")));
        assert_eq!(hypenergy(&[cmd], Some(&cfg), &a).status.code(), Some(0));
        assert_eq!(hypenergy(&[cmd], Some(&cfg), &b).status.code(), Some(0));
        for entry in std::fs::read_dir(&a).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name:?}");
        }
    }
    let trajectory = std::fs::read_to_string(tmp.path().join("simulate_a/trajectory.csv")).unwrap();
    assert_eq!(trajectory.lines().count(), 1 + 100 / 10 + 1);
    assert!(tmp.path().join("steady_a/profile.toml").exists());
}

#[test]
fn different_seeds_give_different_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for seed in [1, 2] {
        let cfg = write_config(tmp.path(), &format!("seed = {seed}\n[simulate]\nparticles = 20\nsteps = 50\n"));
        let out = tmp.path().join(format!("s{seed}"));
        assert_eq!(hypenergy(&["simulate"], Some(&cfg), &out).status.code(), Some(0));
        outputs.push(std::fs::read(out.join("final_state.csv")).unwrap());
    }
    assert_ne!(outputs[0], outputs[1]);
}

#[test]
fn missing_subcommand_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let run = hypenergy(&[], None, tmp.path());
    assert_eq!(run.status.code(), Some(2));
}

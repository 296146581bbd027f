//! End-to-end checks of the command-line surface: byte-identical seeded
//! reruns (also across worker counts), artifact headers, and the exit-code
//! contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rydsim"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rydsim-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn small_sweep_config(dir: &Path) -> PathBuf {
    let path = dir.join("sweep.toml");
    write(
        &path,
        r#"
seed = 3

[lattice]
kind = "square"
nx = 2
ny = 2
hopping_mhz = 1.0

[sweep]
u_start_mhz = 2.0
u_stop_mhz = 14.0
u_points = 4
"#,
    );
    path
}

#[test]
fn seeded_reruns_are_byte_identical() {
    let dir = tmp_dir("rerun");
    let config = small_sweep_config(&dir);
    for (out, jobs) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let status = bin()
            .args(["--config"])
            .arg(&config)
            .args(["--out"])
            .arg(dir.join(out))
            .args(["--jobs", jobs, "hubbard-sweep"])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = fs::read(dir.join("a/sweep.csv")).unwrap();
    let b = fs::read(dir.join("b/sweep.csv")).unwrap();
    let c = fs::read(dir.join("c/sweep.csv")).unwrap();
    assert_eq!(a, b, "reruns differ");
    assert_eq!(a, c, "worker count changed the bytes");
    println!("PASS criterion 8i: seeded CLI reruns are byte-identical (any --jobs)");
}

#[test]
fn artifacts_carry_config_hash_and_seed() {
    let dir = tmp_dir("header");
    let config = small_sweep_config(&dir);
    let status = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&dir)
        .args(["--seed", "9", "hubbard-sweep"])
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("# config_hash="), "header line: {first}");
    assert!(first.contains("seed=9"), "header line: {first}");
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tmp_dir("badcfg");
    let config = dir.join("bad.toml");
    write(&config, "this is not toml = = =");
    let status = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&dir)
        .arg("hubbard-sweep")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // a missing section is also a config error
    write(&config, "seed = 1\n");
    let status = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&dir)
        .arg("hubbard-sweep")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn guard_violations_exit_with_code_3() {
    let dir = tmp_dir("guard");
    let config = dir.join("guard.toml");
    // annealing at t = 1 MHz pushes the Rabi endpoint past the 2.5 MHz cap
    write(
        &config,
        r#"
seed = 1

[lattice]
kind = "square"
nx = 2
ny = 2
hopping_mhz = 1.0

[sweep]
u_start_mhz = 8.0
u_stop_mhz = 12.0
u_points = 2
"#,
    );
    let status = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&dir)
        .args(["--backend", "anneal", "hubbard-sweep"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn non_convergence_exits_with_code_4_but_writes_data() {
    let dir = tmp_dir("nonconv");
    let config = dir.join("nc.toml");
    // a single hard loop at the critical region cannot meet eta with k = 1
    write(
        &config,
        r#"
seed = 1

[lattice]
kind = "square"
nx = 2
ny = 2
hopping_mhz = 1.0

[ssmf]
k = 1
eta = 1e-9
m0 = 0.5
tau_max_us = 4.0
delta_start_mhz = 5.0
embed_evals = 2000

[sweep]
u_start_mhz = 10.0
u_stop_mhz = 12.0
u_points = 2
"#,
    );
    let status = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&dir)
        .arg("hubbard-sweep")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
    assert!(dir.join("sweep.csv").exists(), "data written despite the flag");
}

#[test]
fn oracle_command_is_self_consistent() {
    let dir = tmp_dir("oracle");
    let config = dir.join("oracle.toml");
    let ham = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/lih_1.5A.ham");
    write(&config, &format!("seed = 1\n\n[oracle]\nhamiltonian = \"{ham}\"\n"));
    let status = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&dir)
        .arg("oracle-ed")
        .status()
        .unwrap();
    assert!(status.success());
    let out: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("oracle.json")).unwrap()).unwrap();
    assert_eq!(out["terms"], 118);
    assert!(out["self_consistency_residue"].as_f64().unwrap() < 1e-10);
}

#[test]
fn derand_plan_has_order_twenty_bases_on_lih() {
    let dir = tmp_dir("plan");
    let config = dir.join("plan.toml");
    let ham = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/lih_1.5A.ham");
    write(
        &config,
        &format!("seed = 1\n\n[derand]\nhamiltonian = \"{ham}\"\neps_target = 0.05\n"),
    );
    let output = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&dir)
        .arg("derand-plan")
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = fs::read_to_string(dir.join("plan.txt")).unwrap();
    let distinct = text.lines().filter(|l| l.contains(" x ")).count();
    // of the order of a few tens of distinct bases
    assert!((10..=80).contains(&distinct), "distinct bases: {distinct}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("0 uncovered terms"), "{stdout}");
}

use std::process::{Command, Output};

use potmmcp::harness::{EnvConfig, RunConfig};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_potmmcp")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn example_config_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    for (env, method) in [
        ("pursuit-evasion", "potmmcp"),
        ("predator-prey", "ipomcp-pf-random"),
        ("driving", "metapolicy"),
        ("tiny:tiger", "best-response"),
    ] {
        let out = cli(&["example-config", "--env", env, "--method", method, "--simulations", "300"]);
        assert!(out.status.success());
        let path = dir.path().join("c.json");
        std::fs::write(&path, &out.stdout).unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.method(), method);
        let v = cli(&["validate-config", "--config", path.to_str().unwrap()]);
        assert!(v.status.success());
        assert_eq!(stdout(&v).trim(), format!("ok {} {} {}", method, c.env.id(), c.hash()));
    }
}

#[test]
fn errors_exit_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = cli(&["validate-config", "--config", "/nonexistent/c.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let mut c = RunConfig::potmmcp(EnvConfig::Tiny { instance: "coord".into() }, 10);
    c.episodes = 0;
    let path = dir.path().join("bad.json");
    c.save(&path).unwrap();
    let bad = cli(&["validate-config", "-c", path.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("episodes"));

    let unknown = cli(&["example-config", "--env", "chess"]);
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn oracle_check_needs_a_tiny_game() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pe.json");
    let mut c = RunConfig::potmmcp(EnvConfig::PursuitEvasion { layout: "corridors-8x8".into() }, 10);
    c.episodes_per_cell = 2;
    c.value_episodes = 2;
    c.save(&path).unwrap();
    let out = cli(&["oracle-check", "-c", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tiny"));
}

#[test]
fn overrides_apply_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let mut c = RunConfig::potmmcp(EnvConfig::Tiny { instance: "tiger".into() }, 1000);
    c.episodes_per_cell = 50;
    c.save(&path).unwrap();
    let out_dir = dir.path().join("out");
    let out = cli(&[
        "evaluate",
        "-c",
        path.to_str().unwrap(),
        "--episodes",
        "3",
        "--budget",
        "40",
        "--seed",
        "9",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("3 episodes"));
    let steps = std::fs::read_to_string(out_dir.join("potmmcp_tiny-tiger_steps.csv")).unwrap();
    let header: Vec<&str> = steps.lines().next().unwrap().split(',').collect();
    let sims = header.iter().position(|h| *h == "simulations").unwrap();
    for line in steps.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], "9");
        assert_eq!(cols[sims], "40");
    }
}

#[test]
fn payoffs_writes_table_and_meta_policy() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    RunConfig::potmmcp(EnvConfig::Tiny { instance: "coord".into() }, 10).save(&path).unwrap();
    let out = cli(&[
        "payoffs",
        "-c",
        path.to_str().unwrap(),
        "--episodes-per-cell",
        "30",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("payoffs_tiny-coord.json")).unwrap()).unwrap();
    assert_eq!(table["episodes_per_cell"], 30);
    assert!(dir.path().join("meta_tiny-coord_tau0.25.json").exists());
}

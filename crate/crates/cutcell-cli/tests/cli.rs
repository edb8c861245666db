use std::path::PathBuf;
use std::process::{Command, Output};

fn cutcell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutcell")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cutcell-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn list_names_every_case() {
    let o = cutcell(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["jc1_star", "jc2_flower", "robin_disk", "robin_sphere_3d", "neumann_conservation_3d", "jump_1d", "circle_2phase", "brown_sphere_3d"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn run_prints_a_table_and_writes_csv() {
    let dir = scratch("run");
    let o = cutcell(&["run", "jump_1d", "--levels", "3", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("e_all") && text.contains("fit"));
    let rows = text.lines().filter(|l| l.trim_start().starts_with(|c: char| c.is_ascii_digit())).count();
    let tables = text.lines().filter(|l| l.trim_start().starts_with("fit")).count();
    assert!(tables >= 1);
    assert_eq!(rows, 3 * tables);
    assert!(dir.join("errors.csv").exists());
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn flags_override_the_config_file() {
    let dir = scratch("cfg");
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "levels = 4\n[time]\ntheta = 0.5\n").unwrap();
    let o = cutcell(&["run", "jump_1d", "--config", cfg.to_str().unwrap(), "--levels", "2", "--theta", "1.0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stats = String::from_utf8_lossy(&o.stderr);
    assert_eq!(stats.lines().filter(|l| l.starts_with("N =")).count(), 2);
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn bad_input_exits_with_status_2() {
    let o = cutcell(&["run", "no_such_case"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown case"));

    let dir = scratch("bad");
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "[bc.west]\nkind = \"robin\"\n").unwrap();
    let o = cutcell(&["run", "robin_disk", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = cutcell(&["run", "robin_disk", "--config", dir.join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn check_reports_every_reference() {
    let o = cutcell(&["check"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().count() > 20);
    assert!(!text.contains("FAILED"));
}

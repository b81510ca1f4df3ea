use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONCENTRIC: &str = "\
[outer]
r0 = 1
[core]
r0 = 0.5
[physics]
sigma_c = 2
[mesh]
h = 0.1
";

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.ini");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_twophase"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn artifact(dir: &Path, prefix: &str, ext: &str) -> PathBuf {
    let mut hits: Vec<_> = fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            name.starts_with(prefix) && name.ends_with(ext)
        })
        .collect();
    assert_eq!(hits.len(), 1, "expected one {prefix}*{ext}");
    hits.pop().unwrap()
}

#[test]
fn solve_reports_the_flux_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve"], CONCENTRIC);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let c: f64 = stdout.split("c = ").nth(1).and_then(|t| t.split(',').next()).unwrap().parse().unwrap();
    assert!((c + 0.5).abs() < 1e-6, "{stdout}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(artifact(dir.path(), "solve-", ".json")).unwrap()).unwrap();
    assert!((json["c_hat"].as_f64().unwrap() + 0.5).abs() < 1e-6);
    let csv = fs::read_to_string(artifact(dir.path(), "solve-", ".csv")).unwrap();
    assert!(csv.starts_with("node_id,x,y,value\n"));
}

#[test]
fn unknown_key_exits_with_code_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve"], &format!("{CONCENTRIC}[experiment]\nbogus_knob = 1\n"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_knob"));

    let out = run(dir.path(), &["solve", "--set", "mesh.size=0.1"], CONCENTRIC);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("size"));
}

#[test]
fn invalid_geometry_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve", "--set", "core.r0=1.5"], CONCENTRIC);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(d.path(), &["theorem1", "--quiet"], CONCENTRIC);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    for ext in [".csv", ".json"] {
        let pa = artifact(a.path(), "theorem1-", ext);
        let pb = artifact(b.path(), "theorem1-", ext);
        assert_eq!(pa.file_name(), pb.file_name());
        assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
    }
}

#[test]
fn output_name_ignores_layout_and_output_block() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(a.path(), &["rigidity"], CONCENTRIC);
    let spaced = format!("# comment\n{}\n[output]\ndir = elsewhere\n", CONCENTRIC.replace(" = ", "   =   "));
    run(b.path(), &["rigidity"], &spaced);
    assert_eq!(
        artifact(a.path(), "rigidity-", ".json").file_name(),
        artifact(b.path(), "rigidity-", ".json").file_name()
    );
}

#[test]
fn theorem1_csv_has_one_row_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["theorem1", "--set", "experiment.k_max=6"], CONCENTRIC);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(artifact(dir.path(), "theorem1-", ".csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,lambda,d2T,bound"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn sweep_json_holds_one_record_per_direction() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["sweep"], CONCENTRIC);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(artifact(dir.path(), "sweep-", ".json")).unwrap()).unwrap();
    assert_eq!(json["reports"].as_array().unwrap().len(), 64);
    assert_eq!(json["has_tentacle"], false);
}

#[test]
fn verify_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify"], "[experiment]\ncriteria = 2 8\n");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 2, "{stdout}");

    let out = run(dir.path(), &["verify"], "[experiment]\ncriteria = 11\n");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn geometry_is_required_for_solvers() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve"], "[mesh]\nh = 0.1\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[outer]"));
}

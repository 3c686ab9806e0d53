use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_triod-lab"));
    c.env_remove("TRIOD_LAB_OUT");
    c
}

fn small_config(extra_flux: &str, connection: &str) -> String {
    format!(
        r#"{{
  "name": "small",
  "potential": {{ "family": "equilateral" }},
  "connection": {{ "samples": 401 {connection} }},
  "field": {{ "spacing": 0.4, "extent": 14.4, "max_steps": 20000, "tolerance": 1e-4, "rays": [90.0, 210.0, 330.0] }},
  "flux": {{ "radii": [40.0, 80.0, 160.0], "resolution": 0.5 {extra_flux} }},
  "young": {{ "annulus": [5.0, 13.0] }}
}}"#
    )
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.in.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn flux3d_without_relax_names_the_missing_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("", ""));
    let out = tmp.path().join("run");
    let o = run(&["connect"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["flux3d"], &cfg, &out);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("field.bin") && e.contains("flux3d"), "{e}");
}

#[test]
fn relax_without_connections_names_the_missing_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("", ""));
    let o = run(&["relax"], &cfg, &tmp.path().join("run"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("connection_01.csv"), "{}", stderr(&o));
}

#[test]
fn canonical_schedule_at_radius_100_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_config("", "").replace(
        r#""radii": [40.0, 80.0, 160.0], "resolution": 0.5"#,
        r#""radii": [100.0], "resolution": 0.5, "schedule": { "kind": "canonical" }"#,
    );
    let cfg = write_config(tmp.path(), &text);
    let o = run(&["flux3d"], &cfg, &tmp.path().join("run"));
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("sqrt(2) sin psi1 < sin psi2") && e.contains("R = 100"), "{e}");
}

#[test]
fn connection_from_a_well_to_itself_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("", r#", "pairs": [[1, 1]]"#));
    let o = run(&["connect"], &cfg, &tmp.path().join("run"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("invalid argument"), "{}", stderr(&o));
}

#[test]
fn unknown_config_keys_are_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config(r#", "resolutoin": 2"#, ""));
    let o = run(&["validate-potential"], &cfg, &tmp.path().join("run"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("resolutoin"), "{}", stderr(&o));
}

#[test]
fn reports_are_deterministic_and_never_overwritten() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("", ""));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = run(&["connect"], &cfg, d);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert_eq!(stdout.matches("sigma = 0.204").count(), 3, "{stdout}");
    }
    for f in ["connections.json", "connection_01.csv", "connection_20.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let o = run(&["connect"], &cfg, &a);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--force"), "{}", stderr(&o));
    let o = run(&["connect", "--force"], &cfg, &a);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("", ""));
    let root = tmp.path().join("root");
    let o = bin()
        .env("TRIOD_LAB_OUT", &root)
        .args(["validate-potential", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let runs: Vec<_> = std::fs::read_dir(&root).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(runs.len(), 1);
    assert!(runs[0].file_name().unwrap().to_string_lossy().starts_with("small-"));
    assert!(runs[0].join("potential.json").exists());
}

#[test]
fn all_writes_a_summary_with_provenance_and_gates() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("", ""));
    let out = tmp.path().join("run");
    let o = run(&["all"], &cfg, &out);
    let code = o.status.code();
    assert!(code == Some(0) || code == Some(2), "{}", stderr(&o));
    let summary: Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    let hash = summary["provenance"]["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    let gates = summary["gates"].as_array().unwrap();
    assert!(gates.len() > 20);
    let all_pass = gates.iter().all(|g| g["pass"].as_bool().unwrap());
    assert_eq!(summary["pass"].as_bool().unwrap(), all_pass);
    assert_eq!(code == Some(0), all_pass);
    for f in [
        "potential.json",
        "connections.json",
        "field.bin",
        "field.json",
        "relax.json",
        "stress.csv",
        "flux2d.json",
        "flux3d.json",
        "angles.json",
        "angles.csv",
        "summary.csv",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let angles: Value = serde_json::from_slice(&std::fs::read(out.join("angles.json")).unwrap()).unwrap();
    for a in angles["angles_deg"].as_array().unwrap() {
        assert!((a.as_f64().unwrap() - 120.0).abs() < 5.0, "{angles}");
    }
    let relax: Value = serde_json::from_slice(&std::fs::read(out.join("relax.json")).unwrap()).unwrap();
    assert_eq!(relax["provenance"]["config_hash"].as_str().unwrap(), hash);
}

use std::path::Path;
use std::process::Command;

fn photonlab(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_photonlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{
    "sources": {"kind": "independent",
                "a": {"kind": "poissonian", "mean": 40},
                "b": {"kind": "poissonian", "mean": 40}},
    "detectors": [{"r_aa": 0.3, "r_bb": 0.2}, {"r_aa": 0.2, "r_bb": 0.3, "theta": 2.2}],
    "engine": {"kind": "phase"}
}"#;

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = photonlab(&["figure", "3"], d.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let x = std::fs::read(a.path().join("fig3_conditional.csv")).unwrap();
    let y = std::fs::read(b.path().join("fig3_conditional.csv")).unwrap();
    assert_eq!(x, y);
    assert!(x.starts_with(b"n2,probability\n"));
}

#[test]
fn sidecar_records_the_run() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let o = photonlab(&["--config", &cfg, "conditional", "--fix", "n1=20"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let j: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("conditional.json")).unwrap()).unwrap();
    assert_eq!(j["engine"], "phase");
    assert_eq!(j["degraded"], false);
    assert!(j["tail_mass"].as_f64().unwrap() < 1e-9);
    assert!((j["conditional_sum"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(j["files"][0], "conditional.csv");
}

#[test]
fn seeded_samples_repeat() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let run = |seed: &str| {
        let o = photonlab(&["--config", &cfg, "--seed", seed, "sample", "--count", "50"], d.path());
        assert!(o.status.success());
        std::fs::read(d.path().join("sample.csv")).unwrap()
    };
    assert_eq!(run("9"), run("9"));
    assert_ne!(run("9"), run("10"));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let bad_key = write_config(d.path(), &SMALL.replace("\"theta\": 2.2", "\"theta\": 2.2, \"gain\": 1"));
    assert_eq!(photonlab(&["--config", &bad_key, "joint"], d.path()).status.code(), Some(2));
    let unphysical = write_config(d.path(), &SMALL.replace("\"r_aa\": 0.3", "\"r_aa\": 0.9"));
    assert_eq!(photonlab(&["--config", &unphysical, "joint"], d.path()).status.code(), Some(4));
    assert_eq!(photonlab(&["figure", "5"], d.path()).status.code(), Some(2));
    assert_eq!(photonlab(&["marginal", "--axis", "n9"], d.path()).status.code(), Some(2));
}

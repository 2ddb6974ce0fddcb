use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pwlnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwlnet")).args(args).output().expect("run pwlnet")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn demo(fixture: &str, dir: &Path) -> Value {
    let o = pwlnet(&["demo", fixture, "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    stdout_json(&o)
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn demo_architectures() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(demo("fig9", dir.path())["architecture"], "2(1)4(1)6(1)9(1)1'(1)");
    assert_eq!(demo("fig2", dir.path())["architecture"], "2(1)6(1)1'(1)");
    let dec = demo("decoder", dir.path());
    assert!(dec["architecture"].as_str().unwrap().ends_with("9'(1)"));
    for f in ["fig2", "fig9", "decoder"] {
        assert!(dir.path().join(format!("{f}_report.json")).exists());
    }
}

#[test]
fn synth_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    demo("fig2", dir.path());
    let o = pwlnet(&["synth3", "--pwl", &p(dir.path(), "fig2_pwl.json"), "--out", &p(dir.path(), "n.json"), "--report", &p(dir.path(), "r.json")]);
    assert_eq!(code(&o), 0);
    let o = pwlnet(&["verify", "--net", &p(dir.path(), "n.json"), "--pwl", &p(dir.path(), "fig2_pwl.json"), "--report", &p(dir.path(), "r.json")]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["points"].as_array().unwrap().len(), 6);
}

#[test]
fn perturbed_weight_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    demo("fig9", dir.path());
    let path = dir.path().join("fig9_net.json");
    let mut net: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let last = net["layers"].as_array().unwrap().len() - 1;
    let b = &mut net["layers"][last]["biases"][0];
    *b = Value::from(b.as_f64().unwrap() + 1e-3);
    std::fs::write(&path, serde_json::to_string(&net).unwrap()).unwrap();
    let o = pwlnet(&["verify", "--net", &p(dir.path(), "fig9_net.json"), "--pwl", &p(dir.path(), "fig9_pwl.json")]);
    assert_eq!(code(&o), 1);
    let o = pwlnet(&["verify", "--net", &p(dir.path(), "fig9_net.json"), "--pwl", &p(dir.path(), "fig9_pwl.json"), "--report", &p(dir.path(), "fig9_report.json")]);
    assert_eq!(code(&o), 1);
}

#[test]
fn widened_net_verifies() {
    let dir = tempfile::tempdir().unwrap();
    demo("fig9", dir.path());
    let o = pwlnet(&[
        "widen",
        "--net",
        &p(dir.path(), "fig9_net.json"),
        "--report",
        &p(dir.path(), "fig9_report.json"),
        "--widths",
        "12",
        "--out",
        &p(dir.path(), "w.json"),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["architecture"], "2(1)12(3)1'(1)");
    let o = pwlnet(&["verify", "--net", &p(dir.path(), "w.json"), "--pwl", &p(dir.path(), "fig9_pwl.json")]);
    assert_eq!(code(&o), 0);
    // narrower than the existing layers
    let o = pwlnet(&[
        "widen",
        "--net",
        &p(dir.path(), "fig9_net.json"),
        "--report",
        &p(dir.path(), "fig9_report.json"),
        "--widths",
        "3",
        "--out",
        &p(dir.path(), "w2.json"),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.json"), "not json").unwrap();
    let o = pwlnet(&["verify", "--net", &p(dir.path(), "g.json"), "--pwl", &p(dir.path(), "g.json")]);
    assert_eq!(code(&o), 2);
    let o = pwlnet(&["verify", "--net", &p(dir.path(), "missing.json"), "--pwl", &p(dir.path(), "g.json")]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&pwlnet(&["demo", "fig3"])), 2);
    assert_eq!(code(&pwlnet(&["rank-prob", "--n", "3", "--m", "0", "--trials", "10"])), 2);
}

#[test]
fn deterministic_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        demo("fig5", d);
    }
    for f in ["fig5_net.json", "fig5_pwl.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let r1 = pwlnet(&["--seed", "3", "rank-prob", "--n", "3", "--m", "3", "--trials", "500"]);
    let r2 = pwlnet(&["--seed", "3", "rank-prob", "--n", "3", "--m", "3", "--trials", "500", "--sequential"]);
    assert_eq!(r1.stdout, r2.stdout);
}

#[test]
fn count_regions_with_csv() {
    let dir = tempfile::tempdir().unwrap();
    let arr = r#"{"dim":2,"hyperplanes":[{"w":[1,0],"b":0},{"w":[0,1],"b":0},{"w":[1,1],"b":-1}]}"#;
    std::fs::write(dir.path().join("a.json"), arr).unwrap();
    let o = pwlnet(&["count-regions", "--arrangement", &p(dir.path(), "a.json"), "--enumerate", "--csv", &p(dir.path(), "r.csv")]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["planar_count"], 7);
    assert_eq!(v["enumerated_count"], 7);
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn order_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.json"), "[[0,0],[1,0],[0,1],[1,1]]").unwrap();
    let o = pwlnet(&["order", "--points", &p(dir.path(), "p.json")]);
    assert_eq!(code(&o), 0);
    let mut seen: Vec<u64> = stdout_json(&o)["order"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    seen.sort();
    assert_eq!(seen, vec![0, 1, 2, 3]);

    demo("fig2", dir.path());
    let o = pwlnet(&["eval", "--net", &p(dir.path(), "fig2_net.json"), "--points", &p(dir.path(), "p.json")]);
    assert_eq!(code(&o), 0);
    // (0,0) is a training point with target 0.5
    let y = stdout_json(&o)[0][0].as_f64().unwrap();
    assert!((y - 0.5).abs() < 1e-8);
}

#[test]
fn classifier_and_multi_flags() {
    let dir = tempfile::tempdir().unwrap();
    demo("fig9", dir.path());
    let o = pwlnet(&["synth3", "--classify", "--pwl", &p(dir.path(), "fig9_pwl.json"), "--out", &p(dir.path(), "c.json")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout_json(&o)["architecture"].as_str().unwrap().ends_with("3(1)"));
    demo("decoder", dir.path());
    let o = pwlnet(&["synth3", "--pwl", &p(dir.path(), "decoder_pwl.json"), "--out", &p(dir.path(), "m.json")]);
    assert_eq!(code(&o), 2);
    let o = pwlnet(&["synth3", "--multi", "--pwl", &p(dir.path(), "decoder_pwl.json"), "--out", &p(dir.path(), "m.json")]);
    assert_eq!(code(&o), 0);
}

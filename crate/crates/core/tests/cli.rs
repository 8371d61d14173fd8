mod common;

use std::path::Path;

use fredholm::cli::{run, Outcome};
use serde_json::Value;

fn inv(args: &[&str]) -> Outcome {
    run(std::iter::once("inv").chain(args.iter().copied()))
}

fn json(out: &Outcome) -> Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", out.stdout))
}

fn gallery(dir: &Path) -> impl Fn(&str) -> String + '_ {
    let out = inv(&["examples", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    move |name| dir.join(format!("{name}.toml")).display().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn worked_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let ex = gallery(dir.path());

    let d = json(&inv(&["degree", &ex("f3")]));
    assert_eq!((d["abs_degree"].clone(), d["deg2"].clone()), (3.into(), 1.into()));

    let out = inv(&["classify", &ex("f0_id"), &ex("f1_sq")]);
    assert_eq!(out.code, 0);
    let c = json(&out);
    assert_eq!(c["verdict"], "inequivalent");
    assert_eq!(c["difference"]["invariant"], "deg2");
    assert_eq!((c["difference"]["left"].clone(), c["difference"]["right"].clone()), ("1".into(), "0".into()));

    assert_eq!(json(&inv(&["index", &ex("taut")]))["index"], 0);
}

#[test]
fn orientation_reports() {
    let dir = tempfile::tempdir().unwrap();
    let ex = gallery(dir.path());
    let o = json(&inv(&["orient", &ex("taut")]));
    assert_eq!(o["orientation_signature"], serde_json::json!([1]));
    assert_eq!(o["loops"][0]["crossings"], 1);

    let d = inv(&["degree", &ex("taut")]);
    assert_eq!(d.code, 0);
    assert_eq!(json(&d)["abs_degree"], Value::Null);

    let path = write(
        dir.path(),
        "path.json",
        r#"{"samples": [{"t": 0, "op": {"a": 1, "b": 1, "head": [[-1]]}}, {"t": 1, "op": {"a": 1, "b": 1, "head": [[2]]}}]}"#,
    );
    let p = json(&inv(&["orient", &path]));
    assert_eq!((p["parity"].clone(), p["crossings"].clone()), (1.into(), 1.into()));
    let t = p["sign_changes"][0].as_f64().unwrap();
    assert!((t - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn cobordism_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", r#"{"points": [[0], [1], [2]], "parity": [[0, 1, 1], [0, 2, 0], [1, 2, 1]]}"#);
    let b = write(dir.path(), "b.json", r#"{"points": [[5]]}"#);
    let v = json(&inv(&["cobordism", &a, &b, "--oracle"]));
    assert_eq!(v["cobordant"], true);
    assert_eq!(v["agree"], true);
}

#[test]
fn extend_and_properize() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "problem.toml", common::EXT_QUADRATIC);
    let fbar = dir.path().join("fbar.json");
    let out = inv(&["extend", &problem, "--out", fbar.to_str().unwrap(), "--verify", "samples=200"]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    let r = json(&out);
    assert_eq!(r["passed"], true);
    assert_eq!(r["conditions"].as_array().unwrap().len(), 6);
    let table: Value = serde_json::from_str(&std::fs::read_to_string(&fbar).unwrap()).unwrap();
    assert_eq!(table["samples"].as_array().unwrap().len(), 81);

    let sphere = write(dir.path(), "sphere.toml", common::SPHERE_CIRCLE);
    let p = json(&inv(&["properize", &sphere]));
    assert_eq!((p["index_f"].clone(), p["index_g"].clone()), (1.into(), 0.into()));
    assert_eq!(p["passed"], true);

    let bad = write(dir.path(), "bad.toml", &common::SPHERE_CIRCLE.replace("cos(x1)\", \"sin(x1)", "2*cos(x1)\", \"sin(x1)"));
    let out = inv(&["properize", &bad]);
    assert_eq!(out.code, 2);
    assert_eq!(json(&out)["error"], "NotSphereValued");
}

#[test]
fn input_errors_exit_one_and_name_the_rule() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "broken.toml", "[manifold]\ndim = 1\nbox = [[-1, 1]]\n[map]\ncomponents = [\"x1 +\"]\n");
    let out = inv(&["degree", &broken]);
    assert_eq!(out.code, 1);
    assert_eq!(json(&out)["error"], "SyntaxError");
    assert!(!out.stderr.is_empty());

    let out = inv(&["classify", &broken, &broken, "--mode", "sideways"]);
    assert_eq!(out.code, 1);
    assert_eq!(json(&out)["error"], "Usage");
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let ex = gallery(dir.path());
    for args in [["classify", &ex("f2"), &ex("fm2")], ["classify", &ex("f1"), &ex("f3")]] {
        let a = inv(&["--seed", "3", args[0], &args[1], &args[2]]);
        let b = inv(&["--seed", "3", args[0], &args[1], &args[2]]);
        assert_eq!(a.stdout, b.stdout);
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
name = "small"
model = "effective"
engine = "schrodinger"
cutoff = 30

[system]
Omega = 100.0
g_ratio = 0.5

[protocol]
kind = "kick"
t_end = 2.0
alpha = 1.0

[integrator]
sample_dt = 0.1

[outputs]
husimi = [1.0]
husimi_resolution = 11
"#;

fn rabisq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rabisq")).args(args).output().expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    rabisq(&args)
}

#[test]
fn run_writes_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), "s.toml", SMALL);
    let out = dir.path().join("out");
    let o = run(&sc, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let bundle = out.join("small");
    let csv = fs::read_to_string(bundle.join("timeseries.csv")).unwrap();
    assert!(csv.starts_with("t,meanX,meanP,varX,varP,covXP,sigma22,photon_number\n"));
    assert_eq!(csv.lines().count(), 22);
    assert!(bundle.join("husimi_t1.csv").exists());
    assert!(bundle.join("husimi_t1.json").exists());

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(bundle.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["model"], "effective");
    assert_eq!(summary["samples"], 21);
    assert!(summary["convention"].as_str().unwrap().contains("anti-squeezed"));
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), "s.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&sc, &a, &[]).status.success());
    assert!(run(&sc, &b, &[]).status.success());
    for f in ["timeseries.csv", "husimi_t1.csv"] {
        let x = fs::read(a.join("small").join(f)).unwrap();
        let y = fs::read(b.join("small").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn compare_of_identical_files_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), "s.toml", SMALL);
    let out = dir.path().join("out");
    assert!(run(&sc, &out, &[]).status.success());
    let ts = out.join("small").join("timeseries.csv");
    let o = rabisq(&["compare", ts.to_str().unwrap(), ts.to_str().unwrap()]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["meanX", "meanP", "varX", "varP"] {
        assert_eq!(r[key]["max"], 0.0, "{key}");
    }
}

#[test]
fn sweep_writes_one_bundle_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), "s.toml", SMALL);
    let out = dir.path().join("out");
    let o = run(&sc, &out, &["--sweep", "g_ratio=0.3,0.6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let root = out.join("small");
    assert!(root.join("sweep.json").exists());
    let mut var_x = Vec::new();
    for point in ["g_ratio=0.3", "g_ratio=0.6"] {
        let s: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(root.join(point).join("summary.json")).unwrap()).unwrap();
        var_x.push(s["derived"]["expected_var_x"].as_f64().unwrap());
    }
    assert!(var_x[1] > var_x[0]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&missing, &out, &[]).status.code(), Some(1));

    let bad = write_scenario(dir.path(), "bad.toml", &SMALL.replace(r#"kind = "kick""#, r#"kind = "nope""#));
    let o = run(&bad, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("protocol.kind"));

    let starved = write_scenario(
        dir.path(),
        "starved.toml",
        &SMALL.replace("sample_dt = 0.1", "sample_dt = 0.1\nmax_steps = 3"),
    );
    assert_eq!(run(&starved, &out, &[]).status.code(), Some(3));
}

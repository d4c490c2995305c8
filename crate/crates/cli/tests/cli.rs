use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_loewner-lab"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"))
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(cfg).arg("--out").arg(out).args(extra).output().unwrap()
}

fn artifact(out: &Path, ext: &str) -> PathBuf {
    std::fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|x| x == ext))
        .unwrap()
}

#[test]
fn zero_driver_trace_matches_closed_form() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&config("trace"), out.path(), &["--strict"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(artifact(out.path(), "csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# experiment=trace "));
    assert_eq!(lines.next().unwrap(), "t,re,im,converged,level,gap");
    let mut rows = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        let t: f64 = f[0].parse().unwrap();
        let re: f64 = f[1].parse().unwrap();
        let im: f64 = f[2].parse().unwrap();
        assert!(re.abs() < 1e-3 && (im - 2.0 * t.sqrt()).abs() < 1e-3, "{l}");
        assert_eq!(f[3], "true");
        rows += 1;
    }
    assert!(rows > 10);
    assert!(!csv.contains('\r'));
}

#[test]
fn exit_codes_follow_outcome() {
    let out = tempfile::tempdir().unwrap();
    let bad = run(&config("verify-key1-bad-kappa"), out.path(), &[]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("kappa must be < 2"));

    let cfg = out.path().join("cfg.json");
    std::fs::write(&cfg, r#"{ "experiment": "represent", "corpus": ["linear_1"], "ts": [1.0], "ys": [0.1], "slack": 1e-12 }"#)
        .unwrap();
    let fail = run(&cfg, &out.path().join("o"), &[]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("FAIL identity"));

    std::fs::write(&cfg, r#"{ "experiment": "represent", "bogus": 1 }"#).unwrap();
    assert_eq!(run(&cfg, &out.path().join("o"), &[]).status.code(), Some(2));
}

#[test]
fn seed_offset_changes_output_and_is_recorded() {
    let out = tempfile::tempdir().unwrap();
    let a = out.path().join("a");
    let b = out.path().join("b");
    assert_eq!(run(&config("gen"), &a, &[]).status.code(), Some(0));
    assert_eq!(run(&config("gen"), &b, &["--seed-offset", "5"]).status.code(), Some(0));
    let (ca, cb) = (std::fs::read_to_string(artifact(&a, "csv")).unwrap(), std::fs::read_to_string(artifact(&b, "csv")).unwrap());
    assert_ne!(ca, cb);
    assert!(cb.lines().next().unwrap().ends_with("seed_offset=5"));
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(artifact(&b, "json")).unwrap()).unwrap();
    assert_eq!(meta["meta"]["seed_offset"], 5);
}

#[test]
fn corpus_command_writes_manifest() {
    let out = tempfile::tempdir().unwrap();
    let o = bin().arg("corpus").arg("--out").arg(out.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["entries"].as_array().unwrap().len(), 14);
    let zero = std::fs::read_to_string(out.path().join("zero.csv")).unwrap();
    assert!(zero.starts_with("t,u\n0,0\n"));
}

#[test]
fn schema_matches_config_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/experiment.schema.json");
    let schema: serde_json::Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    let props = schema["properties"].as_object().unwrap();
    let cfg = loewner_cli::ExperimentConfig::from_json(r#"{ "experiment": "gen" }"#).unwrap();
    let emitted = serde_json::to_value(&cfg).unwrap();
    let emitted = emitted.as_object().unwrap();
    let mut a: Vec<&String> = props.keys().collect();
    let mut b: Vec<&String> = emitted.keys().collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
    for (k, p) in props {
        if let Some(d) = p.get("default") {
            assert_eq!(d, &emitted[k], "default of `{k}`");
        }
        for (sub, sp) in p.get("properties").and_then(|v| v.as_object()).into_iter().flatten() {
            if let Some(d) = sp.get("default") {
                assert_eq!(d, &emitted[k][sub], "default of `{k}.{sub}`");
            }
        }
    }
}

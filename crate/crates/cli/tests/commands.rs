use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use purefilter_cli::FilterBundle;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_purefilter"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn generate(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(format!("{name}.json"));
    let mut args = vec!["generate", name, "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn corrupt(src: &Path, dst: &Path) {
    let mut bundle = FilterBundle::parse(&std::fs::read_to_string(src).unwrap()).unwrap();
    let re: f64 = bundle.entries[0].samples[3][0].parse().unwrap();
    bundle.entries[0].samples[3][0] = format!("{}", re + 0.1);
    std::fs::write(dst, bundle.emit()).unwrap();
}

fn report(dir: &Path, args: &[&str], name: &str) -> (i32, Value) {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    full.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let out = run(&full);
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    (out.status.code().unwrap(), json)
}

fn without_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings");
    v
}

#[test]
fn bundles_round_trip_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    for name in ["haar", "shannon", "constant", "bcm_journe", "journe"] {
        let path = generate(dir.path(), name, &[]);
        let text = std::fs::read_to_string(&path).unwrap();
        let again = FilterBundle::parse(&text).unwrap();
        assert_eq!(again.emit(), text, "{name}");
        let rebuilt = FilterBundle::from_filter(&again.to_filter().unwrap(), again.provenance.clone());
        assert_eq!(rebuilt.emit(), text, "{name}");
    }
}

#[test]
fn generated_bundles_have_the_documented_shape() {
    let dir = TempDir::new().unwrap();
    let haar = FilterBundle::parse(&std::fs::read_to_string(generate(dir.path(), "haar", &["--depth", "5"])).unwrap()).unwrap();
    assert_eq!(haar.entries.len(), 1);
    assert_eq!(haar.entries[0].samples.len(), 32);
    let constant = FilterBundle::parse(&std::fs::read_to_string(generate(dir.path(), "constant", &[])).unwrap()).unwrap();
    assert!(constant.entries[0].samples.iter().all(|[re, im]| re == "1" && im == "0"));
    let journe = FilterBundle::parse(&std::fs::read_to_string(generate(dir.path(), "journe", &["--delta", "0.1"])).unwrap()).unwrap();
    let p = journe.provenance.unwrap();
    assert_eq!(p.generator, "journe");
    assert_eq!(p.params["r"], "0.003125");
    assert_eq!(journe.entries.len(), 4);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let haar = generate(d, "haar", &[]);
    let constant = generate(d, "constant", &[]);
    let bcm = generate(d, "bcm_journe", &[]);
    let journe = generate(d, "journe", &[]);
    let broken = d.join("broken.json");
    corrupt(&haar, &broken);

    assert_eq!(report(d, &["verify", haar.to_str().unwrap()], "v1.json").0, 0);
    assert_eq!(report(d, &["verify", bcm.to_str().unwrap()], "v2.json").0, 0);
    let (code, rep) = report(d, &["verify", broken.to_str().unwrap()], "v3.json");
    assert_eq!(code, 1);
    let fe = &rep["sections"]["filter_equation"];
    assert_eq!(fe["passes"], false);
    assert_eq!(fe["witness"]["cell"], 3);
    assert!(rep["outcome"]["summary"].as_str().unwrap().contains("cell 3"));

    assert_eq!(report(d, &["classify", haar.to_str().unwrap()], "c1.json").0, 0);
    assert_eq!(report(d, &["classify", broken.to_str().unwrap()], "c2.json").0, 1);
    let (code, rep) = report(d, &["classify", constant.to_str().unwrap()], "c3.json");
    assert_eq!(code, 3);
    let pair = &rep["sections"]["purity"]["eigenpairs"][0];
    assert_eq!(pair["lambda"], serde_json::json!(["1", "0"]));
    assert_eq!(pair["unit_norm_everywhere"], true);
    assert_eq!(rep["sections"]["intersection"]["status"], "nontrivial");
    let (code, rep) = report(d, &["classify", journe.to_str().unwrap()], "c4.json");
    assert_eq!(code, 0);
    assert_eq!(rep["sections"]["certificate"]["found"], true);
    assert_eq!(rep["sections"]["phase_variant"]["agrees"], true);
    assert!(rep["sections"]["journe_derivation"]["checks"].as_array().unwrap().iter().all(|c| c["holds"] == true));

    // a pure filter without any certificate at an absurd tolerance stays undecided
    let (code, rep) = report(d, &["classify", haar.to_str().unwrap(), "--tol-eig", "0.5"], "c5.json");
    assert!(code == 0 || code == 4);
    assert_eq!(rep["outcome"]["exit_code"], code);

    assert_eq!(run(&["generate", "daubechies"]).status.code(), Some(2));
    assert_eq!(run(&["generate", "journe", "--delta", "0.5"]).status.code(), Some(2));
    let out = run(&["generate", "journe", "--r", "1/10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2r < min(1/8, δ/8)"));
    std::fs::write(d.join("garbage.json"), "{ not json").unwrap();
    assert_eq!(run(&["verify", d.join("garbage.json").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["verify", d.join("missing.json").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn reports_are_identical_across_reruns_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for name in ["haar", "constant", "bcm_journe"] {
        let bundle = generate(d, name, &[]);
        let mut seen = Vec::new();
        for threads in ["1", "4", "4"] {
            let path = d.join(format!("{name}-{threads}-{}.json", seen.len()));
            let out = bin()
                .env("RAYON_NUM_THREADS", threads)
                .args(["classify", bundle.to_str().unwrap(), "--seed", "7", "--out", path.to_str().unwrap()])
                .output()
                .unwrap();
            let json: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
            assert_eq!(json["outcome"]["exit_code"], out.status.code().unwrap());
            seen.push(without_timings(json));
        }
        assert!(seen.windows(2).all(|w| w[0] == w[1]), "{name}");
    }
}

#[test]
fn spectrum_csv() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for (name, expected) in [("haar", std::f64::consts::FRAC_1_SQRT_2), ("constant", 1.0)] {
        let bundle = generate(d, name, &[]);
        let csv = d.join(format!("{name}.csv"));
        let out = run(&["spectrum", bundle.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let text = std::fs::read_to_string(&csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("lambda_re,lambda_im,abs_lambda,passes_eigen_test"));
        let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        assert!(!rows.is_empty());
        for row in &rows {
            assert!(row[2].parse::<f64>().unwrap() <= 1.0 + 1e-10);
        }
        assert!(rows.iter().any(|r| (r[2].parse::<f64>().unwrap() - expected).abs() < 1e-9), "{name}");
        if name == "constant" {
            assert!(rows.iter().any(|r| (r[0].parse::<f64>().unwrap() - 1.0).abs() < 1e-12 && r[3] == "true"));
        }
    }
}

#[test]
fn dimension_cap_env_is_honoured() {
    let dir = TempDir::new().unwrap();
    let bundle = generate(dir.path(), "haar", &[]);
    let out = bin()
        .env("PUREFILTER_DIMENSION_CAP", "4")
        .args(["classify", bundle.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

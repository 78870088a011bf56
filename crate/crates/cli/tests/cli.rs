use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gsm_core::inference::{batch_means_se, tail_estimate};
use gsm_core::numerics::RngStream;
use gsm_core::{GsmParams, PosteriorDraws};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gsm-tail"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn gsm-tail")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn sample_csv(dir: &Path, params: &GsmParams, n: usize, seed: u64) -> PathBuf {
    let y = params.sample(n, &mut RngStream::new(seed, 0)).unwrap();
    let mut text = String::from("value\n");
    for v in y.values() {
        text.push_str(&format!("{v}\n"));
    }
    write(dir, "data.csv", &text)
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|f| f.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn schema_check(schema: &str, value: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(schema);
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema:?}: {errors:?}");
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn without_duration(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("duration_secs");
    v
}

fn mixture() -> GsmParams {
    GsmParams::new(vec![0.5, 0.0, 0.3, 0.0, 0.0, 0.2], 0.8).unwrap()
}

#[test]
fn fit_writes_valid_outputs_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let data = sample_csv(tmp.path(), &mixture(), 100, 1);
    let cfg = write(tmp.path(), "fit.json", r#"{"J": 20, "iterations": 800, "burn_in": 200, "seed": 9}"#);
    schema_check("fit_config.schema.json", &json(&cfg));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = run(&["fit", p(&data), "--config", p(&cfg), "--out", p(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let draws = json(&a.join("draws.json"));
    assert_eq!(draws["theta"].as_array().unwrap().len(), 600);
    schema_check("draws.schema.json", &draws);
    schema_check("diagnostics.schema.json", &json(&a.join("diagnostics.json")));
    schema_check("manifest.schema.json", &json(&a.join("manifest.json")));
    for f in ["draws.json", "diagnostics.json", "density.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(
        without_duration(json(&a.join("manifest.json"))),
        without_duration(json(&b.join("manifest.json")))
    );
    let manifest = json(&a.join("manifest.json"));
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["omega"], 0.3);

    // --seed overrides the configuration
    let c = tmp.path().join("c");
    assert!(run(&["fit", p(&data), "--config", p(&cfg), "--out", p(&c), "--seed", "10"]).status.success());
    assert_ne!(fs::read(a.join("draws.json")).unwrap(), fs::read(c.join("draws.json")).unwrap());
}

#[test]
fn bad_data_and_config_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "fit.json", r#"{"J": 5, "iterations": 50, "burn_in": 10}"#);
    let bad = write(tmp.path(), "bad.csv", "value\n1\n2\n3\n4\n5\n-1\n2\n");
    let o = run(&["fit", p(&bad), "--config", p(&cfg), "--out", p(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":7:"));

    let text = write(tmp.path(), "text.csv", "1\n2\nabc\n");
    let o = run(&["fit", p(&text), "--config", p(&cfg), "--out", p(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":3:"));

    let good = write(tmp.path(), "good.csv", "1\n2\n3\n");
    for bad_cfg in [
        r#"{"J": 5, "unknown": 1}"#,
        r#"{"J": 0}"#,
        r#"{"J": 5, "alpha": 2}"#,
        r#"{"J": 5, "iterations": 10, "burn_in": 10}"#,
        r#"{"J": 5, "omega": 1.5}"#,
        "not json",
    ] {
        let c = write(tmp.path(), "c.json", bad_cfg);
        let o = run(&["fit", p(&good), "--config", p(&c), "--out", p(&tmp.path().join("x"))]);
        assert_eq!(o.status.code(), Some(3), "{bad_cfg}");
    }
    assert_eq!(run(&["fit"]).status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn tail_rows_and_transform() {
    let tmp = TempDir::new().unwrap();
    let data = sample_csv(tmp.path(), &mixture(), 80, 2);
    let cfg = write(
        tmp.path(),
        "fit.json",
        r#"{"J": 15, "iterations": 600, "burn_in": 100, "transform": "cube_root"}"#,
    );
    let fit = tmp.path().join("fit");
    assert!(run(&["fit", p(&data), "--config", p(&cfg), "--out", p(&fit)]).status.success());
    let draws_path = fit.join("draws.json");
    let out = tmp.path().join("tail");
    let o = run(&["tail", p(&draws_path), "--k", "0,1,8,27", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("tail.csv"));
    assert_eq!(header, ["k", "point", "ci_low", "ci_high"]);
    assert_eq!(rows[0], vec![0.0, 1.0, 1.0, 1.0]);
    for w in rows.windows(2) {
        assert!(w[1][1] <= w[0][1]);
    }
    // thresholds are mapped through the cube root recorded in the manifest
    let draws: PosteriorDraws = serde_json::from_str(&fs::read_to_string(&draws_path).unwrap()).unwrap();
    let direct = tail_estimate(&draws, 2.0, 0.95).unwrap();
    assert_eq!(rows[2][1], direct.point);
    assert_eq!(json(&out.join("manifest.json"))["transform"], "cube_root");

    let kf = write(tmp.path(), "k.txt", "k\n0.5\n3\n");
    let out2 = tmp.path().join("tail2");
    assert!(run(&["tail", p(&draws_path), "--k-file", p(&kf), "--out", p(&out2)]).status.success());
    assert_eq!(read_csv(&out2.join("tail.csv")).1.len(), 2);

    assert_eq!(run(&["tail", p(&draws_path), "--k=-1", "--out", p(&out)]).status.code(), Some(2));
    assert_eq!(run(&["tail", p(&draws_path), "--k", "1", "--out", p(&fit)]).status.code(), Some(3));
}

#[test]
fn tail_matches_conjugate_predictive() {
    let tmp = TempDir::new().unwrap();
    let data = sample_csv(tmp.path(), &GsmParams::new(vec![1.0], 0.5).unwrap(), 60, 3);
    let cfg = write(
        tmp.path(),
        "fit.json",
        r#"{"J": 1, "alpha": 2, "beta": 3.0, "iterations": 5000, "burn_in": 500, "seed": 1}"#,
    );
    let fit = tmp.path().join("fit");
    assert!(run(&["fit", p(&data), "--config", p(&cfg), "--out", p(&fit)]).status.success());
    let out = tmp.path().join("tail");
    assert!(run(&["tail", p(&fit.join("draws.json")), "--k", "4", "--out", p(&out)]).status.success());
    let point = read_csv(&out.join("tail.csv")).1[0][1];

    let draws: PosteriorDraws = serde_json::from_str(&fs::read_to_string(fit.join("draws.json")).unwrap()).unwrap();
    let n = 60.0;
    let (a, b) = (2.0 + n, 3.0 + draws.sum_y());
    let lomax = (b / (b + 4.0)).powf(a);
    let se = batch_means_se(&tail_estimate(&draws, 4.0, 0.95).unwrap().per_draw);
    assert!((point - lomax).abs() < 3.0 * se, "{point} vs {lomax} (se {se})");
}

#[test]
fn calibrate_prints_hyperparameters() {
    let tmp = TempDir::new().unwrap();
    let data = write(tmp.path(), "d.csv", "value\n1.5\n2.5\n4\n10\n");
    let o = run(&["calibrate", p(&data), "--J", "10", "--omega", "0.5"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    schema_check("hyperparams.schema.json", &v);
    assert_eq!(v["beta"].as_f64().unwrap(), 18.0);
    // θ̃ = 10 / 10 = 1, α = round(1 · 18)
    assert_eq!(v["alpha"], 18);
    assert_eq!(v["J"], 10);
    assert_eq!(run(&["calibrate", p(&data), "--J", "10", "--omega", "1"]).status.code(), Some(3));
}

#[test]
fn simulate_single_replicate() {
    let tmp = TempDir::new().unwrap();
    let generator = write(
        tmp.path(),
        "gen.json",
        r#"{"gsm": {"weights": [0, 0.7, 0, 0, 0, 0, 0, 0, 0, 0.2, 0, 0.1], "theta": 0.5}, "n": 500, "seed": 4, "power": 3}"#,
    );
    let exp = write(
        tmp.path(),
        "exp.json",
        r#"{"thresholds": [1000, 20000, 60000], "n_replicates": 1, "transform": "cube_root",
            "chain": {"iterations": 300, "burn_in": 100},
            "hyper_source": {"calibrate": {"J": 30, "omega": 0.3}}}"#,
    );
    schema_check("generator.schema.json", &json(&generator));
    schema_check("experiment_config.schema.json", &json(&exp));
    let out = tmp.path().join("sim");
    let args = ["simulate", "--generator", p(&generator), "--config", p(&exp), "--out", p(&out), "--jobs", "1"];
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("results.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,threshold,rel_mse_pct,rel_bias_pct,n_ok");
    assert_eq!(lines.len(), 1 + 4 * 3);
    let audit = fs::read_to_string(out.join("audit.csv")).unwrap();
    assert_eq!(audit.lines().next().unwrap(), "replicate,method,threshold,abs_err_method,abs_err_gsm");
    schema_check("manifest.schema.json", &json(&out.join("manifest.json")));

    let again = tmp.path().join("sim2");
    let mut args2 = args;
    args2[6] = p(&again);
    assert!(run(&args2).status.success());
    for f in ["results.csv", "audit.csv", "fits.json"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }

    let ln = write(tmp.path(), "ln.json", r#"{"lognormal": {"mu": 2, "sigma": 1}, "n": 300}"#);
    schema_check("generator.schema.json", &json(&ln));
    let o = run(&["simulate", "--generator", p(&ln), "--config", p(&exp), "--out", p(&tmp.path().join("ln"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let both = run(&["simulate", "--generator", p(&ln), "--population", p(&ln), "--config", p(&exp), "--out", p(&out)]);
    assert_eq!(both.status.code(), Some(3));
}

#[test]
fn diagnose_qq_has_one_row_per_observation() {
    let tmp = TempDir::new().unwrap();
    let data = sample_csv(tmp.path(), &mixture(), 50, 5);
    let cfg = write(tmp.path(), "fit.json", r#"{"J": 12, "iterations": 400, "burn_in": 100}"#);
    let fit = tmp.path().join("fit");
    assert!(run(&["fit", p(&data), "--config", p(&cfg), "--out", p(&fit)]).status.success());
    let out = tmp.path().join("diag");
    let o = run(&["diagnose", p(&fit.join("draws.json")), p(&data), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("qq.csv"));
    assert_eq!(header, ["y", "empirical_p", "model_p"]);
    assert_eq!(rows.len(), 50);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[1], (i + 1) as f64 / 51.0);
    }
    assert_eq!(read_csv(&out.join("weights.csv")).1.len(), 12);
    assert_eq!(read_csv(&out.join("moments.csv")).1.len(), 300);
    let occ: f64 = read_csv(&out.join("occupied.csv")).1.iter().map(|r| r[1]).sum();
    assert!((occ - 1.0).abs() < 1e-12);
    assert_eq!(read_csv(&out.join("density.csv")).1.len(), 200);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn scalemix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scalemix")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let o = scalemix(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn write_sites(path: &Path, coords: &[(f64, f64)]) {
    let mut s = String::from("label,x,y\n");
    for (i, (x, y)) in coords.iter().enumerate() {
        s.push_str(&format!("s{},{x},{y}\n", i + 1));
    }
    fs::write(path, s).unwrap();
}

fn four_sites(dir: &Path) -> String {
    let p = dir.join("sites.csv");
    write_sites(&p, &[(0.1, 0.2), (0.8, 0.3), (0.4, 0.9), (0.6, 0.6)]);
    p.to_str().unwrap().to_string()
}

#[test]
fn simulate_zero_rows_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let sites = four_sites(dir.path());
    let out = dir.path().join("x.csv");
    ok(&["simulate", "--sites", &sites, "--n", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(&out).unwrap(), "s1,s2,s3,s4\n");
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("x.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["n"], 0);
    assert_eq!(meta["psi"]["family"], "model2");
}

#[test]
fn simulate_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let sites = four_sites(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    for (p, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        ok(&["simulate", "--sites", &sites, "--n", "50", "--model", "student", "--seed", seed, "--out", p.to_str().unwrap()]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 51);
}

#[test]
fn simulate_then_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sites = four_sites(dir.path());
    let data = dir.path().join("x.csv");
    let common = ["--model", "gauss", "--fix", "smoothness=1", "--param", "range=0.5", "--seed", "3"];
    let mut args = vec!["simulate", "--sites", &sites, "--n", "600", "--out", data.to_str().unwrap()];
    args.extend(common);
    ok(&args);
    let fit = dir.path().join("fit.json");
    let mut args = vec!["fit", "--sites", &sites, "--data", data.to_str().unwrap(), "--out", fit.to_str().unwrap(), "--threshold", "0.9", "--starts", "1"];
    args.extend(common);
    ok(&args);
    let first = fs::read(&fit).unwrap();
    ok(&args);
    assert_eq!(first, fs::read(&fit).unwrap(), "fit output must be deterministic");
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let range = v["psi"]["params"][0]["value"].as_f64().unwrap();
    assert!((range - 0.5).abs() < 0.25, "range {range}");
    assert_eq!(v["n_free"], 1);
    assert!(v["loglik"].as_f64().unwrap().is_finite());
}

#[test]
fn fit_with_bootstrap_reports_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let sites = four_sites(dir.path());
    let data = dir.path().join("x.csv");
    let common = ["--model", "gauss", "--fix", "smoothness=1", "--seed", "1", "--starts", "1", "--threshold", "0.9"];
    let mut args = vec!["simulate", "--sites", &sites, "--n", "200", "--out", data.to_str().unwrap()];
    args.extend(common);
    ok(&args);
    let fit = dir.path().join("fit.json");
    let mut args = vec!["fit", "--sites", &sites, "--data", data.to_str().unwrap(), "--out", fit.to_str().unwrap(), "--bootstrap", "3", "--block-length", "10"];
    args.extend(common);
    ok(&args);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&fit).unwrap()).unwrap();
    let iv = v["intervals"].as_array().unwrap();
    assert_eq!(iv.len(), 2);
    assert!(iv[0]["lower"].as_f64().unwrap() <= iv[0]["upper"].as_f64().unwrap());
    let boot = dir.path().join("boot.json");
    let mut args = vec!["bootstrap", "--sites", &sites, "--data", data.to_str().unwrap(), "--out", boot.to_str().unwrap(), "--reps", "2", "--block-length", "200"];
    args.extend(common);
    ok(&args);
    let b: serde_json::Value = serde_json::from_str(&fs::read_to_string(&boot).unwrap()).unwrap();
    let iv = &b["intervals"][0];
    assert_eq!(iv["lower"], iv["upper"], "a single block reproduces the data");
}

#[test]
fn chi_writes_model_and_empirical_curves() {
    let dir = tempfile::tempdir().unwrap();
    let sites = four_sites(dir.path());
    let data = dir.path().join("x.csv");
    ok(&["simulate", "--sites", &sites, "--n", "500", "--out", data.to_str().unwrap()]);
    let out = dir.path().join("chi");
    let args = ["chi", "--sites", &sites, "--data", data.to_str().unwrap(), "--pair", "s1,s2", "--levels", "0.9,0.95", "--out-dir", out.to_str().unwrap()];
    ok(&args);
    for name in ["chi", "chibar", "cond_exceed"] {
        let text = fs::read_to_string(out.join(format!("{name}.csv"))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "u,value,lo,hi,estimator");
        assert_eq!(lines.len(), 5, "{name}: {text}");
        assert!(lines[1].ends_with("parametric") && lines[4].ends_with("empirical"));
    }
    let first = fs::read(out.join("chi.csv")).unwrap();
    ok(&args);
    assert_eq!(first, fs::read(out.join("chi.csv")).unwrap());
    let o = scalemix(&["chi", "--sites", &sites, "--pair", "s1,s9", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn condsim_maps_with_a_conditioning_site_on_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let sites = four_sites(dir.path());
    let values = dir.path().join("v.csv");
    fs::write(&values, "label,value\ns1,2.5\ns2,-0.5\n").unwrap();
    let grid = dir.path().join("grid.csv");
    write_sites(&grid, &[(0.1, 0.2), (0.5, 0.5), (0.9, 0.9)]);
    let out = dir.path().join("map.csv");
    let args = [
        "condsim", "--sites", &sites, "--values", values.to_str().unwrap(), "--grid", grid.to_str().unwrap(), "--n", "200", "--model", "gauss",
        "--out", out.to_str().unwrap(),
    ];
    ok(&args);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "label,x,y,q0.25,q0.75");
    assert_eq!(lines[1], "s1,0.1,0.2,2.5,2.5");
    for l in &lines[2..] {
        let f: Vec<f64> = l.split(',').skip(3).map(|s| s.parse().unwrap()).collect();
        assert!(f[0] <= f[1]);
    }
    let first = text.clone();
    ok(&args);
    assert_eq!(first, fs::read_to_string(&out).unwrap());
}

#[test]
fn study_one_replicate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study");
    let args = [
        "study", "--scenario", "figure1", "--d", "3", "--n", "200", "--reps", "1", "--envelope-reps", "10", "--starts", "1", "--max-iter", "30", "--seed",
        "7", "--out-dir", out.to_str().unwrap(),
    ];
    ok(&args);
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    assert!(table.starts_with("scenario,parameter,truth,bias_x100,sd_x100,rmse_x100"));
    let env = fs::read_to_string(out.join("envelopes.csv")).unwrap();
    ok(&args);
    assert_eq!(table, fs::read_to_string(out.join("table.csv")).unwrap());
    assert_eq!(env, fs::read_to_string(out.join("envelopes.csv")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sites = four_sites(dir.path());
    let out = dir.path().join("x.csv");
    let o = scalemix(&["simulate", "--sites", &sites, "--n", "5", "--threshold", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = scalemix(&["simulate", "--sites", "/nonexistent.csv", "--n", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = scalemix(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "seed = 1\nbogus = 3\n").unwrap();
    let o = scalemix(&["simulate", "--sites", &sites, "--n", "5", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    // two sites at the same place make Σ singular
    let dup = dir.path().join("dup.csv");
    write_sites(&dup, &[(0.0, 0.0), (0.0, 0.0)]);
    let o = scalemix(&["simulate", "--sites", dup.to_str().unwrap(), "--n", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stable-mce"))
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let st = bin().args(["simulate", "--family", "ou", "--n", "100", "--seed", "7", "-o"]).arg(p).status().unwrap();
        assert!(st.success());
    }
    let (x, y) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("x\n"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn estimate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let st = bin()
        .args(["simulate", "--family", "ou", "--xi", "1.8,1.25,1", "--n", "1000", "--seed", "11", "-o"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(st.success());
    let out = bin()
        .args(["estimate", "--family", "ou", "--m", "1", "--start", "1.5,0.5,1", "--free", "1,1,0", "--input"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let beta = v["xi_hat"]["beta"].as_f64().unwrap();
    let lambda = v["xi_hat"]["theta"][0].as_f64().unwrap();
    assert!(v["converged"].as_bool().unwrap());
    assert!((beta - 1.8).abs() < 3.0 * 0.0453, "beta {beta}");
    assert!((lambda - 1.25).abs() < 3.0 * 0.0764, "lambda {lambda}");
    assert_eq!(v["xi_hat"]["theta"][1].as_f64().unwrap(), 1.0);
}

#[test]
fn study_validation_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"family":"ou","xi0":[1.8,1,1],"n":[200],"reps":0}"#).unwrap();
    let st = bin().arg("mc-study").arg("--config").arg(&cfg).status().unwrap();
    assert_eq!(st.code(), Some(2));

    fs::write(&cfg, r#"{"family":"ou","xi0":[1.8,1,1],"n":[200],"reps":3,"m":1,"free":[true,true,false],"seed":4}"#).unwrap();
    let out = bin().arg("mc-study").arg("--config").arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("family,beta0,lambda0,sigma0,n,reps,param,abs_bias,std,failures"));
    assert!(lines.next().unwrap().starts_with("ou,1.8,1,1,200,3,beta,"));

    fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(bin().arg("mc-study").arg("--config").arg(&cfg).status().unwrap().code(), Some(2));
}

#[test]
fn unknown_family_exits_with_config_code() {
    let out = bin().args(["simulate", "--family", "brownian", "--n", "10"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("brownian"));
}

#[test]
fn cf_check_passes() {
    let out = bin().args(["cf-check", "--cases", "5"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(",ok")).count(), 6);
}

#[test]
fn clt_check_writes_pairs() {
    let out = bin().args(["clt-check", "--n", "500", "--reps", "50", "--workers", "2"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    let few = bin().args(["clt-check", "--n", "500", "--reps", "10"]).status().unwrap();
    assert_eq!(few.code(), Some(2));
}

#[test]
fn shipped_grids_match_generator() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/grids");
    for (file, args) in [
        ("ou.csv", vec!["--family", "ou"]),
        ("lfsm.csv", vec!["--family", "lfsm"]),
        ("gen-modulated-ou.csv", vec!["--family", "gen-modulated-ou"]),
        ("m1-n20-nu1.csv", vec!["--m", "1", "--nodes", "20", "--nu", "1"]),
    ] {
        let out = bin().arg("grid").args(&args).output().unwrap();
        assert!(out.status.success());
        assert_eq!(out.stdout, fs::read(format!("{dir}/{file}")).unwrap(), "{file}");
    }
}

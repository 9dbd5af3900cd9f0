use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn u2reg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_u2reg"))
        .args(args)
        .output()
        .expect("run u2reg")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn values(path: &str) -> Vec<f64> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn u2_of_one_is_one() {
    let d = TempDir::new().unwrap();
    let f = p(&d, "one.json");
    assert_eq!(code(&u2reg(&["synth", "--generator", "constant:1", "--N", "20", "--output", &f])), 0);
    let o = u2reg(&["u2", "--input", &f]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "1.0");
}

#[test]
fn synth_examples() {
    let d = TempDir::new().unwrap();
    let a = p(&d, "a.json");
    u2reg(&["synth", "--generator", "constant:0.5", "--N", "8", "--output", &a]);
    assert_eq!(values(&a), vec![0.5; 8]);
    u2reg(&["synth", "--generator", "interval", "--N", "4", "--output", &a]);
    assert_eq!(values(&a), vec![1.0, 1.0, 0.0, 0.0]);

    let x = u2reg(&["synth", "--generator", "uniform", "--N", "64", "--seed", "9"]);
    let y = u2reg(&["synth", "--generator", "uniform", "--N", "64", "--seed", "9"]);
    assert_eq!(x.stdout, y.stdout);
    let z = u2reg(&["synth", "--generator", "uniform", "--N", "64", "--seed", "10"]);
    assert_ne!(x.stdout, z.stdout);

    let bad = u2reg(&["synth", "--generator", "sawtooth", "--N", "4"]);
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("sawtooth"));
}

#[test]
fn input_errors_exit_two() {
    let d = TempDir::new().unwrap();
    let f = p(&d, "bad.json");
    std::fs::write(&f, "{\n  \"n\": 3,\n  \"m\": 6,\n  \"values\": [1, 2,\n").unwrap();
    let o = u2reg(&["u2", "--input", &f]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.json:5:0"), "{}", stderr(&o));

    // Schema violation: m below 2N.
    std::fs::write(&f, r#"{"n": 2, "m": 3, "values": [0.1, 0.2]}"#).unwrap();
    let o = u2reg(&["u2", "--input", &f]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.json: ") && stderr(&o).contains("below 2N"), "{}", stderr(&o));

    assert_eq!(code(&u2reg(&["nonsense"])), 2);
    assert_eq!(code(&u2reg(&["decompose", "--input", &f, "--growth", "poly:abc"])), 2);
    assert_eq!(code(&u2reg(&["u2", "--input", &p(&d, "missing.json")])), 2);
}

#[test]
fn decompose_verify_and_tamper() {
    let d = TempDir::new().unwrap();
    let f = p(&d, "f.json");
    let c = p(&d, "c.json");
    let c2 = p(&d, "c2.json");
    let csv = p(&d, "c.csv");
    u2reg(&["synth", "--generator", "0.5*uniform+0.5*cosine:5,64", "--N", "128", "--seed", "4", "--output", &f]);
    let o = u2reg(&["decompose", "--input", &f, "--epsilon", "0.25", "--growth", "poly:10,1", "--output", &c, "--csv", &csv]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    u2reg(&["decompose", "--input", &f, "--epsilon", "0.25", "--growth", "poly:10,1", "--output", &c2]);
    assert_eq!(std::fs::read(&c).unwrap(), std::fs::read(&c2).unwrap());

    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("n,f,f_str,f_sml,f_unf\n"));
    assert!(!table.contains('\r'));
    assert_eq!(table.lines().count(), 129);

    assert_eq!(code(&u2reg(&["verify", "--input", &c])), 0);

    let mut cert: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&c).unwrap()).unwrap();
    let v = cert["f_str"]["values"][7].as_f64().unwrap();
    cert["f_str"]["values"][7] = serde_json::json!(v + 0.05);
    let t = p(&d, "tampered.json");
    std::fs::write(&t, serde_json::to_string(&cert).unwrap()).unwrap();
    let o = u2reg(&["verify", "--input", &t]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("sum"), "{}", stderr(&o));

    // The certificate is for this f only.
    let g = p(&d, "g.json");
    u2reg(&["synth", "--generator", "uniform", "--N", "128", "--seed", "5", "--output", &g]);
    let o = u2reg(&["verify", "--input", &c, "--input", &g]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("shape"), "{}", stderr(&o));
}

#[test]
fn irrational_decomposition_roundtrip() {
    let d = TempDir::new().unwrap();
    let f = p(&d, "f.json");
    let c = p(&d, "c.json");
    u2reg(&["synth", "--generator", "0.3*uniform+0.7*residue:3,1", "--N", "256", "--seed", "1", "--output", &f]);
    let o = u2reg(&["decompose-irrational", "--input", &f, "--growth", "poly:1,0.5", "--output", &c]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = u2reg(&["verify", "--input", &c]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = u2reg(&["verify", "--input", &c, "--epsilon", "0.01"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn theta_commands() {
    let d = TempDir::new().unwrap();
    let out = p(&d, "dec.json");
    let o = u2reg(&["theta-decompose", "--theta", "1/3,7/1000003", "--N", "1000000", "--growth", "poly:10,1", "--output", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&u2reg(&["verify", "--input", &out])), 0);

    let theta = p(&d, "theta.json");
    std::fs::write(&theta, r#"{"dim": 1, "coords": [["5", "13"]]}"#).unwrap();
    assert_eq!(code(&u2reg(&["irrational-check", "--input", &theta, "--A", "2", "--N", "13"])), 0);
    let o = u2reg(&["irrational-check", "--theta", "1/3", "--A", "5", "--N", "100"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("counterexample"));
    let o = u2reg(&["irrational-check", "--theta", "123457/1000003,654321/1000003", "--A", "500", "--N", "1000000000", "--budget", "1000"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn count_sweep_csv() {
    let d = TempDir::new().unwrap();
    let out = p(&d, "sweep.csv");
    let o = u2reg(&["count", "--sweep", "A=25,50,100,200", "--N", "4096", "--seed", "7", "--tries", "2000", "--output", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(!text.contains('\r'));
    let mut rows = csv::Reader::from_path(Path::new(&out)).unwrap();
    assert_eq!(
        rows.headers().unwrap().iter().collect::<Vec<_>>(),
        ["A", "theta", "tries", "error", "bound"]
    );
    let mut found = 0;
    for r in rows.records() {
        let r = r.unwrap();
        if r[3].is_empty() {
            continue;
        }
        let (err, bound): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!(err <= bound);
        found += 1;
    }
    assert!(found >= 2);

    let o = u2reg(&["count", "--A", "25", "--N", "4096", "--q", "3", "--seed", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rep["progression"]["step"], 3);
}

use std::fs;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn girthlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_girthlab"))
        .args(args)
        .env_remove("GIRTHLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn graph_info() {
    let v = json(&girthlab(&["graph", "--family", "cycle", "--n", "6"]));
    assert_eq!(v["n"], 6);
    assert_eq!(v["d"], 2);
    assert_eq!(v["girth"], 6);
    let v = json(&girthlab(&["graph", "--graph", "lcf name=foster"]));
    assert_eq!((v["n"].as_u64(), v["girth"].as_u64()), (Some(90), Some(10)));
    let v = json(&girthlab(&["graph", "--family", "cayley", "--p", "5"]));
    assert_eq!((v["n"].as_u64(), v["d"].as_u64()), (Some(120), Some(4)));
}

#[test]
fn stieltjes_residual_is_small() {
    let v = json(&girthlab(&["verify", "stieltjes", "--d", "3", "--lambda", "0.3", "--mu", "0.5"]));
    assert!(v["residual"].as_f64().unwrap() < 1e-6);
    let v = json(&girthlab(&[
        "verify", "stieltjes", "--d", "4", "--lambda", "0.5+0.2i", "--mu", "0.4-0.1i",
    ]));
    assert!(v["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn exit_codes() {
    assert_eq!(girthlab(&["mc", "--config", "missing.cfg"]).status.code(), Some(2));
    assert_eq!(girthlab(&["nonsense"]).status.code(), Some(2));
    assert_eq!(girthlab(&["graph", "--graph", "wheel n=5"]).status.code(), Some(2));
    // out of domain
    assert_eq!(girthlab(&["kernel-grid", "--d", "2"]).status.code(), Some(1));
    assert_eq!(
        girthlab(&["verify", "stieltjes", "--d", "3", "--lambda", "1.2", "--mu", "0.1"]).status.code(),
        Some(1)
    );
    // gate violation: z^8 on a graph of girth 6
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gate.toml");
    fs::write(
        &cfg,
        "graph = \"lcf name=heawood\"\nsamples = 10\nsampler = { kind = \"permvec\" }\n[[functions]]\ncoeffs = [0,0,0,0,0,0,0,0,1]\n",
    )
    .unwrap();
    assert_eq!(girthlab(&["mc", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn sample_is_reproducible() {
    let args = ["sample", "--graph", "lcf name=heawood", "--seed", "7"];
    let a = girthlab(&args);
    let b = girthlab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 14 * 3);
    assert_ne!(girthlab(&["sample", "--graph", "lcf name=heawood", "--seed", "8"]).stdout, text.as_bytes());
}

#[test]
fn tfun_reports_t_and_m_eps() {
    let v = json(&girthlab(&[
        "tfun", "--graph", "cycle n=12", "--f", "coeffs=0,0,0,0,1", "--eps", "0.001", "--seed", "3",
    ]));
    let (t, m) = (v["t"].as_f64().unwrap(), v["m_eps"].as_f64().unwrap());
    assert!((t - m).abs() < 1e-3 * (1.0 + t.abs()));
    let v = json(&girthlab(&[
        "tfun", "--graph", "lcf name=foster", "--sampler", "permvec", "--f", "coeffs=0,1", "--squared",
    ]));
    assert_eq!(v["f"], "coeffs=0,0,1");
}

#[test]
fn alpha_table_feeds_hform() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("alpha.json");
    let out = girthlab(&["alpha", "--graph", "cycle n=12", "--imax", "6", "--out", table.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&girthlab(&[
        "hform", "--table", table.to_str().unwrap(), "--f", "coeffs=0,0,1", "--g", "coeffs=0,0,1",
    ]));
    assert!((v["h"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert_eq!(v["gated"], true);
    let tree = json(&girthlab(&["alpha", "--tree", "3", "--imax", "4"]));
    assert!((tree["values"][2][2].as_f64().unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn grids_have_expected_shape() {
    let out = girthlab(&["kernel-grid", "--d", "3", "--nx", "4", "--ny", "5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,beta"));
    assert_eq!(text.lines().count(), 21);
    let out = girthlab(&["density", "--d", "2", "--points", "10"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] > 0.0);
    }
}

#[test]
fn mc_writes_result_samples_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("campaign.toml");
    fs::write(
        &cfg,
        r#"
graph = "cycle n=40"
samples = 400
seed = 1
sampler = { kind = "antisym" }

[[functions]]
coeffs = [0, 0, 1]

[[functions]]
coeffs = [0, 1]
squared = true
"#,
    )
    .unwrap();
    let out = dir.path().join("result.json");
    let samples = dir.path().join("samples.csv");
    let run = |seed: &str| {
        girthlab(&[
            "mc",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--samples-csv",
            samples.to_str().unwrap(),
            "--seed",
            seed,
            "--threads",
            "2",
        ])
    };
    assert!(run("5").status.success());
    let first = fs::read(&out).unwrap();
    let result: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(result["config"]["seed"], 5);
    assert_eq!(result["functions"].as_array().unwrap().len(), 2);
    assert_eq!(fs::read_to_string(&samples).unwrap().lines().count(), 401);

    let manifest: Value =
        serde_json::from_slice(&fs::read(dir.path().join("result.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["threads"], 2);
    assert_eq!(manifest["config"]["resolved"]["samples"], 400);
    for file in manifest["outputs"].as_array().unwrap() {
        let bytes = fs::read(file["path"].as_str().unwrap()).unwrap();
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(file["sha256"], digest.as_str());
    }

    assert!(run("5").status.success());
    assert_eq!(fs::read(&out).unwrap(), first);
}

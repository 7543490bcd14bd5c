use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dprtf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dprtf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CONFIG: &str = r#"{
    "master_seed": 3,
    "rooms": [{"id": "r", "dimensions": [5.0, 7.0, 3.0], "array_center": [2.5, 3.0, 1.5],
               "rt60": [0.0], "distances": [1.0]}],
    "snr_db": ["inf"],
    "heads": [
        {"type": "sphere", "id": "a", "radius": 0.08},
        {"type": "sphere", "id": "b", "radius": 0.09},
        {"type": "sphere", "id": "c", "radius": 0.085}
    ],
    "splits": {
        "train": {"heads": ["a"], "count": 2},
        "val": {"heads": ["c"], "count": 1},
        "test": {"heads": ["b"], "count": 6}
    }
}"#;

#[test]
fn data_baseline_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, CONFIG).unwrap();
    let data = dir.path().join("data");

    let out = dprtf(&[
        "gen-data",
        "--config",
        s(&cfg),
        "--out",
        s(&data),
        "--jobs",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read_to_string(data.join("manifest.jsonl"))
            .unwrap()
            .lines()
            .count(),
        9
    );

    let preds = dir.path().join("preds");
    let out = dprtf(&["baseline", "--data", s(&data), "--out", s(&preds)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read_to_string(preds.join("predictions.jsonl"))
            .unwrap()
            .lines()
            .count(),
        6
    );

    let report = dir.path().join("report");
    let out = dprtf(&[
        "evaluate",
        "--data",
        s(&data),
        "--predictions",
        s(&preds.join("predictions.jsonl")),
        "--dict",
        s(&data.join("dictionaries/b.json")),
        "--out",
        s(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    assert_eq!(v["overall"]["acc"], 1.0);
    assert_eq!(v["overall"]["n_instances"], 6);
    assert!(v["strata"].is_array());
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, CONFIG).unwrap();
    let gen = |name: &str, seed: &str| {
        let out_dir = dir.path().join(name);
        let out = dprtf(&[
            "gen-data",
            "--config",
            s(&cfg),
            "--seed",
            seed,
            "--out",
            s(&out_dir),
        ]);
        assert_eq!(code(&out), 0);
        fs::read(out_dir.join("instances/train-000000.mixture.dpt")).unwrap()
    };
    assert_eq!(gen("a", "9"), gen("b", "9"));
    assert_ne!(gen("a", "9"), gen("c", "10"));
}

#[test]
fn dictionaries_and_hrirs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = dprtf(&["gen-hrir", "--id", "h1", "--radius", "0.08", "--out", s(p)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(p.join("h1.hrs").exists());

    let d1 = p.join("d1");
    let d2 = p.join("d2");
    assert_eq!(
        code(&dprtf(&[
            "build-dict",
            "--hrir",
            s(&p.join("h1.hrs")),
            "--out",
            s(&d1)
        ])),
        0
    );
    assert_eq!(
        code(&dprtf(&[
            "build-dict",
            "--id",
            "h2",
            "--radius",
            "0.09",
            "--out",
            s(&d2)
        ])),
        0
    );
    let avg = p.join("avg");
    let out = dprtf(&[
        "avg-dict",
        s(&d1.join("dictionary.json")),
        s(&d2.join("dictionary.json")),
        "--out",
        s(&avg),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(avg.join("dictionary.json")).unwrap()).unwrap();
    assert_eq!(v["F"], 128);
    assert_eq!(v["grid_deg"].as_array().unwrap().len(), 25);
}

#[test]
fn simulate_brir_writes_tensors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dprtf(&[
        "simulate-brir",
        "--room",
        "5,7,3",
        "--center",
        "2.5,3.5,1.5",
        "--rt60",
        "0.3",
        "--azimuth",
        "-30",
        "--distance",
        "1.5",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = fs::read(dir.path().join("brir.dpt")).unwrap();
    assert_eq!(&bytes[..4], b"DPT1");
    assert_eq!(bytes[5], 2);
    assert!(dir.path().join("direct.dpt").exists());
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(
        &cfg,
        CONFIG.replace(r#""heads": ["b"]"#, r#""heads": ["a"]"#),
    )
    .unwrap();
    assert_eq!(
        code(&dprtf(&[
            "gen-data",
            "--config",
            s(&cfg),
            "--out",
            s(dir.path())
        ])),
        2
    );
    assert_eq!(code(&dprtf(&["gen-data", "--out", s(dir.path())])), 2);
    assert_eq!(code(&dprtf(&["no-such-command"])), 2);
    let out = dprtf(&[
        "simulate-brir",
        "--room",
        "5,7,3",
        "--center",
        "2.5,3.5,1.5",
        "--rt60",
        "0.3",
        "--azimuth",
        "0",
        "--distance",
        "9",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn io_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&dprtf(&["gen-data", "--config", s(&missing)])), 3);
    assert_eq!(code(&dprtf(&["baseline", "--data", s(dir.path())])), 3);
}

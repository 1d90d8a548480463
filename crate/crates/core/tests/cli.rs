use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn plan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plan"))
        .args(args)
        .env("LOHA_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// gen-maps, collect, train and eval on two small Grid2D maps.
fn pipeline(dir: &Path) {
    let maps = dir.join("maps");
    let ok = |out: Output| {
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        )
    };
    ok(plan(&[
        "gen-maps",
        "--seed",
        "5",
        "--out",
        s(&maps),
        "--num-maps",
        "2",
        "--width",
        "40",
        "--height",
        "40",
    ]));
    let samples = dir.join("samples.jsonl");
    ok(plan(&[
        "collect",
        "--map-dir",
        s(&maps),
        "--domain",
        "grid2d",
        "--k",
        "3",
        "--w",
        "2",
        "--seed",
        "5",
        "--problems",
        "6",
        "--out",
        s(&samples),
    ]));
    let model = dir.join("model.bin");
    ok(plan(&[
        "train",
        "--map-dir",
        s(&maps),
        "--samples",
        s(&samples),
        "--out",
        s(&model),
        "--seed",
        "5",
        "--epochs",
        "3",
    ]));
    ok(plan(&[
        "eval",
        "--map-dir",
        s(&maps),
        "--model",
        s(&model),
        "--w",
        "2",
        "--seed",
        "5",
        "--problems",
        "6",
        "--out",
        s(&dir.join("eval.csv")),
    ]));
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        out.push((
            entry.strip_prefix(dir).unwrap().display().to_string(),
            fs::read(&entry).unwrap(),
        ));
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn pipeline_is_byte_identical_and_every_output_carries_its_hash() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path());
    pipeline(b.path());
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), fb.len());
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        assert!(ba == bb, "{na} differs between runs");
    }
    let text = |name: &str| fs::read_to_string(a.path().join(name)).unwrap();
    let hash_of = |json: &str| {
        serde_json::from_str::<serde_json::Value>(json).unwrap()["config_hash"]
            .as_str()
            .unwrap()
            .to_owned()
    };
    assert_eq!(hash_of(&text("maps/manifest.json")).len(), 64);
    assert_eq!(hash_of(&text("samples.jsonl.manifest.json")).len(), 64);
    assert!(text("eval.csv").starts_with("# config_hash: "));
    let model_meta: serde_json::Value = serde_json::from_str(&text("model.bin.json")).unwrap();
    assert_eq!(model_meta["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn training_on_an_empty_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let maps = dir.path().join("maps");
    assert!(plan(&[
        "gen-maps",
        "--out",
        s(&maps),
        "--num-maps",
        "1",
        "--width",
        "16",
        "--height",
        "16"
    ])
    .status
    .success());
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = plan(&[
        "train",
        "--map-dir",
        s(&maps),
        "--samples",
        s(&empty),
        "--out",
        s(&dir.path().join("m.bin")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty dataset"));
}

#[test]
fn missing_inputs_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = plan(&[
        "collect",
        "--map-dir",
        s(&dir.path().join("nowhere")),
        "--out",
        s(&dir.path().join("x.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_settings_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let maps = dir.path().join("maps");
    assert!(plan(&[
        "gen-maps",
        "--out",
        s(&maps),
        "--num-maps",
        "1",
        "--width",
        "16",
        "--height",
        "16"
    ])
    .status
    .success());
    let out = plan(&[
        "collect",
        "--map-dir",
        s(&maps),
        "--w",
        "0.5",
        "--out",
        s(&dir.path().join("x.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let threads = Command::new(env!("CARGO_BIN_EXE_plan"))
        .args([
            "collect",
            "--map-dir",
            s(&maps),
            "--out",
            s(&dir.path().join("y.jsonl")),
        ])
        .env("LOHA_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

//! Fast end-to-end checks of the CLI surface (no training).

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_difflog"))
}

#[test]
fn gen_data_is_seeded_jsonl() {
    let out1 = bin()
        .args(["gen-data", "--seed", "7", "--counts", "5x2,5x3"])
        .output()
        .unwrap();
    assert!(out1.status.success());
    let text = String::from_utf8(out1.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10);
    for line in &lines {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["facts"].is_array());
        assert!(v["answer"].is_string());
    }
    let out2 = bin()
        .args(["gen-data", "--seed", "7", "--counts", "5x2,5x3"])
        .output()
        .unwrap();
    assert_eq!(text, String::from_utf8(out2.stdout).unwrap());
}

#[test]
fn infer_reports_the_textbook_query() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.jsonl");
    std::fs::write(
        &kb,
        r#"{"facts":[["brother","Dorothy","Richard",0.9],["daughter","Richard","Kate",0.8]],"query":["Dorothy","Kate"],"answer":"niece","k":2}
"#,
    )
    .unwrap();
    let rules = dir.path().join("rules.txt");
    std::fs::write(&rules, "composite brother daughter niece 1.0\n").unwrap();
    let out = bin()
        .args(["infer", "--kb", kb.to_str().unwrap()])
        .args(["--rules", rules.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("niece"), "{text}");
    assert!(text.contains("0.72"), "{text}");
}

#[test]
fn check_wmc_small_run_passes() {
    let out = bin()
        .args(["check-wmc", "--formulas", "50", "--max-vars", "8"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_dataset_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.jsonl");
    std::fs::write(&kb, "{\"facts\": 3}\n").unwrap();
    let out = bin().args(["infer", "--kb", kb.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

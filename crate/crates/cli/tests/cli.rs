use std::process::{Command, Output};

use serde_json::Value;

fn tateforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tateforge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = tateforge(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn margolis_examples_exit_zero() {
    let v = json(&["margolis", "--space", "y2", "--q", "1", "--max-degree", "32"]);
    let dims = v["tables"][0]["dims"].as_array().unwrap();
    let cert = v["tables"][0]["certified_up_to"].as_u64().unwrap() as usize;
    assert!(dims[..=cert].iter().all(|x| x == 0));
    assert_eq!(v["verdicts"][0]["pass"], true);

    let v = json(&["margolis", "--space", "hz", "--q", "0", "--max-degree", "32"]);
    assert_eq!(v["tables"][0]["dims"][0], 1);
    assert_eq!(v["tables"][0]["dims"][1], 0);

    let v = json(&["margolis", "--space", "zmodv1", "--q", "1", "--max-degree", "32"]);
    assert_eq!(v["config"]["space"], "z1-mod-v1");
    assert_eq!(v["verdicts"][0]["pass"], true);
}

#[test]
fn report_has_fixed_top_level_keys() {
    let v = json(&["margolis", "--space", "y1", "--q", "1", "--max-degree", "12"]);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["certified_window", "config", "provenance", "tables", "verdicts"]);
}

#[test]
fn page_commands_match_closed_forms() {
    let v = json(&["tate-e3", "--n", "1", "--cols", "-6..6", "--max-degree", "24"]);
    assert_eq!(v["tables"].as_array().unwrap().len(), 13);
    assert_eq!(v["verdicts"][0]["pass"], true);

    let v = json(&["hfp-e3", "--n", "2", "--cols", "0..8", "--max-degree", "24"]);
    assert_eq!(v["tables"][0]["column"], 0);
    assert_eq!(v["verdicts"][0]["pass"], true);

    // THH(S): only P(t^{+-1}) survives.
    let v = json(&["tate-e3", "--n", "0"]);
    for t in v["tables"].as_array().unwrap() {
        let dims = t["dims"].as_array().unwrap();
        assert_eq!(dims[0], 1);
        assert!(dims[1..].iter().all(|x| x == 0));
    }
}

#[test]
fn tower_verdicts() {
    let v = json(&["tower", "--side", "tp", "--n", "2", "--q", "1", "--i-range", "0..5"]);
    assert_eq!(v["verdicts"][0]["all_zero"], true);
    assert_eq!(v["tables"].as_array().unwrap().len(), 6);

    let v = json(&["tower", "--side", "tp", "--n", "1", "--q", "0", "--i-range", "0..3"]);
    assert_eq!(v["verdicts"][0]["expected"], "nonzero");
    assert!(v["tables"].as_array().unwrap().iter().all(|s| s["zero"] == false));

    let v = json(&["tower", "--side", "tcminus", "--n", "1", "--q", "1", "--i-range", "0..5"]);
    let ranks: Vec<&Value> = v["tables"].as_array().unwrap().iter().map(|s| &s["total_rank"]).collect();
    assert!(ranks.windows(2).all(|w| w[0] == w[1]));
    assert_ne!(ranks[0], 0);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let args = ["tower", "--side", "tp", "--n", "2", "--q", "1", "--i-range", "0..2", "--max-degree", "16"];
    let runs: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|t| {
            Command::new(env!("CARGO_BIN_EXE_tateforge"))
                .args(args)
                .env("TATEFORGE_THREADS", t)
                .output()
                .unwrap()
                .stdout
        })
        .collect();
    assert!(!runs[0].is_empty());
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn tsv_and_output_file() {
    let out = tateforge(&["hfp-e3", "--n", "1", "--cols", "0..3", "--max-degree", "8", "--format", "tsv"]);
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.starts_with("column\tinternal_degree\tdimension\tpage\n"));

    let path = std::env::temp_dir().join(format!("tateforge-cli-{}.json", std::process::id()));
    let out = tateforge(&["margolis", "--space", "a-star", "--q", "2", "--max-degree", "16", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(v["verdicts"][0]["pass"], true);
}

#[test]
fn bad_input_exits_two() {
    for args in [
        vec!["margolis", "--space", "bogus", "--q", "0"],
        vec!["margolis", "--space", "y1", "--q", "0", "--max-degree", "4"],
        vec!["tate-e3", "--n", "1", "--cols", "0..1"],
        vec!["hfp-e3", "--n", "1", "--cols", "-2..3"],
    ] {
        assert_eq!(tateforge(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn acceptance_subcommand_exit_codes() {
    assert!(tateforge(&["acceptance", "--only", "2,3"]).status.success());
    let failing = tateforge(&["acceptance", "--only", "3,13", "--format", "text"]);
    assert_eq!(failing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&failing.stdout).contains("FAIL 13"));
    assert!(tateforge(&["acceptance", "--only", "3,13", "--allow-known"]).status.success());
}

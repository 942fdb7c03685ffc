//! End-to-end runs of the binary covering every exit code.

use std::fs;
use std::process::{Command, Output};

use cswire::io::mps_to_json;
use cswire::mps::Preset;

fn cswire(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cswire")).args(args).env_remove("CSWIRE_TOL").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn analyze_ghz_is_non_decaying() {
    let o = cswire(&["analyze", "preset:ghz"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["classification"]["verdict"], "non-decaying");
    assert_eq!(v["classification"]["u3"], 1);
    let o = cswire(&["analyze", "preset:ghz", "--format", "text"]);
    assert!(stdout(&o).contains("non-decaying"));
}

#[test]
fn analyze_cluster_reports_finite_depth() {
    let o = cswire(&["analyze", "--preset", "cluster?n=16"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["classification"]["verdict"]["finite-depolarizing"], 2);
}

#[test]
fn report_json_is_sorted_and_round_trips() {
    let o = cswire(&["analyze", "preset:aklt"]);
    let text = stdout(&o);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let rate = v["classification"]["decay_rate"].as_f64().unwrap();
    assert!((rate - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn verify_projective_ghz_fails_with_exit_one() {
    let o = cswire(&["verify-projective", "preset:ghz", "--site", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let line = stdout(&o).lines().nth(2).unwrap().to_string();
    let cols: Vec<&str> = line.split(' ').collect();
    assert_eq!(cols[0], "3");
    assert!((cols[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert!(cols[2].parse::<f64>().unwrap().abs() < 1e-12);
    assert_eq!(cols[4], "false");
}

#[test]
fn verify_projective_canonical_class_holds() {
    let o = cswire(&["verify-projective", "preset:canonical_class?n=8", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(json(&o)["holds"], true);
}

#[test]
fn correlate_aklt_footer_has_ln3() {
    let o = cswire(&["correlate", "preset:aklt?n=30", "--r-max", "12"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,connected,bound,abs_connected");
    assert_eq!(lines.len(), 14);
    let rate: f64 = lines[13].strip_prefix("# fitted_rate=").unwrap().parse().unwrap();
    assert!((rate - 3f64.ln()).abs() < 0.02 * 3f64.ln());
}

#[test]
fn simulate_writes_jsonl() {
    let o = cswire(&["simulate", "preset:cluster?n=4", "--seed", "3", "--shots", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2 * 5);
    assert_eq!(lines[4]["kind"], "final");
    assert_eq!(lines[0]["site"], 1);
}

#[test]
fn simulate_requires_seed() {
    let o = cswire(&["simulate", "preset:cluster"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn download_cluster_is_faithful_and_ghz_is_not() {
    let o = cswire(&["download", "preset:cluster?n=6&left=+i", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["faithful"], true);
    assert!(v["trace"]["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);

    let o = cswire(&["download", "preset:ghz?n=6&left=bloch:1.0,0.5", "--seed", "4", "--skip-rotation"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert_eq!(json(&o)["faithful"], false);

    let o = cswire(&["download", "preset:ghz?n=6", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("rotation"));
}

#[test]
fn oracle_matches_on_every_preset() {
    for name in ["cluster", "aklt", "aklt_canonical", "ghz", "depolarizing4", "canonical_class"] {
        let spec = format!("preset:{name}?n=6");
        let o = cswire(&["oracle", &spec]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        assert!(json(&o)["comparison"]["max_deviation"].as_f64().unwrap() <= 1e-10);
    }
}

#[test]
fn oracle_rejects_large_chains() {
    let o = cswire(&["oracle", "preset:aklt?n=20"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("oracle limit"));
}

#[test]
fn malformed_json_exits_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"d\": 2,\n  \"n\": ,\n}").unwrap();
    let o = cswire(&["analyze", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("column"), "{err}");
}

#[test]
fn missing_file_exits_two() {
    let o = cswire(&["analyze", "--input", "/nonexistent/chain.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unsupported_format_exits_two() {
    let o = cswire(&["analyze", "preset:ghz", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scaled_kraus_set_names_trace_preservation() {
    let chain = Preset::Cluster.default_chain(5).unwrap();
    let v: serde_json::Value = serde_json::from_str(&mps_to_json(&chain)).unwrap();
    let mut v = v;
    for op in v["kraus"].as_array_mut().unwrap() {
        for row in op.as_array_mut().unwrap() {
            for z in row.as_array_mut().unwrap() {
                for part in z.as_array_mut().unwrap() {
                    *part = serde_json::json!(part.as_f64().unwrap() * 0.9);
                }
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scaled.json");
    fs::write(&path, v.to_string()).unwrap();
    let o = cswire(&["analyze", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("trace preservation"), "{}", stderr(&o));
}

#[test]
fn unknown_preset_exits_three() {
    let o = cswire(&["analyze", "preset:w"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn tolerance_comes_from_environment() {
    let s = "0.4999999999999";
    let text = format!(
        r#"{{"d":2,"n":4,"kraus":[[[[{s},0],[{s},0]],[[{s},0],[-{s},0]]],[[[{s},0],[-{s},0]],[[{s},0],[{s},0]]]],"left":[[1,0],[0,0]],"right":[[1,0],[0,0]]}}"#
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rounded.json");
    fs::write(&path, text).unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(cswire(&["analyze", p]).status.code(), Some(0));
    let strict = Command::new(env!("CARGO_BIN_EXE_cswire"))
        .args(["analyze", p])
        .env("CSWIRE_TOL", "1e-15")
        .output()
        .unwrap();
    assert_eq!(strict.status.code(), Some(3));
    assert_eq!(cswire(&["analyze", p, "--tol", "1e-15"]).status.code(), Some(3));
}

#[test]
fn file_and_preset_give_the_same_classification() {
    let chain = Preset::Aklt.default_chain(7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("aklt.json");
    fs::write(&path, mps_to_json(&chain)).unwrap();
    let a = json(&cswire(&["analyze", path.to_str().unwrap()]));
    let b = json(&cswire(&["analyze", "preset:aklt?n=7"]));
    assert_eq!(a["classification"], b["classification"]);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("presets.json");
    let o = cswire(&["presets", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = ["download", "preset:aklt_canonical?n=8&right=+i&left=bloch:0.3,2.0", "--seed", "9", "--skip-rotation"];
    assert_eq!(cswire(&args).stdout, cswire(&args).stdout);
}

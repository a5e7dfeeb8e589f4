use std::path::PathBuf;
use std::process::{Command, Output};

fn ccbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccbs")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn crossing_roadmap_solution() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    let trace = dir.path().join("trace.jsonl");
    let out = ccbs(&[
        "solve",
        "--roadmap",
        &fixture("crossing.roadmap"),
        "--radius",
        "0.5",
        "--delta",
        "0.01",
        "--stats",
        stats.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("soc 22.5194 makespan 7.8810"));
    assert_eq!(text.matches("agent ").count(), 3);
    assert!(text.contains("wait F F 4.000000 1.052578"), "{text}");

    let record: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(record[0]["success"], true);
    assert_eq!(record[0]["agents"], 3);
    let events = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(events.lines().count() as u64, record[0]["hl_expanded"].as_u64().unwrap());
}

#[test]
fn timeout_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.csv");
    let out = ccbs(&[
        "solve", "--open", "10x10", "--agents", "20", "--seed", "0", "--timeout", "0.001", "--stats",
        stats.to_str().unwrap(), "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).is_empty());
    let rows = csv_rows(&std::fs::read_to_string(&stats).unwrap());
    assert_eq!(rows[0][5], "false");
}

#[test]
fn bad_map_path_exit_code() {
    let out = ccbs(&["solve", "--map", "/nonexistent/x.map", "--agents", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn malformed_map_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("bad.map");
    std::fs::write(&map, "type octile\nheight 2\nwidth 2\nmap\n..\n.\n").unwrap();
    let out = ccbs(&["solve", "--map", map.to_str().unwrap(), "--agents", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 6"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn discrete_baseline_on_scen() {
    let out = ccbs(&[
        "solve", "--map", &fixture("small.map"), "--scen", &fixture("small.map.scen"), "--solver", "cbs",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let first = stdout(&out).lines().next().unwrap().to_string();
    assert_eq!(first, "soc 22.0000 makespan 9.0000");
}

#[test]
fn batch_is_byte_identical() {
    let args = [
        "batch", "--open", "6x6", "--agents", "3,4", "--k", "2,3", "--heuristic", "vanilla,hybrid", "--seeds", "0..6",
        "--no-runtime",
    ];
    let a = ccbs(&args);
    let b = ccbs(&[&args[..], &["--jobs", "1"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(csv_rows(&stdout(&a)).len(), 2 * 2 * 2 * 6);
}

#[test]
fn empty_seed_list_gives_header_only() {
    let out = ccbs(&["batch", "--open", "4x4", "--agents", "2", "--seeds", ""]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "map,k,agents,heuristic,seed,success,soc,makespan,hl_expanded,ll_calls,runtime\n");
}

#[test]
fn json_batch_records() {
    let out = ccbs(&["batch", "--open", "5x5", "--agents", "2", "--seeds", "0..3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert!(v[0]["runtime"].is_number());
}

fn mean_soc(rows: &[Vec<String>], k: &str) -> f64 {
    let socs: Vec<f64> = rows.iter().filter(|r| r[1] == k).map(|r| r[6].parse().unwrap()).collect();
    socs.iter().sum::<f64>() / socs.len() as f64
}

#[test]
fn finer_neighborhood_lowers_mean_soc() {
    let out = ccbs(&[
        "batch", "--open", "10x10", "--agents", "4", "--k", "2,3", "--heuristic", "hybrid", "--seeds", "0..25", "--timeout", "20",
    ]);
    let rows = csv_rows(&stdout(&out));
    assert!(rows.iter().all(|r| r[5] == "true"));
    assert!(mean_soc(&rows, "3") < mean_soc(&rows, "2"));
}

#[test]
fn hybrid_expands_less_than_vanilla_on_crowded_grid() {
    let out = ccbs(&[
        "batch", "--open", "10x10", "--agents", "20", "--heuristic", "vanilla,hybrid", "--seeds", "7", "--timeout", "30",
    ]);
    let rows = csv_rows(&stdout(&out));
    assert!(rows.iter().all(|r| r[5] == "true"), "{rows:?}");
    let expanded = |h: &str| rows.iter().find(|r| r[3] == h).unwrap()[8].parse::<u64>().unwrap();
    assert!(expanded("hybrid") <= expanded("vanilla"));
    assert_eq!(rows[0][6], rows[1][6]);
}

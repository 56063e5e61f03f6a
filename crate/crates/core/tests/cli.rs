use std::path::PathBuf;

use circlelab::cli::{parse_problem, problem_to_json, run, to_json};
use serde_json::Value;

const LINE: &str = r#"{"n": 2, "cubic": [[1,1,1,1],[2,2,2,1]], "quadric": [[1,1,1],[2,2,-1]],
    "weight": {"x0": [0.3, -0.3], "xi": 0.1}}"#;
const CUBES: &str = r#"{"n": 3, "cubic": [[1,1,1,1],[2,2,2,1],[3,3,3,1]],
    "quadric": [[1,1,1],[2,2,1],[3,3,-1]], "cubic_nonsingular": true}"#;

const FOUR: &str = r#"{"n": 4, "cubic": [[1,1,1,1],[2,2,2,1],[3,3,3,1],[4,4,4,1]],
    "quadric": [[1,1,1],[2,2,1],[3,3,1],[4,4,1]]}"#;

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("circlelab-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, body: &str) -> String {
        let p = self.0.join(name);
        std::fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_string()
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["circlelab"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = call(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn info_reports_rank_and_signature() {
    let s = Scratch::new("info");
    let p = s.file("cubes.json", CUBES);
    let v = json(&["info", "--problem", &p]);
    assert_eq!(v["n"], 3);
    assert_eq!(v["rank"], 3);
    assert_eq!(v["signature"]["r"], 2);
    assert_eq!(v["signature"]["s"], 1);
    assert_eq!(v["h"], 3);
    assert_eq!(v["hypotheses"]["plane_theorem"], false);
}

#[test]
fn emitted_problem_reloads_identically() {
    let s = Scratch::new("roundtrip");
    let p = s.file("line.json", LINE);
    let v = json(&["info", "--problem", &p]);
    let echoed = serde_json::to_string(&v["problem"]).unwrap();
    assert_eq!(parse_problem(&echoed).unwrap(), parse_problem(LINE).unwrap());
    let direct = String::from_utf8(to_json(&problem_to_json(&parse_problem(CUBES).unwrap()))).unwrap();
    assert_eq!(parse_problem(&direct).unwrap(), parse_problem(CUBES).unwrap());
}

#[test]
fn count_box_and_weighted() {
    let s = Scratch::new("count");
    let p = s.file("line.json", LINE);
    // x₁ = −x₂ with |x_i| ≤ 3
    assert_eq!(json(&["count", "--problem", &p, "--box", "-3:3,-3:3"])["count"], 7);
    let v = json(&["count", "--problem", &p, "--P", "8,16,32"]);
    let sols: Vec<u64> = v["rows"].as_array().unwrap().iter().map(|r| r["solutions"].as_u64().unwrap()).collect();
    assert_eq!(sols, vec![1, 2, 4]);
    assert!(v["fit"]["slope"].as_f64().unwrap() > 0.0);
}

#[test]
fn sum_modes_agree() {
    let s = Scratch::new("sum");
    let p = s.file("cubes.json", CUBES);
    let complete =
        json(&["sum", "--problem", &p, "--mode", "complete", "--q", "12", "--a3", "5", "--a2", "7", "--m", "1,0,-1"]);
    let crt = json(&["sum", "--problem", &p, "--mode", "crt", "--q", "12", "--a3", "5", "--a2", "7", "--m", "1,0,-1"]);
    for k in ["re", "im", "abs"] {
        assert!((complete[k].as_f64().unwrap() - crt[k].as_f64().unwrap()).abs() < 1e-9);
    }
    assert_eq!(crt["meta"]["factors"].as_array().unwrap().len(), 2);

    let l = s.file("line.json", LINE);
    let direct = json(&["sum", "--problem", &l, "--mode", "direct", "--P", "16", "--alpha3", "0.5", "--alpha2", "0.5"]);
    let poisson = json(&[
        "sum",
        "--problem",
        &l,
        "--mode",
        "poisson",
        "--P",
        "16",
        "--q",
        "2",
        "--a3",
        "1",
        "--a2",
        "1",
        "--M",
        "32",
    ]);
    assert!((direct["re"].as_f64().unwrap() - poisson["re"].as_f64().unwrap()).abs() < 1e-6);
    let (code, _, err) = call(&["sum", "--problem", &p, "--mode", "complete", "--q", "4", "--a3", "2", "--a2", "2"]);
    assert_eq!(code, 0);
    assert!(err.contains("gcd"));
    let (code, _, err) = call(&["sum", "--problem", &p, "--mode", "direct", "--P", "8"]);
    assert_eq!(code, 2);
    assert!(err.contains("--alpha3"));
}

#[test]
fn arcs_grid_csv() {
    let (code, out, _) = call(&["arcs", "--P", "20", "--grid", "4"]);
    assert_eq!(code, 0);
    let mut r = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(r.headers().unwrap().iter().next(), Some("alpha3"));
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 16);
    // (1, 1) sits on the arc around 0/1
    assert_eq!(&rows[15][2], "true");
    let (code, out, _) = call(&["arcs", "--P", "20", "--grid", "0"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 1);
}

#[test]
fn local_series_and_qfactor() {
    let s = Scratch::new("local");
    let p = s.file("cubes.json", CUBES);
    let v = json(&["series", "--problem", &p, "--R", "1"]);
    assert_eq!(v["value"].as_f64(), Some(1.0));
    // every primitive zero mod 7 has proportional gradients here
    let v = json(&["local", "--problem", &p, "--p", "7", "--kmax", "2"]);
    assert_eq!(v["hensel"]["levels"].as_array().unwrap().len(), 2);
    assert_eq!(v["qp"]["verdict"], "only_singular");
    let four = s.file("four.json", FOUR);
    let v = json(&["local", "--problem", &four, "--p", "7", "--kmax", "2"]);
    assert_eq!(v["hensel"]["stable"], true);
    assert_eq!(v["qp"]["verdict"], "smooth_liftable");
    let x: Vec<i128> = v["qp"]["x"].as_array().unwrap().iter().map(|t| t.as_i64().unwrap() as i128).collect();
    assert_eq!(x.iter().map(|t| t * t * t).sum::<i128>() % 49, 0);
    assert_eq!(x.iter().map(|t| t * t).sum::<i128>() % 49, 0);
    let v = json(&["qfactor", "--problem", &p, "--q", "12", "--a3", "1"]);
    assert_eq!((v["q0"].as_u64(), v["q1"].as_u64(), v["q2"].as_u64()), (Some(1), Some(12), Some(1)));
    let l = s.file("line.json", r#"{"n":2,"cubic":[[1,1,1,1]],"quadric":[[1,2,1]]}"#);
    let (code, _, err) = call(&["qfactor", "--problem", &l, "--q", "12", "--a3", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("diagonal"));
}

#[test]
fn integral_predict_compare() {
    let s = Scratch::new("main");
    let p = s.file("line.json", LINE);
    let j = json(&["integral", "--problem", &p, "--R", "4"]);
    let m = json(&["predict", "--problem", &p, "--Rq", "4", "--Rgamma", "4", "--P", "32"]);
    assert_eq!(j["value"], m["integral"]);
    let want = m["series"].as_f64().unwrap() * m["integral"].as_f64().unwrap() * 32f64.powi(-3);
    assert!((m["prediction"].as_f64().unwrap() - want).abs() <= 1e-15 * want.abs());
    let (code, out, _) = call(&["compare", "--problem", &p, "--P", "8,16,32", "--Rq", "4", "--Rgamma", "2"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "P,solutions,N_omega,prediction,ratio");
    assert_eq!(lines.len(), 4);
}

#[test]
fn weyl_scan_needs_h_and_follows_seed() {
    let s = Scratch::new("scan");
    let line = s.file("line.json", LINE);
    assert_eq!(call(&["weyl-scan", "--problem", &line, "--P", "8"]).0, 2);
    let p = s.file("cubes.json", CUBES);
    let scan = |seed: &str| {
        call(&["--seed", seed, "weyl-scan", "--problem", &p, "--P", "10", "--grid", "2", "--samples", "3"]).1
    };
    let (a, b, c) = (scan("1"), scan("1"), scan("2"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 1 + 4 + 3);
}

#[test]
fn nr_fast_matches_full() {
    let s = Scratch::new("nr");
    let p = s.file("x3.json", r#"{"n":1,"cubic":[[1,1,1,1]],"quadric":[[1,1,1]]}"#);
    let (code, out, _) = call(&["nr", "--problem", &p, "--R", "5", "--full"]);
    assert_eq!(code, 0);
    assert_eq!(out, "R,n_R,n_R_full\n5,17,17\n");
}

#[test]
fn output_file_and_thread_counts() {
    let s = Scratch::new("out");
    let p = s.file("cubes.json", CUBES);
    let target = s.0.join("series.json");
    let t = target.to_str().unwrap();
    let (code, out, _) = call(&["--out", t, "--threads", "1", "series", "--problem", &p, "--R", "6"]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let one = std::fs::read_to_string(&target).unwrap();
    let (_, three, _) = call(&["--threads", "3", "series", "--problem", &p, "--R", "6"]);
    assert_eq!(one, three);
}

#[test]
fn input_errors_exit_2() {
    let s = Scratch::new("errors");
    let bad = s.file("bad.json", "{\"n\": 2,\n \"cubic\": [[1,1,1,1]],\n \"quadric\": [[1,1,1]\n");
    let (code, _, err) = call(&["info", "--problem", &bad]);
    assert_eq!(code, 2);
    assert!(err.contains("line 4"), "{err}");
    let bad = s.file("schema.json", r#"{"n": 2, "cubic": [[1,1,3,1]], "quadric": [[2,1,1]]}"#);
    let (code, _, err) = call(&["info", "--problem", &bad]);
    assert_eq!(code, 2);
    assert!(err.contains("cubic[0]") && err.contains("quadric[0]"));
    assert_eq!(call(&["count", "--nonsense"]).0, 2);
    assert_eq!(call(&["frobnicate"]).0, 2);
    assert_eq!(call(&["--tol", "0", "arcs", "--P", "10", "--alpha3", "0.1", "--alpha2", "0.1"]).0, 2);
}

#[test]
fn budget_errors_exit_3() {
    let s = Scratch::new("budget");
    let p = s.file("cubes.json", CUBES);
    assert_eq!(call(&["--cap", "100", "series", "--problem", &p, "--R", "10"]).0, 3);
    assert_eq!(call(&["--cap", "100", "count", "--problem", &p, "--P", "50"]).0, 3);
    assert_eq!(call(&["--cap", "10", "local", "--problem", &p, "--p", "7"]).0, 3);
}

#[test]
fn weight_outside_box_warns() {
    let s = Scratch::new("warn");
    let p = s.file("edge.json", r#"{"n":1,"cubic":[[1,1,1,1]],"quadric":[[1,1,1]],"weight":{"x0":[0.45],"xi":0.2}}"#);
    let (code, _, err) = call(&["info", "--problem", &p]);
    assert_eq!(code, 0);
    assert!(err.contains("warning"));
}

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use gearsyn_core::dsl::{vocabulary_hash, vocabulary_text};
use gearsyn_core::{simulate, Catalogue, GearSequence};
use serde_json::Value;

const PAPER_EXAMPLE: &str =
    "<start> MRGF2-500 mesh_2n MSGA2-40 tra- SH-200 SBSG2-3020R mesh_1p SBSG2-2030L <end>";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gearsyn"));
    c.env_remove("GEARSYN_CATALOGUE");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn body(o: &Output) -> Vec<String> {
    stdout(o).lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_reports_each_line() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.txt", &format!("{PAPER_EXAMPLE}\n<start> tra+ SH-999 <end>\n<start> tra+ <end>\n"));
    let o = run(&["validate", &f]);
    assert_eq!(o.status.code(), Some(1));
    let lines = body(&o);
    assert_eq!(lines[0], "1: ok");
    assert!(lines[1].starts_with("2: token 2:"), "{}", lines[1]);
    assert!(lines[2].starts_with("3: position 2:"), "{}", lines[2]);
    assert!(stdout(&o).starts_with("# gearsyn validate seed=0 catalogue=gearcat/1"));

    let ok = write(dir.path(), "ok.txt", &format!("{PAPER_EXAMPLE}\n"));
    assert_eq!(run(&["validate", &ok]).status.code(), Some(0));
    let empty = write(dir.path(), "empty.txt", "");
    let o = run(&["validate", &empty]);
    assert_eq!(o.status.code(), Some(0));
    assert!(body(&o).is_empty());
    assert_eq!(run(&["validate", "/nonexistent/seqs.txt"]).status.code(), Some(2));
}

#[test]
fn simulate_table_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.txt", &format!("<start> tra+ SH-100 <end>\n{PAPER_EXAMPLE}\n"));
    let o = run(&["simulate", &f]);
    assert!(o.status.success());
    assert!(body(&o)[0].starts_with("1: s=1 p=(0.1, 0, 0) m=+e0"), "{}", body(&o)[0]);
    assert_eq!(run(&["simulate", &f]).stdout, o.stdout);

    let o = run(&["simulate", &f, "--format", "record"]);
    let cat = Catalogue::builtin();
    for (line, text) in body(&o).iter().zip([String::from("<start> tra+ SH-100 <end>"), PAPER_EXAMPLE.into()]) {
        let v: Value = serde_json::from_str(line).unwrap();
        let res = simulate(&text.parse::<GearSequence>().unwrap(), &cat).unwrap();
        assert_eq!(v["s"].as_f64(), Some(res.s));
        for i in 0..3 {
            assert_eq!(v["p"][i].as_f64(), Some(res.p[i]));
        }
        assert_eq!(v["weight_kg"].as_f64(), Some(res.weight_kg));
        assert_eq!(v["placements"].as_array().unwrap().len(), res.placements.len());
    }

    let bad = write(dir.path(), "bad.txt", "<start> tra+ SH-100 <end>\n<start> <end>\n");
    let o = run(&["simulate", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

fn search_json(args: &[&str]) -> Value {
    let o = run(args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap()
}

#[test]
fn search_finds_feasible_design_for_known_sequence() {
    let cat = Catalogue::builtin();
    let res = simulate(&PAPER_EXAMPLE.parse().unwrap(), &cat).unwrap();
    let req = gearsyn_core::encode_requirements(&res).to_string();
    let mut args = vec!["search", "--method", "eda", "--budget", "10000", "--json", "--req"];
    args.extend(req.split(' '));
    let v = search_json(&args);
    assert_eq!(v["feasible"], Value::Bool(true));
    assert_eq!(v["evaluations"], 10000);
    assert_eq!(v["seed"], 0);
    assert_eq!(v["catalogue"], "gearcat/1");
}

#[test]
fn search_accounting() {
    let req = ["--req", "0", "0", "1", "0.1", "0", "0", "0", "1"];
    let mut a = vec!["search", "--method", "eda+c", "--budget", "300", "--completer", "random", "--json"];
    a.extend(req);
    assert_eq!(search_json(&a)["evaluations"], 300);

    let mut a = vec!["search", "--method", "mcts", "--budget", "1", "--json"];
    a.extend(req);
    let v = search_json(&a);
    assert_eq!(v["evaluations"], 1);
    assert!(v["best"].is_string());

    let mut a = vec!["search", "--method", "mcts+c", "--budget", "10"];
    a.extend(req);
    assert_eq!(run(&a).status.code(), Some(1));
    let mut a = vec!["search", "--method", "mcts+c", "--budget", "10", "--completer", "127.0.0.1:1"];
    a.extend(req);
    assert_eq!(run(&a).status.code(), Some(2));
    assert_eq!(run(&["search", "--req", "0", "0", "1"]).status.code(), Some(1));
}

#[test]
fn served_completer_matches_in_process() {
    let exe = env!("CARGO_BIN_EXE_gearsyn");
    let req = ["--req", "0", "1", "0.02", "0.1", "-0.05", "0", "1", "-1"];
    let base = ["search", "--method", "eda+c", "--budget", "200", "--seed", "3", "--json"];

    let mut a: Vec<&str> = base.to_vec();
    a.extend(req);
    a.extend(["--completer", "random"]);
    let local = search_json(&a);

    let exec = format!("exec:{exe} serve-random --seed 3");
    let mut a: Vec<&str> = base.to_vec();
    a.extend(req);
    a.extend(["--completer", &exec]);
    let piped = search_json(&a);

    let mut server = bin()
        .args(["serve-random", "--seed", "3", "--listen", "127.0.0.1:0", "--once"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(server.stdout.take().unwrap()).lines();
    let addr = loop {
        let l = lines.next().unwrap().unwrap();
        if let Some(a) = l.strip_prefix("listening on ") {
            break a.to_string();
        }
    };
    let mut a: Vec<&str> = base.to_vec();
    a.extend(req);
    a.extend(["--completer", &addr]);
    let tcp = search_json(&a);
    assert!(server.wait().unwrap().success());

    assert_eq!(local["best"], piped["best"]);
    assert_eq!(local["best"], tcp["best"]);
    assert_eq!(local["score"], tcp["score"]);
}

#[test]
fn dataset_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.txt");
    let data_s = data.to_str().unwrap();
    let o = run(&["gen-dataset", "-n", "200", "--out", data_s, "--seed", "7", "--workers", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("# gearsyn gen-dataset seed=7 catalogue=gearcat/1"));
    let one = std::fs::read(&data).unwrap();
    assert_eq!(one.iter().filter(|&&b| b == b'\n').count(), 200);
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("data.txt.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["vocab_hash"], vocabulary_hash());

    let again = dir.path().join("again.txt");
    assert!(run(&["gen-dataset", "-n", "200", "--out", again.to_str().unwrap(), "--seed", "7", "--workers", "4"]).status.success());
    assert_eq!(std::fs::read(&again).unwrap(), one);

    let splits = dir.path().join("splits");
    let o = run(&["split", data_s, "--out-dir", splits.to_str().unwrap(), "--val-frac", "0.05", "--test-frac", "0.05"]);
    assert!(o.status.success());
    assert_eq!(body(&o)[0].split(' ').take(3).collect::<Vec<_>>(), ["train=180", "val=10", "test=10"]);
    assert_eq!(run(&["split", data_s, "--out-dir", splits.to_str().unwrap()]).status.code(), Some(1));

    let o = run(&["eval", splits.join("test.txt").to_str().unwrap(), "--json"]);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["report"]["n_total"], 10);
    assert_eq!(v["report"]["valid_pct"], 100.0);
    assert_eq!(v["report"]["pos_m"], 0.0);
    let o = run(&["eval", data_s]);
    assert!(body(&o)[0].contains("Valid%"));
}

#[test]
fn benchmark_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("bench.json");
    let o = run(&[
        "benchmark", "--problems", "2", "--pure-budget", "200", "--methods", "eda,random", "--json",
        json.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = body(&o);
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("eda"));
    assert!(rows[2].starts_with("random"));
    let v: Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
    assert_eq!(run(&["benchmark", "--methods", "eda+c"]).status.code(), Some(1));
}

#[test]
fn vocabulary_and_catalogue_flags() {
    let o = run(&["vocab"]);
    assert_eq!(stdout(&o), vocabulary_text());
    assert_eq!(stdout(&run(&["vocab", "--hash"])).trim(), vocabulary_hash());
    let w = stdout(&run(&["vocab", "--weights"]));
    assert_eq!(w.lines().count(), 53);
    assert!(w.lines().any(|l| l.starts_with("SH-100\t0.06")));
    assert!(w.starts_with("<start>\t0\n"));

    let dir = tempfile::tempdir().unwrap();
    let cat = write(dir.path(), "cat.csv", Catalogue::builtin_text());
    let seqs = write(dir.path(), "s.txt", "<start> tra+ SH-100 <end>\n");
    let o = bin().args(["validate", &seqs]).env("GEARSYN_CATALOGUE", &cat).output().unwrap();
    assert!(o.status.success());
    let broken = write(dir.path(), "broken.csv", "not a catalogue\n");
    assert_eq!(run(&["--catalogue", &broken, "validate", &seqs]).status.code(), Some(1));
    assert_eq!(run(&["--catalogue", "/nonexistent.csv", "validate", &seqs]).status.code(), Some(2));
}

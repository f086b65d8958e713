use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::process::{Child, Command, Output, Stdio};

fn plt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plt")).args(args).output().expect("spawn plt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("plt-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_file(&p);
    p
}

#[test]
fn worked_example_passes() {
    let o = plt(&["example1"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("alpha = [1,2,4,2]"), "{out}");
    assert_eq!(out.lines().last(), Some("PASS"));
}

#[test]
fn capacity_json() {
    let o = plt(&["capacity", "--n", "2", "--k", "4", "--l", "1", "--d", "3", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["capacity_l1"], "2/3");
    assert_eq!(v[0]["upper_bound"], "2/3");
}

#[test]
fn capacity_csv_lists_every_combination() {
    let o = plt(&["capacity", "--n", "2,3", "--k", "5", "--l", "1,2", "--d", "2", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1 + 4, "{out}");
    assert!(out.contains("8/13"), "{out}");
}

#[test]
fn full_support_has_rate_one() {
    let o = plt(&["run", "--servers", "2", "--messages", "3", "--support", "3", "--q", "5"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("rate: 1 (capacity 1)"), "{out}");
    assert!(out.contains("check: recovered equals direct evaluation"), "{out}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(plt(&["run", "--messages", "4"]).status.code(), Some(2));
    assert_eq!(plt(&["capacity", "--n", "x", "--k", "4", "--l", "1", "--d", "2"]).status.code(), Some(2));
    assert_eq!(plt(&["bogus"]).status.code(), Some(2));
}

#[test]
fn protocol_errors_exit_one_with_name() {
    let o = plt(&["run", "--servers", "2", "--messages", "4", "--support", "2", "--q", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: FieldTooSmall:"), "{}", stderr(&o));
    let o = plt(&["run", "--servers", "2", "--messages", "4", "--support", "2", "--q", "6"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn transcript_lines_append() {
    let path = scratch("append.jsonl");
    let p = path.to_str().unwrap();
    for seed in ["1", "2"] {
        let o = plt(&["run", "--servers", "2", "--messages", "4", "--support", "3", "--q", "5", "--seed", seed, "--transcript", p]);
        assert!(o.status.success());
    }
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["seed"], 2);
    assert_eq!(lines[0]["rate"]["num"], "2");
    assert_eq!(lines[0]["servers"][0]["answer_symbols"], 12);
    let _ = std::fs::remove_file(path);
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn spawn_server(extra: &[&str]) -> (Server, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_plt"))
        .args(["serve", "--bind", "127.0.0.1:0"])
        .args(extra)
        .stdout(Stdio::piped())
        .spawn()
        .expect("spawn server");
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected banner {line:?}")).to_string();
    (Server(child), addr)
}

#[test]
fn tcp_run_matches_in_process() {
    let db = ["--random", "--seed", "4", "--messages", "4", "--q", "7", "--servers", "3", "--support", "2"];
    let servers: Vec<(Server, String)> = (0..3).map(|_| spawn_server(&db)).collect();
    let endpoints = servers.iter().map(|s| s.1.as_str()).collect::<Vec<_>>().join(",");
    let (a, b) = (scratch("tcp.jsonl"), scratch("local.jsonl"));
    let base = ["run", "--messages", "4", "--support", "2", "--q", "7", "--seed", "4"];

    let tcp = plt(&[&base[..], &["--tcp", &endpoints, "--transcript", a.to_str().unwrap()]].concat());
    assert!(tcp.status.success(), "{}", stderr(&tcp));
    let local = plt(&[&base[..], &["--servers", "3", "--transcript", b.to_str().unwrap()]].concat());
    assert!(local.status.success());

    assert_eq!(std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    let recovered = |o: &Output| stdout(o).lines().find(|l| l.starts_with("recovered:")).map(str::to_string);
    assert!(recovered(&tcp).is_some());
    assert_eq!(recovered(&tcp), recovered(&local));
    let _ = (std::fs::remove_file(a), std::fs::remove_file(b));
}

#[test]
fn unreachable_server_is_reported() {
    let dead = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().to_string();
    let o = plt(&["run", "--messages", "4", "--support", "3", "--q", "5", "--tcp", &format!("{dead},{dead}")]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("ConnectionFailed") && err.contains(&dead), "{err}");
}

#[test]
fn audits_report_json() {
    let o = plt(&["audit", "structure", "--messages", "4", "--support", "3", "--q", "5", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], true);

    let o = plt(&["audit", "shape", "--servers", "2", "--functions", "4", "--rank", "2", "--seeds", "3"]);
    assert!(o.status.success());
    let o = plt(&["audit", "shape", "--servers", "2", "--functions", "4", "--rank", "2", "--seeds", "3", "--mutant", "desired-first-keep-order"]);
    assert_eq!(o.status.code(), Some(1));

    let o = plt(&["audit", "rate", "--servers", "2", "--messages", "4", "--support", "3", "--q", "5", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["measured"], "2/3");
    assert_eq!(v["equal"], true);
}

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use flate2::write::GzEncoder;
use flate2::Compression;

const OUTPUTS: [&str; 4] = ["transcripts.jsonl", "ig.jsonl", "report.json", "report.txt"];

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn guessgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_guessgame"))
        .args(args)
        .env("RUST_LOG", "error")
        .env_remove("GUESSGAME_AGENT_ENDPOINT")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn golden(name: &str) -> PathBuf {
    fixtures().join("golden").join(name)
}

#[test]
fn run_reproduces_golden_outputs() {
    let out = tempfile::tempdir().unwrap();
    let manifest = fixtures().join("mock/manifest.json");
    let o = guessgame(&[
        "run",
        "--config",
        s(&manifest),
        "--out",
        s(out.path()),
        "--parallelism",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in OUTPUTS {
        let got = std::fs::read(out.path().join(name)).unwrap();
        assert!(
            got == std::fs::read(golden(name)).unwrap(),
            "{name} differs"
        );
    }
    assert_eq!(
        stdout(&o),
        std::fs::read_to_string(golden("report.txt")).unwrap()
    );

    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("manifest.json")).unwrap())
            .unwrap();
    assert!(written["finished_at"].is_u64());
    for name in ["transcripts", "ig", "report_json", "report_text"] {
        assert_eq!(
            written["outputs"][name]["sha256"].as_str().unwrap().len(),
            64,
            "{name}"
        );
    }
}

fn copy_mock(dir: &Path) {
    for name in ["corpus.txt", "conceptnet.csv", "manifest.json"] {
        std::fs::copy(fixtures().join("mock").join(name), dir.join(name)).unwrap();
    }
}

#[test]
fn missing_or_tampered_index_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    copy_mock(dir.path());
    let manifest = dir.path().join("manifest.json");
    let out = dir.path().join("out");

    let mut dump = std::fs::read_to_string(dir.path().join("conceptnet.csv")).unwrap();
    dump.push('\n');
    std::fs::write(dir.path().join("conceptnet.csv"), dump).unwrap();
    let o = guessgame(&["run", "--config", s(&manifest), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("index hash mismatch"), "{}", stderr(&o));

    std::fs::remove_file(dir.path().join("conceptnet.csv")).unwrap();
    let o = guessgame(&["run", "--config", s(&manifest), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("transcripts.jsonl").exists());
}

#[test]
fn ingest_reports_rows_and_reads_gzip() {
    let dir = tempfile::tempdir().unwrap();
    let dump = fixtures().join("conceptnet_20.csv");
    let plain = dir.path().join("plain.json");
    let o = guessgame(&["ingest", s(&dump), "--out", s(&plain)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("rows 20  kept 13  duplicates 1"), "{text}");
    assert!(
        text.contains("relation 2  language 1  malformed 3"),
        "{text}"
    );
    assert!(text.contains("line 14:") && text.contains("line 15:") && text.contains("line 19:"));
    assert!(text.contains("UsedFor\t4"));

    let gz_path = dir.path().join("dump.csv.gz");
    let mut gz = GzEncoder::new(
        std::fs::File::create(&gz_path).unwrap(),
        Compression::default(),
    );
    gz.write_all(&std::fs::read(&dump).unwrap()).unwrap();
    gz.finish().unwrap();
    let zipped = dir.path().join("zipped.json");
    let o = guessgame(&["ingest", s(&gz_path), "--out", s(&zipped)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(&plain).unwrap(),
        std::fs::read(&zipped).unwrap()
    );

    let only = dir.path().join("only.json");
    let o = guessgame(&["ingest", s(&dump), "--out", s(&only), "--relations", "IsA"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("kept 3 "), "{}", stdout(&o));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = guessgame(&["ingest", s(&empty), "--out", s(&dir.path().join("e.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_matches_the_golden_report() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let (t, ig) = (golden("transcripts.jsonl"), golden("ig.jsonl"));
    let o = guessgame(&[
        "analyze",
        "--transcripts",
        s(&t),
        "--ig",
        s(&ig),
        "--json",
        s(&json),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        std::fs::read_to_string(golden("report.txt")).unwrap()
    );
    assert_eq!(
        std::fs::read(&json).unwrap(),
        std::fs::read(golden("report.json")).unwrap()
    );

    let o = guessgame(&[
        "analyze",
        "--transcripts",
        s(&t),
        "--ig",
        s(&ig),
        "--successes-only",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("successes only"), "{text}");
    assert_ne!(text, std::fs::read_to_string(golden("report.txt")).unwrap());
}

#[test]
fn sweeps_print_tables_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let t = golden("transcripts.jsonl");
    let manifest = fixtures().join("mock/manifest.json");
    let csv = dir.path().join("tau.csv");
    let o = guessgame(&[
        "sweep",
        "tau",
        "--transcripts",
        s(&t),
        "--config",
        s(&manifest),
        "--taus",
        "0.6,0.95",
        "--csv",
        s(&csv),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3, "{csv}");
    assert!(lines[0].starts_with("tau,alpha,prune_fraction"));
    assert!(lines[1].starts_with("0.6,") && lines[2].starts_with("0.95,"));
    // the default threshold row agrees with the golden report
    assert!(lines[1].contains(",-0.9646633114997766,"), "{}", lines[1]);

    let json = dir.path().join("ap.json");
    let o = guessgame(&[
        "sweep",
        "alpha-prune",
        "--transcripts",
        s(&t),
        "--alphas",
        "0.5,1",
        "--prunes",
        "0,0.25,0.65",
        "--json",
        s(&json),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(
        table.contains("α = 0.5") && table.contains("α = 1"),
        "{table}"
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 6);

    let o = guessgame(&["sweep", "alpha-prune", "--transcripts", s(&t), "--alphas="]);
    assert_eq!(o.status.code(), Some(1));
    let o = guessgame(&["sweep", "tau", "--transcripts", s(&t)]);
    assert_eq!(o.status.code(), Some(2), "tau sweep without an index");
}

#[test]
fn score_and_replay_agree_with_the_recorded_trace() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixtures().join("mock/manifest.json");
    let (t, ig) = (golden("transcripts.jsonl"), golden("ig.jsonl"));
    let scored = dir.path().join("ig.jsonl");
    let o = guessgame(&[
        "score",
        "--transcripts",
        s(&t),
        "--config",
        s(&manifest),
        "--out",
        s(&scored),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(&scored).unwrap(), std::fs::read(&ig).unwrap());

    let o = guessgame(&[
        "replay",
        "--transcripts",
        s(&t),
        "--ig",
        s(&ig),
        "--config",
        s(&manifest),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("265 records match"));

    // a perturbed trace is reported at its first difference
    let text = std::fs::read_to_string(&ig).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut rec: serde_json::Value = serde_json::from_str(&lines[4]).unwrap();
    rec["bayes_ig"] = serde_json::json!(rec["bayes_ig"].as_f64().unwrap() + 1e-9);
    lines[4] = rec.to_string();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let o = guessgame(&[
        "replay",
        "--transcripts",
        s(&t),
        "--ig",
        s(&bad),
        "--config",
        s(&manifest),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("record 5 "), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(guessgame(&["bogus"]).status.code(), Some(1));
    assert_eq!(guessgame(&["run"]).status.code(), Some(1));
    assert_eq!(guessgame(&["run", "--out", "x"]).status.code(), Some(1));
    assert_eq!(guessgame(&["--help"]).status.code(), Some(0));
    assert_eq!(guessgame(&["--version"]).status.code(), Some(0));
}

#[test]
fn unreachable_agents_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixtures().join("mock/manifest.json");
    let o = Command::new(env!("CARGO_BIN_EXE_guessgame"))
        .args([
            "run",
            "--config",
            s(&manifest),
            "--out",
            s(dir.path()),
            "--sample",
            "2",
        ])
        .env("RUST_LOG", "error")
        .env("GUESSGAME_AGENT_ENDPOINT", "http://127.0.0.1:9")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("2 of 2 games errored"));
    let transcripts = std::fs::read_to_string(dir.path().join("transcripts.jsonl")).unwrap();
    assert_eq!(transcripts.lines().count(), 2);
    assert_eq!(
        transcripts.matches("\"error\":\"guesser: ").count(),
        2,
        "{transcripts}"
    );
}

fn request(port: u16, method: &str, path: &str, body: &str) -> std::io::Result<String> {
    let mut stream = TcpStream::connect(("127.0.0.1", port))?;
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    let mut response = String::new();
    stream.read_to_string(&mut response)?;
    Ok(response)
}

#[test]
fn serve_answers_http() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_guessgame"))
        .args(["serve", "--listen", &format!("127.0.0.1:{port}")])
        .env("RUST_LOG", "error")
        .env_remove("GUESSGAME_AGENT_ENDPOINT")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let created = loop {
        match request(port, "POST", "/sessions", r#"{"mode":"HumanGuesser"}"#) {
            Ok(r) => break r,
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(100)),
            Err(e) => {
                child.kill().ok();
                panic!("service never came up: {e}");
            }
        }
    };
    let missing = request(port, "GET", "/sessions/nope", "").unwrap();
    child.kill().ok();
    child.wait().ok();
    assert!(created.starts_with("HTTP/1.1 201"), "{created}");
    assert!(created.contains("\"session_id\""));
    assert!(missing.starts_with("HTTP/1.1 404"), "{missing}");
}

//! Drives the compiled binary through the whole workflow: generate a
//! dataset, serve it, solve it over TCP with a dump, verify the dump against
//! the oracle, report the distribution, and export a series.

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Stdio};

fn tickcep() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tickcep"))
}

fn run_ok(cmd: &mut Command) -> String {
    let output = cmd.output().expect("spawn tickcep");
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).expect("utf-8 stdout")
}

fn generate(dir: &Path, seed: u64) {
    run_ok(tickcep().args([
        "generate",
        "--seed",
        &seed.to_string(),
        "--symbols",
        "200",
        "--events",
        "20000",
        "--days",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]));
}

struct Server {
    child: Child,
    addr: String,
}

impl Server {
    fn start(data: &Path) -> Server {
        let mut child = tickcep()
            .args([
                "serve",
                "--data",
                data.to_str().unwrap(),
                "--port",
                "0",
                "--seed",
                "7",
            ])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn serve");
        let stdout = child.stdout.take().expect("stdout");
        let mut line = String::new();
        BufReader::new(stdout)
            .read_line(&mut line)
            .expect("read banner");
        let addr = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
            .to_string();
        Server { child, addr }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[test]
fn full_workflow_over_tcp() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let data = tmp.path().join("data");
    generate(&data, 5);

    // determinism through the CLI: same seed, byte-identical files
    let data_again = tmp.path().join("data2");
    generate(&data_again, 5);
    for entry in std::fs::read_dir(&data).unwrap() {
        let entry = entry.unwrap();
        if entry.path().extension().is_some_and(|e| e == "csv") {
            let a = std::fs::read(entry.path()).unwrap();
            let b = std::fs::read(data_again.join(entry.file_name())).unwrap();
            assert_eq!(a, b, "{:?} differs between runs", entry.file_name());
        }
    }

    let server = Server::start(&data);
    let dump = tmp.path().join("dump.jsonl");
    let stdout = run_ok(tickcep().args([
        "solve",
        "--addr",
        &server.addr,
        "--batch-size",
        "500",
        "--dump",
        dump.to_str().unwrap(),
    ]));
    assert!(
        stdout.contains("40 batches"),
        "unexpected solve output: {stdout}"
    );

    let stdout = run_ok(tickcep().args([
        "verify",
        "--data",
        data.to_str().unwrap(),
        "--engine-dump",
        dump.to_str().unwrap(),
    ]));
    assert!(
        stdout.contains("verified"),
        "unexpected verify output: {stdout}"
    );

    // corrupting the dump must flip the exit code
    let text = std::fs::read_to_string(&dump).unwrap();
    let corrupted: String = text.replacen("\"ema38\":", "\"ema38\":1e9, \"was\":", 1);
    let bad_dump = tmp.path().join("bad_dump.jsonl");
    std::fs::write(&bad_dump, corrupted).unwrap();
    let status = tickcep()
        .args([
            "verify",
            "--data",
            data.to_str().unwrap(),
            "--engine-dump",
            bad_dump.to_str().unwrap(),
        ])
        .stdout(Stdio::null())
        .status()
        .unwrap();
    assert!(!status.success(), "verify accepted a corrupted dump");

    let stdout = run_ok(tickcep().args(["report", "--data", data.to_str().unwrap(), "--json"]));
    let report: serde_json::Value = serde_json::from_str(&stdout).expect("json report");
    assert_eq!(report["total_events"], 20000);

    // rank 0 is assigned to the largest-deficit exchange, ETR
    let series = tmp.path().join("series.csv");
    let stdout = run_ok(tickcep().args([
        "export-series",
        "--data",
        data.to_str().unwrap(),
        "--symbol",
        "A.ETR",
        "--out",
        series.to_str().unwrap(),
    ]));
    assert!(
        stdout.contains("window rows"),
        "unexpected export output: {stdout}"
    );
    let text = std::fs::read_to_string(&series).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("window_start,close,ema38,ema100,advisory")
    );
    let first = lines.next().expect("hot symbol has closed windows");
    assert!(
        first.starts_with("2021-11-0"),
        "bad window_start in {first:?}"
    );

    // unknown symbol is a clean error
    let status = tickcep()
        .args([
            "export-series",
            "--data",
            data.to_str().unwrap(),
            "--symbol",
            "NOPE.FR",
            "--out",
            tmp.path().join("nope.csv").to_str().unwrap(),
        ])
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn solve_without_harness_fails() {
    let status = tickcep()
        .args(["solve", "--addr", "127.0.0.1:9"])
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn help_lists_subcommands() {
    let stdout = run_ok(tickcep().arg("--help"));
    for sub in [
        "generate",
        "serve",
        "solve",
        "verify",
        "report",
        "export-series",
    ] {
        assert!(stdout.contains(sub), "--help missing {sub}");
    }
}

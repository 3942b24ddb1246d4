//! End-to-end tests of the `vanetsec` binary: exit codes, file outputs, and
//! determinism of the simulation commands.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vanetsec(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vanetsec"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary must spawn")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const TINY_SCENARIO: &str = "\
vehicle_count = 6
traffic_load = 2
sim_duration = 5
protocol_mode = secure, dsdv
";

#[test]
fn keygen_is_deterministic_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = vanetsec(&["keygen", "--seed", "7"], dir.path());
    let b = vanetsec(&["keygen", "--seed", "7"], dir.path());
    let c = vanetsec(&["keygen", "--seed", "8"], dir.path());
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    assert_ne!(stdout(&a), stdout(&c));
    assert_eq!(stdout(&a).trim().len(), 32, "16 bytes of hex");

    let out_path = dir.path().join("key.hex");
    let d = vanetsec(&["keygen", "--seed", "7", "--out", "key.hex"], dir.path());
    assert!(d.status.success());
    assert_eq!(fs::read_to_string(out_path).unwrap(), stdout(&a));
}

#[test]
fn seal_then_open_round_trips_a_message_file() {
    let dir = tempfile::tempdir().unwrap();
    assert!(vanetsec(&["keygen", "--seed", "1", "--out", "km.hex"], dir.path())
        .status
        .success());
    fs::write(dir.path().join("msg.bin"), [0x5A; 30]).unwrap();

    let sealed = vanetsec(
        &[
            "seal", "--key", "km.hex", "--local-id", "10", "--peer-id", "20", "--counter", "3",
            "--message", "msg.bin", "--out", "pkt.bin",
        ],
        dir.path(),
    );
    assert!(sealed.status.success());
    // 12-byte header + 30-byte ciphertext + 8-byte tag.
    assert_eq!(fs::read(dir.path().join("pkt.bin")).unwrap().len(), 50);

    let opened = vanetsec(
        &[
            "open", "--key", "km.hex", "--local-id", "20", "--peer-id", "10", "--counter", "3",
            "--packet", "pkt.bin", "--out", "plain.bin",
        ],
        dir.path(),
    );
    assert!(opened.status.success());
    assert_eq!(fs::read(dir.path().join("plain.bin")).unwrap(), [0x5A; 30]);
}

#[test]
fn open_rejects_tampered_and_truncated_packets_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert!(vanetsec(&["keygen", "--seed", "1", "--out", "km.hex"], dir.path())
        .status
        .success());
    fs::write(dir.path().join("msg.bin"), b"attack at dawn").unwrap();
    assert!(vanetsec(
        &[
            "seal", "--key", "km.hex", "--local-id", "10", "--peer-id", "20", "--counter", "0",
            "--message", "msg.bin", "--out", "pkt.bin",
        ],
        dir.path(),
    )
    .status
    .success());

    let mut bytes = fs::read(dir.path().join("pkt.bin")).unwrap();
    let open_args = |packet: &'static str| {
        [
            "open", "--key", "km.hex", "--local-id", "20", "--peer-id", "10", "--counter", "0",
            "--packet", packet,
        ]
    };

    bytes[14] ^= 0x01;
    fs::write(dir.path().join("tampered.bin"), &bytes).unwrap();
    let tampered = vanetsec(&open_args("tampered.bin"), dir.path());
    assert_eq!(tampered.status.code(), Some(1));

    bytes[14] ^= 0x01;
    fs::write(dir.path().join("short.bin"), &bytes[..bytes.len() - 3]).unwrap();
    let truncated = vanetsec(&open_args("short.bin"), dir.path());
    assert_eq!(truncated.status.code(), Some(1));

    // Unreadable input is a usage error, not a protocol failure.
    let missing = vanetsec(&open_args("nope.bin"), dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn chain_generates_and_verifies_and_flags_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let generated = vanetsec(
        &["chain", "--seed", "0102030405060708", "--n", "3", "--out", "chain.txt"],
        dir.path(),
    );
    assert!(generated.status.success());
    let table = fs::read_to_string(dir.path().join("chain.txt")).unwrap();
    assert_eq!(table.lines().count(), 4);

    let verified = vanetsec(&["chain", "--verify", "chain.txt"], dir.path());
    assert!(verified.status.success());
    assert!(stdout(&verified).contains("chain ok: 4 keys verified"));

    // Flip a hex digit of the first key: the one-way linkage breaks, exit 1.
    let mut lines: Vec<String> = table.lines().map(str::to_string).collect();
    let mut fields: Vec<String> = lines[0].split_whitespace().map(str::to_string).collect();
    let digit = fields[1].remove(0);
    fields[1].insert(0, if digit == '0' { '1' } else { '0' });
    lines[0] = fields.join(" ");
    fs::write(dir.path().join("bad.txt"), lines.join("\n") + "\n").unwrap();
    let broken = vanetsec(&["chain", "--verify", "bad.txt"], dir.path());
    assert_eq!(broken.status.code(), Some(1));

    // Bad seed hex is a usage error.
    let bad_seed = vanetsec(&["chain", "--seed", "xyz"], dir.path());
    assert_eq!(bad_seed.status.code(), Some(2));
}

#[test]
fn run_sim_is_deterministic_and_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.scenario"), TINY_SCENARIO).unwrap();

    let run = |out: &'static str| {
        vanetsec(
            &["run-sim", "--config", "tiny.scenario", "--seed", "7", "--out", out],
            dir.path(),
        )
    };
    let first = run("a.csv");
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(stdout(&first).contains("load 2:"));
    let second = run("b.csv");
    assert!(second.status.success());
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
    assert!(fs::read_to_string(dir.path().join("a.csv"))
        .unwrap()
        .starts_with("load,mode,"));

    let traced = vanetsec(
        &[
            "run-sim", "--config", "tiny.scenario", "--seed", "7", "--out", "c.csv", "--trace",
            "events.log",
        ],
        dir.path(),
    );
    assert!(traced.status.success());
    assert!(fs::metadata(dir.path().join("events.log")).unwrap().len() > 0);

    let missing = vanetsec(&["run-sim", "--config", "absent.scenario", "--out", "x.csv"], dir.path());
    assert_eq!(missing.status.code(), Some(2));

    fs::write(dir.path().join("bad.scenario"), "warp_speed = 9\n").unwrap();
    let unknown = vanetsec(&["run-sim", "--config", "bad.scenario", "--out", "x.csv"], dir.path());
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn report_pivots_metrics_and_rejects_mismatched_grids() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.scenario"), TINY_SCENARIO).unwrap();
    assert!(vanetsec(
        &["run-sim", "--config", "tiny.scenario", "--out", "metrics.csv"],
        dir.path(),
    )
    .status
    .success());

    let pivoted = vanetsec(&["report", "metrics.csv", "--out", "table.csv"], dir.path());
    assert!(pivoted.status.success(), "{}", String::from_utf8_lossy(&pivoted.stderr));
    let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let header = table.lines().next().unwrap();
    assert!(header.starts_with("load,"));
    assert!(header.contains("storage_secure"));
    assert!(header.contains("storage_dsdv"));
    assert_eq!(table.lines().count(), 2, "one data row for the single load");

    // Drop one mode's rows so the load grids no longer match.
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines: Vec<&str> = metrics.lines().collect();
    let extra = lines.last().unwrap().replacen("2,", "3,", 1);
    lines.push(&extra);
    fs::write(dir.path().join("skewed.csv"), lines.join("\n") + "\n").unwrap();
    let mismatched = vanetsec(&["report", "skewed.csv"], dir.path());
    assert_eq!(mismatched.status.code(), Some(2));

    // A file without the metrics header is refused.
    fs::write(dir.path().join("junk.csv"), "a,b,c\n1,2,3\n").unwrap();
    let junk = vanetsec(&["report", "junk.csv"], dir.path());
    assert_eq!(junk.status.code(), Some(2));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gfqconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfqconv")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = gfqconv(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// CSV body without the leading `#` config line.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn field_info_gf64_tables() {
    let rows = csv_rows(&ok(&["field-info", "--m", "6", "--poly", "109"]));
    assert_eq!(rows[0], ["i", "antilog", "log"]);
    assert_eq!(rows.len(), 65);
    // D^6 = D^5 + D^3 + D^2 + 1 for 1 + D^2 + D^3 + D^5 + D^6
    assert_eq!(rows[7][1], "45");
    assert_eq!(rows[1][2], "");
    assert_eq!(rows[2][2], "0");
}

#[test]
fn constellation_dump() {
    let rows = csv_rows(&ok(&["constellation", "--q", "64", "--dump"]));
    assert_eq!(rows[0], ["symbol", "bits", "I", "Q", "norm_I", "norm_Q"]);
    assert_eq!(rows.len(), 65);
    let r = &rows[1 + 0b100100];
    assert_eq!((r[1].as_str(), r[2].as_str(), r[3].as_str()), ("100100", "1", "-7"));
    let energy: f64 = rows[1..]
        .iter()
        .map(|r| r[4].parse::<f64>().unwrap().powi(2) + r[5].parse::<f64>().unwrap().powi(2))
        .sum::<f64>()
        / 64.0;
    assert!((energy - 1.0).abs() < 1e-12);
}

#[test]
fn spectrum_json_schema_round_trips() {
    let text = ok(&["spectrum", "--q", "16", "--a1", "13", "--a2", "7", "--a3", "11"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    for key in ["d1_num", "d2_num", "scale_sq", "n1", "n2", "convention", "code", "config"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!((v["d1_num"].as_u64(), v["d2_num"].as_u64(), v["scale_sq"].as_u64()), (Some(40), Some(48), Some(10)));
    assert_eq!(v["convention"], "unordered");
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(v, again);

    let dir = tempfile::tempdir().unwrap();
    let code = dir.path().join("code.json");
    fs::write(&code, serde_json::to_string(&v["code"]).unwrap()).unwrap();
    let from_file: Value =
        serde_json::from_str(&ok(&["spectrum", "--code", code.to_str().unwrap(), "--convention", "ordered"])).unwrap();
    assert_eq!(from_file["n1"].as_u64().unwrap(), 2 * v["n1"].as_u64().unwrap());
}

#[test]
fn invalid_triple_is_rejected_verbatim() {
    let out = gfqconv(&["spectrum", "--q", "16", "--a1", "1", "--a2", "1", "--a3", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("a1*a2+a3 == 0"));

    let dir = tempfile::tempdir().unwrap();
    let code = dir.path().join("bad.json");
    fs::write(&code, r#"{"field": {"m": 4, "poly": 25}, "a1": 13, "a2": 7, "a3": 8}"#).unwrap();
    let out = gfqconv(&["spectrum", "--code", code.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("a1*a2+a3 == 0"));
}

#[test]
fn bad_invocations_fail() {
    assert!(!gfqconv(&["spectrum", "--q", "16", "--a1", "13", "--a2", "7", "--a3", "11", "--bogus"]).status.success());
    assert!(!gfqconv(&["spectrum", "--code", "/nonexistent/code.json"]).status.success());
    assert!(!gfqconv(&["frobnicate"]).status.success());
}

#[test]
fn search_top_row_agrees_with_spectrum() {
    let report: Value = serde_json::from_str(&ok(&["search", "--q", "16", "--top", "5"])).unwrap();
    assert_eq!(report["max_d1_num"], 40);
    assert_eq!(report["search_space"], 3375);
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let top = &rows[0];
    let a: Vec<String> = ["a1", "a2", "a3"].iter().map(|k| top[k].to_string()).collect();
    let s: Value = serde_json::from_str(&ok(&["spectrum", "--q", "16", "--a1", &a[0], "--a2", &a[1], "--a3", &a[2]])).unwrap();
    for k in ["d1_num", "n1", "d2_num", "n2", "scale_sq"] {
        assert_eq!(top[k], s[k], "{k}");
    }
}

fn simulate_args<'a>(out: &'a str, threads: &'a str) -> Vec<&'a str> {
    vec![
        "simulate", "--q", "16", "--a1", "13", "--a2", "7", "--a3", "11", "--ebn0", "3:1:5", "--frames-max", "300",
        "--ferr-min", "30", "--batch", "16", "--seed", "9", "--threads", threads, "--out", out,
    ]
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&simulate_args(a.to_str().unwrap(), "1"));
    ok(&simulate_args(b.to_str().unwrap(), "3"));
    let (ta, tb) = (fs::read_to_string(&a).unwrap(), fs::read_to_string(&b).unwrap());
    assert_eq!(ta, tb);

    let rows = csv_rows(&ta);
    assert_eq!(rows[0], ["eb_n0_db", "es_n0_db", "frames", "sym_err", "bit_err", "frame_err", "ser", "ber", "fer"]);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.len() == 9));
    // the config line is enough to rerun
    let config: Value = serde_json::from_str(ta.lines().next().unwrap().trim_start_matches("# ")).unwrap();
    assert_eq!(config["subcommand"], "simulate");
    assert_eq!(config["global"]["seed"], 9);
    assert_eq!(config["args"]["ebn0"], "3:1:5");
}

#[test]
fn capacity_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cap.csv");
    ok(&["capacity", "--q", "4", "--snr", "-2:1:2", "--samples", "2e4", "--out", out.to_str().unwrap()]);
    let rows = csv_rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows[0], ["snr_db", "cm_bits", "bicm_bits"]);
    let snr: Vec<f64> = rows[1..].iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(snr, [-2.0, -1.0, 0.0, 1.0, 2.0]);
    assert!(snr.windows(2).all(|w| w[0] < w[1]));
    for r in &rows[1..] {
        let (cm, bicm): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((0.0..=2.0).contains(&cm) && (cm - bicm).abs() < 1e-9);
    }
}

fn encode_decode(dir: &Path, terminate: bool) {
    let code = ["--q", "16", "--a1", "13", "--a2", "7", "--a3", "11"];
    let obs = dir.join("obs.csv");
    let mut enc: Vec<&str> = vec!["encode"];
    enc.extend(code);
    enc.extend(["--random", "50", "--seed", "3", "--channel-snr-db", "40", "--out", obs.to_str().unwrap()]);
    if terminate {
        enc.push("--terminate");
    }
    ok(&enc);
    let mut clean: Vec<&str> = vec!["encode"];
    clean.extend(code);
    clean.extend(["--random", "50", "--seed", "3"]);
    if terminate {
        clean.push("--terminate");
    }
    let sent = csv_rows(&ok(&clean));
    let mut dec: Vec<&str> = vec!["decode"];
    dec.extend(code);
    dec.extend(["--in", obs.to_str().unwrap(), "--snr-db", "40"]);
    if terminate {
        dec.extend(["--termination", "zero"]);
    }
    let got = csv_rows(&ok(&dec));
    assert_eq!(got[0], ["stage", "symbol", "margin"]);
    assert_eq!(got.len(), sent.len());
    for (g, s) in got[1..].iter().zip(&sent[1..]) {
        assert_eq!(g[1], s[1]);
    }
}

#[test]
fn encode_then_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    encode_decode(dir.path(), false);
    encode_decode(dir.path(), true);
}

#[test]
fn encode_reads_symbol_files() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.txt");
    let with_header = dir.path().join("symbols.csv");
    fs::write(&plain, "3\n10\n2\n").unwrap();
    fs::write(&with_header, "stage,symbol\n0,3\n1,10\n2,2\n").unwrap();
    let code = ["encode", "--q", "16", "--a1", "13", "--a2", "7", "--a3", "11", "--in"];
    let a = ok(&[&code[..], &[plain.to_str().unwrap()]].concat());
    let b = ok(&[&code[..], &[with_header.to_str().unwrap()]].concat());
    assert_eq!(csv_rows(&a), csv_rows(&b));
    assert_eq!(csv_rows(&a)[1], ["0", "3", "9", "3"]);
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "3\n16\n").unwrap();
    assert!(!gfqconv(&[&code[..], &[bad.to_str().unwrap()]].concat()).status.success());
}

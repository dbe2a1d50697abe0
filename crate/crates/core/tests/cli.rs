use std::process::Command;

use serde_json::Value;

fn kwlab(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_kwlab")).args(args).output().expect("binary runs");
    (out.status.code().expect("exit code"), String::from_utf8(out.stdout).expect("utf8"))
}

fn json(args: &[&str]) -> Value {
    let (code, out) = kwlab(args);
    assert_eq!(code, 0, "{args:?}: {out}");
    serde_json::from_str(&out).expect("valid json")
}

fn is_rational(v: &Value) -> bool {
    v.as_str().is_some_and(|s| {
        s.split_once('/').is_some_and(|(n, d)| {
            n.trim_start_matches('-').chars().all(|c| c.is_ascii_digit()) && d.chars().all(|c| c.is_ascii_digit())
        })
    })
}

const RANK2: &str = "node{ node{} xW }";

#[test]
fn rank_example() {
    assert_eq!(kwlab(&["rank", "--schema", RANK2]), (0, "{\"limsup_rank\":\"2\"}\n".to_string()));
}

#[test]
fn certify_example() {
    let dir = std::env::temp_dir().join(format!("kwlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("rank2.txt");
    std::fs::write(&file, RANK2).unwrap();
    let v = json(&["certify", "--schema-file", file.to_str().unwrap(), "--x", "1/4", "--stage", "1", "--eps", "1/4", "--delta", "1/64"]);
    assert_eq!(v["verdict"], "in");
    let c = &v["certificate"];
    for k in ["p", "q", "r", "s", "slope_gap_lower_bound", "meet_point"] {
        assert!(is_rational(&c[k]), "{k}: {}", c[k]);
    }
    let gap: Vec<i128> = c["slope_gap_lower_bound"].as_str().unwrap().split('/').map(|t| t.parse().unwrap()).collect();
    // gap >= 1/3 - 2^-20
    assert!(gap[0] * 3 * (1 << 20) >= gap[1] * ((1 << 20) - 3));
}

#[test]
fn witness_round_trips() {
    for a in ["1", "4", "w+1", "w^2+1"] {
        let v = json(&["witness", "--ordinal", a]);
        let r = json(&["rank", "--schema", v["schema"].as_str().unwrap()]);
        assert_eq!(r["limsup_rank"], a);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(kwlab(&["rank", "--schema", "node{ nod }"]).0, 1);
    assert_eq!(kwlab(&["eval", "--schema", "node{}", "--x", "abc"]).0, 1);
    assert_eq!(kwlab(&["eval", "--schema", "node{}", "--x", "2"]).0, 1);
    assert_eq!(kwlab(&["certify", "--schema", "node{}", "--x", "1/4", "--eps", "0", "--delta", "1/4"]).0, 1);
    assert_eq!(kwlab(&["no-such-command"]).0, 1);
    assert_eq!(kwlab(&["--version"]).0, 0);
}

#[test]
fn parse_diagnostic_names_the_token() {
    let (_, out) = kwlab(&["eval", "--schema", "node{}", "--x", "1/x"]);
    assert!(out.contains("1/x"), "{out}");
    let (_, out) = kwlab(&["witness", "--ordinal", "w+q"]);
    assert!(out.contains("parse error"), "{out}");
}

#[test]
fn strict_inconclusive_exits_three() {
    // Two search points cannot certify 1/4, and 1/4 survives stage 1, so
    // neither side is proved.
    let args = ["certify", "--schema", RANK2, "--x", "1/4", "--stage", "1", "--eps", "1/4", "--delta", "1/64", "--budget", "2"];
    let (code, out) = kwlab(&args);
    assert_eq!(code, 0);
    assert!(out.contains("\"verdict\":\"inconclusive\""), "{out}");
    let strict = [&args[..], &["--strict"]].concat();
    assert_eq!(kwlab(&strict).0, 3);
}

#[test]
fn reduce_reports_consistency() {
    let dir = std::env::temp_dir().join(format!("kwlab-stub-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("stub.json");
    std::fs::write(&file, r#"{"support_bound": 8, "default": false, "levels": {"w": {"0": 2}}}"#).unwrap();
    let f = file.to_str().unwrap();
    let v = json(&["reduce", "--stub-file", f, "--ordinal", "w", "--x", "0"]);
    assert_eq!(v["consistent"], true);
    assert_eq!(v["prediction"]["kind"], "at_most");
    let v = json(&["reduce", "--stub-file", f, "--pair", "2:1", "--pair", "1:3"]);
    assert_eq!(v["rank"], "3");
    assert_eq!(kwlab(&["reduce", "--stub-file", f, "--pair", "2"]).0, 1);
}

#[test]
fn deterministic_across_threads() {
    let cases: [&[&str]; 3] = [
        &["interleave", "--schema", RANK2, "--eps", "1/4", "--grid-depth", "3"],
        &["stilde", "--schema", RANK2, "--eps", "1/4", "--depth", "2", "--grid-depth", "3"],
        &["export-code", "--schema", RANK2, "--budget", "3"],
    ];
    for args in cases {
        let one = kwlab(&[&["--threads", "1"], args].concat());
        let four = kwlab(&[&["--threads", "4"], args].concat());
        let again = kwlab(args);
        assert_eq!(one, four, "{args:?}");
        assert_eq!(one, again, "{args:?}");
        assert_eq!(one.0, 0, "{args:?}: {}", one.1);
    }
}

#[test]
fn csv_outputs() {
    let (code, out) = kwlab(&["slopes", "--schema", "node{}", "--grid-depth", "2", "--csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "p,q,slope,error");
    assert_eq!(lines.len(), 1 + 10);
    let (code, out) = kwlab(&["export-code", "--schema", "node{}", "--budget", "2", "--csv"]);
    assert_eq!(code, 0);
    assert!(out.lines().skip(1).all(|l| l.split(',').count() == 5));
}

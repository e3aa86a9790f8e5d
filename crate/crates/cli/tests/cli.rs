use std::fs;
use std::process::{Command, Output};

use bellcomm::montecarlo::{max_abs_deviation, sweep_curve};
use bellcomm::protocols::ProtocolSpec;
use bellcomm::report::{read_curve_csv, rows_max_abs_deviation, CSV_HEADER};

fn bellcomm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellcomm"))
        .args(args)
        .output()
        .expect("spawn bellcomm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn plain_three_point_curve_to_stdout() {
    let o = bellcomm(&["curve", "--protocol", "plain", "--grid", "3", "--n", "2000"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_curve_csv(stdout(&o).as_bytes()).unwrap();
    assert_eq!(rows.len(), 3);
    let analytic: Vec<f64> = rows.iter().map(|r| r.e_analytic.unwrap()).collect();
    assert_eq!(analytic, [-1.0, 0.0, 1.0]);
    // The endpoints are deterministic for the plain protocol.
    assert_eq!(rows[0].e_mc, -1.0);
    assert_eq!(rows[2].e_mc, 1.0);
    assert!(rows
        .iter()
        .all(|r| r.n == 2000 && r.protocol == "plain" && r.seed == 0));
    assert!(stdout(&o).starts_with(&CSV_HEADER.join(",")));
}

#[test]
fn csv_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "2", "8"] {
        let path = dir.path().join(format!("t{threads}.csv"));
        let o = bellcomm(&[
            "--threads",
            threads,
            "curve",
            "--protocol",
            "fixed-shift",
            "--delta",
            "0.6",
            "--grid",
            "61",
            "--n",
            "20000",
            "--seed",
            "17",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn csv_round_trip_preserves_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let o = bellcomm(&[
        "curve",
        "--protocol",
        "two-share",
        "--grid",
        "21",
        "--n",
        "20000",
        "--seed",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let rows = read_curve_csv(fs::File::open(&path).unwrap()).unwrap();
    let in_process = sweep_curve(ProtocolSpec::TwoShare, 21, 20_000, 5).unwrap();
    let a = rows_max_abs_deviation(&rows).unwrap();
    let b = max_abs_deviation(&in_process).unwrap();
    assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
}

#[test]
fn svg_output_is_well_formed_with_three_series() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("curve");
    let o = bellcomm(&[
        "curve",
        "--protocol",
        "fixed-shift",
        "--delta",
        "1.2",
        "--grid",
        "11",
        "--n",
        "2000",
        "--format",
        "both",
        "--out",
        base.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(base.with_extension("csv").exists());
    let text = fs::read_to_string(base.with_extension("svg")).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("valid XML");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let polylines = doc
        .descendants()
        .filter(|n| n.has_tag_name("polyline"))
        .count();
    assert_eq!(polylines, 3);
}

#[test]
fn svg_without_out_is_a_usage_error() {
    let o = bellcomm(&[
        "curve",
        "--protocol",
        "plain",
        "--format",
        "svg",
        "--n",
        "10",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn chsh_reaches_four_at_half_pi_shift() {
    let o = bellcomm(&[
        "chsh",
        "--protocol",
        "fixed-shift",
        "--delta",
        "1.5707963267948966",
        "--n",
        "10000",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let record: Vec<&str> = out.lines().next().unwrap().split(',').collect();
    assert_eq!(record[0], "fixed-shift");
    assert_eq!(record[2].parse::<f64>().unwrap(), 4.0);
    assert_eq!(record[3], "Superquantum");
    assert!(out.contains("Tsirelson"));
}

#[test]
fn chsh_plain_with_explicit_degrees_settings() {
    let o = bellcomm(&[
        "--degrees",
        "chsh",
        "--protocol",
        "plain",
        "--a",
        "90",
        "--a-prime",
        "0",
        "--b",
        "45",
        "--b-prime",
        "135",
        "--n",
        "100000",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let abs_s: f64 = out
        .lines()
        .next()
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((abs_s - 2.0).abs() < 0.03, "{abs_s}");
}

#[test]
fn trial_prints_the_record() {
    let o = bellcomm(&[
        "trial",
        "--protocol",
        "fixed-shift",
        "--delta",
        "0",
        "--a",
        "0",
        "--b",
        "0",
        "--lambda",
        "0.3",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("alpha   = +1"), "{out}");
    assert!(out.contains("beta    = -1"), "{out}");
    assert!(out.contains("(1 sent)"), "{out}");

    let o = bellcomm(&[
        "trial",
        "--protocol",
        "adaptive",
        "--k",
        "4",
        "--a",
        "1",
        "--b",
        "2",
        "--lambda",
        "0.4",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("(4 sent)"));
}

#[test]
fn trial_missing_share_is_a_usage_error() {
    let o = bellcomm(&[
        "trial",
        "--protocol",
        "two-share",
        "--a",
        "0",
        "--b",
        "1",
        "--lambda",
        "0.2",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn invalid_protocol_parameters_exit_two() {
    for args in [
        &["curve", "--protocol", "fixed-shift"][..],
        &["curve", "--protocol", "fixed-shift", "--delta", "2.0"],
        &["chsh", "--protocol", "adaptive", "--k", "0"],
        &["curve", "--protocol", "nonsense"],
        &["curve", "--protocol", "plain", "--grid", "1"],
    ] {
        let o = bellcomm(args);
        assert_eq!(code(&o), 2, "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_three() {
    let o = bellcomm(&[
        "curve",
        "--protocol",
        "plain",
        "--grid",
        "3",
        "--n",
        "10",
        "--out",
        "/nonexistent/dir/x.csv",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn verify_passes_and_catches_a_flipped_bob() {
    let ok = bellcomm(&["verify", "--n", "4000", "--grid", "13"]);
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));
    assert!(!stdout(&ok).contains("FAIL"));

    let bad = bellcomm(&["verify", "--n", "4000", "--grid", "13", "--inject-flip-bob"]);
    assert_eq!(code(&bad), 1);
    let out = stdout(&bad);
    let fails: Vec<&str> = out.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(fails.len(), 6);
    assert!(fails
        .iter()
        .all(|l| l.contains("mc-fixed-shift") && l.contains("θ = 0.0000")));
}

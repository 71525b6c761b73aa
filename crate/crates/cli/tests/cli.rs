use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

fn l0cert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l0cert"))
        .args(args)
        .env_remove("L0CERT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

/// Data rows of a CSV document, skipping `#` comments and the header.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn three_pixel(cmd: &str, extra: &[&str]) -> Output {
    let model = fixture("three_pixel.json");
    let input = fixture("three_pixel_input.json");
    let mut args = vec![cmd, "--model", &model, "--input", &input, "-t", "2"];
    args.extend_from_slice(extra);
    l0cert(&args)
}

#[test]
fn bounds_reproduce_the_worked_example() {
    let out = three_pixel("bounds", &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text
        .lines()
        .any(|l| l.starts_with("layer,kind,neuron,box_lower")));
    let expected: [(&str, [f64; 6]); 3] = [
        ("0,affine,0", [-12.0, 12.0, -10.6, 9.55, -19.15, 9.95]),
        ("0,affine,1", [-9.0, 9.0, -7.0, 7.95, -7.25, 8.75]),
        (
            "2,affine,0",
            [-1.0, 32.0, 0.05, 31.15, -0.75, 201389.0 / 5820.0],
        ),
    ];
    let table = rows(&text);
    for (key, values) in expected {
        let row = table
            .iter()
            .find(|r| r[..3].join(",") == key)
            .unwrap_or_else(|| panic!("missing row {key}"));
        for (cell, want) in row[3..].iter().zip(values) {
            let got: f64 = cell.parse().unwrap();
            assert!((got - want).abs() < 1e-9, "{key}: {got} vs {want}");
        }
    }
}

#[test]
fn bounds_strategy_filter_limits_columns() {
    let out = three_pixel("bounds", &["--strategy", "topt"]);
    let text = stdout(&out);
    let header = text.lines().find(|l| l.starts_with("layer,")).unwrap();
    assert_eq!(header, "layer,kind,neuron,topt_lower,topt_upper");
}

#[test]
fn missing_model_is_a_usage_error() {
    let input = fixture("three_pixel_input.json");
    let out = l0cert(&["bounds", "--input", &input, "-t", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_exit_codes_follow_the_verdict() {
    assert_eq!(
        three_pixel("verify", &["--strategy", "topt"]).status.code(),
        Some(0)
    );
    assert_eq!(
        three_pixel("verify", &["--strategy", "box"]).status.code(),
        Some(4)
    );
}

#[test]
fn verify_report_shape() {
    let out = three_pixel("verify", &[]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["format_version"], 1);
    assert_eq!(doc["config"]["t"], 2);
    assert_eq!(doc["report"]["status"], "verified");
    assert_eq!(doc["report"]["strategy"], "topt");
    let lower = doc["report"]["margins"][0]["lower"].as_f64().unwrap();
    assert!((lower - 0.05).abs() < 1e-9);
}

#[test]
fn planted_counterexample_is_reported() {
    let model = fixture("planted.json");
    let input = fixture("planted_input.json");
    for extra in [&[][..], &["--complete"][..]] {
        let mut args = vec!["verify", "--model", &model, "--input", &input, "-t", "1"];
        args.extend_from_slice(extra);
        let out = l0cert(&args);
        assert_eq!(out.status.code(), Some(1), "{extra:?}");
        let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(doc["report"]["status"], "falsified");
        let cex: Vec<f64> =
            serde_json::from_value(doc["report"]["counterexample"].clone()).unwrap();
        assert_eq!(cex, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }
}

#[test]
fn complete_mode_verifies_with_few_calls() {
    let model = fixture("stripes.json");
    let input = fixture("stripes_input.json");
    let out = l0cert(&[
        "verify",
        "--model",
        &model,
        "--input",
        &input,
        "-t",
        "2",
        "--complete",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["cover_stats"]["verdict"], "verified");
    let calls = doc["cover_stats"]["propagation_calls"].as_u64().unwrap();
    assert!(calls < 64 * 63 / 2, "{calls} calls");
}

#[test]
fn complete_mode_is_unknown_when_only_leaves_remain() {
    // Three pixels and t = 2: every block is a single t-subset checked with Box.
    let out = three_pixel("verify", &["--complete"]);
    assert_eq!(out.status.code(), Some(4));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["cover_stats"]["leaf_enumerations"], 3);
}

#[test]
fn volume_row_matches_closed_forms() {
    let out = l0cert(&["volume", "-k", "3", "-t", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let table = rows(&stdout(&out));
    assert_eq!(table.len(), 1);
    let v: Vec<f64> = table[0].iter().map(|c| c.parse().unwrap()).collect();
    assert_eq!(&v[..2], &[3.0, 2.0]);
    for (got, want) in v[2..].iter().zip([20.0 / 3.0, 32.0 / 3.0, 0.6, 0.2]) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn volume_ranges_skip_radii_above_k() {
    let out = l0cert(&["volume", "-k", "1..=3", "-t", "2,3"]);
    let keys: Vec<String> = rows(&stdout(&out))
        .iter()
        .map(|r| r[..2].join(","))
        .collect();
    assert_eq!(keys, ["2,2", "3,2", "3,3"]);
}

#[test]
fn monte_carlo_column_is_seeded() {
    let run = |seed: &str| {
        stdout(&l0cert(&[
            "volume", "-k", "4", "-t", "2", "--mc", "20000", "--seed", seed,
        ]))
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}

#[test]
fn seed_falls_back_to_environment() {
    let with_env = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_l0cert"))
            .args(["volume", "-k", "4", "-t", "2", "--mc", "20000"])
            .env("L0CERT_SEED", seed)
            .output()
            .unwrap();
        stdout(&out)
    };
    let explicit = stdout(&l0cert(&[
        "volume", "-k", "4", "-t", "2", "--mc", "20000", "--seed", "77",
    ]));
    assert_eq!(with_env("77"), explicit);
}

#[test]
fn compare_rates_respect_dominance() {
    let model = fixture("stripes.json");
    let input = fixture("stripes_input.json");
    let out = l0cert(&[
        "compare", "--model", &model, "--input", &input, "-k", "8,16", "-t", "1..=2", "--trials",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let table = rows(&stdout(&out));
    assert_eq!(table.len(), 12);
    let rate = |k: &str, t: &str, s: &str| -> f64 {
        let row = table
            .iter()
            .find(|r| r[0] == k && r[1] == t && r[2] == s)
            .unwrap();
        row[5].parse().unwrap()
    };
    for k in ["8", "16"] {
        for t in ["1", "2"] {
            assert!(rate(k, t, "topt") >= rate(k, t, "box"));
        }
        assert_eq!(rate(k, "1", "topt"), rate(k, "1", "ttimestop"));
    }
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bounds.csv");
    let out = three_pixel("bounds", &["--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path)
        .unwrap()
        .contains("topt_lower"));
}

#[test]
fn malformed_documents_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture("three_pixel.json");
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.display().to_string()
    };
    let short = write("short.json", r#"{"format_version": 1, "point": [1, 2]}"#);
    let typo = write("typo.json", r#"{"format_version": 1, "pointz": [1, 2, 3]}"#);
    let bad_layer = write(
        "bad_layer.json",
        r#"{"format_version": 1, "input_shape": [1, 3], "channels": 1,
            "layers": [{"type": "softmax"}]}"#,
    );
    let input = fixture("three_pixel_input.json");

    let out = l0cert(&["bounds", "--model", &model, "--input", &short, "-t", "1"]);
    assert_eq!(out.status.code(), Some(3));

    let out = l0cert(&["bounds", "--model", &model, "--input", &typo, "-t", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pointz"));

    let out = l0cert(&[
        "bounds", "--model", &bad_layer, "--input", &input, "-t", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("layers[0].type"));
}

#[test]
fn wrong_label_is_rejected() {
    assert_eq!(
        three_pixel("verify", &["--label", "1"]).status.code(),
        Some(5)
    );
}

use std::path::Path;
use std::process::{Command, Output};

use pcr_cli::commands::{run_compare, OutputFormat, RunConfig};
use pcr_cli::data::{
    parse_csv, prepare, standardize, ResponseScale, Standardize, BUILTIN_ELECTRICITY,
};
use pcr_cli::report::sig_figs;
use pcr_core::model::fit_ols;
use proptest::prelude::*;
use serde_json::Value;

fn pcr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

const TOY: &str = "y,a,b\n1,1,0\n2,0,2\n3,0,0\n";

#[test]
fn compare_json_on_toy_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "toy.csv", TOY);
    let out = pcr(&[
        "compare",
        "--input",
        &input,
        "--response",
        "y",
        "--d",
        "1",
        "--no-intercept",
        "--format",
        "json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
    assert!(close(&floats(&v["estimates"]["ols"]), &[1.0, 1.0]));
    assert!(close(&floats(&v["estimates"]["pcr_d"]), &[0.0, 1.0]));
    assert!(close(&floats(&v["estimates"]["pcr_k"]), &[1.0, 0.0]));
    assert!(close(&floats(&v["standard_errors"]["ols"]), &[3.0, 1.5]));
    assert!(close(
        &floats(&v["standard_errors"]["pcr_d"]),
        &[0.0, 1.25f64.sqrt()]
    ));
    assert!(close(
        &floats(&v["standard_errors"]["pcr_k"]),
        &[6.5f64.sqrt(), 0.0]
    ));
    assert_eq!(
        v["diagnostics"]["exceeds_ols"],
        serde_json::json!([false, false])
    );
    assert_eq!(v["covariances"]["pcr_d"]["status"], "complete");
    assert!((v["diagnostics"]["bias_sigma2_plugin"].as_f64().unwrap() + 4.0).abs() < 1e-12);
    for key in [
        "config",
        "estimates",
        "standard_errors",
        "covariances",
        "diagnostics",
        "residuals",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn compare_table_on_toy_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "toy.csv", TOY);
    let out = pcr(&[
        "compare",
        "--input",
        &input,
        "--response",
        "y",
        "--d",
        "1",
        "--no-intercept",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| l.starts_with("a ") || l.starts_with("b "))
        .map(|l| {
            l.split("  ")
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect()
        })
        .collect();
    assert_eq!(rows[0], vec!["a", "1 (3)", "0 (0)", "1 (2.5)"]);
    assert_eq!(rows[1], vec!["b", "1 (1.5)", "1 (1.1)", "0 (0)"]);
}

#[test]
fn full_model_pcr_column_matches_ols() {
    let cfg = RunConfig {
        input: BUILTIN_ELECTRICITY.into(),
        response: "cost".into(),
        d: 8,
        standardize: Standardize::Zscore,
        response_scale: ResponseScale::Rms,
        add_intercept: true,
        format: OutputFormat::Json,
        digits: 2,
    };
    let v: Value = serde_json::from_str(&run_compare(&cfg).unwrap()).unwrap();
    let ols = floats(&v["estimates"]["ols"]);
    let pcr = floats(&v["estimates"]["pcr_d"]);
    assert!(ols.iter().zip(&pcr).all(|(a, b)| (a - b).abs() < 1e-10));
    assert!(floats(&v["estimates"]["pcr_k"]).iter().all(|&b| b == 0.0));
    assert_eq!(
        v["diagnostics"]["exceeds_ols"],
        serde_json::json!(vec![false; 8])
    );
}

/// Table cells are the JSON values rounded for display.
#[test]
fn table_and_json_agree_on_electricity() {
    let base = [
        "--input",
        BUILTIN_ELECTRICITY,
        "--response",
        "cost",
        "--d",
        "3",
        "--standardize",
        "zscore",
        "--response-scale",
        "rms",
    ];
    let json = pcr(&[&["compare"][..], &base, &["--format", "json"]].concat());
    let table = pcr(&[&["compare"][..], &base].concat());
    let v: Value = serde_json::from_slice(&json.stdout).unwrap();
    let text = String::from_utf8(table.stdout).unwrap();
    let names: Vec<String> = v["names"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n.as_str().unwrap().to_string())
        .collect();
    let ols = floats(&v["estimates"]["ols"]);
    let se = floats(&v["standard_errors"]["ols"]);
    for (j, name) in names.iter().enumerate() {
        let line = text
            .lines()
            .find(|l| l.starts_with(&format!("{name} ")))
            .unwrap();
        let cell = format!("{} ({})", sig_figs(ols[j], 2), sig_figs(se[j], 2));
        assert!(line.contains(&cell), "{line} lacks {cell}");
    }
}

/// The documented preprocessing reproduces every reference entry at two
/// significant figures.
#[test]
fn electricity_table_reproduced() {
    let expected = [
        ("Intercept", "0.52 (0.015)", "0 (0)", "0.52 (0.031) *"),
        ("output", "0.83 (0.015)", "0.084 (0.022) *", "0.74 (0.03) *"),
        (
            "wage",
            "0.037 (0.016)",
            "-0.041 (0.047) *",
            "0.078 (0.028) *",
        ),
        (
            "labor_cs",
            "0.04 (0.042)",
            "-0.17 (0.049) *",
            "0.21 (0.085) *",
        ),
        (
            "capital_price",
            "0.03 (0.016)",
            "-0.005 (0.054) *",
            "0.035 (0.024) *",
        ),
        (
            "capital_cs",
            "0.029 (0.045)",
            "-0.038 (0.035)",
            "0.067 (0.093) *",
        ),
        (
            "fuel_price",
            "0.11 (0.018)",
            "0.015 (0.035) *",
            "0.094 (0.036) *",
        ),
        (
            "fuel_cs",
            "-0.015 (0.061)",
            "0.14 (0.033)",
            "-0.16 (0.13) *",
        ),
    ];
    let out = pcr(&[
        "compare",
        "--input",
        BUILTIN_ELECTRICITY,
        "--response",
        "cost",
        "--d",
        "3",
        "--standardize",
        "zscore",
        "--response-scale",
        "rms",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    for (name, ols, pcr_d, pcr_k) in expected {
        let line = text
            .lines()
            .find(|l| l.starts_with(&format!("{name} ")))
            .unwrap();
        let cells: Vec<&str> = line
            .split("  ")
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        assert_eq!(cells, vec![name, ols, pcr_d, pcr_k]);
    }
}

#[test]
fn fit_writes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "toy.csv", TOY);
    let target = dir.path().join("fit.json");
    let out = pcr(&[
        "fit",
        "--input",
        &input,
        "--response",
        "y",
        "--d",
        "1",
        "--no-intercept",
        "--format",
        "json",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(floats(&v["estimates"]["beta_pc_d"]), vec![2.0]);
    assert_eq!(v["config"]["transform"]["predictors"], "none");
}

#[test]
fn exit_codes_by_failure_kind() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.csv", "");
    let bad = write(dir.path(), "bad.csv", "y,a\n1,2\n2,x\n3,1\n");
    let collinear = write(dir.path(), "col.csv", "y,a,b\n1,1,2\n2,2,4\n3,3,6\n5,4,8\n");
    let short = write(dir.path(), "short.csv", "y,a,b\n1,1,2\n2,2,5\n");
    let constant = write(
        dir.path(),
        "const.csv",
        "y,a,b\n1,1,2\n2,2,2\n3,3,2\n5,4,2\n",
    );
    let code = |args: &[&str]| pcr(args).status.code().unwrap();

    assert_eq!(
        code(&["fit", "--input", &empty, "--response", "y", "--d", "1"]),
        3
    );
    assert_eq!(
        code(&["fit", "--input", &bad, "--response", "y", "--d", "1"]),
        3
    );
    assert_eq!(
        code(&[
            "fit",
            "--input",
            &collinear,
            "--response",
            "y",
            "--d",
            "1",
            "--no-intercept"
        ]),
        4
    );
    assert_eq!(
        code(&["fit", "--input", &short, "--response", "y", "--d", "1"]),
        5
    );
    assert_eq!(
        code(&[
            "fit",
            "--input",
            &constant,
            "--response",
            "y",
            "--d",
            "1",
            "--standardize",
            "zscore"
        ]),
        3
    );
    assert_eq!(
        code(&[
            "fit",
            "--input",
            &constant,
            "--response",
            "y",
            "--d",
            "1",
            "--standardize",
            "center"
        ]),
        4
    );
    assert_eq!(
        code(&[
            "fit",
            "--input",
            BUILTIN_ELECTRICITY,
            "--response",
            "cost",
            "--d",
            "9"
        ]),
        2
    );
    assert_eq!(
        code(&[
            "fit",
            "--input",
            "/nonexistent/file.csv",
            "--response",
            "y",
            "--d",
            "1"
        ]),
        1
    );
    assert_eq!(code(&["fit", "--input", BUILTIN_ELECTRICITY]), 2);

    let err = pcr(&["fit", "--input", &bad, "--response", "y", "--d", "1"]);
    let msg = String::from_utf8(err.stderr).unwrap();
    assert!(msg.contains("line 3, column 'a'"), "{msg}");
}

#[test]
fn simulate_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let few = write(
        dir.path(),
        "few.json",
        r#"{"design": {"random": {"n": 30, "p": 3, "seed": 1}}, "beta": {"explicit": [1, 2, 3]},
            "sigma2_true": 1.0, "d": 2, "replicates": 50, "seed": 1}"#,
    );
    let out = pcr(&["simulate", "--config", &few]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("replicates"));

    let typo = write(
        dir.path(),
        "typo.json",
        r#"{"design": {"random": {"n": "x"}}}"#,
    );
    let out = pcr(&["simulate", "--config", &typo]);
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8(out.stderr).unwrap();
    assert!(msg.contains("design.random.n"), "{msg}");
}

#[test]
fn simulate_retained_signal_passes_and_omitted_covariance_alerts() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let ok = pcr(&[
        "simulate",
        "--config",
        data.join("sim_retained_signal.json").to_str().unwrap(),
    ]);
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stdout)
    );

    let omitted = pcr(&[
        "simulate",
        "--config",
        data.join("sim_omitted_signal.json").to_str().unwrap(),
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_slice(&omitted.stdout).unwrap();
    assert_eq!(omitted.status.code(), Some(7));
    let alerts: Vec<&str> = v["alerts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_str().unwrap())
        .collect();
    assert_eq!(alerts.len(), 1);
    assert!(alerts[0].starts_with("cov(beta_d)"));
    for adj in v["comparison"]["adjudication"].as_array().unwrap() {
        assert_eq!(adj["closer"], "trace");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Column centering and scaling is an invertible reparametrization when an
    /// intercept is present, so OLS fitted values do not move.
    #[test]
    fn zscore_preserves_ols_predictions(
        (n, cells) in (6usize..25).prop_flat_map(|n| (Just(n), prop::collection::vec(-50.0f64..50.0, n * 4)))
    ) {
        let mut text = String::from("y,a,b,c\n");
        for i in 0..n {
            let r = &cells[i * 4..i * 4 + 4];
            text.push_str(&format!("{},{},{},{}\n", r[0], r[1], 3.0 * r[2] + 100.0, r[3] * 1e-3));
        }
        let raw = parse_csv("prop.csv", text.as_bytes(), "y", true).unwrap();
        let (z, _) = standardize(&raw, Standardize::Zscore).unwrap();
        let fit_raw = fit_ols(&raw);
        prop_assume!(fit_raw.is_ok());
        let a = raw.x.mul_vec(&fit_raw.unwrap().beta).unwrap();
        let b = z.x.mul_vec(&fit_ols(&z).unwrap().beta).unwrap();
        let scale = raw.y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-8 * scale));
    }
}

#[test]
fn prepare_records_the_transform() {
    let (data, t) = prepare(
        BUILTIN_ELECTRICITY,
        "cost",
        true,
        Standardize::Zscore,
        ResponseScale::Rms,
    )
    .unwrap();
    assert_eq!(t.columns.len(), 8);
    assert_eq!((t.columns[0].shift, t.columns[0].scale), (0.0, 1.0));
    assert!(t.columns[1].scale > 0.0);
    assert_eq!(t.response_transform.shift, 0.0);
    let ms: f64 = data.y.iter().map(|v| v * v).sum::<f64>() / (data.n() as f64 - 1.0);
    assert!((ms - 1.0).abs() < 1e-12);
}

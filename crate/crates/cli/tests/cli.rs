use std::path::PathBuf;

use gpq_cli::{run, CliError};

fn gpq(args: &[&str]) -> Result<String, CliError> {
    let mut out = Vec::new();
    run(std::iter::once("gpq").chain(args.iter().copied()), &mut out)?;
    Ok(String::from_utf8(out).expect("utf-8 output"))
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Compares with the frozen file; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, args: &[&str]) {
    let got = gpq(args).unwrap();
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(got, want, "output of {args:?} drifted from {name}");
}

#[test]
fn golden_invariance() {
    check_golden("invariance.csv", &["invariance", "--n", "4", "--l", "2"]);
}

#[test]
fn golden_dr_poly() {
    check_golden(
        "dr_poly.csv",
        &["dr-poly", "--n", "4", "--l", "2", "--k", "2", "--seed", "7"],
    );
}

#[test]
fn golden_closeness() {
    check_golden(
        "closeness.csv",
        &[
            "closeness",
            "--r",
            "2,4,inf",
            "--x",
            "101101",
            "--seed",
            "4",
        ],
    );
}

#[test]
fn golden_dequantize() {
    check_golden(
        "dequantize.csv",
        &[
            "dequantize",
            "--r",
            "64",
            "--trials",
            "10",
            "--x",
            "101,110",
            "--seed",
            "3",
        ],
    );
}

#[test]
fn golden_glued_build() {
    check_golden(
        "glued_build.csv",
        &["glued-build", "--k", "4", "--variant", "b", "--seed", "3"],
    );
    check_golden(
        "glued_k2.txt",
        &["glued-build", "--k", "2", "--emit", "text", "--seed", "1"],
    );
}

#[test]
fn golden_solvers() {
    check_golden(
        "solve_quantum.csv",
        &[
            "solve-quantum",
            "--k",
            "2..4",
            "--trials",
            "4",
            "--seed",
            "5",
        ],
    );
    check_golden(
        "solve_classical.csv",
        &[
            "solve-classical",
            "--k",
            "2",
            "--trials",
            "4",
            "--seed",
            "5",
        ],
    );
}

#[test]
fn golden_game_sim() {
    check_golden(
        "game_sim.csv",
        &["game-sim", "--k", "4", "--trials", "10", "--seed", "2"],
    );
    check_golden(
        "game_sim_summary.json",
        &[
            "game-sim",
            "--game",
            "b-to-c",
            "--strategy",
            "pointer-probe",
            "--k",
            "4..6",
            "--trials",
            "50",
            "--summary",
            "--seed",
            "2",
            "--format",
            "json",
        ],
    );
}

#[test]
fn scaling_is_byte_identical_across_runs() {
    let args = ["scaling", "--k", "2..6", "--trials", "200", "--seed", "1"];
    let a = gpq(&args).unwrap();
    let b = gpq(&args).unwrap();
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(
        lines[0],
        "k,algorithm,mode,seed,trials,budget,success_rate,median_queries,p90_queries"
    );
    assert_eq!(lines.len(), 1 + 3 * 3);
    for k in ["2", "4", "6"] {
        assert!(lines
            .iter()
            .any(|l| l.starts_with(&format!("{k},quantum-walk,"))));
        assert!(lines
            .iter()
            .any(|l| l.starts_with(&format!("{k},random-walk,"))));
    }
}

#[test]
fn dr_poly_residuals_vanish() {
    let out = gpq(&["dr-poly", "--n", "4", "--l", "2", "--k", "2", "--seed", "7"]).unwrap();
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "residual").unwrap();
    let mut checks = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert!(rec[col].parse::<f64>().unwrap().abs() < 1e-9);
        checks += 1;
    }
    // r = 1..8 and r = inf.
    assert_eq!(checks, 9);
}

#[test]
fn json_mirrors_csv() {
    let args = [
        "solve-classical",
        "--k",
        "2",
        "--trials",
        "3",
        "--seed",
        "9",
    ];
    let csv_out = gpq(&args).unwrap();
    let json_out = gpq(&[&args[..], &["--format", "json"]].concat()).unwrap();
    let mut rdr = csv::Reader::from_reader(csv_out.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let objs: Vec<serde_json::Value> = json_out
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), objs.len());
    for (rec, obj) in rows.iter().zip(&objs) {
        for (h, v) in header.iter().zip(rec.iter()) {
            let j = &obj[h];
            let as_text = match j {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Null => String::new(),
                other => other.to_string(),
            };
            assert_eq!(as_text, v, "column {h}");
        }
    }
}

#[test]
fn seed_comes_from_the_environment_by_default() {
    // Only this test touches GPQ_SEED.
    std::env::set_var("GPQ_SEED", "5");
    let from_env = gpq(&["solve-classical", "--k", "2", "--trials", "3"]).unwrap();
    std::env::remove_var("GPQ_SEED");
    let explicit = gpq(&[
        "solve-classical",
        "--k",
        "2",
        "--trials",
        "3",
        "--seed",
        "5",
    ])
    .unwrap();
    assert_eq!(from_env, explicit);
}

#[test]
fn output_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inv.csv");
    let printed = gpq(&["invariance", "--out", path.to_str().unwrap()]).unwrap();
    assert!(printed.is_empty());
    assert!(std::fs::read_to_string(&path)
        .unwrap()
        .starts_with("property,"));

    let bad = dir.path().join("missing/inv.csv");
    assert!(matches!(
        gpq(&["invariance", "--out", bad.to_str().unwrap()]),
        Err(CliError::Output { .. })
    ));
    assert!(matches!(
        gpq(&["glued-build", "--k", "3"]),
        Err(CliError::Glued(_))
    ));
    assert!(matches!(
        gpq(&["glued-build", "--k", "14"]),
        Err(CliError::Glued(_))
    ));
    assert!(matches!(
        gpq(&["dr-poly", "--n", "7"]),
        Err(CliError::Core(_))
    ));
    assert!(matches!(
        gpq(&["invariance", "--n", "9"]),
        Err(CliError::Core(_))
    ));
    assert!(matches!(
        gpq(&["invariance", "--property", "nope"]),
        Err(CliError::Usage(_))
    ));
    assert!(matches!(
        gpq(&["closeness", "--r", "0"]),
        Err(CliError::Args(_))
    ));
    assert!(matches!(
        gpq(&["scaling", "--bogus"]),
        Err(CliError::Args(_))
    ));
    assert!(matches!(gpq(&["frobnicate"]), Err(CliError::Args(_))));
}

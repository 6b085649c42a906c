//! End-to-end runs of the `raule` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use raule::dataset::{load_csv, read_csv, CsvOptions};
use raule::{irls_fit, FitOptions};

fn bundled() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/municipalities_synthetic.csv")
}

fn raule(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_raule"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn csv(args: &[&str]) -> (String, i32) {
    let mut full = vec!["--format", "csv"];
    full.extend_from_slice(args);
    let out = raule(&full);
    (
        String::from_utf8(out.stdout).unwrap(),
        out.status.code().unwrap(),
    )
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Rows of a bare CSV table, header first.
fn rows(text: &str) -> Vec<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    rdr.records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

/// Rows of the `# name` section of a multi-section CSV report.
fn section(text: &str, name: &str) -> Vec<Vec<String>> {
    let start = text
        .find(&format!("# {name}\n"))
        .unwrap_or_else(|| panic!("no section {name}"));
    let body = &text[start + name.len() + 3..];
    let end = body.find("\n# ").map_or(body.len(), |i| i + 1);
    rows(body[..end].trim_end())
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn separable_data_warns_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "sep.csv", "y,x\n0,-2\n0,-1\n1,1\n1,2\n");
    let out = raule(&["fit", file.to_str().unwrap(), "--intercept"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));
}

#[test]
fn balanced_intercept_only_fit_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "flat.csv", "y\n0\n1\n0\n1\n1\n0\n");
    let (text, code) = csv(&["fit", file.to_str().unwrap(), "--intercept"]);
    assert_eq!(code, 0);
    let coef = section(&text, "coefficients");
    assert_eq!(coef[1][0], "(intercept)");
    assert!(coef[1][1].parse::<f64>().unwrap().abs() < 1e-12);
}

#[test]
fn fit_matches_library() {
    let (text, code) = csv(&["fit", bundled().to_str().unwrap()]);
    assert_eq!(code, 0);
    let labeled = load_csv(bundled(), &CsvOptions::default()).unwrap();
    let fit = irls_fit(&labeled.data, &FitOptions::default()).unwrap();
    let coef = section(&text, "coefficients");
    assert_eq!(coef.len(), 5);
    for (row, (name, b)) in coef[1..]
        .iter()
        .zip(labeled.predictor_names().iter().zip(fit.beta_mle.iter()))
    {
        assert_eq!(&row[0], name);
        assert_eq!(row[1].parse::<f64>().unwrap(), *b);
    }
}

#[test]
fn raule_at_one_equals_rmle() {
    let (text, code) = csv(&[
        "estimate",
        bundled().to_str().unwrap(),
        "--estimator",
        "raule,rmle",
        "--d",
        "1",
        "--H",
        "1,-1,0,0",
    ]);
    assert_eq!(code, 0);
    let t = rows(&text);
    assert_eq!(t.len(), 3);
    assert_eq!(t[1][0], "RAULE");
    assert_eq!(t[2][0], "RMLE");
    assert_eq!(t[1][2..], t[2][2..]);
}

#[test]
fn d_list_gives_one_row_per_value() {
    let (text, code) = csv(&[
        "estimate",
        bundled().to_str().unwrap(),
        "--estimator",
        "aule",
        "--d",
        "0.1,0.5",
    ]);
    assert_eq!(code, 0);
    let t = rows(&text);
    assert_eq!(t.len(), 3);
    assert_eq!((t[1][1].as_str(), t[2][1].as_str()), ("0.1", "0.5"));
}

#[test]
fn restricted_estimator_without_restriction_exits_1() {
    let out = raule(&[
        "estimate",
        bundled().to_str().unwrap(),
        "--estimator",
        "rmle",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--H"));
}

#[test]
fn two_row_restriction_string_is_parsed() {
    let (text, code) = csv(&[
        "estimate",
        bundled().to_str().unwrap(),
        "--estimator",
        "rmle",
        "--H",
        "1,0,-2,1;1,-1,1,-1",
        "--h",
        "0.5,-0.25",
    ]);
    assert_eq!(code, 0);
    let b: Vec<f64> = rows(&text)[1][2..]
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((b[0] - 2.0 * b[2] + b[3] - 0.5).abs() < 1e-10);
    assert!((b[0] - b[1] + b[2] - b[3] + 0.25).abs() < 1e-10);
}

#[test]
fn scenario_file_reproduces_plug_in_risk() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scenario.txt");
    let plot = dir.path().join("plot.csv");
    let (plug_in, code) = csv(&[
        "risk",
        bundled().to_str().unwrap(),
        "--H",
        "1,-1,0,0;0,1,-1,0",
        "--estimator",
        "mle,aule,raule",
        "--d-grid",
        "0.2,0.5,0.9",
        "--write-scenario",
        scen.to_str().unwrap(),
        "--plot-data",
        plot.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let (replayed, code) = csv(&[
        "risk",
        "--scenario-file",
        scen.to_str().unwrap(),
        "--estimator",
        "mle,aule,raule",
        "--d-grid",
        "0.2,0.5,0.9",
    ]);
    assert_eq!(code, 0);
    let a = rows(&plug_in);
    let b = rows(&replayed);
    assert_eq!(a.len(), 10);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x[..3], y[..3]);
    }

    let p = rows(&fs::read_to_string(plot).unwrap());
    assert_eq!(
        p[0],
        [
            "d_MLE",
            "mse_MLE",
            "d_AULE",
            "mse_AULE",
            "d_RAULE",
            "mse_RAULE"
        ]
    );
    assert_eq!(p.len(), 4);
}

#[test]
fn dominance_lists_every_theorem() {
    let dir = tempfile::tempdir().unwrap();
    let scen = write(
        dir.path(),
        "s.txt",
        "[meta]\nkind = scenario\n[C]\n4,1,0\n1,3,0.5\n0,0.5,2\n[H]\n1,-1,0\n[beta]\n1,1,-0.5\n",
    );
    let (text, code) = csv(&[
        "dominance",
        "--scenario-file",
        scen.to_str().unwrap(),
        "--d",
        "0.3,0.7",
    ]);
    assert_eq!(code, 0);
    let t = rows(&text);
    assert_eq!(t.len(), 1 + 6 * 2);
    let ids: Vec<&str> = t[1..7].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ids, ["T3.3", "T3.4", "T3.5", "T3.6", "T3.7", "C3.1"]);
    let t37 = &t[5];
    assert_eq!((t37[4].as_str(), t37[7].as_str()), ("true", "true"));
}

#[test]
fn simulate_requires_a_seed() {
    let out = raule(&["simulate", "--reps", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--seed"));
}

#[test]
fn simulate_is_reproducible_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let record = dir.path().join("run.txt");
    let args = [
        "simulate", "--n", "60", "--reps", "20", "--seed", "9", "--long",
    ];
    let (first, code) = csv(&args);
    assert_eq!(code, 0);
    let mut with_record = args.to_vec();
    with_record.extend_from_slice(&["--record", record.to_str().unwrap()]);
    let (second, _) = csv(&with_record);
    assert_eq!(first, second);

    let (replayed, code) = csv(&["simulate", "--replay", record.to_str().unwrap(), "--long"]);
    assert_eq!(code, 0);
    assert_eq!(replayed, first);
    assert_eq!(
        rows(&first)[0],
        [
            "n",
            "p",
            "gamma",
            "estimator",
            "d",
            "mse",
            "se",
            "completed",
            "skipped"
        ]
    );
}

#[test]
fn generated_data_can_be_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gen.csv");
    let (_, code) = csv(&["generate", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(fs::read(&out).unwrap(), fs::read(bundled()).unwrap());
    let labeled = read_csv(fs::File::open(&out).unwrap(), &CsvOptions::default()).unwrap();
    assert_eq!(labeled.data.n(), 83);

    let (diag, code) = csv(&["diagnostics", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let kappa = section(&diag, "collinearity")
        .into_iter()
        .find(|r| r[0] == "kappa")
        .unwrap();
    assert!(kappa[1].parse::<f64>().unwrap() > 30.0);
}

#[test]
fn estimate_output_is_valid_input_shape() {
    let (text, _) = csv(&[
        "estimate",
        bundled().to_str().unwrap(),
        "--estimator",
        "mle,le",
        "--d",
        "0.3",
    ]);
    let t = rows(&text);
    assert!(t.iter().all(|r| r.len() == t[0].len()));
    for r in &t[1..] {
        for v in &r[2..] {
            assert!(v.parse::<f64>().unwrap().is_finite());
        }
    }
}

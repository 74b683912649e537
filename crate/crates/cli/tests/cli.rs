use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tmsv::{build_subtracted_state, ideal_joint_pnd, Config, SubtractionSpec};
use tmsv_cli::io::{read_matrix_f64, read_matrix_u64};

fn tmsv(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tmsv"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn dir_arg(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> toml::Table {
    fs::read_to_string(dir.join("report.toml")).unwrap().parse().unwrap()
}

fn float(t: &toml::Table, section: &str, key: &str) -> f64 {
    let mut v = &toml::Value::Table(t.clone());
    for part in section.split('.') {
        v = &v[part];
    }
    v[key].as_float().unwrap()
}

fn golden_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn assert_matches_golden(out: &Path, name: &str) {
    let golden = golden_dir(name);
    for entry in fs::read_dir(&golden).unwrap() {
        let path = entry.unwrap().path();
        let file = path.file_name().unwrap();
        assert_eq!(
            fs::read(out.join(file)).unwrap(),
            fs::read(&path).unwrap(),
            "{} differs from golden",
            file.to_string_lossy()
        );
    }
}

#[test]
fn predict_matches_golden_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, stdout, _) = tmsv(&[
        "predict", "--z", "0.5", "--l1", "1", "--l2", "0", "--eta", "0.8", "--nu", "0.01",
        "--out-dir", &dir_arg(tmp.path()),
    ]);
    assert_eq!(code, 0);
    assert_eq!(stdout, fs::read_to_string(tmp.path().join("report.toml")).unwrap());
    assert_matches_golden(tmp.path(), "predict");
}

#[test]
fn mc_matches_golden_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, _) = tmsv(&[
        "mc", "--z", "0.5", "--l1", "1", "--l2", "1", "--eta", "0.7", "--nu", "0.01", "--heralded",
        "--shots", "5000", "--seed", "1", "--out-dir", &dir_arg(tmp.path()),
    ]);
    assert_eq!(code, 0);
    assert_matches_golden(tmp.path(), "mc");
}

#[test]
fn experimental_regime_is_nonclassical() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, _) = tmsv(&[
        "predict", "--z", "0.66", "--l1", "3", "--l2", "3", "--eta", "0.1625", "--nu", "0",
        "--out-dir", &dir_arg(tmp.path()),
    ]);
    assert_eq!(code, 0);
    let r = report(tmp.path());
    assert!(float(&r, "witness", "det_m") < 0.0);
    assert!(float(&r, "witness", "agarwal") < 0.0);
    assert!(tmp.path().join("joint.csv").exists() && tmp.path().join("marginals.csv").exists());
}

#[test]
fn vacuum_prediction() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(tmsv(&["predict", "--z", "0", "--out-dir", &dir_arg(tmp.path())]).0, 0);
    let joint = read_matrix_f64(&tmp.path().join("joint.csv")).unwrap();
    assert_eq!(joint, vec![vec![1.0]]);
    assert_eq!(report(tmp.path())["witness"]["agarwal_defined"].as_bool(), Some(false));
}

#[test]
fn batch_matches_ideal_supports() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, _) = tmsv(&["predict", "--z", "0.7", "--l", "0,1,2,3", "--out-dir", &dir_arg(tmp.path())]);
    assert_eq!(code, 0);
    for l in 0..4 {
        let joint = read_matrix_f64(&tmp.path().join(format!("l{l}/joint.csv"))).unwrap();
        let state = build_subtracted_state(0.7, SubtractionSpec::symmetric(l), &Config::default()).unwrap();
        let ideal = ideal_joint_pnd(&state);
        for (n, row) in joint.iter().enumerate() {
            for (m, p) in row.iter().enumerate() {
                assert!((p - ideal.get(n, m)).abs() < 1e-12, "l={l} ({n},{m})");
                if n != m {
                    assert_eq!(*p, 0.0);
                }
            }
        }
    }
}

#[test]
fn pump_parameters_set_z() {
    let tmp = tempfile::tempdir().unwrap();
    // gain 1 by construction: chi * omega * L * sqrt(I) / (2 n0 c) = 1
    let c = 299_792_458.0f64;
    let pump = format!("{},1,1,1,1", 2.0 * c);
    let (code, _, err) = tmsv(&["predict", "--pump", &pump, "--out-dir", &dir_arg(tmp.path())]);
    assert_eq!(code, 0, "{err}");
    let z = float(&report(tmp.path()), "inputs", "z");
    assert!((z - 1f64.tanh()).abs() < 1e-12);
    let (code, _, _) = tmsv(&["predict", "--pump", "1,2,3", "--out-dir", &dir_arg(tmp.path())]);
    assert_eq!(code, 2);
}

#[test]
fn invalid_inputs_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let d = dir_arg(tmp.path());
    assert_eq!(tmsv(&["predict", "--z", "1.0", "--out-dir", &d]).0, 2);
    assert_eq!(tmsv(&["predict", "--z", "0.5", "--eta", "0", "--out-dir", &d]).0, 2);
    assert_eq!(tmsv(&["predict", "--z", "0.5", "--tail-tol", "0.5", "--out-dir", &d]).0, 2);
    assert_eq!(tmsv(&["mc", "--z", "0.5", "--tap-t", "1", "--out-dir", &d]).0, 2);
    assert_eq!(tmsv(&["bogus"]).0, 2);
    assert_eq!(tmsv(&["--workers", "0", "predict", "--z", "0.1", "--out-dir", &d]).0, 2);
}

#[test]
fn truncation_failure_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, err) = tmsv(&["predict", "--z", "0.999", "--out-dir", &dir_arg(tmp.path())]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn mc_runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for (d, w) in [(&a, "1"), (&b, "2")] {
        let code = tmsv(&[
            "--workers", w, "mc", "--z", "0.5", "--l1", "1", "--shots", "150000", "--seed", "12",
            "--out-dir", &dir_arg(d),
        ])
        .0;
        assert_eq!(code, 0);
    }
    for f in ["counts.csv", "empirical.csv", "report.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn mc_high_transmission_agrees_with_model() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, _) = tmsv(&[
        "mc", "--z", "0.5", "--l1", "1", "--l2", "1", "--tap-t", "0.999", "--heralded", "--shots",
        "1000000", "--seed", "3", "--out-dir", &dir_arg(tmp.path()),
    ]);
    assert_eq!(code, 0);
    let r = report(tmp.path());
    assert!(float(&r, "comparison", "tv_distance") < 0.01);
    assert_eq!(r["run"]["accepted"].as_integer(), Some(1_000_000));
}

#[test]
fn mc_asymmetric_condition_is_labelled() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, _) = tmsv(&[
        "mc", "--z", "0.5", "--l1", "1", "--l2", "0", "--heralded", "--shots", "20000",
        "--out-dir", &dir_arg(tmp.path()),
    ]);
    assert_eq!(code, 0);
    let r = report(tmp.path());
    assert_eq!(r["inputs"]["l1"].as_integer(), Some(1));
    assert_eq!(r["inputs"]["l2"].as_integer(), Some(0));
    // ideal detectors: the idler keeps one photon more than the signal
    let counts = read_matrix_u64(&tmp.path().join("counts.csv")).unwrap();
    for (n, row) in counts.iter().enumerate() {
        for (m, c) in row.iter().enumerate() {
            if *c > 0 {
                assert_eq!(m, n + 1);
            }
        }
    }
}

#[test]
fn mc_without_acceptance_reports_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, _) = tmsv(&[
        "mc", "--z", "0", "--l1", "1", "--l2", "1", "--shots", "1000", "--out-dir", &dir_arg(tmp.path()),
    ]);
    assert_eq!(code, 0);
    let r = report(tmp.path());
    assert_eq!(r["run"]["empty"].as_bool(), Some(true));
    assert_eq!(r["run"]["accepted"].as_integer(), Some(0));
}

#[test]
fn fit_recovers_mc_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let mc = tmp.path().join("mc");
    let fit = tmp.path().join("fit");
    let code = tmsv(&[
        "mc", "--z", "0.6", "--l1", "1", "--l2", "1", "--eta", "0.4", "--tap-t", "0.999999",
        "--tap-eta", "1", "--heralded", "--shots", "200000", "--seed", "2", "--out-dir", &dir_arg(&mc),
    ])
    .0;
    assert_eq!(code, 0);
    let counts = mc.join("counts.csv");
    let code = tmsv(&[
        "fit", "--in", &dir_arg(&counts), "--l1", "1", "--l2", "1", "--bootstrap", "20",
        "--out-dir", &dir_arg(&fit),
    ])
    .0;
    assert_eq!(code, 0);
    let r = report(&fit);
    let (z, eta, nu) = (float(&r, "fit", "z"), float(&r, "fit", "eta"), float(&r, "fit", "nu"));
    let (sz, se) = (float(&r, "fit.std_errors", "z"), float(&r, "fit.std_errors", "eta"));
    assert!((z - 0.6).abs() < 4.0 * sz, "z {z} +- {sz}");
    assert!((eta - 0.4).abs() < 4.0 * se, "eta {eta} +- {se}");
    assert!(nu < 0.01);
    assert_eq!(r["fit"]["converged"].as_bool(), Some(true));
}

#[test]
fn fit_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("c.csv");
    let out = dir_arg(&tmp.path().join("o"));
    fs::write(&f, "").unwrap();
    assert_eq!(tmsv(&["fit", "--in", &dir_arg(&f), "--out-dir", &out]).0, 2);
    fs::write(&f, "n\\m,0,1\n0,5,6\n1,-3,2\n").unwrap();
    let (code, _, err) = tmsv(&["fit", "--in", &dir_arg(&f), "--out-dir", &out]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3, column 2"), "{err}");
    fs::write(&f, "n\\m,0,1\n0,500,0\n1,0,0\n").unwrap();
    assert_eq!(tmsv(&["fit", "--in", &dir_arg(&f), "--bootstrap", "5", "--out-dir", &out]).0, 2);
    assert_eq!(tmsv(&["fit", "--in", "/nonexistent/counts.csv", "--out-dir", &out]).0, 2);
}

#[test]
fn single_cell_fit_is_flagged_degenerate() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("c.csv");
    fs::write(&f, "n\\m,0,1\n0,500,0\n1,0,0\n").unwrap();
    let out = tmp.path().join("o");
    assert_eq!(tmsv(&["fit", "--in", &dir_arg(&f), "--out-dir", &dir_arg(&out)]).0, 0);
    assert_eq!(report(&out)["fit"]["degenerate"].as_bool(), Some(true));
}

fn pmf_column(path: &Path, col: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn tes_synthetic_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let synth = tmp.path().join("synth");
    let out = tmp.path().join("out");
    let code = tmsv(&[
        "tes", "--synth", "100000", "--samples", "16", "--amplitude", "1", "--noise", "0.1",
        "--seed", "4", "--out-dir", &dir_arg(&synth),
    ])
    .0;
    assert_eq!(code, 0);
    let traces = synth.join("traces.csv");
    let code = tmsv(&["tes", "--in", &dir_arg(&traces), "--samples", "16", "--out-dir", &dir_arg(&out)]).0;
    assert_eq!(code, 0);
    let truth = pmf_column(&synth.join("true_pmf.csv"), 1);
    let got = pmf_column(&out.join("distribution.csv"), 1);
    let tv: f64 = 0.5
        * (0..got.len().max(truth.len()))
            .map(|k| (truth.get(k).unwrap_or(&0.0) - got.get(k).unwrap_or(&0.0)).abs())
            .sum::<f64>();
    assert!(tv < 0.01, "tv {tv}");
}

#[test]
fn tes_single_photon_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let synth = tmp.path().join("synth");
    let out = tmp.path().join("out");
    let code = tmsv(&["tes", "--synth", "400", "--pmf", "0,1", "--out-dir", &dir_arg(&synth)]).0;
    assert_eq!(code, 0);
    let code = tmsv(&["tes", "--in", &dir_arg(&synth.join("traces.csv")), "--out-dir", &dir_arg(&out)]).0;
    assert_eq!(code, 0);
    let got = pmf_column(&out.join("distribution.csv"), 1);
    assert_eq!(got[1], 1.0);
    assert!(got.iter().enumerate().all(|(k, p)| k == 1 || *p == 0.0));
}

#[test]
fn tes_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("t.csv");
    let out = dir_arg(&tmp.path().join("o"));
    fs::write(&f, "").unwrap();
    assert_eq!(tmsv(&["tes", "--in", &dir_arg(&f), "--out-dir", &out]).0, 2);
    let row = vec!["0.0"; 64].join(",");
    fs::write(&f, format!("{row}\n{row}\n0.0,1.0\n")).unwrap();
    let (code, _, err) = tmsv(&["tes", "--in", &dir_arg(&f), "--out-dir", &out]);
    assert_eq!(code, 2);
    assert!(err.contains("record 2"), "{err}");
}

#[test]
fn report_reproduces_predict_witnesses() {
    let tmp = tempfile::tempdir().unwrap();
    let pred = tmp.path().join("p");
    let rep = tmp.path().join("r");
    let code = tmsv(&[
        "predict", "--z", "0.6", "--l1", "2", "--l2", "2", "--eta", "0.3", "--nu", "0.002",
        "--tail-tol", "1e-14", "--out-dir", &dir_arg(&pred),
    ])
    .0;
    assert_eq!(code, 0);
    let code = tmsv(&[
        "report", "--in", &dir_arg(&pred.join("joint.csv")), "--emit-plots", "--out-dir", &dir_arg(&rep),
    ])
    .0;
    assert_eq!(code, 0);
    let (a, b) = (report(&pred), report(&rep));
    for key in ["agarwal", "det_m", "min_eigenvalue"] {
        let (x, y) = (float(&a, "witness", key), float(&b, "witness", key));
        assert!((x - y).abs() < 1e-12 * x.abs().max(1.0), "{key}: {x} vs {y}");
    }
    for f in ["joint.dat", "joint.gp", "marginals.dat", "marginals.gp"] {
        assert!(rep.join(f).exists(), "{f}");
    }
}

#[test]
fn stamp_is_opt_in() {
    let tmp = tempfile::tempdir().unwrap();
    let d = dir_arg(tmp.path());
    let (_, plain, _) = tmsv(&["predict", "--z", "0.3", "--out-dir", &d]);
    assert!(!plain.contains("unix_time"));
    let (_, stamped, _) = tmsv(&["predict", "--z", "0.3", "--stamp", "--out-dir", &d]);
    assert!(stamped.contains("unix_time"));
}

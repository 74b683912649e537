//! Acceptance criteria, one line each. Runs as a plain binary so the lines
//! always reach the test log.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tmsv::estimation::{fit_parameters, CountMatrix, FitConfig};
use tmsv::mc::{simulate_run, tv_distance_padded, ProtocolConfig, Sampling};
use tmsv::oracle::derivative_formula_pnd;
use tmsv::tes::{assign_photon_numbers, fit_mixture, synth_trace, wiener_project, PulseTemplate, Trace};
use tmsv::witness::{
    agarwal_parameter, det_moment_matrix, marginal, min_eigenvalue, moment_matrix, MarginalModel, Mode,
};
use tmsv::{
    build_subtracted_state, detected_joint_pnd, detected_joint_pnd_auto, Config, DetectorModel,
    FockAmplitudes, JointPnd, SubtractionSpec, WitnessReport,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn z_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn wide() -> Config {
    Config::default().with_tail_tol(1e-15).with_j_cap(2000)
}

fn detected(z: f64, l: usize, eta: f64, nu: f64, cfg: &Config) -> JointPnd {
    let s = build_subtracted_state(z, SubtractionSpec::symmetric(l), cfg).unwrap();
    let d = DetectorModel::new(eta, nu).unwrap();
    detected_joint_pnd_auto(&s, &d, &d, cfg.tail_tol)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for &z in &[0.2, 0.5, 0.8] {
        for l1 in 0..3 {
            for l2 in 0..2 {
                for &eta in &[1.0, 0.1625] {
                    for &nu in &[0.0, 0.001] {
                        let s = FockAmplitudes::with_truncation(z, SubtractionSpec::new(l1, l2), 10).unwrap();
                        let d = DetectorModel::new(eta, nu).unwrap();
                        let p = detected_joint_pnd(&s, &d, &d, 5);
                        for n in 0..=5 {
                            for m in 0..=5 {
                                let o = derivative_formula_pnd(&s, &d, &d, n, m).unwrap();
                                worst = worst.max((o - p.get(n, m)).abs());
                            }
                        }
                        cases += 1;
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-10 && secs < 60.0,
        format!("{cases} parameter sets x 36 cells, max |diff| = {worst:.2e}, {secs:.1} s"),
    )
}

fn closed_forms() -> Outcome {
    let mut worst_i = 0.0f64;
    let mut worst_d = 0.0f64;
    let mut curve = Vec::new();
    for z in z_grid() {
        let p = detected(z, 0, 1.0, 0.0, &wide());
        let nbar = z * z / (1.0 - z * z);
        let i = agarwal_parameter(&p).unwrap();
        let det = det_moment_matrix(&moment_matrix(&p));
        let i_ref = -1.0 / (2.0 * nbar + 1.0);
        let d_ref = -(2.0 * nbar.powi(3) + nbar * nbar);
        worst_i = worst_i.max((i - i_ref).abs() / i_ref.abs().max(1.0));
        worst_d = worst_d.max((det - d_ref).abs() / d_ref.abs().max(1.0));
        curve.push(i);
    }
    let rising = curve.windows(2).all(|w| w[1] > w[0]);
    let small = agarwal_parameter(&detected(0.01, 0, 1.0, 0.0, &wide())).unwrap();
    let large = agarwal_parameter(&detected(0.99, 0, 1.0, 0.0, &wide())).unwrap();
    let limits = small < -0.999 && large > -0.02;
    outcome(
        worst_i <= 1e-10 && worst_d <= 1e-10 && rising && limits,
        format!(
            "max err I {worst_i:.1e}, det {worst_d:.1e}; I(0.01) = {small:.5}, I(0.99) = {large:.5}"
        ),
    )
}

fn determinant_signs() -> Outcome {
    let mut all_negative = true;
    let mut worst = f64::NEG_INFINITY;
    for &z in &[0.1, 0.48, 0.67] {
        for l in 0..4 {
            for &nu in &[0.0, 0.001] {
                let det = det_moment_matrix(&moment_matrix(&detected(z, l, 0.1625, nu, &wide())));
                all_negative &= det < 0.0;
                worst = worst.max(det);
            }
        }
    }
    let ideal: Vec<f64> = (0..4)
        .map(|l| det_moment_matrix(&moment_matrix(&detected(0.5, l, 1.0, 0.0, &wide()))))
        .collect();
    let monotone = ideal.windows(2).all(|w| w[1] < w[0]);
    outcome(
        all_negative && monotone,
        format!(
            "largest det = {worst:.3e}; ideal z = 0.5 det by l: {}",
            ideal.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn eigenvalue_witness() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for z in z_grid() {
        for l in 0..4 {
            for &eta in &[1.0, 0.1625] {
                let lam = min_eigenvalue(&moment_matrix(&detected(z, l, eta, 0.0, &wide()))).unwrap();
                worst = worst.max(lam);
            }
        }
    }
    outcome(worst < 0.0, format!("largest lambda_min over 72 cases = {worst:.3e}"))
}

fn poisson(mean: f64, n_max: usize) -> Vec<f64> {
    let mut p = vec![(-mean).exp()];
    for n in 1..=n_max {
        let prev = p[n - 1];
        p.push(prev * mean / n as f64);
    }
    p
}

fn classical_nulls() -> Outcome {
    let n_max = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::INFINITY;
    let mut cases = 0;
    let mut check = |p: JointPnd| {
        let w = WitnessReport::from_pnd(&p, 1e-12).unwrap();
        let lowest = w.agarwal.unwrap_or(0.0).min(w.det_m).min(w.min_eigenvalue);
        worst = worst.min(lowest);
        cases += 1;
    };
    for &(a, b) in &[(0.5, 2.0), (1.0, 1.0), (0.05, 3.0), (4.0, 0.3)] {
        check(JointPnd::product(&poisson(a, n_max), &poisson(b, n_max)).unwrap());
    }
    for _ in 0..50 {
        let k = rng.random_range(2..6);
        let mut rows = vec![vec![0.0; n_max + 1]; n_max + 1];
        let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = weights.iter().sum();
        for w in &weights {
            let q = poisson(rng.random::<f64>() * 6.0, n_max);
            let r = poisson(rng.random::<f64>() * 6.0, n_max);
            for n in 0..=n_max {
                for m in 0..=n_max {
                    rows[n][m] += w / total * q[n] * r[m];
                }
            }
        }
        check(JointPnd::from_rows(&rows).unwrap().normalized().unwrap());
    }
    outcome(
        worst >= -1e-10,
        format!("{cases} classical distributions, smallest witness = {worst:.3e}"),
    )
}

fn marginal_ordering() -> Outcome {
    let mut means = Vec::new();
    let mut r2 = Vec::new();
    for l in 0..4 {
        let p = detected(0.66, l, 0.1625, 0.0, &Config::default());
        let w = WitnessReport::from_pnd(&p, 1e-12).unwrap();
        let th = w.signal_fits.iter().find(|f| f.model == MarginalModel::Thermal).unwrap();
        let po = w.signal_fits.iter().find(|f| f.model == MarginalModel::Poisson).unwrap();
        r2.push((th.r_squared.unwrap(), po.r_squared.unwrap()));
        let pmf = marginal(&p, Mode::Signal);
        means.push(pmf.iter().enumerate().map(|(n, q)| n as f64 * q).sum::<f64>());
    }
    let pass = r2[0].0 > r2[0].1 && r2[3].1 > r2[3].0 && means.windows(2).all(|w| w[1] > w[0]);
    outcome(
        pass,
        format!(
            "R2 thermal/poisson l=0 {:.5}/{:.5}, l=3 {:.5}/{:.5}; means {}",
            r2[0].0,
            r2[0].1,
            r2[3].0,
            r2[3].1,
            means.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(" < ")
        ),
    )
}

fn mc_convergence() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (t, main_eta, bound) in [(0.999, 1.0, 0.01), (0.9, 0.1625 / 0.9, 0.05)] {
        for l in 0..3 {
            let det = DetectorModel::new(main_eta, 0.0).unwrap();
            let run = simulate_run(&ProtocolConfig {
                z: 0.5,
                tap_transmission: t,
                // the tap detectors are the same devices as the main ones
                tap_detector: det,
                main_detector: det,
                condition: SubtractionSpec::symmetric(l),
                shots: 1_000_000,
                seed: 42 + l as u64,
                sampling: Sampling::Heralded,
            })
            .unwrap();
            let folded = if t == 0.999 { 1.0 } else { 0.1625 };
            let model = detected(0.5, l, folded, 0.0, &Config::default());
            let tv = tv_distance_padded(run.empirical.as_ref().unwrap(), &model);
            pass &= tv < bound && run.accepted == 1_000_000;
            parts.push(format!("T={t} l={l}: {tv:.4}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 180.0;
    outcome(pass, format!("TV {}; {secs:.1} s", parts.join(", ")))
}

fn synthetic_counts(seed: u64) -> CountMatrix {
    let det = DetectorModel::new(0.1625, 0.001).unwrap();
    let run = simulate_run(&ProtocolConfig {
        z: 0.66,
        tap_transmission: 1.0 - 1e-9,
        tap_detector: DetectorModel::ideal(),
        main_detector: det,
        condition: SubtractionSpec::symmetric(2),
        shots: 100_000,
        seed,
        sampling: Sampling::Heralded,
    })
    .unwrap();
    CountMatrix::from_rows(&run.counts.rows(), None).unwrap()
}

fn fit_round_trip() -> Outcome {
    let start = Instant::now();
    let sub = SubtractionSpec::symmetric(2);
    let (z, eta, nu) = (0.66, 0.1625, 0.001);
    let fit = fit_parameters(&synthetic_counts(1), sub, &FitConfig::default()).unwrap();
    let p = fit.params;
    let recovered = fit.converged
        && ((p.z - z) / z).abs() < 0.05
        && ((p.eta() - eta) / eta).abs() < 0.05
        && (p.nu() - nu).abs() <= 0.002;

    let reps = 100;
    let mut covered = [0usize; 3];
    for rep in 0..reps {
        let cfg = FitConfig {
            bootstrap: 200,
            seed: rep,
            ..FitConfig::default()
        };
        let f = fit_parameters(&synthetic_counts(1000 + rep), sub, &cfg).unwrap();
        let se = f.std_errors.unwrap();
        let truth = [z, eta, nu];
        let est = [f.params.z, f.params.eta(), f.params.nu()];
        let sd = [se.z, se.eta(), se.nu()];
        for k in 0..3 {
            if (est[k] - truth[k]).abs() <= 3.0 * sd[k] {
                covered[k] += 1;
            }
        }
    }
    let coverage_ok = covered.iter().all(|&c| c * 100 >= 99 * reps as usize);
    outcome(
        recovered && coverage_ok,
        format!(
            "estimate z = {:.4}, eta = {:.4}, nu = {:.4}; 3-sigma coverage z/eta/nu = {}/{}/{} of {reps}; {:.0} s",
            p.z,
            p.eta(),
            p.nu(),
            covered[0],
            covered[1],
            covered[2],
            start.elapsed().as_secs_f64()
        ),
    )
}

fn tes_pipeline() -> Outcome {
    let tmpl = PulseTemplate::double_exponential(64, 1e-8, 2e-8, 1.5e-7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (amp, sigma) = (1.0, 1.0 / 8.0);
    let pmf = [0.2, 0.25, 0.2, 0.15, 0.12, 0.08];
    let cdf: Vec<f64> = pmf.iter().scan(0.0, |a, p| { *a += p; Some(*a) }).collect();
    let n = 100_000;
    let mut truth = Vec::with_capacity(n);
    let mut energies = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let k = cdf.iter().position(|&c| u < c).unwrap_or(pmf.len() - 1);
        truth.push(k);
        energies.push(wiener_project(&synth_trace(k as u32, &tmpl, amp, sigma, 1e-8, &mut rng), &tmpl).unwrap());
    }
    let mix = fit_mixture(&energies, 5).unwrap();
    let (labels, dist) = assign_photon_numbers(&energies, &mix);
    let mut per_class = [(0usize, 0usize); 6];
    for (t, l) in truth.iter().zip(&labels) {
        per_class[*t].1 += 1;
        if t == l {
            per_class[*t].0 += 1;
        }
    }
    let worst_acc = per_class
        .iter()
        .map(|(hit, all)| *hit as f64 / *all as f64)
        .fold(1.0, f64::min);
    let tv = 0.5 * pmf.iter().zip(&dist).map(|(a, b)| (a - b).abs()).sum::<f64>();

    let x = synth_trace(3, &tmpl, 1.3, 0.4, 1e-8, &mut rng);
    let y = synth_trace(1, &tmpl, 0.7, 0.4, 1e-8, &mut rng);
    let (a, b) = (2.5, -1.75);
    let combo: Vec<f64> = x.samples().iter().zip(y.samples()).map(|(u, v)| a * u + b * v).collect();
    let lhs = wiener_project(&Trace::new(combo, 1e-8).unwrap(), &tmpl).unwrap();
    let rhs = a * wiener_project(&x, &tmpl).unwrap() + b * wiener_project(&y, &tmpl).unwrap();
    let lin = (lhs - rhs).abs();
    outcome(
        worst_acc >= 0.99 && tv < 0.01 && lin <= 1e-12,
        format!("worst per-class accuracy {worst_acc:.5}, pmf TV {tv:.4}, linearity error {lin:.1e}"),
    )
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn run_cli(args: &[&str]) -> i32 {
    let mut full = vec!["tmsv"];
    full.extend_from_slice(args);
    tmsv_cli::run(<tmsv_cli::Cli as clap::Parser>::try_parse_from(full).unwrap())
        .map(|_| 0)
        .unwrap_or_else(|e| e.exit_code())
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let base = root.path();
    let synth_dir = base.join("synth");
    let synth = synth_dir.to_str().unwrap().to_string();
    assert_eq!(run_cli(&["tes", "--synth", "2000", "--seed", "5", "--out-dir", &synth]), 0);
    let traces = format!("{synth}/traces.csv");
    let pred_dir = base.join("pred");
    let pred = pred_dir.to_str().unwrap().to_string();
    assert_eq!(run_cli(&["predict", "--z", "0.5", "--l1", "1", "--l2", "1", "--out-dir", &pred]), 0);
    let joint = format!("{pred}/joint.csv");
    let mc_dir = base.join("mc-src");
    let mc = mc_dir.to_str().unwrap().to_string();
    let mc_args = ["mc", "--z", "0.6", "--l1", "1", "--l2", "1", "--eta", "0.5", "--nu", "0.01", "--shots", "200000", "--seed", "9"];
    let mut a = mc_args.to_vec();
    a.extend_from_slice(&["--out-dir", &mc]);
    assert_eq!(run_cli(&a), 0);
    let counts = format!("{mc}/counts.csv");

    let commands: Vec<Vec<String>> = vec![
        vec!["predict", "--z", "0.66", "--l", "0,3", "--eta", "0.1625", "--emit-plots"],
        mc_args.to_vec(),
        vec!["mc", "--z", "0.5", "--l1", "2", "--l2", "1", "--heralded", "--shots", "150000", "--seed", "3", "--emit-plots"],
        vec!["fit", "--in", &counts, "--l1", "1", "--l2", "1", "--bootstrap", "20", "--seed", "4"],
        vec!["tes", "--synth", "500", "--seed", "8"],
        vec!["tes", "--in", &traces, "--emit-plots"],
        vec!["report", "--in", &joint, "--emit-plots"],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();

    let mut mismatches = Vec::new();
    for (i, cmd) in commands.iter().enumerate() {
        let mut snaps = Vec::new();
        for (run, workers) in [(0, "1"), (1, "1"), (2, "3")] {
            let dir = base.join(format!("c{i}-{run}"));
            let mut args: Vec<&str> = vec!["--workers", workers];
            args.extend(cmd.iter().map(String::as_str));
            let d = dir.to_str().unwrap().to_string();
            args.extend_from_slice(&["--out-dir", &d]);
            let code = run_cli(&args);
            if code != 0 {
                mismatches.push(format!("{} exited {code}", cmd[0]));
            }
            snaps.push(snapshot(&dir));
        }
        if snaps[0].is_empty() || snaps[0] != snaps[1] || snaps[0] != snaps[2] {
            mismatches.push(cmd[0].clone());
        }
    }
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{} command lines byte-identical over 2 runs and 1 vs 3 workers", commands.len())
        } else {
            format!("differences in: {}", mismatches.join(", "))
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("closed-form witnesses", closed_forms),
        ("determinant signs", determinant_signs),
        ("eigenvalue witness", eigenvalue_witness),
        ("classicality null tests", classical_nulls),
        ("marginal fit ordering", marginal_ordering),
        ("Monte Carlo convergence", mc_convergence),
        ("fit round trip", fit_round_trip),
        ("TES pipeline", tes_pipeline),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!(
            "acceptance {:>2} {} {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tmsv::estimation::{fit_parameters, CountMatrix, DetectorSharing, FitConfig};
use tmsv::mc::{simulate_run, tv_distance_padded, ProtocolConfig, Sampling};
use tmsv::tes::{assign_photon_numbers, fit_mixture, project_all, synth_trace, PulseTemplate, Trace};
use tmsv::witness::{marginal, Mode};
use tmsv::{
    build_subtracted_state, detected_joint_pnd, detected_joint_pnd_auto, Config, DetectorModel,
    JointPnd, PumpParams, SqueezingSpec, SubtractionSpec, WitnessReport,
};

use crate::io::{self, fmt_f64};
use crate::report::{floats, int, Report};
use crate::{plots, CliError, FitArgs, McArgs, PredictArgs, ReportArgs, SqueezingArgs, TesArgs};

/// Sample spacing of the built-in pulse template.
const TRACE_PERIOD: f64 = 1e-8;
const TEMPLATE_RISE: f64 = 2e-8;
const TEMPLATE_DECAY: f64 = 1.5e-7;

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))
}

fn finish(report: &Report, dir: &Path) -> Result<String, CliError> {
    let text = report.render();
    io::write_text(&dir.join("report.toml"), &text)?;
    Ok(text)
}

fn squeezing(args: &SqueezingArgs) -> Result<SqueezingSpec, CliError> {
    match (&args.z, &args.pump) {
        (Some(z), None) => Ok(SqueezingSpec::from_z(*z)?),
        (None, Some(p)) => {
            let [chi_eff, omega_p, length, intensity, n0] = p[..] else {
                return Err(CliError::Input(format!(
                    "--pump takes 5 values chi_eff,omega_p,length,intensity,n0; got {}",
                    p.len()
                )));
            };
            Ok(SqueezingSpec::from_pump(PumpParams {
                chi_eff,
                omega_p,
                length,
                intensity,
                n0,
            })?)
        }
        _ => Err(CliError::Input("give exactly one of --z and --pump".into())),
    }
}

fn write_marginals(path: &Path, pnd: &JointPnd) -> Result<(), CliError> {
    let s = marginal(pnd, Mode::Signal);
    let i = marginal(pnd, Mode::Idler);
    io::write_columns(
        path,
        &["n", "signal", "idler"],
        &[
            (0..s.len()).map(|n| n.to_string()).collect(),
            s.iter().map(|v| fmt_f64(*v)).collect(),
            i.iter().map(|v| fmt_f64(*v)).collect(),
        ],
    )
}

fn witness_sections(r: &mut Report, prefix: &str, pnd: &JointPnd) -> Result<(), CliError> {
    let w = WitnessReport::from_pnd(pnd, Config::default().zero_band)?;
    let sec = format!("{prefix}witness");
    r.set(&sec, "agarwal_defined", w.agarwal.is_some());
    r.set_opt(&sec, "agarwal", w.agarwal);
    r.set(&sec, "det_m", w.det_m);
    r.set(&sec, "min_eigenvalue", w.min_eigenvalue);
    r.set(&sec, "cauchy_schwarz_violated", w.cauchy_schwarz_violated);
    r.set(&sec, "det_negative", w.det_negative);
    r.set(&sec, "eigenvalue_negative", w.eigenvalue_negative);
    let fm = format!("{sec}.factorial_moments");
    for u in 0..3 {
        for v in 0..3 {
            if u + v <= 2 {
                r.set(&fm, &format!("f{u}{v}"), w.moments.get(u, v));
            }
        }
    }
    for (name, fits, mode) in [
        ("signal", &w.signal_fits, Mode::Signal),
        ("idler", &w.idler_fits, Mode::Idler),
    ] {
        let sec = format!("{prefix}marginals.{name}");
        let pmf = marginal(pnd, mode);
        let mean: f64 = pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        r.set(&sec, "mean", mean);
        for fit in fits.iter() {
            let model = fit.model.name();
            r.set(&sec, &format!("{model}_mean"), fit.mean);
            r.set_opt(&sec, &format!("{model}_r2"), fit.r_squared);
        }
    }
    Ok(())
}

fn distribution_section(r: &mut Report, pnd: &JointPnd) {
    r.set("distribution", "n_max", int(pnd.n_max()));
    r.set("distribution", "mass", pnd.total());
    r.set("distribution", "p00", pnd.get(0, 0));
}

pub fn predict(a: &PredictArgs) -> Result<String, CliError> {
    let spec = squeezing(&a.squeezing)?;
    let det = DetectorModel::new(a.detector.eta, a.detector.nu)?;
    let cfg = Config::default().with_tail_tol(a.tail_tol);
    cfg.validate()?;
    match &a.l {
        None => predict_one(a, &spec, SubtractionSpec::new(a.l1, a.l2), &det, &cfg, &a.out.out_dir),
        Some(ls) if ls.is_empty() => Err(CliError::Input("--l needs at least one value".into())),
        Some(ls) => {
            let mut text = String::new();
            for &l in ls {
                let dir = a.out.out_dir.join(format!("l{l}"));
                text.push_str(&format!("# l = {l}\n"));
                text.push_str(&predict_one(a, &spec, SubtractionSpec::symmetric(l), &det, &cfg, &dir)?);
            }
            Ok(text)
        }
    }
}

fn predict_one(
    a: &PredictArgs,
    spec: &SqueezingSpec,
    sub: SubtractionSpec,
    det: &DetectorModel,
    cfg: &Config,
    dir: &Path,
) -> Result<String, CliError> {
    prepare_dir(dir)?;
    let state = build_subtracted_state(spec.z(), sub, cfg)?;
    let pnd = match a.nmax {
        Some(n) => detected_joint_pnd(&state, det, det, n),
        None => detected_joint_pnd_auto(&state, det, det, cfg.tail_tol),
    };

    let mut r = Report::new("predict", a.out.stamp);
    r.set("inputs", "z", spec.z());
    if let Some(p) = spec.pump() {
        r.set("inputs.pump", "chi_eff", p.chi_eff);
        r.set("inputs.pump", "omega_p", p.omega_p);
        r.set("inputs.pump", "length", p.length);
        r.set("inputs.pump", "intensity", p.intensity);
        r.set("inputs.pump", "n0", p.n0);
    }
    r.set("inputs", "l1", int(sub.signal));
    r.set("inputs", "l2", int(sub.idler));
    r.set("inputs", "eta", det.eta());
    r.set("inputs", "nu", det.nu());
    match a.nmax {
        Some(n) => r.set("inputs", "nmax", int(n)),
        None => r.set("inputs", "nmax", "auto"),
    }
    r.set("inputs", "tail_tol", cfg.tail_tol);
    r.set("state", "j_min", int(state.j_min()));
    r.set("state", "j_max", int(state.j_max()));
    r.set("state", "tail_mass", state.tail_mass());
    r.set("state", "mean_signal", state.mean_signal());
    r.set("state", "mean_idler", state.mean_idler());
    r.set("state", "degenerate_limit", state.is_degenerate_limit());
    distribution_section(&mut r, &pnd);
    witness_sections(&mut r, "", &pnd)?;

    io::write_matrix_f64(&dir.join("joint.csv"), &pnd.rows())?;
    write_marginals(&dir.join("marginals.csv"), &pnd)?;
    if a.out.emit_plots {
        plots::joint(dir, "joint", &pnd, &format!("z = {}, l = ({}, {})", spec.z(), sub.signal, sub.idler))?;
        plots::marginals(dir, "marginals", &pnd)?;
    }
    finish(&r, dir)
}

pub fn mc(a: &McArgs) -> Result<String, CliError> {
    let dir = &a.out.out_dir;
    prepare_dir(dir)?;
    let sub = SubtractionSpec::new(a.l1, a.l2);
    let main = DetectorModel::new(a.eta, a.nu)?;
    let tap = DetectorModel::new(a.tap_eta.unwrap_or(a.eta), a.tap_nu.unwrap_or(a.nu))?;
    let cfg = ProtocolConfig {
        z: a.z,
        tap_transmission: a.tap_t,
        tap_detector: tap,
        main_detector: main,
        condition: sub,
        shots: a.shots,
        seed: a.seed,
        sampling: if a.heralded { Sampling::Heralded } else { Sampling::Pulses },
    };
    let state_cfg = Config::default().with_tail_tol(a.tail_tol);
    state_cfg.validate()?;
    let run = simulate_run(&cfg)?;

    // tap loss folded into one efficiency per mode
    let folded = DetectorModel::new(a.tap_t * a.eta, a.nu)?;
    let state = build_subtracted_state(a.z, sub, &state_cfg)?;
    let model = detected_joint_pnd_auto(&state, &folded, &folded, a.tail_tol);

    let mut r = Report::new("mc", a.out.stamp);
    r.set("inputs", "z", a.z);
    r.set("inputs", "l1", int(a.l1));
    r.set("inputs", "l2", int(a.l2));
    r.set("inputs", "eta", a.eta);
    r.set("inputs", "nu", a.nu);
    r.set("inputs", "tap_t", a.tap_t);
    r.set("inputs", "tap_eta", tap.eta());
    r.set("inputs", "tap_nu", tap.nu());
    r.set("inputs", "shots", int(a.shots));
    r.set("inputs", "sampling", if a.heralded { "heralded" } else { "pulses" });
    r.set("inputs", "seed", int(a.seed));
    r.set("inputs", "tail_tol", a.tail_tol);
    if a.heralded && run.acceptance_rate > 0.0 {
        // sampled alongside the accepted events; may exceed any integer type
        r.set("run", "pulses", run.accepted as f64 / run.acceptance_rate);
    } else {
        r.set("run", "pulses", int(run.shots));
    }
    r.set("run", "accepted", int(run.accepted));
    r.set("run", "acceptance_rate", run.acceptance_rate);
    r.set_opt("run", "herald_probability", run.herald_probability);
    r.set("run", "empty", run.is_empty());
    r.set("model", "z", a.z);
    r.set("model", "eta_folded", folded.eta());
    r.set("model", "nu", folded.nu());

    let rows = if run.is_empty() { vec![vec![0]] } else { run.counts.rows() };
    io::write_matrix_u64(&dir.join("counts.csv"), &rows)?;
    io::write_matrix_f64(&dir.join("analytic.csv"), &model.rows())?;
    if let Some(emp) = &run.empirical {
        r.set("comparison", "tv_distance", tv_distance_padded(emp, &model));
        io::write_matrix_f64(&dir.join("empirical.csv"), &emp.rows())?;
        distribution_section(&mut r, emp);
        // low-count runs can leave a witness undefined
        if witness_sections(&mut r, "empirical.", emp).is_err() {
            r.set("empirical", "witness_defined", false);
        }
        if a.out.emit_plots {
            plots::joint(dir, "empirical", emp, "Monte Carlo")?;
            plots::joint(dir, "analytic", &model, "folded model")?;
        }
    }
    finish(&r, dir)
}

pub fn fit(a: &FitArgs) -> Result<String, CliError> {
    let dir = &a.out.out_dir;
    prepare_dir(dir)?;
    let rows = io::read_matrix_u64(&a.input)?;
    let counts = CountMatrix::from_rows(&rows, None)?;
    let sub = SubtractionSpec::new(a.l1, a.l2);
    if (1..10).contains(&a.bootstrap) {
        return Err(CliError::Input(format!(
            "--bootstrap needs 0 or at least 10 resamples, got {}",
            a.bootstrap
        )));
    }
    let sharing = if a.per_mode { DetectorSharing::PerMode } else { DetectorSharing::Shared };
    let cfg = FitConfig {
        bootstrap: a.bootstrap,
        seed: a.seed,
        sharing,
        ..FitConfig::default()
    };
    let fit = fit_parameters(&counts, sub, &cfg)?;

    let mut r = Report::new("fit", a.out.stamp);
    r.set("inputs", "in", a.input.display().to_string());
    r.set("inputs", "l1", int(a.l1));
    r.set("inputs", "l2", int(a.l2));
    r.set("inputs", "bootstrap", int(a.bootstrap));
    r.set("inputs", "seed", int(a.seed));
    r.set("inputs", "per_mode", a.per_mode);
    r.set("data", "total", int(counts.total()));
    r.set("data", "occupied_cells", int(counts.occupied().len()));
    r.set("data", "n_max", int(counts.n_max()));
    let put = |r: &mut Report, sec: &str, p: &tmsv::estimation::FitParams| {
        r.set(sec, "z", p.z);
        if a.per_mode {
            r.set(sec, "eta_signal", p.eta_signal);
            r.set(sec, "eta_idler", p.eta_idler);
            r.set(sec, "nu_signal", p.nu_signal);
            r.set(sec, "nu_idler", p.nu_idler);
        } else {
            r.set(sec, "eta", p.eta_signal);
            r.set(sec, "nu", p.nu_signal);
        }
    };
    put(&mut r, "fit", &fit.params);
    r.set("fit", "nll", fit.nll);
    r.set("fit", "converged", fit.converged);
    r.set("fit", "iterations", int(fit.iterations));
    r.set("fit", "degenerate", fit.degenerate);
    r.set("fit", "nu_pinned", fit.nu_pinned);
    r.set("fit", "floored", fit.floored);
    if let Some(se) = &fit.std_errors {
        put(&mut r, "fit.std_errors", se);
    }
    finish(&r, dir)
}

fn template(samples: usize) -> Result<PulseTemplate, CliError> {
    Ok(PulseTemplate::double_exponential(samples, TRACE_PERIOD, TEMPLATE_RISE, TEMPLATE_DECAY)?)
}

pub fn tes(a: &TesArgs) -> Result<String, CliError> {
    let dir = &a.out.out_dir;
    prepare_dir(dir)?;
    let tmpl = template(a.samples)?;
    match (&a.input, a.synth) {
        (_, Some(n)) => tes_synth(a, n, &tmpl, dir),
        (Some(path), None) => tes_analyse(a, path, &tmpl, dir),
        (None, None) => Err(CliError::Input("give --in or --synth".into())),
    }
}

fn tes_synth(a: &TesArgs, n: usize, tmpl: &PulseTemplate, dir: &Path) -> Result<String, CliError> {
    if n == 0 {
        return Err(CliError::Input("--synth needs at least one trace".into()));
    }
    let pick = WeightedIndex::new(&a.pmf)
        .map_err(|e| CliError::Input(format!("--pmf: {e}")))?;
    let total: f64 = a.pmf.iter().sum();
    if !(a.noise >= 0.0 && a.noise.is_finite()) {
        return Err(CliError::Input("--noise must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut realized = vec![0u64; a.pmf.len()];
    let mut traces = Vec::with_capacity(n);
    for _ in 0..n {
        let k = pick.sample(&mut rng);
        realized[k] += 1;
        let t = synth_trace(k as u32, tmpl, a.amplitude, a.noise, TRACE_PERIOD, &mut rng);
        traces.push(t.samples().to_vec());
    }
    io::write_traces(&dir.join("traces.csv"), &traces)?;
    io::write_columns(
        &dir.join("true_pmf.csv"),
        &["n", "pmf", "realized"],
        &[
            (0..a.pmf.len()).map(|k| k.to_string()).collect(),
            a.pmf.iter().map(|p| fmt_f64(p / total)).collect(),
            realized.iter().map(|c| fmt_f64(*c as f64 / n as f64)).collect(),
        ],
    )?;

    let mut r = Report::new("tes", a.out.stamp);
    r.set("synth", "traces", int(n));
    r.set("synth", "samples", int(a.samples));
    r.set("synth", "amplitude", a.amplitude);
    r.set("synth", "noise", a.noise);
    r.set("synth", "separation_over_sigma", a.amplitude / a.noise);
    r.set("synth", "seed", int(a.seed));
    r.set("synth", "pmf", floats(&a.pmf.iter().map(|p| p / total).collect::<Vec<_>>()));
    finish(&r, dir)
}

fn tes_analyse(a: &TesArgs, path: &Path, tmpl: &PulseTemplate, dir: &Path) -> Result<String, CliError> {
    let raw = io::read_traces(path)?;
    if raw[0].len() < tmpl.len() {
        return Err(CliError::Input(format!(
            "records hold {} samples but the template needs {} (see --samples)",
            raw[0].len(),
            tmpl.len()
        )));
    }
    let traces = raw
        .into_iter()
        .map(|s| Trace::new(s, TRACE_PERIOD))
        .collect::<Result<Vec<_>, _>>()?;
    let energies = project_all(&traces, tmpl)?;
    let mix = fit_mixture(&energies, a.kmax)?;
    let (labels, dist) = assign_photon_numbers(&energies, &mix);

    io::write_columns(
        &dir.join("energies.csv"),
        &["index", "energy", "photons"],
        &[
            (0..energies.len()).map(|i| i.to_string()).collect(),
            energies.iter().map(|e| fmt_f64(*e)).collect(),
            labels.iter().map(|k| k.to_string()).collect(),
        ],
    )?;
    io::write_columns(
        &dir.join("distribution.csv"),
        &["n", "probability"],
        &[
            (0..dist.len()).map(|k| k.to_string()).collect(),
            dist.iter().map(|p| fmt_f64(*p)).collect(),
        ],
    )?;

    let mut r = Report::new("tes", a.out.stamp);
    r.set("inputs", "in", path.display().to_string());
    r.set("inputs", "records", int(traces.len()));
    r.set("inputs", "samples", int(a.samples));
    r.set("inputs", "kmax", int(a.kmax));
    r.set("mixture", "converged", mix.converged);
    r.set("mixture", "iterations", int(mix.iterations));
    r.set("mixture", "log_likelihood", mix.log_likelihood);
    r.set("mixture", "weights", floats(&mix.weights()));
    r.set("mixture", "means", floats(&mix.means()));
    r.set("mixture", "sds", floats(&mix.sds()));
    r.set("distribution", "probabilities", floats(&dist));
    r.set("distribution", "mean", dist.iter().enumerate().map(|(k, p)| k as f64 * p).sum::<f64>());
    if a.out.emit_plots {
        plots::histogram(dir, "energies", &energies, 200)?;
    }
    finish(&r, dir)
}

pub fn report(a: &ReportArgs) -> Result<String, CliError> {
    let dir = &a.out.out_dir;
    prepare_dir(dir)?;
    let rows = io::read_matrix_f64(&a.input)?;
    let raw = JointPnd::from_rows(&rows)?;
    if !(raw.total() > 0.0) {
        return Err(CliError::Input("distribution has zero mass".into()));
    }
    let pnd = raw.normalized()?;
    let mut r = Report::new("report", a.out.stamp);
    r.set("inputs", "in", a.input.display().to_string());
    r.set("inputs", "mass", raw.total());
    distribution_section(&mut r, &pnd);
    witness_sections(&mut r, "", &pnd)?;
    if a.out.emit_plots {
        plots::joint(dir, "joint", &pnd, "joint distribution")?;
        plots::marginals(dir, "marginals", &pnd)?;
    }
    finish(&r, dir)
}

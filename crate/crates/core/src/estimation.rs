//! Maximum-likelihood estimation of `(z, eta, nu)` from joint click counts.
//!
//! The likelihood is multinomial over `(n, m)` cells with probabilities from
//! [`crate::pnd`]. A coarse grid search seeds a bounded Nelder-Mead simplex;
//! uncertainties come from a parametric-free multinomial bootstrap.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::config::Config;
use crate::detector::{detector_povm, DetectorModel};
use crate::error::{Error, Result};
use crate::state::{build_subtracted_state, SubtractionSpec};

/// Model probabilities below this are floored before taking the log.
pub const PROB_FLOOR: f64 = 1e-300;

/// Non-negative integer counts `c[n][m]` out of `shots` trials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    n_max: usize,
    counts: Vec<u64>,
    shots: u64,
}

impl CountMatrix {
    /// `shots` defaults to the sum of the counts.
    pub fn from_rows(rows: &[Vec<u64>], shots: Option<u64>) -> Result<Self> {
        let width = rows.iter().map(Vec::len).max().unwrap_or(0).max(rows.len());
        if width == 0 {
            return Err(Error::input("empty count matrix"));
        }
        let mut counts = vec![0; width * width];
        for (n, row) in rows.iter().enumerate() {
            for (m, &c) in row.iter().enumerate() {
                counts[n * width + m] = c;
            }
        }
        let total: u64 = counts.iter().sum();
        let shots = shots.unwrap_or(total);
        if shots < total {
            return Err(Error::input(format!("{total} counts exceed {shots} shots")));
        }
        Ok(CountMatrix {
            n_max: width - 1,
            counts,
            shots,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, n: usize, m: usize) -> u64 {
        if n > self.n_max || m > self.n_max {
            0
        } else {
            self.counts[n * (self.n_max + 1) + m]
        }
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.n_max + 1).map(<[u64]>::to_vec).collect()
    }

    /// `(n, m, count)` for every occupied cell.
    pub fn occupied(&self) -> Vec<(usize, usize, u64)> {
        let w = self.n_max + 1;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i / w, i % w, c))
            .collect()
    }

    /// Multinomial resample with the same total, cell probabilities `c / N`.
    pub fn resample(&self, rng: &mut ChaCha8Rng) -> CountMatrix {
        let mut remaining = self.total();
        let mut mass = remaining as f64;
        let mut counts = vec![0; self.counts.len()];
        for (slot, &c) in counts.iter_mut().zip(&self.counts) {
            if c == 0 || remaining == 0 {
                continue;
            }
            let p = (c as f64 / mass).min(1.0);
            let x = if p >= 1.0 {
                remaining
            } else {
                Binomial::new(remaining, p).expect("valid probability").sample(rng)
            };
            *slot = x;
            remaining -= x;
            mass -= c as f64;
        }
        CountMatrix {
            n_max: self.n_max,
            counts,
            shots: self.shots,
        }
    }
}

/// Whether signal and idler share one `(eta, nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectorSharing {
    #[default]
    Shared,
    PerMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub z_bounds: (f64, f64),
    pub eta_bounds: (f64, f64),
    pub nu_bounds: (f64, f64),
    /// Grid points per parameter in the coarse search.
    pub grid: usize,
    /// Simplex diameter (parameter units) at which refinement stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Bootstrap resamples; 0 disables the bootstrap.
    pub bootstrap: usize,
    pub seed: u64,
    pub sharing: DetectorSharing,
    /// Truncation settings for the model state.
    pub state: Config,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            z_bounds: (0.0, 0.95),
            eta_bounds: (1e-3, 1.0),
            nu_bounds: (0.0, 0.5),
            grid: 9,
            tolerance: 1e-6,
            max_iterations: 4000,
            bootstrap: 0,
            seed: 0,
            sharing: DetectorSharing::Shared,
            state: Config::default().with_tail_tol(1e-12).with_j_cap(600),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ordered(self.z_bounds) || self.z_bounds.0 < 0.0 || self.z_bounds.1 >= 1.0 {
            return Err(Error::domain("z bounds must be ordered within [0, 1)"));
        }
        if !ordered(self.eta_bounds) || self.eta_bounds.0 <= 0.0 || self.eta_bounds.1 > 1.0 {
            return Err(Error::domain("eta bounds must be ordered within (0, 1]"));
        }
        if !ordered(self.nu_bounds) || self.nu_bounds.0 < 0.0 {
            return Err(Error::domain("nu bounds must be ordered and non-negative"));
        }
        if self.grid < 2 || !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::domain("grid >= 2, tolerance > 0 and max_iterations > 0 required"));
        }
        self.state.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub z: f64,
    pub eta_signal: f64,
    pub eta_idler: f64,
    pub nu_signal: f64,
    pub nu_idler: f64,
}

impl FitParams {
    pub fn shared(z: f64, eta: f64, nu: f64) -> Self {
        FitParams {
            z,
            eta_signal: eta,
            eta_idler: eta,
            nu_signal: nu,
            nu_idler: nu,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta_signal
    }

    pub fn nu(&self) -> f64 {
        self.nu_signal
    }

    fn to_vec(self, sharing: DetectorSharing) -> Vec<f64> {
        match sharing {
            DetectorSharing::Shared => vec![self.z, self.eta_signal, self.nu_signal],
            DetectorSharing::PerMode => vec![
                self.z,
                self.eta_signal,
                self.eta_idler,
                self.nu_signal,
                self.nu_idler,
            ],
        }
    }

    fn from_slice(x: &[f64], sharing: DetectorSharing) -> Self {
        match sharing {
            DetectorSharing::Shared => FitParams::shared(x[0], x[1], x[2]),
            DetectorSharing::PerMode => FitParams {
                z: x[0],
                eta_signal: x[1],
                eta_idler: x[2],
                nu_signal: x[3],
                nu_idler: x[4],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: FitParams,
    pub nll: f64,
    /// Bootstrap standard deviations, when requested.
    pub std_errors: Option<FitParams>,
    pub converged: bool,
    pub iterations: usize,
    /// At most one occupied cell: the data cannot constrain the model.
    pub degenerate: bool,
    /// The dark-count estimate sits on its lower bound.
    pub nu_pinned: bool,
    /// Some observed cell had model probability below [`PROB_FLOOR`].
    pub floored: bool,
}

/// Likelihood value and whether any cell hit the probability floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nll {
    pub value: f64,
    pub floored: bool,
}

/// Evaluates the model likelihood over the occupied cells only.
struct Likelihood<'a> {
    cells: Vec<(usize, usize, u64)>,
    reach: usize,
    sub: SubtractionSpec,
    state_cfg: &'a Config,
}

impl<'a> Likelihood<'a> {
    fn new(counts: &CountMatrix, sub: SubtractionSpec, state_cfg: &'a Config) -> Result<Self> {
        let cells = counts.occupied();
        if cells.is_empty() {
            return Err(Error::input("count matrix holds no counts"));
        }
        let reach = cells.iter().map(|&(n, m, _)| n.max(m)).max().unwrap_or(0);
        Ok(Likelihood {
            cells,
            reach,
            sub,
            state_cfg,
        })
    }

    fn eval(&self, p: &FitParams) -> Result<Nll> {
        let state = build_subtracted_state(p.z, self.sub, self.state_cfg)?;
        let det_s = DetectorModel::new(p.eta_signal, p.nu_signal)?;
        let det_i = DetectorModel::new(p.eta_idler, p.nu_idler)?;
        let povm_s = detector_povm(&det_s, state.j_max() - self.sub.signal, self.reach);
        let povm_i = detector_povm(&det_i, state.j_max() - self.sub.idler, self.reach);
        let weights: Vec<(usize, f64)> = state.weights().collect();
        let mut value = 0.0;
        let mut floored = false;
        for &(n, m, c) in &self.cells {
            let prob: f64 = weights
                .iter()
                .map(|&(j, w)| {
                    w * povm_s.get(n, state.signal_photons(j)) * povm_i.get(m, state.idler_photons(j))
                })
                .sum();
            if prob < PROB_FLOOR {
                floored = true;
            }
            value -= c as f64 * prob.max(PROB_FLOOR).ln();
        }
        Ok(Nll { value, floored })
    }
}

/// `-sum c[n][m] ln p_model(n, m)` with shared detector parameters.
pub fn negative_log_likelihood(
    counts: &CountMatrix,
    z: f64,
    eta: f64,
    nu: f64,
    sub: SubtractionSpec,
) -> Result<Nll> {
    let cfg = FitConfig::default().state;
    Likelihood::new(counts, sub, &cfg)?.eval(&FitParams::shared(z, eta, nu))
}

/// Box constraints in the order of [`FitParams::to_vec`].
fn bounds(cfg: &FitConfig) -> Vec<(f64, f64)> {
    match cfg.sharing {
        DetectorSharing::Shared => vec![cfg.z_bounds, cfg.eta_bounds, cfg.nu_bounds],
        DetectorSharing::PerMode => vec![
            cfg.z_bounds,
            cfg.eta_bounds,
            cfg.eta_bounds,
            cfg.nu_bounds,
            cfg.nu_bounds,
        ],
    }
}

struct Minimum {
    x: Vec<f64>,
    value: f64,
    converged: bool,
    iterations: usize,
}

/// Nelder-Mead on the box `bnds`, with trial points clamped into the box.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    start: &[f64],
    step: &[f64],
    bnds: &[(f64, f64)],
    tol: f64,
    max_iter: usize,
) -> Minimum {
    let dim = start.len();
    let clamp = |x: &mut Vec<f64>| {
        for (v, &(lo, hi)) in x.iter_mut().zip(bnds) {
            *v = v.clamp(lo, hi);
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut base = start.to_vec();
    clamp(&mut base);
    simplex.push(base.clone());
    for i in 0..dim {
        let mut v = base.clone();
        // step away from the nearer bound
        let (lo, hi) = bnds[i];
        v[i] = if v[i] + step[i] <= hi { v[i] + step[i] } else { (v[i] - step[i]).max(lo) };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diameter < tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|v| v[k]).sum::<f64>() / dim as f64)
            .collect();
        let toward = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            clamp(&mut p);
            p
        };

        let reflected = toward(1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = toward(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[dim] {
            let c = toward(0.5);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = toward(-0.5);
            let fc = f(&c);
            (c, fc)
        };
        if fc < values[dim].min(fr) {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=dim {
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(v, b)| b + 0.5 * (v - b))
                .collect();
            values[i] = f(&shrunk);
            simplex[i] = shrunk;
        }
    }
    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        converged,
        iterations,
    }
}

fn linspace((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Refines from `start` and restarts once from the optimum.
fn refine(lik: &Likelihood, cfg: &FitConfig, start: FitParams, step_frac: f64) -> (Minimum, bool) {
    let bnds = bounds(cfg);
    let mut floored = false;
    let mut objective = |x: &[f64]| match lik.eval(&FitParams::from_slice(x, cfg.sharing)) {
        Ok(nll) => {
            floored |= nll.floored;
            nll.value
        }
        Err(_) => f64::INFINITY,
    };
    let steps: Vec<f64> = bnds.iter().map(|(lo, hi)| step_frac * (hi - lo)).collect();
    let first = nelder_mead(
        &mut objective,
        &start.to_vec(cfg.sharing),
        &steps,
        &bnds,
        cfg.tolerance,
        cfg.max_iterations,
    );
    let small: Vec<f64> = steps.iter().map(|s| s * 0.1).collect();
    let second = nelder_mead(
        &mut objective,
        &first.x,
        &small,
        &bnds,
        cfg.tolerance,
        cfg.max_iterations.saturating_sub(first.iterations).max(1),
    );
    let best = if second.value <= first.value {
        Minimum {
            converged: first.converged && second.converged,
            iterations: first.iterations + second.iterations,
            ..second
        }
    } else {
        Minimum {
            converged: false,
            iterations: first.iterations + second.iterations,
            ..first
        }
    };
    // report flooring at the optimum only
    let at_best = lik
        .eval(&FitParams::from_slice(&best.x, cfg.sharing))
        .map(|n| n.floored)
        .unwrap_or(floored);
    (best, at_best)
}

fn fit_from(
    lik: &Likelihood,
    counts: &CountMatrix,
    cfg: &FitConfig,
    start: FitParams,
    step_frac: f64,
) -> FitResult {
    let (best, floored) = refine(lik, cfg, start, step_frac);
    let params = FitParams::from_slice(&best.x, cfg.sharing);
    let nu_lo = cfg.nu_bounds.0;
    FitResult {
        params,
        nll: best.value,
        std_errors: None,
        converged: best.converged && best.value.is_finite(),
        iterations: best.iterations,
        degenerate: counts.occupied().len() <= 1,
        nu_pinned: params.nu_signal <= nu_lo + cfg.tolerance
            || params.nu_idler <= nu_lo + cfg.tolerance,
        floored,
    }
}

/// Coarse grid search followed by simplex refinement; runs the bootstrap
/// when `cfg.bootstrap > 0`.
pub fn fit_parameters(counts: &CountMatrix, sub: SubtractionSpec, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if counts.total() < 100 {
        return Err(Error::input(format!(
            "at least 100 counts needed for a fit, got {}",
            counts.total()
        )));
    }
    let lik = Likelihood::new(counts, sub, &cfg.state)?;

    let mut start = FitParams::shared(cfg.z_bounds.0, cfg.eta_bounds.1, cfg.nu_bounds.0);
    let mut best = f64::INFINITY;
    for &z in &linspace(cfg.z_bounds, cfg.grid) {
        for &eta in &linspace(cfg.eta_bounds, cfg.grid) {
            for &nu in &linspace(cfg.nu_bounds, cfg.grid.div_ceil(2).max(2)) {
                let p = FitParams::shared(z, eta, nu);
                if let Ok(v) = lik.eval(&p) {
                    if v.value < best {
                        best = v.value;
                        start = p;
                    }
                }
            }
        }
    }
    if !best.is_finite() {
        return Err(Error::Numeric("likelihood infinite over the whole grid".into()));
    }

    let grid_step = 1.0 / (cfg.grid - 1) as f64;
    let mut result = fit_from(&lik, counts, cfg, start, grid_step);
    if cfg.bootstrap > 0 {
        result.std_errors = Some(bootstrap_around(counts, sub, cfg, &result)?);
    }
    Ok(result)
}

/// Fits, then resamples `cfg.bootstrap` times and refits each resample.
pub fn bootstrap_errors(counts: &CountMatrix, sub: SubtractionSpec, cfg: &FitConfig) -> Result<FitParams> {
    if cfg.bootstrap < 10 {
        return Err(Error::input(format!(
            "bootstrap needs at least 10 resamples, got {}",
            cfg.bootstrap
        )));
    }
    let fit = fit_parameters(counts, sub, cfg)?;
    fit.std_errors
        .ok_or_else(|| Error::Numeric("bootstrap produced no errors".into()))
}

fn bootstrap_around(
    counts: &CountMatrix,
    sub: SubtractionSpec,
    cfg: &FitConfig,
    center: &FitResult,
) -> Result<FitParams> {
    if cfg.bootstrap < 10 {
        return Err(Error::input(format!(
            "bootstrap needs at least 10 resamples, got {}",
            cfg.bootstrap
        )));
    }
    if !center.converged {
        return Err(Error::Numeric("bootstrap requires a converged fit".into()));
    }
    let refit = |b: usize| -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(b as u64);
        let sample = counts.resample(&mut rng);
        let lik = Likelihood::new(&sample, sub, &cfg.state)?;
        let fit = fit_from(&lik, &sample, cfg, center.params, 0.02);
        Ok(fit.params.to_vec(DetectorSharing::PerMode))
    };
    let draws = map_resamples(cfg.bootstrap, refit)?;

    let dim = draws[0].len();
    let n = draws.len() as f64;
    let sd: Vec<f64> = (0..dim)
        .map(|k| {
            let mean = draws.iter().map(|d| d[k]).sum::<f64>() / n;
            (draws.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        })
        .collect();
    Ok(FitParams::from_slice(&sd, DetectorSharing::PerMode))
}

#[cfg(feature = "parallel")]
fn map_resamples<F>(b: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync + Send,
{
    use rayon::prelude::*;
    (0..b).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_resamples<F>(b: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize) -> Result<Vec<f64>>,
{
    (0..b).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pnd::detected_joint_pnd_auto;

    fn model_counts(z: f64, eta: f64, nu: f64, l: usize, scale: f64) -> CountMatrix {
        let s = build_subtracted_state(z, SubtractionSpec::symmetric(l), &Config::default()).unwrap();
        let d = DetectorModel::new(eta, nu).unwrap();
        let p = detected_joint_pnd_auto(&s, &d, &d, 1e-12);
        let rows: Vec<Vec<u64>> = p
            .rows()
            .iter()
            .map(|r| r.iter().map(|v| (v * scale).round() as u64).collect())
            .collect();
        CountMatrix::from_rows(&rows, None).unwrap()
    }

    #[test]
    fn nll_of_single_count_at_the_mode() {
        let s = build_subtracted_state(0.5, SubtractionSpec::symmetric(1), &Config::default()).unwrap();
        let d = DetectorModel::new(0.6, 0.01).unwrap();
        let p = detected_joint_pnd_auto(&s, &d, &d, 1e-12);
        let (n, m, pmax) = p.cells().max_by(|a, b| a.2.total_cmp(&b.2)).unwrap();
        let mut rows = vec![vec![0; n.max(m) + 1]; n.max(m) + 1];
        rows[n][m] = 1;
        let c = CountMatrix::from_rows(&rows, None).unwrap();
        let nll = negative_log_likelihood(&c, 0.5, 0.6, 0.01, SubtractionSpec::symmetric(1)).unwrap();
        assert!((nll.value + pmax.ln()).abs() < 1e-9);
        assert!(!nll.floored);
    }

    #[test]
    fn nll_floors_impossible_cells() {
        // ideal detectors, no dark counts: off-diagonal cells are impossible
        let c = CountMatrix::from_rows(&[vec![0, 5], vec![0, 0]], None).unwrap();
        let nll = negative_log_likelihood(&c, 0.5, 1.0, 0.0, SubtractionSpec::symmetric(0)).unwrap();
        assert!(nll.floored);
        assert!(nll.value.is_finite() && nll.value > 1000.0);
    }

    #[test]
    fn nll_rejects_empty_counts() {
        let c = CountMatrix::from_rows(&[vec![0]], None).unwrap();
        assert!(negative_log_likelihood(&c, 0.5, 1.0, 0.0, SubtractionSpec::default()).is_err());
    }

    #[test]
    fn nll_per_count_approaches_entropy() {
        let scale = 1e9;
        let c = model_counts(0.5, 0.4, 0.01, 1, scale);
        let s = build_subtracted_state(0.5, SubtractionSpec::symmetric(1), &Config::default()).unwrap();
        let d = DetectorModel::new(0.4, 0.01).unwrap();
        let p = detected_joint_pnd_auto(&s, &d, &d, 1e-12);
        let entropy: f64 = p.cells().filter(|c| c.2 > 0.0).map(|c| -c.2 * c.2.ln()).sum();
        let nll = negative_log_likelihood(&c, 0.5, 0.4, 0.01, SubtractionSpec::symmetric(1)).unwrap();
        let per = nll.value / c.total() as f64;
        assert!((per - entropy).abs() < 1e-6, "{per} vs {entropy}");
    }

    #[test]
    fn nelder_mead_minimizes_a_quadratic_in_a_box() {
        let mut f = |x: &[f64]| (x[0] - 0.3).powi(2) + 10.0 * (x[1] + 0.2).powi(2);
        let m = nelder_mead(&mut f, &[0.9, 0.9], &[0.1, 0.1], &[(0.0, 1.0), (0.0, 1.0)], 1e-9, 5000);
        assert!(m.converged);
        assert!((m.x[0] - 0.3).abs() < 1e-6);
        assert!(m.x[1].abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn exact_model_counts_are_recovered() {
        let c = model_counts(0.6, 0.3, 0.002, 1, 1e7);
        let fit = fit_parameters(&c, SubtractionSpec::symmetric(1), &FitConfig::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.params.z - 0.6).abs() < 2e-3, "{:?}", fit.params);
        assert!((fit.params.eta() - 0.3).abs() < 2e-3, "{:?}", fit.params);
        assert!((fit.params.nu() - 0.002).abs() < 5e-4, "{:?}", fit.params);
    }

    #[test]
    fn vacuum_counts_pin_z_at_lower_bound() {
        let c = CountMatrix::from_rows(&[vec![500]], None).unwrap();
        let fit = fit_parameters(&c, SubtractionSpec::symmetric(0), &FitConfig::default()).unwrap();
        assert!(fit.degenerate);
        assert!(fit.params.z < 1e-3, "{:?}", fit.params);
        assert!(fit.nu_pinned);
    }

    #[test]
    fn too_few_counts_are_refused() {
        let c = CountMatrix::from_rows(&[vec![10, 2], vec![3, 7]], None).unwrap();
        assert!(fit_parameters(&c, SubtractionSpec::default(), &FitConfig::default()).is_err());
    }

    #[test]
    fn small_bootstrap_is_refused() {
        let c = model_counts(0.5, 0.5, 0.0, 0, 1e4);
        let cfg = FitConfig {
            bootstrap: 5,
            ..FitConfig::default()
        };
        assert!(matches!(
            bootstrap_errors(&c, SubtractionSpec::default(), &cfg),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn resampling_preserves_total() {
        let c = model_counts(0.5, 0.5, 0.01, 1, 1e5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = c.resample(&mut rng);
        assert_eq!(r.total(), c.total());
        assert_ne!(r, c);
    }

    #[test]
    fn bounds_are_respected() {
        let c = model_counts(0.8, 0.9, 0.0, 0, 1e5);
        let cfg = FitConfig {
            z_bounds: (0.0, 0.5),
            eta_bounds: (0.2, 0.6),
            ..FitConfig::default()
        };
        let fit = fit_parameters(&c, SubtractionSpec::default(), &cfg).unwrap();
        assert!(fit.params.z <= 0.5 && fit.params.eta() >= 0.2 && fit.params.eta() <= 0.6);
        assert!(fit.params.nu() >= 0.0 && fit.params.nu() <= 0.5);
    }

    #[test]
    fn fits_are_deterministic() {
        let c = model_counts(0.5, 0.5, 0.01, 1, 1e4);
        let cfg = FitConfig {
            bootstrap: 12,
            seed: 9,
            ..FitConfig::default()
        };
        let a = fit_parameters(&c, SubtractionSpec::symmetric(1), &cfg).unwrap();
        let b = fit_parameters(&c, SubtractionSpec::symmetric(1), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.std_errors.unwrap().z > 0.0);
    }
}

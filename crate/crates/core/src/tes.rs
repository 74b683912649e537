//! Pulse processing for transition-edge-sensor traces: matched filtering to
//! pulse energies, Gaussian-mixture fits of the energy histogram and
//! photon-number assignment.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// One digitized pulse record.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    samples: Vec<f64>,
    sample_period: f64,
}

impl Trace {
    pub fn new(samples: Vec<f64>, sample_period: f64) -> Result<Self> {
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::input("trace contains non-finite samples"));
        }
        if !(sample_period > 0.0) {
            return Err(Error::domain("sample period must be positive"));
        }
        Ok(Trace {
            samples,
            sample_period,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Unit-energy pulse shape plus a white-noise power estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTemplate {
    shape: Vec<f64>,
    noise_power: f64,
}

impl PulseTemplate {
    /// Normalizes `waveform` to unit sum of squares.
    pub fn from_waveform(waveform: &[f64], noise_power: f64) -> Result<Self> {
        let energy: f64 = waveform.iter().map(|v| v * v).sum();
        if waveform.is_empty() || !(energy > 0.0) || !energy.is_finite() {
            return Err(Error::domain("template must be finite with non-zero energy"));
        }
        if !(noise_power >= 0.0) {
            return Err(Error::domain("noise power must be non-negative"));
        }
        let norm = energy.sqrt();
        Ok(PulseTemplate {
            shape: waveform.iter().map(|v| v / norm).collect(),
            noise_power,
        })
    }

    /// `exp(-t/decay) - exp(-t/rise)` sampled from `t = 0`.
    pub fn double_exponential(len: usize, period: f64, rise: f64, decay: f64) -> Result<Self> {
        if !(rise > 0.0 && decay > rise) {
            return Err(Error::domain("need 0 < rise < decay"));
        }
        let wave: Vec<f64> = (0..len)
            .map(|i| {
                let t = i as f64 * period;
                (-t / decay).exp() - (-t / rise).exp()
            })
            .collect();
        Self::from_waveform(&wave, 0.0)
    }

    pub fn shape(&self) -> &[f64] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape.is_empty()
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn energy(&self) -> f64 {
        self.shape.iter().map(|v| v * v).sum()
    }
}

/// `n * amplitude * template` plus white Gaussian noise.
pub fn synth_trace<R: Rng + ?Sized>(
    n_photons: u32,
    tmpl: &PulseTemplate,
    amplitude_per_photon: f64,
    noise_sigma: f64,
    period: f64,
    rng: &mut R,
) -> Trace {
    let scale = n_photons as f64 * amplitude_per_photon;
    let mut samples: Vec<f64> = tmpl.shape.iter().map(|v| scale * v).collect();
    if noise_sigma > 0.0 {
        let noise = Normal::new(0.0, noise_sigma).expect("finite noise sigma");
        for s in &mut samples {
            *s += noise.sample(rng);
        }
    }
    Trace {
        samples,
        sample_period: period,
    }
}

/// Projection onto the template divided by the template energy.
pub fn wiener_project(trace: &Trace, tmpl: &PulseTemplate) -> Result<f64> {
    if trace.len() < tmpl.len() {
        return Err(Error::input(format!(
            "trace of {} samples is shorter than the {}-sample template",
            trace.len(),
            tmpl.len()
        )));
    }
    let dot: f64 = trace.samples.iter().zip(&tmpl.shape).map(|(a, b)| a * b).sum();
    Ok(dot / tmpl.energy())
}

/// Projects every trace; fails on the first incompatible record.
pub fn project_all(traces: &[Trace], tmpl: &PulseTemplate) -> Result<Vec<f64>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        traces.par_iter().map(|t| wiener_project(t, tmpl)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        traces.iter().map(|t| wiener_project(t, tmpl)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

impl Component {
    fn ln_density(&self, x: f64) -> f64 {
        let u = (x - self.mean) / self.sd;
        -0.5 * u * u - self.sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Mixture whose component `k` stands for `k` absorbed photons.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub components: Vec<Component>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl GaussianMixture {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let mix = GaussianMixture {
            components,
            log_likelihood: f64::NAN,
            iterations: 0,
            converged: true,
        };
        mix.validate()?;
        Ok(mix)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::domain("mixture has no components"));
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 || self.components.iter().any(|c| c.weight < 0.0) {
            return Err(Error::domain("mixture weights must be non-negative and sum to 1"));
        }
        if self.components.iter().any(|c| !(c.sd > 0.0) || !c.mean.is_finite()) {
            return Err(Error::domain("component widths must be positive"));
        }
        if self.components.windows(2).any(|w| w[1].mean <= w[0].mean) {
            return Err(Error::domain("component means must increase strictly"));
        }
        Ok(())
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.mean).collect()
    }

    pub fn sds(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.sd).collect()
    }

    /// Component with the largest posterior; ties go to the lower index.
    pub fn classify(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, c) in self.components.iter().enumerate() {
            if c.weight <= 0.0 {
                continue;
            }
            let score = c.weight.ln() + c.ln_density(x);
            if score > best_score {
                best = k;
                best_score = score;
            }
        }
        best
    }
}

const EM_TOL: f64 = 1e-9;
const EM_MAX_ITER: usize = 2000;

fn histogram_peaks(energies: &[f64]) -> (Vec<f64>, f64) {
    let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = ((2.0 * (energies.len() as f64).sqrt()) as usize).clamp(20, 400);
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let mut hist = vec![0.0; bins];
    for &e in energies {
        let b = (((e - lo) / width) as usize).min(bins - 1);
        hist[b] += 1.0;
    }
    let smooth: Vec<f64> = (0..bins)
        .map(|i| {
            let (a, b) = (i.saturating_sub(2), (i + 2).min(bins - 1));
            hist[a..=b].iter().sum::<f64>() / (b - a + 1) as f64
        })
        .collect();
    let top = smooth.iter().copied().fold(0.0, f64::max);

    let mut peaks: Vec<usize> = (0..bins)
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { smooth[i - 1] };
            let right = if i + 1 == bins { f64::NEG_INFINITY } else { smooth[i + 1] };
            smooth[i] > left && smooth[i] >= right && smooth[i] >= 0.01 * top
        })
        .collect();
    // merge neighbours not separated by a real valley
    loop {
        let merge = peaks.windows(2).position(|w| {
            let valley = smooth[w[0]..=w[1]].iter().copied().fold(f64::INFINITY, f64::min);
            valley > 0.6 * smooth[w[0]].min(smooth[w[1]])
        });
        match merge {
            Some(i) => {
                let drop = if smooth[peaks[i]] >= smooth[peaks[i + 1]] { i + 1 } else { i };
                peaks.remove(drop);
            }
            None => break,
        }
    }
    let centres = peaks.iter().map(|&i| lo + (i as f64 + 0.5) * width).collect();
    (centres, width)
}

/// Equally spaced means `k * spacing` anchored at zero energy.
fn initial_ladder(energies: &[f64]) -> f64 {
    let (peaks, width) = histogram_peaks(energies);
    let spread = {
        let n = energies.len() as f64;
        let mean = energies.iter().sum::<f64>() / n;
        (energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    match peaks.as_slice() {
        [a, b, ..] => (b - a).max(width),
        // a lone cluster away from zero is read as the one-photon rung
        [a] if a.abs() > 3.0 * spread.max(width) => a.abs(),
        _ => {
            // a lone cluster at zero: park the other rungs well clear of it
            let hi = energies.iter().copied().fold(0.0, f64::max);
            (8.0 * spread).max(2.0 * hi).max(width)
        }
    }
}

/// Expectation-maximization with `k_max + 1` components started on a
/// photon-number ladder taken from the histogram peaks.
pub fn fit_mixture(energies: &[f64], k_max: usize) -> Result<GaussianMixture> {
    if energies.len() < 50 {
        return Err(Error::input(format!(
            "mixture fit needs at least 50 energies, got {}",
            energies.len()
        )));
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::input("energies must be finite"));
    }
    let spacing = initial_ladder(energies);
    if !(spacing > 0.0) {
        return Err(Error::Numeric("could not locate a photon-number ladder".into()));
    }
    let k = k_max + 1;
    let n = energies.len() as f64;

    let mut comps: Vec<Component> = (0..k)
        .map(|i| Component {
            weight: 0.0,
            mean: i as f64 * spacing,
            sd: spacing / 6.0,
        })
        .collect();
    for &e in energies {
        let i = ((e / spacing).round().max(0.0) as usize).min(k - 1);
        comps[i].weight += 1.0 / n;
    }

    let sd_floor = 1e-6 * spacing;
    let mut resp = vec![0.0; k];
    let mut ll_prev = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut ll = f64::NEG_INFINITY;
    while iterations < EM_MAX_ITER {
        iterations += 1;
        let mut s0 = vec![0.0; k];
        let mut s1 = vec![0.0; k];
        let mut s2 = vec![0.0; k];
        ll = 0.0;
        for &x in energies {
            let mut peak = f64::NEG_INFINITY;
            for (r, c) in resp.iter_mut().zip(&comps) {
                *r = if c.weight > 0.0 {
                    c.weight.ln() + c.ln_density(x)
                } else {
                    f64::NEG_INFINITY
                };
                peak = peak.max(*r);
            }
            let mut sum = 0.0;
            for r in resp.iter_mut() {
                *r = (*r - peak).exp();
                sum += *r;
            }
            ll += peak + sum.ln();
            for i in 0..k {
                let w = resp[i] / sum;
                s0[i] += w;
                s1[i] += w * x;
                s2[i] += w * x * x;
            }
        }
        for i in 0..k {
            comps[i].weight = s0[i] / n;
            if s0[i] > 1e-9 * n {
                let mean = s1[i] / s0[i];
                let var = (s2[i] / s0[i] - mean * mean).max(0.0);
                comps[i].mean = mean;
                comps[i].sd = var.sqrt().max(sd_floor);
            }
        }
        let per_sample = ll / n;
        if (per_sample - ll_prev).abs() < EM_TOL {
            converged = true;
            break;
        }
        ll_prev = per_sample;
    }
    comps.sort_by(|a, b| a.mean.total_cmp(&b.mean));
    // exact renormalization after accumulated rounding
    let total: f64 = comps.iter().map(|c| c.weight).sum();
    for c in &mut comps {
        c.weight /= total;
    }
    let mix = GaussianMixture {
        components: comps,
        log_likelihood: ll,
        iterations,
        converged,
    };
    if mix.components.windows(2).any(|w| w[1].mean <= w[0].mean) {
        return Err(Error::Numeric("mixture components collapsed onto each other".into()));
    }
    Ok(mix)
}

/// MAP photon numbers and their normalized histogram.
pub fn assign_photon_numbers(energies: &[f64], mix: &GaussianMixture) -> (Vec<usize>, Vec<f64>) {
    let labels: Vec<usize> = energies.iter().map(|&e| mix.classify(e)).collect();
    let mut dist = vec![0.0; mix.components.len()];
    for &k in &labels {
        dist[k] += 1.0;
    }
    if !labels.is_empty() {
        let n = labels.len() as f64;
        dist.iter_mut().for_each(|d| *d /= n);
    }
    (labels, dist)
}

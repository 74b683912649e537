//! Photon-subtracted two-mode squeezed vacuum in the Fock basis.
//!
//! Removing `l1` photons from the signal mode and `l2` from the idler of
//! `sum_j z^j |j>_s |j>_i` leaves
//!
//! ```text
//! sum_{j >= max(l1, l2)} B_j |j - l1>_s |j - l2>_i,
//! B_j ∝ z^j j! / sqrt((j - l1)! (j - l2)!)
//! ```
//!
//! Only `|B_j|^2` matters for photon counting, so amplitudes are kept real.

use crate::config::Config;
use crate::error::{Error, Result};

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Pump and waveguide parameters that set the gain of the down-converter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpParams {
    /// Effective nonlinearity of the waveguide.
    pub chi_eff: f64,
    /// Pump angular frequency [rad/s].
    pub omega_p: f64,
    /// Waveguide length [m].
    pub length: f64,
    /// Pump intensity [W/m^2].
    pub intensity: f64,
    /// Refractive index.
    pub n0: f64,
}

impl PumpParams {
    /// Gain `r = chi_eff omega_p L sqrt(I_p) / (2 n0 c)`.
    pub fn gain(&self) -> Result<f64> {
        let positive = [
            ("chi_eff", self.chi_eff),
            ("omega_p", self.omega_p),
            ("length", self.length),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.intensity >= 0.0) || !self.intensity.is_finite() {
            return Err(Error::domain(format!(
                "pump intensity must be non-negative, got {}",
                self.intensity
            )));
        }
        if !(self.n0 >= 1.0) || !self.n0.is_finite() {
            return Err(Error::domain(format!(
                "refractive index must be >= 1, got {}",
                self.n0
            )));
        }
        Ok(self.chi_eff * self.omega_p * self.length * self.intensity.sqrt()
            / (2.0 * self.n0 * SPEED_OF_LIGHT))
    }
}

/// `z = tanh(r)` for the given pump configuration.
pub fn squeezing_from_pump(pump: &PumpParams) -> Result<f64> {
    Ok(pump.gain()?.tanh())
}

/// Squeezing parameter, optionally derived from pump parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingSpec {
    z: f64,
    pump: Option<PumpParams>,
}

impl SqueezingSpec {
    pub fn from_z(z: f64) -> Result<Self> {
        check_z(z)?;
        Ok(SqueezingSpec { z, pump: None })
    }

    pub fn from_pump(pump: PumpParams) -> Result<Self> {
        let z = squeezing_from_pump(&pump)?;
        // tanh saturates to exactly 1.0 in f64 for r > ~19
        check_z(z)?;
        Ok(SqueezingSpec {
            z,
            pump: Some(pump),
        })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn pump(&self) -> Option<&PumpParams> {
        self.pump.as_ref()
    }
}

pub(crate) fn check_z(z: f64) -> Result<()> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::domain(format!("squeezing z must lie in [0, 1), got {z}")));
    }
    Ok(())
}

/// Number of photons removed from each mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SubtractionSpec {
    pub signal: usize,
    pub idler: usize,
}

impl SubtractionSpec {
    pub fn new(signal: usize, idler: usize) -> Self {
        SubtractionSpec { signal, idler }
    }

    pub fn symmetric(l: usize) -> Self {
        SubtractionSpec { signal: l, idler: l }
    }

    pub fn is_symmetric(&self) -> bool {
        self.signal == self.idler
    }

    /// Smallest pair index that survives the subtraction.
    pub fn j_min(&self) -> usize {
        self.signal.max(self.idler)
    }
}

/// Truncated, normalized amplitudes `B_j` for `j = j_min..=j_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockAmplitudes {
    z: f64,
    sub: SubtractionSpec,
    amplitudes: Vec<f64>,
    tail_mass: f64,
    degenerate_limit: bool,
}

impl FockAmplitudes {
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn subtraction(&self) -> SubtractionSpec {
        self.sub
    }

    pub fn j_min(&self) -> usize {
        self.sub.j_min()
    }

    /// Largest pair index kept.
    pub fn j_max(&self) -> usize {
        self.j_min() + self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Amplitude for pair index `j`, zero outside the kept range.
    pub fn amplitude(&self, j: usize) -> f64 {
        j.checked_sub(self.j_min())
            .and_then(|i| self.amplitudes.get(i).copied())
            .unwrap_or(0.0)
    }

    /// Upper bound on the probability discarded by truncation, relative to
    /// the untruncated state.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Set when `z = 0` with photons subtracted: the state is the `z -> 0`
    /// limit, the lowest surviving Fock pair.
    pub fn is_degenerate_limit(&self) -> bool {
        self.degenerate_limit
    }

    /// `(j, |B_j|^2)` over the kept range.
    pub fn weights(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let j0 = self.j_min();
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, b)| (j0 + i, b * b))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|b| b * b).sum()
    }

    /// Photons left in the signal mode for pair index `j`.
    pub fn signal_photons(&self, j: usize) -> usize {
        j - self.sub.signal
    }

    pub fn idler_photons(&self, j: usize) -> usize {
        j - self.sub.idler
    }

    /// Mean photon number `sum_j |B_j|^2 (j - l)` of the signal mode.
    pub fn mean_signal(&self) -> f64 {
        self.weights()
            .map(|(j, w)| w * self.signal_photons(j) as f64)
            .sum()
    }

    pub fn mean_idler(&self) -> f64 {
        self.weights()
            .map(|(j, w)| w * self.idler_photons(j) as f64)
            .sum()
    }

    /// Builds the state on the fixed range `j_min..=j_max`, renormalized.
    pub fn with_truncation(z: f64, sub: SubtractionSpec, j_max: usize) -> Result<Self> {
        check_z(z)?;
        let j_min = sub.j_min();
        if j_max < j_min {
            return Err(Error::domain(format!(
                "truncation {j_max} below the first surviving pair index {j_min}"
            )));
        }
        if z == 0.0 {
            return Ok(Self::zero_squeezing(sub, j_max - j_min + 1));
        }
        let mut series = TermSeries::new(z, sub);
        let mut log_terms = Vec::with_capacity(j_max - j_min + 1);
        log_terms.push(0.0);
        for _ in j_min..j_max {
            log_terms.push(series.advance());
        }
        let next = series.advance();
        let ratio = series.last_ratio();
        Ok(Self::from_log_terms(z, sub, &log_terms, next, ratio))
    }

    fn zero_squeezing(sub: SubtractionSpec, len: usize) -> Self {
        let mut amplitudes = vec![0.0; len];
        amplitudes[0] = 1.0;
        FockAmplitudes {
            z: 0.0,
            sub,
            amplitudes,
            tail_mass: 0.0,
            degenerate_limit: sub.j_min() > 0,
        }
    }

    /// `log_terms[i]` is `ln t_{j_min + i}` relative to an arbitrary origin;
    /// `log_next` is the first discarded term and `ratio` the term ratio
    /// leading to it.
    fn from_log_terms(
        z: f64,
        sub: SubtractionSpec,
        log_terms: &[f64],
        log_next: f64,
        ratio: f64,
    ) -> Self {
        let peak = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let terms: Vec<f64> = log_terms.iter().map(|l| (l - peak).exp()).collect();
        let kept: f64 = terms.iter().sum();
        let tail = if ratio < 1.0 {
            (log_next - peak).exp() / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        let amplitudes = terms.iter().map(|t| (t / kept).sqrt()).collect();
        FockAmplitudes {
            z,
            sub,
            amplitudes,
            tail_mass: tail / (kept + tail),
            degenerate_limit: false,
        }
    }
}

/// Sequential log-terms `ln(z^{2j} j!^2 / ((j-l1)! (j-l2)!))`, starting at
/// `j_min` with value 0.
struct TermSeries {
    ln_z2: f64,
    sub: SubtractionSpec,
    j: usize,
    log_term: f64,
    ratio: f64,
}

impl TermSeries {
    fn new(z: f64, sub: SubtractionSpec) -> Self {
        TermSeries {
            ln_z2: 2.0 * z.ln(),
            sub,
            j: sub.j_min(),
            log_term: 0.0,
            ratio: f64::INFINITY,
        }
    }

    fn advance(&mut self) -> f64 {
        let j1 = (self.j + 1) as f64;
        let step = self.ln_z2 + 2.0 * j1.ln()
            - (j1 - self.sub.signal as f64).ln()
            - (j1 - self.sub.idler as f64).ln();
        self.j += 1;
        self.log_term += step;
        self.ratio = step.exp();
        self.log_term
    }

    /// Ratio `t_j / t_{j-1}` of the most recent step. Non-increasing in `j`,
    /// so it bounds every later ratio.
    fn last_ratio(&self) -> f64 {
        self.ratio
    }
}

/// Builds `a_s^{l1} a_i^{l2} |z>`, extending the truncation until the
/// discarded tail is below `cfg.tail_tol`.
pub fn build_subtracted_state(z: f64, sub: SubtractionSpec, cfg: &Config) -> Result<FockAmplitudes> {
    check_z(z)?;
    cfg.validate()?;
    let j_min = sub.j_min();
    if j_min > cfg.j_cap {
        return Err(Error::Truncation { cap: cfg.j_cap, z });
    }
    if z == 0.0 {
        return Ok(FockAmplitudes::zero_squeezing(sub, 1));
    }

    let mut series = TermSeries::new(z, sub);
    let mut log_terms = vec![0.0];
    let mut peak = 0.0f64;
    let mut kept = 1.0f64; // sum of exp(log_term - peak)
    loop {
        let next = series.advance();
        let ratio = series.last_ratio();
        if ratio < 1.0 {
            let tail = (next - peak).exp() / (1.0 - ratio);
            if tail / (kept + tail) < cfg.tail_tol {
                return Ok(FockAmplitudes::from_log_terms(z, sub, &log_terms, next, ratio));
            }
        }
        if series.j > cfg.j_cap {
            return Err(Error::Truncation { cap: cfg.j_cap, z });
        }
        if next > peak {
            kept = kept * (peak - next).exp() + 1.0;
            peak = next;
        } else {
            kept += (next - peak).exp();
        }
        log_terms.push(next);
    }
}

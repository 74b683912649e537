//! Photon-number-resolving detector with finite efficiency and Poissonian
//! dark counts.

use crate::error::{Error, Result};
use crate::math::{ln_factorials, xlogy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    eta: f64,
    nu: f64,
}

impl DetectorModel {
    /// `eta` in (0, 1], `nu` (mean dark counts per pulse) >= 0.
    pub fn new(eta: f64, nu: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::domain(format!("efficiency must lie in (0, 1], got {eta}")));
        }
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::domain(format!("dark counts must be >= 0, got {nu}")));
        }
        Ok(DetectorModel { eta, nu })
    }

    pub fn ideal() -> Self {
        DetectorModel { eta: 1.0, nu: 0.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// Conditional click distribution `P(n | k)` for `n = 0..=n_max`,
/// `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    k_max: usize,
    n_max: usize,
    // column-major: probs[k * (n_max + 1) + n]
    probs: Vec<f64>,
}

impl Povm {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `P(n | k)`; zero outside the tabulated range of `n`.
    #[inline]
    pub fn get(&self, n: usize, k: usize) -> f64 {
        if n > self.n_max {
            0.0
        } else {
            self.probs[k * (self.n_max + 1) + n]
        }
    }

    /// Distribution of clicks given `k` incident photons.
    pub fn column(&self, k: usize) -> &[f64] {
        let w = self.n_max + 1;
        &self.probs[k * w..(k + 1) * w]
    }
}

/// Tabulates `P(n|k) = sum_j C(k,j) eta^j (1-eta)^(k-j) e^-nu nu^(n-j)/(n-j)!`,
/// binomial loss followed by independent Poissonian dark counts.
///
/// Every factor is evaluated in log space.
pub fn detector_povm(det: &DetectorModel, k_max: usize, n_max: usize) -> Povm {
    let lnf = ln_factorials(k_max.max(n_max));
    let ln_eta = det.eta.ln();
    let ln_loss = (1.0 - det.eta).ln();
    let ln_nu = det.nu.ln();

    let dark: Vec<f64> = (0..=n_max)
        .map(|d| (-det.nu + xlogy(d, ln_nu) - lnf[d]).exp())
        .collect();

    let w = n_max + 1;
    let mut probs = vec![0.0; (k_max + 1) * w];
    let mut loss = vec![0.0; w];
    for k in 0..=k_max {
        let top = k.min(n_max);
        for (i, slot) in loss.iter_mut().enumerate().take(top + 1) {
            *slot = (lnf[k] - lnf[i] - lnf[k - i] + xlogy(i, ln_eta) + xlogy(k - i, ln_loss)).exp();
        }
        let col = &mut probs[k * w..(k + 1) * w];
        for (n, p) in col.iter_mut().enumerate() {
            *p = (0..=top.min(n)).map(|i| loss[i] * dark[n - i]).sum();
        }
    }
    Povm { k_max, n_max, probs }
}

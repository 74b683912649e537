//! Joint photon-number distributions `p(n, m)`: `n` signal clicks, `m`
//! idler clicks.

use crate::detector::{detector_povm, DetectorModel};
use crate::error::{Error, Result};
use crate::state::FockAmplitudes;

/// Square matrix `p[n][m]` for `n, m = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPnd {
    n_max: usize,
    probs: Vec<f64>,
    total: f64,
}

impl JointPnd {
    /// Builds from a row-major square matrix. Entries must be finite and
    /// non-negative.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::input("empty distribution"));
        }
        let width = rows.iter().map(Vec::len).max().unwrap_or(0).max(rows.len());
        let n_max = width - 1;
        let mut probs = vec![0.0; width * width];
        for (n, row) in rows.iter().enumerate() {
            for (m, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::input(format!("entry ({n}, {m}) = {p} is not a probability")));
                }
                probs[n * width + m] = p;
            }
        }
        Ok(Self::from_flat(n_max, probs))
    }

    pub(crate) fn from_flat(n_max: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), (n_max + 1) * (n_max + 1));
        let total = probs.iter().sum();
        JointPnd { n_max, probs, total }
    }

    /// Product distribution `q(n) r(m)`.
    pub fn product(q: &[f64], r: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = q.iter().map(|a| r.iter().map(|b| a * b).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> f64 {
        if n > self.n_max || m > self.n_max {
            0.0
        } else {
            self.probs[n * (self.n_max + 1) + m]
        }
    }

    /// `(n, m, p)` for every cell.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.n_max + 1;
        self.probs.iter().enumerate().map(move |(i, &p)| (i / w, i % w, p))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.probs
            .chunks(self.n_max + 1)
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Same distribution on a `(n_max + 1)^2` grid, cropping or zero-padding.
    pub fn resized(&self, n_max: usize) -> Self {
        let w = n_max + 1;
        let mut probs = vec![0.0; w * w];
        for n in 0..=n_max.min(self.n_max) {
            for m in 0..=n_max.min(self.n_max) {
                probs[n * w + m] = self.get(n, m);
            }
        }
        Self::from_flat(n_max, probs)
    }

    /// Rescaled to unit total. Fails on an all-zero matrix.
    pub fn normalized(&self) -> Result<Self> {
        if !(self.total > 0.0) {
            return Err(Error::input("cannot normalize a zero distribution"));
        }
        let probs = self.probs.iter().map(|p| p / self.total).collect();
        Ok(Self::from_flat(self.n_max, probs))
    }
}

/// Distribution of the state itself: `p(j - l1, j - l2) = |B_j|^2`.
pub fn ideal_joint_pnd(state: &FockAmplitudes) -> JointPnd {
    let sub = state.subtraction();
    let n_max = state.j_max() - sub.signal.min(sub.idler);
    let w = n_max + 1;
    let mut probs = vec![0.0; w * w];
    for (j, weight) in state.weights() {
        probs[state.signal_photons(j) * w + state.idler_photons(j)] += weight;
    }
    JointPnd::from_flat(n_max, probs)
}

/// `p(n, m) = sum_j |B_j|^2 P_s(n | j - l1) P_i(m | j - l2)`.
pub fn detected_joint_pnd(
    state: &FockAmplitudes,
    det_s: &DetectorModel,
    det_i: &DetectorModel,
    n_max: usize,
) -> JointPnd {
    let sub = state.subtraction();
    let povm_s = detector_povm(det_s, state.j_max() - sub.signal, n_max);
    let povm_i = detector_povm(det_i, state.j_max() - sub.idler, n_max);
    let w = n_max + 1;
    let mut probs = vec![0.0; w * w];
    for (j, weight) in state.weights() {
        let col_s = povm_s.column(state.signal_photons(j));
        let col_i = povm_i.column(state.idler_photons(j));
        for (n, ps) in col_s.iter().enumerate() {
            let a = weight * ps;
            if a == 0.0 {
                continue;
            }
            let row = &mut probs[n * w..(n + 1) * w];
            for (cell, pi) in row.iter_mut().zip(col_i) {
                *cell += a * pi;
            }
        }
    }
    JointPnd::from_flat(n_max, probs)
}

/// Detected distribution on the smallest square grid holding at least
/// `1 - tail_tol` of the probability.
pub fn detected_joint_pnd_auto(
    state: &FockAmplitudes,
    det_s: &DetectorModel,
    det_i: &DetectorModel,
    tail_tol: f64,
) -> JointPnd {
    let nu = det_s.nu().max(det_i.nu());
    let mut extra = 0usize;
    // Poisson(nu) tail beyond `extra` below tail_tol / 10
    let mut term = (-nu).exp();
    let mut cdf = term;
    while 1.0 - cdf > tail_tol / 10.0 && extra < 10_000 {
        extra += 1;
        term *= nu / extra as f64;
        cdf += term;
    }
    let sub = state.subtraction();
    let top = state.j_max() - sub.signal.min(sub.idler) + extra;
    let full = detected_joint_pnd(state, det_s, det_i, top);

    // mass inside the square [0, n]^2, grown one ring at a time
    let mut inside = 0.0;
    for n in 0..=top {
        inside += (0..=n).map(|m| full.get(n, m)).sum::<f64>();
        inside += (0..n).map(|m| full.get(m, n)).sum::<f64>();
        if inside >= 1.0 - tail_tol {
            return full.resized(n);
        }
    }
    full
}

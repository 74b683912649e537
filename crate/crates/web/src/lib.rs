//! wasm-bindgen surface for the static page in `www/`.
//!
//! Everything crosses the boundary as flat `f64` arrays; the page knows
//! the layouts documented on each function.

use tmsv::{
    build_subtracted_state, detected_joint_pnd, detected_joint_pnd_auto, Config, DetectorModel,
    SubtractionSpec, WitnessReport,
};
use wasm_bindgen::prelude::*;

const TAIL_TOL: f64 = 1e-10;

fn js(e: tmsv::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Detected joint distribution and its witnesses at one parameter point.
#[wasm_bindgen]
pub struct Prediction {
    n_max: usize,
    joint: Vec<f64>,
    report: WitnessReport,
    mean_signal: f64,
    mean_idler: f64,
}

#[wasm_bindgen]
impl Prediction {
    #[wasm_bindgen(getter)]
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Row-major `(n_max + 1)^2` grid, signal count along rows.
    #[wasm_bindgen(getter)]
    pub fn joint(&self) -> Vec<f64> {
        self.joint.clone()
    }

    /// `NaN` when the distribution has no coincidences.
    #[wasm_bindgen(getter)]
    pub fn agarwal(&self) -> f64 {
        self.report.agarwal.unwrap_or(f64::NAN)
    }

    #[wasm_bindgen(getter)]
    pub fn det_m(&self) -> f64 {
        self.report.det_m
    }

    #[wasm_bindgen(getter)]
    pub fn min_eigenvalue(&self) -> f64 {
        self.report.min_eigenvalue
    }

    #[wasm_bindgen(getter)]
    pub fn mean_signal(&self) -> f64 {
        self.mean_signal
    }

    #[wasm_bindgen(getter)]
    pub fn mean_idler(&self) -> f64 {
        self.mean_idler
    }

    /// `[thermal_r2, poisson_r2]` for the signal marginal, `NaN` if degenerate.
    pub fn signal_r2(&self) -> Vec<f64> {
        self.report.signal_fits.iter().map(|f| f.r_squared.unwrap_or(f64::NAN)).collect()
    }

    /// Signal marginal over `0..=n_max`.
    pub fn signal_marginal(&self) -> Vec<f64> {
        self.joint.chunks(self.n_max + 1).map(|row| row.iter().sum()).collect()
    }
}

/// Witnesses are evaluated on the automatic grid; `n_max` only limits the
/// returned picture.
#[wasm_bindgen]
pub fn predict(z: f64, l1: usize, l2: usize, eta: f64, nu: f64, n_max: usize) -> Result<Prediction, JsError> {
    let cfg = Config::default();
    let state = build_subtracted_state(z, SubtractionSpec::new(l1, l2), &cfg).map_err(js)?;
    let det = DetectorModel::new(eta, nu).map_err(js)?;
    let full = detected_joint_pnd_auto(&state, &det, &det, TAIL_TOL);
    let report = WitnessReport::from_pnd(&full, 1e-12).map_err(js)?;
    let picture = detected_joint_pnd(&state, &det, &det, n_max);
    Ok(Prediction {
        n_max,
        joint: picture.cells().map(|(_, _, p)| p).collect(),
        report,
        mean_signal: eta * state.mean_signal() + nu,
        mean_idler: eta * state.mean_idler() + nu,
    })
}

/// `points` samples of `z` in `[z_lo, z_hi]`, flattened as
/// `[z, agarwal, det_m, min_eigenvalue]` per sample.
#[wasm_bindgen]
pub fn witness_curves(
    l1: usize,
    l2: usize,
    eta: f64,
    nu: f64,
    z_lo: f64,
    z_hi: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    if points < 2 || !(z_lo < z_hi) {
        return Err(JsError::new("need at least two points on a non-empty z range"));
    }
    let det = DetectorModel::new(eta, nu).map_err(js)?;
    let cfg = Config::default();
    let mut out = Vec::with_capacity(4 * points);
    for i in 0..points {
        let z = z_lo + (z_hi - z_lo) * i as f64 / (points - 1) as f64;
        let state = build_subtracted_state(z, SubtractionSpec::new(l1, l2), &cfg).map_err(js)?;
        let w = WitnessReport::from_pnd(&detected_joint_pnd_auto(&state, &det, &det, TAIL_TOL), 1e-12)
            .map_err(js)?;
        out.extend([z, w.agarwal.unwrap_or(f64::NAN), w.det_m, w.min_eigenvalue]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prediction_grid_matches_core() {
        let p = predict(0.5, 1, 1, 0.5, 0.01, 6).unwrap();
        assert_eq!(p.joint().len(), 49);
        let m = p.signal_marginal();
        assert_eq!(m.len(), 7);
        assert!((m.iter().sum::<f64>() - p.joint().iter().sum::<f64>()).abs() < 1e-15);
        assert!(p.agarwal() < 0.0 && p.det_m() < 0.0 && p.min_eigenvalue() < 0.0);
    }

    #[test]
    fn curves_have_four_columns() {
        let c = witness_curves(2, 2, 1.0, 0.0, 0.1, 0.9, 5).unwrap();
        assert_eq!(c.len(), 20);
        assert!((c[0] - 0.1).abs() < 1e-15 && (c[16] - 0.9).abs() < 1e-15);
        assert!(c.chunks(4).all(|r| r[1] < 0.0 && r[2] < 0.0 && r[3] < 0.0));
    }
}

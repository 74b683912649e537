//! Nonclassicality witnesses computed from a joint click distribution.
//!
//! All moments are normally-ordered factorial moments of the detected
//! counts, `F(u, v) = sum p(n, m) n^(u) m^(v)` with `x^(r)` the falling
//! factorial. No loss inversion is attempted: the witnesses describe
//! whatever distribution is supplied.

use crate::error::{Error, Result};
use crate::math::{falling, golden_min};
use crate::pnd::JointPnd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Signal,
    Idler,
}

/// Row (signal) or column (idler) sums.
pub fn marginal(pnd: &JointPnd, mode: Mode) -> Vec<f64> {
    let mut out = vec![0.0; pnd.n_max() + 1];
    for (n, m, p) in pnd.cells() {
        match mode {
            Mode::Signal => out[n] += p,
            Mode::Idler => out[m] += p,
        }
    }
    out
}

/// `sum p(n, m) n(n-1)..(n-u+1) m(m-1)..(m-v+1)`.
pub fn joint_factorial_moment(pnd: &JointPnd, u: usize, v: usize) -> f64 {
    pnd.cells()
        .filter(|&(_, _, p)| p != 0.0)
        .map(|(n, m, p)| p * falling(n, u) * falling(m, v))
        .sum()
}

/// `F(u, v)` for `u, v` in `{0, 1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorialMoments {
    table: [[f64; 3]; 3],
}

impl FactorialMoments {
    pub fn from_pnd(pnd: &JointPnd) -> Self {
        let mut table = [[0.0; 3]; 3];
        for (n, m, p) in pnd.cells() {
            if p == 0.0 {
                continue;
            }
            for (u, row) in table.iter_mut().enumerate() {
                let fu = falling(n, u);
                for (v, cell) in row.iter_mut().enumerate() {
                    *cell += p * fu * falling(m, v);
                }
            }
        }
        FactorialMoments { table }
    }

    /// Panics for `u` or `v` above 2.
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.table[u][v]
    }

    /// Normally-ordered variances `F(2,0) - F(1,0)^2`, `F(0,2) - F(0,1)^2`
    /// and covariance `F(1,1) - F(1,0) F(0,1)`, assuming unit total.
    pub fn normally_ordered_covariances(&self) -> (f64, f64, f64) {
        let t = &self.table;
        (
            t[2][0] - t[1][0] * t[1][0],
            t[0][2] - t[0][1] * t[0][1],
            t[1][1] - t[1][0] * t[0][1],
        )
    }
}

/// `I = sqrt(F(2,0) F(0,2)) / F(1,1) - 1`; negative values violate the
/// Cauchy-Schwarz inequality obeyed by classical fields.
pub fn agarwal_parameter(pnd: &JointPnd) -> Result<f64> {
    agarwal_from_moments(&FactorialMoments::from_pnd(pnd))
}

pub fn agarwal_from_moments(f: &FactorialMoments) -> Result<f64> {
    let cross = f.get(1, 1);
    if !(cross > 0.0) {
        return Err(Error::UndefinedWitness("F(1,1) = 0, no coincident clicks"));
    }
    Ok((f.get(2, 0) * f.get(0, 2)).sqrt() / cross - 1.0)
}

/// Second-order matrix of moments
///
/// ```text
/// | F00 F10 F01 |
/// | F10 F20 F11 |
/// | F01 F11 F02 |
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentMatrix {
    m: [[f64; 3]; 3],
}

impl MomentMatrix {
    pub fn from_moments(f: &FactorialMoments) -> Self {
        let (f00, f10, f01) = (f.get(0, 0), f.get(1, 0), f.get(0, 1));
        let (f20, f11, f02) = (f.get(2, 0), f.get(1, 1), f.get(0, 2));
        MomentMatrix {
            m: [[f00, f10, f01], [f10, f20, f11], [f01, f11, f02]],
        }
    }

    /// Arbitrary 3x3 matrix, for use with [`min_eigenvalue`].
    pub fn from_rows(m: [[f64; 3]; 3]) -> Self {
        MomentMatrix { m }
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.m[r][c]
    }
}

pub fn moment_matrix(pnd: &JointPnd) -> MomentMatrix {
    MomentMatrix::from_moments(&FactorialMoments::from_pnd(pnd))
}

pub fn det_moment_matrix(m: &MomentMatrix) -> f64 {
    let a = &m.m;
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Smallest eigenvalue of a symmetric 3x3 matrix from the trigonometric
/// solution of its characteristic cubic, polished by the Rayleigh quotient
/// of its eigenvector. The eigenvector residual is checked before return.
pub fn min_eigenvalue(m: &MomentMatrix) -> Result<f64> {
    let a = &m.m;
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    for (r, c) in [(0, 1), (0, 2), (1, 2)] {
        if (a[r][c] - a[c][r]).abs() > 1e-12 * scale.max(1.0) {
            return Err(Error::input(format!(
                "matrix not symmetric at ({r}, {c}): {} vs {}",
                a[r][c], a[c][r]
            )));
        }
    }
    if scale == 0.0 {
        return Ok(0.0);
    }

    // work on the scaled matrix to keep the cubic well conditioned
    let b: [[f64; 3]; 3] = std::array::from_fn(|r| std::array::from_fn(|c| a[r][c] / scale));
    let p1 = b[0][1].powi(2) + b[0][2].powi(2) + b[1][2].powi(2);
    let q = (b[0][0] + b[1][1] + b[2][2]) / 3.0;
    let lambda = if p1 == 0.0 {
        b[0][0].min(b[1][1]).min(b[2][2])
    } else {
        let p2 = (b[0][0] - q).powi(2) + (b[1][1] - q).powi(2) + (b[2][2] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let c: [[f64; 3]; 3] = std::array::from_fn(|r| {
            std::array::from_fn(|k| (b[r][k] - if r == k { q } else { 0.0 }) / p)
        });
        let half_det = det_moment_matrix(&MomentMatrix { m: c }) / 2.0;
        let phi = half_det.clamp(-1.0, 1.0).acos() / 3.0;
        // eigenvalues q + 2p cos(phi + 2 pi k / 3); k = 1 is the smallest
        q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
    };

    let rayleigh = |v: &[f64; 3]| -> f64 {
        (0..3).map(|r| v[r] * (0..3).map(|c| b[r][c] * v[c]).sum::<f64>()).sum()
    };
    // a double smallest root leaves the third root simple; its eigenvector
    // fixes the plane that holds ours
    let eigvec = |lambda: f64| {
        null_vector(&b, lambda).unwrap_or_else(|| {
            let mut other = 3.0 * q - 2.0 * lambda;
            let mut u = [1.0, 0.0, 0.0];
            for _ in 0..2 {
                match null_vector(&b, other) {
                    Some(w) => u = w,
                    None => return [1.0, 0.0, 0.0],
                }
                other = rayleigh(&u);
            }
            orthogonal(&u)
        })
    };
    // two rounds of vector and Rayleigh quotient polish the cubic root
    let mut refined = lambda;
    let mut v = eigvec(refined);
    for _ in 0..2 {
        refined = rayleigh(&v);
        v = eigvec(refined);
    }
    refined = rayleigh(&v);
    let bv: [f64; 3] = std::array::from_fn(|r| (0..3).map(|c| b[r][c] * v[c]).sum());
    let residual = (0..3)
        .map(|r| (bv[r] - refined * v[r]).powi(2))
        .sum::<f64>()
        .sqrt();
    if !(residual <= 1e-10) {
        return Err(Error::Numeric(format!(
            "eigenvector residual {residual:e} for eigenvalue {}",
            refined * scale
        )));
    }
    Ok(refined * scale)
}

fn cross(x: &[f64; 3], y: &[f64; 3]) -> [f64; 3] {
    [
        x[1] * y[2] - x[2] * y[1],
        x[2] * y[0] - x[0] * y[2],
        x[0] * y[1] - x[1] * y[0],
    ]
}

fn norm(x: &[f64; 3]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Unit vector spanning the null space of `b - lambda I`, or `None` when
/// `lambda` is (close to) a repeated root and no single direction is
/// determined.
fn null_vector(b: &[[f64; 3]; 3], lambda: f64) -> Option<[f64; 3]> {
    let rows: [[f64; 3]; 3] = std::array::from_fn(|r| {
        std::array::from_fn(|c| b[r][c] - if r == c { lambda } else { 0.0 })
    });
    let best = [
        cross(&rows[0], &rows[1]),
        cross(&rows[0], &rows[2]),
        cross(&rows[1], &rows[2]),
    ]
    .into_iter()
    .max_by(|x, y| norm(x).total_cmp(&norm(y)))?;
    let widest = rows.iter().map(norm).fold(0.0, f64::max);
    let n = norm(&best);
    // nearly parallel rows: the cross product is rounding noise
    (n > 1e-6 * widest * widest && n > 1e-14).then(|| best.map(|v| v / n))
}

/// Unit vector orthogonal to `u`.
fn orthogonal(u: &[f64; 3]) -> [f64; 3] {
    let axis = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let v = cross(u, &axis);
    let n = norm(&v);
    v.map(|x| x / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MarginalModel {
    Thermal,
    Poisson,
}

impl MarginalModel {
    pub fn pmf(&self, mean: f64, n: usize) -> f64 {
        match self {
            MarginalModel::Thermal => {
                let q = mean / (1.0 + mean);
                (1.0 - q) * q.powi(n as i32)
            }
            MarginalModel::Poisson => {
                if mean == 0.0 {
                    return if n == 0 { 1.0 } else { 0.0 };
                }
                let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
                (-mean + n as f64 * mean.ln() - ln_fact).exp()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MarginalModel::Thermal => "thermal",
            MarginalModel::Poisson => "poisson",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalFit {
    pub model: MarginalModel,
    pub mean: f64,
    /// `1 - SS_res / SS_tot`; `None` for a degenerate marginal.
    pub r_squared: Option<f64>,
}

/// Least-squares fit of a thermal or Poissonian pmf to `marginal` over its
/// support `0..marginal.len()`.
pub fn fit_marginal(marginal: &[f64], model: MarginalModel) -> Result<MarginalFit> {
    if marginal.is_empty() {
        return Err(Error::input("empty marginal"));
    }
    let total: f64 = marginal.iter().sum();
    if !(total > 0.0) || marginal.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::input("marginal is not a probability sequence"));
    }
    if marginal.iter().skip(1).all(|&p| p == 0.0) {
        return Ok(MarginalFit {
            model,
            mean: 0.0,
            r_squared: None,
        });
    }
    let sse = |mean: f64| -> f64 {
        marginal
            .iter()
            .enumerate()
            .map(|(n, p)| (p - model.pmf(mean, n)).powi(2))
            .sum()
    };

    // coarse scan then golden refinement around the best grid point
    let data_mean: f64 = marginal.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / total;
    let hi = 4.0 * data_mean + 2.0;
    let steps = 400;
    let grid: Vec<f64> = (0..=steps).map(|i| hi * i as f64 / steps as f64).collect();
    let best = grid
        .iter()
        .enumerate()
        .min_by(|a, b| sse(*a.1).total_cmp(&sse(*b.1)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let lo = grid[best.saturating_sub(1)];
    let up = grid[(best + 1).min(steps)];
    let mean = golden_min(sse, lo, up, 1e-12).max(0.0);

    let avg = total / marginal.len() as f64;
    let ss_tot: f64 = marginal.iter().map(|p| (p - avg).powi(2)).sum();
    let r_squared = (ss_tot > 0.0).then(|| 1.0 - sse(mean) / ss_tot);
    Ok(MarginalFit {
        model,
        mean,
        r_squared,
    })
}

/// Witness values and verdicts for one joint distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub moments: FactorialMoments,
    pub matrix: MomentMatrix,
    /// `None` when there are no coincident clicks.
    pub agarwal: Option<f64>,
    pub det_m: f64,
    pub min_eigenvalue: f64,
    /// Thermal and Poissonian fits for the signal marginal.
    pub signal_fits: [MarginalFit; 2],
    pub idler_fits: [MarginalFit; 2],
    pub cauchy_schwarz_violated: bool,
    pub det_negative: bool,
    pub eigenvalue_negative: bool,
}

impl WitnessReport {
    /// `zero_band` keeps floating-point dust from flipping a verdict.
    pub fn from_pnd(pnd: &JointPnd, zero_band: f64) -> Result<Self> {
        let moments = FactorialMoments::from_pnd(pnd);
        let matrix = MomentMatrix::from_moments(&moments);
        let agarwal = match agarwal_from_moments(&moments) {
            Ok(i) => Some(i),
            Err(Error::UndefinedWitness(_)) => None,
            Err(e) => return Err(e),
        };
        let det_m = det_moment_matrix(&matrix);
        let min_eig = min_eigenvalue(&matrix)?;
        let fits = |mode| -> Result<[MarginalFit; 2]> {
            let marg = marginal(pnd, mode);
            Ok([
                fit_marginal(&marg, MarginalModel::Thermal)?,
                fit_marginal(&marg, MarginalModel::Poisson)?,
            ])
        };
        Ok(WitnessReport {
            moments,
            matrix,
            agarwal,
            det_m,
            min_eigenvalue: min_eig,
            signal_fits: fits(Mode::Signal)?,
            idler_fits: fits(Mode::Idler)?,
            cauchy_schwarz_violated: agarwal.is_some_and(|i| i < -zero_band),
            det_negative: det_m < -zero_band,
            eigenvalue_negative: min_eig < -zero_band,
        })
    }
}

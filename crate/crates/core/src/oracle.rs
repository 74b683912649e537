//! Direct evaluation of the P-function derivative formula for `p(n, m)`.
//!
//! ```text
//! p(n,m) = 1/(n! m!) sum_{j,k} B_j B_k / sqrt((j-l1)! (k-l1)! (j-l2)! (k-l2)!)
//!          * d^{j-l1}_a d^{k-l1}_a* { (eta a a* + nu)^n e^{-[(eta-1) a a* + nu]} } |_0
//!          * d^{j-l2}_b d^{k-l2}_b* { (eta b b* + nu)^m e^{-[(eta-1) b b* + nu]} } |_0
//! ```
//!
//! The generating functions are expanded as genuine bivariate power series
//! in `(a, a*)` and every `(j, k)` pair is summed, so the vanishing of the
//! `j != k` terms is computed rather than assumed. This is an independent
//! check of [`crate::pnd::detected_joint_pnd`], meant for small instances
//! only.

use crate::detector::DetectorModel;
use crate::error::{Error, Result};
use crate::math::ln_factorials;
use crate::state::FockAmplitudes;

/// Largest pair index the oracle accepts.
pub const MAX_PAIR_INDEX: usize = 12;
/// Largest click number the oracle accepts.
pub const MAX_CLICKS: usize = 8;

/// Truncated series `sum c[a][b] x^a y^b` with `a, b <= order`.
#[derive(Debug, Clone, PartialEq)]
struct Bivariate {
    order: usize,
    coef: Vec<f64>,
}

impl Bivariate {
    fn zero(order: usize) -> Self {
        Bivariate {
            order,
            coef: vec![0.0; (order + 1) * (order + 1)],
        }
    }

    fn constant(order: usize, c: f64) -> Self {
        let mut s = Self::zero(order);
        s.coef[0] = c;
        s
    }

    fn idx(&self, a: usize, b: usize) -> usize {
        a * (self.order + 1) + b
    }

    fn get(&self, a: usize, b: usize) -> f64 {
        self.coef[self.idx(a, b)]
    }

    fn set(&mut self, a: usize, b: usize, v: f64) {
        let i = self.idx(a, b);
        self.coef[i] = v;
    }

    fn mul(&self, other: &Bivariate) -> Bivariate {
        let order = self.order;
        let mut out = Bivariate::zero(order);
        for a1 in 0..=order {
            for b1 in 0..=order {
                let c1 = self.get(a1, b1);
                if c1 == 0.0 {
                    continue;
                }
                for a2 in 0..=order - a1 {
                    for b2 in 0..=order - b1 {
                        let c2 = other.get(a2, b2);
                        if c2 != 0.0 {
                            let i = out.idx(a1 + a2, b1 + b2);
                            out.coef[i] += c1 * c2;
                        }
                    }
                }
            }
        }
        out
    }

    fn scale(&self, s: f64) -> Bivariate {
        Bivariate {
            order: self.order,
            coef: self.coef.iter().map(|c| c * s).collect(),
        }
    }

    fn add(&self, other: &Bivariate) -> Bivariate {
        Bivariate {
            order: self.order,
            coef: self.coef.iter().zip(&other.coef).map(|(a, b)| a + b).collect(),
        }
    }

    fn powi(&self, n: usize) -> Bivariate {
        (0..n).fold(Bivariate::constant(self.order, 1.0), |acc, _| acc.mul(self))
    }

    /// `exp(self)` for a series without constant term.
    fn exp_nilpotent(&self) -> Bivariate {
        debug_assert_eq!(self.coef[0], 0.0);
        let mut sum = Bivariate::constant(self.order, 1.0);
        let mut term = sum.clone();
        // terms vanish beyond total degree 2 * order
        for k in 1..=2 * self.order {
            term = term.mul(self).scale(1.0 / k as f64);
            sum = sum.add(&term);
        }
        sum
    }

    /// `d^a_x d^b_y` at the origin.
    fn derivative_at_origin(&self, a: usize, b: usize, lnf: &[f64]) -> f64 {
        self.get(a, b) * (lnf[a] + lnf[b]).exp()
    }
}

/// `(eta x y + nu)^clicks * exp(-[(eta - 1) x y + nu])` up to `order`.
fn click_generating_series(det: &DetectorModel, clicks: usize, order: usize) -> Bivariate {
    let mut xy = Bivariate::zero(order);
    if order >= 1 {
        xy.set(1, 1, 1.0);
    }
    let base = xy.scale(det.eta()).add(&Bivariate::constant(order, det.nu()));
    let exponent = xy.scale(1.0 - det.eta());
    base.powi(clicks)
        .mul(&exponent.exp_nilpotent())
        .scale((-det.nu()).exp())
}

/// Joint probability of `n` signal and `m` idler clicks from the literal
/// derivative formula.
pub fn derivative_formula_pnd(
    state: &FockAmplitudes,
    det_s: &DetectorModel,
    det_i: &DetectorModel,
    n: usize,
    m: usize,
) -> Result<f64> {
    if state.j_max() > MAX_PAIR_INDEX {
        return Err(Error::OracleCap(format!(
            "state truncated at pair index {} > {MAX_PAIR_INDEX}",
            state.j_max()
        )));
    }
    if n > MAX_CLICKS || m > MAX_CLICKS {
        return Err(Error::OracleCap(format!(
            "clicks ({n}, {m}) exceed {MAX_CLICKS}"
        )));
    }
    let sub = state.subtraction();
    let order_s = state.j_max() - sub.signal;
    let order_i = state.j_max() - sub.idler;
    let series_s = click_generating_series(det_s, n, order_s);
    let series_i = click_generating_series(det_i, m, order_i);
    let lnf = ln_factorials(MAX_PAIR_INDEX.max(MAX_CLICKS) + 1);

    let mut total = 0.0;
    for j in state.j_min()..=state.j_max() {
        for k in state.j_min()..=state.j_max() {
            let (aj, ak) = (j - sub.signal, k - sub.signal);
            let (bj, bk) = (j - sub.idler, k - sub.idler);
            let coupling = state.amplitude(j) * state.amplitude(k)
                * (-(lnf[aj] + lnf[ak] + lnf[bj] + lnf[bk]) / 2.0).exp();
            total += coupling
                * series_s.derivative_at_origin(aj, ak, &lnf)
                * series_i.derivative_at_origin(bj, bk, &lnf);
        }
    }
    Ok(total * (-(lnf[n] + lnf[m])).exp())
}

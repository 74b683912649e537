//! Small numeric helpers shared across modules.

/// `ln(n!)` for `n = 0..=max`.
pub(crate) fn ln_factorials(max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=max {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// `count * ln_x`, with the convention `0 * ln(0) = 0`.
#[inline]
pub(crate) fn xlogy(count: usize, ln_x: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        count as f64 * ln_x
    }
}

/// Falling factorial `x (x-1) ... (x-r+1)`.
#[inline]
pub(crate) fn falling(x: usize, r: usize) -> f64 {
    (0..r).map(|i| x as f64 - i as f64).product::<f64>().max(0.0)
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

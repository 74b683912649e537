//! Monte Carlo of the heralded subtraction protocol.
//!
//! Each pump pulse produces `j` photon pairs with the Schmidt weights
//! `(1 - z^2) z^{2j}`. Every mode passes a tap coupler of transmission `T`;
//! the reflected photons hit a tap detector and the pulse is kept only when
//! the tap detectors report exactly `(l1, l2)` clicks. Transmitted photons
//! are then counted by the main detectors.
//!
//! Two samplers are provided. [`Sampling::Pulses`] plays the protocol pulse
//! by pulse and rejects unheralded pulses. [`Sampling::Heralded`] draws the
//! accepted pulses directly from the conditional law of the same process,
//! which is needed when the herald probability is tiny (weak taps, several
//! subtracted photons).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};

use crate::detector::{detector_povm, DetectorModel};
use crate::error::{Error, Result};
use crate::pnd::JointPnd;
use crate::state::{check_z, SubtractionSpec};

/// Pulses (or accepted events) per independently seeded chunk.
pub const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// `shots` pump pulses, rejected unless heralded.
    Pulses,
    /// `shots` accepted events drawn from the conditional distribution; the
    /// number of pulses this would have taken is sampled alongside.
    Heralded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub z: f64,
    /// Tap coupler transmission, identical for both modes.
    pub tap_transmission: f64,
    pub tap_detector: DetectorModel,
    pub main_detector: DetectorModel,
    /// Required tap clicks `(l1, l2)`.
    pub condition: SubtractionSpec,
    pub shots: u64,
    pub seed: u64,
    pub sampling: Sampling,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        check_z(self.z)?;
        if !(self.tap_transmission > 0.0 && self.tap_transmission < 1.0) {
            return Err(Error::domain(format!(
                "tap transmission must lie in (0, 1), got {}",
                self.tap_transmission
            )));
        }
        if self.shots == 0 {
            return Err(Error::domain("shots must be at least 1"));
        }
        Ok(())
    }
}

/// Integer click counts on a growable square grid.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountGrid {
    width: usize,
    cells: Vec<u64>,
}

impl CountGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_max(&self) -> usize {
        self.width.saturating_sub(1)
    }

    pub fn get(&self, n: usize, m: usize) -> u64 {
        if n >= self.width || m >= self.width {
            0
        } else {
            self.cells[n * self.width + m]
        }
    }

    pub fn add(&mut self, n: usize, m: usize, count: u64) {
        let need = n.max(m) + 1;
        if need > self.width {
            self.grow(need);
        }
        self.cells[n * self.width + m] += count;
    }

    fn grow(&mut self, width: usize) {
        let mut cells = vec![0; width * width];
        for n in 0..self.width {
            for m in 0..self.width {
                cells[n * width + m] = self.cells[n * self.width + m];
            }
        }
        self.width = width;
        self.cells = cells;
    }

    pub fn merge(&mut self, other: &CountGrid) {
        for n in 0..other.width {
            for m in 0..other.width {
                let c = other.get(n, m);
                if c > 0 {
                    self.add(n, m, c);
                }
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        if self.width == 0 {
            return Vec::new();
        }
        self.cells.chunks(self.width).map(<[u64]>::to_vec).collect()
    }

    /// Relative frequencies, `None` when empty.
    pub fn frequencies(&self) -> Option<JointPnd> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let rows: Vec<Vec<f64>> = self
            .rows()
            .iter()
            .map(|r| r.iter().map(|&c| c as f64 / total as f64).collect())
            .collect();
        JointPnd::from_rows(&rows).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub counts: CountGrid,
    pub accepted: u64,
    /// Pump pulses simulated (sampled in heralded mode).
    pub shots: u64,
    pub acceptance_rate: f64,
    /// Normalized counts; `None` when nothing was accepted.
    pub empirical: Option<JointPnd>,
    /// Exact herald probability, known in heralded mode only.
    pub herald_probability: Option<f64>,
}

impl McResult {
    pub fn is_empty(&self) -> bool {
        self.accepted == 0
    }
}

/// Pair number with probability `(1 - z^2) z^{2j}`, by inverting the CDF
/// `P(J >= j) = z^{2j}`.
pub fn sample_pair_number<R: Rng + ?Sized>(z: f64, rng: &mut R) -> u64 {
    if z == 0.0 {
        return 0;
    }
    // u in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    (u.ln() / (2.0 * z.ln())).floor() as u64
}

/// Binomial partition of `k` photons into (transmitted, reflected).
pub fn beamsplitter_split<R: Rng + ?Sized>(k: u64, transmission: f64, rng: &mut R) -> (u64, u64) {
    if k == 0 {
        return (0, 0);
    }
    let t = Binomial::new(k, transmission)
        .expect("transmission validated in (0, 1)")
        .sample(rng);
    (t, k - t)
}

/// Click count of `det` for `k` incident photons.
fn detect<R: Rng + ?Sized>(k: u64, det: &DetectorModel, dark: Option<&Poisson<f64>>, rng: &mut R) -> u64 {
    let seen = if k == 0 || det.eta() == 1.0 {
        k
    } else {
        Binomial::new(k, det.eta()).expect("efficiency validated").sample(rng)
    };
    seen + dark.map_or(0, |d| d.sample(rng) as u64)
}

fn dark_sampler(det: &DetectorModel) -> Option<Poisson<f64>> {
    (det.nu() > 0.0).then(|| Poisson::new(det.nu()).expect("dark rate validated"))
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Per-chunk partial result.
struct Partial {
    counts: CountGrid,
    accepted: u64,
    // f64: heralded runs can stand for more pulses than u64 holds
    pulses: f64,
}

/// Runs the protocol. Identical config and seed give identical results for
/// any number of worker threads.
pub fn simulate_run(cfg: &ProtocolConfig) -> Result<McResult> {
    cfg.validate()?;
    let n_chunks = cfg.shots.div_ceil(CHUNK);
    let chunk_len = |c: u64| CHUNK.min(cfg.shots - c * CHUNK);

    let (partials, herald_probability) = match cfg.sampling {
        Sampling::Pulses => (
            map_chunks(n_chunks, |c| pulses_chunk(cfg, chunk_len(c), chunk_rng(cfg.seed, c))),
            None,
        ),
        Sampling::Heralded => {
            let law = HeraldedLaw::new(cfg)?;
            let p = law.herald_probability;
            if p == 0.0 {
                (Vec::new(), Some(0.0))
            } else {
                (
                    map_chunks(n_chunks, |c| law.sample_chunk(chunk_len(c), chunk_rng(cfg.seed, c))),
                    Some(p),
                )
            }
        }
    };

    let mut counts = CountGrid::new();
    let (mut accepted, mut pulses) = (0u64, 0.0f64);
    for part in &partials {
        counts.merge(&part.counts);
        accepted += part.accepted;
        pulses += part.pulses;
    }
    Ok(McResult {
        empirical: counts.frequencies(),
        counts,
        accepted,
        shots: pulses.min(u64::MAX as f64) as u64,
        acceptance_rate: if pulses == 0.0 { 0.0 } else { accepted as f64 / pulses },
        herald_probability,
    })
}

#[cfg(feature = "parallel")]
fn map_chunks<F: Fn(u64) -> Partial + Sync + Send>(n: u64, f: F) -> Vec<Partial> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_chunks<F: Fn(u64) -> Partial>(n: u64, f: F) -> Vec<Partial> {
    (0..n).map(f).collect()
}

fn pulses_chunk(cfg: &ProtocolConfig, pulses: u64, mut rng: ChaCha8Rng) -> Partial {
    let tap_dark = dark_sampler(&cfg.tap_detector);
    let main_dark = dark_sampler(&cfg.main_detector);
    let (l1, l2) = (cfg.condition.signal as u64, cfg.condition.idler as u64);
    let mut counts = CountGrid::new();
    let mut accepted = 0;
    for _ in 0..pulses {
        let j = sample_pair_number(cfg.z, &mut rng);
        let (ts, rs) = beamsplitter_split(j, cfg.tap_transmission, &mut rng);
        let (ti, ri) = beamsplitter_split(j, cfg.tap_transmission, &mut rng);
        if detect(rs, &cfg.tap_detector, tap_dark.as_ref(), &mut rng) != l1 {
            continue;
        }
        if detect(ri, &cfg.tap_detector, tap_dark.as_ref(), &mut rng) != l2 {
            continue;
        }
        let n = detect(ts, &cfg.main_detector, main_dark.as_ref(), &mut rng);
        let m = detect(ti, &cfg.main_detector, main_dark.as_ref(), &mut rng);
        counts.add(n as usize, m as usize, 1);
        accepted += 1;
    }
    Partial {
        counts,
        accepted,
        pulses: pulses as f64,
    }
}

/// Conditional law of `(j, r_s, r_i)` given the herald, built from the
/// Schmidt weights, the binomial tap and the tap detector response.
struct HeraldedLaw {
    cfg: ProtocolConfig,
    /// Cumulative posterior over `j`.
    j_cdf: Vec<f64>,
    /// Cumulative posterior over reflected photons `r`, per `j` and mode.
    r_cdf: [Vec<Vec<f64>>; 2],
    herald_probability: f64,
}

impl HeraldedLaw {
    /// Geometric tail mass (relative to the herald probability) left out.
    const TAIL: f64 = 1e-15;
    const J_LIMIT: usize = 20_000;

    fn new(cfg: &ProtocolConfig) -> Result<Self> {
        let z2 = cfg.z * cfg.z;
        let t = cfg.tap_transmission;
        let labels = [cfg.condition.signal, cfg.condition.idler];
        let mut weights = Vec::new();
        let mut r_post: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        let mut total = 0.0;
        let mut schmidt = 1.0 - z2;
        let mut povm = detector_povm(&cfg.tap_detector, 64, labels[0].max(labels[1]));
        for j in 0.. {
            if j > povm.k_max() {
                povm = detector_povm(&cfg.tap_detector, 2 * j, labels[0].max(labels[1]));
            }
            let binom = binomial_pmf(j, 1.0 - t);
            let mut herald = 1.0;
            for (mode, &l) in labels.iter().enumerate() {
                let joint: Vec<f64> = binom.iter().enumerate().map(|(r, b)| b * povm.get(l, r)).collect();
                let h: f64 = joint.iter().sum();
                herald *= h;
                r_post[mode].push(cumulative(&joint));
            }
            let w = schmidt * herald;
            weights.push(w);
            total += w;
            // remaining Schmidt mass bounds the remaining posterior mass
            let remaining = z2.powi(j as i32 + 1);
            if z2 == 0.0 || (total > 0.0 && remaining < Self::TAIL * total) {
                break;
            }
            if j >= Self::J_LIMIT {
                return Err(Error::Numeric(format!(
                    "heralded law did not converge by pair index {j}"
                )));
            }
            schmidt *= z2;
        }
        Ok(HeraldedLaw {
            cfg: *cfg,
            j_cdf: cumulative(&weights),
            r_cdf: r_post,
            herald_probability: total,
        })
    }

    fn sample_chunk(&self, accepted: u64, mut rng: ChaCha8Rng) -> Partial {
        let main_dark = dark_sampler(&self.cfg.main_detector);
        let mut counts = CountGrid::new();
        for _ in 0..accepted {
            let j = draw(&self.j_cdf, &mut rng);
            let rs = draw(&self.r_cdf[0][j], &mut rng);
            let ri = draw(&self.r_cdf[1][j], &mut rng);
            let n = detect((j - rs) as u64, &self.cfg.main_detector, main_dark.as_ref(), &mut rng);
            let m = detect((j - ri) as u64, &self.cfg.main_detector, main_dark.as_ref(), &mut rng);
            counts.add(n as usize, m as usize, 1);
        }
        // failures before `accepted` successes: negative binomial as a
        // gamma-Poisson mixture
        let p = self.herald_probability;
        let failures = if p >= 1.0 {
            0.0
        } else {
            let rate = Gamma::new(accepted as f64, (1.0 - p) / p)
                .expect("positive shape and scale")
                .sample(&mut rng);
            if rate > 0.0 {
                Poisson::new(rate).map_or(rate.round(), |d| d.sample(&mut rng))
            } else {
                0.0
            }
        };
        Partial {
            counts,
            accepted,
            pulses: accepted as f64 + failures,
        }
    }
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    // recurrence over n keeps every entry a convex combination
    let mut row = vec![1.0];
    for _ in 0..n {
        let mut next = vec![0.0; row.len() + 1];
        for (k, v) in row.iter().enumerate() {
            next[k] += v * (1.0 - p);
            next[k + 1] += v * p;
        }
        row = next;
    }
    row
}

fn cumulative(w: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    w.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

/// Index drawn from an unnormalized cumulative table.
fn draw<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let total = *cdf.last().expect("non-empty table");
    let u = rng.random::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// `1/2 sum |p - q|` over identical grids.
pub fn tv_distance(p: &JointPnd, q: &JointPnd) -> Result<f64> {
    if p.n_max() != q.n_max() {
        return Err(Error::GridMismatch {
            left: p.n_max(),
            right: q.n_max(),
        });
    }
    Ok(0.5 * p.cells().zip(q.cells()).map(|(a, b)| (a.2 - b.2).abs()).sum::<f64>())
}

/// Pads both distributions to a common grid before comparing.
pub fn tv_distance_padded(p: &JointPnd, q: &JointPnd) -> f64 {
    let n = p.n_max().max(q.n_max());
    tv_distance(&p.resized(n), &q.resized(n)).expect("same grid after padding")
}

//! Greedy increasing chains through the non-negative orthant, and sampling
//! of the orthant entrance time that governs their increments.

use std::io::Write;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lis::{lnds_length, MonotoneChain};
use crate::rng::{self, derive_seed, StreamRng};
use crate::stats::{linear_fit, ExponentFit};
use crate::walk::{generate_walk, LatticeSteps, Positions, StepKind, StepLaw, Walk};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyChainResult {
    pub chain: MonotoneChain,
    /// `a_{i+1} − a_i`.
    pub increments: Vec<usize>,
    /// The walk continues past the horizon and has a successor of the last
    /// chain element there.
    pub truncated_at_horizon: bool,
}

impl GreedyChainResult {
    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }
}

fn dominates<T: PartialOrd>(v: &[T], a: usize, b: usize, d: usize) -> bool {
    (0..d).all(|i| v[b * d + i] >= v[a * d + i])
}

fn greedy_on<T: PartialOrd + Copy>(v: &[T], d: usize, len: usize, horizon: usize) -> (Vec<usize>, bool) {
    if horizon == 0 {
        return (Vec::new(), false);
    }
    let mut chain = vec![0usize];
    let mut last = 0;
    for b in 1..horizon {
        if dominates(v, last, b, d) {
            chain.push(b);
            last = b;
        }
    }
    let truncated = (horizon..len).any(|b| dominates(v, last, b, d));
    (chain, truncated)
}

/// `a_0 = 0`, `a_{i+1} = min{a > a_i : S(a) − S(a_i) ≥ 0 in every coordinate}`,
/// restricted to indices below `horizon`.
pub fn greedy_chain(walk: &Walk, horizon: usize) -> Result<GreedyChainResult> {
    if horizon > walk.len() {
        return Err(invalid(format!("horizon {horizon} exceeds walk length {}", walk.len())));
    }
    let d = walk.dim();
    let (chain, truncated_at_horizon) = match walk.positions() {
        Positions::Lattice(v) => greedy_on(v, d, walk.len(), horizon),
        Positions::Real(v) => greedy_on(v, d, walk.len(), horizon),
    };
    let increments = chain.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(GreedyChainResult { chain: MonotoneChain::new(chain, d), increments, truncated_at_horizon })
}

/// One draw of `τ = inf{t > 0 : S(t) ≥ 0 componentwise}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitSample {
    /// `τ`, or `cap` when censored.
    pub tau: u64,
    pub censored: bool,
}

/// Fair bits read LSB-first from the stream, with per-coordinate counts
/// for interleaved steps (bit `t·d + i` drives coordinate `i` at step `t`).
struct StridedBits {
    word: u64,
    offset: u32,
    position: u64,
    dim: usize,
    masks: Vec<u64>,
}

impl StridedBits {
    fn new(dim: usize) -> Self {
        let masks = (0..dim)
            .map(|j| (0..64).filter(|b| b % dim == j).fold(0u64, |m, b| m | 1 << b))
            .collect();
        StridedBits { word: 0, offset: 64, position: 0, dim, masks }
    }

    /// Adds the ones among the next `bits` bits to `counts[coordinate]`.
    fn count(&mut self, rng: &mut StreamRng, mut bits: u64, counts: &mut [u64]) {
        while bits > 0 {
            if self.offset == 64 {
                self.word = rng.next_u64();
                self.offset = 0;
            }
            let take = bits.min(u64::from(64 - self.offset)) as u32;
            let chunk = (self.word >> self.offset) & if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
            let phase = (self.position % self.dim as u64) as usize;
            for (i, c) in counts.iter_mut().enumerate() {
                let j = (i + self.dim - phase) % self.dim;
                *c += u64::from((chunk & self.masks[j]).count_ones());
            }
            self.offset += take;
            self.position += u64::from(take);
            bits -= u64::from(take);
        }
    }
}

/// Entrance time for the simple law. A coordinate at `−D` needs at least
/// `D` steps to recover, so the walk jumps ahead by the largest deficit.
fn simple_exit(dim: usize, cap: u64, rng: &mut StreamRng) -> ExitSample {
    let mut bits = StridedBits::new(dim);
    let mut x = vec![0i64; dim];
    let mut counts = vec![0u64; dim];
    let mut t = 0u64;
    loop {
        let deficit = x.iter().map(|&v| -v).max().unwrap_or(0).max(1) as u64;
        if t + deficit > cap {
            return ExitSample { tau: cap, censored: true };
        }
        counts.iter_mut().for_each(|c| *c = 0);
        bits.count(rng, deficit * dim as u64, &mut counts);
        for (xi, &c) in x.iter_mut().zip(&counts) {
            *xi += 2 * c as i64 - deficit as i64;
        }
        t += deficit;
        if x.iter().all(|&v| v >= 0) {
            return ExitSample { tau: t, censored: false };
        }
    }
}

fn stepwise_exit(law: StepLaw, cap: u64, rng: &mut StreamRng) -> ExitSample {
    let d = law.dim;
    let mut t = 0u64;
    if law.kind == StepKind::Normal {
        let mut x = vec![0f64; d];
        while t < cap {
            for xi in x.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *xi += z;
            }
            t += 1;
            if x.iter().all(|&v| v >= 0.0) {
                return ExitSample { tau: t, censored: false };
            }
        }
    } else {
        let mut steps = LatticeSteps::new(law.kind);
        let mut x = vec![0i64; d];
        while t < cap {
            for xi in x.iter_mut() {
                *xi += steps.next(rng);
            }
            t += 1;
            if x.iter().all(|&v| v >= 0) {
                return ExitSample { tau: t, censored: false };
            }
        }
    }
    ExitSample { tau: cap, censored: true }
}

/// Entrance time of the walk generated from `seed`; equal to the first
/// greedy increment of `generate_walk(law, cap, seed)` when one exists.
pub fn orthant_exit(law: StepLaw, cap: u64, seed: u64) -> ExitSample {
    let mut rng = rng::stream(seed, 0);
    match law.kind {
        StepKind::Simple => simple_exit(law.dim, cap, &mut rng),
        _ => stepwise_exit(law, cap, &mut rng),
    }
}

const EXIT_TAG: u64 = 0x6578_6974;

/// Independent entrance times; trial `t` uses seed `derive_seed(seed, [tag, t])`.
pub fn orthant_exit_samples(law: StepLaw, trials: u64, cap: u64, seed: u64) -> Result<Vec<ExitSample>> {
    if cap == 0 {
        return Err(invalid("cap must be positive"));
    }
    Ok((0..trials)
        .into_par_iter()
        .map(|t| orthant_exit(law, cap, derive_seed(seed, &[EXIT_TAG, t])))
        .collect())
}

/// CSV with columns `trial, tau, censored`.
pub fn write_exit_csv<W: Write>(samples: &[ExitSample], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["trial", "tau", "censored"])?;
    for (t, s) in samples.iter().enumerate() {
        wtr.write_record([t.to_string(), s.tau.to_string(), s.censored.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalFit {
    pub fit: ExponentFit,
    pub trials: u64,
    pub censored: u64,
    /// `(t, P̂(τ > t))` at the fitted grid points.
    pub survival: Vec<(u64, f64)>,
}

/// Default fit window `[10², cap/10]`.
pub fn default_window(cap: u64) -> (u64, u64) {
    (100, cap / 10)
}

/// Regresses `ln P̂(τ > t)` on `ln t` at `points` log-spaced `t` in `window`.
/// Censored samples are exceeded at every `t < cap` and enter as such.
pub fn fit_survival(samples: &[ExitSample], cap: u64, window: (u64, u64), points: usize) -> Result<SurvivalFit> {
    let (lo, hi) = window;
    if lo == 0 || hi <= lo || hi >= cap {
        return Err(invalid(format!("window [{lo}, {hi}] must satisfy 0 < lo < hi < cap = {cap}")));
    }
    if points < 3 {
        return Err(invalid("need at least 3 grid points"));
    }
    let mut taus: Vec<u64> = samples.iter().map(|s| if s.censored { u64::MAX } else { s.tau }).collect();
    taus.sort_unstable();
    let total = taus.len() as f64;
    let ratio = (hi as f64 / lo as f64).ln() / (points - 1) as f64;
    let mut grid: Vec<u64> = (0..points).map(|i| (lo as f64 * (ratio * i as f64).exp()).round() as u64).collect();
    grid.dedup();
    let survival: Vec<(u64, f64)> = grid
        .iter()
        .map(|&t| (t, (taus.len() - taus.partition_point(|&x| x <= t)) as f64 / total))
        .collect();
    if survival.iter().any(|&(_, s)| s == 0.0) {
        return Err(crate::Error::DegenerateFit("empirical survival vanishes inside the window".into()));
    }
    let xs: Vec<f64> = survival.iter().map(|&(t, _)| (t as f64).ln()).collect();
    let ys: Vec<f64> = survival.iter().map(|&(_, s)| s.ln()).collect();
    let fit = linear_fit(&xs, &ys, (lo as f64, hi as f64))?;
    Ok(SurvivalFit {
        fit,
        trials: samples.len() as u64,
        censored: samples.iter().filter(|s| s.censored).count() as u64,
        survival,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub epsilon: f64,
    /// `ε·n^(1/3)`.
    pub threshold: f64,
    /// Fraction of trials whose chain length is below the threshold.
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainTail {
    pub n: u64,
    pub trials: u64,
    /// Exact LIS instead of the greedy lower bound.
    pub exact: bool,
    pub rows: Vec<TailRow>,
    /// Smallest `c` with `estimate ≤ c·ε` on every row.
    pub c_hat: f64,
    pub mean_length: f64,
}

/// Per-trial greedy length on `[0, n)` and, optionally, the exact LIS.
pub fn chain_lengths(law: StepLaw, n: u64, trials: u64, seed: u64, exact: bool) -> Result<Vec<(u64, Option<u64>)>> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let walk = generate_walk(law, n as usize - 1, derive_seed(seed, &[n, t]));
            let greedy = greedy_chain(&walk, walk.len())?.len() as u64;
            let lis = if exact {
                Some(match walk.positions() {
                    Positions::Lattice(v) => lnds_length(v, law.dim)?,
                    Positions::Real(v) => lnds_length(v, law.dim)?,
                } as u64)
            } else {
                None
            };
            Ok((greedy, lis))
        })
        .collect()
}

/// Empirical `P(L < ε·n^(1/3))` over `epsilon_grid`, with `L` the greedy chain
/// length, or the exact LIS when `exact` is set.
pub fn chain_length_tail(
    law: StepLaw,
    n: u64,
    epsilon_grid: &[f64],
    trials: u64,
    seed: u64,
    exact: bool,
) -> Result<ChainTail> {
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    if epsilon_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(invalid("epsilon values must be positive"));
    }
    let lengths: Vec<u64> = chain_lengths(law, n, trials, seed, exact)?
        .into_iter()
        .map(|(g, l)| l.unwrap_or(g))
        .collect();
    let cube = (n as f64).cbrt();
    let tf = trials as f64;
    let rows: Vec<TailRow> = epsilon_grid
        .iter()
        .map(|&epsilon| {
            let threshold = epsilon * cube;
            let p = lengths.iter().filter(|&&l| (l as f64) < threshold).count() as f64 / tf;
            TailRow { epsilon, threshold, estimate: p, stderr: (p * (1.0 - p) / tf).sqrt() }
        })
        .collect();
    let c_hat = rows.iter().map(|r| r.estimate / r.epsilon).fold(0.0, f64::max);
    Ok(ChainTail { n, trials, exact, rows, c_hat, mean_length: lengths.iter().sum::<u64>() as f64 / tf })
}

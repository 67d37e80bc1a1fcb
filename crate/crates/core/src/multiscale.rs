//! Scaled local times on the dyadic time/value grid and the certified
//! upper bound they imply.
//!
//! Time blocks of order `m` are `[p·4^m, (p+1)·4^m)`, value blocks of order
//! `m` are `[q·2^m, (q+1)·2^m)`. The scaled local time `S_{m,k,p,q}` counts
//! the order `m − k` time blocks inside time block `(m, p)` during which the
//! walk visits value block `(m − k, q)`.

use std::fmt;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::lis::lnds_length_1d;
use crate::rng::derive_seed;
use crate::walk::{generate_walk, StepLaw, Walk};

/// Indices `(m, k, p, q)` of one scaled local time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridQuery {
    pub m: u32,
    pub k: u32,
    pub p: u64,
    pub q: i64,
}

/// Largest grid order the crate will index (4^31 time points).
pub const MAX_ORDER: u32 = 31;

fn pow4(e: u32) -> Result<u64> {
    if e > MAX_ORDER {
        return Err(invalid(format!("grid order {e} exceeds {MAX_ORDER}")));
    }
    Ok(1u64 << (2 * e))
}

fn require_1d(walk: &Walk) -> Result<()> {
    if walk.dim() != 1 {
        return Err(Error::UnsupportedLaw { expected: "one-dimensional", found: walk.law().to_string() });
    }
    Ok(())
}

/// `S_{m,k,p,q}` evaluated straight from the definition.
pub fn scaled_local_time(walk: &Walk, query: GridQuery) -> Result<u64> {
    require_1d(walk)?;
    let GridQuery { m, k, p, q } = query;
    if k > m {
        return Err(invalid(format!("sub-order k={k} exceeds order m={m}")));
    }
    let block = pow4(m)?;
    let end = p
        .checked_add(1)
        .and_then(|p1| p1.checked_mul(block))
        .ok_or_else(|| invalid("time block index overflows"))?;
    if (walk.len() as u64) < end {
        return Err(Error::WalkTooShort { required: end, available: walk.len() as u64 });
    }
    let sub = pow4(m - k)?;
    let width = 2f64.powi((m - k) as i32);
    let start = p * block;
    let count = (0..pow4(k)?)
        .filter(|s| {
            let lo = start + s * sub;
            (lo..lo + sub).any(|t| (walk.value(t as usize, 0) / width).floor() as i64 == q)
        })
        .count();
    Ok(count as u64)
}

/// Order-zero value block of every point, `⌊S(t)⌋`.
fn unit_blocks(walk: &Walk, len: usize) -> Vec<i64> {
    match walk.lattice() {
        Some(v) if walk.law().kind.scale() == 1.0 => v[..len].to_vec(),
        _ => (0..len).map(|t| walk.value(t, 0).floor() as i64).collect(),
    }
}

/// Sorted visited value blocks of every dyadic time block of a walk prefix
/// of length `4^n`, for all orders `0..=n`.
///
/// Built bottom-up: the value blocks of order `j` visited in a time block
/// are the halved (floor) blocks of its four children.
#[derive(Clone, Debug)]
pub struct LocalTimeGrid {
    order: u32,
    levels: Vec<Level>,
}

#[derive(Clone, Debug)]
struct Level {
    offsets: Vec<usize>,
    blocks: Vec<i64>,
}

impl Level {
    fn visited(&self, b: usize) -> &[i64] {
        &self.blocks[self.offsets[b]..self.offsets[b + 1]]
    }
}

/// A grid cell whose scaled local time exceeds the allowed limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub query: GridQuery,
    pub count: u64,
    pub limit: f64,
}

/// Outcome of [`local_time_event_holds`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventCheck {
    pub holds: bool,
    /// Smallest violating `(m, k, p, q)` in lexicographic order.
    pub first_violation: Option<Violation>,
}

impl LocalTimeGrid {
    pub fn build(walk: &Walk, n: u32) -> Result<Self> {
        require_1d(walk)?;
        let len = pow4(n)?;
        if (walk.len() as u64) < len {
            return Err(Error::WalkTooShort { required: len, available: walk.len() as u64 });
        }
        let base = unit_blocks(walk, len as usize);
        let mut levels = Vec::with_capacity(n as usize + 1);
        levels.push(Level { offsets: (0..=base.len()).collect(), blocks: base });
        for _ in 1..=n {
            let child = levels.last().expect("level zero exists");
            let count = (child.offsets.len() - 1) / 4;
            let mut offsets = Vec::with_capacity(count + 1);
            let mut blocks = Vec::new();
            offsets.push(0);
            let mut scratch = Vec::new();
            for b in 0..count {
                scratch.clear();
                for c in 4 * b..4 * b + 4 {
                    scratch.extend(child.visited(c).iter().map(|q| q >> 1));
                }
                scratch.sort_unstable();
                scratch.dedup();
                blocks.extend_from_slice(&scratch);
                offsets.push(blocks.len());
            }
            levels.push(Level { offsets, blocks });
        }
        Ok(LocalTimeGrid { order: n, levels })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    fn check(&self, query: GridQuery) -> Result<()> {
        let GridQuery { m, k, p, .. } = query;
        if k > m || m > self.order {
            return Err(invalid(format!("need k ≤ m ≤ {}, got k={k}, m={m}", self.order)));
        }
        if p >= 1u64 << (2 * (self.order - m)) {
            return Err(invalid(format!("time block {p} outside the grid")));
        }
        Ok(())
    }

    /// `S_{m,k,p,q}` read off the precomputed blocks.
    pub fn count(&self, query: GridQuery) -> Result<u64> {
        self.check(query)?;
        let GridQuery { m, k, p, q } = query;
        let level = &self.levels[(m - k) as usize];
        let per = 1usize << (2 * k);
        let first = p as usize * per;
        Ok((first..first + per).filter(|&c| level.visited(c).binary_search(&q).is_ok()).count() as u64)
    }

    /// `(q, S_{m,k,p,q})` for every visited `q`, ascending in `q`.
    fn counts_in(&self, m: u32, k: u32, p: usize, scratch: &mut Vec<i64>) -> Vec<(i64, u64)> {
        let level = &self.levels[(m - k) as usize];
        let per = 1usize << (2 * k);
        scratch.clear();
        for c in p * per..(p + 1) * per {
            scratch.extend_from_slice(level.visited(c));
        }
        scratch.sort_unstable();
        let mut out: Vec<(i64, u64)> = Vec::new();
        for &q in scratch.iter() {
            match out.last_mut() {
                Some((last, c)) if *last == q => *c += 1,
                _ => out.push((q, 1)),
            }
        }
        out
    }

    fn blocks_at(&self, m: u32) -> usize {
        1usize << (2 * (self.order - m))
    }

    /// Largest `S_{m,k,p,q}` over `p` and `q` for fixed `(m, k)`.
    pub fn max_count(&self, m: u32, k: u32) -> u64 {
        (0..self.blocks_at(m))
            .into_par_iter()
            .map_init(Vec::new, |scratch, p| {
                self.counts_in(m, k, p, scratch).into_iter().map(|(_, c)| c).max().unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// Smallest `γ` with `S_{m,k,p,q} ≤ γ·n·2^k` everywhere on the grid.
    pub fn required_gamma(&self) -> f64 {
        let n = f64::from(self.order);
        let mut gamma = 0f64;
        for m in 0..=self.order {
            for k in 0..=m {
                let count = self.max_count(m, k) as f64;
                let scale = n * 2f64.powi(k as i32);
                let mut g = count / scale;
                while g * scale < count {
                    g = g.next_up();
                }
                gamma = gamma.max(g);
            }
        }
        gamma
    }

    /// Checks `S_{m,k,p,q} ≤ γ·n·2^k` for all `k ≤ m ≤ n`, `p < 4^{n−m}` and
    /// every visited `q` (unvisited value blocks contribute zero).
    pub fn event_holds(&self, gamma: f64) -> EventCheck {
        let n = f64::from(self.order);
        for m in 0..=self.order {
            for k in 0..=m {
                let limit = gamma * n * 2f64.powi(k as i32);
                let found = (0..self.blocks_at(m)).into_par_iter().find_map_first(|p| {
                    let mut scratch = Vec::new();
                    self.counts_in(m, k, p, &mut scratch)
                        .into_iter()
                        .find(|&(_, c)| c as f64 > limit)
                        .map(|(q, count)| Violation { query: GridQuery { m, k, p: p as u64, q }, count, limit })
                });
                if found.is_some() {
                    return EventCheck { holds: false, first_violation: found };
                }
            }
        }
        EventCheck { holds: true, first_violation: None }
    }
}

/// Whether the uniform local-time event holds on `[0, 4^n)` at level `gamma`.
pub fn local_time_event_holds(walk: &Walk, n: u32, gamma: f64) -> Result<EventCheck> {
    if n == 0 {
        return Err(invalid("order n must be at least 1"));
    }
    if !(gamma >= 2.0) {
        return Err(invalid(format!("gamma must be at least 2, got {gamma}")));
    }
    Ok(LocalTimeGrid::build(walk, n)?.event_holds(gamma))
}

/// The default search grid for `γ`: 2, 2.25, …, 64.
pub fn default_gamma_grid() -> Vec<f64> {
    (0..=248).map(|i| 2.0 + 0.25 * f64::from(i)).collect()
}

/// Smallest `γ` from `grid` for which the event holds on every calibration
/// walk; `None` if no grid value suffices.
pub fn calibrate_gamma(walks: &[Walk], n: u32, grid: &[f64]) -> Result<Option<f64>> {
    if n == 0 {
        return Err(invalid("order n must be at least 1"));
    }
    let required = walks
        .par_iter()
        .map(|w| LocalTimeGrid::build(w, n).map(|g| g.required_gamma()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(2f64, f64::max);
    let mut sorted: Vec<f64> = grid.iter().copied().filter(|g| *g >= 2.0).collect();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted.into_iter().find(|&g| g >= required))
}

/// An exact non-negative integer bound, or `+∞` when it does not fit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bound {
    Finite(BigUint),
    Infinite,
}

impl Bound {
    pub fn admits(&self, value: u64) -> bool {
        match self {
            Bound::Finite(b) => BigUint::from(value) <= *b,
            Bound::Infinite => true,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(b) => write!(f, "{b}"),
            Bound::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "inf" {
            return Ok(Bound::Infinite);
        }
        s.parse::<BigUint>().map(Bound::Finite).map_err(serde::de::Error::custom)
    }
}

/// Bounds wider than this many bits are reported as infinite.
const MAX_BOUND_BITS: f64 = 16_777_216.0;

/// `⌊(γ·n·2^(k+1))^(m+1)⌋` computed exactly from the binary expansion of `γ`.
pub fn certificate_bound(gamma: f64, n: u64, k: u32, m: u32) -> Result<Bound> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(invalid(format!("gamma must be non-negative, got {gamma}")));
    }
    if gamma.is_infinite() {
        return Ok(Bound::Infinite);
    }
    if gamma == 0.0 || n == 0 {
        return Ok(Bound::Finite(BigUint::from(0u32)));
    }
    let bits_estimate =
        f64::from(m + 1) * (gamma.log2() + (n as f64).log2() + f64::from(k) + 1.0);
    if bits_estimate > MAX_BOUND_BITS {
        return Ok(Bound::Infinite);
    }
    // γ = mantissa · 2^exp exactly.
    let raw = gamma.to_bits();
    let biased = ((raw >> 52) & 0x7ff) as i64;
    let frac = raw & ((1u64 << 52) - 1);
    let (mantissa, exp) = if biased == 0 { (frac, -1074i64) } else { (frac | (1u64 << 52), biased - 1075) };
    let base = BigUint::from(mantissa) * BigUint::from(n);
    let power = base.pow(m + 1);
    let shift = (exp + i64::from(k) + 1) * i64::from(m + 1);
    let value = if shift >= 0 { power << shift as u64 } else { power >> (-shift) as u64 };
    Ok(Bound::Finite(value))
}

/// Checked instance of the multiscale upper bound on one walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub m: u32,
    pub k: u32,
    pub gamma: f64,
    pub assumption_local_time: bool,
    pub assumption_max: bool,
    pub bound: Bound,
    pub lis_observed: Option<u64>,
    pub local_time_violation: Option<Violation>,
    pub max_abs: f64,
    pub max_limit: f64,
}

impl CertificateReport {
    pub fn assumptions_hold(&self) -> bool {
        self.assumption_local_time && self.assumption_max
    }

    /// False only when both assumptions hold and the observed LIS exceeds the bound.
    pub fn is_sound(&self) -> bool {
        match self.lis_observed {
            Some(lis) if self.assumptions_hold() => self.bound.admits(lis),
            _ => true,
        }
    }
}

/// Evaluates both assumptions with `n = m·k` on `[0, 4^n]` and the bound
/// `(γ·n·2^(k+1))^(m+1)`; optionally records the exact LIS of `S|[0, 4^n)`.
pub fn certified_upper_bound(
    walk: &Walk,
    m: u32,
    k: u32,
    gamma: f64,
    compute_lis: bool,
) -> Result<CertificateReport> {
    require_1d(walk)?;
    if m == 0 || k == 0 {
        return Err(invalid("m and k must be positive"));
    }
    let n = m.checked_mul(k).filter(|&n| n <= MAX_ORDER).ok_or_else(|| invalid("m·k too large"))?;
    let len = pow4(n)?;
    if (walk.steps() as u64) < len {
        return Err(Error::WalkTooShort { required: len + 1, available: walk.len() as u64 });
    }
    let event = local_time_event_holds(walk, n, gamma)?;
    let max_abs = walk.max_abs(len as usize);
    let max_limit = f64::from(n) * 2f64.powi(n as i32);
    let lis_observed = compute_lis.then(|| match walk.lattice() {
        Some(v) => lnds_length_1d(&v[..len as usize]) as u64,
        None => lnds_length_1d(&walk.coordinate(0)[..len as usize]) as u64,
    });
    Ok(CertificateReport {
        m,
        k,
        gamma,
        assumption_local_time: event.holds,
        assumption_max: max_abs <= max_limit,
        bound: certificate_bound(gamma, u64::from(n), k, m)?,
        lis_observed,
        local_time_violation: event.first_violation,
        max_abs,
        max_limit,
    })
}

/// `⌊2^(n + 4√(n·log₂ n))⌋`, the unit threshold of the tail bound; exact up
/// to the `f64` precision of the exponent.
pub fn theorem_ub_threshold(n: u32) -> Result<BigUint> {
    if n == 0 {
        return Err(invalid("threshold defined for n ≥ 1"));
    }
    let nf = f64::from(n);
    let exponent = nf + 4.0 * (nf * nf.log2()).sqrt();
    let whole = exponent.floor();
    if whole <= 52.0 {
        return Ok(BigUint::from(2f64.powf(exponent).floor() as u64));
    }
    let top = (2f64.powf(exponent - whole) * 2f64.powi(52)).floor() as u64;
    Ok(BigUint::from(top) << (whole as u64 - 52))
}

/// Exact LIS of `S|[0, len)` for `trials` independent walks.
pub fn lis_samples(law: StepLaw, len: usize, trials: u64, seed: u64) -> Result<Vec<u64>> {
    if law.dim != 1 {
        return Err(invalid("LIS samples are one-dimensional"));
    }
    if len == 0 {
        return Err(invalid("walk length must be positive"));
    }
    Ok((0..trials)
        .into_par_iter()
        .map(|t| {
            let walk = generate_walk(law, len - 1, derive_seed(seed, &[len as u64, t]));
            match walk.lattice() {
                Some(v) => lnds_length_1d(v) as u64,
                None => lnds_length_1d(&walk.coordinate(0)) as u64,
            }
        })
        .collect())
}

/// Both sides of `P(LIS ≥ ℓN) ≤ P(LIS ≥ N)^ℓ` estimated on one sample set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubmultProbe {
    pub threshold: u64,
    pub ell: u64,
    pub trials: u64,
    /// Estimate of `P(LIS ≥ ℓN)`.
    pub p_ell_n: f64,
    /// Estimate of `P(LIS ≥ N)`.
    pub p_n: f64,
    /// Standard error of `p_ell_n − p_n^ℓ` (delta method).
    pub stderr: f64,
}

impl SubmultProbe {
    pub fn from_samples(samples: &[u64], threshold: u64, ell: u64) -> Result<Self> {
        if samples.len() < 100 {
            return Err(invalid(format!("need at least 100 trials, got {}", samples.len())));
        }
        if ell == 0 || threshold == 0 {
            return Err(invalid("N and ℓ must be positive"));
        }
        let t = samples.len() as f64;
        let frac = |level: u64| samples.iter().filter(|&&x| x >= level).count() as f64 / t;
        let p_ell_n = frac(threshold.saturating_mul(ell));
        let p_n = frac(threshold);
        let se_left = (p_ell_n * (1.0 - p_ell_n) / t).sqrt();
        let se_right = ell as f64 * p_n.powi(ell as i32 - 1) * (p_n * (1.0 - p_n) / t).sqrt();
        Ok(SubmultProbe {
            threshold,
            ell,
            trials: samples.len() as u64,
            p_ell_n,
            p_n,
            stderr: (se_left * se_left + se_right * se_right).sqrt(),
        })
    }

    /// `p_ell_n ≤ p_n^ℓ + z·stderr`.
    pub fn holds_within(&self, z: f64) -> bool {
        self.p_ell_n <= self.p_n.powi(self.ell as i32) + z * self.stderr
    }
}

/// Estimates both sides of the submultiplicativity inequality over walks
/// of length `4^n`.
pub fn submultiplicativity_probe(
    law: StepLaw,
    n: u32,
    threshold: u64,
    ell: u64,
    trials: u64,
    seed: u64,
) -> Result<SubmultProbe> {
    if trials < 100 {
        return Err(invalid(format!("need at least 100 trials, got {trials}")));
    }
    let samples = lis_samples(law, pow4(n)? as usize, trials, seed)?;
    SubmultProbe::from_samples(&samples, threshold, ell)
}

/// Sample statistics of `S_{m,k,0,0}` for walks started at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeStat {
    pub m: u32,
    pub k: u32,
    pub trials: u64,
    pub mean: f64,
    pub stderr: f64,
    /// `mean / 2^k`.
    pub ratio: f64,
    pub ratio_stderr: f64,
    /// Sorted sample values, for tail estimates.
    pub samples: Vec<u64>,
}

impl LocalTimeStat {
    /// Empirical `P(S_{m,k,0,0} ≥ level)` with its standard error.
    pub fn survival(&self, level: f64) -> (f64, f64) {
        let t = self.samples.len() as f64;
        let above = self.samples.len() - self.samples.partition_point(|&x| (x as f64) < level);
        let p = above as f64 / t;
        (p, (p * (1.0 - p) / t).sqrt())
    }
}

/// Monte Carlo estimate of `E S_{m,k,0,0}` for each `k` in `ks`.
pub fn local_time_moments(law: StepLaw, m: u32, ks: &[u32], trials: u64, seed: u64) -> Result<Vec<LocalTimeStat>> {
    if law.dim != 1 {
        return Err(invalid("local times are one-dimensional"));
    }
    if trials < 2 {
        return Err(invalid("need at least two trials"));
    }
    if let Some(k) = ks.iter().find(|&&k| k > m) {
        return Err(invalid(format!("k={k} exceeds m={m}")));
    }
    let len = pow4(m)? as usize;
    let per_trial: Vec<Vec<u64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let walk = generate_walk(law, len - 1, derive_seed(seed, &[u64::from(m), t]));
            let grid = LocalTimeGrid::build(&walk, m)?;
            ks.iter().map(|&k| grid.count(GridQuery { m, k, p: 0, q: 0 })).collect::<Result<Vec<u64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let mut samples: Vec<u64> = per_trial.iter().map(|row| row[i]).collect();
            samples.sort_unstable();
            let t = trials as f64;
            let mean = samples.iter().sum::<u64>() as f64 / t;
            let var = samples.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (t - 1.0);
            let stderr = (var / t).sqrt();
            let scale = 2f64.powi(k as i32);
            LocalTimeStat { m, k, trials, mean, stderr, ratio: mean / scale, ratio_stderr: stderr / scale, samples }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::walk::StepKind;

    fn lazy(values: Vec<i64>) -> Walk {
        Walk::from_lattice(StepLaw::new(StepKind::Lazy, 1).unwrap(), 0, values).unwrap()
    }

    fn unit(values: Vec<i64>) -> Walk {
        Walk::from_lattice(StepLaw::new(StepKind::Uniform(64), 1).unwrap(), 0, values).unwrap()
    }

    #[test]
    fn constant_path_visits_every_sub_interval() {
        let w = lazy(vec![0; 16]);
        assert_eq!(scaled_local_time(&w, GridQuery { m: 2, k: 2, p: 0, q: 0 }).unwrap(), 16);
        let grid = LocalTimeGrid::build(&w, 2).unwrap();
        assert_eq!(grid.count(GridQuery { m: 2, k: 2, p: 0, q: 0 }).unwrap(), 16);
    }

    #[test]
    fn hand_scanned_path() {
        let w = Walk::simple_1d(vec![0, 1, 0, -1]).unwrap();
        let query = GridQuery { m: 1, k: 1, p: 0, q: 0 };
        assert_eq!(scaled_local_time(&w, query).unwrap(), 2);
        assert_eq!(LocalTimeGrid::build(&w, 1).unwrap().count(query).unwrap(), 2);
        assert_eq!(scaled_local_time(&w, GridQuery { m: 1, k: 1, p: 0, q: -1 }).unwrap(), 1);
        assert_eq!(scaled_local_time(&w, GridQuery { m: 1, k: 0, p: 0, q: 0 }).unwrap(), 1);
    }

    #[test]
    fn queries_are_validated() {
        let w = Walk::simple_1d(vec![0, 1, 0, -1]).unwrap();
        assert!(scaled_local_time(&w, GridQuery { m: 1, k: 2, p: 0, q: 0 }).is_err());
        assert!(matches!(
            scaled_local_time(&w, GridQuery { m: 1, k: 1, p: 1, q: 0 }),
            Err(Error::WalkTooShort { .. })
        ));
        assert!(LocalTimeGrid::build(&w, 2).is_err());
    }

    #[test]
    fn constant_path_event_is_tight() {
        let w = lazy(vec![0; 5]);
        let check = local_time_event_holds(&w, 1, 2.0).unwrap();
        assert!(check.holds);
        assert_eq!(LocalTimeGrid::build(&w, 1).unwrap().required_gamma(), 2.0);
        // A constant path needs γ·n ≥ 2^n; at n = 3 only S_{3,3,0,0} = 64 > 48 fails.
        let w = lazy(vec![0; 64]);
        assert!(local_time_event_holds(&w, 2, 2.0).unwrap().holds);
        let check = local_time_event_holds(&w, 3, 2.0).unwrap();
        assert!(!check.holds);
        let v = check.first_violation.unwrap();
        assert_eq!(v.query, GridQuery { m: 3, k: 3, p: 0, q: 0 });
        assert_eq!((v.count, v.limit), (64, 48.0));
        assert!(v.count as f64 > v.limit);
    }

    #[test]
    fn large_gamma_holds_vacuously() {
        for seed in 0..20 {
            let w = generate_walk(StepLaw::simple(1), 256, seed);
            // γ·n ≥ 2^n makes γ·n·2^k ≥ 4^k for every k ≤ n.
            assert!(local_time_event_holds(&w, 4, 4.0).unwrap().holds);
        }
        assert!(local_time_event_holds(&generate_walk(StepLaw::simple(1), 16, 0), 2, 1.5).is_err());
    }

    #[test]
    fn certificate_bound_formula() {
        assert_eq!(certificate_bound(2.0, 1, 1, 1).unwrap().to_string(), "64");
        assert_eq!(certificate_bound(2.0, 2, 1, 2).unwrap().to_string(), "4096");
        // (2.5·1·4)^2 = 100 exactly.
        assert_eq!(certificate_bound(2.5, 1, 1, 1).unwrap().to_string(), "100");
        // (0.1·1·4)^1 rounds down to 0.
        assert_eq!(certificate_bound(0.1, 1, 1, 0).unwrap().to_string(), "0");
        assert_eq!(certificate_bound(f64::INFINITY, 1, 1, 1).unwrap(), Bound::Infinite);
        assert_eq!(certificate_bound(1e300, 1 << 40, 30, 1 << 20).unwrap(), Bound::Infinite);
        let huge = certificate_bound(3.0, 36, 6, 6).unwrap();
        assert_eq!(huge.to_string(), (3u128 * 36 * 128).pow(7).to_string());
    }

    #[test]
    fn certificate_report_fields() {
        let w = generate_walk(StepLaw::simple(1), 4, 3);
        let r = certified_upper_bound(&w, 1, 1, 2.0, true).unwrap();
        assert_eq!(r.bound.to_string(), "64");
        assert!(r.lis_observed.unwrap() <= 4);
        assert!(r.is_sound());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"bound\":\"64\""));
        let back: CertificateReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(certified_upper_bound(&generate_walk(StepLaw::simple(1), 3, 3), 1, 1, 2.0, true).is_err());
    }

    #[test]
    fn threshold_values() {
        assert_eq!(theorem_ub_threshold(1).unwrap(), BigUint::from(2u32));
        let expected = 2f64.powf(4.0 + 8.0 * 2f64.sqrt()).floor() as u64;
        assert_eq!(theorem_ub_threshold(4).unwrap(), BigUint::from(expected));
        let mut prev = theorem_ub_threshold(1).unwrap();
        for n in 2..80 {
            let next = theorem_ub_threshold(n).unwrap();
            assert!(next > prev, "n={n}");
            prev = next;
        }
        assert!(theorem_ub_threshold(0).is_err());
    }

    #[test]
    fn submultiplicativity_edge_cases() {
        let samples: Vec<u64> = (0..200).map(|i| i % 50).collect();
        let same = SubmultProbe::from_samples(&samples, 10, 1).unwrap();
        assert_eq!(same.p_ell_n, same.p_n);
        let one = SubmultProbe::from_samples(&samples, 1, 3).unwrap();
        assert!(one.p_ell_n <= 1.0);
        assert!(SubmultProbe::from_samples(&samples[..99], 1, 1).is_err());
        assert!(submultiplicativity_probe(StepLaw::simple(1), 2, 5, 2, 99, 0).is_err());
    }

    #[test]
    fn gamma_calibration_picks_smallest_grid_value() {
        let walks: Vec<Walk> = (0..10).map(|s| generate_walk(StepLaw::simple(1), 256, s)).collect();
        let grid = default_gamma_grid();
        let gamma = calibrate_gamma(&walks, 4, &grid).unwrap().unwrap();
        assert!(walks.iter().all(|w| local_time_event_holds(w, 4, gamma).unwrap().holds));
        if gamma > 2.0 {
            let below = gamma - 0.25;
            assert!(walks.iter().any(|w| !local_time_event_holds(w, 4, below).unwrap().holds));
        }
        assert_eq!(calibrate_gamma(&walks, 4, &[]).unwrap(), None);
    }

    fn arbitrary_walk() -> impl Strategy<Value = Walk> {
        prop::collection::vec(-3i64..=3, 63).prop_map(|steps| {
            let mut v = vec![0i64];
            for s in steps {
                v.push(v.last().unwrap() + s);
            }
            unit(v)
        })
    }

    proptest! {
        #[test]
        fn windowed_counts_match_definition(walk in arbitrary_walk(), q in -6i64..6) {
            let grid = LocalTimeGrid::build(&walk, 3).unwrap();
            for m in 0..=3u32 {
                for k in 0..=m {
                    for p in 0..(1u64 << (2 * (3 - m))) {
                        let query = GridQuery { m, k, p, q };
                        let direct = scaled_local_time(&walk, query).unwrap();
                        prop_assert_eq!(grid.count(query).unwrap(), direct);
                        prop_assert!(direct <= 1 << (2 * k));
                        if k == 0 {
                            prop_assert!(direct <= 1);
                        }
                    }
                }
            }
        }

        #[test]
        fn required_gamma_is_the_event_threshold(seed in any::<u64>()) {
            let walk = generate_walk(StepLaw::simple(1), 256, seed);
            let grid = LocalTimeGrid::build(&walk, 4).unwrap();
            let g = grid.required_gamma().max(2.0);
            prop_assert!(grid.event_holds(g).holds);
            if grid.required_gamma() > 2.0 {
                prop_assert!(!grid.event_holds(g.next_down()).holds);
            }
        }

        #[test]
        fn refinement_splits_over_child_blocks(walk in arbitrary_walk(), q in -4i64..4) {
            // The four order-2 blocks partition the order-3 block, and both sides
            // count sub-blocks of the same order against the same value block.
            let grid = LocalTimeGrid::build(&walk, 3).unwrap();
            for k in 1..=3u32 {
                let parent = grid.count(GridQuery { m: 3, k, p: 0, q }).unwrap();
                let children: u64 = (0..4u64)
                    .map(|c| grid.count(GridQuery { m: 2, k: k - 1, p: c, q }).unwrap())
                    .sum();
                prop_assert_eq!(parent, children);
            }
        }
    }
}

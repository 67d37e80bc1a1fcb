//! Dyadic construction of a long increasing index set in a simple walk
//! stopped when it first reaches `2^n`.
//!
//! Every value `0 ≤ x ≤ 2^n` gets a time interval `I_x = [a_x, b_x]`, filled
//! in decreasing order of the 2-adic valuation of `x`: `I_0` ends at the last
//! visit to 0, `I_{2^n}` is the hitting time itself, and a value `x` of
//! valuation `k` opens at its first visit after `b_{x−2^k}` and closes at its
//! last visit before `a_{x+2^k}`. The intervals are ordered, so all visits to
//! `x` inside `I_x`, over `0 < x < 2^n`, form a non-decreasing chain.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lis::{lnds_length_1d, MonotoneChain};
use crate::rng::derive_seed;
use crate::walk::{generate_until_hit, generate_walk, StepKind, StepLaw, Stopped, Walk};

/// 2-adic valuation; zero is divisible by every power of two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ord2 {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Ord2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ord2::Finite(k) => write!(f, "{k}"),
            Ord2::Infinite => f.write_str("inf"),
        }
    }
}

pub fn ord2(x: i64) -> Ord2 {
    if x == 0 {
        Ord2::Infinite
    } else {
        Ord2::Finite(x.trailing_zeros())
    }
}

/// The interval assigned to one value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueInterval {
    pub x: i64,
    pub start: usize,
    pub end: usize,
    /// Number of `t ∈ [start, end]` with `S(t) = x`.
    pub visits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicConstruction {
    pub order: u32,
    /// Indexed by value `x = 0..=2^order`.
    pub intervals: Vec<ValueInterval>,
    pub index_set: MonotoneChain,
}

impl DyadicConstruction {
    pub fn len(&self) -> usize {
        self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_set.is_empty()
    }

    /// Visit counts grouped by 2-adic valuation of the interior values.
    pub fn excursion_visit_counts(&self) -> BTreeMap<u32, Vec<u64>> {
        let top = self.intervals.len() - 1;
        let mut out: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for iv in &self.intervals[1..top] {
            if let Ord2::Finite(k) = ord2(iv.x) {
                out.entry(k).or_default().push(iv.visits);
            }
        }
        out
    }

    /// Re-checks interval ordering, index membership and the size identity.
    pub fn validate(&self, walk: &Walk) -> Result<()> {
        let values = walk.lattice().ok_or_else(|| invalid("dyadic construction needs a lattice walk"))?;
        for w in self.intervals.windows(2) {
            if w[0].end >= w[1].start {
                return Err(invalid(format!("intervals of {} and {} overlap", w[0].x, w[1].x)));
            }
        }
        let top = self.intervals.len() - 1;
        let mut cursor = 1;
        for &t in self.index_set.indices() {
            while cursor < top && self.intervals[cursor].end < t {
                cursor += 1;
            }
            let iv = &self.intervals[cursor];
            if cursor >= top || t < iv.start || values[t] != iv.x {
                return Err(invalid(format!("index {t} is not a visit inside its value interval")));
            }
        }
        let total: u64 = self.intervals[1..top].iter().map(|iv| iv.visits).sum();
        if total != self.index_set.len() as u64 {
            return Err(invalid("index set size differs from interior visit total"));
        }
        self.index_set.validate(values)
    }

    /// CSV with columns `x, ord2, a_x, b_x, visits`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "ord2", "a_x", "b_x", "visits"])?;
        for iv in &self.intervals {
            wtr.write_record([
                iv.x.to_string(),
                ord2(iv.x).to_string(),
                iv.start.to_string(),
                iv.end.to_string(),
                iv.visits.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Builds the dyadic index set for a simple walk that ends at its first
/// visit to `2^n`.
pub fn dyadic_increasing_set(walk: &Walk, n: u32) -> Result<DyadicConstruction> {
    if walk.law().kind != StepKind::Simple || walk.dim() != 1 {
        return Err(Error::UnsupportedLaw { expected: "one-dimensional simple", found: walk.law().to_string() });
    }
    if n > 40 {
        return Err(invalid("dyadic order too large"));
    }
    let values = walk.lattice().expect("simple walks are lattice walks");
    let top = 1i64 << n;
    let tau = values.len() - 1;
    if values[tau] != top || values[..tau].contains(&top) {
        return Err(invalid(format!("walk must end at its first visit to {top}")));
    }

    // Visit times of every value in [0, 2^n]; walks stay below 2^n before tau.
    let mut visits: Vec<Vec<usize>> = vec![Vec::new(); top as usize + 1];
    for (t, &v) in values.iter().enumerate() {
        if (0..=top).contains(&v) {
            visits[v as usize].push(t);
        }
    }
    let zero = &visits[0];
    let last_zero = *zero.last().expect("S(0) = 0");

    let mut start = vec![0usize; top as usize + 1];
    let mut end = vec![0usize; top as usize + 1];
    end[0] = last_zero;
    start[top as usize] = tau;
    end[top as usize] = tau;

    for k in (0..n).rev() {
        let step = 1i64 << k;
        let mut x = step;
        while x < top {
            let times = &visits[x as usize];
            let after = end[(x - step) as usize];
            let before = start[(x + step) as usize];
            let first = times.partition_point(|&t| t <= after);
            let last = times.partition_point(|&t| t < before);
            if first >= last {
                return Err(invalid(format!("no visit to {x} between {after} and {before}")));
            }
            start[x as usize] = times[first];
            end[x as usize] = times[last - 1];
            x += 2 * step;
        }
    }

    let mut intervals = Vec::with_capacity(top as usize + 1);
    let mut index_set = Vec::new();
    for x in 0..=top {
        let times = &visits[x as usize];
        let (a, b) = (start[x as usize], end[x as usize]);
        let lo = times.partition_point(|&t| t < a);
        let hi = times.partition_point(|&t| t <= b);
        if x > 0 && x < top {
            index_set.extend_from_slice(&times[lo..hi]);
        }
        intervals.push(ValueInterval { x, start: a, end: b, visits: (hi - lo) as u64 });
    }
    Ok(DyadicConstruction { order: n, intervals, index_set: MonotoneChain::new(index_set, 1) })
}

/// Outcome of one stopped-walk trial.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicTrial {
    pub construction: DyadicConstruction,
    /// Exact LIS of `S|[0, τ)`.
    pub lis: Option<u64>,
    pub tau: usize,
}

/// Samples a simple walk stopped at `2^n` for trial `t` of `seed` and runs
/// the construction; `None` when the walk is censored at `cap`.
pub fn dyadic_trial(n: u32, seed: u64, t: u64, cap: usize, with_lis: bool) -> Result<Option<DyadicTrial>> {
    let level = 1i64 << n;
    let walk = match generate_until_hit(StepLaw::simple(1), level, derive_seed(seed, &[u64::from(n), t]), cap)? {
        Stopped::Hit(w) => w,
        Stopped::Censored(_) => return Ok(None),
    };
    let construction = dyadic_increasing_set(&walk, n)?;
    let values = walk.lattice().expect("lattice");
    let tau = values.len() - 1;
    let lis = with_lis.then(|| lnds_length_1d(&values[..tau]) as u64);
    Ok(Some(DyadicTrial { construction, lis, tau }))
}

/// Summary of repeated dyadic constructions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicSummary {
    pub order: u32,
    pub trials: u64,
    pub censored: u64,
    pub cap: usize,
    pub mean: f64,
    pub variance: f64,
    /// Mean predicted for the construction, `n·2^(n−1)`.
    pub expected_mean: f64,
    /// Variance bound `2^(2n−1)`.
    pub variance_bound: f64,
    /// Mean of `|A| / LIS` when the exact LIS was computed.
    pub mean_ratio_to_lis: Option<f64>,
    pub sizes: Vec<u64>,
    /// Visit counts pooled by 2-adic valuation.
    pub visit_counts: BTreeMap<u32, Vec<u64>>,
}

/// Runs `trials` stopped-walk constructions; censored walks are counted and
/// excluded, never truncated.
pub fn dyadic_experiment(n: u32, trials: u64, seed: u64, cap: usize, with_lis: bool) -> Result<DyadicSummary> {
    if trials < 2 {
        return Err(invalid("need at least two trials"));
    }
    let results: Vec<Option<DyadicTrial>> =
        (0..trials).into_par_iter().map(|t| dyadic_trial(n, seed, t, cap, with_lis)).collect::<Result<_>>()?;
    let done: Vec<&DyadicTrial> = results.iter().flatten().collect();
    let censored = trials - done.len() as u64;
    let sizes: Vec<u64> = done.iter().map(|d| d.construction.len() as u64).collect();
    let count = sizes.len() as f64;
    let mean = sizes.iter().sum::<u64>() as f64 / count;
    let variance = sizes.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let mean_ratio_to_lis = with_lis.then(|| {
        done.iter()
            .map(|d| d.construction.len() as f64 / d.lis.expect("computed") as f64)
            .sum::<f64>()
            / count
    });
    let mut visit_counts: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    for d in &done {
        for (k, counts) in d.construction.excursion_visit_counts() {
            visit_counts.entry(k).or_default().extend(counts);
        }
    }
    let nf = f64::from(n);
    Ok(DyadicSummary {
        order: n,
        trials,
        censored,
        cap,
        mean,
        variance,
        expected_mean: nf * 2f64.powf(nf - 1.0),
        variance_bound: 2f64.powf(2.0 * nf - 1.0),
        mean_ratio_to_lis,
        sizes,
        visit_counts,
    })
}

/// Smallest `m` with `m·2^m/9 ≤ ε√n·log₂ n < m·2^m/4`, if any.
pub fn select_m(n: u64, epsilon: f64) -> Option<u32> {
    let target = epsilon * (n as f64).sqrt() * (n as f64).log2();
    (1..62u32).find(|&m| {
        let scale = f64::from(m) * 2f64.powi(m as i32);
        scale / 9.0 <= target && target < scale / 4.0
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremLbReport {
    pub n: u64,
    pub epsilon: f64,
    pub trials: u64,
    /// `ε·√n·log₂ n`.
    pub threshold: f64,
    /// Fraction of trials with `LIS(S|[0, n)) < threshold`.
    pub failure_rate: f64,
    /// `250·ε`.
    pub failure_bound: f64,
    pub mean_lis: f64,
    /// `√n·log₂ n / 1000`.
    pub mean_lower_bound: f64,
    /// Dyadic scale from the selection rule, when one exists.
    pub m: Option<u32>,
}

/// Empirical `P(LIS(S|[0, n)) < ε√n·log₂ n)` for the simple walk.
pub fn theorem_lb_check(n: u64, epsilon: f64, trials: u64, seed: u64) -> Result<TheoremLbReport> {
    if n == 0 || trials == 0 {
        return Err(invalid("n and trials must be positive"));
    }
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    let lis: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let walk = generate_walk(StepLaw::simple(1), n as usize - 1, derive_seed(seed, &[n, t]));
            lnds_length_1d(walk.lattice().expect("lattice")) as u64
        })
        .collect();
    let nf = n as f64;
    let scale = nf.sqrt() * nf.log2();
    let threshold = epsilon * scale;
    let failures = lis.iter().filter(|&&l| (l as f64) < threshold).count();
    Ok(TheoremLbReport {
        n,
        epsilon,
        trials,
        threshold,
        failure_rate: failures as f64 / trials as f64,
        failure_bound: 250.0 * epsilon,
        mean_lis: lis.iter().sum::<u64>() as f64 / trials as f64,
        mean_lower_bound: scale / 1000.0,
        m: select_m(n, epsilon),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingTail {
    pub m: u32,
    pub n: u64,
    pub trials: u64,
    /// Empirical `P(τ_{2^m} > n)`.
    pub estimate: f64,
    pub stderr: f64,
    /// `12·2^m/√n`.
    pub bound: f64,
}

/// Fraction of simple walks that have not reached `2^m` after `n` steps.
pub fn hitting_tail_probe(m: u32, n: u64, trials: u64, seed: u64) -> Result<HittingTail> {
    if trials == 0 || n == 0 {
        return Err(invalid("n and trials must be positive"));
    }
    let level = 1i64 << m;
    let censored = (0..trials)
        .into_par_iter()
        .map(|t| {
            generate_until_hit(StepLaw::simple(1), level, derive_seed(seed, &[u64::from(m), n, t]), n as usize)
                .map(|s| s.is_censored())
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&c| c)
        .count();
    let p = censored as f64 / trials as f64;
    Ok(HittingTail {
        m,
        n,
        trials,
        estimate: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        bound: 12.0 * 2f64.powi(m as i32) / (n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_adic_valuation() {
        assert_eq!(ord2(12), Ord2::Finite(2));
        assert_eq!(ord2(1), Ord2::Finite(0));
        assert_eq!(ord2(-8), Ord2::Finite(3));
        assert_eq!(ord2(0), Ord2::Infinite);
        assert!(ord2(0) > ord2(1 << 40));
    }

    #[test]
    fn hand_traced_paths() {
        let w = Walk::simple_1d(vec![0, 1, 2]).unwrap();
        let c = dyadic_increasing_set(&w, 1).unwrap();
        assert_eq!(c.index_set.indices(), &[1]);
        assert_eq!((c.intervals[0].start, c.intervals[0].end), (0, 0));
        assert_eq!((c.intervals[1].start, c.intervals[1].end), (1, 1));
        assert_eq!((c.intervals[2].start, c.intervals[2].end), (2, 2));
        assert_eq!(c.excursion_visit_counts()[&0], vec![1]);

        let w = Walk::simple_1d(vec![0, 1, 2, 3, 4]).unwrap();
        let c = dyadic_increasing_set(&w, 2).unwrap();
        assert_eq!(c.index_set.indices(), &[1, 2, 3]);
        c.validate(&w).unwrap();
    }

    #[test]
    fn repeated_visits_are_collected() {
        // 0 1 0 1 2 1 2 3 2 3 4: value 2 (order 1) is visited at 4, 6, 8.
        let w = Walk::simple_1d(vec![0, 1, 0, 1, 2, 1, 2, 3, 2, 3, 4]).unwrap();
        let c = dyadic_increasing_set(&w, 2).unwrap();
        assert_eq!(c.intervals[0].end, 2);
        assert_eq!((c.intervals[2].start, c.intervals[2].end, c.intervals[2].visits), (4, 8, 3));
        assert_eq!((c.intervals[1].start, c.intervals[1].end), (3, 3));
        assert_eq!((c.intervals[3].start, c.intervals[3].end), (9, 9));
        assert_eq!(c.index_set.indices(), &[3, 4, 6, 8, 9]);
        c.validate(&w).unwrap();
        assert!(c.excursion_visit_counts().values().flatten().all(|&v| v >= 1));

        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,ord2,a_x,b_x,visits\n0,inf,0,2,2\n"));
    }

    #[test]
    fn preconditions_are_enforced() {
        assert!(dyadic_increasing_set(&Walk::simple_1d(vec![0, 1, 2, 1]).unwrap(), 1).is_err());
        assert!(dyadic_increasing_set(&Walk::simple_1d(vec![0, 1, 2, 1, 2]).unwrap(), 1).is_err());
        let lazy = Walk::from_lattice(StepLaw::new(StepKind::Lazy, 1).unwrap(), 0, vec![0, 1, 2]).unwrap();
        assert!(dyadic_increasing_set(&lazy, 1).is_err());
    }

    #[test]
    fn random_constructions_are_valid_and_dominated() {
        for t in 0..300 {
            let Some(trial) = dyadic_trial(4, 99, t, 1 << 20, true).unwrap() else { continue };
            let walk = generate_until_hit(StepLaw::simple(1), 16, derive_seed(99, &[4, t]), 1 << 20)
                .unwrap()
                .hit()
                .unwrap();
            trial.construction.validate(&walk).unwrap();
            assert!(trial.construction.len() as u64 <= trial.lis.unwrap());
        }
    }

    #[test]
    fn m_selection_rule() {
        assert_eq!(select_m(1, 0.5), None);
        let n = 1u64 << 16;
        assert_eq!(select_m(n, 0.02), Some(6));
        let target = 0.02 * 256.0 * 16.0;
        assert!(384.0 / 9.0 <= target && target < 384.0 / 4.0);
        // 40.96 lies between 160/4 and 384/9.
        assert_eq!(select_m(n, 0.01), None);
    }

    #[test]
    fn tiny_epsilon_never_fails() {
        let r = theorem_lb_check(100, 1e-4, 50, 3).unwrap();
        assert!(r.threshold < 1.0);
        assert_eq!(r.failure_rate, 0.0);
    }
}

//! Scaling experiments and concentration probes.
//!
//! Trial `t` at size `n` always draws from `derive_seed(master, [n, t])`,
//! whatever the statistic or thread count, so experiments can be split,
//! merged and rerun without changing a single sample.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::dyadic_increasing_set;
use crate::error::{invalid, Error, Result};
use crate::greedy::greedy_chain;
use crate::lis::{lnds_length, lnds_length_1d, lnis_length_1d, longest_level_set, record_times};
use crate::rng::{self, derive_seed};
use crate::stats::{linear_fit, Aggregate, ExponentFit};
use crate::walk::{
    generate_until_hit, generate_walk, generate_walk_with, simple_walk_endpoint, simple_walk_extremes, Positions,
    StepKind, StepLaw, Stopped, Walk,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    ExactLis,
    RecordCount,
    LevelSet,
    #[serde(rename = "dyadic-A")]
    DyadicA,
    GreedyChain,
}

impl Statistic {
    pub const ALL: [Statistic; 5] =
        [Statistic::ExactLis, Statistic::RecordCount, Statistic::LevelSet, Statistic::DyadicA, Statistic::GreedyChain];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::ExactLis => "exact-lis",
            Statistic::RecordCount => "record-count",
            Statistic::LevelSet => "level-set",
            Statistic::DyadicA => "dyadic-A",
            Statistic::GreedyChain => "greedy-chain",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Statistic::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown statistic {s:?}")))
    }
}

/// Default cap on stopped-walk length for `dyadic-A`.
pub const DEFAULT_CAP: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub law: StepLaw,
    /// Number of walk positions, `S(0), …, S(n−1)`; for `dyadic-A`, the
    /// level `2^j` at which the walk is stopped.
    pub sizes: Vec<u64>,
    pub trials: u64,
    pub statistic: Statistic,
    pub master_seed: u64,
    /// Step cap for stopped walks; longer walks count as censored.
    pub cap: u64,
}

impl ExperimentSpec {
    pub fn new(law: StepLaw, sizes: Vec<u64>, trials: u64, statistic: Statistic, master_seed: u64) -> Self {
        ExperimentSpec { law, sizes, trials, statistic, master_seed, cap: DEFAULT_CAP }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.sizes.is_empty() || self.sizes[0] == 0 {
            return Err(invalid("sizes must be non-empty and positive"));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sizes must be strictly increasing"));
        }
        if self.sizes.iter().any(|&n| n > usize::MAX as u64 / 8) {
            return Err(invalid("size too large"));
        }
        let one_d = self.law.dim == 1;
        match self.statistic {
            Statistic::RecordCount if !one_d => Err(invalid("record-count needs a one-dimensional law")),
            Statistic::LevelSet if !(one_d && self.law.is_lattice()) => {
                Err(invalid("level-set needs a one-dimensional lattice law"))
            }
            Statistic::DyadicA => {
                if self.law != StepLaw::simple(1) {
                    Err(invalid("dyadic-A needs the one-dimensional simple law"))
                } else if self.sizes.iter().any(|&n| n < 2 || !n.is_power_of_two()) {
                    Err(invalid("dyadic-A sizes are stopping levels and must be powers of two ≥ 2"))
                } else if self.cap == 0 {
                    Err(invalid("cap must be positive"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

fn statistic_on(walk: &Walk, statistic: Statistic) -> Result<u64> {
    let d = walk.dim();
    let len = match statistic {
        Statistic::ExactLis => match walk.positions() {
            Positions::Lattice(v) => lnds_length(v, d)?,
            Positions::Real(v) => lnds_length(v, d)?,
        },
        Statistic::RecordCount => match walk.positions() {
            Positions::Lattice(v) => record_times(v).len(),
            Positions::Real(v) => record_times(v).len(),
        },
        Statistic::LevelSet => longest_level_set(walk.lattice().expect("validated lattice")).len(),
        Statistic::GreedyChain => greedy_chain(walk, walk.len())?.len(),
        Statistic::DyadicA => unreachable!("dyadic-A runs on stopped walks"),
    };
    Ok(len as u64)
}

/// Value of trial `t` at size `n`; `None` when a stopped walk is censored.
pub fn trial_value(spec: &ExperimentSpec, n: u64, t: u64) -> Result<Option<u64>> {
    let seed = derive_seed(spec.master_seed, &[n, t]);
    if spec.statistic == Statistic::DyadicA {
        return match generate_until_hit(spec.law, n as i64, seed, spec.cap as usize)? {
            Stopped::Hit(w) => Ok(Some(dyadic_increasing_set(&w, n.trailing_zeros())?.len() as u64)),
            Stopped::Censored(_) => Ok(None),
        };
    }
    let walk = generate_walk(spec.law, n as usize - 1, seed);
    statistic_on(&walk, spec.statistic).map(Some)
}

/// Every trial value at size `n`, in trial order.
pub fn trial_values(spec: &ExperimentSpec, n: u64) -> Result<Vec<Option<u64>>> {
    (0..spec.trials).into_par_iter().map(|t| trial_value(spec, n, t)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub statistic: Statistic,
    pub law: StepLaw,
    pub n: u64,
    pub trials: u64,
    pub censored: u64,
    pub aggregate: Aggregate,
}

impl ScalingRow {
    pub fn mean(&self) -> Option<f64> {
        (self.aggregate.count > 0).then(|| self.aggregate.mean())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub spec: ExperimentSpec,
    pub rows: Vec<ScalingRow>,
    /// Some trial hit the cap and was left out of its row.
    pub partial: bool,
}

impl ScalingTable {
    /// `(n, mean)` for rows with at least one uncensored trial.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().filter_map(|r| r.mean().map(|m| (r.n as f64, m))).collect()
    }
}

pub fn run_scaling(spec: &ExperimentSpec) -> Result<ScalingTable> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.sizes.len());
    for &n in &spec.sizes {
        let values = trial_values(spec, n)?;
        let mut aggregate = Aggregate::new();
        let mut censored = 0;
        for (t, v) in values.into_iter().enumerate() {
            match v {
                Some(v) => aggregate.push(t as u64, v),
                None => censored += 1,
            }
        }
        rows.push(ScalingRow { statistic: spec.statistic, law: spec.law, n, trials: spec.trials, censored, aggregate });
    }
    let partial = rows.iter().any(|r| r.censored > 0);
    Ok(ScalingTable { spec: spec.clone(), rows, partial })
}

const PETROV_TAG: u64 = 0x7065_7472;
const MAX_TAG: u64 = 0x6d61_7861;
const ES_TAG: u64 = 0x6572_6473;

fn probe_walk_seed(tag: u64, seed: u64, n: u64, t: u64) -> u64 {
    derive_seed(seed, &[tag, n, t])
}

/// `S(n)` in real units for a one-dimensional law.
fn endpoint(law: StepLaw, n: u64, seed: u64) -> f64 {
    if law.kind == StepKind::Simple {
        simple_walk_endpoint(n as usize, &mut rng::stream(seed, 0)) as f64
    } else {
        generate_walk(law, n as usize, seed).value(n as usize, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PetrovProbe {
    pub n: u64,
    pub lambda: f64,
    pub trials: u64,
    /// `sup_x P̂(x ≤ S(n) ≤ x + λ)` over the grid.
    pub sup: f64,
    pub argmax: f64,
    pub stderr: f64,
    /// `(λ + 1)/√n`.
    pub reference: f64,
    /// `sup / reference`.
    pub c_hat: f64,
}

/// Interval-hit frequencies of `S(n)`. Without a grid, the supremum is
/// taken over every real `x`, which is attained at a sampled value.
pub fn petrov_probe(law: StepLaw, n: u64, lambda: f64, trials: u64, x_grid: Option<&[f64]>, seed: u64) -> Result<PetrovProbe> {
    if law.dim != 1 {
        return Err(invalid("petrov probe needs a one-dimensional law"));
    }
    if trials == 0 || !(lambda >= 0.0) {
        return Err(invalid("need trials ≥ 1 and λ ≥ 0"));
    }
    let mut ends: Vec<f64> =
        (0..trials).into_par_iter().map(|t| endpoint(law, n, probe_walk_seed(PETROV_TAG, seed, n, t))).collect();
    ends.sort_by(f64::total_cmp);
    let grid: Vec<f64> = match x_grid {
        Some(g) => g.to_vec(),
        None => {
            let mut g = ends.clone();
            g.dedup();
            g
        }
    };
    if grid.is_empty() {
        return Err(invalid("empty x grid"));
    }
    let hits = |x: f64| ends.partition_point(|&e| e <= x + lambda) - ends.partition_point(|&e| e < x);
    let (argmax, best) = grid.iter().map(|&x| (x, hits(x))).fold((grid[0], 0), |acc, c| if c.1 > acc.1 { c } else { acc });
    let tf = trials as f64;
    let sup = best as f64 / tf;
    let reference = (lambda + 1.0) / (n.max(1) as f64).sqrt();
    Ok(PetrovProbe {
        n,
        lambda,
        trials,
        sup,
        argmax,
        stderr: (sup * (1.0 - sup) / tf).sqrt(),
        reference,
        c_hat: sup / reference,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxTailRow {
    pub lambda: f64,
    /// `P̂(max_{i ≤ n} |S(i)| ≥ λ√n)`.
    pub estimate: f64,
    pub stderr: f64,
    /// `1/λ²`.
    pub chebyshev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxProbe {
    pub n: u64,
    pub trials: u64,
    pub rows: Vec<MaxTailRow>,
    /// Regression of `−ln(estimate)` on `λ²` over rows with positive estimate.
    pub gaussian_fit: Option<ExponentFit>,
}

fn max_abs(law: StepLaw, n: u64, seed: u64) -> f64 {
    let mut rng = rng::stream(seed, 0);
    if law.kind == StepKind::Simple && law.dim == 1 {
        simple_walk_extremes(n as usize, &mut rng).1 as f64
    } else {
        generate_walk_with(law, n as usize, seed, &mut rng).max_abs(n as usize)
    }
}

pub fn max_concentration_probe(law: StepLaw, n: u64, lambda_grid: &[f64], trials: u64, seed: u64) -> Result<MaxProbe> {
    if law.dim != 1 {
        return Err(invalid("maximal probe needs a one-dimensional law"));
    }
    if trials == 0 || n == 0 {
        return Err(invalid("need n ≥ 1 and trials ≥ 1"));
    }
    if lambda_grid.iter().any(|&l| !(l > 0.0)) {
        return Err(invalid("λ values must be positive"));
    }
    let mut maxima: Vec<f64> =
        (0..trials).into_par_iter().map(|t| max_abs(law, n, probe_walk_seed(MAX_TAG, seed, n, t))).collect();
    maxima.sort_by(f64::total_cmp);
    let tf = trials as f64;
    let root = (n as f64).sqrt();
    let rows: Vec<MaxTailRow> = lambda_grid
        .iter()
        .map(|&lambda| {
            let above = maxima.len() - maxima.partition_point(|&m| m < lambda * root);
            let p = above as f64 / tf;
            MaxTailRow { lambda, estimate: p, stderr: (p * (1.0 - p) / tf).sqrt(), chebyshev: 1.0 / (lambda * lambda) }
        })
        .collect();
    let positive: Vec<&MaxTailRow> = rows.iter().filter(|r| r.estimate > 0.0).collect();
    let gaussian_fit = if positive.len() >= 3 {
        let xs: Vec<f64> = positive.iter().map(|r| r.lambda * r.lambda).collect();
        let ys: Vec<f64> = positive.iter().map(|r| -r.estimate.ln()).collect();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        linear_fit(&xs, &ys, (lo, hi)).ok()
    } else {
        None
    };
    Ok(MaxProbe { n, trials, rows, gaussian_fit })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsViolation {
    pub index: u64,
    pub law: StepLaw,
    pub len: u64,
    pub lnds: u64,
    pub lnis: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsAudit {
    pub sequences: u64,
    pub max_len: u64,
    pub longest_checked: u64,
    /// Smallest `max(LNDS, LNIS) / ⌈√len⌉` seen.
    pub min_ratio: f64,
    pub violations: Vec<EsViolation>,
}

/// Checks `max(LNDS, LNIS) ≥ ⌈√len⌉` on `count` one-dimensional walks with
/// log-uniform lengths in `[1, max_len]`, cycling through the step laws.
pub fn erdos_szekeres_audit(count: u64, max_len: u64, seed: u64) -> Result<EsAudit> {
    if max_len == 0 {
        return Err(invalid("max_len must be positive"));
    }
    let laws = [
        StepLaw::simple(1),
        StepLaw::new(StepKind::Lazy, 1)?,
        StepLaw::new(StepKind::Uniform(3), 1)?,
        StepLaw::new(StepKind::Normal, 1)?,
    ];
    let results: Vec<(u64, f64, Option<EsViolation>)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, &[ES_TAG, i]);
            let mut pick = rng::stream(s, 1);
            let u: f64 = pick.random();
            let len = ((max_len as f64).powf(u).floor() as u64).clamp(1, max_len);
            let law = laws[(i % laws.len() as u64) as usize];
            let walk = generate_walk(law, len as usize - 1, s);
            let (up, down) = match walk.positions() {
                Positions::Lattice(v) => (lnds_length_1d(v), lnis_length_1d(v)),
                Positions::Real(v) => (lnds_length_1d(v), lnis_length_1d(v)),
            };
            let need = (len as f64).sqrt().ceil() as usize;
            let need = if need * need < len as usize { need + 1 } else { need };
            let best = up.max(down);
            let violation = (best < need).then(|| EsViolation { index: i, law, len, lnds: up as u64, lnis: down as u64 });
            (len, best as f64 / need as f64, violation)
        })
        .collect();
    Ok(EsAudit {
        sequences: count,
        max_len,
        longest_checked: results.iter().map(|r| r.0).max().unwrap_or(0),
        min_ratio: results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
        violations: results.into_iter().filter_map(|r| r.2).collect(),
    })
}

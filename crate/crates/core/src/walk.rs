//! Random walk generation.
//!
//! Lattice laws (simple, lazy, discrete uniform) are stored as integer
//! multiples of a per-law scale so that level sets and hitting times are
//! exact; the standard normal law is stored in `f64`. All laws have mean
//! zero and unit variance per coordinate in real units.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{self, StreamRng};

/// One-dimensional step distribution; coordinates are independent copies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum StepKind {
    /// ±1 with probability ½ each.
    Simple,
    /// −1, 0, +1 with probabilities ¼, ½, ¼, rescaled by √2.
    Lazy,
    /// Uniform on {−a, …, a}, rescaled to unit variance.
    Uniform(u32),
    /// Standard normal increments.
    Normal,
}

impl StepKind {
    pub fn is_lattice(self) -> bool {
        !matches!(self, StepKind::Normal)
    }

    /// Real length of one lattice unit.
    pub fn scale(self) -> f64 {
        match self {
            StepKind::Simple | StepKind::Normal => 1.0,
            StepKind::Lazy => std::f64::consts::SQRT_2,
            StepKind::Uniform(a) => {
                let a = f64::from(a);
                (3.0 / (a * (a + 1.0))).sqrt()
            }
        }
    }

    /// Largest absolute lattice step, `None` for unbounded laws.
    pub fn max_lattice_step(self) -> Option<i64> {
        match self {
            StepKind::Simple | StepKind::Lazy => Some(1),
            StepKind::Uniform(a) => Some(i64::from(a)),
            StepKind::Normal => None,
        }
    }

    pub(crate) fn id(self) -> (u8, u32) {
        match self {
            StepKind::Simple => (0, 0),
            StepKind::Lazy => (1, 0),
            StepKind::Uniform(a) => (2, a),
            StepKind::Normal => (3, 0),
        }
    }

    pub(crate) fn from_id(id: u8, param: u32) -> Result<Self> {
        match id {
            0 => Ok(StepKind::Simple),
            1 => Ok(StepKind::Lazy),
            2 if param >= 1 => Ok(StepKind::Uniform(param)),
            3 => Ok(StepKind::Normal),
            _ => Err(Error::Format(format!("unknown law id {id} (param {param})"))),
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::Simple => f.write_str("simple"),
            StepKind::Lazy => f.write_str("lazy"),
            StepKind::Uniform(a) => write!(f, "uniform:{a}"),
            StepKind::Normal => f.write_str("normal"),
        }
    }
}

impl FromStr for StepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(StepKind::Simple),
            "lazy" => Ok(StepKind::Lazy),
            "normal" => Ok(StepKind::Normal),
            _ => {
                let a = s
                    .strip_prefix("uniform:")
                    .and_then(|a| a.parse::<u32>().ok())
                    .filter(|&a| a >= 1)
                    .ok_or_else(|| invalid(format!("unknown step law `{s}`")))?;
                Ok(StepKind::Uniform(a))
            }
        }
    }
}

impl From<StepKind> for String {
    fn from(kind: StepKind) -> String {
        kind.to_string()
    }
}

impl TryFrom<String> for StepKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A step law in `dim` dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepLaw {
    pub kind: StepKind,
    pub dim: usize,
}

impl StepLaw {
    pub fn new(kind: StepKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        Ok(StepLaw { kind, dim })
    }

    pub fn simple(dim: usize) -> Self {
        StepLaw { kind: StepKind::Simple, dim: dim.max(1) }
    }

    pub fn is_lattice(&self) -> bool {
        self.kind.is_lattice()
    }
}

impl fmt::Display for StepLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            write!(f, "{}", self.kind)
        } else {
            write!(f, "{}^{}", self.kind, self.dim)
        }
    }
}

/// Walk coordinates, row-major: point `t` occupies `[t*d, (t+1)*d)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Positions {
    /// Integer lattice coordinates, in units of [`StepKind::scale`].
    Lattice(Vec<i64>),
    Real(Vec<f64>),
}

/// A trajectory `S(0), …, S(n)` with `S(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Walk {
    law: StepLaw,
    seed: u64,
    positions: Positions,
}

impl Walk {
    /// Builds a lattice walk from explicit coordinates, checking that it
    /// starts at the origin and that every step is admissible for `law`.
    pub fn from_lattice(law: StepLaw, seed: u64, values: Vec<i64>) -> Result<Self> {
        let max_step = law
            .kind
            .max_lattice_step()
            .ok_or_else(|| invalid("lattice coordinates given for a non-lattice law"))?;
        check_shape(values.len(), law.dim)?;
        if values[..law.dim].iter().any(|&v| v != 0) {
            return Err(invalid("walk must start at the origin"));
        }
        for (i, w) in values.windows(law.dim + 1).enumerate() {
            let diff = (w[law.dim] - w[0]).abs();
            let ok = match law.kind {
                StepKind::Simple => diff == 1,
                _ => diff <= max_step,
            };
            if !ok {
                return Err(invalid(format!(
                    "step {} of coordinate {} is not admissible for law {}",
                    i / law.dim + 1,
                    i % law.dim,
                    law.kind
                )));
            }
        }
        Ok(Walk { law, seed, positions: Positions::Lattice(values) })
    }

    /// Builds a real-valued walk from explicit coordinates.
    pub fn from_real(law: StepLaw, seed: u64, values: Vec<f64>) -> Result<Self> {
        if law.is_lattice() {
            return Err(invalid("real coordinates given for a lattice law"));
        }
        check_shape(values.len(), law.dim)?;
        if values[..law.dim].iter().any(|&v| v != 0.0) {
            return Err(invalid("walk must start at the origin"));
        }
        Ok(Walk { law, seed, positions: Positions::Real(values) })
    }

    /// One-dimensional simple walk from explicit values; handy in tests.
    pub fn simple_1d(values: Vec<i64>) -> Result<Self> {
        Walk::from_lattice(StepLaw::simple(1), 0, values)
    }

    pub fn law(&self) -> StepLaw {
        self.law
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.law.dim
    }

    /// Number of points, `steps() + 1`.
    pub fn len(&self) -> usize {
        match &self.positions {
            Positions::Lattice(v) => v.len() / self.law.dim,
            Positions::Real(v) => v.len() / self.law.dim,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> usize {
        self.len() - 1
    }

    pub fn positions(&self) -> &Positions {
        &self.positions
    }

    pub fn lattice(&self) -> Option<&[i64]> {
        match &self.positions {
            Positions::Lattice(v) => Some(v),
            Positions::Real(_) => None,
        }
    }

    /// Coordinate `i` of point `t`, in real units.
    pub fn value(&self, t: usize, i: usize) -> f64 {
        let idx = t * self.law.dim + i;
        match &self.positions {
            Positions::Lattice(v) => v[idx] as f64 * self.law.kind.scale(),
            Positions::Real(v) => v[idx],
        }
    }

    /// All values of coordinate `i`, in real units.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|t| self.value(t, i)).collect()
    }

    /// All values of coordinate `i` in lattice units.
    pub fn lattice_coordinate(&self, i: usize) -> Option<Vec<i64>> {
        let d = self.law.dim;
        self.lattice().map(|v| v.iter().skip(i).step_by(d).copied().collect())
    }

    /// Largest `|S(t)|` over coordinates and `0 ≤ t ≤ upto`, in real units.
    pub fn max_abs(&self, upto: usize) -> f64 {
        let end = (upto + 1).min(self.len()) * self.law.dim;
        match &self.positions {
            Positions::Lattice(v) => {
                v[..end].iter().map(|x| x.abs()).max().unwrap_or(0) as f64 * self.law.kind.scale()
            }
            Positions::Real(v) => v[..end].iter().fold(0.0, |m, x| x.abs().max(m)),
        }
    }
}

fn check_shape(len: usize, dim: usize) -> Result<()> {
    if dim == 0 || len == 0 || len % dim != 0 {
        return Err(invalid(format!("{len} values do not form points of dimension {dim}")));
    }
    Ok(())
}

/// Fair bits drawn lazily from 64-bit words, least significant first.
pub(crate) struct Bits {
    word: u64,
    left: u32,
}

impl Bits {
    pub(crate) fn new() -> Self {
        Bits { word: 0, left: 0 }
    }

    #[inline]
    pub(crate) fn next(&mut self, rng: &mut StreamRng) -> bool {
        if self.left == 0 {
            self.word = rng.next_u64();
            self.left = 64;
        }
        let bit = self.word & 1 == 1;
        self.word >>= 1;
        self.left -= 1;
        bit
    }

    /// Number of set bits among the next `count` bits.
    pub(crate) fn count_ones(&mut self, rng: &mut StreamRng, mut count: u64) -> u64 {
        let mut ones = 0;
        while count > 0 {
            if self.left == 0 {
                self.word = rng.next_u64();
                self.left = 64;
            }
            let take = count.min(u64::from(self.left)) as u32;
            let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
            ones += u64::from((self.word & mask).count_ones());
            self.word = if take == 64 { 0 } else { self.word >> take };
            self.left -= take;
            count -= u64::from(take);
        }
        ones
    }
}

/// Draws lattice steps for one law; shares its bit buffer across calls.
pub(crate) struct LatticeSteps {
    kind: StepKind,
    bits: Bits,
}

impl LatticeSteps {
    pub(crate) fn new(kind: StepKind) -> Self {
        debug_assert!(kind.is_lattice());
        LatticeSteps { kind, bits: Bits::new() }
    }

    #[inline]
    pub(crate) fn next(&mut self, rng: &mut StreamRng) -> i64 {
        match self.kind {
            StepKind::Simple => {
                if self.bits.next(rng) {
                    1
                } else {
                    -1
                }
            }
            StepKind::Lazy => i64::from(self.bits.next(rng)) - i64::from(self.bits.next(rng)),
            StepKind::Uniform(a) => {
                let a = i64::from(a);
                rng.random_range(-a..=a)
            }
            StepKind::Normal => unreachable!("normal law has no lattice steps"),
        }
    }
}

/// Generates an `n`-step walk. Deterministic in `(law, n, seed)`.
pub fn generate_walk(law: StepLaw, n: usize, seed: u64) -> Walk {
    let mut rng = rng::stream(seed, 0);
    generate_walk_with(law, n, seed, &mut rng)
}

pub(crate) fn generate_walk_with(law: StepLaw, n: usize, seed: u64, rng: &mut StreamRng) -> Walk {
    let d = law.dim;
    let total = n * d;
    let positions = match law.kind {
        StepKind::Simple => {
            let mut v = vec![0i64; total + d];
            let mut idx = 0;
            while idx < total {
                let word = rng.next_u64();
                let take = (total - idx).min(64);
                for b in 0..take {
                    let step = (((word >> b) & 1) as i64) * 2 - 1;
                    v[d + idx + b] = v[idx + b] + step;
                }
                idx += take;
            }
            Positions::Lattice(v)
        }
        StepKind::Lazy | StepKind::Uniform(_) => {
            let mut steps = LatticeSteps::new(law.kind);
            let mut v = vec![0i64; total + d];
            for idx in 0..total {
                v[d + idx] = v[idx] + steps.next(rng);
            }
            Positions::Lattice(v)
        }
        StepKind::Normal => {
            let mut v = vec![0f64; total + d];
            for idx in 0..total {
                let z: f64 = rng.sample(StandardNormal);
                v[d + idx] = v[idx] + z;
            }
            Positions::Real(v)
        }
    };
    Walk { law, seed, positions }
}

/// First `t` with `S(t) = level` (real units), if any.
pub fn hitting_time(walk: &Walk, level: f64) -> Result<Option<usize>> {
    if walk.dim() != 1 {
        return Err(invalid("hitting time requires a one-dimensional walk"));
    }
    Ok((0..walk.len()).find(|&t| walk.value(t, 0) == level))
}

/// Outcome of [`generate_until_hit`].
#[derive(Clone, Debug, PartialEq)]
pub enum Stopped {
    /// The walk ends exactly at its first visit to the level.
    Hit(Walk),
    /// The level was not reached within `cap` steps; the walk has `cap` steps.
    Censored(Walk),
}

impl Stopped {
    pub fn walk(&self) -> &Walk {
        match self {
            Stopped::Hit(w) | Stopped::Censored(w) => w,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, Stopped::Censored(_))
    }

    pub fn hit(self) -> Option<Walk> {
        match self {
            Stopped::Hit(w) => Some(w),
            Stopped::Censored(_) => None,
        }
    }
}

/// Runs a one-dimensional lattice walk until it first equals `level`
/// (lattice units), giving up after `cap` steps.
pub fn generate_until_hit(law: StepLaw, level: i64, seed: u64, cap: usize) -> Result<Stopped> {
    if law.dim != 1 || !law.is_lattice() {
        return Err(Error::UnsupportedLaw {
            expected: "one-dimensional lattice",
            found: law.to_string(),
        });
    }
    if level <= 0 {
        return Err(invalid("level must be positive"));
    }
    if cap == 0 {
        return Err(invalid("cap must be positive"));
    }
    let mut rng = rng::stream(seed, 0);
    let mut steps = LatticeSteps::new(law.kind);
    let mut values = Vec::with_capacity((4 * level * level).min(cap as i64 + 1) as usize);
    values.push(0i64);
    let mut x = 0i64;
    while values.len() <= cap {
        x += steps.next(&mut rng);
        values.push(x);
        if x == level {
            return Ok(Stopped::Hit(Walk { law, seed, positions: Positions::Lattice(values) }));
        }
    }
    Ok(Stopped::Censored(Walk { law, seed, positions: Positions::Lattice(values) }))
}

/// `(sum, max prefix, min prefix)` of the eight ±1 steps encoded by a byte.
fn byte_table() -> &'static [(i8, i8, i8); 256] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[(i8, i8, i8); 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [(0i8, 0i8, 0i8); 256];
        for (byte, entry) in table.iter_mut().enumerate() {
            let (mut s, mut hi, mut lo) = (0i8, i8::MIN, i8::MAX);
            for b in 0..8 {
                s += if (byte >> b) & 1 == 1 { 1 } else { -1 };
                hi = hi.max(s);
                lo = lo.min(s);
            }
            *entry = (s, hi, lo);
        }
        table
    })
}

/// Endpoint and `max_{t ≤ n} |S(t)|` of an `n`-step simple walk, drawing
/// bits in the same order as [`generate_walk`] so that both agree.
pub(crate) fn simple_walk_extremes(n: usize, rng: &mut StreamRng) -> (i64, i64) {
    let table = byte_table();
    let mut s = 0i64;
    let mut max_abs = 0i64;
    let mut left = n;
    while left >= 64 {
        let word = rng.next_u64();
        for byte in word.to_le_bytes() {
            let (sum, hi, lo) = table[byte as usize];
            max_abs = max_abs.max((s + i64::from(hi)).abs()).max((s + i64::from(lo)).abs());
            s += i64::from(sum);
        }
        left -= 64;
    }
    if left > 0 {
        let word = rng.next_u64();
        for b in 0..left {
            s += (((word >> b) & 1) as i64) * 2 - 1;
            max_abs = max_abs.max(s.abs());
        }
    }
    (s, max_abs)
}

/// Endpoint `S(n)` of an `n`-step simple walk, consistent with [`generate_walk`].
pub(crate) fn simple_walk_endpoint(n: usize, rng: &mut StreamRng) -> i64 {
    let mut bits = Bits::new();
    2 * bits.count_ones(rng, n as u64) as i64 - n as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steps_is_origin() {
        let w = generate_walk(StepLaw::simple(1), 0, 99);
        assert_eq!(w.lattice().unwrap(), &[0]);
        let w = generate_walk(StepLaw::new(StepKind::Normal, 3).unwrap(), 0, 99);
        assert_eq!(w.len(), 1);
        assert_eq!(w.coordinate(2), vec![0.0]);
    }

    #[test]
    fn generation_is_deterministic() {
        for kind in [StepKind::Simple, StepKind::Lazy, StepKind::Uniform(3), StepKind::Normal] {
            let law = StepLaw::new(kind, 2).unwrap();
            assert_eq!(generate_walk(law, 5, 11), generate_walk(law, 5, 11));
            assert_ne!(generate_walk(law, 50, 11), generate_walk(law, 50, 12));
        }
    }

    #[test]
    fn simple_steps_have_unit_size_and_exact_unit_variance() {
        let n = 10_000;
        let w = generate_walk(StepLaw::simple(1), n, 5);
        let v = w.lattice().unwrap();
        let steps: Vec<i64> = v.windows(2).map(|p| p[1] - p[0]).collect();
        assert!(steps.iter().all(|s| s.abs() == 1));
        let mean = steps.iter().sum::<i64>() as f64 / n as f64;
        let second = steps.iter().map(|s| s * s).sum::<i64>() as f64 / n as f64;
        assert_eq!(second, 1.0);
        assert!(mean.abs() <= 3.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn rescaled_laws_have_unit_variance() {
        for kind in [StepKind::Lazy, StepKind::Uniform(1), StepKind::Uniform(4), StepKind::Normal] {
            let n = 200_000;
            let w = generate_walk(StepLaw::new(kind, 1).unwrap(), n, 17);
            let vals = w.coordinate(0);
            let steps: Vec<f64> = vals.windows(2).map(|p| p[1] - p[0]).collect();
            let mean = steps.iter().sum::<f64>() / n as f64;
            let var = steps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "{kind}: mean {mean}");
            assert!((var - 1.0).abs() < 0.02, "{kind}: var {var}");
        }
    }

    #[test]
    fn hitting_time_examples() {
        let w = Walk::simple_1d(vec![0, -1, 0, 1]).unwrap();
        assert_eq!(hitting_time(&w, 1.0).unwrap(), Some(3));
        assert_eq!(hitting_time(&w, 0.0).unwrap(), Some(0));
        assert_eq!(hitting_time(&w, 2.0).unwrap(), None);
        let w2 = generate_walk(StepLaw::simple(2), 3, 0);
        assert!(hitting_time(&w2, 1.0).is_err());
    }

    #[test]
    fn one_step_hit() {
        let seed = (0..100u64)
            .find(|&s| generate_walk(StepLaw::simple(1), 1, s).lattice().unwrap()[1] == 1)
            .unwrap();
        let stopped = generate_until_hit(StepLaw::simple(1), 1, seed, 10).unwrap();
        assert_eq!(stopped.hit().unwrap().lattice().unwrap(), &[0, 1]);
    }

    #[test]
    fn stopped_walks_end_at_first_visit() {
        for seed in 0..200 {
            match generate_until_hit(StepLaw::simple(1), 2, seed, 10_000).unwrap() {
                Stopped::Hit(w) => {
                    let v = w.lattice().unwrap();
                    assert_eq!(*v.last().unwrap(), 2);
                    assert!(v[..v.len() - 1].iter().all(|&x| x < 2));
                }
                Stopped::Censored(w) => assert_eq!(w.steps(), 10_000),
            }
        }
    }

    #[test]
    fn until_hit_rejects_bad_input() {
        assert!(generate_until_hit(StepLaw::simple(1), 0, 1, 10).is_err());
        assert!(generate_until_hit(StepLaw::simple(1), 3, 1, 0).is_err());
        assert!(generate_until_hit(StepLaw::simple(2), 3, 1, 10).is_err());
        let normal = StepLaw::new(StepKind::Normal, 1).unwrap();
        assert!(generate_until_hit(normal, 3, 1, 10).is_err());
    }

    #[test]
    fn censoring_is_explicit() {
        let censored = (0..50)
            .map(|s| generate_until_hit(StepLaw::simple(1), 40, s, 20).unwrap())
            .filter(Stopped::is_censored)
            .count();
        assert_eq!(censored, 50);
    }

    #[test]
    fn fast_paths_agree_with_generated_walks() {
        for (n, seed) in [(0, 1), (1, 2), (63, 3), (64, 4), (65, 5), (1000, 6)] {
            let w = generate_walk(StepLaw::simple(1), n, seed);
            let v = w.lattice().unwrap();
            let (end, max_abs) = simple_walk_extremes(n, &mut rng::stream(seed, 0));
            assert_eq!(end, v[n]);
            assert_eq!(max_abs, v.iter().map(|x| x.abs()).max().unwrap());
            assert_eq!(simple_walk_endpoint(n, &mut rng::stream(seed, 0)), v[n]);
        }
    }

    #[test]
    fn explicit_walks_are_validated() {
        assert!(Walk::simple_1d(vec![1, 2]).is_err());
        assert!(Walk::simple_1d(vec![0, 0]).is_err());
        assert!(Walk::simple_1d(vec![0, 2]).is_err());
        let lazy = StepLaw::new(StepKind::Lazy, 1).unwrap();
        assert!(Walk::from_lattice(lazy, 0, vec![0, 0, 1]).is_ok());
        assert!(Walk::from_real(StepLaw::simple(1), 0, vec![0.0]).is_err());
    }

    #[test]
    fn law_names_round_trip() {
        for s in ["simple", "lazy", "uniform:3", "normal"] {
            assert_eq!(s.parse::<StepKind>().unwrap().to_string(), s);
        }
        assert!("uniform:0".parse::<StepKind>().is_err());
        assert!("cauchy".parse::<StepKind>().is_err());
    }
}

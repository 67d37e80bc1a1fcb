//! Exact longest monotone subsequences.
//!
//! "Increasing" is weak throughout: indices strictly increase while values
//! are non-decreasing (componentwise for `d > 1`). Multi-dimensional inputs
//! are flat row-major slices with `d` values per point.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Strictly increasing time indices along which a sequence is non-decreasing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotoneChain {
    indices: Vec<usize>,
    dim: usize,
}

impl MonotoneChain {
    pub fn new(indices: Vec<usize>, dim: usize) -> Self {
        MonotoneChain { indices, dim: dim.max(1) }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn into_indices(self) -> Vec<usize> {
        self.indices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Checks the chain against `points` (flat, `self.dim()` values per point).
    pub fn validate<T: PartialOrd + Copy>(&self, points: &[T]) -> Result<()> {
        let d = self.dim;
        let n = points.len() / d;
        for w in self.indices.windows(2) {
            if w[0] >= w[1] {
                return Err(invalid(format!("chain indices {} and {} not increasing", w[0], w[1])));
            }
        }
        if let Some(&last) = self.indices.last() {
            if last >= n {
                return Err(Error::IndexOutOfRange { index: last, len: n });
            }
        }
        for w in self.indices.windows(2) {
            let (a, b) = (&points[w[0] * d..w[0] * d + d], &points[w[1] * d..w[1] * d + d]);
            if !dominated(a, b) {
                return Err(invalid(format!("values at {} and {} are not ordered", w[0], w[1])));
            }
        }
        Ok(())
    }

    /// One index per row under an `index` header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["index"])?;
        for i in &self.indices {
            wtr.write_record([i.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[inline]
fn dominated<T: PartialOrd>(a: &[T], b: &[T]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Length of the longest non-decreasing subsequence, `O(n log n)`.
pub fn lnds_length_1d<T: PartialOrd + Copy>(seq: &[T]) -> usize {
    let mut tails: Vec<T> = Vec::new();
    for &v in seq {
        let pos = tails.partition_point(|&t| t <= v);
        if pos == tails.len() {
            tails.push(v);
        } else {
            tails[pos] = v;
        }
    }
    tails.len()
}

/// A longest non-decreasing subsequence as a witness chain.
pub fn lnds_chain_1d<T: PartialOrd + Copy>(seq: &[T]) -> MonotoneChain {
    // tails[len] is the index ending the best chain of length len + 1.
    let mut tails: Vec<usize> = Vec::new();
    let mut prev = vec![usize::MAX; seq.len()];
    for (i, &v) in seq.iter().enumerate() {
        let pos = tails.partition_point(|&t| seq[t] <= v);
        if pos > 0 {
            prev[i] = tails[pos - 1];
        }
        if pos == tails.len() {
            tails.push(i);
        } else {
            tails[pos] = i;
        }
    }
    let mut indices = Vec::with_capacity(tails.len());
    let mut cur = tails.last().copied().unwrap_or(usize::MAX);
    while cur != usize::MAX {
        indices.push(cur);
        cur = prev[cur];
    }
    indices.reverse();
    MonotoneChain::new(indices, 1)
}

/// Length of the longest strictly increasing subsequence.
pub fn lis_strict_1d<T: PartialOrd + Copy>(seq: &[T]) -> usize {
    let mut tails: Vec<T> = Vec::new();
    for &v in seq {
        let pos = tails.partition_point(|&t| t < v);
        if pos == tails.len() {
            tails.push(v);
        } else {
            tails[pos] = v;
        }
    }
    tails.len()
}

/// Length of the longest non-increasing subsequence.
pub fn lnis_length_1d<T: PartialOrd + Copy>(seq: &[T]) -> usize {
    let mut tails: Vec<T> = Vec::new();
    for &v in seq {
        let pos = tails.partition_point(|&t| t >= v);
        if pos == tails.len() {
            tails.push(v);
        } else {
            tails[pos] = v;
        }
    }
    tails.len()
}

fn check_dim(len: usize, d: usize) -> Result<usize> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if len % d != 0 {
        return Err(invalid(format!("{len} values do not form {d}-dimensional points")));
    }
    Ok(len / d)
}

fn chain_dp<T: PartialOrd + Copy>(points: &[T], d: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = check_dim(points.len(), d)?;
    let mut best = vec![1usize; n];
    let mut prev = vec![usize::MAX; n];
    for i in 0..n {
        let p = &points[i * d..i * d + d];
        for j in 0..i {
            if best[j] + 1 > best[i] && dominated(&points[j * d..j * d + d], p) {
                best[i] = best[j] + 1;
                prev[i] = j;
            }
        }
    }
    Ok((best, prev))
}

/// Longest chain of `d`-dimensional points, `O(n²)` dynamic program.
pub fn lnds_length_dd<T: PartialOrd + Copy>(points: &[T], d: usize) -> Result<usize> {
    Ok(chain_dp(points, d)?.0.into_iter().max().unwrap_or(0))
}

/// Witness for [`lnds_length_dd`].
pub fn lnds_chain_dd<T: PartialOrd + Copy>(points: &[T], d: usize) -> Result<MonotoneChain> {
    let (best, prev) = chain_dp(points, d)?;
    let mut indices = Vec::new();
    if let Some((mut cur, _)) = best.iter().enumerate().max_by_key(|&(i, &b)| (b, std::cmp::Reverse(i))) {
        while cur != usize::MAX {
            indices.push(cur);
            cur = prev[cur];
        }
    }
    indices.reverse();
    Ok(MonotoneChain::new(indices, d))
}

/// Longest chain of two-dimensional points in `O(n log² n)`: divide and
/// conquer over time with a prefix-max Fenwick tree over ranked `y`.
pub fn lnds_length_2d<T: PartialOrd + Copy>(points: &[T]) -> Result<usize> {
    let n = check_dim(points.len(), 2)?;
    if n == 0 {
        return Ok(0);
    }
    let cmp = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(Ordering::Equal);
    let xs: Vec<T> = points.iter().step_by(2).copied().collect();
    let mut ys_sorted: Vec<T> = points.iter().skip(1).step_by(2).copied().collect();
    ys_sorted.sort_by(cmp);
    ys_sorted.dedup_by(|a, b| cmp(a, b) == Ordering::Equal);
    let ranks: Vec<usize> = points
        .iter()
        .skip(1)
        .step_by(2)
        .map(|y| ys_sorted.partition_point(|v| cmp(v, y) == Ordering::Less) + 1)
        .collect();

    let mut solver = Cdq {
        xs,
        ranks,
        best: vec![1; n],
        fenwick: vec![0; ys_sorted.len() + 1],
        left: Vec::new(),
        right: Vec::new(),
    };
    solver.solve(0, n);
    Ok(solver.best.into_iter().max().unwrap_or(0))
}

struct Cdq<T> {
    xs: Vec<T>,
    ranks: Vec<usize>,
    best: Vec<usize>,
    fenwick: Vec<usize>,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl<T: PartialOrd + Copy> Cdq<T> {
    fn solve(&mut self, lo: usize, hi: usize) {
        if hi - lo <= 1 {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        self.solve(lo, mid);
        self.merge(lo, mid, hi);
        self.solve(mid, hi);
    }

    fn merge(&mut self, lo: usize, mid: usize, hi: usize) {
        let xs = &self.xs;
        let by_x = |a: &usize, b: &usize| xs[*a].partial_cmp(&xs[*b]).unwrap_or(Ordering::Equal);
        self.left.clear();
        self.left.extend(lo..mid);
        self.left.sort_by(by_x);
        self.right.clear();
        self.right.extend(mid..hi);
        self.right.sort_by(by_x);

        let mut j = 0;
        for r in 0..self.right.len() {
            let i = self.right[r];
            while j < self.left.len() && self.xs[self.left[j]] <= self.xs[i] {
                let l = self.left[j];
                fenwick_raise(&mut self.fenwick, self.ranks[l], self.best[l]);
                j += 1;
            }
            let reach = fenwick_prefix_max(&self.fenwick, self.ranks[i]);
            if reach + 1 > self.best[i] {
                self.best[i] = reach + 1;
            }
        }
        for &l in &self.left[..j] {
            fenwick_clear(&mut self.fenwick, self.ranks[l]);
        }
    }
}

fn fenwick_raise(tree: &mut [usize], mut i: usize, value: usize) {
    while i < tree.len() {
        tree[i] = tree[i].max(value);
        i += i & i.wrapping_neg();
    }
}

fn fenwick_prefix_max(tree: &[usize], mut i: usize) -> usize {
    let mut best = 0;
    while i > 0 {
        best = best.max(tree[i]);
        i -= i & i.wrapping_neg();
    }
    best
}

fn fenwick_clear(tree: &mut [usize], mut i: usize) {
    while i < tree.len() && tree[i] != 0 {
        tree[i] = 0;
        i += i & i.wrapping_neg();
    }
}

/// Exact LIS of any dimension: the 1D fast path, divide and conquer for
/// `d = 2`, and the quadratic program otherwise.
pub fn lnds_length<T: PartialOrd + Copy>(points: &[T], d: usize) -> Result<usize> {
    match d {
        1 => Ok(lnds_length_1d(points)),
        2 => lnds_length_2d(points),
        _ => lnds_length_dd(points, d),
    }
}

/// Largest input accepted by [`lis_bruteforce`].
pub const BRUTEFORCE_MAX: usize = 24;

/// Exhaustive maximum over all index subsets. Test oracle only.
pub fn lis_bruteforce<T: PartialOrd + Copy>(points: &[T], d: usize) -> Result<usize> {
    let n = check_dim(points.len(), d)?;
    if n > BRUTEFORCE_MAX {
        return Err(Error::OracleTooLarge { len: n, max: BRUTEFORCE_MAX });
    }
    let point = |i: usize| &points[i * d..i * d + d];
    let mut best = 0;
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let mut last: Option<usize> = None;
        let mut ok = true;
        let mut bits = mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if let Some(j) = last {
                if !dominated(point(j), point(i)) {
                    ok = false;
                    break;
                }
            }
            last = Some(i);
        }
        if ok {
            best = size;
        }
    }
    Ok(best)
}

/// Sum of `|S(a_{i+1}) − S(a_i)|` along sorted indices `a`.
pub fn variation(seq: &[f64], a: &[usize]) -> Result<f64> {
    if let Some(&bad) = a.iter().find(|&&i| i >= seq.len()) {
        return Err(Error::IndexOutOfRange { index: bad, len: seq.len() });
    }
    if a.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("variation indices must be strictly increasing"));
    }
    Ok(a.windows(2).map(|w| (seq[w[1]] - seq[w[0]]).abs()).sum())
}

/// Weak record times: every `t` with `S(t) ≥ S(s)` for all `s < t`.
pub fn record_times<T: PartialOrd + Copy>(seq: &[T]) -> MonotoneChain {
    let mut indices = Vec::new();
    let mut best: Option<T> = None;
    for (t, &v) in seq.iter().enumerate() {
        if best.is_none_or(|b| v >= b) {
            indices.push(t);
            best = Some(v);
        }
    }
    MonotoneChain::new(indices, 1)
}

/// All visits to the most frequent value; ties go to the smallest value.
pub fn longest_level_set(seq: &[i64]) -> MonotoneChain {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in seq {
        *counts.entry(v).or_default() += 1;
    }
    let Some((&value, _)) = counts.iter().fold(None, |acc: Option<(&i64, &usize)>, (v, c)| match acc {
        Some((_, bc)) if bc >= c => acc,
        _ => Some((v, c)),
    }) else {
        return MonotoneChain::new(Vec::new(), 1);
    };
    let indices = seq.iter().enumerate().filter(|&(_, &v)| v == value).map(|(t, _)| t).collect();
    MonotoneChain::new(indices, 1)
}

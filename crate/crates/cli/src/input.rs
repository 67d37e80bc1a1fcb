use walklis::{Error, Result};

/// Parses a sequence file: every whitespace-separated token for `d = 1`,
/// otherwise one point of `d` values per non-empty line. `#` starts a comment.
pub fn parse_sequence(text: &str, d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let before = values.len();
        for token in line.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| parse_error(i, format!("`{token}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(i, format!("`{token}` is not finite")));
            }
            values.push(v);
        }
        let found = values.len() - before;
        if d > 1 && found != 0 && found != d {
            return Err(parse_error(i, format!("expected {d} values, found {found}")));
        }
    }
    if values.is_empty() {
        return Err(Error::Parse { line: 1, message: "no values".into() });
    }
    Ok(values)
}

fn parse_error(index: usize, message: String) -> Error {
    Error::Parse { line: index + 1, message }
}

/// Parses `2^a..2^b` (powers of two), or a comma list of integers, `2^j`
/// and `1e5` style terms. Ranges may appear inside the list.
pub fn parse_sizes(text: &str) -> Result<Vec<u64>> {
    let mut sizes = Vec::new();
    for term in text.split(',').map(str::trim) {
        match term.split_once("..") {
            Some((lo, hi)) => {
                let (a, b) = (power_exponent(lo)?, power_exponent(hi)?);
                if a > b {
                    return Err(bad_size(term));
                }
                sizes.extend((a..=b).map(|j| 1u64 << j));
            }
            None => sizes.push(parse_size(term)?),
        }
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("sizes must be strictly increasing: {text}")));
    }
    Ok(sizes)
}

fn bad_size(term: &str) -> Error {
    Error::InvalidArgument(format!("cannot parse size `{term}`"))
}

fn power_exponent(term: &str) -> Result<u32> {
    term.trim()
        .strip_prefix("2^")
        .and_then(|e| e.parse::<u32>().ok())
        .filter(|&e| e < 64)
        .ok_or_else(|| Error::InvalidArgument(format!("range ends must look like 2^j, got `{term}`")))
}

fn parse_size(term: &str) -> Result<u64> {
    if term.starts_with("2^") {
        return power_exponent(term).map(|e| 1u64 << e);
    }
    if let Ok(v) = term.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = term.parse().map_err(|_| bad_size(term))?;
    if v.fract() != 0.0 || v < 0.0 || v >= 2f64.powi(64) {
        return Err(bad_size(term));
    }
    Ok(v as u64)
}

/// Parses `LO,HI` with `LO ≤ HI`.
pub fn parse_pair(text: &str) -> Result<(f64, f64)> {
    let bad = || Error::InvalidArgument(format!("expected LO,HI, got `{text}`"));
    let (lo, hi) = text.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

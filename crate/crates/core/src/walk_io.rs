//! Flat binary and CSV encodings of walks.
//!
//! Binary layout, all integers little endian:
//!
//! ```text
//! magic   4 bytes  "RWLK"
//! version u16      1
//! dim     u32
//! steps   u64
//! law     u8       0 simple, 1 lazy, 2 uniform, 3 normal
//! param   u32      `a` for uniform:a, else 0
//! seed    u64
//! body    (steps + 1) * dim values; i64 lattice units or f64
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::walk::{Positions, StepKind, StepLaw, Walk};

pub const MAGIC: &[u8; 4] = b"RWLK";
pub const VERSION: u16 = 1;

pub fn write_binary<W: Write>(walk: &Walk, mut out: W) -> Result<()> {
    let law = walk.law();
    let (id, param) = law.kind.id();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(law.dim as u32).to_le_bytes())?;
    out.write_all(&(walk.steps() as u64).to_le_bytes())?;
    out.write_all(&[id])?;
    out.write_all(&param.to_le_bytes())?;
    out.write_all(&walk.seed().to_le_bytes())?;
    match walk.positions() {
        Positions::Lattice(v) => {
            for x in v {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        Positions::Real(v) => {
            for x in v {
                out.write_all(&x.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn take<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated input: {e}")))?;
    Ok(buf)
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Walk> {
    if &take::<4, _>(&mut input)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes(take(&mut input)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(take(&mut input)?) as usize;
    let steps = u64::from_le_bytes(take(&mut input)?) as usize;
    let [id] = take::<1, _>(&mut input)?;
    let param = u32::from_le_bytes(take(&mut input)?);
    let seed = u64::from_le_bytes(take(&mut input)?);
    let kind = StepKind::from_id(id, param)?;
    let law = StepLaw::new(kind, dim).map_err(|e| Error::Format(e.to_string()))?;
    let count = steps
        .checked_add(1)
        .and_then(|p| p.checked_mul(dim))
        .ok_or_else(|| Error::Format("header sizes overflow".into()))?;
    let mut raw = Vec::new();
    input.read_to_end(&mut raw)?;
    if raw.len() != count * 8 {
        return Err(Error::Format(format!(
            "body has {} bytes, expected {}",
            raw.len(),
            count * 8
        )));
    }
    let words = raw.chunks_exact(8).map(|c| <[u8; 8]>::try_from(c).expect("chunk of 8"));
    let walk = if kind.is_lattice() {
        Walk::from_lattice(law, seed, words.map(i64::from_le_bytes).collect())
    } else {
        Walk::from_real(law, seed, words.map(f64::from_le_bytes).collect())
    };
    walk.map_err(|e| Error::Format(e.to_string()))
}

/// CSV with columns `t, x1, …, xd` in real units.
pub fn write_csv<W: Write>(walk: &Walk, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let d = walk.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    wtr.write_record(&header)?;
    for t in 0..walk.len() {
        let mut row = vec![t.to_string()];
        row.extend((0..d).map(|i| walk.value(t, i).to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

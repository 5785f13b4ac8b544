//! Path ensemble export.
//!
//! CSV rows are `replica,site,time,value`, with `site` the flat index of the
//! site in lexicographic order over `{-n..n}^d` (last coordinate fastest).
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! magic    8 bytes  "TNPATH01"
//! dim      u64
//! radius   u64
//! replicas u64
//! sites    u64      (2 radius + 1)^dim
//! times    u64      number of stored rows
//! dt       f64      grid step
//! horizon  f64      T
//! t        f64 x times
//! values   f64 x replicas x times x sites, replica-major then time then site
//! ```

use crate::field::PathField;
use crate::lattice::LatticeShape;
use crate::{Error, Result};
use std::io::{Read, Write};

pub const BINARY_MAGIC: &[u8; 8] = b"TNPATH01";

fn check_same_layout(fields: &[&PathField]) -> Result<()> {
    if let Some(first) = fields.first() {
        if fields.iter().any(|f| f.shape() != first.shape() || f.times() != first.times()) {
            return Err(Error::InvalidParameter("fields differ in shape or times".into()));
        }
    }
    Ok(())
}

pub fn write_paths_csv<W: Write>(out: &mut W, fields: &[&PathField]) -> Result<()> {
    check_same_layout(fields)?;
    writeln!(out, "replica,site,time,value")?;
    for (r, f) in fields.iter().enumerate() {
        let sites = f.shape().site_count();
        for site in 0..sites {
            for (t, time) in f.times().iter().enumerate() {
                writeln!(out, "{r},{site},{time},{}", f.at(t, site))?;
            }
        }
    }
    Ok(())
}

pub fn write_paths_binary<W: Write>(out: &mut W, fields: &[&PathField], dt: f64) -> Result<()> {
    check_same_layout(fields)?;
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidParameter("no fields to write".into()))?;
    let shape = first.shape();
    let times = first.times();
    out.write_all(BINARY_MAGIC)?;
    for v in [shape.dim(), shape.radius(), fields.len(), shape.site_count(), times.len()] {
        out.write_all(&(v as u64).to_le_bytes())?;
    }
    out.write_all(&dt.to_le_bytes())?;
    out.write_all(&times.last().copied().unwrap_or(0.0).to_le_bytes())?;
    for t in times {
        out.write_all(&t.to_le_bytes())?;
    }
    for f in fields {
        for v in f.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Header and fields of a binary path dump.
#[derive(Clone, Debug)]
pub struct BinaryPaths {
    pub dt: f64,
    pub horizon: f64,
    pub fields: Vec<PathField>,
}

pub fn read_paths_binary<R: Read>(input: &mut R) -> Result<BinaryPaths> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::InvalidParameter("not a path dump (bad magic)".into()));
    }
    let mut word = [0u8; 8];
    let mut next = |input: &mut R| -> Result<[u8; 8]> {
        input.read_exact(&mut word)?;
        Ok(word)
    };
    let mut header = [0usize; 5];
    for h in header.iter_mut() {
        *h = u64::from_le_bytes(next(input)?) as usize;
    }
    let [dim, radius, replicas, sites, n_times] = header;
    let shape = LatticeShape::new(dim, radius)?;
    if shape.site_count() != sites {
        return Err(Error::InvalidParameter("site count does not match dim and radius".into()));
    }
    let dt = f64::from_le_bytes(next(input)?);
    let horizon = f64::from_le_bytes(next(input)?);
    let times = (0..n_times)
        .map(|_| next(input).map(f64::from_le_bytes))
        .collect::<Result<Vec<_>>>()?;
    let mut fields = Vec::with_capacity(replicas);
    for _ in 0..replicas {
        let values = (0..n_times * sites)
            .map(|_| next(input).map(f64::from_le_bytes))
            .collect::<Result<Vec<_>>>()?;
        fields.push(PathField::from_values(shape, times.clone(), values)?);
    }
    Ok(BinaryPaths { dt, horizon, fields })
}

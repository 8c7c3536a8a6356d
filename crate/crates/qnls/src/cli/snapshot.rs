//! Binary field snapshots.
//!
//! Layout, all little-endian: magic `NLSS`, `u32` version, `u32` dimension
//! (1–3 for uniform grids, 5 for radial data), `u32` axis count, one `u64`
//! count and one `f64` length per axis, `f64` κ, `f64` t, `u32` field count
//! (always 2), then interleaved `(re, im)` `f64` samples of `u` followed by
//! those of `v`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{FieldPair, PairFunctionals, RadialPair};
use crate::grid::{Field, RadialGrid, UniformGrid};

pub const MAGIC: &[u8; 4] = b"NLSS";
pub const VERSION: u32 = 1;
pub const RADIAL_DIMENSION: u32 = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Uniform(FieldPair),
    Radial(RadialPair),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub dimension: u32,
    pub counts: Vec<u64>,
    pub lengths: Vec<f64>,
    pub kappa: f64,
    pub t: f64,
    pub fields: u32,
}

impl SnapshotHeader {
    /// Sample count of one field.
    pub fn size(&self) -> u64 {
        self.counts.iter().product()
    }

    /// Payload bytes after the header.
    pub fn payload_len(&self) -> u64 {
        self.fields as u64 * self.size() * 16
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.dimension.to_le_bytes());
        out.extend_from_slice(&(self.counts.len() as u32).to_le_bytes());
        for c in &self.counts {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for l in &self.lengths {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out.extend_from_slice(&self.kappa.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        out.extend_from_slice(&self.fields.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format("truncated snapshot".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn complex(&mut self, n: usize) -> Result<Vec<Complex64>> {
        (0..n).map(|_| Ok(Complex64::new(self.f64()?, self.f64()?))).collect()
    }
}

fn push_samples(out: &mut Vec<u8>, data: &[Complex64]) {
    for z in data {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
}

/// Serializes a snapshot. Uniform fields must carry no tilt beyond a box
/// wavenumber, since the format stores plain samples.
pub fn encode_snapshot(s: &Snapshot, t: f64) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    match s {
        Snapshot::Uniform(p) => {
            for f in [&p.u, &p.v] {
                let mut probe = f.clone();
                if !probe.absorb_tilt(1e-12) {
                    return Err(Error::Format("field carries a phase tilt that is not a box wavenumber".into()));
                }
            }
            let g = p.grid();
            let header = SnapshotHeader {
                dimension: g.dim() as u32,
                counts: vec![g.n() as u64; g.dim()],
                lengths: vec![g.length(); g.dim()],
                kappa: p.kappa(),
                t,
                fields: 2,
            };
            header.encode(&mut out);
            push_samples(&mut out, p.u.data());
            push_samples(&mut out, p.v.data());
        }
        Snapshot::Radial(p) => {
            let header = SnapshotHeader {
                dimension: RADIAL_DIMENSION,
                counts: vec![p.grid().m() as u64],
                lengths: vec![p.grid().r_max()],
                kappa: PairFunctionals::kappa(p),
                t,
                fields: 2,
            };
            header.encode(&mut out);
            push_samples(&mut out, &p.u);
            push_samples(&mut out, &p.v);
        }
    }
    Ok(out)
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(Snapshot, f64)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad magic, not a snapshot".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let dimension = r.u32()?;
    let axes = r.u32()? as usize;
    if axes == 0 || axes > 3 {
        return Err(Error::Format(format!("axis count {axes} out of range")));
    }
    let counts = (0..axes).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
    let lengths = (0..axes).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let header = SnapshotHeader { dimension, counts, lengths, kappa: r.f64()?, t: r.f64()?, fields: r.u32()? };
    if header.fields != 2 {
        return Err(Error::Format(format!("expected 2 fields, found {}", header.fields)));
    }
    let remaining = (bytes.len() - r.pos) as u64;
    if header.counts.iter().any(|&c| c > 1 << 30) || remaining != header.payload_len() {
        return Err(Error::Format(format!(
            "payload is {remaining} bytes, header requires {}",
            header.payload_len()
        )));
    }
    let size = header.size() as usize;
    let u = r.complex(size)?;
    let v = r.complex(size)?;
    let snap = if dimension == RADIAL_DIMENSION {
        if axes != 1 {
            return Err(Error::Format("radial snapshot must have one axis".into()));
        }
        let grid = RadialGrid::new(header.counts[0] as usize, header.lengths[0])?;
        Snapshot::Radial(RadialPair::new(grid, u, v, header.kappa)?)
    } else {
        let d = dimension as usize;
        if axes != d {
            return Err(Error::Format(format!("dimension {d} with {axes} axes")));
        }
        if header.counts.iter().any(|&c| c != header.counts[0]) || header.lengths.iter().any(|&l| l != header.lengths[0]) {
            return Err(Error::Format("only cubic boxes are supported".into()));
        }
        let grid = UniformGrid::new(d, header.counts[0] as usize, header.lengths[0])?;
        Snapshot::Uniform(FieldPair::new(Field::new(grid, u)?, Field::new(grid, v)?, header.kappa)?)
    };
    Ok((snap, header.t))
}

pub fn write_snapshot(s: &Snapshot, t: f64, path: &Path) -> Result<()> {
    fs::write(path, encode_snapshot(s, t)?)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(Snapshot, f64)> {
    decode_snapshot(&fs::read(path)?)
}

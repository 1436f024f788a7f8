//! The `LUTF` binary table container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "LUTF"
//! 4       2     version (u16 LE), currently 1
//! 6       1     kind: 0 clipped, 1 compacted, 2 channel
//! 7       1     signedness: 0 unsigned pixel, 1 signed offset
//! 8       1     n (dimensions)
//! 9       1     V (cached values per entry)
//! 10      1     q
//! 11      1     dw     (0 unless compacted)
//! 12      1     Q      (0 unless compacted)
//! 13      1     p      (0 unless compacted)
//! 14      2n    pattern offsets, n (dy, dx) pairs of i8; zeros for channel tables
//! 14+2n   ...   payload: one byte per cached value, row-major, channel fastest;
//!               compacted tables store the diagonal block then the
//!               non-diagonal block
//! ```
//!
//! Unsigned values are stored as `u8`, signed offsets as two's-complement `i8`.

use std::path::Path;

use crate::compact::CompactedLut;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::lut::{ClippedLut, Sampling, Signedness};
use crate::table::Table;

pub const MAGIC: &[u8; 4] = b"LUTF";
pub const VERSION: u16 = 1;
const HEADER: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LutKind {
    Clipped = 0,
    Compacted = 1,
    Channel = 2,
}

/// A table plus the spatial pattern it was cached for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LutFile {
    pub kind: LutKind,
    /// `None` for channel tables.
    pub pattern: Option<Vec<(i8, i8)>>,
    pub table: Table,
}

impl LutFile {
    pub fn spatial(pattern: Vec<(i8, i8)>, table: Table) -> Self {
        let kind = match table {
            Table::Clipped(_) => LutKind::Clipped,
            Table::Compacted(_) => LutKind::Compacted,
        };
        Self {
            kind,
            pattern: Some(pattern),
            table,
        }
    }

    pub fn channel(table: ClippedLut) -> Self {
        Self {
            kind: LutKind::Channel,
            pattern: None,
            table: Table::Clipped(table),
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let t = &self.table;
        let n = t.dims();
        let mut out = Vec::with_capacity(HEADER + 2 * n + t.payload_bytes());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.kind as u8);
        out.push(t.signedness().to_byte());
        out.push(n as u8);
        out.push(t.channels() as u8);
        out.push(t.sampling().q());
        match t {
            Table::Compacted(c) => {
                out.push(c.dw() as u8);
                out.push(c.shift());
                out.push(c.compact_dims() as u8);
            }
            Table::Clipped(_) => out.extend_from_slice(&[0, 0, 0]),
        }
        match (&self.kind, &self.pattern) {
            (LutKind::Channel, _) | (_, None) => out.extend(std::iter::repeat_n(0u8, 2 * n)),
            (_, Some(p)) => {
                if p.len() != n {
                    return Err(Error::Dimension(format!(
                        "pattern of {} offsets for a {n}-D table",
                        p.len()
                    )));
                }
                for &(dy, dx) in p {
                    out.push(dy as u8);
                    out.push(dx as u8);
                }
            }
        }
        match t {
            Table::Clipped(c) => push_values(&mut out, c.values()),
            Table::Compacted(c) => {
                push_values(&mut out, c.diag_values());
                push_values(&mut out, c.nondiag().values());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER {
            return Err(Error::Format("truncated header".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic, not a LUTF file".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported LUTF version {version}")));
        }
        let kind = match bytes[6] {
            0 => LutKind::Clipped,
            1 => LutKind::Compacted,
            2 => LutKind::Channel,
            k => return Err(Error::Format(format!("unknown table kind {k}"))),
        };
        let sign = Signedness::from_byte(bytes[7])?;
        let n = bytes[8] as usize;
        let v = bytes[9] as usize;
        let sampling = Sampling::new(bytes[10]).map_err(|e| Error::Format(e.to_string()))?;
        let (dw, shift, p) = (bytes[11] as u32, bytes[12], bytes[13] as usize);
        let body = &bytes[HEADER..];
        if body.len() < 2 * n {
            return Err(Error::Format("truncated pattern block".into()));
        }
        let pattern: Vec<(i8, i8)> = body[..2 * n]
            .chunks_exact(2)
            .map(|c| (c[0] as i8, c[1] as i8))
            .collect();
        let payload = &body[2 * n..];
        let fmt = |e: Error| Error::Format(e.to_string());
        let l = sampling.nodes();
        let dense = l
            .checked_pow(n as u32)
            .and_then(|x| x.checked_mul(v))
            .ok_or_else(|| Error::Format("table too large".into()))?;
        let table = match kind {
            LutKind::Clipped | LutKind::Channel => {
                if dw != 0 || shift != 0 || p != 0 {
                    return Err(Error::Format("compaction fields set on a dense table".into()));
                }
                if payload.len() != dense {
                    return Err(Error::Format(format!(
                        "payload is {} bytes, expected {dense}",
                        payload.len()
                    )));
                }
                Table::Clipped(
                    ClippedLut::new(n, v, sampling, sign, read_values(payload, sign)).map_err(fmt)?,
                )
            }
            LutKind::Compacted => {
                let coarse = sampling.coarser(shift).map_err(fmt)?;
                let nd_len = coarse.nodes().pow(n as u32) * v;
                if payload.len() < nd_len {
                    return Err(Error::Format("truncated payload".into()));
                }
                let (diag, nd) = payload.split_at(payload.len() - nd_len);
                let nondiag =
                    ClippedLut::new(n, v, coarse, sign, read_values(nd, sign)).map_err(fmt)?;
                Table::Compacted(
                    CompactedLut::from_parts(
                        sampling,
                        n,
                        v,
                        sign,
                        dw,
                        shift,
                        p,
                        read_values(diag, sign),
                        nondiag,
                    )
                    .map_err(fmt)?,
                )
            }
        };
        Ok(Self {
            kind,
            pattern: (kind != LutKind::Channel).then_some(pattern),
            table,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::decode(&bytes).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.encode()?)
    }
}

fn push_values(out: &mut Vec<u8>, values: &[i16]) {
    out.extend(values.iter().map(|&v| v as i8 as u8));
}

fn read_values(bytes: &[u8], sign: Signedness) -> Vec<i16> {
    match sign {
        Signedness::UnsignedPixel => bytes.iter().map(|&b| b as i16).collect(),
        Signedness::SignedOffset => bytes.iter().map(|&b| b as i8 as i16).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lutgen::{cache_clipped, Oracle};

    fn sample() -> LutFile {
        let o = Oracle::parse("box|identity", 4).unwrap();
        let lut = cache_clipped(&o, Sampling::default(), 2).unwrap();
        LutFile::spatial(vec![(0, 0), (0, 1), (1, 0), (1, 1)], lut.into())
    }

    #[test]
    fn header_layout() {
        let bytes = sample().encode().unwrap();
        assert_eq!(&bytes[..4], b"LUTF");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..14], &[0, 0, 4, 2, 4, 0, 0, 0]);
        assert_eq!(&bytes[14..22], &[0, 0, 0, 1, 1, 0, 1, 1]);
        assert_eq!(bytes.len(), 22 + 2 * 83_521);
    }

    #[test]
    fn compacted_and_signed_roundtrip() {
        let f = sample();
        let c = CompactedLut::new(f.table.as_clipped().unwrap(), 3, 1, 4).unwrap();
        let f = LutFile::spatial(f.pattern.clone().unwrap(), c.into());
        let bytes = f.encode().unwrap();
        assert_eq!(bytes.len(), 22 + f.table.payload_bytes());
        assert_eq!(LutFile::decode(&bytes).unwrap(), f);

        let o = Oracle::parse("offset:-64,64,0:-3", 3).unwrap();
        let ch = LutFile::channel(cache_clipped(&o, Sampling::default(), 1).unwrap());
        let back = LutFile::decode(&ch.encode().unwrap()).unwrap();
        assert_eq!(back, ch);
        assert!(back.pattern.is_none());
    }

    #[test]
    fn rejects_corruption() {
        let bytes = sample().encode().unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(LutFile::decode(&bad).is_err());
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(LutFile::decode(&bad).is_err());
        let mut bad = bytes.clone();
        bad[6] = 9;
        assert!(LutFile::decode(&bad).is_err());
        assert!(LutFile::decode(&bytes[..bytes.len() - 1]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(LutFile::decode(&long).is_err());
        assert!(LutFile::decode(&bytes[..10]).is_err());
    }
}

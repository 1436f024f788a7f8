//! Uniformly sampled look-up tables.

use crate::error::{Error, Result};

/// Largest table dimensionality that can be allocated.
pub const MAX_DIMS: usize = 4;

/// Uniform sampling of the 8-bit input range: `q` low bits are dropped, giving
/// `2^(8-q) + 1` nodes per dimension spaced `2^q` apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Sampling {
    q: u8,
}

impl Sampling {
    pub fn new(q: u8) -> Result<Self> {
        if q > 8 {
            return Err(Error::Param(format!("sampling shift q={q} exceeds 8")));
        }
        Ok(Self { q })
    }

    #[inline]
    pub fn q(self) -> u8 {
        self.q
    }

    /// Sampling interval W.
    #[inline]
    pub fn interval(self) -> i32 {
        1 << self.q
    }

    /// Nodes per dimension L.
    #[inline]
    pub fn nodes(self) -> usize {
        (1usize << (8 - self.q)) + 1
    }

    /// Pixel value cached at node `i`. The last node sits at 255, not 256.
    #[inline]
    pub fn node_value(self, i: usize) -> u8 {
        (i << self.q).min(255) as u8
    }

    /// Coarsens the grid by `extra` more bits.
    pub fn coarser(self, extra: u8) -> Result<Self> {
        Self::new(self.q + extra)
    }
}

impl Default for Sampling {
    fn default() -> Self {
        Self { q: 4 }
    }
}

/// Whether cached values are pixels or signed correction offsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Signedness {
    UnsignedPixel,
    SignedOffset,
}

impl Signedness {
    #[inline]
    pub fn range(self) -> (i32, i32) {
        match self {
            Signedness::UnsignedPixel => (0, 255),
            Signedness::SignedOffset => (-128, 127),
        }
    }

    #[inline]
    pub fn clamp(self, v: i32) -> i16 {
        let (lo, hi) = self.range();
        v.clamp(lo, hi) as i16
    }

    pub fn to_byte(self) -> u8 {
        match self {
            Signedness::UnsignedPixel => 0,
            Signedness::SignedOffset => 1,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Signedness::UnsignedPixel),
            1 => Ok(Signedness::SignedOffset),
            _ => Err(Error::Format(format!("unknown signedness byte {b}"))),
        }
    }
}

/// A dense `L^n x V` table of 8-bit cached values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClippedLut {
    dims: usize,
    channels: usize,
    sampling: Sampling,
    signedness: Signedness,
    strides: [usize; MAX_DIMS],
    values: Vec<i16>,
}

impl ClippedLut {
    pub fn new(
        dims: usize,
        channels: usize,
        sampling: Sampling,
        signedness: Signedness,
        values: Vec<i16>,
    ) -> Result<Self> {
        check_shape(dims, channels)?;
        let expected = sampling.nodes().pow(dims as u32) * channels;
        if values.len() != expected {
            return Err(Error::Dimension(format!(
                "table holds {} values, expected {expected}",
                values.len()
            )));
        }
        let (lo, hi) = signedness.range();
        if let Some(bad) = values.iter().find(|&&v| (v as i32) < lo || (v as i32) > hi) {
            return Err(Error::Param(format!(
                "cached value {bad} outside {lo}..={hi}"
            )));
        }
        Ok(Self {
            dims,
            channels,
            sampling,
            signedness,
            strides: strides(dims, sampling.nodes()),
            values,
        })
    }

    /// Builds a table by visiting every node tuple in row-major order.
    pub fn from_fn(
        dims: usize,
        channels: usize,
        sampling: Sampling,
        signedness: Signedness,
        mut f: impl FnMut(&[usize], &mut [i32]),
    ) -> Result<Self> {
        check_shape(dims, channels)?;
        let l = sampling.nodes();
        let count = l.pow(dims as u32);
        let mut values = Vec::with_capacity(count * channels);
        let mut nodes = [0usize; MAX_DIMS];
        let mut out = [0i32; MAX_DIMS];
        for _ in 0..count {
            f(&nodes[..dims], &mut out[..channels]);
            values.extend(out[..channels].iter().map(|&v| signedness.clamp(v)));
            // odometer increment, last dimension fastest
            for d in (0..dims).rev() {
                nodes[d] += 1;
                if nodes[d] < l {
                    break;
                }
                nodes[d] = 0;
            }
        }
        Ok(Self {
            dims,
            channels,
            sampling,
            signedness,
            strides: strides(dims, l),
            values,
        })
    }

    #[inline]
    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Cached values per entry (V).
    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    #[inline]
    pub fn signedness(&self) -> Signedness {
        self.signedness
    }

    #[inline]
    pub fn values(&self) -> &[i16] {
        &self.values
    }

    #[inline]
    pub fn strides(&self) -> &[usize] {
        &self.strides[..self.dims]
    }

    /// Flat offset of the first value of the entry at `nodes`.
    #[inline(always)]
    pub fn offset(&self, nodes: &[usize]) -> usize {
        let mut off = 0;
        for (d, &i) in nodes.iter().enumerate() {
            off += i * self.strides[d];
        }
        off * self.channels
    }

    #[inline]
    pub fn entry(&self, nodes: &[usize]) -> &[i16] {
        let off = self.offset(nodes);
        &self.values[off..off + self.channels]
    }

    /// Number of serialized payload bytes.
    pub fn payload_bytes(&self) -> usize {
        self.values.len()
    }
}

fn check_shape(dims: usize, channels: usize) -> Result<()> {
    if dims == 0 || dims > MAX_DIMS {
        return Err(Error::Dimension(format!(
            "table dimensionality {dims} not in 1..={MAX_DIMS}"
        )));
    }
    if channels == 0 || channels > MAX_DIMS {
        return Err(Error::Dimension(format!(
            "cached channel count {channels} not in 1..={MAX_DIMS}"
        )));
    }
    Ok(())
}

pub(crate) fn strides(dims: usize, l: usize) -> [usize; MAX_DIMS] {
    let mut s = [0usize; MAX_DIMS];
    let mut acc = 1;
    for d in (0..dims).rev() {
        s[d] = acc;
        acc *= l;
    }
    s
}

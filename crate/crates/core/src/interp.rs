//! MSB/LSB decomposition and the integer interpolation kernels.
//!
//! 3-D tables use trilinear interpolation over the 8 cube corners. 2-D and
//! 4-D tables use simplex interpolation: the LSBs are ranked, the simplex
//! walks from the all-zero corner to the all-one corner setting one axis bit
//! per step in descending LSB order, and the barycentric weights are the
//! successive LSB differences. Vertex codes put the first axis in the most
//! significant bit, so in 4-D `P_xyzt` has code `8x + 4y + 2z + t`.

use crate::error::{Error, Result};
use crate::lut::{ClippedLut, MAX_DIMS};
use crate::metrics::{NoOps, OpSink, Width};

/// A pixel split into its node index and fractional offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MsbLsb {
    pub msb: u8,
    pub lsb: u8,
}

#[inline(always)]
pub fn split(x: u8, q: u8) -> MsbLsb {
    if q >= 8 {
        return MsbLsb { msb: 0, lsb: x };
    }
    let msb = x >> q;
    MsbLsb {
        msb,
        lsb: x - (msb << q),
    }
}

/// Node index and interpolation offset in units of `W = 2^q`.
///
/// The last bin spans `W - 1` values because the top node sits at 255, so its
/// offset is rescaled to `round(lsb * W / (W - 1))`; 255 then lands exactly
/// on the top node. Elsewhere the offset is the plain LSB.
#[inline(always)]
pub fn cell_offset(x: u8, q: u8) -> (u8, i32) {
    let s = split(x, q);
    let w = 1i32 << q.min(8);
    let lsb = s.lsb as i32;
    if w > 1 && s.msb as u32 == 255u32 >> q.min(8) {
        (s.msb, (2 * lsb * w + w - 1) / (2 * (w - 1)))
    } else {
        (s.msb, lsb)
    }
}

/// One of the 24 orderings of four LSBs with the vertices it selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimplexRule {
    /// Axes (0=x, 1=y, 2=z, 3=t) by descending LSB.
    pub order: [usize; 4],
    /// Binary codes of the intermediate vertices O1..O3.
    pub vertices: [u8; 3],
}

impl SimplexRule {
    fn from_order(order: [usize; 4]) -> Self {
        let mut code = 0u8;
        let mut vertices = [0u8; 3];
        for k in 0..3 {
            code |= 1 << (3 - order[k]);
            vertices[k] = code;
        }
        Self { order, vertices }
    }

    /// Weights `(w0..w4)` pairing with `P0000, O1, O2, O3, P1111`.
    pub fn weights(&self, lsb: [i32; 4], interval: i32) -> [i32; 5] {
        let p = self.order.map(|a| lsb[a]);
        [interval - p[0], p[0] - p[1], p[1] - p[2], p[2] - p[3], p[3]]
    }

    /// Whether `lsb` is consistent with this ordering (non-strict).
    pub fn matches(&self, lsb: [i32; 4]) -> bool {
        (0..3).all(|k| lsb[self.order[k]] >= lsb[self.order[k + 1]])
    }
}

/// All 24 rules in lexicographic order of their axis permutation.
pub fn simplex_rules() -> Vec<SimplexRule> {
    let mut rules = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let o = [a, b, c, d];
                    let distinct = (0..4).all(|i| (i + 1..4).all(|j| o[i] != o[j]));
                    if distinct {
                        rules.push(SimplexRule::from_order(o));
                    }
                }
            }
        }
    }
    rules
}

/// Descending LSB order, ties broken by axis index.
#[inline(always)]
fn rank<const N: usize, T: Copy + PartialOrd>(lsb: &[T]) -> [usize; N] {
    let mut order = [0usize; N];
    for (i, o) in order.iter_mut().enumerate() {
        *o = i;
    }
    // insertion sort, stable
    for i in 1..N {
        let mut j = i;
        while j > 0 && lsb[order[j - 1]] < lsb[order[j]] {
            order.swap(j - 1, j);
            j -= 1;
        }
    }
    order
}

/// The rule a 4-D query selects.
pub fn select_rule(lsb: [u8; 4]) -> SimplexRule {
    SimplexRule::from_order(rank::<4, _>(&lsb))
}

/// Weights and node tuples for one kernel evaluation.
#[derive(Clone, Copy, Debug)]
pub struct Plan {
    dims: usize,
    len: usize,
    shift: u32,
    weights: [i32; 8],
    corners: [[u8; MAX_DIMS]; 8],
}

impl Plan {
    /// Simplex plan for `dims` in `1..=4`.
    #[inline]
    pub fn simplex<O: OpSink>(px: &[u8], q: u8, ops: &mut O) -> Plan {
        let dims = px.len();
        let mut msb = [0u8; MAX_DIMS];
        let mut lsb = [0i32; MAX_DIMS];
        for (i, &x) in px.iter().enumerate() {
            (msb[i], lsb[i]) = cell_offset(x, q);
        }
        let order: [usize; MAX_DIMS] = match dims {
            1 => [0, 1, 2, 3],
            2 => {
                let o = rank::<2, _>(&lsb);
                [o[0], o[1], 2, 3]
            }
            3 => {
                let o = rank::<3, _>(&lsb);
                [o[0], o[1], o[2], 3]
            }
            _ => rank::<4, _>(&lsb),
        };
        let interval = 1i32 << q;
        let mut plan = Plan {
            dims,
            len: dims + 1,
            shift: q as u32,
            weights: [0; 8],
            corners: [[0; MAX_DIMS]; 8],
        };
        plan.corners[0] = msb;
        let mut prev = interval;
        let mut node = msb;
        for k in 0..dims {
            let axis = order[k];
            let l = lsb[axis];
            plan.weights[k] = prev - l;
            prev = l;
            // saturates only at q = 0, where the step has zero weight
            node[axis] = node[axis].saturating_add(1);
            plan.corners[k + 1] = node;
        }
        plan.weights[dims] = prev;
        ops.add(Width::Int8, dims as u64);
        ops.mul(Width::Int32, dims as u64 - 1);
        ops.add(Width::Int32, dims as u64 - 1 + dims as u64 + 1);
        plan
    }

    /// Trilinear plan over the 8 corners of a 3-D cell.
    #[inline]
    pub fn trilinear<O: OpSink>(px: &[u8], q: u8, ops: &mut O) -> Plan {
        let s = [cell_offset(px[0], q), cell_offset(px[1], q), cell_offset(px[2], q)];
        let interval = 1i32 << q;
        let mut plan = Plan {
            dims: 3,
            len: 8,
            shift: 3 * q as u32,
            weights: [0; 8],
            corners: [[0; MAX_DIMS]; 8],
        };
        for c in 0..8 {
            let mut w = 1;
            let mut node = [0u8; MAX_DIMS];
            for a in 0..3 {
                let bit = (c >> (2 - a)) & 1;
                let l = s[a].1;
                w *= if bit == 1 { l } else { interval - l };
                node[a] = s[a].0.saturating_add(bit as u8);
            }
            plan.weights[c] = w;
            plan.corners[c] = node;
        }
        ops.add(Width::Int8, 3);
        ops.mul(Width::Int16, 16);
        ops.mul(Width::Int32, 2);
        ops.add(Width::Int32, 2 + 8);
        plan
    }

    /// The kernel a table of `dims` dimensions uses.
    #[inline]
    pub fn for_dims<O: OpSink>(dims: usize, px: &[u8], q: u8, ops: &mut O) -> Plan {
        if dims == 3 {
            Self::trilinear(px, q, ops)
        } else {
            Self::simplex(px, q, ops)
        }
    }

    #[inline]
    pub fn dims(&self) -> usize {
        self.dims
    }

    /// `(weight, node tuple)` for every vertex, including zero-weight ones.
    #[inline]
    pub fn vertices(&self) -> impl Iterator<Item = (i32, &[u8])> + '_ {
        (0..self.len).map(move |k| (self.weights[k], &self.corners[k][..self.dims]))
    }

    /// Vertices that contribute to the result.
    #[inline]
    pub fn used_vertices(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.vertices().filter(|(w, _)| *w != 0).map(|(_, n)| n)
    }

    pub fn weight_sum(&self) -> i32 {
        self.weights[..self.len].iter().sum()
    }

    /// Weighted sum of the fetched vertex values, rounded half up.
    #[inline]
    pub fn apply<'a, F, O>(&self, fetch: F, out: &mut [i32], ops: &mut O)
    where
        F: Fn(&[u8]) -> &'a [i16],
        O: OpSink,
    {
        let channels = out.len();
        // i64 so that q = 8 trilinear (weights up to 2^24) cannot overflow
        let mut acc = [0i64; MAX_DIMS];
        for k in 0..self.len {
            let w = self.weights[k] as i64;
            if w == 0 {
                continue;
            }
            let v = fetch(&self.corners[k][..self.dims]);
            for c in 0..channels {
                acc[c] += w * v[c] as i64;
            }
        }
        let half = (1i64 << self.shift) >> 1;
        for c in 0..channels {
            out[c] = ((acc[c] + half) >> self.shift) as i32;
        }
        let n = self.len as u64 * channels as u64;
        ops.mul(Width::Int32, n);
        ops.add(Width::Int32, n);
    }
}

#[inline(always)]
fn fetch_entry<'a>(lut: &'a ClippedLut) -> impl Fn(&[u8]) -> &'a [i16] {
    move |nodes: &[u8]| {
        let strides = lut.strides();
        let mut off = 0;
        for (d, &i) in nodes.iter().enumerate() {
            off += i as usize * strides[d];
        }
        let off = off * lut.channels();
        &lut.values()[off..off + lut.channels()]
    }
}

/// Interpolated retrieval without argument checks; `px.len()` must equal the
/// table dimensionality and `out.len()` its channel count.
#[inline]
pub fn retrieve_with<O: OpSink>(lut: &ClippedLut, px: &[u8], out: &mut [i32], ops: &mut O) {
    retrieve_from(lut, px, 0, out, ops);
}

/// Like [`retrieve_with`] but interpolates only cached channels
/// `first..first + out.len()`.
#[inline]
pub fn retrieve_from<O: OpSink>(
    lut: &ClippedLut,
    px: &[u8],
    first: usize,
    out: &mut [i32],
    ops: &mut O,
) {
    let plan = Plan::for_dims(lut.dims(), px, lut.sampling().q(), ops);
    let fetch = fetch_entry(lut);
    plan.apply(|n: &[u8]| &fetch(n)[first..], out, ops);
}

/// Interpolated retrieval with the kernel matching the table dimensionality.
pub fn retrieve(lut: &ClippedLut, px: &[u8], out: &mut [i32]) -> Result<()> {
    if px.len() != lut.dims() {
        return Err(Error::Dimension(format!(
            "{} inputs for a {}-D table",
            px.len(),
            lut.dims()
        )));
    }
    if out.len() != lut.channels() {
        return Err(Error::Dimension(format!(
            "{} outputs for a table caching {}",
            out.len(),
            lut.channels()
        )));
    }
    retrieve_with(lut, px, out, &mut NoOps);
    Ok(())
}

/// Trilinear retrieval from a 3-D table.
pub fn trilinear(lut: &ClippedLut, x: u8, y: u8, z: u8) -> Result<Vec<i32>> {
    if lut.dims() != 3 {
        return Err(Error::Dimension(format!("trilinear needs a 3-D table, got {}-D", lut.dims())));
    }
    let mut out = vec![0; lut.channels()];
    retrieve(lut, &[x, y, z], &mut out)?;
    Ok(out)
}

/// 4-simplex retrieval from a 4-D table.
pub fn simplex4(lut: &ClippedLut, x: u8, y: u8, z: u8, t: u8) -> Result<Vec<i32>> {
    if lut.dims() != 4 {
        return Err(Error::Dimension(format!("simplex4 needs a 4-D table, got {}-D", lut.dims())));
    }
    let mut out = vec![0; lut.channels()];
    retrieve(lut, &[x, y, z, t], &mut out)?;
    Ok(out)
}

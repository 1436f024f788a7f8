//! Diagonal re-ordering and non-diagonal pruning of clipped tables.
//!
//! Entries whose first `p` node indices lie within `dw` of each other (the
//! diagonal band) are kept at full resolution in a re-ordered table; the
//! whole domain is additionally resampled `Q` bits coarser into a small
//! non-diagonal table. Retrieval routes each query to the sub-table whose
//! kernel vertices it can be answered from.
//!
//! For `p = 2` the band is addressed with `I_c = I1 (2dw+1) + r - 1`,
//! `r = I0 - I1 + dw`, and the raw addresses are packed densely in address
//! order so the table holds exactly `(2dw+1) L - dw (dw+1)` rows. For `p > 2`
//! the offsets `r_k = I_k - I0 + dw` are packed in base `2dw+1` under `I0`,
//! and the rectangle `L (2dw+1)^(p-1)` is allocated in full, with
//! out-of-range neighbours clamped.

use crate::error::{Error, Result};
use crate::interp::Plan;
use crate::lut::{strides, ClippedLut, Sampling, Signedness, MAX_DIMS};
use crate::lutgen::{check_compaction, diag_rows};
use crate::metrics::{NoOps, OpSink, Width};

const HOLE: u32 = u32::MAX;

/// Diagonal test over the first `nodes.len()` compacted indices.
#[inline]
pub fn is_diagonal(nodes: &[u8], dw: u32) -> bool {
    let anchor = nodes[0] as i32;
    nodes[1..]
        .iter()
        .all(|&i| (i as i32 - anchor).unsigned_abs() <= dw)
}

/// Raw 2-D diagonal address `I1 (2dw+1) + r - 1`. It is `-1` for
/// `I0 = I1 = 0` when `dw = 0`.
pub fn diag_address_2d(i0: u32, i1: u32, dw: u32) -> Result<i32> {
    let (a, b, w) = (i0 as i32, i1 as i32, dw as i32);
    if (a - b).abs() > w {
        return Err(Error::Param(format!("({i0},{i1}) lies outside the dw={dw} band")));
    }
    let r = a - b + w;
    Ok(b * (2 * w + 1) + r - 1)
}

/// A compacted table: re-ordered diagonal band plus coarse full-domain table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompactedLut {
    base: Sampling,
    dims: usize,
    channels: usize,
    signedness: Signedness,
    dw: u32,
    shift: u8,
    compact_dims: usize,
    diag: Vec<i16>,
    /// `p = 2` only: raw address + 1 -> dense row.
    slots: Vec<u32>,
    residual_strides: [usize; MAX_DIMS],
    residual_len: usize,
    nondiag: ClippedLut,
}

fn build_slots(l: usize, dw: u32) -> Vec<u32> {
    let max_raw = diag_address_2d(l as u32 - 1, l as u32 - 1, dw).unwrap_or(0);
    let mut slots = vec![HOLE; max_raw as usize + 2];
    let mut row = 0;
    for i1 in 0..l as u32 {
        let lo = i1.saturating_sub(dw);
        let hi = (i1 + dw).min(l as u32 - 1);
        for i0 in lo..=hi {
            let raw = diag_address_2d(i0, i1, dw).unwrap_or(-1);
            slots[(raw + 1) as usize] = row;
            row += 1;
        }
    }
    slots
}

impl CompactedLut {
    pub fn new(clipped: &ClippedLut, dw: u32, shift: u8, compact_dims: usize) -> Result<Self> {
        let n = clipped.dims();
        let q = clipped.sampling().q();
        check_compaction(q, n as u32, dw, shift, compact_dims as u32)?;
        let l = clipped.sampling().nodes();
        let p = compact_dims;
        let v = clipped.channels();
        let residual_len = l.pow((n - p) as u32);
        let rows = diag_rows(l as u32, dw, p as u32)? as usize;
        let mut diag = Vec::with_capacity(rows * residual_len * v);

        let mut push_row = |head: &[usize]| {
            let mut nodes = [0usize; MAX_DIMS];
            nodes[..p].copy_from_slice(head);
            for flat in 0..residual_len {
                let mut rem = flat;
                for d in (p..n).rev() {
                    nodes[d] = rem % l;
                    rem /= l;
                }
                diag.extend_from_slice(clipped.entry(&nodes[..n]));
            }
        };

        let slots = if p == 2 {
            for i1 in 0..l {
                let lo = i1.saturating_sub(dw as usize);
                let hi = (i1 + dw as usize).min(l - 1);
                for i0 in lo..=hi {
                    push_row(&[i0, i1]);
                }
            }
            build_slots(l, dw)
        } else {
            let base = 2 * dw as usize + 1;
            let per_anchor = base.pow(p as u32 - 1);
            let mut head = [0usize; MAX_DIMS];
            for i0 in 0..l {
                for code in 0..per_anchor {
                    head[0] = i0;
                    let mut rem = code;
                    for k in (1..p).rev() {
                        let r = (rem % base) as isize;
                        rem /= base;
                        head[k] = (i0 as isize + r - dw as isize).clamp(0, l as isize - 1) as usize;
                    }
                    push_row(&head[..p]);
                }
            }
            Vec::new()
        };

        let coarse = clipped.sampling().coarser(shift)?;
        let step = 1usize << shift;
        let nondiag = ClippedLut::from_fn(n, v, coarse, clipped.signedness(), |nodes, out| {
            let mut fine = [0usize; MAX_DIMS];
            for (f, &i) in fine.iter_mut().zip(nodes) {
                *f = i * step;
            }
            for (o, &c) in out.iter_mut().zip(clipped.entry(&fine[..n])) {
                *o = c as i32;
            }
        })?;

        Ok(Self {
            base: clipped.sampling(),
            dims: n,
            channels: v,
            signedness: clipped.signedness(),
            dw,
            shift,
            compact_dims: p,
            diag,
            slots,
            residual_strides: strides(n - p, l),
            residual_len,
            nondiag,
        })
    }

    /// Reassembles a table from serialized blocks.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        base: Sampling,
        dims: usize,
        channels: usize,
        signedness: Signedness,
        dw: u32,
        shift: u8,
        compact_dims: usize,
        diag: Vec<i16>,
        nondiag: ClippedLut,
    ) -> Result<Self> {
        check_compaction(base.q(), dims as u32, dw, shift, compact_dims as u32)?;
        let l = base.nodes();
        let residual_len = l.pow((dims - compact_dims) as u32);
        let rows = diag_rows(l as u32, dw, compact_dims as u32)? as usize;
        if diag.len() != rows * residual_len * channels {
            return Err(Error::Format(format!(
                "diagonal block holds {} values, expected {}",
                diag.len(),
                rows * residual_len * channels
            )));
        }
        let (lo, hi) = signedness.range();
        if diag.iter().any(|&v| (v as i32) < lo || (v as i32) > hi) {
            return Err(Error::Format("diagonal value outside signedness range".into()));
        }
        if nondiag.dims() != dims
            || nondiag.channels() != channels
            || nondiag.signedness() != signedness
            || nondiag.sampling().q() != base.q() + shift
        {
            return Err(Error::Format("non-diagonal block does not match header".into()));
        }
        Ok(Self {
            base,
            dims,
            channels,
            signedness,
            dw,
            shift,
            compact_dims,
            diag,
            slots: if compact_dims == 2 { build_slots(l, dw) } else { Vec::new() },
            residual_strides: strides(dims - compact_dims, l),
            residual_len,
            nondiag,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn sampling(&self) -> Sampling {
        self.base
    }

    pub fn signedness(&self) -> Signedness {
        self.signedness
    }

    pub fn dw(&self) -> u32 {
        self.dw
    }

    pub fn shift(&self) -> u8 {
        self.shift
    }

    pub fn compact_dims(&self) -> usize {
        self.compact_dims
    }

    pub fn diag_values(&self) -> &[i16] {
        &self.diag
    }

    pub fn nondiag(&self) -> &ClippedLut {
        &self.nondiag
    }

    pub fn diag_bytes(&self) -> usize {
        self.diag.len()
    }

    pub fn payload_bytes(&self) -> usize {
        self.diag.len() + self.nondiag.payload_bytes()
    }

    /// Dense diagonal row of a node tuple inside the band.
    #[inline]
    fn diag_row(&self, head: &[u8]) -> usize {
        let w = self.dw as i32;
        if self.compact_dims == 2 {
            let (a, b) = (head[0] as i32, head[1] as i32);
            let raw = b * (2 * w + 1) + (a - b + w) - 1;
            self.slots[(raw + 1) as usize] as usize
        } else {
            let base = 2 * self.dw as usize + 1;
            let anchor = head[0] as i32;
            let mut row = head[0] as usize;
            for &i in &head[1..] {
                row = row * base + (i as i32 - anchor + w) as usize;
            }
            row
        }
    }

    fn charge_diag_rows<O: OpSink>(&self, vertices: u64, ops: &mut O) {
        let k = self.compact_dims as u64 - 1;
        if self.compact_dims == 2 {
            ops.add(Width::Int8, 2 * vertices);
            ops.mul(Width::Int16, vertices);
            ops.add(Width::Int16, 2 * vertices);
        } else {
            ops.add(Width::Int8, 2 * k * vertices);
            ops.mul(Width::Int16, k * vertices);
            ops.add(Width::Int16, k * vertices);
        }
    }

    #[inline]
    fn diag_entry(&self, row: usize, rest: &[u8]) -> &[i16] {
        let mut off = 0;
        for (d, &i) in rest.iter().enumerate() {
            off += i as usize * self.residual_strides[d];
        }
        let at = (row * self.residual_len + off) * self.channels;
        &self.diag[at..at + self.channels]
    }

    /// Whether a query is answered from the diagonal table.
    pub fn routes_diagonal(&self, px: &[u8]) -> bool {
        let plan = Plan::for_dims(self.dims, px, self.base.q(), &mut NoOps);
        let diag = plan
            .used_vertices()
            .all(|n| is_diagonal(&n[..self.compact_dims], self.dw));
        diag
    }

    /// Separable retrieval without argument checks.
    #[inline]
    pub fn retrieve_with<O: OpSink>(&self, px: &[u8], out: &mut [i32], ops: &mut O) {
        self.retrieve_from(px, 0, out, ops);
    }

    /// Separable retrieval of cached channels `first..first + out.len()`.
    #[inline]
    pub fn retrieve_from<O: OpSink>(&self, px: &[u8], first: usize, out: &mut [i32], ops: &mut O) {
        let p = self.compact_dims;
        let plan = Plan::for_dims(self.dims, px, self.base.q(), ops);
        let mut diagonal = true;
        let mut used = 0;
        for n in plan.used_vertices() {
            used += 1;
            if !is_diagonal(&n[..p], self.dw) {
                diagonal = false;
                break;
            }
        }
        ops.add(Width::Int8, used * (p as u64 - 1));
        if diagonal {
            plan.apply(
                |nodes: &[u8]| &self.diag_entry(self.diag_row(&nodes[..p]), &nodes[p..])[first..],
                out,
                ops,
            );
            self.charge_diag_rows(used, ops);
        } else {
            let coarse = Plan::for_dims(self.dims, px, self.base.q() + self.shift, ops);
            let nd = &self.nondiag;
            coarse.apply(
                |nodes: &[u8]| {
                    let mut off = 0;
                    for (d, &i) in nodes.iter().enumerate() {
                        off += i as usize * nd.strides()[d];
                    }
                    let off = off * nd.channels();
                    &nd.values()[off + first..off + nd.channels()]
                },
                out,
                ops,
            );
        }
    }

    pub fn retrieve_separable(&self, px: &[u8], out: &mut [i32]) -> Result<()> {
        if px.len() != self.dims || out.len() != self.channels {
            return Err(Error::Dimension(format!(
                "query of {} inputs / {} outputs for a {}-D table caching {}",
                px.len(),
                out.len(),
                self.dims,
                self.channels
            )));
        }
        self.retrieve_with(px, out, &mut NoOps);
        Ok(())
    }
}

pub fn compact_lut(clipped: &ClippedLut, dw: u32, shift: u8, compact_dims: usize) -> Result<CompactedLut> {
    CompactedLut::new(clipped, dw, shift, compact_dims)
}

//! Cross-component chroma offsets.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lut::Signedness;
use crate::metrics::{NoOps, OpSink, Tally, Width};
use crate::plane::{clip_u8, ChromaFormat, Frame, Plane};
use crate::table::Table;

use super::exec::{map_rows, RunOptions};

/// Signed 8-bit correction offsets at chroma resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OffsetPlane {
    width: usize,
    height: usize,
    data: Vec<i8>,
}

impl OffsetPlane {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[i8] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize) -> i8 {
        self.data[y * self.width + x]
    }

    /// `clip(plane + offset)`, one int16 add per pixel.
    pub fn add_to<O: OpSink>(&self, plane: &Plane, ops: &mut O) -> Result<Plane> {
        if plane.width() != self.width || plane.height() != self.height {
            return Err(Error::Dimension("offset plane does not match chroma plane".into()));
        }
        ops.add(Width::Int16, self.data.len() as u64);
        let data = plane
            .data()
            .iter()
            .zip(&self.data)
            .map(|(&p, &o)| clip_u8(p as i32 + o as i32))
            .collect();
        Plane::new(self.width, self.height, data)
    }
}

/// The two 3-D offset tables: `u[Y_co, U, V]` and `v[Y_co, V, U]`.
#[derive(Clone, Debug)]
pub struct CrossComponent {
    u: Arc<Table>,
    v: Arc<Table>,
}

impl CrossComponent {
    pub fn new(u: Arc<Table>, v: Arc<Table>) -> Result<Self> {
        for (name, t) in [("u", &u), ("v", &v)] {
            if t.dims() != 3 || t.channels() != 1 {
                return Err(Error::Dimension(format!(
                    "{name} offset table must be 3-D with one cached value, got {}-D x {}",
                    t.dims(),
                    t.channels()
                )));
            }
            if t.signedness() != Signedness::SignedOffset {
                return Err(Error::Dimension(format!("{name} offset table must be signed")));
            }
        }
        Ok(Self { u, v })
    }

    pub fn u(&self) -> &Arc<Table> {
        &self.u
    }

    pub fn v(&self) -> &Arc<Table> {
        &self.v
    }

    pub fn storage_bytes(&self) -> usize {
        self.u.payload_bytes() + self.v.payload_bytes()
    }
}

/// Rounded mean of the 2x2 luma block over chroma site `(cy, cx)`, with
/// replicate padding for odd luma sizes.
#[inline]
pub fn colocated_luma(y: &Plane, cy: usize, cx: usize) -> u8 {
    let (y0, x0) = (2 * cy as isize, 2 * cx as isize);
    let s = y.fetch_clamped(y0, x0) as u32
        + y.fetch_clamped(y0, x0 + 1) as u32
        + y.fetch_clamped(y0 + 1, x0) as u32
        + y.fetch_clamped(y0 + 1, x0 + 1) as u32;
    ((s + 2) >> 2) as u8
}

pub(crate) fn offsets_with<T: Tally>(
    frame: &Frame,
    cross: &CrossComponent,
    opts: &RunOptions,
) -> Result<(OffsetPlane, OffsetPlane, T)> {
    if frame.chroma_format != ChromaFormat::Yuv420 {
        return Err(Error::Dimension("cross-component offsets need a 4:2:0 frame".into()));
    }
    if frame.y.is_empty() {
        return Err(Error::EmptyPlane);
    }
    let (w, h) = (frame.u.width(), frame.u.height());
    let (data, ops) = map_rows::<i8, T, _>(opts, h, 2 * w, |cy, row, ops| {
        let mut o = [0i32; 1];
        for cx in 0..w {
            let yc = colocated_luma(&frame.y, cy, cx);
            ops.add(Width::Int16, 4);
            let (u, v) = (frame.u.get(cy, cx), frame.v.get(cy, cx));
            cross.u.retrieve_with(&[yc, u, v], &mut o, ops);
            row[2 * cx] = o[0].clamp(-128, 127) as i8;
            cross.v.retrieve_with(&[yc, v, u], &mut o, ops);
            row[2 * cx + 1] = o[0].clamp(-128, 127) as i8;
        }
    });
    let split = |k: usize| OffsetPlane {
        width: w,
        height: h,
        data: data.iter().skip(k).step_by(2).copied().collect(),
    };
    Ok((split(0), split(1), ops))
}

/// Offsets for U and V from co-located luma and both chroma planes.
pub fn cross_component_offsets(frame: &Frame, cross: &CrossComponent) -> Result<(OffsetPlane, OffsetPlane)> {
    let (u, v, _) = offsets_with::<NoOps>(frame, cross, &RunOptions::default())?;
    Ok((u, v))
}

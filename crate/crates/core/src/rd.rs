//! Block-level rate-distortion on/off decisions.
//!
//! A block keeps its filtered pixels iff
//! `SSD(original, filtered) + lambda * flag_bits < SSD(original, reconstructed)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::{ChromaFormat, Frame, Plane};

fn default_block() -> usize {
    128
}

fn default_flag_bits() -> u32 {
    1
}

fn yes() -> bool {
    true
}

/// Decision parameters. In joint mode one flag covers a luma block and its
/// two co-located chroma blocks (half the size in 4:2:0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdParams {
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_block")]
    pub block: usize,
    #[serde(default = "default_flag_bits")]
    pub flag_bits: u32,
    #[serde(default = "yes")]
    pub joint: bool,
}

impl Default for RdParams {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            block: default_block(),
            flag_bits: default_flag_bits(),
            joint: true,
        }
    }
}

impl RdParams {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::Param(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.block < 2 || !self.block.is_multiple_of(2) {
            return Err(Error::Param(format!("block size must be even and >= 2, got {}", self.block)));
        }
        Ok(())
    }

    fn flag_cost(&self) -> f64 {
        self.lambda * self.flag_bits as f64
    }
}

/// Which planes a flag switches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagScope {
    Joint,
    Luma,
    U,
    V,
}

/// One signalled flag. The rectangle is in luma samples for `Joint` and
/// `Luma`, chroma samples for `U` and `V`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RdDecision {
    pub scope: FlagScope,
    pub y: usize,
    pub x: usize,
    pub height: usize,
    pub width: usize,
    pub ssd_off: u64,
    pub ssd_on: u64,
    pub chosen: bool,
}

#[derive(Clone, Copy)]
struct Rect {
    y: usize,
    x: usize,
    h: usize,
    w: usize,
}

fn blocks(width: usize, height: usize, b: usize) -> impl Iterator<Item = Rect> {
    (0..height.div_ceil(b)).flat_map(move |by| {
        (0..width.div_ceil(b)).map(move |bx| {
            let (y, x) = (by * b, bx * b);
            Rect {
                y,
                x,
                h: b.min(height - y),
                w: b.min(width - x),
            }
        })
    })
}

fn ssd_rect(a: &Plane, b: &Plane, r: Rect) -> u64 {
    let mut s = 0u64;
    for y in r.y..r.y + r.h {
        let (ra, rb) = (&a.row(y)[r.x..r.x + r.w], &b.row(y)[r.x..r.x + r.w]);
        for (&p, &q) in ra.iter().zip(rb) {
            let d = p as i64 - q as i64;
            s += (d * d) as u64;
        }
    }
    s
}

fn copy_rect(dst: &mut Plane, src: &Plane, r: Rect) {
    let w = dst.width();
    for y in r.y..r.y + r.h {
        let start = y * w + r.x;
        dst.data_mut()[start..start + r.w].copy_from_slice(&src.row(y)[r.x..r.x + r.w]);
    }
}

fn check_same(planes: [&Plane; 3]) -> Result<()> {
    if planes[0].is_empty() {
        return Err(Error::EmptyPlane);
    }
    if !planes[0].same_dims(planes[1]) || !planes[0].same_dims(planes[2]) {
        return Err(Error::Dimension("original, reconstructed and filtered planes differ in size".into()));
    }
    Ok(())
}

fn decide(ssd_off: u64, ssd_on: u64, cost: f64) -> bool {
    (ssd_on as f64 + cost) < ssd_off as f64
}

/// Per-block flags for one plane and the stitched result.
pub fn rd_decide(
    original: &Plane,
    reconstructed: &Plane,
    filtered: &Plane,
    lambda: f64,
    block: usize,
    flag_bits: u32,
) -> Result<(Vec<RdDecision>, Plane)> {
    let params = RdParams {
        lambda,
        block,
        flag_bits,
        joint: false,
    };
    params.validate()?;
    decide_plane(original, reconstructed, filtered, &params, block, FlagScope::Luma)
}

fn decide_plane(
    original: &Plane,
    reconstructed: &Plane,
    filtered: &Plane,
    params: &RdParams,
    block: usize,
    scope: FlagScope,
) -> Result<(Vec<RdDecision>, Plane)> {
    check_same([original, reconstructed, filtered])?;
    let mut merged = reconstructed.clone();
    let mut flags = Vec::new();
    for r in blocks(original.width(), original.height(), block) {
        let ssd_off = ssd_rect(original, reconstructed, r);
        let ssd_on = ssd_rect(original, filtered, r);
        let chosen = decide(ssd_off, ssd_on, params.flag_cost());
        if chosen {
            copy_rect(&mut merged, filtered, r);
        }
        flags.push(RdDecision {
            scope,
            y: r.y,
            x: r.x,
            height: r.h,
            width: r.w,
            ssd_off,
            ssd_on,
            chosen,
        });
    }
    Ok((flags, merged))
}

/// Decisions over a whole frame, joint or per component as configured.
pub fn rd_decide_frame(
    original: &Frame,
    reconstructed: &Frame,
    filtered: &Frame,
    params: &RdParams,
) -> Result<(Vec<RdDecision>, Frame)> {
    params.validate()?;
    let formats = [original.chroma_format, reconstructed.chroma_format, filtered.chroma_format];
    if formats.iter().any(|&f| f != formats[0]) {
        return Err(Error::Dimension("frames disagree on chroma format".into()));
    }
    if formats[0] == ChromaFormat::GrayOnly {
        let (flags, y) = decide_plane(&original.y, &reconstructed.y, &filtered.y, params, params.block, FlagScope::Luma)?;
        return Ok((flags, Frame::gray(y)));
    }
    let comps = |f: &Frame| [f.y.clone(), f.u.clone(), f.v.clone()];
    let (o, r, f) = (comps(original), comps(reconstructed), comps(filtered));
    for c in 0..3 {
        check_same([&o[c], &r[c], &f[c]])?;
    }
    if !params.joint {
        let mut flags = Vec::new();
        let mut out = Vec::new();
        for (c, scope) in [FlagScope::Luma, FlagScope::U, FlagScope::V].into_iter().enumerate() {
            let b = if c == 0 { params.block } else { params.block / 2 };
            let (fl, p) = decide_plane(&o[c], &r[c], &f[c], params, b, scope)?;
            flags.extend(fl);
            out.push(p);
        }
        let v = out.pop().unwrap_or_default();
        let u = out.pop().unwrap_or_default();
        let y = out.pop().unwrap_or_default();
        return Ok((flags, Frame::yuv420(y, u, v)?));
    }
    let mut merged = r.clone();
    let half = params.block / 2;
    let luma_blocks: Vec<Rect> = blocks(o[0].width(), o[0].height(), params.block).collect();
    let chroma_blocks: Vec<Rect> = blocks(o[1].width(), o[1].height(), half).collect();
    // ceil(ceil(w/2) / (b/2)) == ceil(w/b) for even b, so the grids align
    debug_assert_eq!(luma_blocks.len(), chroma_blocks.len());
    let mut flags = Vec::with_capacity(luma_blocks.len());
    for (lr, cr) in luma_blocks.into_iter().zip(chroma_blocks) {
        let rects = [lr, cr, cr];
        let (mut off, mut on) = (0, 0);
        for c in 0..3 {
            off += ssd_rect(&o[c], &r[c], rects[c]);
            on += ssd_rect(&o[c], &f[c], rects[c]);
        }
        let chosen = decide(off, on, params.flag_cost());
        if chosen {
            for c in 0..3 {
                copy_rect(&mut merged[c], &f[c], rects[c]);
            }
        }
        flags.push(RdDecision {
            scope: FlagScope::Joint,
            y: lr.y,
            x: lr.x,
            height: lr.h,
            width: lr.w,
            ssd_off: off,
            ssd_on: on,
            chosen,
        });
    }
    let [y, u, v] = merged;
    Ok((flags, Frame::yuv420(y, u, v)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planes() -> (Plane, Plane, Plane) {
        let orig = Plane::from_fn(6, 5, |y, x| (y * 30 + x * 7) as u8);
        let recon = Plane::from_fn(6, 5, |y, x| orig.get(y, x).saturating_add(((y + x) % 3) as u8 * 4));
        // left half improved, right half made worse
        let filt = Plane::from_fn(6, 5, |y, x| if x < 4 { orig.get(y, x) } else { recon.get(y, x).saturating_add(9) });
        (orig, recon, filt)
    }

    #[test]
    fn lambda_zero_picks_strict_improvements() {
        let (o, r, f) = planes();
        let (flags, merged) = rd_decide(&o, &r, &f, 0.0, 4, 1).unwrap();
        assert_eq!(flags.len(), 4);
        for d in &flags {
            assert_eq!(d.chosen, d.ssd_on < d.ssd_off);
        }
        assert!(flags[0].chosen && !flags[1].chosen);
        assert!(crate::metrics::ssd(&o, &merged).unwrap() <= crate::metrics::ssd(&o, &r).unwrap());
        assert_eq!(flags[1].width, 2);
        assert_eq!(flags[2].height, 1);
    }

    #[test]
    fn unchanged_or_costly_flags_stay_off() {
        let (o, r, f) = planes();
        let (flags, merged) = rd_decide(&o, &r, &r, 0.0, 4, 1).unwrap();
        assert!(flags.iter().all(|d| !d.chosen));
        assert_eq!(merged, r);
        let bound = 255.0 * 255.0 * 16.0 * 3.0;
        let (flags, _) = rd_decide(&o, &r, &f, bound, 4, 1).unwrap();
        assert!(flags.iter().all(|d| !d.chosen));
    }

    #[test]
    fn rejects_bad_input() {
        let (o, r, _) = planes();
        assert!(rd_decide(&o, &r, &Plane::filled(2, 2, 0), 0.0, 4, 1).is_err());
        assert!(rd_decide(&o, &r, &r, -1.0, 4, 1).is_err());
        assert!(rd_decide(&o, &r, &r, 0.0, 3, 1).is_err());
    }

    #[test]
    fn joint_flag_sums_components() {
        let y = Plane::filled(4, 4, 100);
        let c = Plane::filled(2, 2, 50);
        let orig = Frame::yuv420(y.clone(), c.clone(), c.clone()).unwrap();
        let recon = Frame::yuv420(Plane::filled(4, 4, 102), c.clone(), c.clone()).unwrap();
        // luma gains 16 * 4 = 64, chroma loses 2 * 4 * 9 = 72
        let filt = Frame::yuv420(y, Plane::filled(2, 2, 53), Plane::filled(2, 2, 53)).unwrap();
        let p = RdParams {
            block: 4,
            ..RdParams::default()
        };
        let (flags, out) = rd_decide_frame(&orig, &recon, &filt, &p).unwrap();
        assert_eq!(flags.len(), 1);
        assert_eq!((flags[0].ssd_off, flags[0].ssd_on), (64, 72));
        assert!(!flags[0].chosen);
        assert_eq!(out, recon);

        let p = RdParams { joint: false, ..p };
        let (flags, out) = rd_decide_frame(&orig, &recon, &filt, &p).unwrap();
        assert_eq!(flags.len(), 3);
        assert_eq!(flags.iter().filter(|d| d.chosen).count(), 1);
        assert_eq!(out.y, filt.y);
        assert_eq!(out.u, recon.u);
    }
}

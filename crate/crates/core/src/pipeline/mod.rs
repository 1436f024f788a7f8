//! The cooperative filtering graph.
//!
//! Luma runs a chain of spatial and channel stages; each chroma plane runs its
//! own spatial chain and then receives cross-component offsets computed from
//! the unfiltered frame. Every intermediate plane is 8-bit.

mod chroma;
mod config;
mod exec;
mod stage;

use serde::Serialize;

pub use chroma::{colocated_luma, cross_component_offsets, CrossComponent, OffsetPlane};
pub use config::{
    ChainOracles, ChannelConfig, CompactionConfig, CrossConfig, LutRef, LutRefs, PatternRef, PipelineConfig,
    SpatialConfig, StageConfig,
};
pub use exec::{RunOptions, THREADS_ENV};
pub use stage::{
    channel_indexing, progressive_indexing, reference_indexing, retrieve_pattern, rotation_ensemble, run_chain,
    Branch, ChannelStage, SpatialStage, Stage, MAX_CHANNELS,
};

use crate::error::{Error, Result};
use crate::lut::Sampling;
use crate::metrics::{NoOps, OpCounter, OpReport, Tally};
use crate::plane::{chroma_dims, ChromaFormat, Frame, Plane};
use crate::rd::RdParams;

/// A validated, ready-to-run filter.
#[derive(Clone, Debug)]
pub struct Pipeline {
    sampling: Sampling,
    luma: Vec<Stage>,
    chroma: Vec<Stage>,
    cross: Option<CrossComponent>,
    rd: RdParams,
}

impl Pipeline {
    pub fn new(
        sampling: Sampling,
        luma: Vec<Stage>,
        chroma: Vec<Stage>,
        cross: Option<CrossComponent>,
        rd: RdParams,
    ) -> Result<Self> {
        stage::check_chain(&luma, "luma")?;
        stage::check_chain(&chroma, "chroma")?;
        rd.validate()?;
        Ok(Self {
            sampling,
            luma,
            chroma,
            cross,
            rd,
        })
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    pub fn luma(&self) -> &[Stage] {
        &self.luma
    }

    pub fn chroma(&self) -> &[Stage] {
        &self.chroma
    }

    pub fn cross(&self) -> Option<&CrossComponent> {
        self.cross.as_ref()
    }

    pub fn rd(&self) -> &RdParams {
        &self.rd
    }

    /// Table bytes of the luma chain.
    pub fn luma_bytes(&self) -> usize {
        self.luma.iter().map(Stage::storage_bytes).sum()
    }

    /// Table bytes of the chroma chain plus the offset tables.
    pub fn chroma_bytes(&self) -> usize {
        self.chroma.iter().map(Stage::storage_bytes).sum::<usize>()
            + self.cross.as_ref().map_or(0, CrossComponent::storage_bytes)
    }

    /// Filters a frame, counting arithmetic into `T`.
    pub fn run_with<T: Tally>(&self, frame: &Frame, opts: &RunOptions) -> Result<(Frame, T)> {
        let (mut y, mut total) = run_chain::<T>(&self.luma, vec![frame.y.clone()], opts)?;
        let y = y.pop().ok_or_else(|| Error::Config("luma chain produced no plane".into()))?;
        if frame.chroma_format == ChromaFormat::GrayOnly {
            return Ok((Frame::gray(y), total));
        }
        let mut chain = |p: &Plane| -> Result<Plane> {
            let (mut out, ops) = run_chain::<T>(&self.chroma, vec![p.clone()], opts)?;
            total.absorb(ops);
            out.pop().ok_or_else(|| Error::Config("chroma chain produced no plane".into()))
        };
        let mut u = chain(&frame.u)?;
        let mut v = chain(&frame.v)?;
        if let Some(cross) = &self.cross {
            let (ou, ov, mut ops) = chroma::offsets_with::<T>(frame, cross, opts)?;
            u = ou.add_to(&u, &mut ops)?;
            v = ov.add_to(&v, &mut ops)?;
            total.absorb(ops);
        }
        Ok((Frame::yuv420(y, u, v)?, total))
    }
}

/// Filters a frame.
pub fn run_pipeline(pipeline: &Pipeline, frame: &Frame) -> Result<Frame> {
    Ok(pipeline.run_with::<NoOps>(frame, &RunOptions::default())?.0)
}

/// Filters a frame and counts the arithmetic it took.
pub fn run_pipeline_counted(pipeline: &Pipeline, frame: &Frame, opts: &RunOptions) -> Result<(Frame, OpCounter)> {
    pipeline.run_with::<OpCounter>(frame, opts)
}

/// Deterministic textured 4:2:0 frame used to drive op counting, since the
/// compacted-table path taken depends on pixel values.
pub fn probe_frame(width: usize, height: usize) -> Result<Frame> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyPlane);
    }
    let texture = |seed: u32, w: usize, h: usize| {
        Plane::from_fn(w, h, |y, x| {
            // smooth ramp plus hashed noise
            let mut z = (x as u32).wrapping_mul(0x9E37_79B9) ^ (y as u32).wrapping_mul(0x85EB_CA6B) ^ seed;
            z ^= z >> 15;
            z = z.wrapping_mul(0x2C1B_3C6D);
            z ^= z >> 12;
            let ramp = (x * 160 / w.max(1) + y * 64 / h.max(1)) as i32;
            (ramp + (z % 33) as i32 - 16).clamp(0, 255) as u8
        })
    };
    let (cw, ch) = chroma_dims(width, height);
    Frame::yuv420(
        texture(1, width, height),
        texture(2, cw, ch),
        texture(3, cw, ch),
    )
}

/// Ops, energy and storage of a pipeline at a frame size.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct StatsReport {
    pub width: usize,
    pub height: usize,
    pub q: u8,
    pub luma_stages: usize,
    pub chroma_stages: usize,
    pub cross_component: bool,
    #[serde(flatten)]
    pub ops: OpReport,
    pub luma_lut_bytes: usize,
    pub chroma_lut_bytes: usize,
    pub total_lut_bytes: usize,
}

impl std::fmt::Display for StatsReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "frame           {}x{} (4:2:0, q={})", self.width, self.height, self.q)?;
        writeln!(
            f,
            "stages          luma {}, chroma {}{}",
            self.luma_stages,
            self.chroma_stages,
            if self.cross_component { " + cross-component" } else { "" }
        )?;
        writeln!(f, "{}", self.ops)?;
        writeln!(f, "luma LUT bytes  {}", self.luma_lut_bytes)?;
        writeln!(f, "chroma LUT bytes {}", self.chroma_lut_bytes)?;
        write!(f, "total LUT bytes {}", self.total_lut_bytes)
    }
}

/// Counts a run over [`probe_frame`]; per-pixel figures are per luma pixel.
pub fn pipeline_stats(pipeline: &Pipeline, width: usize, height: usize, opts: &RunOptions) -> Result<StatsReport> {
    let frame = probe_frame(width, height)?;
    let (_, ops) = run_pipeline_counted(pipeline, &frame, opts)?;
    Ok(StatsReport {
        width,
        height,
        q: pipeline.sampling.q(),
        luma_stages: pipeline.luma.len(),
        chroma_stages: pipeline.chroma.len(),
        cross_component: pipeline.cross.is_some(),
        ops: OpReport::new(&ops, (width * height) as u64)?,
        luma_lut_bytes: pipeline.luma_bytes(),
        chroma_lut_bytes: pipeline.chroma_bytes(),
        total_lut_bytes: pipeline.luma_bytes() + pipeline.chroma_bytes(),
    })
}

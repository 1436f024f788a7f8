//! Spatial and channel stages and the per-pixel operations behind them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lut::{Signedness, MAX_DIMS};
use crate::metrics::{NoOps, OpSink, Tally, Width};
use crate::pattern::{Pattern, StageWeights};
use crate::plane::{clip_u8, Plane};
use crate::table::Table;

use super::exec::{map_rows, RunOptions};

/// Most channels a stage can carry between planes.
pub const MAX_CHANNELS: usize = MAX_DIMS;

/// One pattern and the table cached for it.
#[derive(Clone, Debug)]
pub struct Branch {
    pattern: Pattern,
    table: Arc<Table>,
    rotations: [[(isize, isize); MAX_DIMS]; 4],
}

impl Branch {
    pub fn new(pattern: Pattern, table: Arc<Table>) -> Result<Self> {
        if table.dims() != pattern.len() {
            return Err(Error::Dimension(format!(
                "pattern {} has {} taps but its table is {}-D",
                pattern.id(),
                pattern.len(),
                table.dims()
            )));
        }
        let mut rotations = [[(0, 0); MAX_DIMS]; 4];
        for (r, rot) in rotations.iter_mut().enumerate() {
            for (slot, o) in rot.iter_mut().zip(pattern.rotated(r as u8)) {
                *slot = o;
            }
        }
        Ok(Self {
            pattern,
            table,
            rotations,
        })
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn table(&self) -> &Arc<Table> {
        &self.table
    }

    #[inline]
    fn evaluate<O: OpSink>(
        &self,
        plane: &Plane,
        y: usize,
        x: usize,
        ensemble: bool,
        first: usize,
        out: &mut [i32],
        ops: &mut O,
    ) {
        let n = self.pattern.len();
        let rotations = if ensemble { 4 } else { 1 };
        evaluate(
            &self.table,
            |r| &self.rotations[r][..n],
            rotations,
            plane,
            (y, x),
            first,
            out,
            ops,
        );
    }
}

/// Table output at `pos`, averaged over the first `rotations` offset sets
/// (1 or 4) with round-half-up.
#[allow(clippy::too_many_arguments)]
#[inline]
fn evaluate<'a, O: OpSink>(
    table: &Table,
    offsets: impl Fn(usize) -> &'a [(isize, isize)],
    rotations: usize,
    plane: &Plane,
    pos: (usize, usize),
    first: usize,
    out: &mut [i32],
    ops: &mut O,
) {
    let c = out.len();
    let mut px = [0u8; MAX_DIMS];
    let mut gather = |r: usize, out: &mut [i32], ops: &mut O| {
        let offs = offsets(r);
        for (p, &(dy, dx)) in px.iter_mut().zip(offs) {
            *p = plane.fetch_clamped(pos.0 as isize + dy, pos.1 as isize + dx);
        }
        table.retrieve_from(&px[..offs.len()], first, out, ops);
    };
    if rotations == 1 {
        gather(0, out, ops);
        return;
    }
    let mut acc = [0i32; MAX_CHANNELS];
    let mut tmp = [0i32; MAX_CHANNELS];
    for r in 0..4 {
        gather(r, &mut tmp[..c], ops);
        for k in 0..c {
            acc[k] += tmp[k];
        }
    }
    for k in 0..c {
        out[k] = (acc[k] + 2) >> 2;
    }
    ops.add(Width::Int32, 4 * c as u64);
}

fn check_pixel_table(table: &Table, what: &str) -> Result<()> {
    if table.signedness() != Signedness::UnsignedPixel {
        return Err(Error::Dimension(format!("{what} table must cache unsigned pixels")));
    }
    Ok(())
}

/// Several patterns combined by Q8 weights, optionally rotation-ensembled.
///
/// Channel layouts `(v_in, v_out)`:
/// * `(1, 1)` and `(1, 2)`: the single input plane indexes tables caching
///   `v_out` values.
/// * `(2, 2)`: channel `c` indexes the shared table with plane `c` and keeps
///   cached value `c`.
/// * `(2, 1)`: each plane is filtered on its own, then the two results are
///   averaged, `(a + b + 1) >> 1`.
#[derive(Clone, Debug)]
pub struct SpatialStage {
    branches: Vec<Branch>,
    weights: StageWeights,
    v_in: usize,
    v_out: usize,
    rotation_ensemble: bool,
}

impl SpatialStage {
    pub fn new(
        branches: Vec<Branch>,
        weights: StageWeights,
        v_in: usize,
        v_out: usize,
        rotation_ensemble: bool,
    ) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::Config("spatial stage without patterns".into()));
        }
        if !matches!((v_in, v_out), (1, 1) | (1, 2) | (2, 2) | (2, 1)) {
            return Err(Error::Config(format!(
                "unsupported spatial channel layout {v_in} -> {v_out}"
            )));
        }
        if weights.len() != branches.len() {
            return Err(Error::Config(format!(
                "{} weights for {} patterns",
                weights.len(),
                branches.len()
            )));
        }
        for b in &branches {
            check_pixel_table(&b.table, "spatial")?;
            if b.table.channels() != v_out {
                return Err(Error::Dimension(format!(
                    "pattern {} table caches {} values, stage emits {v_out}",
                    b.pattern.id(),
                    b.table.channels()
                )));
            }
        }
        Ok(Self {
            branches,
            weights,
            v_in,
            v_out,
            rotation_ensemble,
        })
    }

    /// Uniform weights and rotation ensemble on.
    pub fn uniform(branches: Vec<Branch>, v_in: usize, v_out: usize) -> Result<Self> {
        let w = StageWeights::uniform(branches.len())?;
        Self::new(branches, w, v_in, v_out, true)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn weights(&self) -> &StageWeights {
        &self.weights
    }

    pub fn v_in(&self) -> usize {
        self.v_in
    }

    pub fn v_out(&self) -> usize {
        self.v_out
    }

    pub fn rotation_ensemble(&self) -> bool {
        self.rotation_ensemble
    }

    /// Largest tap distance from the target along either axis.
    pub fn reach(&self) -> usize {
        self.branches
            .iter()
            .flat_map(|b| b.pattern.offsets())
            .map(|&(dy, dx)| dy.unsigned_abs().max(dx.unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn storage_bytes(&self) -> usize {
        self.branches.iter().map(|b| b.table.payload_bytes()).sum()
    }

    /// Weighted combination of every branch for `c` channels, clipped to 8 bits.
    #[inline]
    fn combine<O: OpSink>(
        &self,
        plane: &Plane,
        y: usize,
        x: usize,
        first: usize,
        out: &mut [u8],
        ops: &mut O,
    ) {
        let c = out.len();
        let mut v = [0i32; MAX_CHANNELS];
        if self.branches.len() == 1 {
            self.branches[0].evaluate(plane, y, x, self.rotation_ensemble, first, &mut v[..c], ops);
            for k in 0..c {
                out[k] = clip_u8(v[k]);
            }
            return;
        }
        let mut acc = [0i32; MAX_CHANNELS];
        for (b, &w) in self.branches.iter().zip(self.weights.as_slice()) {
            b.evaluate(plane, y, x, self.rotation_ensemble, first, &mut v[..c], ops);
            for k in 0..c {
                acc[k] += w as i32 * v[k];
            }
        }
        for k in 0..c {
            out[k] = clip_u8((acc[k] + 128) >> 8);
        }
        let r = (self.branches.len() * c) as u64;
        ops.mul(Width::Int32, r);
        ops.add(Width::Int32, r);
    }

    /// Filters one pixel; `out` receives `v_out` values.
    #[inline]
    pub fn apply_pixel<O: OpSink>(&self, planes: &[&Plane], y: usize, x: usize, out: &mut [u8], ops: &mut O) {
        match (self.v_in, self.v_out) {
            (1, v) => self.combine(planes[0], y, x, 0, &mut out[..v], ops),
            (2, 2) => {
                self.combine(planes[0], y, x, 0, &mut out[..1], ops);
                self.combine(planes[1], y, x, 1, &mut out[1..2], ops);
            }
            _ => {
                let mut b = [0u8];
                self.combine(planes[0], y, x, 0, &mut out[..1], ops);
                self.combine(planes[1], y, x, 0, &mut b, ops);
                out[0] = ((out[0] as u16 + b[0] as u16 + 1) >> 1) as u8;
                ops.add(Width::Int16, 2);
            }
        }
    }
}

/// A table indexed by co-located values of `K` planes.
#[derive(Clone, Debug)]
pub struct ChannelStage {
    table: Arc<Table>,
}

impl ChannelStage {
    pub fn new(table: Arc<Table>) -> Result<Self> {
        let k = table.dims();
        if !(2..=4).contains(&k) {
            return Err(Error::Dimension(format!("channel width K={k} not in 2..=4")));
        }
        let v = table.channels();
        if v != k && v != 1 {
            return Err(Error::Dimension(format!(
                "channel table caches {v} values, expected {k} or 1"
            )));
        }
        check_pixel_table(&table, "channel")?;
        Ok(Self { table })
    }

    pub fn k(&self) -> usize {
        self.table.dims()
    }

    pub fn v_out(&self) -> usize {
        self.table.channels()
    }

    pub fn table(&self) -> &Arc<Table> {
        &self.table
    }

    #[inline]
    pub fn apply_pixel<O: OpSink>(&self, planes: &[&Plane], y: usize, x: usize, out: &mut [u8], ops: &mut O) {
        let k = self.k();
        let v = self.v_out();
        let mut px = [0u8; MAX_DIMS];
        for (p, plane) in px.iter_mut().zip(planes) {
            *p = plane.get(y, x);
        }
        let mut r = [0i32; MAX_CHANNELS];
        self.table.retrieve_with(&px[..k], &mut r[..v], ops);
        for c in 0..v {
            out[c] = clip_u8(r[c]);
        }
    }
}

/// A step of a per-component chain.
#[derive(Clone, Debug)]
pub enum Stage {
    Spatial(SpatialStage),
    Channel(ChannelStage),
}

impl Stage {
    pub fn v_in(&self) -> usize {
        match self {
            Stage::Spatial(s) => s.v_in(),
            Stage::Channel(c) => c.k(),
        }
    }

    pub fn v_out(&self) -> usize {
        match self {
            Stage::Spatial(s) => s.v_out(),
            Stage::Channel(c) => c.v_out(),
        }
    }

    pub fn storage_bytes(&self) -> usize {
        match self {
            Stage::Spatial(s) => s.storage_bytes(),
            Stage::Channel(c) => c.table().payload_bytes(),
        }
    }

    /// Runs the stage over whole planes.
    pub fn apply<T: Tally>(&self, planes: &[Plane], opts: &RunOptions) -> Result<(Vec<Plane>, T)> {
        if planes.len() != self.v_in() {
            return Err(Error::Dimension(format!(
                "stage expects {} input planes, got {}",
                self.v_in(),
                planes.len()
            )));
        }
        let first = &planes[0];
        if first.is_empty() {
            return Err(Error::EmptyPlane);
        }
        if planes.iter().any(|p| !p.same_dims(first)) {
            return Err(Error::Dimension("stage inputs differ in size".into()));
        }
        let (w, h) = (first.width(), first.height());
        let v = self.v_out();
        let refs: Vec<&Plane> = planes.iter().collect();
        let (data, ops) = map_rows::<u8, T, _>(opts, h, w * v, |y, row, ops| {
            for x in 0..w {
                let out = &mut row[x * v..(x + 1) * v];
                match self {
                    Stage::Spatial(s) => s.apply_pixel(&refs, y, x, out, ops),
                    Stage::Channel(c) => c.apply_pixel(&refs, y, x, out, ops),
                }
            }
        });
        let outs = (0..v)
            .map(|c| Plane::from_fn(w, h, |y, x| data[(y * w + x) * v + c]))
            .collect();
        Ok((outs, ops))
    }
}

/// Runs stages in order, checking that channel counts chain.
pub fn run_chain<T: Tally>(stages: &[Stage], input: Vec<Plane>, opts: &RunOptions) -> Result<(Vec<Plane>, T)> {
    let mut planes = input;
    let mut total = T::default();
    for s in stages {
        let (next, ops) = s.apply::<T>(&planes, opts)?;
        total.absorb(ops);
        planes = next;
    }
    Ok((planes, total))
}

/// Checks that a chain maps one plane to one plane.
pub(crate) fn check_chain(stages: &[Stage], what: &str) -> Result<()> {
    let mut v = 1;
    for (i, s) in stages.iter().enumerate() {
        if s.v_in() != v {
            return Err(Error::Config(format!(
                "{what} stage {i} expects {} channels but receives {v}",
                s.v_in()
            )));
        }
        v = s.v_out();
    }
    if v != 1 {
        return Err(Error::Config(format!("{what} chain ends with {v} channels, expected 1")));
    }
    Ok(())
}

fn check_query(plane: &Plane, table: &Table, pattern: &Pattern, pos: (usize, usize)) -> Result<()> {
    if plane.is_empty() {
        return Err(Error::EmptyPlane);
    }
    if table.dims() != pattern.len() {
        return Err(Error::Dimension(format!(
            "{}-tap pattern on a {}-D table",
            pattern.len(),
            table.dims()
        )));
    }
    if pos.0 >= plane.height() || pos.1 >= plane.width() {
        return Err(Error::Dimension(format!("position {pos:?} outside the plane")));
    }
    Ok(())
}

/// Table output for the pattern anchored at `pos`, unrotated.
pub fn retrieve_pattern(plane: &Plane, table: &Table, pattern: &Pattern, pos: (usize, usize)) -> Result<Vec<i32>> {
    check_query(plane, table, pattern, pos)?;
    let offs = pattern.rotated(0);
    let mut out = vec![0; table.channels()];
    evaluate(table, |_| &offs[..], 1, plane, pos, 0, &mut out, &mut NoOps);
    Ok(out)
}

/// Four-rotation average of [`retrieve_pattern`], rounded half up.
pub fn rotation_ensemble(plane: &Plane, table: &Table, pattern: &Pattern, pos: (usize, usize)) -> Result<Vec<i32>> {
    check_query(plane, table, pattern, pos)?;
    let offs: Vec<Vec<(isize, isize)>> = (0..4).map(|r| pattern.rotated(r)).collect();
    let mut out = vec![0; table.channels()];
    evaluate(table, |r| &offs[r][..], 4, plane, pos, 0, &mut out, &mut NoOps);
    Ok(out)
}

/// Every pattern of one stage combined by its weights.
pub fn reference_indexing(stage: &SpatialStage, planes: &[Plane]) -> Result<Vec<Plane>> {
    Ok(Stage::Spatial(stage.clone())
        .apply::<NoOps>(planes, &RunOptions::default())?
        .0)
}

/// Cascaded spatial stages, each re-indexing the previous 8-bit output.
pub fn progressive_indexing(stages: &[SpatialStage], plane: &Plane) -> Result<Vec<Plane>> {
    let chain: Vec<Stage> = stages.iter().cloned().map(Stage::Spatial).collect();
    let mut v = 1;
    for (i, s) in stages.iter().enumerate() {
        if s.v_in() != v {
            return Err(Error::Config(format!(
                "stage {i} expects {} channels but receives {v}",
                s.v_in()
            )));
        }
        v = s.v_out();
    }
    Ok(run_chain::<NoOps>(&chain, vec![plane.clone()], &RunOptions::default())?.0)
}

/// Per-pixel mapping across `K` co-located planes.
pub fn channel_indexing(stage: &ChannelStage, planes: &[Plane]) -> Result<Vec<Plane>> {
    Ok(Stage::Channel(stage.clone())
        .apply::<NoOps>(planes, &RunOptions::default())?
        .0)
}

//! JSON pipeline configuration and its resolution into tables.
//!
//! ```json
//! {
//!   "q": 4,
//!   "luma": [
//!     { "type": "spatial", "patterns": [1, 2, 3], "luts": { "oracle": "box" },
//!       "v_in": 1, "v_out": 1, "weights_q8": [85, 85, 86],
//!       "compaction": { "dw": 2, "Q": 1, "p": 4 } },
//!     { "type": "channel", "k": 2, "lut": { "file": "mix.lutf" } }
//!   ],
//!   "chroma": [],
//!   "cross_component": { "u": { "oracle": "offset:0,0,0" }, "v": { "oracle": "offset:0,0,0" } },
//!   "rd": { "lambda": 0, "block": 128, "flag_bits": 1, "joint": true }
//! }
//! ```
//!
//! `luts` is one reference shared by every pattern or a list with one per
//! pattern. File paths are relative to the config file. Patterns are builtin
//! ids or `{ "id": n, "offsets": [[dy, dx], ...] }`. `weights` holds logits
//! turned into Q8 by softmax; `weights_q8` is taken verbatim. Unknown keys are
//! rejected.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::compact::CompactedLut;
use crate::container::{LutFile, LutKind};
use crate::error::{Error, Result};
use crate::lut::Sampling;
use crate::lutgen::{cache_clipped, Oracle};
use crate::pattern::{Pattern, StageWeights, DEFAULT_HALF_WINDOW};
use crate::rd::RdParams;
use crate::table::Table;

use super::chroma::CrossComponent;
use super::stage::{Branch, ChannelStage, SpatialStage, Stage};
use super::Pipeline;

fn default_q() -> u8 {
    4
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

fn is_one(v: &usize) -> bool {
    *v == 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_q")]
    pub q: u8,
    #[serde(default)]
    pub luma: Vec<StageConfig>,
    #[serde(default)]
    pub chroma: Vec<StageConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_component: Option<CrossConfig>,
    #[serde(default)]
    pub rd: RdParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StageConfig {
    Spatial(SpatialConfig),
    Channel(ChannelConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialConfig {
    pub patterns: Vec<PatternRef>,
    pub luts: LutRefs,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub v_in: usize,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub v_out: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights_q8: Option<Vec<u16>>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub rotation_ensemble: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compaction: Option<CompactionConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub k: usize,
    pub lut: LutRef,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossConfig {
    pub u: LutRef,
    pub v: LutRef,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompactionConfig {
    pub dw: u32,
    #[serde(rename = "Q")]
    pub shift: u8,
    pub p: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PatternRef {
    Builtin(u8),
    Custom {
        id: u8,
        offsets: Vec<(i8, i8)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_window: Option<i8>,
    },
}

impl PatternRef {
    pub fn resolve(&self) -> Result<Pattern> {
        match self {
            PatternRef::Builtin(id) => Pattern::builtin(*id),
            PatternRef::Custom {
                id,
                offsets,
                half_window,
            } => Pattern::new(*id, offsets.clone(), half_window.unwrap_or(DEFAULT_HALF_WINDOW)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum LutRef {
    File(PathBuf),
    Oracle(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LutRefs {
    Shared(LutRef),
    PerPattern(Vec<LutRef>),
}

/// Oracle specs for the default chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainOracles {
    /// 4 taps, 2 outputs: the first luma stage.
    pub split: String,
    /// 4 taps, 2 outputs: the 2-channel luma stages.
    pub pair: String,
    /// 2 inputs, 2 outputs: the channel interaction.
    pub channel: String,
    /// 4 taps, 1 output: the final luma stage.
    pub merge: String,
    /// 4 taps, 1 output: every chroma stage.
    pub chroma: String,
    /// 3 inputs, signed: the cross-component offsets, if any.
    pub cross: Option<String>,
}

impl ChainOracles {
    pub fn identity() -> Self {
        Self {
            split: "identity|identity".into(),
            pair: "identity|identity".into(),
            channel: "select:0,1".into(),
            merge: "identity".into(),
            chroma: "identity".into(),
            cross: Some("offset:0,0,0".into()),
        }
    }

    /// Target-weighted averaging throughout, zero chroma offsets.
    pub fn smoothing() -> Self {
        let s = "weighted:112,48,48,48";
        Self {
            split: format!("{s}|box"),
            pair: format!("{s}|{s}"),
            channel: "weighted:192,64|weighted:64,192".into(),
            merge: s.into(),
            chroma: s.into(),
            cross: Some("offset:0,0,0".into()),
        }
    }
}

fn spatial(ids: &[u8], oracle: &str, v_in: usize, v_out: usize) -> StageConfig {
    StageConfig::Spatial(SpatialConfig {
        patterns: ids.iter().map(|&i| PatternRef::Builtin(i)).collect(),
        luts: LutRefs::Shared(LutRef::Oracle(oracle.into())),
        v_in,
        v_out,
        weights: None,
        weights_q8: None,
        rotation_ensemble: true,
        compaction: None,
    })
}

impl PipelineConfig {
    /// The default graph: luma 5x5 (patterns 1-8, one to two channels),
    /// 9x9 (1-3), channel interaction, 13x13 (1-3), 17x17 (1-3, back to one
    /// channel); chroma three stages of patterns 1-3 up to 13x13, plus
    /// cross-component offsets.
    pub fn default_chain(o: &ChainOracles) -> Self {
        let all: Vec<u8> = (1..=8).collect();
        let three = [1, 2, 3];
        Self {
            q: default_q(),
            luma: vec![
                spatial(&all, &o.split, 1, 2),
                spatial(&three, &o.pair, 2, 2),
                StageConfig::Channel(ChannelConfig {
                    k: 2,
                    lut: LutRef::Oracle(o.channel.clone()),
                }),
                spatial(&three, &o.pair, 2, 2),
                spatial(&three, &o.merge, 2, 1),
            ],
            chroma: (0..3).map(|_| spatial(&three, &o.chroma, 1, 1)).collect(),
            cross_component: o.cross.as_ref().map(|c| CrossConfig {
                u: LutRef::Oracle(c.clone()),
                v: LutRef::Oracle(c.clone()),
            }),
            rd: RdParams::default(),
        }
    }

    pub fn identity() -> Self {
        Self::default_chain(&ChainOracles::identity())
    }

    pub fn smoothing() -> Self {
        Self::default_chain(&ChainOracles::smoothing())
    }

    /// Compacts the luma spatial stages in order with diagonal widths `dws`.
    pub fn with_luma_compaction(mut self, dws: &[u32], shift: u8, p: usize) -> Result<Self> {
        let mut it = dws.iter();
        for s in &mut self.luma {
            if let StageConfig::Spatial(sc) = s {
                let dw = *it
                    .next()
                    .ok_or_else(|| Error::Config("fewer diagonal widths than luma spatial stages".into()))?;
                sc.compaction = Some(CompactionConfig { dw, shift, p });
            }
        }
        if it.next().is_some() {
            return Err(Error::Config("more diagonal widths than luma spatial stages".into()));
        }
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads a config; relative LUT paths resolve against its directory.
    pub fn read(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)?;
        let cfg = Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    /// Builds every referenced table and validates the graph.
    pub fn resolve(&self, base: &Path) -> Result<Pipeline> {
        let sampling = Sampling::new(self.q)?;
        let mut r = Resolver {
            base,
            sampling,
            oracles: HashMap::new(),
            files: HashMap::new(),
            compacted: HashMap::new(),
        };
        let luma = self
            .luma
            .iter()
            .enumerate()
            .map(|(i, s)| r.stage(s).map_err(|e| Error::Config(format!("luma stage {i}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let chroma = self
            .chroma
            .iter()
            .enumerate()
            .map(|(i, s)| r.stage(s).map_err(|e| Error::Config(format!("chroma stage {i}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let cross = match &self.cross_component {
            Some(c) => {
                let u = r.channel_table(&c.u, 3, 1)?;
                let v = r.channel_table(&c.v, 3, 1)?;
                Some(CrossComponent::new(u, v).map_err(|e| Error::Config(format!("cross_component: {e}")))?)
            }
            None => None,
        };
        Pipeline::new(sampling, luma, chroma, cross, self.rd.clone())
    }
}

type TableKey = (LutRef, usize, usize);

struct Resolver<'a> {
    base: &'a Path,
    sampling: Sampling,
    oracles: HashMap<TableKey, Arc<Table>>,
    files: HashMap<PathBuf, Arc<LutFile>>,
    compacted: HashMap<(TableKey, (u32, u8, usize)), Arc<Table>>,
}

impl Resolver<'_> {
    fn file(&mut self, path: &Path) -> Result<Arc<LutFile>> {
        let full = self.base.join(path);
        if let Some(f) = self.files.get(&full) {
            return Ok(f.clone());
        }
        let f = Arc::new(LutFile::read(&full)?);
        if f.table.sampling() != self.sampling {
            return Err(Error::Config(format!(
                "{} is sampled at q={}, config says q={}",
                full.display(),
                f.table.sampling().q(),
                self.sampling.q()
            )));
        }
        self.files.insert(full, f.clone());
        Ok(f)
    }

    /// A table with `n` inputs caching `v` values.
    fn table(&mut self, r: &LutRef, n: usize, v: usize, pattern: Option<&Pattern>) -> Result<Arc<Table>> {
        let t = match r {
            LutRef::Oracle(spec) => {
                let key = (r.clone(), n, v);
                if let Some(t) = self.oracles.get(&key) {
                    return Ok(t.clone());
                }
                let o = Oracle::parse(spec, n)?;
                let t = Arc::new(Table::from(cache_clipped(&o, self.sampling, v)?));
                self.oracles.insert(key, t.clone());
                t
            }
            LutRef::File(path) => {
                let f = self.file(path)?;
                match (pattern, &f.pattern, f.kind) {
                    (Some(p), Some(fp), LutKind::Clipped | LutKind::Compacted) => {
                        if fp.as_slice() != p.offsets() {
                            return Err(Error::Config(format!(
                                "{} was cached for offsets {fp:?}, stage uses {:?}",
                                path.display(),
                                p.offsets()
                            )));
                        }
                    }
                    (None, _, LutKind::Channel) => {}
                    _ => {
                        return Err(Error::Config(format!(
                            "{} is a {:?} table, not usable here",
                            path.display(),
                            f.kind
                        )))
                    }
                }
                Arc::new(f.table.clone())
            }
        };
        if t.dims() != n || t.channels() != v {
            return Err(Error::Config(format!(
                "table is {}-D caching {}, expected {n}-D caching {v}",
                t.dims(),
                t.channels()
            )));
        }
        Ok(t)
    }

    fn channel_table(&mut self, r: &LutRef, n: usize, v: usize) -> Result<Arc<Table>> {
        self.table(r, n, v, None)
    }

    fn compact(&mut self, r: &LutRef, t: Arc<Table>, c: CompactionConfig) -> Result<Arc<Table>> {
        let key = ((r.clone(), t.dims(), t.channels()), (c.dw, c.shift, c.p));
        if let Some(t) = self.compacted.get(&key) {
            return Ok(t.clone());
        }
        let out = match &*t {
            Table::Clipped(lut) => Arc::new(Table::from(CompactedLut::new(lut, c.dw, c.shift, c.p)?)),
            Table::Compacted(lut) => {
                if (lut.dw(), lut.shift(), lut.compact_dims()) != (c.dw, c.shift, c.p) {
                    return Err(Error::Config(format!(
                        "table is already compacted with dw={} Q={} p={}",
                        lut.dw(),
                        lut.shift(),
                        lut.compact_dims()
                    )));
                }
                t
            }
        };
        self.compacted.insert(key, out.clone());
        Ok(out)
    }

    fn stage(&mut self, s: &StageConfig) -> Result<Stage> {
        match s {
            StageConfig::Channel(c) => {
                let t = self.channel_table(&c.lut, c.k, c.k).or_else(|e| {
                    // a merging channel table caches one value
                    self.channel_table(&c.lut, c.k, 1).map_err(|_| e)
                })?;
                Ok(Stage::Channel(ChannelStage::new(t)?))
            }
            StageConfig::Spatial(sc) => {
                let patterns = sc.patterns.iter().map(PatternRef::resolve).collect::<Result<Vec<_>>>()?;
                let refs: Vec<&LutRef> = match &sc.luts {
                    LutRefs::Shared(r) => vec![r; patterns.len()],
                    LutRefs::PerPattern(v) => {
                        if v.len() != patterns.len() {
                            return Err(Error::Config(format!(
                                "{} LUT references for {} patterns",
                                v.len(),
                                patterns.len()
                            )));
                        }
                        v.iter().collect()
                    }
                };
                let mut branches = Vec::with_capacity(patterns.len());
                for (p, r) in patterns.into_iter().zip(refs) {
                    let mut t = self.table(r, p.len(), sc.v_out, Some(&p))?;
                    if let Some(c) = sc.compaction {
                        t = self.compact(r, t, c)?;
                    }
                    branches.push(Branch::new(p, t)?);
                }
                let weights = match (&sc.weights, &sc.weights_q8) {
                    (Some(_), Some(_)) => {
                        return Err(Error::Config("give either weights or weights_q8, not both".into()))
                    }
                    (Some(l), None) => StageWeights::from_logits(l)?,
                    (None, Some(q)) => StageWeights::from_q8(q.clone())?,
                    (None, None) => StageWeights::uniform(branches.len())?,
                };
                Ok(Stage::Spatial(SpatialStage::new(
                    branches,
                    weights,
                    sc.v_in,
                    sc.v_out,
                    sc.rotation_ensemble,
                )?))
            }
        }
    }
}

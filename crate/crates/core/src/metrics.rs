//! Operation counting, energy estimation and quality metrics.
//!
//! Op taxonomy (one event per arithmetic operation of the integer kernels):
//!
//! * simplex retrieval over `n` dimensions: `n` int8 adds for the weights,
//!   `n-1` int32 mul/add for the base address, `n+1` int32 adds for vertex
//!   addresses, then per cached channel `n+1` int32 mul and `n+1` int32 adds
//!   (accumulation plus rounding).
//! * trilinear retrieval: 3 int8 adds for the complementary weights, 16 int16
//!   muls for the 8 corner weights, 2 int32 mul/add for the base address, 8
//!   int32 adds for corner addresses, then per channel 8 int32 mul and 8 int32
//!   adds.
//! * rotation ensemble: 4 int32 adds per channel (3 sums plus rounding).
//! * pattern aggregation: `R` int32 mul and `R` int32 adds per channel.
//! * separable routing: `p-1` int8 adds per kernel vertex for the diagonal
//!   test. On the diagonal path each vertex then pays, for `p = 2`, 2 int8
//!   adds, 1 int16 mul and 2 int16 adds for the band address; for `p > 2`,
//!   `2(p-1)` int8 adds for the relative offsets plus `p-1` int16 mul and
//!   `p-1` int16 adds for packing them.
//! * channel merge: 2 int16 adds; chroma co-location: 4 int16 adds; offset
//!   integration: 1 int16 add.
//!
//! Comparisons, shifts, masks, clamps and the last-bin offset lookup are not
//! counted.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::plane::Plane;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Width {
    Int8,
    Int16,
    Int32,
    Float32,
}

impl Width {
    pub const ALL: [Width; 4] = [Width::Int8, Width::Int16, Width::Int32, Width::Float32];

    fn idx(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Width::Int8 => "int8",
            Width::Int16 => "int16",
            Width::Int32 => "int32",
            Width::Float32 => "float32",
        }
    }
}

/// Sink for arithmetic events. [`NoOps`] compiles to nothing.
pub trait OpSink {
    fn add(&mut self, width: Width, n: u64);
    fn mul(&mut self, width: Width, n: u64);
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoOps;

impl OpSink for NoOps {
    #[inline(always)]
    fn add(&mut self, _: Width, _: u64) {}
    #[inline(always)]
    fn mul(&mut self, _: Width, _: u64) {}
}

/// A sink that can be split across workers and summed back.
pub trait Tally: OpSink + Default + Send {
    fn absorb(&mut self, other: Self);
}

impl Tally for NoOps {
    #[inline(always)]
    fn absorb(&mut self, _: Self) {}
}

impl Tally for OpCounter {
    fn absorb(&mut self, other: Self) {
        self.merge(&other);
    }
}

/// Counts of add and multiply events per operand width.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounter {
    adds: [u64; 4],
    muls: [u64; 4],
}

impl OpSink for OpCounter {
    #[inline(always)]
    fn add(&mut self, width: Width, n: u64) {
        self.adds[width.idx()] += n;
    }
    #[inline(always)]
    fn mul(&mut self, width: Width, n: u64) {
        self.muls[width.idx()] += n;
    }
}

impl OpCounter {
    pub fn adds(&self, width: Width) -> u64 {
        self.adds[width.idx()]
    }

    pub fn muls(&self, width: Width) -> u64 {
        self.muls[width.idx()]
    }

    pub fn total_adds(&self) -> u64 {
        self.adds.iter().sum()
    }

    pub fn total_muls(&self) -> u64 {
        self.muls.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.total_adds() + self.total_muls()
    }

    pub fn is_zero(&self) -> bool {
        self.total() == 0
    }

    pub fn merge(&mut self, other: &OpCounter) {
        for i in 0..4 {
            self.adds[i] += other.adds[i];
            self.muls[i] += other.muls[i];
        }
    }

    pub fn scaled(&self, k: u64) -> OpCounter {
        let mut out = *self;
        for i in 0..4 {
            out.adds[i] *= k;
            out.muls[i] *= k;
        }
        out
    }
}

impl std::ops::Add for OpCounter {
    type Output = OpCounter;
    fn add(mut self, rhs: OpCounter) -> OpCounter {
        self.merge(&rhs);
        self
    }
}

/// Per-operation energy in picojoules.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyModel {
    pub add_pj: [f64; 4],
    pub mul_pj: [f64; 4],
}

impl EnergyModel {
    pub const DEFAULT: EnergyModel = EnergyModel {
        add_pj: [0.03, 0.05, 0.1, 0.9],
        mul_pj: [0.2, 0.65, 3.1, 3.7],
    };

    pub fn add(&self, w: Width) -> f64 {
        self.add_pj[w.idx()]
    }

    pub fn mul(&self, w: Width) -> f64 {
        self.mul_pj[w.idx()]
    }

    pub fn energy_pj(&self, counter: &OpCounter) -> f64 {
        Width::ALL
            .iter()
            .map(|&w| counter.adds(w) as f64 * self.add(w) + counter.muls(w) as f64 * self.mul(w))
            .sum()
    }

    pub fn energy_per_pixel(&self, counter: &OpCounter, pixels: u64) -> Result<f64> {
        if pixels == 0 {
            return Err(Error::Param("pixel count must be positive".into()));
        }
        Ok(self.energy_pj(counter) / pixels as f64)
    }
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Energy per pixel under the default model.
pub fn energy_per_pixel(counter: &OpCounter, pixels: u64) -> Result<f64> {
    EnergyModel::DEFAULT.energy_per_pixel(counter, pixels)
}

/// Sum of squared differences.
pub fn ssd(a: &Plane, b: &Plane) -> Result<u64> {
    if !a.same_dims(b) {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum())
}

/// Peak signal-to-noise ratio in dB; identical planes give `f64::INFINITY`.
pub fn psnr(a: &Plane, b: &Plane) -> Result<f64> {
    let s = ssd(a, b)?;
    if a.is_empty() {
        return Err(Error::EmptyPlane);
    }
    if s == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = s as f64 / a.len() as f64;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

/// Machine-readable counter report.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct OpReport {
    pub pixels: u64,
    pub adds: std::collections::BTreeMap<String, u64>,
    pub muls: std::collections::BTreeMap<String, u64>,
    pub total_adds: u64,
    pub total_muls: u64,
    pub ops_per_pixel: f64,
    pub energy_pj_per_pixel: f64,
}

impl OpReport {
    pub fn new(counter: &OpCounter, pixels: u64) -> Result<Self> {
        let energy = energy_per_pixel(counter, pixels)?;
        let adds = Width::ALL
            .iter()
            .map(|&w| (w.name().to_string(), counter.adds(w)))
            .collect();
        let muls = Width::ALL
            .iter()
            .map(|&w| (w.name().to_string(), counter.muls(w)))
            .collect();
        Ok(Self {
            pixels,
            adds,
            muls,
            total_adds: counter.total_adds(),
            total_muls: counter.total_muls(),
            ops_per_pixel: counter.total() as f64 / pixels as f64,
            energy_pj_per_pixel: energy,
        })
    }
}

impl fmt::Display for OpReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>16} {:>16}", "width", "adds", "muls")?;
        for w in Width::ALL {
            writeln!(
                f,
                "{:<10} {:>16} {:>16}",
                w.name(),
                self.adds[w.name()],
                self.muls[w.name()]
            )?;
        }
        writeln!(f, "{:<10} {:>16} {:>16}", "total", self.total_adds, self.total_muls)?;
        writeln!(f, "pixels          {}", self.pixels)?;
        writeln!(f, "ops/pixel       {:.2}", self.ops_per_pixel)?;
        write!(f, "pJ/pixel        {:.2}", self.energy_pj_per_pixel)
    }
}

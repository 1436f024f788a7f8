//! Built-in invariant suites: grid fidelity, weight conservation and
//! compaction equivalence.

use std::fmt;
use std::str::FromStr;

use crate::compact::CompactedLut;
use crate::error::{Error, Result};
use crate::interp::{self, Plan};
use crate::lut::{ClippedLut, Sampling};
use crate::lutgen::{cache_clipped, storage_size_compacted, Oracle, StorageQuery};
use crate::metrics::NoOps;
use crate::pattern::StageWeights;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Grid,
    Weights,
    Compaction,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Suite::Grid),
            "weights" => Ok(Suite::Weights),
            "compaction" => Ok(Suite::Compaction),
            "all" => Ok(Suite::All),
            _ => Err(Error::Param(format!(
                "unknown suite {s:?}, expected grid, weights, compaction or all"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

/// Sample budget for the sampled parts of the compaction suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub samples_4d: u64,
    pub stride_3d: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            samples_4d: 200_000,
            stride_3d: 8,
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut r = VerifyReport::default();
    if matches!(suite, Suite::Grid | Suite::All) {
        grid(&mut r)?;
    }
    if matches!(suite, Suite::Weights | Suite::All) {
        weights(&mut r)?;
    }
    if matches!(suite, Suite::Compaction | Suite::All) {
        compaction(&mut r, opts)?;
    }
    Ok(r)
}

fn odometer(n: usize, l: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; n];
    loop {
        f(&idx);
        let mut d = n;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < l {
                break;
            }
            idx[d] = 0;
        }
    }
}

fn grid(r: &mut VerifyReport) -> Result<()> {
    let s = Sampling::default();
    for (spec, n) in [
        ("identity", 4),
        ("box", 4),
        ("edge:24", 4),
        ("weighted:112,48,48,48", 4),
        ("box", 3),
        ("offset:-64,64,0:3", 3),
    ] {
        let o = Oracle::parse(spec, n)?;
        let lut = cache_clipped(&o, s, 1)?;
        let mut bad = 0u64;
        let mut total = 0u64;
        let mut px = vec![0u8; n];
        odometer(n, s.nodes(), |nodes| {
            for (p, &i) in px.iter_mut().zip(nodes) {
                *p = s.node_value(i);
            }
            let ok = lut.entry(nodes)[0] as i32 == o.eval1(&px);
            let mut out = [0];
            interp::retrieve_with(&lut, &px, &mut out, &mut NoOps);
            bad += u64::from(!ok || out[0] != lut.entry(nodes)[0] as i32);
            total += 1;
        });
        r.push(
            format!("grid fidelity {spec} n={n}"),
            bad == 0,
            format!("{total} nodes, {bad} mismatches"),
        );
    }
    Ok(())
}

fn weights(r: &mut VerifyReport) -> Result<()> {
    let mut bad = 0u64;
    let mut total = 0u64;
    for code in 0..16u32.pow(4) {
        let lsb = [code >> 12, (code >> 8) & 15, (code >> 4) & 15, code & 15].map(|v| v as u8);
        // 16*msb + lsb with msb = 2 avoids the last bin
        let px = lsb.map(|l| 32 + l);
        let plan = Plan::simplex(&px, 4, &mut NoOps);
        let ok = plan.weight_sum() == 16 && plan.vertices().all(|(w, _)| w >= 0);
        let rule = interp::select_rule(lsb);
        let rw = rule.weights(lsb.map(|v| v as i32), 16);
        let same = plan.vertices().map(|(w, _)| w).eq(rw.iter().copied());
        bad += u64::from(!ok || !same || !rule.matches(lsb.map(|v| v as i32)));
        total += 1;
    }
    r.push(
        "simplex weight conservation",
        bad == 0,
        format!("{total} LSB tuples, {bad} violations"),
    );
    let mut bad = 0;
    let sets: [&[f64]; 4] = [&[0.0; 3], &[1.0, -2.0, 0.5], &[3.0; 8], &[10.0, 0.0]];
    for l in sets {
        let w = StageWeights::from_logits(l)?;
        bad += usize::from(w.as_slice().iter().map(|&v| v as u32).sum::<u32>() != 256);
    }
    r.push("stage weights sum to 256", bad == 0, format!("{} logit sets", sets.len()));
    Ok(())
}

/// Deterministic well-spread sweep of the 8-bit hypercube.
fn sweep(k: u64, dims: usize) -> [u8; 4] {
    const STEPS: [u64; 4] = [0x9E37_79B9, 0x85EB_CA6B, 0xC2B2_AE35, 0x27D4_EB2F];
    let mut out = [0u8; 4];
    for d in 0..dims {
        let mut z = k.wrapping_add(1).wrapping_mul(STEPS[d]).wrapping_add(d as u64);
        z ^= z >> 29;
        z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z ^= z >> 32;
        out[d] = z as u8;
    }
    out
}

fn equivalence(clipped: &ClippedLut, c: &CompactedLut, px: &[u8]) -> (bool, bool) {
    if !c.routes_diagonal(px) {
        return (false, true);
    }
    let mut a = [0i32; 4];
    let mut b = [0i32; 4];
    let v = clipped.channels();
    interp::retrieve_with(clipped, px, &mut a[..v], &mut NoOps);
    c.retrieve_with(px, &mut b[..v], &mut NoOps);
    (true, a == b)
}

fn compaction(r: &mut VerifyReport, opts: &VerifyOptions) -> Result<()> {
    let s = Sampling::default();
    let lut3 = cache_clipped(&Oracle::parse("edge:24", 3)?, s, 1)?;
    for (dw, p) in [(2, 3), (3, 2)] {
        let c = CompactedLut::new(&lut3, dw, 1, p)?;
        let (mut diag, mut bad) = (0u64, 0u64);
        let step = opts.stride_3d.max(1);
        for x in (0..256).step_by(step) {
            for y in (0..256).step_by(step) {
                for z in (0..256).step_by(step) {
                    let (d, ok) = equivalence(&lut3, &c, &[x as u8, y as u8, z as u8]);
                    diag += u64::from(d);
                    bad += u64::from(!ok);
                }
            }
        }
        r.push(
            format!("diagonal equivalence n=3 dw={dw} p={p}"),
            bad == 0 && diag > 0,
            format!("stride {step}, {diag} diagonal queries, {bad} mismatches"),
        );
    }
    let lut4 = cache_clipped(&Oracle::parse("weighted:112,48,48,48|box", 4)?, s, 2)?;
    for (dw, p) in [(2, 4), (3, 4), (2, 2)] {
        let c = CompactedLut::new(&lut4, dw, 1, p)?;
        let (mut diag, mut bad) = (0u64, 0u64);
        for k in 0..opts.samples_4d {
            let mut px = sweep(k, 4);
            // pull half the samples toward the diagonal so the band is exercised
            if k % 2 == 0 {
                for i in 1..4 {
                    px[i] = (px[0] as i32 + (px[i] as i32 % 48) - 24).clamp(0, 255) as u8;
                }
            }
            let (d, ok) = equivalence(&lut4, &c, &px);
            diag += u64::from(d);
            bad += u64::from(!ok);
        }
        r.push(
            format!("diagonal equivalence n=4 dw={dw} p={p}"),
            bad == 0 && diag > 0,
            format!("{} samples, {diag} diagonal, {bad} mismatches", opts.samples_4d),
        );
        let mut q = StorageQuery::new(4, 4, 2);
        q.dw = Some(dw);
        q.shift = Some(1);
        q.compact_dims = Some(p as u32);
        let (d, nd) = storage_size_compacted(&q)?;
        let ok = d as usize == c.diag_bytes() && (d + nd) as usize == c.payload_bytes();
        r.push(
            format!("compacted size formula dw={dw} p={p}"),
            ok,
            format!("{} + {} bytes", c.diag_bytes(), c.payload_bytes() - c.diag_bytes()),
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_with_small_budget() {
        let opts = VerifyOptions {
            samples_4d: 20_000,
            stride_3d: 16,
        };
        let r = run_suite(Suite::All, &opts).unwrap();
        assert!(r.passed(), "{r}");
        assert!(r.checks.len() >= 12);
        assert!("nope".parse::<Suite>().is_err());
    }
}

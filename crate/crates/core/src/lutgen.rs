//! Analytic oracle filters, caching them into clipped tables, and closed-form
//! storage accounting.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lut::{ClippedLut, Sampling, Signedness, MAX_DIMS};

/// The mapping an oracle computes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleKind {
    /// Returns the target (first) input.
    Identity,
    /// Rounded mean of all inputs.
    BoxAverage,
    /// `round(sum(c_i * x_i) / 256) + bias`, coefficients in Q8.
    WeightedAverage { coeffs: Vec<i32>, bias: i32 },
    /// Rounded mean of the inputs within `threshold` of the target.
    EdgePreserve { threshold: u8 },
    /// Signed variant of `WeightedAverage`, clipped to `-128..=127`.
    Offset { coeffs: Vec<i32>, bias: i32 },
    /// Output `j` is input `indices[j]`.
    Select(Vec<usize>),
    /// One sub-oracle per output channel.
    Stack(Vec<OracleKind>),
}

/// A deterministic n-input pixel mapping standing in for a trained network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Oracle {
    arity: usize,
    kind: OracleKind,
}

#[inline]
fn div_round(num: i32, den: i32) -> i32 {
    (num + den / 2).div_euclid(den)
}

impl OracleKind {
    fn outputs(&self) -> usize {
        match self {
            OracleKind::Select(ix) => ix.len(),
            OracleKind::Stack(parts) => parts.iter().map(|p| p.outputs()).sum(),
            _ => 1,
        }
    }

    fn signedness(&self) -> Result<Signedness> {
        match self {
            OracleKind::Offset { .. } => Ok(Signedness::SignedOffset),
            OracleKind::Stack(parts) => {
                let first = parts
                    .first()
                    .ok_or_else(|| Error::Oracle("empty stack".into()))?
                    .signedness()?;
                for p in parts {
                    if p.signedness()? != first {
                        return Err(Error::Oracle("stack mixes signed and unsigned outputs".into()));
                    }
                }
                Ok(first)
            }
            _ => Ok(Signedness::UnsignedPixel),
        }
    }

    fn check_arity(&self, arity: usize) -> Result<()> {
        match self {
            OracleKind::WeightedAverage { coeffs, .. } | OracleKind::Offset { coeffs, .. }
                if coeffs.len() != arity =>
            {
                Err(Error::Oracle(format!(
                    "{} coefficients for a {arity}-input oracle",
                    coeffs.len()
                )))
            }
            OracleKind::Select(ix) => {
                if ix.is_empty() {
                    return Err(Error::Oracle("select needs at least one index".into()));
                }
                match ix.iter().find(|&&i| i >= arity) {
                    Some(i) => Err(Error::Oracle(format!("select index {i} >= arity {arity}"))),
                    None => Ok(()),
                }
            }
            OracleKind::Stack(parts) => {
                if parts.is_empty() {
                    return Err(Error::Oracle("empty stack".into()));
                }
                parts.iter().try_for_each(|p| p.check_arity(arity))
            }
            _ => Ok(()),
        }
    }

    fn eval_into(&self, x: &[u8], out: &mut [i32]) -> usize {
        match self {
            OracleKind::Identity => {
                out[0] = x[0] as i32;
                1
            }
            OracleKind::BoxAverage => {
                let s: i32 = x.iter().map(|&v| v as i32).sum();
                out[0] = div_round(s, x.len() as i32);
                1
            }
            OracleKind::WeightedAverage { coeffs, bias } => {
                let s: i32 = coeffs.iter().zip(x).map(|(&c, &v)| c * v as i32).sum();
                out[0] = (div_round(s, 256) + bias).clamp(0, 255);
                1
            }
            OracleKind::EdgePreserve { threshold } => {
                let t = *threshold as i32;
                let c = x[0] as i32;
                let (mut s, mut n) = (0, 0);
                for &v in x {
                    if (v as i32 - c).abs() <= t {
                        s += v as i32;
                        n += 1;
                    }
                }
                out[0] = div_round(s, n);
                1
            }
            OracleKind::Offset { coeffs, bias } => {
                let s: i32 = coeffs.iter().zip(x).map(|(&c, &v)| c * v as i32).sum();
                out[0] = (div_round(s, 256) + bias).clamp(-128, 127);
                1
            }
            OracleKind::Select(ix) => {
                for (o, &i) in out.iter_mut().zip(ix) {
                    *o = x[i] as i32;
                }
                ix.len()
            }
            OracleKind::Stack(parts) => {
                let mut k = 0;
                for p in parts {
                    k += p.eval_into(x, &mut out[k..]);
                }
                k
            }
        }
    }
}

impl Oracle {
    pub fn new(arity: usize, kind: OracleKind) -> Result<Self> {
        if arity == 0 || arity > MAX_DIMS {
            return Err(Error::Oracle(format!("arity {arity} not in 1..={MAX_DIMS}")));
        }
        kind.check_arity(arity)?;
        kind.signedness()?;
        if kind.outputs() > MAX_DIMS {
            return Err(Error::Oracle(format!("{} outputs exceed {MAX_DIMS}", kind.outputs())));
        }
        Ok(Self { arity, kind })
    }

    /// Parses an oracle spec string (see [`OracleKind`] `FromStr`) for the given arity.
    pub fn parse(spec: &str, arity: usize) -> Result<Self> {
        Self::new(arity, spec.parse()?)
    }

    #[inline]
    pub fn arity(&self) -> usize {
        self.arity
    }

    #[inline]
    pub fn kind(&self) -> &OracleKind {
        &self.kind
    }

    pub fn outputs(&self) -> usize {
        self.kind.outputs()
    }

    pub fn signedness(&self) -> Signedness {
        // validated at construction
        self.kind.signedness().unwrap_or(Signedness::UnsignedPixel)
    }

    /// Evaluates the oracle; `out` receives `outputs()` values.
    pub fn evaluate(&self, inputs: &[u8], out: &mut [i32]) -> Result<()> {
        if inputs.len() != self.arity {
            return Err(Error::Dimension(format!(
                "{} inputs for a {}-input oracle",
                inputs.len(),
                self.arity
            )));
        }
        if out.len() < self.outputs() {
            return Err(Error::Dimension("output buffer too small".into()));
        }
        self.kind.eval_into(inputs, out);
        Ok(())
    }

    /// Single-output convenience.
    pub fn eval1(&self, inputs: &[u8]) -> i32 {
        let mut out = [0i32; MAX_DIMS];
        self.kind.eval_into(inputs, &mut out);
        out[0]
    }
}

/// Oracle string grammar: `identity`, `box`, `edge:T`, `weighted:c0,c1,..[:bias]`,
/// `offset:c0,c1,..[:bias]`, `select:i0,i1,..`, and `a|b` stacking outputs.
impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains('|') {
            let parts = s.split('|').map(str::parse).collect::<Result<Vec<_>>>()?;
            return Ok(OracleKind::Stack(parts));
        }
        let mut it = s.splitn(3, ':');
        let name = it.next().unwrap_or_default().trim();
        let a = it.next();
        let b = it.next();
        let bad = |m: &str| Error::Oracle(format!("{m} in oracle spec {s:?}"));
        let ints = |v: &str| -> Result<Vec<i32>> {
            v.split(',')
                .map(|t| t.trim().parse::<i32>().map_err(|_| bad("bad integer")))
                .collect()
        };
        let bias = |b: Option<&str>| -> Result<i32> {
            b.map(|t| t.trim().parse::<i32>().map_err(|_| bad("bad bias")))
                .unwrap_or(Ok(0))
        };
        match name {
            "identity" if a.is_none() => Ok(OracleKind::Identity),
            "box" if a.is_none() => Ok(OracleKind::BoxAverage),
            "edge" if b.is_none() => {
                let t = a
                    .ok_or_else(|| bad("missing threshold"))?
                    .trim()
                    .parse::<u8>()
                    .map_err(|_| bad("bad threshold"))?;
                Ok(OracleKind::EdgePreserve { threshold: t })
            }
            "weighted" => Ok(OracleKind::WeightedAverage {
                coeffs: ints(a.ok_or_else(|| bad("missing coefficients"))?)?,
                bias: bias(b)?,
            }),
            "offset" => Ok(OracleKind::Offset {
                coeffs: ints(a.ok_or_else(|| bad("missing coefficients"))?)?,
                bias: bias(b)?,
            }),
            "select" if b.is_none() => {
                let ix = ints(a.ok_or_else(|| bad("missing indices"))?)?;
                if ix.iter().any(|&i| i < 0) {
                    return Err(bad("negative index"));
                }
                Ok(OracleKind::Select(ix.into_iter().map(|i| i as usize).collect()))
            }
            _ => Err(bad("unknown oracle")),
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[i32]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        match self {
            OracleKind::Identity => write!(f, "identity"),
            OracleKind::BoxAverage => write!(f, "box"),
            OracleKind::EdgePreserve { threshold } => write!(f, "edge:{threshold}"),
            OracleKind::WeightedAverage { coeffs, bias } => {
                write!(f, "weighted:{}:{bias}", join(coeffs))
            }
            OracleKind::Offset { coeffs, bias } => write!(f, "offset:{}:{bias}", join(coeffs)),
            OracleKind::Select(ix) => {
                let v: Vec<i32> = ix.iter().map(|&i| i as i32).collect();
                write!(f, "select:{}", join(&v))
            }
            OracleKind::Stack(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

/// Caches `oracle` by evaluating it at every node tuple of the sampled grid.
pub fn cache_clipped(oracle: &Oracle, sampling: Sampling, channels: usize) -> Result<ClippedLut> {
    if channels != oracle.outputs() {
        return Err(Error::Dimension(format!(
            "oracle emits {} values, table caches {channels}",
            oracle.outputs()
        )));
    }
    let n = oracle.arity();
    let mut px = [0u8; MAX_DIMS];
    ClippedLut::from_fn(n, channels, sampling, oracle.signedness(), |nodes, out| {
        for (p, &i) in px.iter_mut().zip(nodes) {
            *p = sampling.node_value(i);
        }
        oracle.kind.eval_into(&px[..n], out);
    })
}

/// Parameters of the closed-form storage formulas. All sizes are in bytes
/// since every cached value is 8 bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StorageQuery {
    pub q: u8,
    pub n: u32,
    pub v: u64,
    /// Pattern count R.
    pub patterns: Option<u64>,
    /// Progressive steps P.
    pub steps: Option<u64>,
    /// Channel-table width K.
    pub channel_width: Option<u32>,
    pub dw: Option<u32>,
    /// Sparsification shift Q.
    pub shift: Option<u8>,
    /// Compacted dimensions p.
    pub compact_dims: Option<u32>,
}

impl StorageQuery {
    pub fn new(q: u8, n: u32, v: u64) -> Self {
        Self {
            q,
            n,
            v,
            ..Default::default()
        }
    }
}

fn nodes_for(q: u8) -> Result<u64> {
    if q > 8 {
        return Err(Error::Param(format!("q={q} exceeds 8")));
    }
    Ok((1u64 << (8 - q)) + 1)
}

fn checked_pow(base: u64, exp: u32) -> Result<u64> {
    base.checked_pow(exp)
        .ok_or_else(|| Error::Param("storage size overflows u64".into()))
}

fn mul(a: u64, b: u64) -> Result<u64> {
    a.checked_mul(b)
        .ok_or_else(|| Error::Param("storage size overflows u64".into()))
}

/// Byte size of a clipped table set: `L^n * V`, times `R` patterns and `P`
/// steps when given, or `(K * L^K + K * R * L^n) * V` with a channel table.
pub fn storage_size_clipped(query: &StorageQuery) -> Result<u64> {
    let l = nodes_for(query.q)?;
    let single = checked_pow(l, query.n)?;
    let r = query.patterns.unwrap_or(1);
    if let Some(k) = query.channel_width {
        let channel = mul(k as u64, checked_pow(l, k)?)?;
        let spatial = mul(mul(k as u64, r)?, single)?;
        return mul(channel + spatial, query.v);
    }
    let steps = query.steps.unwrap_or(1);
    mul(mul(mul(single, query.v)?, r)?, steps)
}

/// Number of node pairs in `[0, L)^2` with `|i - j| <= dw`.
pub fn diag_count(dw: u32, l: u32) -> Result<u64> {
    if dw >= l {
        return Err(Error::Param(format!("dw={dw} must be below L={l}")));
    }
    let (dw, l) = (dw as u64, l as u64);
    Ok((2 * dw + 1) * l - dw * (dw + 1))
}

/// Validates compaction parameters against a base sampling and dimensionality.
pub fn check_compaction(q: u8, n: u32, dw: u32, shift: u8, p: u32) -> Result<()> {
    let l = nodes_for(q)?;
    if shift < 1 || shift > 8 - q {
        return Err(Error::Param(format!("Q={shift} not in 1..={}", 8 - q)));
    }
    if dw as u64 >= l {
        return Err(Error::Param(format!("dw={dw} not in 0..={}", l - 1)));
    }
    if p < 2 || p > n {
        return Err(Error::Param(format!("p={p} not in 2..={n}")));
    }
    Ok(())
}

/// Diagonal rows of a compacted table: the exact pair count for `p = 2`,
/// the rectangular allocation `L * (2dw+1)^(p-1)` otherwise.
pub fn diag_rows(l: u32, dw: u32, p: u32) -> Result<u64> {
    if p == 2 {
        diag_count(dw, l)
    } else {
        mul(l as u64, checked_pow(2 * dw as u64 + 1, p - 1)?)
    }
}

/// `(diag_bytes, nondiag_bytes)` of a compacted table.
pub fn storage_size_compacted(query: &StorageQuery) -> Result<(u64, u64)> {
    let (dw, shift, p) = match (query.dw, query.shift, query.compact_dims) {
        (Some(dw), Some(s), Some(p)) => (dw, s, p),
        _ => return Err(Error::Param("dw, Q and p are required".into())),
    };
    check_compaction(query.q, query.n, dw, shift, p)?;
    let l = nodes_for(query.q)?;
    let rows = diag_rows(l as u32, dw, p)?;
    let diag = mul(mul(rows, checked_pow(l, query.n - p)?)?, query.v)?;
    let coarse = nodes_for(query.q + shift)?;
    let nondiag = mul(checked_pow(coarse, query.n)?, query.v)?;
    Ok((diag, nondiag))
}

//! Spatial indexing patterns and fixed-point pattern weights.

use crate::error::{Error, Result};

/// Default reference half-window: offsets stay inside a 5x5 window.
pub const DEFAULT_HALF_WINDOW: i8 = 2;

/// Sum of Q8 weights.
pub const WEIGHT_ONE: u32 = 256;

/// Ordered pixel offsets `(dy, dx)` indexing a spatial table. The first
/// offset is always the target pixel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pattern {
    id: u8,
    offsets: Vec<(i8, i8)>,
}

const DEFAULT_OFFSETS: [[(i8, i8); 4]; 8] = [
    [(0, 0), (0, 1), (1, 0), (1, 1)],
    [(0, 0), (0, 2), (2, 0), (2, 2)],
    [(0, 0), (1, 1), (1, 2), (2, 1)],
    [(0, 0), (1, 1), (2, 2), (0, 2)],
    [(0, 0), (1, 1), (2, 2), (2, 0)],
    [(0, 0), (2, 0), (2, 1), (2, 2)],
    [(0, 0), (0, 2), (1, 2), (2, 2)],
    [(0, 0), (1, 0), (0, 1), (2, 2)],
];

impl Pattern {
    pub fn new(id: u8, offsets: Vec<(i8, i8)>, half_window: i8) -> Result<Self> {
        if !(1..=8).contains(&id) {
            return Err(Error::Pattern(format!("pattern id {id} not in 1..=8")));
        }
        if offsets.len() < 2 || offsets.len() > crate::lut::MAX_DIMS {
            return Err(Error::Pattern(format!(
                "pattern {id} has {} offsets, expected 2..={}",
                offsets.len(),
                crate::lut::MAX_DIMS
            )));
        }
        if offsets[0] != (0, 0) {
            return Err(Error::Pattern(format!(
                "pattern {id} must start at the target pixel (0,0)"
            )));
        }
        for (i, &(dy, dx)) in offsets.iter().enumerate() {
            if dy.unsigned_abs() > half_window.unsigned_abs()
                || dx.unsigned_abs() > half_window.unsigned_abs()
            {
                return Err(Error::Pattern(format!(
                    "pattern {id} offset ({dy},{dx}) outside half-window {half_window}"
                )));
            }
            if offsets[..i].contains(&(dy, dx)) {
                return Err(Error::Pattern(format!(
                    "pattern {id} repeats offset ({dy},{dx})"
                )));
            }
        }
        Ok(Self { id, offsets })
    }

    /// One of the eight built-in 4-pixel patterns.
    pub fn builtin(id: u8) -> Result<Self> {
        if !(1..=8).contains(&id) {
            return Err(Error::Pattern(format!("no built-in pattern {id}")));
        }
        Ok(Self {
            id,
            offsets: DEFAULT_OFFSETS[id as usize - 1].to_vec(),
        })
    }

    #[inline]
    pub fn id(&self) -> u8 {
        self.id
    }

    #[inline]
    pub fn offsets(&self) -> &[(i8, i8)] {
        &self.offsets
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Offsets rotated by `quarter_turns` x 90 degrees.
    pub fn rotated(&self, quarter_turns: u8) -> Vec<(isize, isize)> {
        self.offsets
            .iter()
            .map(|&(dy, dx)| rotate_offset(dy as isize, dx as isize, quarter_turns))
            .collect()
    }
}

/// Rotates a `(dy, dx)` offset by quarter turns; four turns is the identity.
#[inline]
pub fn rotate_offset(dy: isize, dx: isize, quarter_turns: u8) -> (isize, isize) {
    match quarter_turns & 3 {
        0 => (dy, dx),
        1 => (-dx, dy),
        2 => (-dy, -dx),
        _ => (dx, -dy),
    }
}

/// Q8 per-pattern weights summing to exactly 256.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageWeights(Vec<u16>);

impl StageWeights {
    pub fn uniform(count: usize) -> Result<Self> {
        Self::from_logits(&vec![0.0; count])
    }

    /// Softmax-normalizes real-valued weights and quantizes to Q8. Every
    /// weight but the last is floored; the last absorbs the remainder.
    pub fn from_logits(logits: &[f64]) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::Param("no pattern weights".into()));
        }
        if logits.iter().any(|w| !w.is_finite()) {
            return Err(Error::Param("pattern weights must be finite".into()));
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|w| (w - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let mut q8: Vec<u16> = exps
            .iter()
            .map(|e| ((e / total) * WEIGHT_ONE as f64).floor() as u16)
            .collect();
        let head: u32 = q8[..q8.len() - 1].iter().map(|&w| w as u32).sum();
        let last = q8.len() - 1;
        q8[last] = (WEIGHT_ONE - head.min(WEIGHT_ONE)) as u16;
        Ok(Self(q8))
    }

    pub fn from_q8(weights: Vec<u16>) -> Result<Self> {
        let sum: u32 = weights.iter().map(|&w| w as u32).sum();
        if weights.is_empty() || sum != WEIGHT_ONE {
            return Err(Error::Param(format!(
                "Q8 weights must sum to {WEIGHT_ONE}, got {sum}"
            )));
        }
        Ok(Self(weights))
    }

    #[inline]
    pub fn as_slice(&self) -> &[u16] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builtins_are_valid() {
        for id in 1..=8 {
            let p = Pattern::builtin(id).unwrap();
            Pattern::new(id, p.offsets().to_vec(), DEFAULT_HALF_WINDOW).unwrap();
        }
        assert!(Pattern::builtin(9).is_err());
    }

    #[test]
    fn builtins_cover_5x5_under_rotation() {
        let mut seen = std::collections::HashSet::new();
        for id in 1..=8 {
            let p = Pattern::builtin(id).unwrap();
            for r in 0..4 {
                seen.extend(p.rotated(r));
            }
        }
        assert_eq!(seen.len(), 25);
    }

    #[test]
    fn invalid_patterns_rejected() {
        assert!(Pattern::new(1, vec![(0, 1), (0, 0)], 2).is_err());
        assert!(Pattern::new(1, vec![(0, 0), (0, 1), (0, 1)], 2).is_err());
        assert!(Pattern::new(1, vec![(0, 0), (3, 0)], 2).is_err());
        assert!(Pattern::new(1, vec![(0, 0)], 2).is_err());
        assert!(Pattern::new(0, vec![(0, 0), (1, 0)], 2).is_err());
    }

    #[test]
    fn rotation_cycles() {
        for r in 0..4 {
            let (y, x) = rotate_offset(1, 2, r);
            assert_eq!(rotate_offset(y, x, 4 - r), (1, 2));
        }
        assert_eq!(rotate_offset(0, 1, 1), (-1, 0));
    }

    #[test]
    fn uniform_weights() {
        assert_eq!(StageWeights::uniform(2).unwrap().as_slice(), &[128, 128]);
        assert_eq!(StageWeights::uniform(3).unwrap().as_slice(), &[85, 85, 86]);
        assert_eq!(StageWeights::uniform(8).unwrap().as_slice(), &[32; 8]);
        assert!(StageWeights::from_q8(vec![100, 100]).is_err());
    }

    proptest! {
        #[test]
        fn weights_always_sum_to_256(logits in prop::collection::vec(-50.0f64..50.0, 1..10)) {
            let w = StageWeights::from_logits(&logits).unwrap();
            let sum: u32 = w.as_slice().iter().map(|&v| v as u32).sum();
            prop_assert_eq!(sum, 256);
            prop_assert_eq!(w.len(), logits.len());
        }
    }
}

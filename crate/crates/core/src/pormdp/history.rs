//! Mixed-radix history codes.
//!
//! A history of length `h` is the sequence `(s_1, a_1), ..., (s_h, a_h)`. It is
//! encoded big-endian in base `S * A`, so the children of a history are
//! contiguous: `child = parent * S * A + s * A + a`. A decision node at step `h`
//! is a length `h - 1` history plus the current state, indexed
//! `code * S + s`.

use crate::error::{Error, Result};

/// Default upper bound on the number of histories enumerated at one length.
pub const DEFAULT_HISTORY_CAP: usize = 1_000_000;

/// Sizes of the observable process.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub states: usize,
    pub actions: usize,
    pub horizon: usize,
}

impl Shape {
    pub fn new(states: usize, actions: usize, horizon: usize) -> Self {
        Shape { states, actions, horizon }
    }

    /// Number of `(s, a)` digits.
    pub fn radix(&self) -> usize {
        self.states * self.actions
    }

    /// Number of histories of length `h`, without a cap check.
    pub fn count(&self, h: usize) -> usize {
        self.radix().pow(h as u32)
    }

    /// Number of histories of length `h`, or an error if it exceeds `cap`.
    pub fn checked_count(&self, h: usize, cap: usize) -> Result<usize> {
        let count = (self.radix() as u128).checked_pow(h as u32).unwrap_or(u128::MAX);
        if count > cap as u128 {
            return Err(Error::HistoryCap { length: h, count, cap });
        }
        Ok(count as usize)
    }

    /// Checks every length up to the horizon against `cap`.
    pub fn check_cap(&self, cap: usize) -> Result<()> {
        self.checked_count(self.horizon, cap).map(|_| ())
    }

    /// Number of decision nodes at step `h` (1-based).
    pub fn nodes(&self, h: usize) -> usize {
        self.count(h - 1) * self.states
    }

    pub fn digit(&self, s: usize, a: usize) -> usize {
        s * self.actions + a
    }

    /// Appends `(s, a)` to the history `code`.
    pub fn step(&self, code: usize, s: usize, a: usize) -> usize {
        code * self.radix() + self.digit(s, a)
    }

    /// Decision node for history `code` followed by state `s`.
    pub fn node(&self, code: usize, s: usize) -> usize {
        code * self.states + s
    }

    /// Last `(s, a)` pair of a non-empty history.
    pub fn last(&self, code: usize) -> (usize, usize) {
        let d = code % self.radix();
        (d / self.actions, d % self.actions)
    }

    pub fn parent(&self, code: usize) -> usize {
        code / self.radix()
    }

    pub fn encode(&self, pairs: &[(usize, usize)]) -> usize {
        pairs.iter().fold(0, |code, &(s, a)| self.step(code, s, a))
    }

    pub fn decode(&self, mut code: usize, h: usize) -> Vec<(usize, usize)> {
        let mut out = vec![(0, 0); h];
        for slot in out.iter_mut().rev() {
            *slot = self.last(code);
            code = self.parent(code);
        }
        out
    }
}

/// All history codes of length `h`, in ascending order.
pub fn enumerate_histories(shape: &Shape, h: usize, cap: usize) -> Result<std::ops::Range<usize>> {
    Ok(0..shape.checked_count(h, cap)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_roundtrip() {
        let shape = Shape::new(2, 3, 4);
        for code in 0..shape.count(3) {
            assert_eq!(shape.encode(&shape.decode(code, 3)), code);
        }
    }

    #[test]
    fn counts_and_cap() {
        let shape = Shape::new(2, 2, 10);
        assert_eq!(enumerate_histories(&shape, 3, DEFAULT_HISTORY_CAP).unwrap().len(), 64);
        assert!(matches!(
            enumerate_histories(&shape, 10, DEFAULT_HISTORY_CAP),
            Err(Error::HistoryCap { count: 1_048_576, .. })
        ));
        assert_eq!(enumerate_histories(&shape, 0, DEFAULT_HISTORY_CAP).unwrap().len(), 1);
    }

    #[test]
    fn children_are_contiguous() {
        let shape = Shape::new(3, 2, 3);
        let parent = shape.encode(&[(1, 0), (2, 1)]);
        let kids: Vec<usize> = (0..3)
            .flat_map(|s| (0..2).map(move |a| (s, a)))
            .map(|(s, a)| shape.step(parent, s, a))
            .collect();
        assert_eq!(kids, (parent * 6..parent * 6 + 6).collect::<Vec<_>>());
    }
}

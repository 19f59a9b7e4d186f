//! Staircase patterns: the `{1, e^α}`-valued vertices of the hyperrectangle
//! `[1, e^α]^d`, indexed by the binary digits of `β ∈ [0, 2^d)`.
//!
//! Bit `j` of `β` set means coordinate `j` takes the value `e^α`; the set of
//! such coordinates is `F⁺_β` and its complement is `F⁻_β`.

use alloc::vec::Vec;

use crate::error::{check_alpha, Error, Result};
use crate::math;

/// Default cap on the alphabet size for anything that enumerates `2^d` patterns.
pub const DEFAULT_MAX_DIM: usize = 20;

/// Hard limit imposed by storing `β` in a `u64`.
pub const MAX_REPRESENTABLE_DIM: usize = 63;

/// Dyadic index `β` of a staircase pattern over an alphabet of size `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternIndex {
    beta: u64,
    d: usize,
}

impl PatternIndex {
    pub fn new(d: usize, beta: u64) -> Result<Self> {
        if d == 0 || d > MAX_REPRESENTABLE_DIM || beta >= (1u64 << d) {
            return Err(Error::IndexOutOfRange { beta, d });
        }
        Ok(Self { beta, d })
    }

    /// Index whose `F⁺` is exactly `f_plus`.
    pub fn from_set(d: usize, f_plus: &[usize]) -> Result<Self> {
        if d == 0 || d > MAX_REPRESENTABLE_DIM {
            return Err(Error::IndexOutOfRange { beta: 0, d });
        }
        let mut beta = 0u64;
        for &j in f_plus {
            if j >= d {
                return Err(Error::SymbolOutOfRange { index: j, size: d });
            }
            beta |= 1u64 << j;
        }
        Ok(Self { beta, d })
    }

    pub fn beta(&self) -> u64 {
        self.beta
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Binary digit `d_j(β)`.
    #[inline]
    pub fn digit(&self, j: usize) -> bool {
        (self.beta >> j) & 1 == 1
    }

    /// Coordinates in `F⁺_β`, increasing.
    pub fn f_plus(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.d).filter(move |&j| self.digit(j))
    }

    /// Coordinates in `F⁻_β`, increasing.
    pub fn f_minus(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.d).filter(move |&j| !self.digit(j))
    }

    /// Index of the complementary pattern (`F⁺` and `F⁻` swapped).
    pub fn complement(&self) -> Self {
        let mask = (1u64 << self.d) - 1;
        Self {
            beta: !self.beta & mask,
            d: self.d,
        }
    }
}

/// A column `r_β` of the staircase pattern matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircasePattern {
    index: PatternIndex,
    alpha: f64,
    values: Vec<f64>,
}

impl StaircasePattern {
    fn build(index: PatternIndex, alpha: f64, exp_alpha: f64) -> Self {
        let values = (0..index.d)
            .map(|j| if index.digit(j) { exp_alpha } else { 1.0 })
            .collect();
        Self {
            index,
            alpha,
            values,
        }
    }

    pub fn index(&self) -> PatternIndex {
        self.index
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `r_β(x_j)`.
    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn f_plus(&self) -> Vec<usize> {
        self.index.f_plus().collect()
    }

    pub fn f_minus(&self) -> Vec<usize> {
        self.index.f_minus().collect()
    }
}

/// Build `r_β` for an alphabet of size `d`.
pub fn pattern(d: usize, beta: u64, alpha: f64) -> Result<StaircasePattern> {
    check_alpha(alpha)?;
    let index = PatternIndex::new(d, beta)?;
    Ok(StaircasePattern::build(index, alpha, math::exp(alpha)))
}

/// Build the unique pattern equal to `e^α` exactly on `f_plus`.
pub fn pattern_for_set(d: usize, f_plus: &[usize], alpha: f64) -> Result<StaircasePattern> {
    check_alpha(alpha)?;
    let index = PatternIndex::from_set(d, f_plus)?;
    Ok(StaircasePattern::build(index, alpha, math::exp(alpha)))
}

/// The `d × 2^d` staircase pattern matrix `R`.
///
/// Columns are produced on demand; nothing of size `2^d` is stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaircaseMatrix {
    d: usize,
    alpha: f64,
    exp_alpha: f64,
}

impl StaircaseMatrix {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        Self::with_cap(d, alpha, DEFAULT_MAX_DIM)
    }

    pub fn with_cap(d: usize, alpha: f64, cap: usize) -> Result<Self> {
        check_alpha(alpha)?;
        let cap = cap.min(MAX_REPRESENTABLE_DIM);
        if d == 0 {
            return Err(Error::IndexOutOfRange { beta: 0, d });
        }
        if d > cap {
            return Err(Error::DimensionCap { d, cap });
        }
        Ok(Self {
            d,
            alpha,
            exp_alpha: math::exp(alpha),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn exp_alpha(&self) -> f64 {
        self.exp_alpha
    }

    pub fn num_columns(&self) -> u64 {
        1u64 << self.d
    }

    /// Entry `R[j, β]`.
    #[inline]
    pub fn entry(&self, j: usize, beta: u64) -> f64 {
        if (beta >> j) & 1 == 1 {
            self.exp_alpha
        } else {
            1.0
        }
    }

    pub fn column(&self, beta: u64) -> Result<StaircasePattern> {
        let index = PatternIndex::new(self.d, beta)?;
        Ok(StaircasePattern::build(index, self.alpha, self.exp_alpha))
    }

    /// All columns in increasing `β`.
    pub fn columns(&self) -> impl Iterator<Item = StaircasePattern> + '_ {
        (0..self.num_columns()).map(move |beta| {
            StaircasePattern::build(PatternIndex { beta, d: self.d }, self.alpha, self.exp_alpha)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn two_symbol_matrix() {
        // Bit j of β drives coordinate j, so r_1 = (e^α, 1) and r_2 = (1, e^α).
        // Listing coordinates from the most significant bit down gives the
        // familiar [[1, 1, e, e], [1, e, 1, e]] layout.
        let alpha = 0.4;
        let e = math::exp(alpha);
        let m = StaircaseMatrix::new(2, alpha).unwrap();
        let msb_first = [[1.0, 1.0, e, e], [1.0, e, 1.0, e]];
        for (row, expected) in msb_first.iter().enumerate() {
            for (beta, &want) in expected.iter().enumerate() {
                assert_eq!(m.entry(1 - row, beta as u64), want);
            }
        }
        assert_eq!(m.column(1).unwrap().values(), &[e, 1.0]);
    }

    #[test]
    fn single_pattern_examples() {
        let alpha = 1.3;
        let e = math::exp(alpha);
        assert_eq!(pattern(3, 2, alpha).unwrap().values(), &[1.0, e, 1.0]);
        assert_eq!(pattern(4, 0, 0.7).unwrap().values(), &[1.0; 4]);
        assert_eq!(pattern(3, 7, alpha).unwrap().values(), &[e; 3]);
    }

    #[test]
    fn pattern_from_set() {
        let alpha = 0.9;
        let e = math::exp(alpha);
        let p = pattern_for_set(2, &[1], alpha).unwrap();
        assert_eq!(p.index().beta(), 2);
        assert_eq!(p.values(), &[1.0, e]);
        assert_eq!(pattern_for_set(5, &[], alpha).unwrap().index().beta(), 0);
        let p = pattern_for_set(3, &[0, 2], alpha).unwrap();
        assert_eq!(p.index().beta(), 5);
        assert_eq!(p.values(), &[e, 1.0, e]);
        assert_eq!(p.f_minus(), vec![1]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            pattern(3, 8, 0.1),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(pattern(3, 1, -0.1), Err(Error::NegativeBudget(_))));
        assert!(matches!(
            pattern_for_set(3, &[3], 0.1),
            Err(Error::SymbolOutOfRange { .. })
        ));
        assert!(matches!(
            StaircaseMatrix::new(21, 0.1),
            Err(Error::DimensionCap { d: 21, cap: 20 })
        ));
        assert!(StaircaseMatrix::with_cap(21, 0.1, 24).is_ok());
    }

    #[test]
    fn zero_budget_collapses_to_ones() {
        let m = StaircaseMatrix::new(4, 0.0).unwrap();
        assert!(m.columns().all(|c| c.values().iter().all(|&v| v == 1.0)));
    }

    #[test]
    fn complement_swaps_sets() {
        let i = PatternIndex::from_set(4, &[0, 3]).unwrap();
        assert_eq!(i.complement().beta(), 0b0110);
    }
}

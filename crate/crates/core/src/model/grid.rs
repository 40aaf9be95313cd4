use alloc::vec::Vec;

use crate::{Error, Result};

/// Length-class discretisation: `m + 1` strictly increasing breakpoints and
/// the `m` class midpoints (mm).
#[derive(Debug, Clone, PartialEq)]
pub struct SizeGrid {
    breakpoints: Vec<f64>,
    midpoints: Vec<f64>,
}

impl SizeGrid {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 3 {
            return Err(Error::InvalidGrid("at least two classes are required"));
        }
        if breakpoints.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::InvalidGrid("breakpoints must be finite and non-negative"));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("breakpoints must be strictly increasing"));
        }
        let midpoints = breakpoints.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self {
            breakpoints,
            midpoints,
        })
    }

    /// Equal-width classes covering `[min, max)`.
    pub fn uniform(min: f64, max: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !(max > min) {
            return Err(Error::InvalidGrid("need max > min and width > 0"));
        }
        let span = (max - min) / width;
        let m = libm::round(span);
        if libm::fabs(span - m) > 1e-9 * span.max(1.0) {
            return Err(Error::InvalidGrid("width must divide max - min"));
        }
        let m = m as usize;
        Self::new((0..=m).map(|i| min + i as f64 * width).collect())
    }

    /// The 24 one-millimetre classes `[8, 9), ..., [31, 32)`.
    pub fn shrimp_default() -> Self {
        Self::uniform(8.0, 32.0, 1.0).expect("static grid is valid")
    }

    pub fn classes(&self) -> usize {
        self.midpoints.len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    pub fn lower(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn upper(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1]
    }

    /// Index of the class containing `length`, if inside `[lower, upper)`.
    pub fn class_of(&self, length: f64) -> Option<usize> {
        if length < self.lower() || length >= self.upper() {
            return None;
        }
        let idx = self.breakpoints.partition_point(|b| *b <= length);
        Some(idx - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_24_unit_classes() {
        let g = SizeGrid::shrimp_default();
        assert_eq!(g.classes(), 24);
        assert_eq!(g.midpoints()[0], 8.5);
        assert_eq!(g.midpoints()[23], 31.5);
        assert_eq!(g.class_of(15.2), Some(7));
        assert_eq!(g.class_of(32.0), None);
        assert_eq!(g.class_of(8.0), Some(0));
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(SizeGrid::new(alloc::vec![1.0, 2.0]).is_err());
        assert!(SizeGrid::new(alloc::vec![1.0, 3.0, 2.0]).is_err());
        assert!(SizeGrid::new(alloc::vec![1.0, 1.0, 2.0]).is_err());
        assert!(SizeGrid::uniform(8.0, 32.0, 0.7).is_err());
        assert!(SizeGrid::uniform(8.0, 32.0, 0.0).is_err());
    }
}

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use crate::{Error, Result};

/// Numbers of individuals per length class.
///
/// Used for the state `N_t` as well as for the intermediate sub-populations
/// (after growth, survivors, catch, natural deaths, recruits).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PopulationState(Vec<f64>);

impl PopulationState {
    pub fn new(counts: Vec<f64>) -> Result<Self> {
        if let Some((class, value)) = counts
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::NumericalFailure(alloc::format!(
                "class {class} holds invalid count {value}"
            )));
        }
        Ok(Self(counts))
    }

    pub fn zeros(classes: usize) -> Self {
        Self(vec![0.0; classes])
    }

    /// Wraps counts produced by the model itself, skipping validation.
    pub(crate) fn from_raw(counts: Vec<f64>) -> Self {
        Self(counts)
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|v| v.is_finite() && *v >= 0.0)
    }

    /// Element-wise sum.
    pub fn add(&self, other: &PopulationState) -> PopulationState {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `sum_i n_i * per_class_i`.
    pub fn weighted_sum(&self, per_class: &[f64]) -> f64 {
        self.0.iter().zip(per_class).map(|(n, w)| n * w).sum()
    }
}

impl Index<usize> for PopulationState {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<PopulationState> for Vec<f64> {
    fn from(s: PopulationState) -> Self {
        s.0
    }
}

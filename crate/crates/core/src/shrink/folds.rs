//! Balanced, seeded fold assignment.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Fold label (0-based internally) for every unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
}

impl FoldAssignment {
    /// Explicit assignment with labels in `0..k`; every fold must be non-empty.
    pub fn from_labels(fold_of: Vec<usize>, k: usize) -> Result<Self> {
        let mut sizes = vec![0usize; k];
        for (i, &f) in fold_of.iter().enumerate() {
            if f >= k {
                return Err(Error::InvalidArgument(format!(
                    "unit {}: fold {} outside 1..={k}",
                    i + 1,
                    f + 1
                )));
            }
            sizes[f] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidArgument(format!("fold {} has no units", empty + 1)));
        }
        Ok(Self { fold_of, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.fold_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold_of.is_empty()
    }

    /// 0-based fold of unit `i`.
    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn complement(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffled round-robin: a seeded permutation of the units is dealt into
/// folds in turn, so sizes differ by at most one.
pub fn assign_folds(n: usize, k: usize, seed: RngSeed) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!(
            "fold count K = {k} must satisfy 2 <= K <= N = {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed.stream("folds", 0));
    let mut fold_of = vec![0; n];
    for (pos, &unit) in order.iter().enumerate() {
        fold_of[unit] = pos % k;
    }
    Ok(FoldAssignment { fold_of, k })
}

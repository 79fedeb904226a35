//! Running-sum counter for the stopping rule `Σ_t η^t ≥ η_sum`.
//!
//! `Exact` keeps the true sum. `Tree` is the binary mechanism: each dyadic
//! block of additions gets one Laplace-noised partial sum, and a read adds up
//! the `≤ levels` blocks covering the prefix. Every addition lands in at most
//! `levels` blocks, so a per-node scale of `levels · max_value / ε_counter`
//! makes the released sums `ε_counter`-DP.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::noise::{Laplace, NoiseError};
use crate::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CounterMode {
    #[default]
    Exact,
    Tree,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum CounterError {
    #[error("counter input {value} outside (0, {max}]")]
    OutOfRange { value: f64, max: f64 },
    #[error("counter capacity {0} exhausted")]
    CapacityExhausted(u64),
    #[error("counter budget must be positive (got {0})")]
    Budget(f64),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Clone)]
struct Tree {
    capacity: u64,
    /// Exact partial sum of the open block at each level.
    exact: Vec<f64>,
    /// Released (noised) partial sum at each level.
    noisy: Vec<f64>,
    noise: Laplace,
    rng: Rng,
}

#[derive(Debug, Clone)]
pub struct PrivateCounter {
    max_value: f64,
    count: u64,
    sum: f64,
    tree: Option<Tree>,
}

/// `floor(log2(capacity)) + 1`: the number of bits in any count `≤ capacity`.
pub fn tree_levels(capacity: u64) -> usize {
    (u64::BITS - capacity.max(1).leading_zeros()) as usize
}

impl PrivateCounter {
    pub fn exact(max_value: f64) -> Self {
        Self {
            max_value,
            count: 0,
            sum: 0.0,
            tree: None,
        }
    }

    /// Binary-mechanism counter for at most `capacity` additions.
    pub fn tree(max_value: f64, capacity: u64, epsilon_counter: f64, rng: Rng) -> Result<Self, CounterError> {
        if !(epsilon_counter > 0.0 && epsilon_counter.is_finite()) {
            return Err(CounterError::Budget(epsilon_counter));
        }
        let scale = tree_levels(capacity) as f64 * max_value / epsilon_counter;
        Self::tree_with_scale(max_value, capacity, scale, rng)
    }

    /// Tree counter with an explicit per-node Laplace scale (`0` disables noise).
    pub fn tree_with_scale(max_value: f64, capacity: u64, node_scale: f64, rng: Rng) -> Result<Self, CounterError> {
        let levels = tree_levels(capacity);
        Ok(Self {
            max_value,
            count: 0,
            sum: 0.0,
            tree: Some(Tree {
                capacity,
                exact: vec![0.0; levels],
                noisy: vec![0.0; levels],
                noise: Laplace::new(node_scale)?,
                rng,
            }),
        })
    }

    pub fn mode(&self) -> CounterMode {
        if self.tree.is_some() {
            CounterMode::Tree
        } else {
            CounterMode::Exact
        }
    }

    pub fn add(&mut self, value: f64) -> Result<(), CounterError> {
        if !(value > 0.0 && value <= self.max_value) {
            return Err(CounterError::OutOfRange {
                value,
                max: self.max_value,
            });
        }
        if let Some(tree) = &mut self.tree {
            if self.count >= tree.capacity {
                return Err(CounterError::CapacityExhausted(tree.capacity));
            }
            let t = self.count + 1;
            let level = t.trailing_zeros() as usize;
            let merged: f64 = tree.exact[..level].iter().sum::<f64>() + value;
            tree.exact[..level].fill(0.0);
            tree.noisy[..level].fill(0.0);
            tree.exact[level] = merged;
            tree.noisy[level] = merged + tree.noise.sample(&mut tree.rng);
        }
        self.count += 1;
        self.sum += value;
        Ok(())
    }

    /// Released running sum.
    pub fn read(&self) -> f64 {
        match &self.tree {
            None => self.sum,
            Some(tree) => (0..tree.noisy.len())
                .filter(|level| self.count >> level & 1 == 1)
                .map(|level| tree.noisy[level])
                .sum(),
        }
    }

    /// The exact running sum (not private).
    pub fn true_sum(&self) -> f64 {
        self.sum
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Standard deviation bound of `read() − true_sum()`: at most `levels`
    /// Laplace terms of variance `2·scale²`.
    pub fn noise_std_bound(&self) -> f64 {
        self.tree
            .as_ref()
            .map_or(0.0, |t| sqrt(2.0 * t.exact.len() as f64) * t.noise.scale())
    }
}

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::qp::{solve_simplex_qp, QpSettings};

/// Recent `(point, penalty gradient)` pairs, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCache {
    entries: VecDeque<(DVector<f64>, DVector<f64>)>,
    capacity: usize,
}

impl GradientCache {
    pub fn new(capacity: usize) -> Self {
        Self { entries: VecDeque::with_capacity(capacity), capacity: capacity.max(1) }
    }

    pub fn push(&mut self, point: DVector<f64>, grad: DVector<f64>) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((point, grad));
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &(DVector<f64>, DVector<f64>)> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityResult {
    pub value: f64,
    /// Weights over the gradients that were within the radius, in cache order.
    pub sigma: DVector<f64>,
    /// Cache indices of those gradients.
    pub used: Vec<usize>,
}

/// Minimum norm over convex combinations of cached gradients taken within
/// `radius` of `x`. The newest entry (the current point) is always used.
pub fn stationarity_measure(
    cache: &GradientCache,
    x: &DVector<f64>,
    radius: f64,
    settings: &QpSettings,
) -> StationarityResult {
    let last = cache.len().checked_sub(1).expect("gradient cache is empty");
    let used: Vec<usize> = cache
        .iter()
        .enumerate()
        .filter(|(i, (p, _))| *i == last || (p - x).norm() <= radius)
        .map(|(i, _)| i)
        .collect();
    let n = x.len();
    let g = DMatrix::from_fn(n, used.len(), |r, c| cache.entries[used[c]].1[r]);
    match solve_simplex_qp(&g, settings) {
        Ok(sol) => StationarityResult { value: sol.value, sigma: sol.sigma, used },
        // The current gradient alone is always a valid (if pessimistic) answer.
        Err(_) => {
            let mut sigma = DVector::zeros(used.len());
            sigma[used.len() - 1] = 1.0;
            StationarityResult { value: g.column(used.len() - 1).norm(), sigma, used }
        }
    }
}

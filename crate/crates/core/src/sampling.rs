//! Dynamic discrete distribution over `[0, n)` backed by a complete binary
//! tree of partial sums ("random counters").
//!
//! Building costs `O(n)`; sampling, setting a weight and scaling a weight each
//! visit one root-to-leaf path, i.e. `⌈log₂ n⌉ + 1` nodes. Weights are kept
//! unnormalized and the tree never draws its own randomness: callers pass a
//! uniform variate to [`WeightTree::sample`].

use std::cell::Cell;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("weight tree needs at least one leaf")]
    Empty,
    #[error("weight {weight} at index {index} is negative or not finite")]
    BadWeight { index: usize, weight: f64 },
    #[error("index {index} out of range for {len} leaves")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("cannot sample: total weight is zero")]
    ZeroTotal,
    #[error("scale factor {0} must lie in (0, 1]")]
    BadFactor(f64),
    #[error("uniform variate {0} not in [0, 1)")]
    BadUniform(f64),
}

/// Rescale when the total drops below this multiple of `n`.
const UNDERFLOW_TOTAL: f64 = 1e-250;

#[derive(Debug, Clone)]
pub struct WeightTree {
    n: usize,
    /// Number of leaf slots, `n` rounded up to a power of two.
    width: usize,
    /// Heap layout: node `k` has children `2k` and `2k + 1`; leaves start at `width`.
    nodes: Vec<f64>,
    touches: Cell<u64>,
    rescales: u64,
}

impl WeightTree {
    pub fn build(weights: &[f64]) -> Result<Self, SamplingError> {
        if weights.is_empty() {
            return Err(SamplingError::Empty);
        }
        if let Some((index, &weight)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= 0.0 && w.is_finite()))
        {
            return Err(SamplingError::BadWeight { index, weight });
        }
        let n = weights.len();
        let width = n.next_power_of_two();
        let mut nodes = vec![0.0; 2 * width];
        nodes[width..width + n].copy_from_slice(weights);
        let mut tree = Self { n, width, nodes, touches: Cell::new(0), rescales: 0 };
        tree.rebuild_internal();
        Ok(tree)
    }

    fn rebuild_internal(&mut self) {
        for k in (1..self.width).rev() {
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Sum of all leaf weights.
    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.nodes[self.width + i]
    }

    /// Probability of drawing `i`.
    pub fn probability(&self, i: usize) -> f64 {
        self.weight(i) / self.total()
    }

    /// Nodes on one root-to-leaf path: `⌈log₂ n⌉ + 1`.
    pub fn path_len(&self) -> usize {
        self.width.trailing_zeros() as usize + 1
    }

    /// Total nodes allocated, a proxy for build cost.
    pub fn node_count(&self) -> usize {
        2 * self.width - 1
    }

    /// Nodes visited by sample/update calls since construction or the last reset.
    pub fn node_touches(&self) -> u64 {
        self.touches.get()
    }

    pub fn reset_touches(&self) {
        self.touches.set(0);
    }

    /// How many times the underflow guard rescaled every weight.
    pub fn rescales(&self) -> u64 {
        self.rescales
    }

    /// Returns the index `i` with `u·total ∈ [prefix(i), prefix(i + 1))`.
    ///
    /// Zero-weight leaves are never returned, even when rounding puts the
    /// target on an interval boundary.
    pub fn sample(&self, u: f64) -> Result<usize, SamplingError> {
        if !(0.0..1.0).contains(&u) {
            return Err(SamplingError::BadUniform(u));
        }
        let total = self.total();
        if total <= 0.0 {
            return Err(SamplingError::ZeroTotal);
        }
        let target = u * total;
        let mut node = 1;
        let mut base = 0.0;
        let mut visited = 1;
        while node < self.width {
            let left = 2 * node;
            let right = left + 1;
            let split = base + self.nodes[left];
            if (target < split && self.nodes[left] > 0.0) || self.nodes[right] <= 0.0 {
                node = left;
            } else {
                base = split;
                node = right;
            }
            visited += 1;
        }
        self.touches.set(self.touches.get() + visited);
        Ok(node - self.width)
    }

    pub fn update_weight(&mut self, i: usize, weight: f64) -> Result<(), SamplingError> {
        if i >= self.n {
            return Err(SamplingError::IndexOutOfRange { index: i, len: self.n });
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(SamplingError::BadWeight { index: i, weight });
        }
        let mut node = self.width + i;
        self.nodes[node] = weight;
        let mut visited = 1;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
            visited += 1;
        }
        self.touches.set(self.touches.get() + visited);
        if self.total() > 0.0 && self.total() < UNDERFLOW_TOTAL * self.n as f64 {
            self.rescale();
        }
        Ok(())
    }

    /// Multiplies leaf `i` by `factor ∈ (0, 1]`.
    pub fn scale_weight(&mut self, i: usize, factor: f64) -> Result<(), SamplingError> {
        if i >= self.n {
            return Err(SamplingError::IndexOutOfRange { index: i, len: self.n });
        }
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(SamplingError::BadFactor(factor));
        }
        if factor == 1.0 {
            return Ok(());
        }
        let w = self.weight(i) * factor;
        self.update_weight(i, w)
    }

    /// Multiplies every weight by `n / total`; the distribution is unchanged.
    fn rescale(&mut self) {
        let factor = self.n as f64 / self.total();
        for w in &mut self.nodes[self.width..self.width + self.n] {
            *w *= factor;
        }
        self.rebuild_internal();
        self.rescales += 1;
    }

    /// Leaf weights, in index order.
    pub fn weights(&self) -> &[f64] {
        &self.nodes[self.width..self.width + self.n]
    }

    /// Checks that every internal node equals the sum of its children up to
    /// `rel_tol`. Used by tests.
    pub fn check_consistency(&self, rel_tol: f64) -> bool {
        (1..self.width).all(|k| {
            let sum = self.nodes[2 * k] + self.nodes[2 * k + 1];
            (self.nodes[k] - sum).abs() <= rel_tol * sum.abs().max(f64::MIN_POSITIVE)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals() {
        assert_eq!(WeightTree::build(&[1.0]).unwrap().total(), 1.0);
        assert_eq!(WeightTree::build(&[1.0, 2.0, 3.0, 4.0]).unwrap().total(), 10.0);
        assert_eq!(WeightTree::build(&[1.0, 2.0, 3.0]).unwrap().total(), 6.0);
    }

    #[test]
    fn build_errors() {
        assert_eq!(WeightTree::build(&[]).unwrap_err(), SamplingError::Empty);
        assert_eq!(
            WeightTree::build(&[1.0, -0.5]).unwrap_err(),
            SamplingError::BadWeight { index: 1, weight: -0.5 }
        );
        assert!(WeightTree::build(&[f64::NAN]).is_err());
    }

    #[test]
    fn sample_single_support() {
        let t = WeightTree::build(&[0.0, 5.0, 0.0]).unwrap();
        for k in 0..100 {
            assert_eq!(t.sample(k as f64 / 100.0).unwrap(), 1);
        }
    }

    #[test]
    fn sample_prefix_convention() {
        let t = WeightTree::build(&[1.0, 1.0]).unwrap();
        assert_eq!(t.sample(0.25).unwrap(), 0);
        assert_eq!(t.sample(0.75).unwrap(), 1);
        assert_eq!(t.sample(0.5).unwrap(), 1);
        assert_eq!(t.sample(0.0).unwrap(), 0);
    }

    #[test]
    fn sample_errors() {
        let mut t = WeightTree::build(&[0.0, 0.0]).unwrap();
        assert_eq!(t.sample(0.5).unwrap_err(), SamplingError::ZeroTotal);
        t.update_weight(0, 1.0).unwrap();
        assert_eq!(t.sample(1.0).unwrap_err(), SamplingError::BadUniform(1.0));
        assert!(t.sample(-0.1).is_err());
    }

    #[test]
    fn trailing_zero_weights_never_sampled() {
        let t = WeightTree::build(&[0.3, 0.0, 0.0]).unwrap();
        let u = 1.0 - f64::EPSILON / 2.0;
        assert_eq!(t.sample(u).unwrap(), 0);
    }

    #[test]
    fn update_and_read_back() {
        let mut t = WeightTree::build(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        t.update_weight(3, 0.125).unwrap();
        assert_eq!(t.weight(3), 0.125);
        assert!(t.update_weight(5, 1.0).is_err());
        assert!(t.update_weight(0, -1.0).is_err());
        for i in [0, 1, 2, 4] {
            t.update_weight(i, 0.0).unwrap();
        }
        for k in 0..50 {
            assert_eq!(t.sample(k as f64 / 50.0).unwrap(), 3);
        }
        assert!(t.check_consistency(0.0));
    }

    #[test]
    fn scaling() {
        let mut t = WeightTree::build(&[8.0, 1.0]).unwrap();
        t.scale_weight(0, 1.0).unwrap();
        assert_eq!(t.weight(0), 8.0);
        for _ in 0..3 {
            t.scale_weight(0, 0.5).unwrap();
        }
        assert_eq!(t.weight(0), 1.0);
        assert_eq!(t.total(), 2.0);
        assert_eq!(t.scale_weight(0, 0.0).unwrap_err(), SamplingError::BadFactor(0.0));
        assert!(t.scale_weight(0, 1.5).is_err());
        assert!(t.scale_weight(2, 0.5).is_err());
    }

    #[test]
    fn path_lengths() {
        assert_eq!(WeightTree::build(&[1.0]).unwrap().path_len(), 1);
        assert_eq!(WeightTree::build(&[1.0; 2]).unwrap().path_len(), 2);
        assert_eq!(WeightTree::build(&[1.0; 5]).unwrap().path_len(), 4);
        assert_eq!(WeightTree::build(&[1.0; 8]).unwrap().path_len(), 4);
    }

    #[test]
    fn touches_are_logarithmic() {
        let n = 1000;
        let mut t = WeightTree::build(&vec![1.0; n]).unwrap();
        let bound = (n as f64).log2().ceil() as u64 + 1;
        t.sample(0.3).unwrap();
        assert!(t.node_touches() <= bound);
        t.reset_touches();
        t.update_weight(17, 2.0).unwrap();
        assert!(t.node_touches() <= bound);
    }

    #[test]
    fn underflow_guard_preserves_distribution() {
        let mut t = WeightTree::build(&[1.0, 3.0]).unwrap();
        for _ in 0..2000 {
            t.scale_weight(0, 0.5).unwrap();
            t.scale_weight(1, 0.5).unwrap();
        }
        assert!(t.rescales() > 0);
        assert!(t.total() > 1e-200);
        assert!((t.probability(0) - 0.25).abs() < 1e-12);
    }
}

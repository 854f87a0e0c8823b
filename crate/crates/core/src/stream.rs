//! Merge & Reduce: single-pass coreset construction over a node stream.
//!
//! Incoming nodes fill bucket `B_0` of capacity `N`. A full `B_0` is carried
//! into level 1; whenever the target level is occupied the two summaries are
//! merged, reduced with [`compute_coreset`], and the result is carried one
//! level further up. Level `ℓ >= 1` therefore always stands for exactly
//! `2^(ℓ-1) · N` stream nodes and the occupied levels spell out `⌊n / N⌋` in
//! binary.

use alloc::vec::Vec;

use crate::coreset::{compute_coreset, CoresetConfig};
use crate::model::{CoresetNode, ProbabilisticNode};
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StreamConfig {
    /// Capacity `N` of bucket `B_0`.
    pub bucket_capacity: usize,
    pub coreset: CoresetConfig,
}

impl StreamConfig {
    /// Uses `N = 200 · k`.
    pub fn new(coreset: CoresetConfig) -> Self {
        StreamConfig {
            bucket_capacity: 200 * coreset.k.max(1),
            coreset,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bucket_capacity == 0 {
            return Err(Error::InvalidConfig("bucket_capacity must be at least 1"));
        }
        self.coreset.validate()
    }

    /// Remainders in `B_0` smaller than this are passed through unreduced.
    pub fn passthrough_floor(&self) -> usize {
        2 * self.coreset.k
    }
}

/// A summary held at some level of the cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub nodes: Vec<CoresetNode>,
    /// Number of stream nodes this summary stands for.
    pub represented: u64,
    /// Longest chain of reductions any of its information went through.
    pub depth: u32,
}

impl Summary {
    /// Disjoint union. Costs of the union are the sum of the parts' costs.
    pub fn merge(mut self, other: Summary) -> Summary {
        self.nodes.extend(other.nodes);
        Summary {
            nodes: self.nodes,
            represented: self.represented + other.represented,
            depth: self.depth.max(other.depth),
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.coreset_weight()).sum()
    }
}

/// The bucket cascade `B_0, B_1, …`.
#[derive(Debug, Clone)]
pub struct StreamState {
    config: StreamConfig,
    b0: Vec<CoresetNode>,
    /// `levels[ℓ - 1]` is bucket `B_ℓ`.
    levels: Vec<Option<Summary>>,
    count: u64,
    reductions: u64,
    pushed_weight: f64,
    peak_live: usize,
}

impl StreamState {
    pub fn new(config: StreamConfig) -> Result<Self> {
        config.validate()?;
        Ok(StreamState {
            config,
            b0: Vec::with_capacity(config.bucket_capacity),
            levels: Vec::new(),
            count: 0,
            reductions: 0,
            pushed_weight: 0.0,
            peak_live: 0,
        })
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    /// Nodes consumed so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn reductions(&self) -> u64 {
        self.reductions
    }

    pub fn pushed_weight(&self) -> f64 {
        self.pushed_weight
    }

    pub fn b0(&self) -> &[CoresetNode] {
        &self.b0
    }

    /// Bucket `B_level` for `level >= 1`.
    pub fn level(&self, level: usize) -> Option<&Summary> {
        level
            .checked_sub(1)
            .and_then(|i| self.levels.get(i))
            .and_then(|s| s.as_ref())
    }

    /// Indices `ℓ >= 1` of the occupied buckets, ascending.
    pub fn occupied_levels(&self) -> Vec<usize> {
        self.levels
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|_| i + 1))
            .collect()
    }

    /// Nodes currently held across all buckets.
    pub fn live_nodes(&self) -> usize {
        self.b0.len()
            + self
                .levels
                .iter()
                .flatten()
                .map(|s| s.nodes.len())
                .sum::<usize>()
    }

    /// Largest number of nodes held at once, including merge buffers.
    pub fn peak_live_nodes(&self) -> usize {
        self.peak_live
    }

    pub fn push_node(&mut self, node: ProbabilisticNode) {
        self.push(CoresetNode::raw(node));
    }

    /// Pushes an already weighted node, e.g. from another summary.
    pub fn push(&mut self, node: CoresetNode) {
        self.pushed_weight += node.coreset_weight();
        self.b0.push(node);
        self.count += 1;
        self.peak_live = self.peak_live.max(self.live_nodes());
        if self.b0.len() >= self.config.bucket_capacity {
            let full = core::mem::take(&mut self.b0);
            let represented = full.len() as u64;
            self.carry(
                Summary {
                    nodes: full,
                    represented,
                    depth: 0,
                },
                1,
            );
        }
    }

    fn carry(&mut self, mut summary: Summary, mut level: usize) {
        loop {
            if self.levels.len() < level {
                self.levels.resize(level, None);
            }
            match self.levels[level - 1].take() {
                None => {
                    self.levels[level - 1] = Some(summary);
                    return;
                }
                Some(occupant) => {
                    let merged = occupant.merge(summary);
                    self.peak_live = self.peak_live.max(self.live_nodes() + merged.nodes.len());
                    summary = self.reduce(merged);
                    level += 1;
                }
            }
        }
    }

    fn reduce(&mut self, merged: Summary) -> Summary {
        let seed = derive_seed(self.config.coreset.rng_seed, self.reductions);
        self.reductions += 1;
        reduce_with_seed(merged, &self.config.coreset, seed)
    }

    /// The union of all buckets after reducing `B_0`.
    ///
    /// Does not modify the state; pushing may continue afterwards.
    pub fn finalize(&self) -> Result<Summary> {
        if self.count == 0 {
            return Err(Error::EmptyStream);
        }
        let mut out = Summary {
            nodes: Vec::new(),
            represented: 0,
            depth: 0,
        };
        if !self.b0.is_empty() {
            let tail = Summary {
                nodes: self.b0.clone(),
                represented: self.b0.len() as u64,
                depth: 0,
            };
            let tail = if self.b0.len() < self.config.passthrough_floor() {
                tail
            } else {
                // Seeded by the stream position so repeated calls agree.
                let seed = derive_seed(self.config.coreset.rng_seed, u64::MAX - self.count);
                reduce_with_seed(tail, &self.config.coreset, seed)
            };
            out = out.merge(tail);
        }
        for level in self.levels.iter().flatten() {
            out = out.merge(level.clone());
        }
        Ok(out)
    }
}

fn reduce_with_seed(merged: Summary, cfg: &CoresetConfig, seed: u64) -> Summary {
    let cfg = CoresetConfig {
        rng_seed: seed,
        ..*cfg
    };
    let coreset =
        compute_coreset(&merged.nodes, &cfg).expect("validated config, non-empty summary");
    Summary {
        nodes: coreset.nodes,
        represented: merged.represented,
        depth: merged.depth + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{expected_clustering_cost, CenterSet, Point};
    use alloc::vec;

    fn node(x: f64) -> ProbabilisticNode {
        ProbabilisticNode::uniform(
            "n",
            1.0,
            vec![
                Point::new(vec![x]).unwrap(),
                Point::new(vec![x + 0.5]).unwrap(),
            ],
        )
        .unwrap()
    }

    fn state(capacity: usize, k: usize) -> StreamState {
        let mut coreset = CoresetConfig::new(k, 7);
        coreset.sample_constant = 20.0;
        StreamState::new(StreamConfig {
            bucket_capacity: capacity,
            coreset,
        })
        .unwrap()
    }

    #[test]
    fn first_full_bucket_moves_up_unreduced() {
        let mut s = state(100, 1);
        (0..100).for_each(|i| s.push_node(node(i as f64)));
        assert!(s.b0().is_empty());
        assert_eq!(s.occupied_levels(), vec![1]);
        assert_eq!(s.level(1).unwrap().nodes.len(), 100);
        assert_eq!(s.level(1).unwrap().depth, 0);
        assert_eq!(s.reductions(), 0);
    }

    #[test]
    fn cascade_after_250_pushes() {
        let mut s = state(100, 1);
        (0..250).for_each(|i| s.push_node(node((i % 17) as f64)));
        assert_eq!(s.b0().len(), 50);
        assert_eq!(s.occupied_levels(), vec![2]);
        let b2 = s.level(2).unwrap();
        assert_eq!(b2.represented, 200);
        assert_eq!(b2.depth, 1);
        assert!((b2.total_weight() - 200.0).abs() < 1e-9);
    }

    #[test]
    fn capacity_one_is_a_binary_counter() {
        for levels in 0..8u32 {
            let mut s = state(1, 1);
            (0..1u64 << levels).for_each(|i| s.push_node(node(i as f64)));
            assert_eq!(s.occupied_levels(), vec![levels as usize + 1]);
        }
    }

    #[test]
    fn finalize_examples() {
        let s = state(10, 1);
        assert_eq!(s.finalize(), Err(Error::EmptyStream));

        let mut s = state(10, 1);
        s.push_node(node(3.0));
        let out = s.finalize().unwrap();
        assert_eq!(out.nodes.len(), 1);
        assert_eq!(out.nodes[0].coreset_weight(), 1.0);

        let mut s = state(10, 2);
        (0..10).for_each(|_| s.push_node(node(1.0)));
        let out = s.finalize().unwrap();
        let probe = CenterSet::new(vec![Point::new(vec![-2.0]).unwrap()]).unwrap();
        let expected = 10.0 * expected_clustering_cost(&[node(1.0)], &probe);
        assert!((expected_clustering_cost(&out.nodes, &probe) - expected).abs() < 1e-9);
    }

    #[test]
    fn finalize_is_repeatable_and_non_destructive() {
        let mut s = state(20, 2);
        (0..75).for_each(|i| s.push_node(node(i as f64 * 0.1)));
        let a = s.finalize().unwrap();
        assert_eq!(a, s.finalize().unwrap());
        assert_eq!(a.represented, 75);
        assert!((a.total_weight() - 75.0).abs() < 1e-9);
        s.push_node(node(0.0));
        assert_eq!(s.count(), 76);
    }

    #[test]
    fn live_nodes_stay_bounded() {
        let mut s = state(16, 1);
        for i in 0..2000 {
            s.push_node(node((i % 23) as f64));
            let levels = s.occupied_levels();
            let bound = 16
                + levels.len()
                    * s.levels
                        .iter()
                        .flatten()
                        .map(|l| l.nodes.len())
                        .max()
                        .unwrap_or(0);
            assert!(s.live_nodes() <= bound);
        }
        let max_depth = s.levels.iter().flatten().map(|l| l.depth).max().unwrap();
        assert!(max_depth as f64 <= libm::ceil(libm::log2(2000.0 / 16.0)));
    }
}

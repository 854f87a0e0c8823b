//! Coreset construction for weighted probabilistic k-median.
//!
//! 1. Every node is replaced by a weighted 1-median representative `y_i`.
//! 2. A center set `A` is computed on the representatives.
//! 3. Representatives are bucketed by nearest center `ℓ`, distance ring `h`
//!    around that center and spread ring `a` (average realization distance to
//!    the node's own representative), with rings in powers of two of the
//!    average representative cost `R`.
//! 4. Every bucket is sampled with replacement, proportionally to node
//!    weight, and each sample carries `W_bucket / s`.
//!
//! The sampled nodes keep their full distributions.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::Range;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::centers::{compute_center_set, CenterComputeConfig};
use crate::model::{node_spread, CenterSet, CoresetNode, Point, WeightedNode, WeightedPoint};
use crate::onemedian::{node_one_median, WeiszfeldConfig};
use crate::rng::{derive_seed, stream_rng};
use crate::{Error, Result};

/// Cell `Y_{ℓ,h,a}` of the representative partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BucketKey {
    /// Index of the nearest center in `A`.
    pub ell: usize,
    /// Distance ring around that center.
    pub h: u32,
    /// Spread ring.
    pub a: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SamplingScheme {
    /// Draw proportionally to node weight; every sample carries `W_b / s`.
    #[default]
    WeightProportional,
    /// Draw uniformly; a sample of node `v` carries `w(v) · n_b / s`.
    /// Unbiased, but conserves the bucket weight only in expectation.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoresetConfig {
    pub k: usize,
    /// The constant `c` in `s = max(⌈c·k / n_b⌉, 1)`.
    pub sample_constant: f64,
    /// Recorded in metadata only.
    pub epsilon: f64,
    pub weiszfeld: WeiszfeldConfig,
    pub max_lloyd_iterations: usize,
    /// Restart trials for the center set `A`.
    pub center_restarts: usize,
    pub rng_seed: u64,
    pub sampling: SamplingScheme,
}

impl CoresetConfig {
    pub fn new(k: usize, rng_seed: u64) -> Self {
        CoresetConfig {
            k,
            sample_constant: 200.0,
            epsilon: 0.1,
            weiszfeld: WeiszfeldConfig::default(),
            max_lloyd_iterations: 10,
            center_restarts: 1,
            rng_seed,
            sampling: SamplingScheme::WeightProportional,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1"));
        }
        if !(self.sample_constant > 0.0 && self.sample_constant.is_finite()) {
            return Err(Error::InvalidConfig("sample_constant must be positive"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive"));
        }
        self.center_config().validate()
    }

    fn center_config(&self) -> CenterComputeConfig {
        CenterComputeConfig {
            k: self.k,
            max_lloyd_iterations: self.max_lloyd_iterations,
            restarts: self.center_restarts,
            rng_seed: derive_seed(self.rng_seed, 0),
            weiszfeld: self.weiszfeld,
        }
    }
}

/// A node's 1-median together with the index of the node it stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct Representative {
    pub point: WeightedPoint,
    pub source: usize,
}

/// One bucket's contribution to a coreset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BucketSample {
    pub key: BucketKey,
    pub members: usize,
    /// Total effective weight of the bucket's members.
    pub weight: f64,
    pub sample_size: usize,
    /// Where the bucket's samples sit in [`Coreset::nodes`].
    pub range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoresetMeta {
    pub k: usize,
    pub k_used: usize,
    pub epsilon: f64,
    pub rng_seed: u64,
    pub radius: f64,
    pub input_nodes: usize,
    pub input_weight: f64,
    pub output_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coreset {
    pub nodes: Vec<CoresetNode>,
    pub centers: CenterSet,
    pub buckets: Vec<BucketSample>,
    pub meta: CoresetMeta,
}

impl Coreset {
    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.coreset_weight()).sum()
    }
}

/// One representative per node. Copies of the same shared node are solved once.
pub fn build_representatives(
    nodes: &[CoresetNode],
    cfg: &WeiszfeldConfig,
) -> Result<Vec<Representative>> {
    if nodes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut solved: BTreeMap<usize, Point> = BTreeMap::new();
    nodes
        .iter()
        .enumerate()
        .map(|(source, n)| {
            let key = alloc::sync::Arc::as_ptr(n.shared()) as usize;
            let point = match solved.get(&key) {
                Some(p) => WeightedPoint::new(p.clone(), n.coreset_weight())?,
                None => {
                    let y = node_one_median(n, cfg)?;
                    solved.insert(key, y.point.clone());
                    y
                }
            };
            Ok(Representative { point, source })
        })
        .collect()
}

/// Weighted average distance of the representatives to their nearest center,
/// or 1 when that average is zero.
pub fn ring_radius(points: &[WeightedPoint], centers: &CenterSet) -> f64 {
    let (num, den) = points.iter().fold((0.0, 0.0), |(num, den), y| {
        (
            num + y.weight * centers.nearest(y.point.coords()).1,
            den + y.weight,
        )
    });
    if num > 0.0 && den > 0.0 {
        num / den
    } else {
        1.0
    }
}

/// Ring of `value` in units of `radius`: 0 inside the inner ball, otherwise
/// the smallest `i >= 1` with `value <= 2^i · radius`.
///
/// The inner ball is open for distance rings and closed for spread rings.
pub fn ring_index(value: f64, radius: f64, closed_inner: bool) -> u32 {
    let inner = if closed_inner {
        value <= radius
    } else {
        value < radius
    };
    if inner {
        return 0;
    }
    let mut index = 1;
    let mut bound = 2.0 * radius;
    while value > bound && index < u32::MAX {
        index += 1;
        bound *= 2.0;
    }
    index
}

/// Bucket of a representative at distance `dist` from its nearest center
/// `ell`, whose node has spread `spread`.
pub fn bucket_key(ell: usize, dist: f64, spread: f64, radius: f64) -> BucketKey {
    BucketKey {
        ell,
        h: ring_index(dist, radius, false),
        a: ring_index(spread, radius, true),
    }
}

/// Groups representative indices by bucket.
pub fn partition(
    nodes: &[CoresetNode],
    reps: &[Representative],
    centers: &CenterSet,
    radius: f64,
) -> BTreeMap<BucketKey, Vec<usize>> {
    let mut buckets: BTreeMap<BucketKey, Vec<usize>> = BTreeMap::new();
    for (i, rep) in reps.iter().enumerate() {
        let (ell, dist) = centers.nearest(rep.point.point.coords());
        let spread = node_spread(nodes[rep.source].node(), &rep.point.point);
        buckets
            .entry(bucket_key(ell, dist, spread, radius))
            .or_default()
            .push(i);
    }
    buckets
}

/// `max(⌈c·k / n⁺⌉, 1)` where `n⁺` counts members with non-empty support.
pub fn sample_size(nonempty_members: usize, k: usize, sample_constant: f64) -> usize {
    if nonempty_members == 0 {
        return 1;
    }
    let s = libm::ceil(sample_constant * k as f64 / nonempty_members as f64);
    if s >= 1.0 {
        s as usize
    } else {
        1
    }
}

/// Draws `s` members with replacement.
pub fn sample_bucket<R: Rng + ?Sized>(
    members: &[&CoresetNode],
    s: usize,
    scheme: SamplingScheme,
    rng: &mut R,
) -> Vec<CoresetNode> {
    debug_assert!(!members.is_empty() && s >= 1);
    let n = members.len();
    match scheme {
        SamplingScheme::WeightProportional => {
            let total: f64 = members.iter().map(|m| m.coreset_weight()).sum();
            let share = total / s as f64;
            if n == 1 {
                return (0..s)
                    .map(|_| CoresetNode::with_weight(members[0].shared().clone(), share))
                    .collect();
            }
            let index = WeightedIndex::new(members.iter().map(|m| m.coreset_weight()))
                .expect("member weights are positive and finite");
            (0..s)
                .map(|_| {
                    CoresetNode::with_weight(members[index.sample(rng)].shared().clone(), share)
                })
                .collect()
        }
        SamplingScheme::Uniform => {
            let scale = n as f64 / s as f64;
            (0..s)
                .map(|_| {
                    let m = members[rng.random_range(0..n)];
                    CoresetNode::with_weight(m.shared().clone(), m.coreset_weight() * scale)
                })
                .collect()
        }
    }
}

/// Builds a coreset of `nodes`, each contributing its coreset weight.
///
/// Bucket `b` (in key order) samples from ChaCha stream `b + 1` of the
/// configured seed; the center set uses a seed derived from it.
pub fn compute_coreset(nodes: &[CoresetNode], cfg: &CoresetConfig) -> Result<Coreset> {
    if nodes.is_empty() {
        return Err(Error::EmptyInput);
    }
    cfg.validate()?;
    let reps = build_representatives(nodes, &cfg.weiszfeld)?;
    let points: Vec<WeightedPoint> = reps.iter().map(|r| r.point.clone()).collect();
    let centers = compute_center_set(&points, &cfg.center_config())?;
    let radius = ring_radius(&points, &centers.centers);
    let buckets = partition(nodes, &reps, &centers.centers, radius);

    let mut out = Vec::new();
    let mut samples = Vec::with_capacity(buckets.len());
    for (ordinal, (key, indices)) in buckets.iter().enumerate() {
        let members: Vec<&CoresetNode> = indices.iter().map(|&i| &nodes[reps[i].source]).collect();
        let nonempty = members
            .iter()
            .filter(|m| !m.node().realizations().is_empty())
            .count();
        let s = sample_size(nonempty, cfg.k, cfg.sample_constant);
        let mut rng = stream_rng(cfg.rng_seed, ordinal as u64 + 1);
        let start = out.len();
        out.extend(sample_bucket(&members, s, cfg.sampling, &mut rng));
        samples.push(BucketSample {
            key: *key,
            members: members.len(),
            weight: members.iter().map(|m| m.coreset_weight()).sum(),
            sample_size: s,
            range: start..out.len(),
        });
    }

    let meta = CoresetMeta {
        k: cfg.k,
        k_used: centers.k_used,
        epsilon: cfg.epsilon,
        rng_seed: cfg.rng_seed,
        radius,
        input_nodes: nodes.len(),
        input_weight: nodes.iter().map(|n| n.effective_weight()).sum(),
        output_nodes: out.len(),
    };
    Ok(Coreset {
        nodes: out,
        centers: centers.centers,
        buckets: samples,
        meta,
    })
}

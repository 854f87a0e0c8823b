//! Seeded synthetic node generators used by tests, benchmarks and the
//! `generate` subcommand.

use probi_core::{Point, ProbabilisticNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Gaussian blobs; each node draws all its realizations from one blob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub nodes: usize,
    pub blobs: usize,
    pub dim: usize,
    /// Minimum distance between blob means.
    pub separation: f64,
    /// Per-coordinate standard deviation.
    pub sigma: f64,
    pub realizations: usize,
    /// Probability that a realization is replaced by uniform background noise.
    pub noise: f64,
    pub seed: u64,
}

impl BlobSpec {
    /// Ten well separated blobs in ten dimensions, `σ = 0.05 ×` separation.
    pub fn census_like(nodes: usize, seed: u64) -> Self {
        BlobSpec {
            nodes,
            blobs: 10,
            dim: 10,
            separation: 10.0,
            sigma: 0.5,
            realizations: 10,
            noise: 0.0,
            seed,
        }
    }

    /// Seven heavily overlapping blobs with 20% background noise.
    pub fn covertype_like(nodes: usize, seed: u64) -> Self {
        BlobSpec {
            nodes,
            blobs: 7,
            dim: 10,
            separation: 10.0,
            sigma: 6.0,
            realizations: 10,
            noise: 0.2,
            seed,
        }
    }

    /// Blob means. With `dim >= blobs` they sit on scaled unit vectors, so
    /// every pair is exactly `separation` apart.
    pub fn means(&self) -> Vec<Vec<f64>> {
        if self.dim >= self.blobs {
            let scale = self.separation / std::f64::consts::SQRT_2;
            return (0..self.blobs)
                .map(|b| {
                    (0..self.dim)
                        .map(|j| if j == b { scale } else { 0.0 })
                        .collect()
                })
                .collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x6d65_616e);
        let side = self.separation * self.blobs as f64;
        let mut means: Vec<Vec<f64>> = Vec::with_capacity(self.blobs);
        let mut attempts = 0u32;
        while means.len() < self.blobs {
            let m: Vec<f64> = (0..self.dim).map(|_| rng.random_range(0.0..side)).collect();
            attempts += 1;
            let far = means.iter().all(|o| dist(o, &m) >= self.separation);
            // Give up on the separation requirement rather than loop forever.
            if far || attempts > 10_000 {
                means.push(m);
            }
        }
        means
    }

    pub fn stream(&self) -> BlobStream {
        let means = self.means();
        let pad = 3.0 * self.sigma;
        let lo = means.iter().flatten().fold(f64::INFINITY, |a, &b| a.min(b)) - pad;
        let hi = means
            .iter()
            .flatten()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            + pad;
        BlobStream {
            spec: *self,
            means,
            bounds: (lo, hi),
            normal: Normal::new(0.0, self.sigma).expect("sigma is finite and non-negative"),
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            emitted: 0,
        }
    }

    pub fn generate(&self) -> Vec<ProbabilisticNode> {
        self.stream().collect()
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Lazily generated nodes of a [`BlobSpec`].
pub struct BlobStream {
    spec: BlobSpec,
    means: Vec<Vec<f64>>,
    bounds: (f64, f64),
    normal: Normal<f64>,
    rng: ChaCha8Rng,
    emitted: usize,
}

impl BlobStream {
    fn draw_point(&mut self, blob: usize) -> Point {
        let coords = if self.spec.noise > 0.0 && self.rng.random_bool(self.spec.noise) {
            let (lo, hi) = self.bounds;
            (0..self.spec.dim)
                .map(|_| self.rng.random_range(lo..hi))
                .collect()
        } else {
            let mean = &self.means[blob];
            mean.iter()
                .map(|m| m + self.normal.sample(&mut self.rng))
                .collect()
        };
        Point::new(coords).expect("generated coordinates are finite")
    }
}

impl Iterator for BlobStream {
    type Item = ProbabilisticNode;

    fn next(&mut self) -> Option<ProbabilisticNode> {
        if self.emitted == self.spec.nodes {
            return None;
        }
        let blob = self.rng.random_range(0..self.spec.blobs);
        let points = (0..self.spec.realizations)
            .map(|_| self.draw_point(blob))
            .collect();
        let id = format!("v{}", self.emitted);
        self.emitted += 1;
        Some(ProbabilisticNode::uniform(id, 1.0, points).expect("non-empty uniform node"))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.spec.nodes - self.emitted;
        (left, Some(left))
    }
}

/// Nodes with random weights, uneven probabilities and optional missing
/// mass, spread uniformly over `[0, 10)^dim`.
pub fn random_nodes(
    count: usize,
    dim: usize,
    max_realizations: usize,
    seed: u64,
) -> Vec<ProbabilisticNode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let m = rng.random_range(1..=max_realizations.max(1));
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
            let mass = if rng.random_bool(0.3) {
                rng.random_range(0.5..1.0)
            } else {
                1.0
            };
            let total: f64 = raw.iter().sum();
            let realizations = raw
                .iter()
                .map(|r| {
                    let x = Point::new((0..dim).map(|_| rng.random_range(0.0..10.0)).collect())
                        .unwrap();
                    probi_core::Realization::new(x, r / total * mass).unwrap()
                })
                .collect();
            let weight = rng.random_range(0.5..3.0);
            ProbabilisticNode::new(format!("r{i}"), weight, realizations).unwrap()
        })
        .collect()
}

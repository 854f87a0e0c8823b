//! P-LLOYD++: k-median++ style seeding over realization points followed by a
//! probabilistic Lloyd alternation.
//!
//! Nodes are assigned as a whole to their expected-nearest center. A cluster's
//! new center is the weighted 1-median of all realizations of its members,
//! each realization weighted by `w_i · p_ij`. That pooled cost equals the
//! cluster's expected assignment cost, so neither half of a round increases
//! the objective.
//!
//! The solver works on raw nodes and on coresets alike through
//! [`WeightedNode`].

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::centers::{update_center, Coords, LloydRun};
use crate::model::{
    distance, expected_clustering_cost, nearest_expected, CenterSet, Point, ProbabilisticNode,
    WeightedNode,
};
use crate::onemedian::{Site, WeiszfeldConfig};
use crate::rng::{draw_proportional, trial_rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    pub k: usize,
    pub max_iterations: usize,
    pub restarts: usize,
    pub rng_seed: u64,
    pub weiszfeld: WeiszfeldConfig,
}

impl SolverConfig {
    pub fn new(k: usize, rng_seed: u64) -> Self {
        SolverConfig {
            k,
            max_iterations: 10,
            restarts: 1,
            rng_seed,
            weiszfeld: WeiszfeldConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1"));
        }
        self.weiszfeld.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub centers: CenterSet,
    /// Expected clustering cost of the input under `centers`.
    pub cost: f64,
    pub k_used: usize,
    pub best_trial: usize,
    pub run: LloydRun,
}

/// Distinct realization points with their total realization score
/// `Σ_i w_i · p_ij`, in order of first occurrence.
#[derive(Debug, Clone)]
pub struct SeedPool<'a> {
    points: Vec<&'a [f64]>,
    scores: Vec<f64>,
}

impl<'a> SeedPool<'a> {
    pub fn build<N: WeightedNode>(nodes: &'a [N]) -> Self {
        let mut index: BTreeMap<Coords<'a>, usize> = BTreeMap::new();
        let mut points = Vec::new();
        let mut scores: Vec<f64> = Vec::new();
        for n in nodes {
            let w = n.effective_weight();
            for r in n.node().realizations() {
                let x = r.point().coords();
                let slot = *index.entry(Coords(x)).or_insert_with(|| {
                    points.push(x);
                    scores.push(0.0);
                    points.len() - 1
                });
                scores[slot] += w * r.probability();
            }
        }
        SeedPool { points, scores }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &'a [f64] {
        self.points[i]
    }

    pub fn score(&self, i: usize) -> f64 {
        self.scores[i]
    }

    /// Draws the next center with probability proportional to
    /// `score(x) · min_c |x - c|`.
    pub fn next_center<R: Rng + ?Sized>(&self, centers: &CenterSet, rng: &mut R) -> Option<usize> {
        let mass: Vec<f64> = self
            .points
            .iter()
            .zip(&self.scores)
            .map(|(x, s)| s * centers.nearest(x).1)
            .collect();
        draw_proportional(&mass, rng)
    }
}

/// Seeding over the realization points: the first center uniformly among the
/// distinct points, then proportionally to score times distance.
pub fn plloyd_seed<N: WeightedNode, R: Rng + ?Sized>(
    nodes: &[N],
    k: usize,
    rng: &mut R,
) -> Result<CenterSet> {
    let pool = SeedPool::build(nodes);
    seed_from_pool(&pool, k, rng)
}

fn seed_from_pool<R: Rng + ?Sized>(
    pool: &SeedPool<'_>,
    k: usize,
    rng: &mut R,
) -> Result<CenterSet> {
    if pool.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1"));
    }
    let k = k.min(pool.len());
    let first = rng.random_range(0..pool.len());
    let mut chosen = vec![Point::from_finite(pool.points[first].to_vec())];
    let mut nearest: Vec<f64> = pool
        .points
        .iter()
        .map(|x| distance(x, chosen[0].coords()))
        .collect();
    let mut mass = vec![0.0; pool.len()];
    while chosen.len() < k {
        for ((m, s), d) in mass.iter_mut().zip(&pool.scores).zip(&nearest) {
            *m = s * d;
        }
        let Some(next) = draw_proportional(&mass, rng) else {
            break;
        };
        let c = Point::from_finite(pool.points[next].to_vec());
        for (d, x) in nearest.iter_mut().zip(&pool.points) {
            let e = distance(x, c.coords());
            if e < *d {
                *d = e;
            }
        }
        chosen.push(c);
    }
    Ok(CenterSet::from_nonempty(chosen))
}

/// Probabilistic Lloyd alternation from `start`.
pub fn plloyd_iterate<N: WeightedNode>(
    nodes: &[N],
    start: &CenterSet,
    cfg: &SolverConfig,
) -> LloydRun {
    let mut centers: Vec<Point> = start.points().to_vec();
    let mut assignment = vec![usize::MAX; nodes.len()];
    let mut trajectory = vec![start.clone()];
    let mut rounds = 0;
    let mut converged = false;

    while rounds < cfg.max_iterations {
        let set = CenterSet::from_nonempty(centers.clone());
        let mut changed = false;
        for (a, n) in assignment.iter_mut().zip(nodes) {
            let (j, _) = nearest_expected(n.node(), &set);
            if *a != j {
                *a = j;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
        let mut pooled: Vec<Vec<Site<'_>>> = vec![Vec::new(); centers.len()];
        for (&a, n) in assignment.iter().zip(nodes) {
            let w = n.effective_weight();
            pooled[a].extend(
                n.node()
                    .realizations()
                    .iter()
                    .map(|r| Site::new(r.point().coords(), w * r.probability())),
            );
        }
        for (center, cluster) in centers.iter_mut().zip(&pooled) {
            update_center(center, cluster, &cfg.weiszfeld);
        }
        rounds += 1;
        trajectory.push(CenterSet::from_nonempty(centers.clone()));
    }
    LloydRun {
        centers: CenterSet::from_nonempty(centers),
        rounds,
        converged,
        trajectory,
    }
}

/// Entries sharing one node in memory, folded into a single weighted entry.
struct Shared<'a> {
    node: &'a ProbabilisticNode,
    weight: f64,
}

impl WeightedNode for Shared<'_> {
    fn node(&self) -> &ProbabilisticNode {
        self.node
    }
    fn effective_weight(&self) -> f64 {
        self.weight
    }
}

// Coreset sampling with replacement repeats the same shared node many times;
// every step of the solver is linear in the entries' weights, so folding the
// repeats changes nothing but the running time.
fn fold_shared<N: WeightedNode>(nodes: &[N]) -> Vec<Shared<'_>> {
    let mut index: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out: Vec<Shared<'_>> = Vec::new();
    for n in nodes {
        let node = n.node();
        let slot = *index
            .entry(node as *const ProbabilisticNode as usize)
            .or_insert_with(|| {
                out.push(Shared { node, weight: 0.0 });
                out.len() - 1
            });
        out[slot].weight += n.effective_weight();
    }
    out
}

/// Best of `restarts` seed + iterate trials by expected clustering cost.
///
/// Trial `t` draws from a generator seeded with `rng_seed + t`.
pub fn solve<N: WeightedNode>(nodes: &[N], cfg: &SolverConfig) -> Result<Solution> {
    if nodes.is_empty() {
        return Err(Error::EmptyInput);
    }
    cfg.validate()?;
    let folded = fold_shared(nodes);
    let pool = SeedPool::build(&folded);
    let mut best: Option<Solution> = None;
    for trial in 0..cfg.restarts {
        let mut rng = trial_rng(cfg.rng_seed, trial as u64);
        let seeds = seed_from_pool(&pool, cfg.k, &mut rng)?;
        let run = plloyd_iterate(&folded, &seeds, cfg);
        let cost = expected_clustering_cost(&folded, &run.centers);
        if best.as_ref().map_or(true, |b| cost < b.cost) {
            best = Some(Solution {
                centers: run.centers.clone(),
                cost,
                k_used: run.centers.len(),
                best_trial: trial,
                run,
            });
        }
    }
    let mut best = best.expect("restarts >= 1");
    best.cost = expected_clustering_cost(nodes, &best.centers);
    Ok(best)
}

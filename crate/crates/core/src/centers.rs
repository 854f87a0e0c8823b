//! Center sets for weighted deterministic points: k-median++ seeding followed
//! by Lloyd alternation whose update step is a Weiszfeld 1-median.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::model::{distance, CenterSet, Point, WeightedPoint};
use crate::onemedian::{approximate_one_median, weighted_cost, Site, WeiszfeldConfig};
use crate::rng::{draw_proportional, trial_rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CenterComputeConfig {
    pub k: usize,
    pub max_lloyd_iterations: usize,
    pub restarts: usize,
    pub rng_seed: u64,
    pub weiszfeld: WeiszfeldConfig,
}

impl CenterComputeConfig {
    pub fn new(k: usize, rng_seed: u64) -> Self {
        CenterComputeConfig {
            k,
            max_lloyd_iterations: 10,
            restarts: 1,
            rng_seed,
            weiszfeld: WeiszfeldConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1"));
        }
        if self.max_lloyd_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_lloyd_iterations must be at least 1",
            ));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1"));
        }
        self.weiszfeld.validate()
    }
}

/// Outcome of a Lloyd alternation.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub centers: CenterSet,
    /// Completed assignment + update rounds.
    pub rounds: usize,
    /// True when the loop stopped because no assignment changed.
    pub converged: bool,
    /// The starting center set followed by the set after each round.
    pub trajectory: Vec<CenterSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterSetResult {
    pub centers: CenterSet,
    /// Weighted k-median cost of the input under `centers`.
    pub cost: f64,
    /// Number of centers actually used, `min(k, distinct points)`.
    pub k_used: usize,
    pub k_clamped: bool,
    /// Restart trial that produced the result.
    pub best_trial: usize,
    pub run: LloydRun,
}

/// `Σ_y w(y) · min_c |y - c|`.
pub fn weighted_kmedian_cost(points: &[WeightedPoint], centers: &CenterSet) -> f64 {
    points
        .iter()
        .map(|y| y.weight * centers.nearest(y.point.coords()).1)
        .sum()
}

pub(crate) fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Coordinates ordered by [`lexicographic`], for exact-equality maps.
#[derive(Clone, Copy)]
pub(crate) struct Coords<'a>(pub(crate) &'a [f64]);

impl PartialEq for Coords<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Coords<'_> {}
impl PartialOrd for Coords<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Coords<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        lexicographic(self.0, other.0)
    }
}

/// Number of distinct coordinate vectors, by exact equality.
pub fn distinct_count<'a>(points: impl IntoIterator<Item = &'a [f64]>) -> usize {
    let mut all: Vec<&[f64]> = points.into_iter().collect();
    all.sort_unstable_by(|a, b| lexicographic(a, b));
    all.dedup_by(|a, b| lexicographic(a, b) == Ordering::Equal);
    all.len()
}

/// Draws the next seeding center from `Y` with probability proportional to
/// `w(y) · min_c |y - c|` over the given centers.
pub fn kmedianpp_next_center<R: Rng + ?Sized>(
    points: &[WeightedPoint],
    centers: &CenterSet,
    rng: &mut R,
) -> Option<usize> {
    let mass: Vec<f64> = points
        .iter()
        .map(|y| y.weight * centers.nearest(y.point.coords()).1)
        .collect();
    draw_proportional(&mass, rng)
}

/// k-median++ seeding: the first center uniformly over the entries of `Y`,
/// every further one by weighted distance sampling.
///
/// Returns `min(k, distinct points)` centers.
pub fn kmedianpp_seed<R: Rng + ?Sized>(
    points: &[WeightedPoint],
    k: usize,
    rng: &mut R,
) -> Result<CenterSet> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = k.min(distinct_count(points.iter().map(|y| y.point.coords())));
    seed_grouped(points, None, k, rng)
}

/// Seeding over `points` where point `i` stands for `counts[i]` entries of
/// `Y` (one each without counts); the points must be distinct when counts
/// are given.
fn seed_grouped<R: Rng + ?Sized>(
    points: &[WeightedPoint],
    counts: Option<&[usize]>,
    k: usize,
    rng: &mut R,
) -> Result<CenterSet> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1"));
    }
    let first = match counts {
        None => rng.random_range(0..points.len()),
        Some(counts) => {
            let mut r = rng.random_range(0..counts.iter().sum::<usize>());
            counts
                .iter()
                .position(|&c| {
                    let hit = r < c;
                    r = r.saturating_sub(c);
                    hit
                })
                .expect("draw lies below the total count")
        }
    };
    let mut chosen = vec![points[first].point.clone()];
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|y| distance(y.point.coords(), chosen[0].coords()))
        .collect();
    let mut mass = vec![0.0; points.len()];
    while chosen.len() < k {
        for ((m, y), d) in mass.iter_mut().zip(points).zip(&nearest) {
            *m = y.weight * d;
        }
        let Some(next) = draw_proportional(&mass, rng) else {
            break;
        };
        let c = points[next].point.clone();
        for (d, y) in nearest.iter_mut().zip(points) {
            let e = distance(y.point.coords(), c.coords());
            if e < *d {
                *d = e;
            }
        }
        chosen.push(c);
    }
    Ok(CenterSet::from_nonempty(chosen))
}

/// Merges entries with identical coordinates, summing weights, in order of
/// first occurrence. Returns `None` when all entries are already distinct.
fn group_points(points: &[WeightedPoint]) -> Option<(Vec<WeightedPoint>, Vec<usize>)> {
    let mut index: BTreeMap<Coords<'_>, usize> = BTreeMap::new();
    let mut slots = Vec::with_capacity(points.len());
    for y in points {
        let next = index.len();
        slots.push(*index.entry(Coords(y.point.coords())).or_insert(next));
    }
    if index.len() == points.len() {
        return None;
    }
    let mut grouped: Vec<Option<WeightedPoint>> = vec![None; index.len()];
    let mut counts = vec![0usize; index.len()];
    for (y, &slot) in points.iter().zip(&slots) {
        counts[slot] += 1;
        match &mut grouped[slot] {
            Some(g) => g.weight += y.weight,
            g @ None => *g = Some(y.clone()),
        }
    }
    Some((
        grouped
            .into_iter()
            .map(|g| g.expect("every slot is hit"))
            .collect(),
        counts,
    ))
}

/// Lloyd alternation: nearest-center assignment, then a weighted 1-median per
/// cluster. A cluster keeps its center when it is empty or when the new
/// estimate is more expensive than the current center.
pub fn lloyd_median_iterate(
    points: &[WeightedPoint],
    start: &CenterSet,
    cfg: &CenterComputeConfig,
) -> LloydRun {
    let mut centers: Vec<Point> = start.points().to_vec();
    let mut assignment = vec![usize::MAX; points.len()];
    let mut trajectory = vec![start.clone()];
    let mut rounds = 0;
    let mut converged = false;
    let current = |c: &[Point]| CenterSet::from_nonempty(c.to_vec());

    while rounds < cfg.max_lloyd_iterations {
        let set = current(&centers);
        let mut changed = false;
        for (a, y) in assignment.iter_mut().zip(points) {
            let (j, _) = set.nearest(y.point.coords());
            if *a != j {
                *a = j;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
        let mut members: Vec<Vec<Site<'_>>> = vec![Vec::new(); centers.len()];
        for (&a, y) in assignment.iter().zip(points) {
            members[a].push(Site::new(y.point.coords(), y.weight));
        }
        for (center, cluster) in centers.iter_mut().zip(&members) {
            update_center(center, cluster, &cfg.weiszfeld);
        }
        rounds += 1;
        trajectory.push(current(&centers));
    }
    LloydRun {
        centers: current(&centers),
        rounds,
        converged,
        trajectory,
    }
}

/// Replaces `center` by the 1-median estimate of `cluster` unless that is
/// worse than keeping it.
pub(crate) fn update_center(center: &mut Point, cluster: &[Site<'_>], cfg: &WeiszfeldConfig) {
    if cluster.is_empty() {
        return;
    }
    let Ok(median) = approximate_one_median(cluster, cfg) else {
        return;
    };
    if median.cost <= weighted_cost(cluster, center.coords()) {
        *center = median.point;
    }
}

/// Best of `restarts` seeded k-median++ + Lloyd trials, by weighted cost.
///
/// Trial `t` draws from a generator seeded with `rng_seed + t`.
pub fn compute_center_set(
    points: &[WeightedPoint],
    cfg: &CenterComputeConfig,
) -> Result<CenterSetResult> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    cfg.validate()?;
    // Duplicates are common in summaries; the grouped problem is equivalent.
    let grouped = group_points(points);
    let (work, counts) = match &grouped {
        Some((g, c)) => (g.as_slice(), Some(c.as_slice())),
        None => (points, None),
    };
    let k = cfg.k.min(work.len());
    let mut best: Option<CenterSetResult> = None;
    for trial in 0..cfg.restarts {
        let mut rng = trial_rng(cfg.rng_seed, trial as u64);
        let seeds = seed_grouped(work, counts, k, &mut rng)?;
        let run = lloyd_median_iterate(work, &seeds, cfg);
        let cost = weighted_kmedian_cost(work, &run.centers);
        if best.as_ref().map_or(true, |b| cost < b.cost) {
            let k_used = run.centers.len();
            best = Some(CenterSetResult {
                centers: run.centers.clone(),
                cost,
                k_used,
                k_clamped: k_used < cfg.k,
                best_trial: trial,
                run,
            });
        }
    }
    let mut best = best.expect("restarts >= 1");
    if grouped.is_some() {
        best.cost = weighted_kmedian_cost(points, &best.centers);
    }
    Ok(best)
}

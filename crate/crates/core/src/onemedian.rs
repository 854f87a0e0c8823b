//! Weighted geometric medians (1-medians) via Weiszfeld's iteration.
//!
//! The iteration starts at the weighted center of gravity and follows the
//! fixed-point recurrence
//!
//! ```text
//! y' = (Σ w_j / |x_j - y| · x_j) / (Σ w_j / |x_j - y|)
//! ```
//!
//! It keeps going only while successive step lengths shrink by at least the
//! configured ratio, and for at most `max_iterations` steps. The returned point
//! is the cheapest iterate seen. When an iterate lands on a support point the
//! recurrence is undefined and the best support point is returned instead.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{distance, Point, WeightedNode, WeightedPoint};
use crate::{Error, Result};

/// Supports up to this size are also checked against their best support
/// point, which costs a quadratic scan.
pub const SUPPORT_SCAN_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeiszfeldConfig {
    pub max_iterations: usize,
    /// Continue while `|y_ν - y_ν-1| / |y_ν-1 - y_ν-2|` stays at or below this.
    pub ratio_threshold: f64,
    /// Distances below this count as "the iterate sits on a support point".
    pub coincidence_epsilon: f64,
}

impl Default for WeiszfeldConfig {
    fn default() -> Self {
        WeiszfeldConfig {
            max_iterations: 15,
            ratio_threshold: 0.1,
            coincidence_epsilon: 1e-12,
        }
    }
}

impl WeiszfeldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1"));
        }
        if !(self.ratio_threshold > 0.0) {
            return Err(Error::InvalidConfig("ratio_threshold must be positive"));
        }
        if !(self.coincidence_epsilon > 0.0) {
            return Err(Error::InvalidConfig("coincidence_epsilon must be positive"));
        }
        Ok(())
    }
}

/// A weighted support point borrowed from some larger structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site<'a> {
    pub coords: &'a [f64],
    pub weight: f64,
}

impl<'a> Site<'a> {
    pub fn new(coords: &'a [f64], weight: f64) -> Self {
        Site { coords, weight }
    }
}

/// Borrows a slice of weighted points as sites.
pub fn sites(points: &[WeightedPoint]) -> Vec<Site<'_>> {
    points
        .iter()
        .map(|p| Site::new(p.point.coords(), p.weight))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneMedian {
    pub point: Point,
    /// Weighted cost `Σ w_j |x_j - point|`.
    pub cost: f64,
    /// Number of Weiszfeld steps evaluated.
    pub iterations: usize,
    /// Set when an iterate hit a support point and the fallback was used.
    pub fallback: bool,
}

/// `Σ w_j |x_j - y|`.
pub fn weighted_cost(support: &[Site<'_>], y: &[f64]) -> f64 {
    support
        .iter()
        .map(|s| s.weight * distance(s.coords, y))
        .sum()
}

/// Weighted mean of the support.
pub fn center_of_gravity(support: &[Site<'_>]) -> Result<Point> {
    let first = support.first().ok_or(Error::EmptySupport)?;
    let mut acc = vec![0.0; first.coords.len()];
    let mut total = 0.0;
    for s in support {
        total += s.weight;
        for (a, x) in acc.iter_mut().zip(s.coords) {
            *a += s.weight * x;
        }
    }
    acc.iter_mut().for_each(|a| *a /= total);
    Ok(Point::from_finite(acc))
}

/// One Weiszfeld step from `y`.
///
/// Fails with [`Error::CoincidentIterate`] when `y` lies within
/// `coincidence_epsilon` of a support point, where the step is undefined.
pub fn weiszfeld_step(support: &[Site<'_>], y: &[f64], coincidence_epsilon: f64) -> Result<Point> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut num = vec![0.0; y.len()];
    let mut den = 0.0;
    for s in support {
        let d = distance(s.coords, y);
        if d < coincidence_epsilon {
            return Err(Error::CoincidentIterate);
        }
        let f = s.weight / d;
        den += f;
        for (n, x) in num.iter_mut().zip(s.coords) {
            *n += f * x;
        }
    }
    num.iter_mut().for_each(|n| *n /= den);
    Ok(Point::from_finite(num))
}

/// Index and cost of the support point with minimum weighted cost; ties go
/// to the lowest index.
pub fn best_support_index(support: &[Site<'_>]) -> Result<(usize, f64)> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut best = (0, f64::INFINITY);
    for (i, s) in support.iter().enumerate() {
        let c = weighted_cost(support, s.coords);
        if c < best.1 {
            best = (i, c);
        }
    }
    Ok(best)
}

/// The support point minimising the weighted cost, a 2-approximation of the
/// 1-median.
pub fn best_support_point(support: &[Site<'_>]) -> Result<Point> {
    let (i, _) = best_support_index(support)?;
    Ok(Point::from_finite(support[i].coords.to_vec()))
}

/// Approximates the weighted 1-median of `support`.
pub fn approximate_one_median(support: &[Site<'_>], cfg: &WeiszfeldConfig) -> Result<OneMedian> {
    let first = support.first().ok_or(Error::EmptySupport)?;
    if support.len() == 1 {
        return Ok(OneMedian {
            point: Point::from_finite(first.coords.to_vec()),
            cost: 0.0,
            iterations: 0,
            fallback: false,
        });
    }

    let mut y = center_of_gravity(support)?;
    let mut best_cost = weighted_cost(support, y.coords());
    let mut best = y.clone();
    let mut iterations = 0;
    let mut previous_step: Option<f64> = None;
    let mut fallback = false;

    while iterations < cfg.max_iterations {
        let next = match weiszfeld_step(support, y.coords(), cfg.coincidence_epsilon) {
            Ok(next) => next,
            Err(Error::CoincidentIterate) => {
                fallback = true;
                break;
            }
            Err(e) => return Err(e),
        };
        iterations += 1;
        let step = next.distance(&y);
        y = next;
        let cost = weighted_cost(support, y.coords());
        if cost < best_cost {
            best_cost = cost;
            best = y.clone();
        }
        if step < cfg.coincidence_epsilon {
            break;
        }
        if let Some(prev) = previous_step {
            if step / prev > cfg.ratio_threshold {
                break;
            }
        }
        previous_step = Some(step);
    }

    // Large supports skip the quadratic scan; there the coincident iterate
    // itself (already in `best`) is the fallback candidate.
    if support.len() <= SUPPORT_SCAN_LIMIT {
        let (i, cost) = best_support_index(support)?;
        if fallback || cost < best_cost {
            best_cost = cost;
            best = Point::from_finite(support[i].coords.to_vec());
        }
    }

    Ok(OneMedian {
        point: best,
        cost: best_cost,
        iterations,
        fallback,
    })
}

/// 1-median representative of a node; it carries the node's effective weight.
pub fn node_one_median<N: WeightedNode + ?Sized>(
    v: &N,
    cfg: &WeiszfeldConfig,
) -> Result<WeightedPoint> {
    let weight = v.effective_weight();
    let support: Vec<Site<'_>> = v
        .node()
        .realizations()
        .iter()
        .map(|r| Site::new(r.point().coords(), weight * r.probability()))
        .collect();
    let median = approximate_one_median(&support, cfg)?;
    WeightedPoint::new(median.point, weight)
}

/// Exhaustive grid search for the weighted 1-median, for `d <= 3`.
///
/// A coarse grid of about 2^16 points covers the bounding box; a second grid
/// with spacing `resolution` then covers one coarse cell around the best
/// coarse point. Meant as a test oracle, not for production use.
pub fn brute_force_one_median(support: &[Site<'_>], resolution: f64) -> Result<Point> {
    let first = support.first().ok_or(Error::EmptySupport)?;
    let dim = first.coords.len();
    if dim > 3 {
        return Err(Error::DimensionTooLarge(dim));
    }
    if !(resolution > 0.0) {
        return Err(Error::InvalidConfig("resolution must be positive"));
    }
    let mut lo = first.coords.to_vec();
    let mut hi = first.coords.to_vec();
    for s in support {
        for i in 0..dim {
            lo[i] = lo[i].min(s.coords[i]);
            hi[i] = hi[i].max(s.coords[i]);
        }
    }

    let per_axis = match dim {
        1 => 65_536,
        2 => 256,
        _ => 40,
    };
    let coarse: Vec<f64> = (0..dim)
        .map(|i| ((hi[i] - lo[i]) / per_axis as f64).max(resolution))
        .collect();
    let (best, _) = grid_search(support, &lo, &hi, &coarse);

    let fine_lo: Vec<f64> = (0..dim).map(|i| (best[i] - coarse[i]).max(lo[i])).collect();
    let fine_hi: Vec<f64> = (0..dim).map(|i| (best[i] + coarse[i]).min(hi[i])).collect();
    let fine = vec![resolution; dim];
    let (refined, _) = grid_search(support, &fine_lo, &fine_hi, &fine);
    Ok(Point::from_finite(refined))
}

fn grid_search(support: &[Site<'_>], lo: &[f64], hi: &[f64], step: &[f64]) -> (Vec<f64>, f64) {
    let dim = lo.len();
    let counts: Vec<usize> = (0..dim)
        .map(|i| libm::floor((hi[i] - lo[i]) / step[i] + 1e-9) as usize + 1)
        .collect();
    let mut index = vec![0usize; dim];
    let mut y = lo.to_vec();
    let mut best = (lo.to_vec(), f64::INFINITY);
    loop {
        for i in 0..dim {
            y[i] = (lo[i] + index[i] as f64 * step[i]).min(hi[i]);
        }
        let c = weighted_cost(support, &y);
        if c < best.1 {
            best = (y.clone(), c);
        }
        // odometer increment
        let mut axis = 0;
        loop {
            if axis == dim {
                return best;
            }
            index[axis] += 1;
            if index[axis] < counts[axis] {
                break;
            }
            index[axis] = 0;
            axis += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ProbabilisticNode, Realization};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn owned(points: &[(&[f64], f64)]) -> Vec<(Vec<f64>, f64)> {
        points.iter().map(|(c, w)| (c.to_vec(), *w)).collect()
    }

    fn view(points: &[(Vec<f64>, f64)]) -> Vec<Site<'_>> {
        points.iter().map(|(c, w)| Site::new(c, *w)).collect()
    }

    #[test]
    fn step_examples() {
        let pts = owned(&[(&[0.0, 0.0], 1.0), (&[2.0, 0.0], 1.0)]);
        let next = weiszfeld_step(&view(&pts), &[1.0, 0.0], 1e-12).unwrap();
        assert_eq!(next.coords(), &[1.0, 0.0]);

        let single = owned(&[(&[0.0, 0.0], 1.0)]);
        assert_eq!(
            weiszfeld_step(&view(&single), &[1.0, 0.0], 1e-12)
                .unwrap()
                .coords(),
            &[0.0, 0.0]
        );
        assert_eq!(
            weiszfeld_step(&view(&single), &[0.0, 0.0], 1e-12),
            Err(Error::CoincidentIterate)
        );
    }

    #[test]
    fn step_from_centroid_of_three_collinear_points() {
        // Hand evaluation at y = 11/3: distances 11/3, 8/3, 19/3, so
        // y' = (0 + 3/8 + 30/19) / (3/11 + 3/8 + 3/19).
        let pts = owned(&[(&[0.0, 0.0], 1.0), (&[1.0, 0.0], 1.0), (&[10.0, 0.0], 1.0)]);
        let y = 11.0 / 3.0;
        let expected = (3.0 / 8.0 + 30.0 / 19.0) / (3.0 / 11.0 + 3.0 / 8.0 + 3.0 / 19.0);
        let next = weiszfeld_step(&view(&pts), &[y, 0.0], 1e-12).unwrap();
        assert!((next.coords()[0] - expected).abs() < 1e-12);
        assert!((next.coords()[0] - 1.0).abs() < (y - 1.0).abs());
    }

    #[test]
    fn one_median_examples() {
        let cfg = WeiszfeldConfig::default();
        let single = owned(&[(&[5.0, 5.0], 1.0)]);
        let m = approximate_one_median(&view(&single), &cfg).unwrap();
        assert_eq!(
            (m.point.coords(), m.iterations, m.fallback),
            (&[5.0, 5.0][..], 0, false)
        );

        let pair = owned(&[(&[0.0, 0.0], 1.0), (&[2.0, 0.0], 1.0)]);
        let m = approximate_one_median(&view(&pair), &cfg).unwrap();
        assert_eq!(m.point.coords(), &[1.0, 0.0]);
        assert!(m.iterations <= 1 && !m.fallback);

        let three = owned(&[(&[0.0, 0.0], 1.0), (&[1.0, 0.0], 1.0), (&[10.0, 0.0], 1.0)]);
        let m = approximate_one_median(&view(&three), &cfg).unwrap();
        assert!(m.cost <= 1.001 * 10.0, "cost {}", m.cost);
        assert!(!m.fallback);
    }

    #[test]
    fn coincident_centroid_falls_back_to_best_support_point() {
        let pts = owned(&[(&[0.0], 1.0), (&[1.0], 1.0), (&[2.0], 1.0)]);
        let m = approximate_one_median(&view(&pts), &WeiszfeldConfig::default()).unwrap();
        assert!(m.fallback);
        assert_eq!(m.point.coords(), &[1.0]);
        assert_eq!(m.cost, 2.0);
    }

    #[test]
    fn best_support_point_examples() {
        let three = owned(&[(&[0.0, 0.0], 1.0), (&[1.0, 0.0], 1.0), (&[10.0, 0.0], 1.0)]);
        // candidate sums: 0 -> 11, 1 -> 10, 10 -> 19
        assert_eq!(
            best_support_point(&view(&three)).unwrap().coords(),
            &[1.0, 0.0]
        );
        let one = owned(&[(&[7.0, 7.0], 3.0)]);
        assert_eq!(
            best_support_point(&view(&one)).unwrap().coords(),
            &[7.0, 7.0]
        );
        let heavy = owned(&[(&[0.0, 0.0], 1.0), (&[4.0, 0.0], 100.0)]);
        assert_eq!(
            best_support_point(&view(&heavy)).unwrap().coords(),
            &[4.0, 0.0]
        );
        assert_eq!(best_support_point(&[]), Err(Error::EmptySupport));
        assert_eq!(
            approximate_one_median(&[], &WeiszfeldConfig::default()),
            Err(Error::EmptySupport)
        );
    }

    #[test]
    fn node_one_median_examples() {
        let cfg = WeiszfeldConfig::default();
        let v = ProbabilisticNode::certain("a", 3.0, Point::new(vec![0.0, 0.0]).unwrap()).unwrap();
        let y = node_one_median(&v, &cfg).unwrap();
        assert_eq!((y.point.coords(), y.weight), (&[0.0, 0.0][..], 3.0));

        let v = ProbabilisticNode::uniform(
            "b",
            1.0,
            vec![
                Point::new(vec![0.0, 0.0]).unwrap(),
                Point::new(vec![2.0, 0.0]).unwrap(),
            ],
        )
        .unwrap();
        let y = node_one_median(&v, &cfg).unwrap();
        assert_eq!((y.point.coords(), y.weight), (&[1.0, 0.0][..], 1.0));
    }

    #[test]
    fn node_one_median_close_to_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pts: Vec<Point> = (0..5)
                .map(|_| Point::new(vec![rng.random::<f64>(), rng.random::<f64>()]).unwrap())
                .collect();
            let v = ProbabilisticNode::uniform("v", 1.0, pts).unwrap();
            let y = node_one_median(&v, &WeiszfeldConfig::default()).unwrap();
            let support: Vec<Site<'_>> = v
                .realizations()
                .iter()
                .map(|r| Site::new(r.point().coords(), r.probability()))
                .collect();
            let oracle = brute_force_one_median(&support, 1e-3).unwrap();
            let got = crate::model::expected_node_cost(&v, &y.point);
            let best = crate::model::expected_node_cost(&v, &oracle);
            assert!(got <= best * 1.01, "{got} vs {best}");
        }
    }

    #[test]
    fn brute_force_examples() {
        let pair = owned(&[(&[0.0, 0.0], 1.0), (&[2.0, 0.0], 1.0)]);
        let p = brute_force_one_median(&view(&pair), 0.01).unwrap();
        assert!((weighted_cost(&view(&pair), p.coords()) - 2.0).abs() < 0.02);

        let three = owned(&[(&[0.0, 0.0], 1.0), (&[1.0, 0.0], 1.0), (&[10.0, 0.0], 1.0)]);
        let p = brute_force_one_median(&view(&three), 1e-3).unwrap();
        assert!(p.distance(&Point::new(vec![1.0, 0.0]).unwrap()) <= 1e-3);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let six: Vec<(Vec<f64>, f64)> = (0..6)
            .map(|_| (vec![rng.random::<f64>(), rng.random::<f64>()], 1.0))
            .collect();
        let s = view(&six);
        let oracle_cost = weighted_cost(&s, brute_force_one_median(&s, 1e-3).unwrap().coords());
        for site in &s {
            assert!(oracle_cost <= weighted_cost(&s, site.coords));
        }

        let four_d = owned(&[(&[0.0, 0.0, 0.0, 0.0], 1.0)]);
        assert_eq!(
            brute_force_one_median(&view(&four_d), 0.1),
            Err(Error::DimensionTooLarge(4))
        );
    }

    #[test]
    fn symmetric_instance_terminates_at_first_step() {
        let square = owned(&[
            (&[1.0, 1.0], 2.0),
            (&[-1.0, 1.0], 2.0),
            (&[-1.0, -1.0], 2.0),
            (&[1.0, -1.0], 2.0),
        ]);
        let m = approximate_one_median(&view(&square), &WeiszfeldConfig::default()).unwrap();
        assert_eq!(m.iterations, 1);
        assert!(m.point.coords().iter().all(|c| c.abs() < 1e-9));
    }

    #[test]
    fn config_validation() {
        assert!(WeiszfeldConfig::default().validate().is_ok());
        let bad = WeiszfeldConfig {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = WeiszfeldConfig {
            ratio_threshold: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn realization_weights_enter_the_median() {
        // w_ij = w_i * p_ij: the heavy realization pulls the median onto itself.
        let v = ProbabilisticNode::new(
            "v",
            5.0,
            vec![
                Realization::new(Point::new(vec![0.0]).unwrap(), 0.9).unwrap(),
                Realization::new(Point::new(vec![1.0]).unwrap(), 0.05).unwrap(),
                Realization::new(Point::new(vec![2.0]).unwrap(), 0.05).unwrap(),
            ],
        )
        .unwrap();
        let y = node_one_median(&v, &WeiszfeldConfig::default()).unwrap();
        assert_eq!(y.point.coords(), &[0.0]);
        assert_eq!(y.weight, 5.0);
    }
}

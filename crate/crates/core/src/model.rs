//! Domain types and the expected-cost arithmetic shared by every module.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// Slack allowed on a node's total probability to absorb decimal round-off.
pub const PROBABILITY_SLACK: f64 = 1e-9;

/// A point in `R^d` with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyPoint);
        }
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, c)| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index, value });
        }
        Ok(Point(coords))
    }

    /// Origin of `R^d`.
    pub fn zeros(dim: usize) -> Result<Self> {
        Point::new(alloc::vec![0.0; dim])
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean distance; dimensions must agree (checked in debug builds).
    #[inline]
    pub fn distance(&self, other: &Point) -> f64 {
        distance(&self.0, &other.0)
    }

    /// Builds a point from coordinates that are already known to be finite,
    /// e.g. convex combinations of valid points.
    pub(crate) fn from_finite(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Point(coords)
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    libm::sqrt(acc)
}

/// One possible location of a node together with its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    point: Point,
    probability: f64,
}

impl Realization {
    pub fn new(point: Point, probability: f64) -> Result<Self> {
        if !(probability > 0.0 && probability <= 1.0) {
            return Err(Error::InvalidProbability(probability));
        }
        Ok(Realization { point, probability })
    }

    #[inline]
    pub fn point(&self) -> &Point {
        &self.point
    }

    #[inline]
    pub fn probability(&self) -> f64 {
        self.probability
    }
}

/// An uncertain point: a discrete distribution over locations plus a weight.
///
/// The total probability may be below one (the node may fail to realize).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilisticNode {
    id: String,
    weight: f64,
    realizations: Vec<Realization>,
    total_probability: f64,
}

impl ProbabilisticNode {
    pub fn new(id: impl Into<String>, weight: f64, realizations: Vec<Realization>) -> Result<Self> {
        let id = id.into();
        check_weight(weight)?;
        let first = realizations
            .first()
            .ok_or_else(|| Error::EmptyNode(id.clone()))?;
        let dim = first.point.dim();
        let mut total = 0.0;
        for r in &realizations {
            if r.point.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.point.dim(),
                });
            }
            total += r.probability;
        }
        if total > 1.0 + PROBABILITY_SLACK {
            return Err(Error::TotalProbabilityExceeded(total));
        }
        Ok(ProbabilisticNode {
            id,
            weight,
            realizations,
            total_probability: total,
        })
    }

    /// A node that realizes at `point` with probability one.
    pub fn certain(id: impl Into<String>, weight: f64, point: Point) -> Result<Self> {
        ProbabilisticNode::new(id, weight, alloc::vec![Realization::new(point, 1.0)?])
    }

    /// A node with equal probability `1/m` on each of the `m` points.
    pub fn uniform(id: impl Into<String>, weight: f64, points: Vec<Point>) -> Result<Self> {
        let p = 1.0 / points.len().max(1) as f64;
        let realizations = points
            .into_iter()
            .map(|x| Realization::new(x, p))
            .collect::<Result<Vec<_>>>()?;
        ProbabilisticNode::new(id, weight, realizations)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    #[inline]
    pub fn weight(&self) -> f64 {
        self.weight
    }

    #[inline]
    pub fn realizations(&self) -> &[Realization] {
        &self.realizations
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.realizations[0].point.dim()
    }

    /// `p_i`, the probability that the node is realized at all.
    #[inline]
    pub fn total_probability(&self) -> f64 {
        self.total_probability
    }
}

pub(crate) fn check_weight(weight: f64) -> Result<()> {
    if weight > 0.0 && weight.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidWeight(weight))
    }
}

/// A deterministic point with a positive weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPoint {
    pub point: Point,
    pub weight: f64,
}

impl WeightedPoint {
    pub fn new(point: Point, weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(WeightedPoint { point, weight })
    }
}

/// A node of a summary, carrying the weight it stands for in the summary.
///
/// The node itself is shared: samples drawn with replacement point at the
/// same allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CoresetNode {
    node: Arc<ProbabilisticNode>,
    coreset_weight: f64,
}

impl CoresetNode {
    pub fn new(node: Arc<ProbabilisticNode>, coreset_weight: f64) -> Result<Self> {
        check_weight(coreset_weight)?;
        Ok(CoresetNode {
            node,
            coreset_weight,
        })
    }

    /// Wraps an input node; its summary weight is its own weight.
    pub fn raw(node: ProbabilisticNode) -> Self {
        let coreset_weight = node.weight;
        CoresetNode {
            node: Arc::new(node),
            coreset_weight,
        }
    }

    pub(crate) fn with_weight(node: Arc<ProbabilisticNode>, coreset_weight: f64) -> Self {
        debug_assert!(coreset_weight > 0.0);
        CoresetNode {
            node,
            coreset_weight,
        }
    }

    #[inline]
    pub fn node(&self) -> &ProbabilisticNode {
        &self.node
    }

    pub fn shared(&self) -> &Arc<ProbabilisticNode> {
        &self.node
    }

    #[inline]
    pub fn coreset_weight(&self) -> f64 {
        self.coreset_weight
    }
}

/// Anything that can be clustered: a node plus the weight it contributes.
///
/// Raw input contributes its own weight, summary nodes their coreset weight.
pub trait WeightedNode {
    fn node(&self) -> &ProbabilisticNode;
    fn effective_weight(&self) -> f64;
}

impl WeightedNode for ProbabilisticNode {
    #[inline]
    fn node(&self) -> &ProbabilisticNode {
        self
    }
    #[inline]
    fn effective_weight(&self) -> f64 {
        self.weight
    }
}

impl WeightedNode for CoresetNode {
    #[inline]
    fn node(&self) -> &ProbabilisticNode {
        &self.node
    }
    #[inline]
    fn effective_weight(&self) -> f64 {
        self.coreset_weight
    }
}

impl<T: WeightedNode + ?Sized> WeightedNode for &T {
    #[inline]
    fn node(&self) -> &ProbabilisticNode {
        (**self).node()
    }
    #[inline]
    fn effective_weight(&self) -> f64 {
        (**self).effective_weight()
    }
}

/// A non-empty set of centers sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet(Vec<Point>);

impl CenterSet {
    pub fn new(centers: Vec<Point>) -> Result<Self> {
        let dim = centers.first().ok_or(Error::EmptyCenterSet)?.dim();
        if let Some(bad) = centers.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(CenterSet(centers))
    }

    pub(crate) fn from_nonempty(centers: Vec<Point>) -> Self {
        debug_assert!(!centers.is_empty());
        CenterSet(centers)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0[0].dim()
    }

    #[inline]
    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Point> {
        self.0.iter()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.0
    }

    /// Index of and distance to the nearest center; ties go to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.0.iter().enumerate() {
            let d = distance(x, c.coords());
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

impl<'a> IntoIterator for &'a CenterSet {
    type Item = &'a Point;
    type IntoIter = core::slice::Iter<'a, Point>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Euclidean distance between two points of equal dimension.
pub fn euclidean_distance(a: &Point, b: &Point) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.distance(b))
}

/// `Σ_j p_ij · dist(x_j, c)`, the unweighted expected distance of `v` to `c`.
pub fn expected_node_cost(v: &ProbabilisticNode, c: &Point) -> f64 {
    expected_cost_at(v, c.coords())
}

#[inline]
pub(crate) fn expected_cost_at(v: &ProbabilisticNode, c: &[f64]) -> f64 {
    v.realizations
        .iter()
        .map(|r| r.probability * distance(r.point.coords(), c))
        .sum()
}

/// Index and expected cost of the expected-nearest center.
pub(crate) fn nearest_expected(v: &ProbabilisticNode, centers: &CenterSet) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let cost = expected_cost_at(v, c.coords());
        if cost < best.1 {
            best = (i, cost);
        }
    }
    best
}

/// Center minimising the expected distance of `v`; ties go to the lowest index.
pub fn assign_expected_nearest(v: &ProbabilisticNode, centers: &CenterSet) -> usize {
    nearest_expected(v, centers).0
}

/// `Σ_i w_i · min_c E[dist(v_i, c)]` with each node assigned as a whole.
pub fn expected_clustering_cost<N: WeightedNode>(nodes: &[N], centers: &CenterSet) -> f64 {
    nodes
        .iter()
        .map(|n| n.effective_weight() * nearest_expected(n.node(), centers).1)
        .sum()
}

/// Probability-weighted mean of the realization points.
pub fn node_center_of_gravity(v: &ProbabilisticNode) -> Point {
    let mut acc = alloc::vec![0.0; v.dim()];
    for r in &v.realizations {
        for (a, x) in acc.iter_mut().zip(r.point.coords()) {
            *a += r.probability * x;
        }
    }
    let p = v.total_probability;
    acc.iter_mut().for_each(|a| *a /= p);
    Point::from_finite(acc)
}

/// Average distance of a node's realizations to `y`, renormalised by `p_i`.
pub fn node_spread(v: &ProbabilisticNode, y: &Point) -> f64 {
    expected_cost_at(v, y.coords()) / v.total_probability
}

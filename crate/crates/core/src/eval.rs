//! Summary-versus-full cost evaluation and statistics over repeated runs.

use alloc::vec::Vec;

use crate::model::{expected_clustering_cost, CenterSet, WeightedNode};
use crate::{Error, Result};

/// Cost of one solution on the summary and on the full data.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub k: usize,
    pub cost_on_summary: f64,
    pub cost_on_full: f64,
    /// `(cost_on_full - cost_on_summary) / cost_on_full`; positive when the
    /// summary under-estimates.
    pub rel_diff: f64,
    /// Set when `cost_on_full` is zero and `rel_diff` was forced to zero.
    pub degenerate: bool,
    pub runtime_coreset_ms: f64,
    pub runtime_solve_ms: f64,
    pub seed: u64,
    pub coreset_size: usize,
    pub node_count: usize,
}

/// Evaluates `centers` on a summary and on the data it summarises.
///
/// Timing fields and the seed are left at zero for the caller to fill in.
pub fn evaluate<S: WeightedNode, F: WeightedNode>(
    summary: &[S],
    full: &[F],
    centers: &CenterSet,
) -> EvalReport {
    let cost_on_summary = expected_clustering_cost(summary, centers);
    let cost_on_full = expected_clustering_cost(full, centers);
    let degenerate = !(cost_on_full > 0.0);
    let rel_diff = if degenerate {
        0.0
    } else {
        (cost_on_full - cost_on_summary) / cost_on_full
    };
    EvalReport {
        k: centers.len(),
        cost_on_summary,
        cost_on_full,
        rel_diff,
        degenerate,
        runtime_coreset_ms: 0.0,
        runtime_solve_ms: 0.0,
        seed: 0,
        coreset_size: summary.len(),
        node_count: full.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricStats {
    pub mean: f64,
    /// Lower middle element for an even number of runs.
    pub median: f64,
    /// Population standard deviation over `|mean|`; zero when the mean is zero.
    pub variance_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunStatistics {
    pub runs: usize,
    pub cost_on_summary: MetricStats,
    pub cost_on_full: MetricStats,
    pub rel_diff: MetricStats,
    pub runtime_coreset_ms: MetricStats,
    pub runtime_solve_ms: MetricStats,
    pub coreset_size: MetricStats,
}

pub fn summarize(values: &[f64]) -> Result<MetricStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[(sorted.len() - 1) / 2];
    let variance_coefficient = if mean != 0.0 {
        libm::sqrt(var) / libm::fabs(mean)
    } else {
        0.0
    };
    Ok(MetricStats {
        mean,
        median,
        variance_coefficient,
    })
}

/// Per-metric mean, median and variance coefficient over the reports.
pub fn aggregate(reports: &[EvalReport]) -> Result<RunStatistics> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let metric = |f: fn(&EvalReport) -> f64| summarize(&reports.iter().map(f).collect::<Vec<_>>());
    Ok(RunStatistics {
        runs: reports.len(),
        cost_on_summary: metric(|r| r.cost_on_summary)?,
        cost_on_full: metric(|r| r.cost_on_full)?,
        rel_diff: metric(|r| r.rel_diff)?,
        runtime_coreset_ms: metric(|r| r.runtime_coreset_ms)?,
        runtime_solve_ms: metric(|r| r.runtime_solve_ms)?,
        coreset_size: metric(|r| r.coreset_size as f64)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoresetNode, Point, ProbabilisticNode};
    use alloc::vec;

    fn certain(x: f64) -> ProbabilisticNode {
        ProbabilisticNode::certain("c", 1.0, Point::new(vec![x]).unwrap()).unwrap()
    }

    #[test]
    fn identity_summary_has_zero_rel_diff() {
        let full = [certain(0.0), certain(3.0), certain(7.0)];
        let centers = CenterSet::new(vec![Point::new(vec![1.0]).unwrap()]).unwrap();
        let r = evaluate(&full, &full, &centers);
        assert_eq!(r.rel_diff, 0.0);
        assert_eq!(r.cost_on_full, 1.0 + 2.0 + 6.0);
        assert!(!r.degenerate);
    }

    #[test]
    fn rel_diff_sign_and_degenerate_case() {
        let full = [certain(0.0), certain(2.0)];
        let summary = [CoresetNode::new(alloc::sync::Arc::new(certain(0.0)), 2.0).unwrap()];
        let centers = CenterSet::new(vec![Point::new(vec![0.0]).unwrap()]).unwrap();
        let r = evaluate(&summary, &full, &centers);
        assert_eq!(r.rel_diff, 1.0);

        let r = evaluate(&summary, &summary, &centers);
        assert!(r.degenerate);
        assert_eq!(r.rel_diff, 0.0);
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(&[4.5]).unwrap();
        assert_eq!((s.mean, s.median, s.variance_coefficient), (4.5, 4.5, 0.0));

        let s = summarize(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.median), (2.0, 2.0));
        assert!((s.variance_coefficient - (2.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
        assert!((s.variance_coefficient - 0.4082).abs() < 1e-4);

        assert_eq!(summarize(&[5.0; 4]).unwrap().variance_coefficient, 0.0);
        assert_eq!(summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap().median, 2.0);
        assert_eq!(summarize(&[]), Err(Error::EmptyInput));
        assert_eq!(aggregate(&[]), Err(Error::EmptyInput));
    }
}

//! One-dimensional compact Riemannian manifolds (finite disjoint unions of
//! intervals with a constant metric coefficient on each) and their uniform
//! subdivisions.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

/// Disjoint union of closed intervals `[a_α, b_α]`, each carrying the metric
/// `η_α dx ⊗ dx` with constant `η_α > 0`.
///
/// Boundary points are indexed `l = 0..2n` in the order `a_1, b_1, a_2, b_2, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalManifold {
    intervals: Vec<Interval>,
    metric: Vec<f64>,
}

impl IntervalManifold {
    pub fn new(intervals: &[(f64, f64)], metric: &[f64]) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::EmptyManifold);
        }
        if intervals.len() != metric.len() {
            return Err(Error::MetricLengthMismatch {
                intervals: intervals.len(),
                metric: metric.len(),
            });
        }
        for (index, &(a, b)) in intervals.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::DegenerateInterval { index, a, b });
            }
        }
        for (index, &value) in metric.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveMetric { index, value });
            }
        }
        Ok(Self {
            intervals: intervals.iter().map(|&(a, b)| Interval { a, b }).collect(),
            metric: metric.to_vec(),
        })
    }

    /// Euclidean metric on every interval.
    pub fn euclidean(intervals: &[(f64, f64)]) -> Result<Self> {
        Self::new(intervals, &vec![1.0; intervals.len()])
    }

    pub fn num_intervals(&self) -> usize {
        self.intervals.len()
    }

    /// Number of boundary points, `2n`.
    pub fn boundary_dim(&self) -> usize {
        2 * self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval(&self, alpha: usize) -> Interval {
        self.intervals[alpha]
    }

    pub fn metric(&self, alpha: usize) -> f64 {
        self.metric[alpha]
    }

    pub fn length(&self, alpha: usize) -> f64 {
        self.intervals[alpha].length()
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }

    /// Weight `W_α = 1/(2√η_α)` of the Sturm–Liouville form of the Laplacian.
    pub fn weight(&self, alpha: usize) -> f64 {
        0.5 / self.metric[alpha].sqrt()
    }

    /// Coefficient `p_α = 1/√η_α` of the Sturm–Liouville form of the Laplacian.
    pub fn stiffness_coefficient(&self, alpha: usize) -> f64 {
        1.0 / self.metric[alpha].sqrt()
    }

    /// Coordinate of boundary point `l`.
    pub fn boundary_point(&self, l: usize) -> f64 {
        let iv = self.intervals[l / 2];
        if l % 2 == 0 {
            iv.a
        } else {
            iv.b
        }
    }
}

/// Uniform subdivision of every interval of a manifold, driven by one global
/// resolution `N`: interval `α` gets `r_α = ⌊L_α N / L⌋ + 1` interior nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    manifold: IntervalManifold,
    resolution: usize,
    counts: Vec<usize>,
    steps: Vec<f64>,
    nodes: Vec<Vec<f64>>,
}

impl Mesh {
    pub fn new(manifold: &IntervalManifold, resolution: usize) -> Result<Self> {
        let n = manifold.num_intervals();
        if resolution < 2 * n {
            return Err(Error::ResolutionTooSmall {
                n: resolution,
                reason: format!("need N >= 2n = {}", 2 * n),
            });
        }
        let total = manifold.total_length();
        let mut counts = Vec::with_capacity(n);
        for alpha in 0..n {
            let x = manifold.length(alpha) * resolution as f64 / total;
            // absorb representation error of exact integer ratios
            let r = (x + x * 1e-12).floor() as usize + 1;
            if r < 2 {
                return Err(Error::ResolutionTooSmall {
                    n: resolution,
                    reason: format!("interval {alpha} gets r = {r} < 2 interior nodes"),
                });
            }
            counts.push(r);
        }
        let steps: Vec<f64> = counts
            .iter()
            .enumerate()
            .map(|(alpha, &r)| manifold.length(alpha) / (r + 1) as f64)
            .collect();
        let nodes = (0..n)
            .map(|alpha| {
                let iv = manifold.interval(alpha);
                let r = counts[alpha];
                let mut xs: Vec<f64> = (0..=r + 1).map(|k| iv.a + k as f64 * steps[alpha]).collect();
                xs[r + 1] = iv.b;
                xs
            })
            .collect();
        Ok(Self {
            manifold: manifold.clone(),
            resolution,
            counts,
            steps,
            nodes,
        })
    }

    pub fn manifold(&self) -> &IntervalManifold {
        &self.manifold
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Interior node counts `r_α`.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// Node coordinates `x_k`, `k = 0..=r_α+1`, of interval `alpha`.
    pub fn nodes(&self, alpha: usize) -> &[f64] {
        &self.nodes[alpha]
    }

    /// Dimension `|r| = Σ r_α` of the finite-element space.
    pub fn dimension(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Coordinate step of the subinterval touching boundary point `l`.
    pub fn boundary_step(&self, l: usize) -> f64 {
        self.steps[l / 2]
    }

    /// Metric length of the subinterval touching boundary point `l`; this is
    /// the step that enters normal derivatives at the boundary.
    pub fn boundary_metric_step(&self, l: usize) -> f64 {
        self.steps[l / 2] * self.manifold.metric(l / 2).sqrt()
    }

    pub fn boundary_metric_steps(&self) -> Vec<f64> {
        (0..self.manifold.boundary_dim())
            .map(|l| self.boundary_metric_step(l))
            .collect()
    }
}

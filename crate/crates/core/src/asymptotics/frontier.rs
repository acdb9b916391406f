//! Exact integrals of `e^{⟨λ,x⟩}` over unions of lower orthants
//! `∪_k {x < v_k}`, via the Pareto frontier of the anchor points.

use crate::error::{Error, Result};

/// Largest dimension with an exact union integral.
pub const MAX_FRONTIER_DIM: usize = 3;

/// Two-dimensional staircase: maximal points sorted by first coordinate
/// descending (second coordinate then strictly ascending).
#[derive(Debug, Clone, Default)]
pub struct Staircase {
    pts: Vec<(f64, f64)>,
}

impl Staircase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.pts
    }

    /// Inserts `(x, y)`; returns `false` if it is dominated.
    pub fn insert(&mut self, x: f64, y: f64) -> bool {
        // Number of points with first coordinate >= x.
        let ge = self.pts.partition_point(|p| p.0 >= x);
        if ge > 0 && self.pts[ge - 1].1 >= y {
            return false;
        }
        // Points from `start` on have first coordinate <= x; the dominated
        // ones form a contiguous run since the second coordinate ascends.
        let start = self.pts.partition_point(|p| p.0 > x);
        let end = start + self.pts[start..].partition_point(|p| p.1 <= y);
        self.pts.splice(start..end, std::iter::once((x, y)));
        true
    }

    /// `∫ 1{x ∈ ∪ orthants} e^{λ₁x₁ + λ₂x₂} dx`.
    pub fn exp_integral(&self, l1: f64, l2: f64) -> f64 {
        let mut sum = 0.0;
        let mut prev = 0.0;
        for &(x, y) in &self.pts {
            let ey = (l2 * y).exp();
            sum += (l1 * x).exp() * (ey - prev);
            prev = ey;
        }
        sum / (l1 * l2)
    }
}

/// Maximal points in any dimension, kept as an unordered list.
#[derive(Debug, Clone, Default)]
pub struct FrontierSet {
    pts: Vec<Vec<f64>>,
}

impl FrontierSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.pts
    }

    /// Inserts `p`; returns `false` if an existing point dominates it.
    pub fn insert(&mut self, p: &[f64]) -> bool {
        for j in 0..self.pts.len() {
            if dominates(&self.pts[j], p) {
                // Consecutive path points tend to share a dominator.
                self.pts.swap(0, j);
                return false;
            }
        }
        self.pts.retain(|q| !dominates(p, q));
        self.pts.push(p.to_vec());
        true
    }
}

#[inline]
fn dominates(q: &[f64], p: &[f64]) -> bool {
    q.iter().zip(p).all(|(a, b)| a >= b)
}

/// Incremental Pareto frontier of a path in `1..=3` dimensions (or more,
/// for membership queries only).
#[derive(Debug, Clone)]
pub enum PathFrontier {
    One(f64),
    Two(Staircase),
    Many(FrontierSet),
}

impl PathFrontier {
    pub fn new(dim: usize) -> Self {
        match dim {
            1 => PathFrontier::One(f64::NEG_INFINITY),
            2 => PathFrontier::Two(Staircase::new()),
            _ => PathFrontier::Many(FrontierSet::new()),
        }
    }

    #[inline]
    pub fn insert(&mut self, p: &[f64]) {
        match self {
            PathFrontier::One(m) => {
                if p[0] > *m {
                    *m = p[0];
                }
            }
            PathFrontier::Two(s) => {
                s.insert(p[0], p[1]);
            }
            PathFrontier::Many(f) => {
                f.insert(p);
            }
        }
    }

    /// Maximal points.
    pub fn points(&self) -> Vec<Vec<f64>> {
        match self {
            PathFrontier::One(m) if m.is_finite() => vec![vec![*m]],
            PathFrontier::One(_) => Vec::new(),
            PathFrontier::Two(s) => s.points().iter().map(|&(x, y)| vec![x, y]).collect(),
            PathFrontier::Many(f) => f.points().to_vec(),
        }
    }

    pub fn exp_integral(&self, lambda: &[f64]) -> Result<f64> {
        match self {
            PathFrontier::One(m) => Ok(if m.is_finite() { (lambda[0] * m).exp() / lambda[0] } else { 0.0 }),
            PathFrontier::Two(s) => Ok(s.exp_integral(lambda[0], lambda[1])),
            PathFrontier::Many(f) => {
                if lambda.len() != 3 {
                    return Err(Error::DimensionTooLarge { dim: lambda.len(), max: MAX_FRONTIER_DIM });
                }
                Ok(sweep3(f.points(), lambda))
            }
        }
    }
}

/// Plane sweep along the third coordinate: between consecutive heights the
/// cross-section is the 2-D union of the points above.
fn sweep3(points: &[Vec<f64>], lambda: &[f64]) -> f64 {
    let mut order: Vec<&Vec<f64>> = points.iter().collect();
    order.sort_by(|a, b| b[2].total_cmp(&a[2]));
    let mut stair = Staircase::new();
    let mut total = 0.0;
    for (k, p) in order.iter().enumerate() {
        stair.insert(p[0], p[1]);
        let area = stair.exp_integral(lambda[0], lambda[1]);
        let top = (lambda[2] * p[2]).exp();
        let bottom = order.get(k + 1).map_or(0.0, |q| (lambda[2] * q[2]).exp());
        total += area * (top - bottom);
    }
    total / lambda[2]
}

/// `∫ 1{x ∈ ∪_k {x < v_k}} e^{⟨λ,x⟩} dx` for anchor points `v_k` in
/// dimension `1..=3`.
pub fn frontier_exp_integral(points: &[Vec<f64>], lambda: &[f64]) -> Result<f64> {
    let d = lambda.len();
    if d == 0 || d > MAX_FRONTIER_DIM {
        return Err(Error::DimensionTooLarge { dim: d, max: MAX_FRONTIER_DIM });
    }
    if let Some(&l) = lambda.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::NonPositiveLambda(l));
    }
    if points.is_empty() {
        return Err(Error::DomainError("no anchor points".into()));
    }
    let mut frontier = PathFrontier::new(d);
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch(format!("point has length {}, expected {d}", p.len())));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("anchor points must be finite".into()));
        }
        frontier.insert(p);
    }
    frontier.exp_integral(lambda)
}

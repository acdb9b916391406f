//! Bounded random trend `η`, independent of the Brownian driver.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{map_chunks, StreamKey, CHUNK_SIZE};

const PROB_SUM_TOLERANCE: f64 = 1e-12;
/// Largest atom count that is summed exactly rather than sampled.
pub const MAX_EXACT_ATOMS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub value: Vec<f64>,
    pub prob: f64,
}

/// Law of the trend vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrendDistribution {
    PointMass {
        c: Vec<f64>,
    },
    /// Independent Bernoulli components with success probabilities `p`.
    Bernoulli {
        p: Vec<f64>,
    },
    UniformBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Discrete {
        atoms: Vec<Atom>,
    },
}

impl TrendDistribution {
    pub fn zero(dim: usize) -> Self {
        TrendDistribution::PointMass { c: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrendDistribution::PointMass { c } => c.len(),
            TrendDistribution::Bernoulli { p } => p.len(),
            TrendDistribution::UniformBox { lo, .. } => lo.len(),
            TrendDistribution::Discrete { atoms } => atoms.first().map_or(0, |a| a.value.len()),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let finite = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != dim {
                return Err(Error::InvalidTrend(format!("{what} has length {}, expected {dim}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidTrend(format!("{what} has non-finite entries")));
            }
            Ok(())
        };
        match self {
            TrendDistribution::PointMass { c } => finite(c, "point mass")?,
            TrendDistribution::Bernoulli { p } => {
                finite(p, "bernoulli p")?;
                if p.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
                    return Err(Error::InvalidTrend("bernoulli p must lie in [0, 1]".into()));
                }
            }
            TrendDistribution::UniformBox { lo, hi } => {
                finite(lo, "uniform lo")?;
                finite(hi, "uniform hi")?;
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::InvalidTrend("uniform box needs lo <= hi".into()));
                }
            }
            TrendDistribution::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidTrend("discrete law has no atoms".into()));
                }
                let mut total = 0.0;
                for atom in atoms {
                    finite(&atom.value, "atom")?;
                    if !(atom.prob >= 0.0 && atom.prob.is_finite()) {
                        return Err(Error::InvalidTrend("atom probabilities must be >= 0".into()));
                    }
                    total += atom.prob;
                }
                if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
                    return Err(Error::InvalidTrend(format!(
                        "atom probabilities sum to {total}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Bounding box `(K₁, K₂)` of the support.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            TrendDistribution::PointMass { c } => (c.clone(), c.clone()),
            TrendDistribution::Bernoulli { p } => (vec![0.0; p.len()], vec![1.0; p.len()]),
            TrendDistribution::UniformBox { lo, hi } => (lo.clone(), hi.clone()),
            TrendDistribution::Discrete { atoms } => {
                let d = self.dim();
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for atom in atoms {
                    for i in 0..d {
                        lo[i] = lo[i].min(atom.value[i]);
                        hi[i] = hi[i].max(atom.value[i]);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            TrendDistribution::PointMass { c } => c.clone(),
            TrendDistribution::Bernoulli { p } => p.clone(),
            TrendDistribution::UniformBox { lo, hi } => {
                lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect()
            }
            TrendDistribution::Discrete { atoms } => {
                let mut m = vec![0.0; self.dim()];
                for atom in atoms {
                    for (mi, v) in m.iter_mut().zip(&atom.value) {
                        *mi += atom.prob * v;
                    }
                }
                m
            }
        }
    }

    /// Law of `s · η`.
    pub fn scaled(&self, s: f64) -> TrendDistribution {
        let sc = |v: &[f64]| v.iter().map(|x| x * s).collect::<Vec<_>>();
        match self {
            TrendDistribution::PointMass { c } => TrendDistribution::PointMass { c: sc(c) },
            TrendDistribution::Bernoulli { p } => {
                if s == 1.0 {
                    self.clone()
                } else {
                    // Values move from {0,1} to {0,s}; keep the law exact.
                    TrendDistribution::Discrete {
                        atoms: bernoulli_atoms(p)
                            .into_iter()
                            .map(|a| Atom { value: sc(&a.value), prob: a.prob })
                            .collect(),
                    }
                }
            }
            TrendDistribution::UniformBox { lo, hi } => {
                let (a, b) = (sc(lo), sc(hi));
                let (lo, hi) = a.iter().zip(&b).map(|(x, y)| (x.min(*y), x.max(*y))).unzip();
                TrendDistribution::UniformBox { lo, hi }
            }
            TrendDistribution::Discrete { atoms } => TrendDistribution::Discrete {
                atoms: atoms.iter().map(|a| Atom { value: sc(&a.value), prob: a.prob }).collect(),
            },
        }
    }

    /// Atoms with positive probability when the law is finitely supported
    /// with at most [`MAX_EXACT_ATOMS`] atoms.
    pub fn finite_atoms(&self) -> Option<Vec<Atom>> {
        match self {
            TrendDistribution::PointMass { c } => Some(vec![Atom { value: c.clone(), prob: 1.0 }]),
            TrendDistribution::Bernoulli { p } => {
                let nonzero = p.iter().filter(|&&q| q > 0.0 && q < 1.0).count();
                if nonzero > MAX_EXACT_ATOMS.trailing_zeros() as usize {
                    None
                } else {
                    Some(bernoulli_atoms(p))
                }
            }
            TrendDistribution::UniformBox { lo, hi } => {
                if lo == hi {
                    Some(vec![Atom { value: lo.clone(), prob: 1.0 }])
                } else {
                    None
                }
            }
            TrendDistribution::Discrete { atoms } => {
                let kept: Vec<Atom> = atoms.iter().filter(|a| a.prob > 0.0).cloned().collect();
                (kept.len() <= MAX_EXACT_ATOMS).then_some(kept)
            }
        }
    }

    /// Draws one vector into `out`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            TrendDistribution::PointMass { c } => out.copy_from_slice(c),
            TrendDistribution::Bernoulli { p } => {
                for (o, &q) in out.iter_mut().zip(p) {
                    *o = if rng.random::<f64>() < q { 1.0 } else { 0.0 };
                }
            }
            TrendDistribution::UniformBox { lo, hi } => {
                for ((o, l), h) in out.iter_mut().zip(lo).zip(hi) {
                    *o = l + (h - l) * rng.random::<f64>();
                }
            }
            TrendDistribution::Discrete { atoms } => {
                let target: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = atoms.last().expect("validated non-empty");
                for atom in atoms {
                    acc += atom.prob;
                    if target < acc {
                        chosen = atom;
                        break;
                    }
                }
                out.copy_from_slice(&chosen.value);
            }
        }
    }
}

/// The `2^k` atoms of independent Bernoulli components, skipping components
/// with `p ∈ {0, 1}` and zero-probability atoms.
fn bernoulli_atoms(p: &[f64]) -> Vec<Atom> {
    let mut atoms = vec![Atom { value: Vec::with_capacity(p.len()), prob: 1.0 }];
    for &q in p {
        let mut next = Vec::with_capacity(atoms.len() * 2);
        for atom in atoms {
            if q < 1.0 {
                let mut v = atom.value.clone();
                v.push(0.0);
                next.push(Atom { value: v, prob: atom.prob * (1.0 - q) });
            }
            if q > 0.0 {
                let mut v = atom.value;
                v.push(1.0);
                next.push(Atom { value: v, prob: atom.prob * q });
            }
        }
        atoms = next;
    }
    atoms
}

/// `n` i.i.d. draws from the trend law, one row each.
///
/// Uses its own stream family, so it never shares randomness with path or
/// tail sampling under the same master seed.
pub fn sample_trend(trend: &TrendDistribution, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let d = trend.dim();
    trend.validate(d)?;
    let key = StreamKey::new(seed, "trend.sample");
    let rows = map_chunks(n, CHUNK_SIZE, |c, _start, len| {
        let mut rng = key.stream(c as u64);
        let mut out = vec![0.0; len * d];
        for row in out.chunks_mut(d.max(1)) {
            trend.draw(&mut rng, row);
        }
        out
    });
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(n, d, &flat))
}

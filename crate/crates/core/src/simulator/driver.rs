//! Shared path generation for all simulation estimators.

use rand_distr::{Distribution, StandardNormal};

use super::scenario::RuinScenario;
use crate::paths::GridWalk;
use crate::rng::{PathRng, StreamKey};

/// Generates the paths `X(t_k) = W(t_k) - η t_k + μ t_k`, `t_k = k/n_steps`,
/// of a scenario, where `μ` is an optional extra drift.
///
/// Path `i` draws its trend from stream `i` of the trend family and its
/// Gaussian increments from stream `i` of the path family, so a path is the
/// same whatever the chunking and whatever else is computed from it.
pub(crate) struct PathDriver<'a> {
    scenario: &'a RuinScenario,
    chol: Vec<f64>,
    extra_drift: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    path_key: StreamKey,
    trend_key: StreamKey,
}

/// Per-path scratch buffers.
pub(crate) struct PathState {
    pub x: Vec<f64>,
    pub eta: Vec<f64>,
    z: Vec<f64>,
    drift: Vec<f64>,
    walk: GridWalk,
    rng: PathRng,
}

impl<'a> PathDriver<'a> {
    pub fn new(scenario: &'a RuinScenario, steps_per_unit: usize, extra_drift: Option<Vec<f64>>) -> Self {
        let d = scenario.dim();
        let steps = ((steps_per_unit as f64) * scenario.horizon).round().max(1.0) as usize;
        Self {
            scenario,
            chol: scenario.model.chol_rows(),
            extra_drift: extra_drift.unwrap_or_else(|| vec![0.0; d]),
            dt: scenario.horizon / steps as f64,
            steps,
            path_key: StreamKey::new(scenario.master_seed, "sim.paths"),
            trend_key: StreamKey::new(scenario.master_seed, "sim.trend"),
        }
    }

    pub fn state(&self) -> PathState {
        let d = self.scenario.dim();
        PathState {
            x: vec![0.0; d],
            eta: vec![0.0; d],
            z: vec![0.0; d],
            drift: vec![0.0; d],
            walk: GridWalk::new(&self.chol, d, &vec![0.0; d], self.dt),
            rng: self.path_key.path_rng(0),
        }
    }

    /// Resets `st` to the start of path `index`: draws `η` and sets `X(0) = 0`.
    pub fn begin(&self, index: u64, st: &mut PathState) {
        let mut trend_rng = self.trend_key.stream(index);
        self.scenario.trend.draw(&mut trend_rng, &mut st.eta);
        for ((dr, e), m) in st.drift.iter_mut().zip(&st.eta).zip(&self.extra_drift) {
            *dr = m - e;
        }
        st.walk.set_drift(&st.drift, self.dt);
        st.x.iter_mut().for_each(|v| *v = 0.0);
        st.rng = self.path_key.path_rng(index);
    }

    /// Runs the path until `X(t_k) > b` componentwise and returns `k`, or
    /// `None` if the grid ends first. `st.x` holds the last visited point.
    pub fn first_crossing(&self, st: &mut PathState, b: &[f64]) -> Option<usize> {
        if self.scenario.dim() == 1 {
            let (sd, drift, b0) = (self.chol[0] * self.dt.sqrt(), st.drift[0] * self.dt, b[0]);
            let mut x = 0.0;
            for k in 1..=self.steps {
                let z: f64 = StandardNormal.sample(&mut st.rng);
                x += sd * z + drift;
                if x > b0 {
                    st.x[0] = x;
                    return Some(k);
                }
            }
            st.x[0] = x;
            return None;
        }
        for k in 1..=self.steps {
            self.advance(st);
            if above(&st.x, b) {
                return Some(k);
            }
        }
        None
    }

    /// Advances to the next grid point.
    #[inline]
    pub fn advance(&self, st: &mut PathState) {
        st.walk.step(&mut st.rng, &mut st.z, &mut st.x);
    }
}

/// `x > b` componentwise.
#[inline]
pub(crate) fn above(x: &[f64], b: &[f64]) -> bool {
    x.iter().zip(b).all(|(xi, bi)| xi > bi)
}

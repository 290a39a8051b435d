//! Reduced-rank MIMO DFE with joint iterative optimization of a projection
//! matrix, a reduced-rank estimator and a feedback filter per stream.

mod batch;
mod snapshot;
mod stream;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modem::{decide, hard_decision};
use crate::numerics::{ComplexMatrix, ComplexVector};

pub use batch::{
    batch_cost, batch_design_iterate, ses, solve_feedback, solve_projection, solve_projection_with, solve_weights,
    BatchAccumulators, History, JioEstimate, Sample,
};
pub use stream::{init_state, JioStreamState, ObservationInverse, ProjectionGain};

/// Outputs of one detection pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// `Q(w_bar_j^H S_j^H y)` for every stream.
    pub tentative: Vec<Complex64>,
    /// `z_j` after feedback cancellation.
    pub z: Vec<Complex64>,
    /// `Q(z)`.
    pub decisions: Vec<Complex64>,
}

/// Detect with the current estimators: tentative decisions from the
/// feedforward outputs feed every stream's feedback filter.
pub fn detect_all(states: &[JioStreamState], y: &ComplexVector) -> Result<Detection> {
    let ff = states.iter().map(|s| s.feedforward(y)).collect::<Result<Vec<_>>>()?;
    let tentative = hard_decision(&ff);
    let z = states
        .iter()
        .map(|s| s.rr_output(y, &tentative))
        .collect::<Result<Vec<_>>>()?;
    let decisions = z.iter().copied().map(decide).collect();
    Ok(Detection {
        tentative,
        z,
        decisions,
    })
}

/// All `N_T` stream estimators plus the inverse correlation of `y` they
/// share.
#[derive(Debug, Clone, PartialEq)]
pub struct JioDfe {
    obs: ObservationInverse,
    streams: Vec<JioStreamState>,
    adapt: bool,
}

impl JioDfe {
    pub fn new(obs_len: usize, n_tx: usize, rank: usize, lambda: f64, delta: f64) -> Result<Self> {
        let streams = (0..n_tx)
            .map(|j| init_state(obs_len, n_tx, j, rank, lambda, delta))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            obs: ObservationInverse::new(obs_len, lambda, delta),
            streams,
            adapt: true,
        })
    }

    pub(crate) fn from_parts(obs: ObservationInverse, streams: Vec<JioStreamState>) -> Self {
        Self {
            obs,
            streams,
            adapt: true,
        }
    }

    pub fn n_tx(&self) -> usize {
        self.streams.len()
    }

    pub fn obs_len(&self) -> usize {
        self.obs.matrix().rows()
    }

    pub fn rank(&self) -> usize {
        self.streams[0].rank()
    }

    pub fn lambda(&self) -> f64 {
        self.obs.lambda()
    }

    pub fn streams(&self) -> &[JioStreamState] {
        &self.streams
    }

    pub fn stream_mut(&mut self, j: usize) -> &mut JioStreamState {
        &mut self.streams[j]
    }

    /// `P = R^{-1}` shared by all streams.
    pub fn observation_inverse(&self) -> &ComplexMatrix {
        self.obs.matrix()
    }

    /// Effective window length absorbed so far.
    pub fn window(&self) -> f64 {
        self.obs.window()
    }

    /// With adaptation off, `train_symbol` and `dd_symbol` only detect.
    pub fn set_adaptation(&mut self, on: bool) {
        self.adapt = on;
    }

    pub fn adaptation(&self) -> bool {
        self.adapt
    }

    pub fn detect(&self, y: &ComplexVector) -> Result<Detection> {
        if y.len() != self.obs_len() {
            return Err(Error::dim("JioDfe::detect", self.obs_len(), y.len()));
        }
        detect_all(&self.streams, y)
    }

    /// One joint update of every stream: projection first (using the
    /// previous `w_bar` and `f`), then the weights on the re-projected
    /// observation, then the feedback filter. `desired` drives the error
    /// and `regressor` fills the feedback input.
    pub fn adapt(&mut self, y: &ComplexVector, desired: &[Complex64], regressor: &[Complex64]) -> Result<()> {
        let n_tx = self.n_tx();
        if y.len() != self.obs_len() {
            return Err(Error::dim("JioDfe::adapt", self.obs_len(), y.len()));
        }
        if desired.len() != n_tx {
            return Err(Error::dim("JioDfe::adapt: desired symbols", n_tx, desired.len()));
        }
        let gain = self.obs.update(y);
        for (j, st) in self.streams.iter_mut().enumerate() {
            let others = st.others(regressor)?;
            st.rls_update_projection(&gain, y, desired[j], &others)?;
            let y_bar = st.project(y)?;
            st.rls_update_weights(&y_bar, desired[j], &others)?;
            st.rls_update_feedback(&others, desired[j], &y_bar)?;
        }
        if !self.obs.matrix().is_finite() || self.streams.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("JioDfe::adapt"));
        }
        Ok(())
    }

    /// Training step: the known symbols are both the target and the
    /// feedback regressor.
    pub fn train_symbol(&mut self, y: &ComplexVector, truth: &[Complex64]) -> Result<Detection> {
        let det = self.detect(y)?;
        if self.adapt {
            self.adapt(y, truth, truth)?;
        }
        Ok(det)
    }

    /// Decision-directed step: target `Q(z)`, feedback regressor the
    /// tentative feedforward decisions.
    pub fn dd_symbol(&mut self, y: &ComplexVector) -> Result<Detection> {
        let det = self.detect(y)?;
        if self.adapt {
            self.adapt(y, &det.decisions, &det.tentative)?;
        }
        Ok(det)
    }

    /// Detect and adapt; `training = Some(truth)` selects training mode.
    pub fn process(&mut self, y: &ComplexVector, training: Option<&[Complex64]>) -> Result<Vec<Complex64>> {
        let det = match training {
            Some(truth) => self.train_symbol(y, truth)?,
            None => self.dd_symbol(y)?,
        };
        Ok(det.decisions)
    }
}

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, ComplexVector, ONE, ZERO};
use crate::rls::InverseCorrelation;

/// Gain shared by every stream's projection update: all streams see the
/// same received vector, so `P = R^{-1}` and its Kalman gain are common.
#[derive(Debug, Clone)]
pub struct ProjectionGain {
    /// `k[i] = lambda^{-1} P[i-1] y / (1 + lambda^{-1} y^H P[i-1] y)`.
    pub k: ComplexVector,
    /// Effective window length `c[i] = sum_{l<=i} lambda^(i-l)`.
    pub window: f64,
}

/// Inverse correlation of the received vector plus its effective window.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationInverse {
    inv: InverseCorrelation,
    window: f64,
}

impl ObservationInverse {
    pub fn new(obs_len: usize, lambda: f64, delta: f64) -> Self {
        Self {
            inv: InverseCorrelation::new(obs_len, lambda, delta),
            window: 0.0,
        }
    }

    pub(crate) fn from_parts(inv: InverseCorrelation, window: f64) -> Self {
        Self { inv, window }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.inv.matrix()
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn lambda(&self) -> f64 {
        self.inv.lambda()
    }

    /// Absorb `y`: computes the gain, then updates `P` by the inversion lemma.
    pub fn update(&mut self, y: &ComplexVector) -> ProjectionGain {
        let k = self.inv.update(y);
        self.window = self.inv.lambda() * self.window + 1.0;
        ProjectionGain {
            k,
            window: self.window,
        }
    }
}

/// Estimator state of transmit stream `j`: projection `S` (`L N_R x D`),
/// reduced-rank weights `w_bar` (`D`), feedback taps `f` (`N_T - 1`, the
/// own-stream tap does not exist), and the inverse matrices `Q_wbar`,
/// `Phi_bar`, `P_B` of their recursions.
#[derive(Debug, Clone, PartialEq)]
pub struct JioStreamState {
    pub(crate) index: usize,
    pub(crate) n_tx: usize,
    pub(crate) s: ComplexMatrix,
    pub(crate) w_bar: ComplexVector,
    pub(crate) f: ComplexVector,
    pub(crate) q_wbar: InverseCorrelation,
    pub(crate) phi_bar: InverseCorrelation,
    pub(crate) p_b: InverseCorrelation,
}

/// Initial state: `S = [I_D; 0]`, `w_bar = [1, 0, ..., 0]`, `f = 0`, and
/// every inverse matrix at `delta^{-1} I`.
pub fn init_state(
    obs_len: usize,
    n_tx: usize,
    index: usize,
    rank: usize,
    lambda: f64,
    delta: f64,
) -> Result<JioStreamState> {
    if rank == 0 || rank > obs_len {
        return Err(Error::InvalidRank { rank, max: obs_len });
    }
    if n_tx == 0 || index >= n_tx {
        return Err(Error::Config(format!("stream index {index} out of range for {n_tx} streams")));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Config(format!("forgetting factor must lie in (0, 1], got {lambda}")));
    }
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::Config(format!("delta must be positive, got {delta}")));
    }
    let s = ComplexMatrix::from_fn(obs_len, rank, |r, c| if r == c { ONE } else { ZERO });
    Ok(JioStreamState {
        index,
        n_tx,
        s,
        w_bar: ComplexVector::basis(rank, 0),
        f: ComplexVector::zeros(n_tx - 1),
        q_wbar: InverseCorrelation::new(rank, lambda, delta),
        phi_bar: InverseCorrelation::new(rank, lambda, delta),
        p_b: InverseCorrelation::new(n_tx - 1, lambda, delta),
    })
}

impl JioStreamState {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn rank(&self) -> usize {
        self.s.cols()
    }

    pub fn obs_len(&self) -> usize {
        self.s.rows()
    }

    pub fn projection(&self) -> &ComplexMatrix {
        &self.s
    }

    pub fn weights(&self) -> &ComplexVector {
        &self.w_bar
    }

    pub fn feedback(&self) -> &ComplexVector {
        &self.f
    }

    pub fn q_wbar(&self) -> &ComplexMatrix {
        self.q_wbar.matrix()
    }

    pub fn phi_bar(&self) -> &ComplexMatrix {
        self.phi_bar.matrix()
    }

    pub fn p_b(&self) -> &ComplexMatrix {
        self.p_b.matrix()
    }

    pub fn set_projection(&mut self, s: ComplexMatrix) -> Result<()> {
        if s.rows() != self.s.rows() || s.cols() != self.s.cols() {
            return Err(Error::dim("JioStreamState::set_projection", self.s.rows() * self.s.cols(), s.rows() * s.cols()));
        }
        self.s = s;
        Ok(())
    }

    pub fn set_weights(&mut self, w_bar: ComplexVector) -> Result<()> {
        if w_bar.len() != self.w_bar.len() {
            return Err(Error::dim("JioStreamState::set_weights", self.w_bar.len(), w_bar.len()));
        }
        self.w_bar = w_bar;
        Ok(())
    }

    pub fn set_feedback(&mut self, f: ComplexVector) -> Result<()> {
        if f.len() != self.f.len() {
            return Err(Error::dim("JioStreamState::set_feedback", self.f.len(), f.len()));
        }
        self.f = f;
        Ok(())
    }

    /// The full feedback column `f_j` of length `N_T`, own tap zero.
    pub fn feedback_column(&self) -> ComplexVector {
        let mut out = ComplexVector::zeros(self.n_tx);
        for (k, v) in self.f.iter().enumerate() {
            let slot = if k < self.index { k } else { k + 1 };
            out[slot] = *v;
        }
        out
    }

    /// `x_hat_(j)`: the decision vector without this stream's entry.
    pub fn others(&self, x_hat: &[Complex64]) -> Result<ComplexVector> {
        if x_hat.len() != self.n_tx {
            return Err(Error::dim("JioStreamState: decision vector", self.n_tx, x_hat.len()));
        }
        Ok(x_hat
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != self.index)
            .map(|(_, v)| *v)
            .collect())
    }

    /// `y_bar = S^H y`.
    pub fn project(&self, y: &ComplexVector) -> Result<ComplexVector> {
        if y.len() != self.s.rows() {
            return Err(Error::dim("JioStreamState::project", self.s.rows(), y.len()));
        }
        Ok(self.s.hermitian_mul_vec(y))
    }

    /// Feedforward output `w_bar^H S^H y`.
    pub fn feedforward(&self, y: &ComplexVector) -> Result<Complex64> {
        Ok(self.w_bar.dot(&self.project(y)?))
    }

    /// `z_j = w_bar^H S^H y - f^H x_hat_(j)`; `x_hat` holds all `N_T` entries.
    pub fn rr_output(&self, y: &ComplexVector, x_hat: &[Complex64]) -> Result<Complex64> {
        let others = self.others(x_hat)?;
        Ok(self.feedforward(y)? - self.f.dot(&others))
    }

    /// Desired response of the feedforward stages: `x_j + f^H x_hat_(j)`.
    fn feedforward_target(&self, x_j: Complex64, others: &ComplexVector) -> Complex64 {
        x_j + self.f.dot(others)
    }

    /// Projection-matrix step, driven by the previous `w_bar` and `f`.
    ///
    /// `t = lambda^{-1} Q w_bar / (1 + lambda^{-1} w_bar^H Q w_bar)`, then
    /// `Q <- lambda^{-1} (Q - t w_bar^H Q)` and
    /// `S <- S + k (c d* t^H - y^H S)` with `d = x_j + f^H x_hat_(j)`.
    ///
    /// `Q` is the inverse of the weighted sum `sum lambda^(i-l) w_bar w_bar^H`;
    /// scaling `t` by the effective window `c` turns it into the inverse of the
    /// weighted average, which keeps `S w_bar` on the scale of the
    /// least-squares solution instead of decaying like `1/c`.
    pub fn rls_update_projection(
        &mut self,
        gain: &ProjectionGain,
        y: &ComplexVector,
        x_j: Complex64,
        others: &ComplexVector,
    ) -> Result<ComplexVector> {
        let y_bar_prior = self.project(y)?;
        if gain.k.len() != self.s.rows() {
            return Err(Error::dim("rls_update_projection: gain", self.s.rows(), gain.k.len()));
        }
        let d = self.feedforward_target(x_j, others);
        let t = self.q_wbar.update(&self.w_bar);
        let scale = d * gain.window;
        let innovation: ComplexVector = t
            .iter()
            .zip(y_bar_prior.iter())
            .map(|(tm, ym)| scale * tm - ym)
            .collect();
        self.s.rank_one_update(ONE, &gain.k, &innovation);
        Ok(t)
    }

    /// Reduced-rank weight step on `y_bar = S^H y` (current `S`); returns
    /// the a-priori error `xi = x_j - w_bar^H y_bar + f^H x_hat_(j)`.
    pub fn rls_update_weights(
        &mut self,
        y_bar: &ComplexVector,
        x_j: Complex64,
        others: &ComplexVector,
    ) -> Result<Complex64> {
        if y_bar.len() != self.w_bar.len() {
            return Err(Error::dim("rls_update_weights", self.w_bar.len(), y_bar.len()));
        }
        let xi = self.feedforward_target(x_j, others) - self.w_bar.dot(y_bar);
        let k_bar = self.phi_bar.update(y_bar);
        self.w_bar.axpy(xi.conj(), &k_bar);
        Ok(xi)
    }

    /// Feedback step on `x_hat_(j)`: `f <- f - k_B xi*` with
    /// `xi = x_j - w_bar^H y_bar + f^H x_hat_(j)` evaluated with the
    /// already-updated `w_bar`. Returns that error.
    pub fn rls_update_feedback(
        &mut self,
        others: &ComplexVector,
        x_j: Complex64,
        y_bar: &ComplexVector,
    ) -> Result<Complex64> {
        if others.len() != self.f.len() {
            return Err(Error::dim("rls_update_feedback", self.f.len(), others.len()));
        }
        if y_bar.len() != self.w_bar.len() {
            return Err(Error::dim("rls_update_feedback: y_bar", self.w_bar.len(), y_bar.len()));
        }
        let xi = x_j - self.w_bar.dot(y_bar) + self.f.dot(others);
        let k_b = self.p_b.update(others);
        self.f.axpy(-xi.conj(), &k_b);
        Ok(xi)
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite()
            && self.w_bar.is_finite()
            && self.f.is_finite()
            && self.q_wbar.matrix().is_finite()
            && self.phi_bar.matrix().is_finite()
            && self.p_b.matrix().is_finite()
    }
}

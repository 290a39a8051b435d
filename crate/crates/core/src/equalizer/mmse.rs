use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::modem::hard_decision;
use crate::numerics::{regularized_inverse, ComplexMatrix, ComplexVector};

/// Linear MMSE receiver with perfect knowledge of `H` and `sigma^2`.
#[derive(Debug, Clone)]
pub struct MmseBound {
    weights: ComplexMatrix,
    mse: Vec<f64>,
}

/// `W = (sigma_x^2 H H^H + sigma^2 I)^{-1} H sigma_x^2`, keeping for each
/// stream the column of its newest window symbol. The MSE of stream `j` is
/// `sigma_x^2 - sigma_x^4 h_j^H (sigma_x^2 H H^H + sigma^2 I)^{-1} h_j`.
pub fn mmse_bound(ch: &ChannelRealization, noise_var: f64, symbol_variance: f64) -> Result<MmseBound> {
    let h = ch.block_matrix();
    let gram = h.matmul(&h.hermitian())?.scaled(symbol_variance);
    let inv = regularized_inverse(&gram, noise_var)?;
    let l = ch.window_len();
    let n_tx = ch.n_tx();
    let mut weights = ComplexMatrix::zeros(h.rows(), n_tx);
    let mut mse = Vec::with_capacity(n_tx);
    for j in 0..n_tx {
        let hj = h.column(j * l);
        let w = inv.mul_vec(&hj);
        let explained = hj.dot(&w).re * symbol_variance * symbol_variance;
        mse.push((symbol_variance - explained).max(0.0));
        for r in 0..h.rows() {
            weights[(r, j)] = w[r] * symbol_variance;
        }
    }
    if !weights.is_finite() {
        return Err(Error::NonFinite("mmse_bound"));
    }
    Ok(MmseBound { weights, mse })
}

impl MmseBound {
    pub fn weights(&self) -> &ComplexMatrix {
        &self.weights
    }

    /// Per-stream analytic MSE.
    pub fn mse(&self) -> &[f64] {
        &self.mse
    }

    /// `W^H y`.
    pub fn output(&self, y: &ComplexVector) -> Result<ComplexVector> {
        if y.len() != self.weights.rows() {
            return Err(Error::dim("MmseBound::output", self.weights.rows(), y.len()));
        }
        Ok(self.weights.hermitian_mul_vec(y))
    }

    pub fn detect(&self, y: &ComplexVector) -> Result<Vec<Complex64>> {
        Ok(hard_decision(&self.output(y)?))
    }
}

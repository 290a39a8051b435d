//! Exponentially weighted inverse-correlation recursion shared by every
//! RLS estimator in the crate.

use crate::numerics::{ComplexMatrix, ComplexVector, ONE};

/// `P[i] = (delta * lambda^i I + sum_l lambda^(i-l) u[l] u[l]^H)^{-1}`,
/// propagated with the matrix inversion lemma.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseCorrelation {
    p: ComplexMatrix,
    lambda: f64,
}

impl InverseCorrelation {
    /// `P[0] = delta^{-1} I`.
    pub fn new(dim: usize, lambda: f64, delta: f64) -> Self {
        Self {
            p: ComplexMatrix::scaled_identity(dim, 1.0 / delta),
            lambda,
        }
    }

    pub fn from_matrix(p: ComplexMatrix, lambda: f64) -> Self {
        assert!(p.is_square());
        Self { p, lambda }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Absorb regressor `u`; returns the gain
    /// `k = lambda^{-1} P u / (1 + lambda^{-1} u^H P u)` computed with the
    /// previous `P`, then sets `P <- lambda^{-1} (P - k u^H P)`.
    pub fn update(&mut self, u: &ComplexVector) -> ComplexVector {
        let pu = self.p.mul_vec(u);
        let denom = self.lambda + u.dot(&pu).re;
        let mut gain = pu.clone();
        gain.scale((1.0 / denom).into());
        // u^H P == (P u)^H because P is Hermitian.
        self.p.rank_one_update(-ONE, &gain, &pu);
        self.p.scale(1.0 / self.lambda);
        self.p.make_hermitian();
        gain
    }
}

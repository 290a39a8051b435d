use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modem::{decide, hard_decision};
use crate::numerics::{ComplexMatrix, ComplexVector, ZERO};
use crate::rls::InverseCorrelation;

#[derive(Debug, Clone)]
struct Stream {
    /// Feedforward column `w_j`, length `L N_R`.
    w: ComplexVector,
    /// Off-diagonal feedback taps of column `f_j`, length `N_T - 1`.
    f: ComplexVector,
    inv: InverseCorrelation,
}

/// Parallel-feedback MIMO DFE with per-stream exponentially weighted RLS.
///
/// Stream `j` produces `z_j = w_j^H y - f_j^H x_hat_(j)`, where `x_hat_(j)`
/// is the tentative decision vector with entry `j` removed. The RLS regressor
/// is `[y; x_hat_(j)]` on the joint weights `[w_j; -f_j]`, so the diagonal of
/// `F` never exists as a parameter.
#[derive(Debug, Clone)]
pub struct FullRankDfe {
    obs_len: usize,
    n_tx: usize,
    lambda: f64,
    feedback: bool,
    streams: Vec<Stream>,
}

impl FullRankDfe {
    /// Zero feedforward and feedback weights, `P[0] = delta^{-1} I`.
    pub fn new(obs_len: usize, n_tx: usize, lambda: f64, delta: f64) -> Result<Self> {
        Self::build(obs_len, n_tx, lambda, delta, true)
    }

    /// Linear variant: `F` is held at zero and the regressor is `y` alone.
    pub fn without_feedback(obs_len: usize, n_tx: usize, lambda: f64, delta: f64) -> Result<Self> {
        Self::build(obs_len, n_tx, lambda, delta, false)
    }

    fn build(obs_len: usize, n_tx: usize, lambda: f64, delta: f64, feedback: bool) -> Result<Self> {
        if obs_len == 0 || n_tx == 0 {
            return Err(Error::Config("full-rank DFE needs obs_len >= 1 and n_tx >= 1".into()));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Config(format!("forgetting factor must lie in (0, 1], got {lambda}")));
        }
        if delta.is_nan() || delta <= 0.0 {
            return Err(Error::Config(format!("delta must be positive, got {delta}")));
        }
        let dim = if feedback { obs_len + n_tx - 1 } else { obs_len };
        let streams = (0..n_tx)
            .map(|_| Stream {
                w: ComplexVector::zeros(obs_len),
                f: ComplexVector::zeros(n_tx - 1),
                inv: InverseCorrelation::new(dim, lambda, delta),
            })
            .collect();
        Ok(Self {
            obs_len,
            n_tx,
            lambda,
            feedback,
            streams,
        })
    }

    pub fn obs_len(&self) -> usize {
        self.obs_len
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn has_feedback(&self) -> bool {
        self.feedback
    }

    pub fn set_feedforward(&mut self, stream: usize, w: ComplexVector) -> Result<()> {
        if w.len() != self.obs_len {
            return Err(Error::dim("FullRankDfe::set_feedforward", self.obs_len, w.len()));
        }
        self.streams[stream].w = w;
        Ok(())
    }

    pub fn feedforward_weights(&self, stream: usize) -> &ComplexVector {
        &self.streams[stream].w
    }

    /// Off-diagonal taps of `f_j` (entry `j` removed).
    pub fn feedback_taps(&self, stream: usize) -> &ComplexVector {
        &self.streams[stream].f
    }

    /// Inverse correlation matrix of stream `j`'s joint regressor.
    pub fn inverse(&self, stream: usize) -> &ComplexMatrix {
        self.streams[stream].inv.matrix()
    }

    /// `W = [w_1 ... w_NT]`, of size `L N_R x N_T`.
    pub fn feedforward_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.obs_len, self.n_tx, |r, c| self.streams[c].w[r])
    }

    /// `F = [f_1 ... f_NT]` with the structural zero diagonal.
    pub fn feedback_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n_tx, self.n_tx, |r, c| match r.cmp(&c) {
            std::cmp::Ordering::Equal => ZERO,
            std::cmp::Ordering::Less => self.streams[c].f[r],
            std::cmp::Ordering::Greater => self.streams[c].f[r - 1],
        })
    }

    fn check_obs(&self, y: &ComplexVector) -> Result<()> {
        if y.len() != self.obs_len {
            return Err(Error::dim("FullRankDfe: received vector", self.obs_len, y.len()));
        }
        Ok(())
    }

    fn check_symbols(&self, x: &[Complex64], context: &'static str) -> Result<()> {
        if x.len() != self.n_tx {
            return Err(Error::dim(context, self.n_tx, x.len()));
        }
        Ok(())
    }

    /// `W^H y`.
    pub fn feedforward(&self, y: &ComplexVector) -> Result<ComplexVector> {
        self.check_obs(y)?;
        Ok(self.streams.iter().map(|s| s.w.dot(y)).collect())
    }

    /// `z = W^H y - F^H x_hat`; with `x_hat = None` the tentative decisions
    /// `Q(W^H y)` are formed internally.
    pub fn output(&self, y: &ComplexVector, x_hat: Option<&[Complex64]>) -> Result<ComplexVector> {
        let ff = self.feedforward(y)?;
        let tentative;
        let x_hat = match x_hat {
            Some(x) => {
                self.check_symbols(x, "FullRankDfe::output: decision vector")?;
                x
            }
            None => {
                tentative = hard_decision(&ff);
                &tentative
            }
        };
        Ok(self
            .streams
            .iter()
            .enumerate()
            .map(|(j, s)| {
                if !self.feedback {
                    return ff[j];
                }
                let fb: Complex64 = others(x_hat, j).zip(s.f.iter()).map(|(x, f)| f.conj() * x).sum();
                ff[j] - fb
            })
            .collect())
    }

    /// `x_hat^(f) = Q(z)`.
    pub fn detect(&self, z: &[Complex64]) -> Vec<Complex64> {
        hard_decision(z)
    }

    fn regressor(&self, y: &ComplexVector, x_hat: &[Complex64], j: usize) -> ComplexVector {
        if self.feedback {
            y.iter().copied().chain(others(x_hat, j)).collect()
        } else {
            y.clone()
        }
    }

    /// One RLS step per stream towards `desired`, with `x_hat` as the
    /// feedback regressor.
    pub fn update(&mut self, y: &ComplexVector, desired: &[Complex64], x_hat: &[Complex64]) -> Result<()> {
        self.check_obs(y)?;
        self.check_symbols(desired, "FullRankDfe::update: desired symbols")?;
        self.check_symbols(x_hat, "FullRankDfe::update: decision vector")?;
        for (j, &target) in desired.iter().enumerate() {
            let u = self.regressor(y, x_hat, j);
            let s = &mut self.streams[j];
            let mut out = s.w.dot(y);
            if self.feedback {
                out -= s.f.dot(&others(x_hat, j).collect());
            }
            let err = target - out;
            let gain = s.inv.update(&u);
            let step = err.conj();
            for (w, k) in s.w.iter_mut().zip(gain.iter()) {
                *w += k * step;
            }
            if self.feedback {
                for (f, k) in s.f.iter_mut().zip(gain[self.obs_len..].iter()) {
                    *f -= k * step;
                }
            }
        }
        if self.streams.iter().any(|s| !s.w.is_finite() || !s.f.is_finite()) {
            return Err(Error::NonFinite("FullRankDfe::update"));
        }
        Ok(())
    }

    /// Detect one received vector and adapt. With `training = Some(truth)`
    /// the true symbols drive both the error and the feedback regressor;
    /// otherwise the equalizer's own decisions do.
    pub fn process(&mut self, y: &ComplexVector, training: Option<&[Complex64]>) -> Result<Vec<Complex64>> {
        let ff = self.feedforward(y)?;
        let tentative: Vec<Complex64> = ff.iter().copied().map(decide).collect();
        let z = self.output(y, Some(&tentative))?;
        let detected = self.detect(&z);
        match training {
            Some(truth) => self.update(y, truth, truth)?,
            None => self.update(y, &detected.clone(), &tentative)?,
        }
        Ok(detected)
    }
}

fn others(x: &[Complex64], skip: usize) -> impl Iterator<Item = Complex64> + '_ {
    x.iter()
        .enumerate()
        .filter(move |(k, _)| *k != skip)
        .map(|(_, v)| *v)
}

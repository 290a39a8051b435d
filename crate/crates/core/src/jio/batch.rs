//! Exponentially weighted least-squares design of one stream's JIO
//! estimator: accumulators, the direct cost, its quadratic-form expansion
//! and the alternating closed-form solutions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{regularized_inverse, ComplexMatrix, ComplexVector, ONE};

/// One time instant of a stream's history.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub y: ComplexVector,
    /// Desired symbol `x_j`.
    pub x: Complex64,
    /// `x_hat_(j)`: feedback regressor without stream `j`.
    pub others: ComplexVector,
}

/// Full sample history with its forgetting factor; the last sample has
/// weight 1, the one before `lambda`, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    lambda: f64,
    samples: Vec<Sample>,
}

impl History {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, sample: Sample) {
        self.samples.push(sample);
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn accumulators(&self, obs_len: usize, n_feedback: usize) -> Result<BatchAccumulators> {
        let mut acc = BatchAccumulators::new(obs_len, n_feedback, self.lambda);
        for s in &self.samples {
            acc.push(&s.y, s.x, &s.others)?;
        }
        Ok(acc)
    }
}

/// Weighted second-order statistics of a stream's history.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchAccumulators {
    lambda: f64,
    weight: f64,
    count: usize,
    /// `sum lambda^(i-l) y y^H`
    r: ComplexMatrix,
    /// `sum lambda^(i-l) x* y`
    p: ComplexVector,
    /// `sum lambda^(i-l) y x_hat^H`
    c: ComplexMatrix,
    /// `sum lambda^(i-l) x_hat x_hat^H`
    b_mat: ComplexMatrix,
    /// `sum lambda^(i-l) x* x_hat`
    b_vec: ComplexVector,
    /// `sum lambda^(i-l) |x|^2`
    sigma_x2: f64,
}

impl BatchAccumulators {
    pub fn new(obs_len: usize, n_feedback: usize, lambda: f64) -> Self {
        Self {
            lambda,
            weight: 0.0,
            count: 0,
            r: ComplexMatrix::zeros(obs_len, obs_len),
            p: ComplexVector::zeros(obs_len),
            c: ComplexMatrix::zeros(obs_len, n_feedback),
            b_mat: ComplexMatrix::zeros(n_feedback, n_feedback),
            b_vec: ComplexVector::zeros(n_feedback),
            sigma_x2: 0.0,
        }
    }

    pub fn push(&mut self, y: &ComplexVector, x: Complex64, others: &ComplexVector) -> Result<()> {
        if y.len() != self.p.len() {
            return Err(Error::dim("BatchAccumulators::push: y", self.p.len(), y.len()));
        }
        if others.len() != self.b_vec.len() {
            return Err(Error::dim("BatchAccumulators::push: x_hat", self.b_vec.len(), others.len()));
        }
        let l = self.lambda;
        self.r.scale(l);
        self.r.rank_one_update(ONE, y, y);
        self.p.scale(l.into());
        self.p.axpy(x.conj(), y);
        self.c.scale(l);
        self.c.rank_one_update(ONE, y, others);
        self.b_mat.scale(l);
        self.b_mat.rank_one_update(ONE, others, others);
        self.b_vec.scale(l.into());
        self.b_vec.axpy(x.conj(), others);
        self.sigma_x2 = l * self.sigma_x2 + x.norm_sqr();
        self.weight = l * self.weight + 1.0;
        self.count += 1;
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Effective window `sum lambda^(i-l)`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn obs_len(&self) -> usize {
        self.p.len()
    }

    pub fn n_feedback(&self) -> usize {
        self.b_vec.len()
    }

    pub fn r(&self) -> &ComplexMatrix {
        &self.r
    }

    pub fn p(&self) -> &ComplexVector {
        &self.p
    }

    pub fn cross(&self) -> &ComplexMatrix {
        &self.c
    }

    pub fn b_matrix(&self) -> &ComplexMatrix {
        &self.b_mat
    }

    pub fn b_vector(&self) -> &ComplexVector {
        &self.b_vec
    }

    pub fn sigma_x2(&self) -> f64 {
        self.sigma_x2
    }

    /// `R_bar = S^H R S`.
    pub fn projected_correlation(&self, s: &ComplexMatrix) -> Result<ComplexMatrix> {
        s.hermitian().matmul(&self.r.matmul(s)?)
    }

    /// `p_bar = S^H p`.
    pub fn projected_cross(&self, s: &ComplexMatrix) -> Result<ComplexVector> {
        self.check_projection(s)?;
        Ok(s.hermitian_mul_vec(&self.p))
    }

    /// `D = S^H C = sum lambda^(i-l) y_bar x_hat^H`.
    pub fn projected_feedback_cross(&self, s: &ComplexMatrix) -> Result<ComplexMatrix> {
        s.hermitian().matmul(&self.c)
    }

    /// `P_D + P_f = (p + C f) w_bar^H` for a fixed `w_bar`.
    pub fn projection_cross(&self, w_bar: &ComplexVector, f: &ComplexVector) -> Result<ComplexMatrix> {
        if f.len() != self.n_feedback() {
            return Err(Error::dim("projection_cross: f", self.n_feedback(), f.len()));
        }
        let mut v = self.p.clone();
        v.axpy(ONE, &self.c.mul_vec(f));
        Ok(ComplexMatrix::outer(&v, w_bar))
    }

    fn check_projection(&self, s: &ComplexMatrix) -> Result<()> {
        if s.rows() != self.obs_len() {
            return Err(Error::dim("BatchAccumulators: projection rows", self.obs_len(), s.rows()));
        }
        Ok(())
    }
}

/// Projection, reduced-rank weights and feedback of one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct JioEstimate {
    pub s: ComplexMatrix,
    pub w_bar: ComplexVector,
    pub f: ComplexVector,
}

impl JioEstimate {
    fn error(&self, sample: &Sample) -> Complex64 {
        let y_bar = self.s.hermitian_mul_vec(&sample.y);
        sample.x - self.w_bar.dot(&y_bar) + self.f.dot(&sample.others)
    }
}

/// `sum lambda^(i-l) |x_j - w_bar^H S^H y + f^H x_hat_(j)|^2` by direct summation.
pub fn batch_cost(history: &History, est: &JioEstimate) -> f64 {
    let n = history.len();
    history
        .samples()
        .iter()
        .enumerate()
        .map(|(l, s)| history.lambda().powi((n - 1 - l) as i32) * est.error(s).norm_sqr())
        .sum()
}

/// Sum of error squares from the accumulators:
/// `sigma_x2 - w^H p_bar - p_bar^H w + w^H R_bar w - f^H D^H w - w^H D f
///  + f^H b + b^H f + f^H B f`.
pub fn ses(acc: &BatchAccumulators, est: &JioEstimate) -> Result<f64> {
    let w = &est.w_bar;
    let f = &est.f;
    let r_bar = acc.projected_correlation(&est.s)?;
    let p_bar = acc.projected_cross(&est.s)?;
    let d = acc.projected_feedback_cross(&est.s)?;
    let b = acc.b_vector();
    let df = d.mul_vec(f);
    let w_p = w.dot(&p_bar);
    let w_df = w.dot(&df);
    let f_b = f.dot(b);
    let total = Complex64::from(acc.sigma_x2()) - w_p - w_p.conj() + w.dot(&r_bar.mul_vec(w)) - w_df.conj() - w_df
        + f_b
        + f_b.conj()
        + f.dot(&acc.b_matrix().mul_vec(f));
    Ok(total.re)
}

/// `w_bar = (R_bar + delta I)^{-1} (p_bar + D f + delta w_prior)`.
pub fn solve_weights(
    acc: &BatchAccumulators,
    s: &ComplexMatrix,
    f: &ComplexVector,
    delta: f64,
    prior: Option<&ComplexVector>,
) -> Result<ComplexVector> {
    let r_bar = acc.projected_correlation(s)?;
    let mut rhs = acc.projected_cross(s)?;
    rhs.axpy(ONE, &acc.projected_feedback_cross(s)?.mul_vec(f));
    if let Some(w0) = prior {
        rhs.axpy(delta.into(), w0);
    }
    Ok(regularized_inverse(&r_bar, delta)?.mul_vec(&rhs))
}

/// `f = (B + delta I)^{-1} (D^H w_bar - b + delta f_prior)`.
pub fn solve_feedback(
    acc: &BatchAccumulators,
    s: &ComplexMatrix,
    w_bar: &ComplexVector,
    delta: f64,
    prior: Option<&ComplexVector>,
) -> Result<ComplexVector> {
    let d = acc.projected_feedback_cross(s)?;
    let mut rhs = d.hermitian_mul_vec(w_bar);
    rhs.axpy(-ONE, acc.b_vector());
    if let Some(f0) = prior {
        rhs.axpy(delta.into(), f0);
    }
    Ok(regularized_inverse(acc.b_matrix(), delta)?.mul_vec(&rhs))
}

/// `S = (R + delta I)^{-1} (p + C f) w_bar^H (w_bar w_bar^H + delta I)^{-1}`.
pub fn solve_projection(acc: &BatchAccumulators, w_bar: &ComplexVector, f: &ComplexVector, delta: f64) -> Result<ComplexMatrix> {
    solve_projection_with(acc, w_bar, f, delta, delta)
}

/// As [`solve_projection`] with separate loadings on `R` and on `w_bar w_bar^H`.
pub fn solve_projection_with(
    acc: &BatchAccumulators,
    w_bar: &ComplexVector,
    f: &ComplexVector,
    delta_r: f64,
    delta_w: f64,
) -> Result<ComplexMatrix> {
    let cross = acc.projection_cross(w_bar, f)?;
    let r_inv = regularized_inverse(acc.r(), delta_r)?;
    let w_inv = regularized_inverse(&ComplexMatrix::outer(w_bar, w_bar), delta_w)?;
    r_inv.matmul(&cross)?.matmul(&w_inv)
}

/// Alternate the closed-form solutions `n_iters` times, in the order
/// `w_bar`, `f`, `S`; the S-dependent statistics are recomputed each pass.
pub fn batch_design_iterate(acc: &BatchAccumulators, init: &JioEstimate, n_iters: usize, delta: f64) -> Result<JioEstimate> {
    let mut est = init.clone();
    for _ in 0..n_iters {
        est.w_bar = solve_weights(acc, &est.s, &est.f, delta, None)?;
        est.f = solve_feedback(acc, &est.s, &est.w_bar, delta, None)?;
        est.s = solve_projection(acc, &est.w_bar, &est.f, delta)?;
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{random_matrix, SeededRng, ZERO};

    fn random_vec(rng: &mut SeededRng, n: usize) -> ComplexVector {
        (0..n).map(|_| rng.complex_normal()).collect()
    }

    fn random_history(rng: &mut SeededRng, m: usize, n_fb: usize, n: usize, lambda: f64) -> History {
        let mut h = History::new(lambda);
        for _ in 0..n {
            h.push(Sample {
                y: random_vec(rng, m),
                x: rng.complex_normal(),
                others: random_vec(rng, n_fb),
            });
        }
        h
    }

    fn random_estimate(rng: &mut SeededRng, m: usize, d: usize, n_fb: usize) -> JioEstimate {
        JioEstimate {
            s: random_matrix(rng, m, d),
            w_bar: random_vec(rng, d),
            f: random_vec(rng, n_fb),
        }
    }

    #[test]
    fn cost_of_empty_history_is_zero() {
        let mut rng = SeededRng::new(1);
        let est = random_estimate(&mut rng, 4, 2, 1);
        assert_eq!(batch_cost(&History::new(0.9), &est), 0.0);
    }

    #[test]
    fn perfect_single_sample_costs_nothing() {
        let mut rng = SeededRng::new(2);
        let est = random_estimate(&mut rng, 4, 2, 2);
        let y = random_vec(&mut rng, 4);
        let others = random_vec(&mut rng, 2);
        let x = est.w_bar.dot(&est.s.hermitian_mul_vec(&y)) - est.f.dot(&others);
        let mut h = History::new(1.0);
        h.push(Sample { y, x, others });
        assert!(batch_cost(&h, &est) < 1e-24);
    }

    #[test]
    fn cost_matches_reference_loop() {
        let mut rng = SeededRng::new(3);
        let h = random_history(&mut rng, 5, 2, 20, 0.95);
        let est = random_estimate(&mut rng, 5, 3, 2);
        let mut want = 0.0;
        for (l, s) in h.samples().iter().enumerate() {
            let mut e = s.x;
            for r in 0..5 {
                for c in 0..3 {
                    e -= est.w_bar[c].conj() * est.s[(r, c)].conj() * s.y[r];
                }
            }
            for k in 0..2 {
                e += est.f[k].conj() * s.others[k];
            }
            want += 0.95f64.powi(19 - l as i32) * e.norm_sqr();
        }
        let got = batch_cost(&h, &est);
        assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn ses_with_zero_estimators_is_symbol_energy() {
        let mut rng = SeededRng::new(4);
        let h = random_history(&mut rng, 4, 2, 10, 0.9);
        let acc = h.accumulators(4, 2).unwrap();
        let est = JioEstimate {
            s: random_matrix(&mut rng, 4, 2),
            w_bar: ComplexVector::zeros(2),
            f: ComplexVector::zeros(2),
        };
        assert!((ses(&acc, &est).unwrap() - acc.sigma_x2()).abs() < 1e-12);
    }

    #[test]
    fn ses_of_silent_history_is_zero() {
        let mut h = History::new(0.9);
        for _ in 0..5 {
            h.push(Sample {
                y: ComplexVector::zeros(3),
                x: ZERO,
                others: ComplexVector::zeros(1),
            });
        }
        let mut rng = SeededRng::new(5);
        let est = random_estimate(&mut rng, 3, 2, 1);
        assert_eq!(ses(&h.accumulators(3, 1).unwrap(), &est).unwrap(), 0.0);
    }

    #[test]
    fn ses_equals_direct_cost_at_batch_optimum() {
        let mut rng = SeededRng::new(6);
        let h = random_history(&mut rng, 6, 3, 50, 0.98);
        let acc = h.accumulators(6, 3).unwrap();
        let init = JioEstimate {
            s: ComplexMatrix::from_fn(6, 2, |r, c| if r == c { ONE } else { ZERO }),
            w_bar: ComplexVector::basis(2, 0),
            f: ComplexVector::zeros(3),
        };
        let est = batch_design_iterate(&acc, &init, 3, 0.01).unwrap();
        let direct = batch_cost(&h, &est);
        assert!((ses(&acc, &est).unwrap() - direct).abs() <= 1e-8 * direct);
    }

    #[test]
    fn zero_iterations_return_initial_state() {
        let mut rng = SeededRng::new(7);
        let h = random_history(&mut rng, 4, 1, 10, 1.0);
        let init = random_estimate(&mut rng, 4, 2, 1);
        let acc = h.accumulators(4, 1).unwrap();
        assert_eq!(batch_design_iterate(&acc, &init, 0, 0.01).unwrap(), init);
    }

    #[test]
    fn full_rank_projection_reduces_to_full_rank_ls() {
        let mut rng = SeededRng::new(8);
        let h = random_history(&mut rng, 5, 2, 40, 0.99);
        let acc = h.accumulators(5, 2).unwrap();
        let init = JioEstimate {
            s: ComplexMatrix::identity(5),
            w_bar: ComplexVector::basis(5, 0),
            f: random_vec(&mut rng, 2),
        };
        let est = batch_design_iterate(&acc, &init, 1, 0.01).unwrap();
        let mut rhs = acc.p().clone();
        rhs.axpy(ONE, &acc.cross().mul_vec(&init.f));
        let want = regularized_inverse(acc.r(), 0.01).unwrap().mul_vec(&rhs);
        assert!(est.w_bar.max_abs_diff(&want) < 1e-10);
    }

    #[test]
    fn alternating_design_does_not_increase_cost() {
        let mut rng = SeededRng::new(9);
        let h = random_history(&mut rng, 6, 1, 50, 1.0);
        let acc = h.accumulators(6, 1).unwrap();
        let init = JioEstimate {
            s: ComplexMatrix::from_fn(6, 2, |r, c| if r == c { ONE } else { ZERO }),
            w_bar: ComplexVector::basis(2, 0),
            f: ComplexVector::zeros(1),
        };
        let one = batch_cost(&h, &batch_design_iterate(&acc, &init, 1, 0.01).unwrap());
        let five = batch_cost(&h, &batch_design_iterate(&acc, &init, 5, 0.01).unwrap());
        assert!(five <= one * (1.0 + 1e-9), "{five} > {one}");
    }

    #[test]
    fn unregularized_rank_deficient_design_is_singular() {
        let acc = BatchAccumulators::new(4, 1, 1.0);
        let init = JioEstimate {
            s: ComplexMatrix::from_fn(4, 2, |r, c| if r == c { ONE } else { ZERO }),
            w_bar: ComplexVector::basis(2, 0),
            f: ComplexVector::zeros(1),
        };
        assert!(matches!(batch_design_iterate(&acc, &init, 1, 0.0), Err(Error::Singular(_))));
    }

    #[test]
    fn accumulators_are_hermitian() {
        let mut rng = SeededRng::new(10);
        let acc = random_history(&mut rng, 5, 3, 30, 0.97).accumulators(5, 3).unwrap();
        assert!(acc.r().hermitian_defect() < 1e-12);
        assert!(acc.b_matrix().hermitian_defect() < 1e-12);
        assert!(acc.sigma_x2() >= 0.0);
        let w = 1.0 - 0.97f64.powi(30);
        assert!((acc.weight() - w / 0.03).abs() < 1e-10);
    }
}

//! Dense complex linear algebra and deterministic random numbers.
//!
//! Everything here is double-precision complex. The per-symbol kernels
//! (`mul_vec`, `hermitian_mul_vec`, `rank_one_update`, `dot`, ...) feed a
//! thread-local multiply counter so callers can measure the per-update cost
//! of an estimator. The direct factorization behind [`regularized_inverse`]
//! has its own counter; adaptive recursions are expected never to touch it.

use std::cell::Cell;
use std::ops::{Deref, DerefMut, Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

thread_local! {
    static MULTIPLIES: Cell<u64> = const { Cell::new(0) };
    static FACTORIZATIONS: Cell<u64> = const { Cell::new(0) };
}

#[inline]
fn count_multiplies(n: usize) {
    MULTIPLIES.with(|c| c.set(c.get() + n as u64));
}

/// Snapshot of the thread-local operation counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpCounts {
    pub multiplies: u64,
    pub factorizations: u64,
}

pub fn op_counts() -> OpCounts {
    OpCounts {
        multiplies: MULTIPLIES.with(Cell::get),
        factorizations: FACTORIZATIONS.with(Cell::get),
    }
}

pub fn reset_op_counts() {
    MULTIPLIES.with(|c| c.set(0));
    FACTORIZATIONS.with(|c| c.set(0));
}

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![ZERO; len])
    }

    /// Unit vector `e_index` of length `len`.
    pub fn basis(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[index] = ONE;
        v
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// Inner product `self^H other`.
    pub fn dot(&self, other: &ComplexVector) -> Complex64 {
        assert_eq!(self.len(), other.len(), "dot: length mismatch");
        count_multiplies(self.len());
        self.iter().zip(other.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `self += alpha * x`.
    pub fn axpy(&mut self, alpha: Complex64, x: &ComplexVector) {
        assert_eq!(self.len(), x.len(), "axpy: length mismatch");
        count_multiplies(self.len());
        for (a, b) in self.iter_mut().zip(x.iter()) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, s: Complex64) {
        count_multiplies(self.len());
        for a in self.iter_mut() {
            *a *= s;
        }
    }

    pub fn conj(&self) -> ComplexVector {
        Self(self.iter().map(|z| z.conj()).collect())
    }

    pub fn max_abs_diff(&self, other: &ComplexVector) -> f64 {
        assert_eq!(self.len(), other.len(), "max_abs_diff: length mismatch");
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Copy with entry `skip` removed.
    pub fn without(&self, skip: usize) -> ComplexVector {
        Self(
            self.iter()
                .enumerate()
                .filter(|(k, _)| *k != skip)
                .map(|(_, z)| *z)
                .collect(),
        )
    }
}

impl From<Vec<Complex64>> for ComplexVector {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

impl FromIterator<Complex64> for ComplexVector {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl Deref for ComplexVector {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for ComplexVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

/// Dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = Complex64::new(s, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("ComplexMatrix::from_row_major", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    /// `diag(values)`.
    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (k, v) in values.iter().enumerate() {
            m[(k, k)] = *v;
        }
        m
    }

    /// Outer product `u v^H`.
    pub fn outer(u: &ComplexVector, v: &ComplexVector) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        m.rank_one_update(ONE, u, v);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> ComplexVector {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn hermitian(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &ComplexVector) -> ComplexVector {
        assert_eq!(self.cols, x.len(), "mul_vec: dimension mismatch");
        count_multiplies(self.rows * self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x.iter()).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self^H * x` without materializing the Hermitian transpose.
    pub fn hermitian_mul_vec(&self, x: &ComplexVector) -> ComplexVector {
        assert_eq!(self.rows, x.len(), "hermitian_mul_vec: dimension mismatch");
        count_multiplies(self.rows * self.cols);
        let mut out = vec![ZERO; self.cols];
        for (r, xr) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a.conj() * xr;
            }
        }
        out.into()
    }

    /// `self += alpha * u v^H`.
    pub fn rank_one_update(&mut self, alpha: Complex64, u: &ComplexVector, v: &ComplexVector) {
        assert_eq!(self.rows, u.len(), "rank_one_update: row mismatch");
        assert_eq!(self.cols, v.len(), "rank_one_update: column mismatch");
        count_multiplies(self.rows * self.cols + self.rows);
        let cols = self.cols;
        for (r, ur) in u.iter().enumerate() {
            let a = alpha * ur;
            for (m, vc) in self.data[r * cols..(r + 1) * cols].iter_mut().zip(v.iter()) {
                *m += a * vc.conj();
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        count_multiplies(self.data.len());
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> ComplexMatrix {
        let mut m = self.clone();
        m.scale(s);
        m
    }

    /// Dense product. Not used on per-symbol paths.
    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::dim("ComplexMatrix::matmul", self.cols, other.rows));
        }
        count_multiplies(self.rows * self.cols * other.cols);
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, "ComplexMatrix::add", |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, "ComplexMatrix::sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &ComplexMatrix,
        context: &'static str,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim(context, self.rows * self.cols, other.rows * other.cols));
        }
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    /// `self + s I`.
    pub fn add_identity(&self, s: f64) -> ComplexMatrix {
        let mut m = self.clone();
        for k in 0..self.rows.min(self.cols) {
            m[(k, k)] += s;
        }
        m
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest `|a_rc - conj(a_cr)|`.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Replace with `(A + A^H) / 2`.
    pub fn make_hermitian(&mut self) {
        assert!(self.is_square());
        let n = self.rows;
        for r in 0..n {
            self.data[r * n + r].im = 0.0;
            for c in r + 1..n {
                let avg = 0.5 * (self.data[r * n + c] + self.data[c * n + r].conj());
                self.data[r * n + c] = avg;
                self.data[c * n + r] = avg.conj();
            }
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

pub fn hermitian(a: &ComplexMatrix) -> ComplexMatrix {
    a.hermitian()
}

const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// `(a + delta I)^{-1}` by LU factorization with partial pivoting.
///
/// Reserved for batch solutions and test oracles.
pub fn regularized_inverse(a: &ComplexMatrix, delta: f64) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::dim("regularized_inverse", a.rows(), a.cols()));
    }
    if delta < 0.0 || !delta.is_finite() {
        return Err(Error::Config(format!("regularization must be >= 0, got {delta}")));
    }
    FACTORIZATIONS.with(|c| c.set(c.get() + 1));
    let n = a.rows();
    let m = DMatrix::from_fn(n, n, |r, c| {
        let v = a[(r, c)];
        if r == c {
            v + delta
        } else {
            v
        }
    });
    let lu = m.lu();
    // Pivot spread as a cheap reciprocal-condition estimate.
    let pivots: Vec<f64> = lu.u().diagonal().iter().map(|v| v.norm()).collect();
    let largest = pivots.iter().copied().fold(0.0, f64::max);
    let smallest = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    if n > 0 && (smallest.is_nan() || smallest <= SINGULAR_PIVOT_RATIO * largest) {
        return Err(Error::Singular("regularized_inverse"));
    }
    let inv = lu.try_inverse().ok_or(Error::Singular("regularized_inverse"))?;
    let out = ComplexMatrix::from_fn(n, n, |r, c| inv[(r, c)]);
    if !out.is_finite() {
        return Err(Error::Singular("regularized_inverse"));
    }
    Ok(out)
}

/// SplitMix64 finalizer, used to derive independent seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `index` under `base`: `splitmix64(base ^ index)`.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ index)
}

/// Reproducible random source: ChaCha8 keyed by `seed_from_u64(seed)`,
/// Gaussian samples through the ziggurat sampler of `rand_distr`.
/// Identical seeds give identical sequences on every platform.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for a named sub-stream (channel, bits, noise, ...).
    pub fn substream(&self, tag: u64) -> SeededRng {
        SeededRng::new(mix_seed(self.seed, splitmix64(tag)))
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn bit(&mut self) -> u8 {
        u8::from(self.inner.random::<bool>())
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Circularly symmetric complex Gaussian with `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re = self.standard_normal();
        let im = self.standard_normal();
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// I.i.d. circularly symmetric complex Gaussian entries with per-entry
/// `E|n|^2 = variance`. The same number of draws is consumed whatever the
/// variance, so sweeping the variance keeps the noise realization aligned.
pub fn complex_gaussian_vector(rng: &mut SeededRng, len: usize, variance: f64) -> ComplexVector {
    let s = variance.max(0.0).sqrt();
    (0..len).map(|_| rng.complex_normal() * s).collect()
}

/// Random matrix with i.i.d. unit-variance complex Gaussian entries.
pub fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| rng.complex_normal())
}

//! Singular values of symmetric matrices.
//!
//! Two routes: a Krylov subspace eigen-iteration with full
//! reorthogonalization for a few extreme values of a large sparse matrix,
//! and a dense symmetric eigensolver for the full spectrum. For symmetric
//! positive semi-definite input, singular values coincide with eigenvalues.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::sparse::SymmetricCsr;

/// Matrices at or below this dimension always take the dense path.
pub const DENSE_ALWAYS_DIM: usize = 64;
/// Default refusal limit for [`dense_spectrum_oracle`].
pub const DEFAULT_DENSE_LIMIT: usize = 2000;

/// Non-increasing vector of non-negative singular values.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureVector(Vec<f64>);

impl SignatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("signature entries must be finite and non-negative"));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(invalid("signature entries must be non-increasing"));
        }
        Ok(Self(values))
    }

    /// Takes absolute values and sorts descending.
    pub fn from_unsorted(mut values: Vec<f64>) -> Self {
        for v in &mut values {
            *v = v.abs();
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Truncates or zero-pads to exactly `k` entries.
    pub fn resized(&self, k: usize) -> Self {
        let mut v = self.0.clone();
        v.resize(k, 0.0);
        Self(v)
    }

    /// Adds `shift` to every entry.
    pub fn shifted(&self, shift: f64) -> Self {
        Self(self.0.iter().map(|v| v + shift).collect())
    }

    /// Unit L2 vector; the zero vector stays zero.
    pub fn normalized(&self) -> Vec<f64> {
        l2_normalized(&self.0)
    }
}

pub(crate) fn l2_normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / norm).collect()
    }
}

/// A real symmetric linear operator.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// `y = M x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn to_dense(&self) -> DMatrix<f64>;
    /// Largest absolute difference between mirrored entries.
    fn asymmetry(&self) -> f64;
    /// Largest absolute entry, for scaling tolerances.
    fn max_abs(&self) -> f64;
}

impl SymmetricOperator for SymmetricCsr {
    fn dim(&self) -> usize {
        SymmetricCsr::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        SymmetricCsr::to_dense(self)
    }

    fn asymmetry(&self) -> f64 {
        SymmetricCsr::asymmetry(self)
    }

    fn max_abs(&self) -> f64 {
        (0..self.dim())
            .flat_map(|i| self.row(i).map(|(_, v)| v.abs()))
            .fold(0.0, f64::max)
    }
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += self[(i, j)] * xj;
            }
            *yi = acc;
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }

    fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows() {
            for j in i + 1..self.ncols() {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Knobs for [`top_k_singular_values`] and [`lanczos_largest`].
#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Relative residual bound `||Mv - s v|| <= tol (1 + s)`.
    pub tol: f64,
    /// Seed for the random start and restart vectors.
    pub seed: u64,
    /// Largest dimension the dense route accepts.
    pub dense_limit: usize,
    /// Cap on the Krylov basis; `None` means the matrix dimension.
    pub max_basis: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            seed: 0,
            dense_limit: DEFAULT_DENSE_LIMIT,
            max_basis: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

fn check_symmetric<M: SymmetricOperator + ?Sized>(m: &M, tol: f64) -> Result<()> {
    let asym = m.asymmetry();
    let bound = tol * (1.0 + m.max_abs());
    if asym > bound {
        return Err(invalid(format!(
            "matrix is not symmetric (max mirrored difference {asym:.3e})"
        )));
    }
    Ok(())
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn evd_failure(n: usize) -> Error {
    Error::Convergence {
        iterations: n,
        residual: f64::NAN,
    }
}

/// Eigenvalues of a dense symmetric matrix, ascending. Reads the lower
/// triangle only.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let values = to_faer(m)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|_| evd_failure(m.nrows()))?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(evd_failure(m.nrows()));
    }
    Ok(values)
}

/// Eigenvalues (ascending) and matching unit eigenvectors as columns.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let evd = to_faer(m)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| evd_failure(m.nrows()))?;
    let n = m.nrows();
    let values: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    let u = evd.U();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    if values.iter().chain(vectors.iter()).any(|v| !v.is_finite()) {
        return Err(evd_failure(n));
    }
    Ok((values, vectors))
}

/// Full spectrum of `|eigenvalues|`, sorted descending, via a dense
/// symmetric eigensolver. Refuses matrices above [`DEFAULT_DENSE_LIMIT`].
pub fn dense_spectrum_oracle(m: &DMatrix<f64>) -> Result<SignatureVector> {
    dense_spectrum_with_limit(m, DEFAULT_DENSE_LIMIT)
}

pub fn dense_spectrum_with_limit(m: &DMatrix<f64>, limit: usize) -> Result<SignatureVector> {
    if !m.is_square() {
        return Err(invalid("dense spectrum needs a square matrix"));
    }
    if m.nrows() > limit {
        return Err(Error::DenseLimit {
            dim: m.nrows(),
            limit,
        });
    }
    if m.nrows() == 0 {
        return Ok(SignatureVector(Vec::new()));
    }
    Ok(SignatureVector::from_unsorted(symmetric_eigenvalues(m)?))
}

/// The `k` largest singular values of a symmetric PSD matrix.
///
/// Small matrices, and requests for a large fraction of the spectrum, go
/// through the dense solver; everything else through [`lanczos_largest`].
pub fn top_k_singular_values<M: SymmetricOperator + ?Sized>(
    m: &M,
    k: usize,
    opts: &SolverOptions,
) -> Result<SignatureVector> {
    let n = m.dim();
    if k == 0 || k > n {
        return Err(invalid(format!("k = {k} must lie in 1..={n}")));
    }
    check_symmetric(m, 1e-10)?;
    if n <= DENSE_ALWAYS_DIM || (4 * k >= n && n <= opts.dense_limit) {
        let full = dense_spectrum_with_limit(&m.to_dense(), opts.dense_limit)?;
        let mut v = full.into_values();
        v.truncate(k);
        return Ok(SignatureVector(v));
    }
    let pairs = lanczos_largest(m, k, opts)?;
    Ok(SignatureVector::from_unsorted(pairs.values))
}

/// Ritz pairs returned by [`lanczos_largest`].
#[derive(Clone, Debug)]
pub struct EigenPairs {
    /// Algebraically largest eigenvalues, descending.
    pub values: Vec<f64>,
    /// Unit eigenvectors matching `values`.
    pub vectors: Vec<DVector<f64>>,
    /// Final Krylov basis size.
    pub basis_size: usize,
}

struct KrylovBasis<'a, M: ?Sized> {
    op: &'a M,
    q: Vec<DVector<f64>>,
    mq: Vec<DVector<f64>>,
}

impl<'a, M: SymmetricOperator + ?Sized> KrylovBasis<'a, M> {
    /// Orthogonalizes `v` against the basis (two passes) and appends it.
    /// Returns false when `v` is numerically inside the current span.
    fn push(&mut self, mut v: DVector<f64>) -> bool {
        let start = v.norm();
        if start == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for q in &self.q {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm <= 1e-10 * start {
            return false;
        }
        v /= norm;
        let mut mv = DVector::zeros(v.len());
        self.op.apply(v.as_slice(), mv.as_mut_slice());
        self.q.push(v);
        self.mq.push(mv);
        true
    }

    fn len(&self) -> usize {
        self.q.len()
    }

    /// Top-`k` Ritz values, vectors and explicit residual norms.
    fn ritz(&self, k: usize) -> Result<(Vec<f64>, Vec<DVector<f64>>, Vec<f64>)> {
        let b = self.q.len();
        let mut h = DMatrix::zeros(b, b);
        for i in 0..b {
            for j in i..b {
                let v = 0.5 * (self.q[i].dot(&self.mq[j]) + self.q[j].dot(&self.mq[i]));
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let (eigenvalues, eigenvectors) = symmetric_eigen(&h)?;
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&a, &c| eigenvalues[c].total_cmp(&eigenvalues[a]));
        let dim = self.q[0].len();
        let mut values = Vec::with_capacity(k);
        let mut vectors = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        for &idx in order.iter().take(k) {
            let theta = eigenvalues[idx];
            let y = eigenvectors.column(idx);
            let mut x = DVector::zeros(dim);
            let mut mx = DVector::zeros(dim);
            for (j, &c) in y.iter().enumerate() {
                x.axpy(c, &self.q[j], 1.0);
                mx.axpy(c, &self.mq[j], 1.0);
            }
            mx.axpy(-theta, &x, 1.0);
            residuals.push(mx.norm());
            values.push(theta);
            vectors.push(x);
        }
        Ok((values, vectors, residuals))
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    let v = DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
    let norm = v.norm();
    v / norm
}

/// The `k` algebraically largest eigenpairs of a symmetric operator.
///
/// Expands an orthonormal Krylov basis (full reorthogonalization, explicit
/// Rayleigh-Ritz). Once the top `k` pairs meet the residual bound, a fresh
/// random direction is injected and the expansion continues; the result is
/// accepted only when the values survive that restart, which is what picks
/// up repeated eigenvalues a single Krylov sequence cannot see.
pub fn lanczos_largest<M: SymmetricOperator + ?Sized>(
    m: &M,
    k: usize,
    opts: &SolverOptions,
) -> Result<EigenPairs> {
    let n = m.dim();
    if k == 0 || k > n {
        return Err(invalid(format!("k = {k} must lie in 1..={n}")));
    }
    let cap = opts.max_basis.unwrap_or(n).clamp(k, n);
    let verify_steps = k.max(8);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = KrylovBasis {
        op: m,
        q: Vec::new(),
        mq: Vec::new(),
    };
    let mut steps_since_restart = 0usize;
    let mut previous: Option<Vec<f64>> = None;
    let mut last_residual = f64::INFINITY;

    while basis.len() < cap || basis.len() == n {
        if basis.len() < n {
            let grew = match basis.mq.last() {
                Some(last) => basis.push(last.clone()),
                None => false,
            };
            if !grew {
                // breakdown (or first step): restart from a random direction
                let mut tries = 0;
                while !basis.push(random_unit(&mut rng, n)) {
                    tries += 1;
                    if tries > 8 {
                        break;
                    }
                }
            }
            steps_since_restart += 1;
        }
        let full = basis.len() == n;
        if basis.len() < k || !(full || basis.len() == cap || steps_since_restart >= verify_steps) {
            continue;
        }
        let (values, vectors, residuals) = basis.ritz(k)?;
        let converged = values
            .iter()
            .zip(&residuals)
            .all(|(v, r)| *r <= opts.tol * (1.0 + v.abs()));
        last_residual = residuals.iter().copied().fold(0.0, f64::max);
        if full || converged {
            let stable = previous.as_ref().is_some_and(|prev| {
                prev.iter()
                    .zip(&values)
                    .all(|(a, b)| (a - b).abs() <= opts.tol * (1.0 + b.abs()))
            });
            if full || stable {
                return Ok(EigenPairs {
                    values,
                    vectors,
                    basis_size: basis.len(),
                });
            }
            previous = Some(values);
            if basis.push(random_unit(&mut rng, n)) {
                steps_since_restart = 0;
            }
        }
        if basis.len() >= cap && basis.len() < n {
            break;
        }
    }
    Err(Error::Convergence {
        iterations: basis.len(),
        residual: last_residual,
    })
}

/// Flips `v` so its entries sum to a non-negative value; an (almost) zero
/// sum is decided by making the first non-zero entry positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let sum: f64 = v.iter().sum();
    let scale: f64 = v.iter().map(|x| x.abs()).sum();
    let negate = if sum.abs() <= 1e-12 * scale {
        v.iter()
            .find(|x| x.abs() > 1e-12 * scale)
            .is_some_and(|x| *x < 0.0)
    } else {
        sum < 0.0
    };
    if negate {
        v.neg_mut();
    }
}

/// Left singular vector of `c` for its largest singular value, unit length,
/// with the [`fix_sign`] convention.
///
/// Computed from the eigendecomposition of the small Gram matrix `CᵀC`.
pub fn dominant_left_singular_vector(c: &DMatrix<f64>) -> Result<DVector<f64>> {
    if c.ncols() == 0 || c.nrows() == 0 || c.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("zero context matrix".into()));
    }
    let gram = c.transpose() * c;
    let (eigenvalues, eigenvectors) = symmetric_eigen(&gram)?;
    let top = eigenvalues.len() - 1;
    let v = eigenvectors.column(top);
    let mut u = c * v;
    let norm = u.norm();
    if norm == 0.0 {
        return Err(Error::Degenerate("zero context matrix".into()));
    }
    u /= norm;
    fix_sign(&mut u);
    Ok(u)
}

//! Dense complex vectors and matrices with the tensor-algebra operations the
//! simulator is built on: Kronecker products, partial traces, maximally
//! entangled and Choi vectors, and trace distance.
//!
//! Tensor index convention: factors are ordered as listed, and the *first*
//! factor is the most significant digit of a mixed-radix basis index. So for
//! factors `(d0, d1)` the basis state `|i⟩|j⟩` sits at index `i*d1 + j`, and
//! `kron(a, b)` places `a` on the more significant factor.

use num_complex::Complex;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("factor index {index} out of range for {factors} tensor factors")]
    FactorOutOfRange { index: usize, factors: usize },
    #[error("duplicate factor index {index}")]
    DuplicateFactor { index: usize },
    #[error("matrix is not unitary within tolerance {tol}")]
    NotUnitary { tol: f64 },
    #[error("eigensolver failed to converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// Dense complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector<T: Scalar> {
    data: Vec<Complex<T>>,
}

impl<T: Scalar> ComplexVector<T> {
    pub fn new(data: Vec<Complex<T>>) -> Self {
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![Complex::zero(); dim],
        }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut v = Self::zeros(dim);
        v.data[index] = Complex::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn norm(&self) -> T {
        self.data
            .iter()
            .map(|c| c.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            data: self.data.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "vector dimension mismatch");
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.dim(), other.dim(), "vector dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Hermitian inner product `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim(), other.dim(), "vector dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .fold(Complex::zero(), |acc, x| acc + x)
    }

    /// Outer product `|self⟩⟨other|`.
    pub fn outer(&self, other: &Self) -> ComplexMatrix<T> {
        let mut m = ComplexMatrix::zeros(self.dim(), other.dim());
        for i in 0..self.dim() {
            for j in 0..other.dim() {
                m.set(i, j, self.data[i] * other.data[j].conj());
            }
        }
        m
    }

    /// Tensor product `|self⟩ ⊗ |other⟩`; `self` takes the significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        let mut data = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        Self { data }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim(), other.dim(), "vector dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> ComplexMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must be rows*cols");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex::one());
        }
        m
    }

    pub fn diagonal(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix from `(re, im)` pairs in row-major rows.
    pub fn from_rows(rows: &[Vec<(T, T)>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&(re, im)| Complex::new(re, im)))
            .collect();
        Self::new(r, c, data)
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

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex<T>) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    pub fn trace(&self) -> Complex<T> {
        assert!(self.is_square(), "trace requires a square matrix");
        (0..self.rows).fold(Complex::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.get(i, j));
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(Complex::conj).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.get(i, j).conj());
            }
        }
        m
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = m.get(i, j) + a * other.get(k, j);
                    m.set(i, j, v);
                }
            }
        }
        m
    }

    pub fn matvec(&self, v: &ComplexVector<T>) -> ComplexVector<T> {
        assert_eq!(self.cols, v.dim(), "matrix-vector dimension mismatch");
        let mut out = ComplexVector::zeros(self.rows);
        for i in 0..self.rows {
            let mut acc = Complex::zero();
            for j in 0..self.cols {
                acc += self.get(i, j) * v.entries()[j];
            }
            out.entries_mut()[i] = acc;
        }
        out
    }

    /// Integer power of a unitary; negative exponents use the adjoint.
    pub fn unitary_power(&self, exp: i64) -> Self {
        assert!(self.is_square());
        let base = if exp >= 0 { self.clone() } else { self.adjoint() };
        let mut acc = Self::identity(self.rows);
        for _ in 0..exp.unsigned_abs() {
            acc = acc.matmul(&base);
        }
        acc
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|c| c.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// Symmetrizes to the nearest Hermitian matrix, `(m + m†)/2`.
    pub fn hermitize(&self) -> Self {
        let half = Complex::new(T::lit(0.5), T::zero());
        self.add(&self.adjoint()).scale(half)
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()) <= tol + tol
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Tensor product `self ⊗ other`; `self` takes the significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        kron(self, other)
    }
}

/// Ordered dimensions of the tensor factors a state or operator lives on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorDims(Vec<usize>);

impl TensorDims {
    pub fn new(factors: Vec<usize>) -> Self {
        assert!(
            factors.iter().all(|&d| d >= 1),
            "tensor factors must be positive"
        );
        Self(factors)
    }

    pub fn factors(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn product(&self) -> usize {
        self.0.iter().product()
    }

    /// Stride of each factor: the first factor is the most significant digit.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.0.len()];
        for i in (0..self.0.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.0[i + 1];
        }
        strides
    }
}

impl From<&[usize]> for TensorDims {
    fn from(factors: &[usize]) -> Self {
        Self::new(factors.to_vec())
    }
}

/// Kronecker product: `(a⊗b)[i·rb+k, j·cb+l] = a[i,j]·b[k,l]`.
pub fn kron<T: Scalar>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (rb, cb) = (b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(a.rows() * rb, a.cols() * cb);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a.get(i, j);
            if aij.is_zero() {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out.set(i * rb + k, j * cb + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

fn checked_keep(keep: &[usize], n_factors: usize) -> Result<Vec<usize>, LinalgError> {
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    for pair in kept.windows(2) {
        if pair[0] == pair[1] {
            return Err(LinalgError::DuplicateFactor { index: pair[0] });
        }
    }
    if let Some(&bad) = kept.iter().find(|&&i| i >= n_factors) {
        return Err(LinalgError::FactorOutOfRange {
            index: bad,
            factors: n_factors,
        });
    }
    Ok(kept)
}

// Maps every full basis index to its (kept, traced) mixed-radix sub-indices.
fn split_indices(dims: &TensorDims, kept: &[usize]) -> (Vec<usize>, Vec<usize>, usize, usize) {
    let strides = dims.strides();
    let total = dims.product();
    let is_kept: Vec<bool> = (0..dims.len()).map(|i| kept.contains(&i)).collect();
    let kept_dim: usize = kept.iter().map(|&i| dims.factors()[i]).product();
    let traced_dim = total / kept_dim;
    let mut kept_ix = vec![0usize; total];
    let mut traced_ix = vec![0usize; total];
    for idx in 0..total {
        let (mut k, mut t) = (0usize, 0usize);
        for f in 0..dims.len() {
            let digit = (idx / strides[f]) % dims.factors()[f];
            if is_kept[f] {
                k = k * dims.factors()[f] + digit;
            } else {
                t = t * dims.factors()[f] + digit;
            }
        }
        kept_ix[idx] = k;
        traced_ix[idx] = t;
    }
    (kept_ix, traced_ix, kept_dim, traced_dim)
}

/// Partial trace of `rho` over the factors *not* listed in `keep`.
///
/// The result lives on the kept factors in their original relative order.
pub fn partial_trace<T: Scalar>(
    rho: &ComplexMatrix<T>,
    dims: &TensorDims,
    keep: &[usize],
) -> Result<ComplexMatrix<T>, LinalgError> {
    if !rho.is_square() {
        return Err(LinalgError::NotSquare {
            rows: rho.rows(),
            cols: rho.cols(),
        });
    }
    if rho.rows() != dims.product() {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix dimension {} does not match tensor factor product {}",
            rho.rows(),
            dims.product()
        )));
    }
    let kept = checked_keep(keep, dims.len())?;
    let (kept_ix, traced_ix, kept_dim, traced_dim) = split_indices(dims, &kept);
    // Bucket full indices by their traced sub-index, then sum over buckets.
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); traced_dim];
    for idx in 0..dims.product() {
        buckets[traced_ix[idx]].push(idx);
    }
    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for bucket in &buckets {
        for &ia in bucket {
            for &ib in bucket {
                let v = out.get(kept_ix[ia], kept_ix[ib]) + rho.get(ia, ib);
                out.set(kept_ix[ia], kept_ix[ib], v);
            }
        }
    }
    Ok(out)
}

/// Reduced density matrix of the pure state `psi` on the kept factors,
/// without materializing the full projector `|psi⟩⟨psi|`.
pub fn partial_trace_pure<T: Scalar>(
    psi: &ComplexVector<T>,
    dims: &TensorDims,
    keep: &[usize],
) -> Result<ComplexMatrix<T>, LinalgError> {
    if psi.dim() != dims.product() {
        return Err(LinalgError::DimensionMismatch(format!(
            "state dimension {} does not match tensor factor product {}",
            psi.dim(),
            dims.product()
        )));
    }
    let kept = checked_keep(keep, dims.len())?;
    let (kept_ix, traced_ix, kept_dim, traced_dim) = split_indices(dims, &kept);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); traced_dim];
    for idx in 0..dims.product() {
        buckets[traced_ix[idx]].push(idx);
    }
    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for bucket in &buckets {
        for &ia in bucket {
            let a = psi.entries()[ia];
            if a.is_zero() {
                continue;
            }
            for &ib in bucket {
                let v = out.get(kept_ix[ia], kept_ix[ib]) + a * psi.entries()[ib].conj();
                out.set(kept_ix[ia], kept_ix[ib], v);
            }
        }
    }
    Ok(out)
}

/// The maximally entangled vector `(1/√d) Σ_i |i⟩|i⟩` in dimension `d²`.
pub fn max_entangled<T: Scalar>(d: usize) -> ComplexVector<T> {
    assert!(d >= 1, "dimension must be positive");
    let amp = Complex::new(T::one() / T::lit(d as f64).sqrt(), T::zero());
    let mut v = ComplexVector::zeros(d * d);
    for i in 0..d {
        v.entries_mut()[i * d + i] = amp;
    }
    v
}

/// The Choi vector `(1/√d) Σ_{i,j} x[i,j] |i⟩|j⟩` of a square matrix.
pub fn choi_vector<T: Scalar>(x: &ComplexMatrix<T>) -> Result<ComplexVector<T>, LinalgError> {
    if !x.is_square() {
        return Err(LinalgError::NotSquare {
            rows: x.rows(),
            cols: x.cols(),
        });
    }
    let d = x.rows();
    let scale = Complex::new(T::one() / T::lit(d as f64).sqrt(), T::zero());
    let mut v = ComplexVector::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            v.entries_mut()[i * d + j] = x.get(i, j) * scale;
        }
    }
    Ok(v)
}

/// Trace distance `(1/2)·Σ|eig(ρ−σ)|`.
///
/// The difference is symmetrized with its adjoint before the eigensolve to
/// absorb round-off in nearly-Hermitian inputs.
pub fn trace_distance<T: Scalar>(
    rho: &ComplexMatrix<T>,
    sigma: &ComplexMatrix<T>,
) -> Result<T, LinalgError> {
    if !rho.is_square() {
        return Err(LinalgError::NotSquare {
            rows: rho.rows(),
            cols: rho.cols(),
        });
    }
    if (rho.rows(), rho.cols()) != (sigma.rows(), sigma.cols()) {
        return Err(LinalgError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            rho.rows(),
            rho.cols(),
            sigma.rows(),
            sigma.cols()
        )));
    }
    let diff = rho.sub(sigma).hermitize();
    let (evals, _) = crate::eig::hermitian_eig(&diff)?;
    let sum = evals.iter().fold(T::zero(), |acc, &e| acc + e.abs());
    Ok(sum * T::lit(0.5))
}

/// Whether `‖m†m − I‖_max ≤ tol`. Non-square matrices are never unitary.
pub fn is_unitary<T: Scalar>(m: &ComplexMatrix<T>, tol: T) -> bool {
    if !m.is_square() {
        return false;
    }
    let gram = m.adjoint().matmul(m);
    gram.max_abs_diff(&ComplexMatrix::identity(m.rows())) <= tol
}

/// Applies a square matrix to the listed tensor factors of a state.
///
/// `positions` gives the factors the matrix acts on, most significant first;
/// its dimension must equal the product of those factor sizes. The complement
/// factors are untouched. Permutations are realized as index maps, never as
/// dense matrices on the full space.
pub fn apply_to_factors<T: Scalar>(
    state: &ComplexVector<T>,
    dims: &TensorDims,
    positions: &[usize],
    m: &ComplexMatrix<T>,
) -> Result<ComplexVector<T>, LinalgError> {
    let n = dims.len();
    let mut seen = vec![false; n];
    for &p in positions {
        if p >= n {
            return Err(LinalgError::FactorOutOfRange {
                index: p,
                factors: n,
            });
        }
        if seen[p] {
            return Err(LinalgError::DuplicateFactor { index: p });
        }
        seen[p] = true;
    }
    let total = dims.product();
    if state.dim() != total {
        return Err(LinalgError::DimensionMismatch(format!(
            "state dimension {} does not match tensor factor product {}",
            state.dim(),
            total
        )));
    }
    let gdims: Vec<usize> = positions.iter().map(|&p| dims.factors()[p]).collect();
    let g: usize = gdims.iter().product();
    if !m.is_square() || m.rows() != g {
        return Err(LinalgError::DimensionMismatch(format!(
            "operator is {}x{} but the named factors span dimension {}",
            m.rows(),
            m.cols(),
            g
        )));
    }
    let strides = dims.strides();
    // Offset of each operator sub-index within the full index space.
    let mut offsets = vec![0usize; g];
    for (a, offset) in offsets.iter_mut().enumerate() {
        let mut rem = a;
        for i in (0..positions.len()).rev() {
            let digit = rem % gdims[i];
            rem /= gdims[i];
            *offset += digit * strides[positions[i]];
        }
    }
    let rest: Vec<usize> = (0..n).filter(|p| !seen[*p]).collect();
    let rest_count: usize = rest.iter().map(|&p| dims.factors()[p]).product();
    let mut out = ComplexVector::zeros(total);
    let mut scratch = vec![Complex::<T>::zero(); g];
    for r in 0..rest_count {
        let mut base = 0usize;
        let mut rem = r;
        for i in (0..rest.len()).rev() {
            let d = dims.factors()[rest[i]];
            base += (rem % d) * strides[rest[i]];
            rem /= d;
        }
        for (a, s) in scratch.iter_mut().enumerate() {
            *s = state.entries()[base + offsets[a]];
        }
        for row in 0..g {
            let mut acc = Complex::zero();
            for (col, s) in scratch.iter().enumerate() {
                acc += m.get(row, col) * s;
            }
            out.entries_mut()[base + offsets[row]] = acc;
        }
    }
    Ok(out)
}

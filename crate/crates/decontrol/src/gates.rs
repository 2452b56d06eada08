//! Small fixed gates used by the demos, the test suites, and the transform.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::linalg::{kron, ComplexMatrix};
use crate::scalar::Scalar;

pub fn pauli_x<T: Scalar>() -> ComplexMatrix<T> {
    ComplexMatrix::from_rows(&[
        vec![(T::zero(), T::zero()), (T::one(), T::zero())],
        vec![(T::one(), T::zero()), (T::zero(), T::zero())],
    ])
}

pub fn pauli_y<T: Scalar>() -> ComplexMatrix<T> {
    ComplexMatrix::from_rows(&[
        vec![(T::zero(), T::zero()), (T::zero(), -T::one())],
        vec![(T::zero(), T::one()), (T::zero(), T::zero())],
    ])
}

pub fn pauli_z<T: Scalar>() -> ComplexMatrix<T> {
    ComplexMatrix::diagonal(&[Complex::one(), -Complex::<T>::one()])
}

pub fn hadamard<T: Scalar>() -> ComplexMatrix<T> {
    let s = T::one() / T::lit(2.0).sqrt();
    ComplexMatrix::from_rows(&[
        vec![(s, T::zero()), (s, T::zero())],
        vec![(s, T::zero()), (-s, T::zero())],
    ])
}

/// Rotation about the Y axis by `theta`.
pub fn rotation_y<T: Scalar>(theta: T) -> ComplexMatrix<T> {
    let half = theta * T::lit(0.5);
    let (c, s) = (half.cos(), half.sin());
    ComplexMatrix::from_rows(&[
        vec![(c, T::zero()), (-s, T::zero())],
        vec![(s, T::zero()), (c, T::zero())],
    ])
}

/// Diagonal phase gate `diag(1, e^{iθ})`.
pub fn phase_gate<T: Scalar>(theta: T) -> ComplexMatrix<T> {
    ComplexMatrix::diagonal(&[Complex::one(), Complex::from_polar(T::one(), theta)])
}

/// SWAP of two `d`-dimensional factors.
pub fn swap<T: Scalar>(d: usize) -> ComplexMatrix<T> {
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m.set(j * d + i, i * d + j, Complex::one());
        }
    }
    m
}

/// Cyclic shift `|k⟩ → |k+shift mod d⟩`.
pub fn adder<T: Scalar>(d: usize, shift: i64) -> ComplexMatrix<T> {
    let mut m = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        let target = (k as i64 + shift).rem_euclid(d as i64) as usize;
        m.set(target, k, Complex::one());
    }
    m
}

/// Block unitary applying `m` when a leading qubit factor is `|1⟩`.
pub fn controlled<T: Scalar>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    assert!(m.is_square());
    let d = m.rows();
    let p0 = ComplexMatrix::diagonal(&[Complex::one(), Complex::zero()]);
    let p1 = ComplexMatrix::diagonal(&[Complex::zero(), Complex::one()]);
    kron(&p0, &ComplexMatrix::identity(d)).add(&kron(&p1, m))
}

/// Unitary mapping `|0…0⟩` to the given unit vector (a Householder
/// reflection when the target differs from the first basis vector).
pub fn prepare_state<T: Scalar>(target: &crate::linalg::ComplexVector<T>) -> ComplexMatrix<T> {
    let dim = target.dim();
    let mut v: Vec<Complex<T>> = target.entries().to_vec();
    v[0] -= Complex::one();
    let norm_sq = v
        .iter()
        .map(|c| c.norm_sqr())
        .fold(T::zero(), |a, b| a + b);
    if norm_sq <= T::epsilon() * T::lit(16.0) {
        return ComplexMatrix::identity(dim);
    }
    let scale = Complex::new(T::lit(2.0) / norm_sq, T::zero());
    let mut m = ComplexMatrix::identity(dim);
    for i in 0..dim {
        for j in 0..dim {
            let val = m.get(i, j) - scale * v[i] * v[j].conj();
            m.set(i, j, val);
        }
    }
    m
}

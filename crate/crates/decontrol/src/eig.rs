//! Eigendecompositions: a cyclic Jacobi solver for complex Hermitian
//! matrices, and a unitary eigensolver built on top of it.
//!
//! A unitary `U` is normal, so its Hermitian and anti-Hermitian parts
//! `A = (U+U†)/2` and `B = (U−U†)/(2i)` commute and can be diagonalized
//! simultaneously: diagonalize `A`, then diagonalize `B` restricted to each
//! (near-)degenerate eigenspace of `A`. Eigenvalues are recovered as
//! Rayleigh quotients `v†Uv`, which are second-order accurate in the
//! eigenvector error.

use num_complex::Complex;
use num_traits::Zero;

use crate::linalg::{is_unitary, ComplexMatrix, LinalgError};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 60;

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order with the matching orthonormal
/// eigenvectors as columns. The input is symmetrized first, so nearly
/// Hermitian inputs are handled gracefully.
pub fn hermitian_eig<T: Scalar>(
    h: &ComplexMatrix<T>,
) -> Result<(Vec<T>, ComplexMatrix<T>), LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let n = h.rows();
    let mut a = h.hermitize();
    let mut v = ComplexMatrix::<T>::identity(n);
    if n <= 1 {
        let evals = (0..n).map(|i| a.get(i, i).re).collect();
        return Ok((evals, v));
    }

    let scale = a.max_abs().max(T::one());
    let conv_tol = T::epsilon() * scale * T::lit(n as f64);
    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).norm());
            }
        }
        if off <= conv_tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        // One final check: quadratic convergence usually lands well before
        // the sweep cap, so reaching it signals a genuinely bad input.
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).norm());
            }
        }
        if off > conv_tol {
            return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i)
            .re
            .partial_cmp(&a.get(j, j).re)
            .expect("eigenvalues are finite")
    });
    let evals: Vec<T> = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut vecs = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vecs.set(row, new_col, v.get(row, old_col));
        }
    }
    Ok((evals, vecs))
}

// One complex Jacobi rotation zeroing a[p][q]. The off-diagonal entry is
// rephased to a real value, then the classic symmetric 2x2 rotation applies.
fn rotate<T: Scalar>(a: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>, p: usize, q: usize) {
    let apq = a.get(p, q);
    let mag = apq.norm();
    if mag <= T::epsilon() * a.max_abs().max(T::one()) * T::lit(0.01) {
        return;
    }
    let alpha = apq / Complex::new(mag, T::zero()); // unit phase of a[p][q]
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let tau = (aqq - app) / (mag + mag);
    let t = if tau.is_zero() {
        T::one()
    } else {
        let sign = if tau >= T::zero() { T::one() } else { -T::one() };
        sign / (tau.abs() + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;

    // G restricted to (p,q): [[c, s], [-s·conj(α), c·conj(α)]].
    let g_pp = Complex::new(c, T::zero());
    let g_pq = Complex::new(s, T::zero());
    let g_qp = -alpha.conj() * s;
    let g_qq = alpha.conj() * c;

    let n = a.rows();
    // Columns: A ← A·G, V ← V·G.
    for i in 0..n {
        let aip = a.get(i, p);
        let aiq = a.get(i, q);
        a.set(i, p, aip * g_pp + aiq * g_qp);
        a.set(i, q, aip * g_pq + aiq * g_qq);
        let vip = v.get(i, p);
        let viq = v.get(i, q);
        v.set(i, p, vip * g_pp + viq * g_qp);
        v.set(i, q, vip * g_pq + viq * g_qq);
    }
    // Rows: A ← G†·A.
    for j in 0..n {
        let apj = a.get(p, j);
        let aqj = a.get(q, j);
        a.set(p, j, apj * g_pp.conj() + aqj * g_qp.conj());
        a.set(q, j, apj * g_pq.conj() + aqj * g_qq.conj());
    }
    // Clamp the zeroed pair and keep the diagonal exactly real.
    a.set(p, q, Complex::zero());
    a.set(q, p, Complex::zero());
    let dpp = a.get(p, p).re;
    let dqq = a.get(q, q).re;
    a.set(p, p, Complex::new(dpp, T::zero()));
    a.set(q, q, Complex::new(dqq, T::zero()));
}

// Eigenvalues of the Hermitian part closer than this are treated as one
// eigenspace when splitting with the anti-Hermitian part.
fn cluster_tol<T: Scalar>() -> T {
    T::lit(1e-8)
}

/// Eigendecomposition of a unitary matrix.
///
/// Returns the unit-modulus eigenvalues and an orthonormal eigenbasis as
/// matrix columns. For degenerate eigenvalues any orthonormal basis of the
/// eigenspace may be returned. Fails if the input is not unitary within
/// [`crate::UNITARY_TOL`].
pub fn unitary_eig<T: Scalar>(
    u: &ComplexMatrix<T>,
) -> Result<(Vec<Complex<T>>, ComplexMatrix<T>), LinalgError> {
    let tol = T::tol(crate::UNITARY_TOL, 1e3);
    if !is_unitary(u, tol) {
        return Err(LinalgError::NotUnitary {
            tol: crate::UNITARY_TOL,
        });
    }
    let n = u.rows();
    let half = Complex::new(T::lit(0.5), T::zero());
    let herm = u.add(&u.adjoint()).scale(half);
    let anti = u
        .sub(&u.adjoint())
        .scale(Complex::new(T::zero(), -T::lit(0.5)));

    let (a_vals, mut basis) = hermitian_eig(&herm)?;

    // Split each cluster of equal Re-parts with the anti-Hermitian part, which
    // maps the cluster's eigenspace to itself because the parts commute.
    let ctol = cluster_tol::<T>();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && a_vals[end] - a_vals[end - 1] <= ctol {
            end += 1;
        }
        let g = end - start;
        if g > 1 {
            let mut sub = ComplexMatrix::<T>::zeros(g, g);
            for i in 0..g {
                for j in 0..g {
                    let mut acc = Complex::zero();
                    for r in 0..n {
                        let mut bv = Complex::zero();
                        for k in 0..n {
                            bv += anti.get(r, k) * basis.get(k, start + j);
                        }
                        acc += basis.get(r, start + i).conj() * bv;
                    }
                    sub.set(i, j, acc);
                }
            }
            let (_, w) = hermitian_eig(&sub)?;
            let mut rotated = vec![Complex::<T>::zero(); n * g];
            for r in 0..n {
                for j in 0..g {
                    let mut acc = Complex::zero();
                    for i in 0..g {
                        acc += basis.get(r, start + i) * w.get(i, j);
                    }
                    rotated[r * g + j] = acc;
                }
            }
            for r in 0..n {
                for j in 0..g {
                    basis.set(r, start + j, rotated[r * g + j]);
                }
            }
        }
        start = end;
    }

    // Rayleigh quotients recover the eigenvalues with second-order accuracy.
    let mut evals = Vec::with_capacity(n);
    for j in 0..n {
        let mut lambda = Complex::zero();
        for r in 0..n {
            let mut uv = Complex::zero();
            for k in 0..n {
                uv += u.get(r, k) * basis.get(k, j);
            }
            lambda += basis.get(r, j).conj() * uv;
        }
        evals.push(lambda);
    }
    Ok((evals, basis))
}

//! Small dense helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::weyl::Operator;

/// `exp(-i t H)` for Hermitian `H` via eigen-decomposition.
pub fn expm_hermitian(h: &Operator, t: f64) -> Operator {
    let eig = h.clone().symmetric_eigen();
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -t * e)),
    );
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&phases) * v.adjoint()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    a.kronecker(b)
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermitian_deviation(m: &Operator) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &Operator, b: &Operator) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn frobenius(m: &Operator) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian generator `H` with `exp(-i H) = u`, eigenphases folded into (-π, π].
///
/// `u` must be unitary. Its eigenvectors are taken from the Hermitian pencil
/// `Re u + c·Im u` with an irrational `c`, which separates distinct eigenphases.
pub fn unitary_generator(u: &Operator) -> Operator {
    const C: f64 = 0.381_966_011_250_105_1;
    let i = C64::new(0.0, 1.0);
    let re = (u + u.adjoint()).scale(0.5);
    let im = (u - u.adjoint()) * (-i * 0.5);
    let pencil = &re + im.scale(C);
    let eig = pencil.symmetric_eigen();
    let v = eig.eigenvectors;
    let phases = DVector::from_iterator(
        v.ncols(),
        (0..v.ncols()).map(|k| {
            let col = v.column(k);
            let lambda = (col.adjoint() * u * col)[(0, 0)];
            let mut phi = lambda.arg();
            if phi <= -std::f64::consts::PI {
                phi += std::f64::consts::TAU;
            }
            C64::new(-phi, 0.0)
        }),
    );
    let h = &v * DMatrix::from_diagonal(&phases) * v.adjoint();
    // symmetrise away rounding
    (&h + h.adjoint()).scale(0.5)
}

/// Complex product through four real GEMMs; much faster than the generic
/// complex kernel for the large verifier matrices.
pub fn fast_mul(a: &Operator, b: &Operator) -> Operator {
    let ar = a.map(|z| z.re);
    let ai = a.map(|z| z.im);
    let br = b.map(|z| z.re);
    let bi = b.map(|z| z.im);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

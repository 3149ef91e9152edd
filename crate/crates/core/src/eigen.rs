//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, StateVector};

/// Maximum number of full Jacobi sweeps before giving up.
const MAX_SWEEPS: usize = 100;

/// Full spectrum of a Hermitian matrix: eigenvalues descending, eigenvectors
/// as matching columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> StateVector {
        let n = self.eigenvectors.rows();
        StateVector::new((0..n).map(|r| self.eigenvectors[(r, i)]).collect())
    }

    /// V Λ V†, for residual checks.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let lambda = ComplexMatrix::diag_real(&self.eigenvalues);
        &(&self.eigenvectors * &lambda) * &self.eigenvectors.dagger()
    }
}

/// Diagonalizes a Hermitian matrix.
///
/// Convergence threshold is `1e-12 · ‖M‖_F` on the off-diagonal Frobenius
/// norm, with a cap of 100 sweeps.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let herm_tol = 1e-9 * m.max_norm().max(1.0);
    let dev = m.hermiticity_deviation();
    if dev > herm_tol {
        return Err(Error::NotHermitian { deviation: dev });
    }

    // Work on the exactly Hermitian average; round-off in the input must not
    // leak into complex diagonal entries.
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mut v = ComplexMatrix::identity(n);

    let fro = a.frobenius_norm();
    let tol = 1e-12 * fro;
    let skip = if n > 0 { tol / (10.0 * n as f64) } else { 0.0 };

    let mut off = off_diagonal_norm(&a);
    let mut sweeps = 0;
    while off > tol {
        if sweeps >= MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() <= skip {
                    continue;
                }
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);

    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            sum += 2.0 * a[(p, q)].norm_sqr();
        }
    }
    sum.sqrt()
}

/// One complex Jacobi rotation zeroing a[(p,q)].
///
/// The rotation U acts on coordinates (p,q) as
///   U = [[ c,          -s·e^{iα} ],
///        [ s·e^{-iα},   c        ]]
/// with α = arg a[(p,q)], chosen so that (U† A U)[(p,q)] = 0.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = a.rows();
    let apq = a[(p, q)];
    let m_abs = apq.norm();
    let phase = apq / m_abs;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;

    let tau = (aqq - app) / (2.0 * m_abs);
    let hyp = (tau * tau + 1.0).sqrt();
    let t = if tau >= 0.0 {
        -1.0 / (tau + hyp)
    } else {
        1.0 / (-tau + hyp)
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let cs = Complex64::new(c, 0.0);
    let s_ph = phase * s; //  s·e^{iα}
    let s_ph_conj = s_ph.conj(); //  s·e^{-iα}

    // A ← A·U  (columns p, q)
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = cs * aip + s_ph_conj * aiq;
        a[(i, q)] = -s_ph * aip + cs * aiq;
    }
    // A ← U†·A  (rows p, q)
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = cs * apj + s_ph * aqj;
        a[(q, j)] = -s_ph_conj * apj + cs * aqj;
    }
    // exact zeros on the eliminated pair, real diagonal
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    // V ← V·U
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = cs * vip + s_ph_conj * viq;
        v[(i, q)] = -s_ph * vip + cs * viq;
    }
}

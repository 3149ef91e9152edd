//! Shannon and von Neumann entropies (in bits) and state purification.

use num_complex::Complex64;

use crate::eigen::hermitian_eigen;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, StateVector};

/// Eigenvalues in [-NEGATIVE_EIGENVALUE_TOL, 0) are treated as round-off and
/// clamped to zero; anything more negative is a genuine PSD failure.
pub const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-7;

/// Rank cutoff for purification: eigenvalues at or below this are dropped.
const RANK_TOL: f64 = 1e-10;

/// −Σ p·log₂(p) with the convention 0·log 0 = 0.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &v in p {
        if v < -1e-12 {
            return Err(Error::NotNormalized { sum: v });
        }
        sum += v;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { sum });
    }
    Ok(entropy_terms(p.iter().copied()))
}

/// −Σ λᵢ·log₂(λᵢ) over the spectrum of a density matrix.
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64> {
    let trace = rho.trace().re;
    if (trace - 1.0).abs() > 1e-9 {
        return Err(Error::TraceNotOne { trace });
    }
    let spectrum = hermitian_eigen(rho)?;
    entropy_from_eigenvalues(spectrum.eigenvalues())
}

/// Entropy of a spectrum, clamping round-off negatives and rejecting genuine
/// negativity.
pub(crate) fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> Result<f64> {
    for &ev in eigenvalues {
        if ev < -NEGATIVE_EIGENVALUE_TOL {
            return Err(Error::NegativeEigenvalue { value: ev });
        }
    }
    Ok(entropy_terms(eigenvalues.iter().map(|&ev| ev.max(0.0))))
}

fn entropy_terms(values: impl Iterator<Item = f64>) -> f64 {
    values.filter(|&v| v > 0.0).map(|v| -v * v.log2()).sum()
}

/// Canonical purification of a density matrix.
///
/// Returns |ψ⟩ on H_S ⊗ H_E with the environment last and
/// dim(H_E) = rank(rho), built from the eigendecomposition:
/// |ψ⟩ = Σᵢ √λᵢ |vᵢ⟩ ⊗ |i⟩.
pub fn purify(rho: &ComplexMatrix) -> Result<StateVector> {
    let trace = rho.trace().re;
    if (trace - 1.0).abs() > 1e-9 {
        return Err(Error::TraceNotOne { trace });
    }
    let spectrum = hermitian_eigen(rho)?;
    for &ev in spectrum.eigenvalues() {
        if ev < -NEGATIVE_EIGENVALUE_TOL {
            return Err(Error::NegativeEigenvalue { value: ev });
        }
    }
    let rank = spectrum
        .eigenvalues()
        .iter()
        .filter(|&&ev| ev > RANK_TOL)
        .count()
        .max(1);

    let n = rho.rows();
    let mut amps = vec![Complex64::new(0.0, 0.0); n * rank];
    for e in 0..rank {
        let weight = spectrum.eigenvalues()[e].max(0.0).sqrt();
        let vec = spectrum.eigenvector(e);
        for s in 0..n {
            amps[s * rank + e] = vec.amplitudes()[s] * weight;
        }
    }
    Ok(StateVector::new(amps))
}

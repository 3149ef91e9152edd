//! Constructs the measured family of realizations: Fourier basis, generalized
//! Pauli X and its fractional power, overlap matrices, maximally entangled
//! states, the two-basis realization for any (d, ε), and junk-padded dilations
//! for adversarial testing.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::hermitian_eigen;
use crate::entropy::NEGATIVE_EIGENVALUE_TOL;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, StateVector};

/// Tolerance for POVM completeness, PSD and projectivity checks.
pub const POVM_TOL: f64 = 1e-9;

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    Ok(())
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) || !eps.is_finite() {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    Ok(())
}

/// ω_d^t = e^{2πi·t/d}.
fn root_of_unity_power(d: usize, t: f64) -> Complex64 {
    let angle = 2.0 * PI * t / d as f64;
    Complex64::new(angle.cos(), angle.sin())
}

/// Fourier basis |χ_j⟩ = (1/√d) Σ_k ω_d^{jk} |k⟩.
pub fn fourier_basis(d: usize) -> Result<Vec<StateVector>> {
    check_dim(d)?;
    let scale = 1.0 / (d as f64).sqrt();
    Ok((0..d)
        .map(|j| {
            StateVector::new(
                (0..d)
                    .map(|k| root_of_unity_power(d, (j * k) as f64) * scale)
                    .collect(),
            )
        })
        .collect())
}

/// Generalized Pauli X, the cyclic shift Σ_j |j+1 mod d⟩⟨j|.
///
/// Diagonal in the Fourier basis with X = Σ_j ω_d^{−j} |χ_j⟩⟨χ_j|.
pub fn pauli_x(d: usize) -> Result<ComplexMatrix> {
    check_dim(d)?;
    let mut x = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        x[((j + 1) % d, j)] = Complex64::new(1.0, 0.0);
    }
    Ok(x)
}

/// U_ε = Σ_j ω_d^{εj} |χ_j⟩⟨χ_j| for ε ∈ [0, 1].
///
/// Built from the spectral form directly, so it is unitary by construction.
/// U_0 = I, and U_1 is the basis permutation Σ_j |j⟩⟨j+1 mod d| = X†
/// (the shift X itself has eigenvalue ω_d^{−j} on |χ_j⟩).
pub fn u_epsilon(d: usize, eps: f64) -> Result<ComplexMatrix> {
    check_dim(d)?;
    check_epsilon(eps)?;
    let basis = fourier_basis(d)?;
    let mut u = ComplexMatrix::zeros(d, d);
    for (j, chi) in basis.iter().enumerate() {
        let phase = root_of_unity_power(d, eps * j as f64);
        u = &u + &chi.projector().scale(phase);
    }
    Ok(u)
}

/// Entrywise absolute overlaps between two orthonormal bases.
#[derive(Debug, Clone)]
pub struct OverlapMatrix {
    d: usize,
    entries: Vec<f64>,
}

impl OverlapMatrix {
    pub fn new(d: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "overlap matrix for dimension {} needs {} entries, got {}",
                d,
                d * d,
                entries.len()
            )));
        }
        Ok(Self { d, entries })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// O[j][k] = |⟨j|e_k⟩|.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[j * self.d + k]
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest deviation of row/column squared sums from 1. Both bases being
    /// orthonormal makes O∘O doubly stochastic.
    pub fn doubly_stochastic_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.d {
            let row: f64 = (0..self.d).map(|k| self.get(j, k).powi(2)).sum();
            let col: f64 = (0..self.d).map(|k| self.get(k, j).powi(2)).sum();
            worst = worst.max((row - 1.0).abs()).max((col - 1.0).abs());
        }
        worst
    }

    pub fn max_abs_difference(&self, other: &OverlapMatrix) -> f64 {
        assert_eq!(self.d, other.d, "overlap dimension mismatch");
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// O_jk = |⟨j|U_ε|k⟩| by direct matrix elements.
pub fn overlap_direct(d: usize, eps: f64) -> Result<OverlapMatrix> {
    let u = u_epsilon(d, eps)?;
    let entries = (0..d)
        .flat_map(|j| (0..d).map(move |k| (j, k)))
        .map(|(j, k)| u[(j, k)].norm())
        .collect();
    OverlapMatrix::new(d, entries)
}

/// Closed-form overlap via the geometric sum:
/// O_jk² = (1/d²)·[1 − cos(2π(ε−k+j))] / [1 − cos((2π/d)(ε−k+j))].
///
/// Only valid for ε strictly inside (0, 1), where ε−k+j is never an integer
/// and the denominator never vanishes.
pub fn overlap_closed_form(d: usize, eps: f64) -> Result<OverlapMatrix> {
    check_dim(d)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::EpsilonNotInterior(eps));
    }
    let mut entries = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in 0..d {
            let alpha = eps - k as f64 + j as f64;
            // 1 − cos(x) written as 2·sin²(x/2); avoids cancellation as ε → 0
            let numer = 2.0 * (PI * alpha).sin().powi(2);
            let denom = 2.0 * (PI * alpha / d as f64).sin().powi(2);
            let sq = numer / (denom * d.pow(2) as f64);
            entries.push(sq.max(0.0).sqrt());
        }
    }
    OverlapMatrix::new(d, entries)
}

/// |φ⁺_d⟩ = (1/√d) Σ_j |jj⟩.
pub fn max_entangled(d: usize) -> Result<StateVector> {
    check_dim(d)?;
    let scale = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
    for j in 0..d {
        amps[j * d + j] = scale;
    }
    Ok(StateVector::new(amps))
}

/// Bell-scenario shape: outcome counts per setting for each party.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub alice_outcomes: Vec<usize>,
    pub bob_outcomes: Vec<usize>,
}

impl Scenario {
    pub fn new(alice_outcomes: Vec<usize>, bob_outcomes: Vec<usize>) -> Result<Self> {
        let s = Self {
            alice_outcomes,
            bob_outcomes,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alice_outcomes.is_empty() || self.bob_outcomes.is_empty() {
            return Err(Error::InvalidScenario(
                "each party needs at least one setting".into(),
            ));
        }
        if self
            .alice_outcomes
            .iter()
            .chain(self.bob_outcomes.iter())
            .any(|&k| k == 0)
        {
            return Err(Error::InvalidScenario(
                "every setting needs at least one outcome".into(),
            ));
        }
        Ok(())
    }

    pub fn alice_settings(&self) -> usize {
        self.alice_outcomes.len()
    }

    pub fn bob_settings(&self) -> usize {
        self.bob_outcomes.len()
    }
}

/// A measurement: one positive effect per outcome, summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    /// Validates hermiticity, positivity and completeness on construction.
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidPovm("no effects".into()));
        }
        let dim = effects[0].rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (a, effect) in effects.iter().enumerate() {
            if !effect.is_square() || effect.rows() != dim {
                return Err(Error::InvalidPovm(format!(
                    "effect {} is {}x{}, expected {}x{}",
                    a,
                    effect.rows(),
                    effect.cols(),
                    dim,
                    dim
                )));
            }
            let dev = effect.hermiticity_deviation();
            if dev > POVM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "effect {a} is not Hermitian (deviation {dev:.3e})"
                )));
            }
            let spectrum = hermitian_eigen(effect)?;
            if let Some(&min) = spectrum.eigenvalues().last() {
                if min < -POVM_TOL {
                    return Err(Error::InvalidPovm(format!(
                        "effect {a} has negative eigenvalue {min:.3e}"
                    )));
                }
            }
            sum = &sum + effect;
        }
        let completeness = (&sum - &ComplexMatrix::identity(dim)).max_norm();
        if completeness > POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {completeness:.3e}"
            )));
        }
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].rows()
    }

    /// max over a,b of ‖E_a² − E_a‖ and ‖E_a·E_b‖ (a ≠ b).
    pub fn projectivity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, ea) in self.effects.iter().enumerate() {
            for (b, eb) in self.effects.iter().enumerate() {
                let prod = ea * eb;
                let target = if a == b {
                    (&prod - ea).max_norm()
                } else {
                    prod.max_norm()
                };
                worst = worst.max(target);
            }
        }
        worst
    }

    pub fn is_projective(&self) -> bool {
        self.projectivity_residual() <= POVM_TOL
    }

    /// Entrywise complex conjugate of every effect; with |φ⁺_d⟩ this mirrors
    /// the measurement to the other side of the state.
    pub fn conjugate(&self) -> Povm {
        Povm {
            effects: self.effects.iter().map(|e| e.conj()).collect(),
        }
    }
}

/// A state together with both parties' measurement families and the
/// designated key settings.
#[derive(Debug, Clone)]
pub struct Realization {
    pub state: ComplexMatrix,
    pub dim_a: usize,
    pub dim_b: usize,
    pub alice: Vec<Povm>,
    pub bob: Vec<Povm>,
    pub key_setting_alice: usize,
    pub key_setting_bob: usize,
}

impl Realization {
    pub fn new(
        state: ComplexMatrix,
        dim_a: usize,
        dim_b: usize,
        alice: Vec<Povm>,
        bob: Vec<Povm>,
        key_setting_alice: usize,
        key_setting_bob: usize,
    ) -> Result<Self> {
        if state.rows() != dim_a * dim_b || !state.is_square() {
            return Err(Error::InvalidRealization(format!(
                "state is {}x{}, expected {}",
                state.rows(),
                state.cols(),
                dim_a * dim_b
            )));
        }
        let dev = state.hermiticity_deviation();
        if dev > POVM_TOL {
            return Err(Error::InvalidRealization(format!(
                "state is not Hermitian (deviation {dev:.3e})"
            )));
        }
        let trace = state.trace().re;
        if (trace - 1.0).abs() > POVM_TOL {
            return Err(Error::InvalidRealization(format!("state trace is {trace}")));
        }
        for p in &alice {
            if p.dim() != dim_a {
                return Err(Error::InvalidRealization(format!(
                    "Alice POVM dimension {} does not match {}",
                    p.dim(),
                    dim_a
                )));
            }
        }
        for p in &bob {
            if p.dim() != dim_b {
                return Err(Error::InvalidRealization(format!(
                    "Bob POVM dimension {} does not match {}",
                    p.dim(),
                    dim_b
                )));
            }
        }
        if key_setting_alice >= alice.len() || key_setting_bob >= bob.len() {
            return Err(Error::InvalidRealization("key setting out of range".into()));
        }
        Ok(Self {
            state,
            dim_a,
            dim_b,
            alice,
            bob,
            key_setting_alice,
            key_setting_bob,
        })
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            alice_outcomes: self.alice.iter().map(|p| p.outcomes()).collect(),
            bob_outcomes: self.bob.iter().map(|p| p.outcomes()).collect(),
        }
    }

    pub fn alice_key(&self) -> &Povm {
        &self.alice[self.key_setting_alice]
    }

    pub fn bob_key(&self) -> &Povm {
        &self.bob[self.key_setting_bob]
    }

    /// Inserts extra Bob settings (e.g. loaded from a measurement file) in
    /// front of the key setting, which stays last.
    pub fn with_bob_settings(mut self, extra: Vec<Povm>) -> Result<Self> {
        for p in &extra {
            if p.dim() != self.dim_b {
                return Err(Error::InvalidRealization(format!(
                    "plugin POVM dimension {} does not match {}",
                    p.dim(),
                    self.dim_b
                )));
            }
        }
        let key = self.bob.remove(self.key_setting_bob);
        let mut bob = extra;
        let mut rest = self.bob;
        bob.append(&mut rest);
        bob.push(key);
        self.key_setting_bob = bob.len() - 1;
        self.bob = bob;
        Ok(self)
    }

    /// Classical cyclic flip on Bob's key outcome: with probability q the
    /// recorded outcome is shifted by one. Only H(A|B) is affected.
    pub fn with_bob_key_noise(&self, q: f64) -> Result<Realization> {
        if !(0.0..=0.5).contains(&q) {
            return Err(Error::NoiseOutOfRange(q));
        }
        let mut out = self.clone();
        let key = &self.bob[self.key_setting_bob];
        let k = key.outcomes();
        let effects: Vec<ComplexMatrix> = (0..k)
            .map(|b| {
                let stay = key.effects()[b].scale_real(1.0 - q);
                let flipped = key.effects()[(b + k - 1) % k].scale_real(q);
                &stay + &flipped
            })
            .collect();
        out.bob[self.key_setting_bob] = Povm::new(effects)?;
        Ok(out)
    }
}

fn basis_projectors(d: usize) -> Vec<ComplexMatrix> {
    (0..d)
        .map(|j| StateVector::basis(d, j).projector())
        .collect()
}

/// The reference realization for (d, ε): |φ⁺_d⟩, Alice measuring the
/// computational basis (setting 0, the key setting) or the U_ε-rotated basis
/// (setting 1), Bob measuring the computational basis.
pub fn ideal_realization(d: usize, eps: f64) -> Result<Realization> {
    let u = u_epsilon(d, eps)?;
    let state = max_entangled(d)?.projector();
    let alice_key = Povm::new(basis_projectors(d))?;
    let rotated = Povm::new(
        (0..d)
            .map(|k| {
                let col = StateVector::new((0..d).map(|r| u[(r, k)]).collect());
                col.projector()
            })
            .collect(),
    )?;
    let bob_key = Povm::new(basis_projectors(d))?;
    Realization::new(state, d, d, vec![alice_key, rotated], vec![bob_key], 0, 0)
}

/// Haar-distributed unitary from a Ginibre sample via modified Gram-Schmidt.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(dim, rng);
    // columns of g, orthonormalized; the second pass removes first-pass residue
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|j| (0..dim).map(|i| g[(i, j)]).collect())
        .collect();
    for _ in 0..2 {
        for j in 0..dim {
            for k in 0..j {
                let proj: Complex64 = (0..dim).map(|i| cols[k][i].conj() * cols[j][i]).sum();
                for i in 0..dim {
                    let sub = proj * cols[k][i];
                    cols[j][i] -= sub;
                }
            }
            let norm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in &mut cols[j] {
                *z /= norm;
            }
        }
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Full-rank random density matrix: G†G of a Ginibre sample, trace-normalized.
pub fn random_density(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(dim, rng);
    let rho = &g.dagger() * &g;
    let trace = rho.trace().re;
    rho.scale_real(1.0 / trace)
}

fn ginibre(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(standard_normal(rng), standard_normal(rng))
    })
}

/// Box-Muller; keeps the dependency surface to plain uniform sampling.
fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// The random ingredients behind a dilation, kept so tests can reconstruct
/// the expected junk state.
#[derive(Debug, Clone)]
pub struct DilationParts {
    pub w_a: ComplexMatrix,
    pub w_b: ComplexMatrix,
    pub junk: ComplexMatrix,
}

/// Junk-padded version of a realization with the same Born correlation.
///
/// The state becomes (ρ ⊗ σ_junk) conjugated by seeded random local unitaries
/// W_A ⊗ W_B, and every effect E becomes W(E ⊗ I_junk)W†.
pub fn dilate(real: &Realization, junk_a: usize, junk_b: usize, seed: u64) -> Result<Realization> {
    Ok(dilate_with_parts(real, junk_a, junk_b, seed)?.0)
}

pub fn dilate_with_parts(
    real: &Realization,
    junk_a: usize,
    junk_b: usize,
    seed: u64,
) -> Result<(Realization, DilationParts)> {
    if junk_a == 0 || junk_b == 0 {
        return Err(Error::InvalidRealization(
            "junk dimensions must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let junk = random_density(junk_a * junk_b, &mut rng);
    let w_a = random_unitary(real.dim_a * junk_a, &mut rng);
    let w_b = random_unitary(real.dim_b * junk_b, &mut rng);

    // (A, B, A', B') → (A, A', B, B'), then conjugate by W_A ⊗ W_B
    let padded = real
        .state
        .kron(&junk)
        .permute_systems(&[real.dim_a, real.dim_b, junk_a, junk_b], &[0, 2, 1, 3])?;
    let w = w_a.kron(&w_b);
    let state = &(&w * &padded) * &w.dagger();

    let alice = real
        .alice
        .iter()
        .map(|p| dilate_povm(p, &w_a, junk_a))
        .collect::<Result<Vec<_>>>()?;
    let bob = real
        .bob
        .iter()
        .map(|p| dilate_povm(p, &w_b, junk_b))
        .collect::<Result<Vec<_>>>()?;

    let dilated = Realization::new(
        state,
        real.dim_a * junk_a,
        real.dim_b * junk_b,
        alice,
        bob,
        real.key_setting_alice,
        real.key_setting_bob,
    )?;
    Ok((dilated, DilationParts { w_a, w_b, junk }))
}

/// Pads every effect with identity junk and conjugates by the given unitary.
pub fn dilate_povm(povm: &Povm, w: &ComplexMatrix, junk_dim: usize) -> Result<Povm> {
    let junk_id = ComplexMatrix::identity(junk_dim);
    Povm::new(
        povm.effects()
            .iter()
            .map(|e| &(w * &e.kron(&junk_id)) * &w.dagger())
            .collect(),
    )
}

/// A realization bundled with the Bob-side mirror operators and the overlap
/// matrix that the isometry construction consumes.
#[derive(Debug, Clone)]
pub struct Instance {
    pub realization: Realization,
    pub hat_p: Povm,
    pub hat_q: Povm,
    pub overlap: OverlapMatrix,
}

/// Ideal instance: the mirror operators are the entrywise conjugates of
/// Alice's measurements, which satisfy the same overlap relations.
pub fn ideal_instance(d: usize, eps: f64) -> Result<Instance> {
    let realization = ideal_realization(d, eps)?;
    let hat_p = realization.alice[0].conjugate();
    let hat_q = realization.alice[1].conjugate();
    let overlap = overlap_direct(d, eps)?;
    Ok(Instance {
        realization,
        hat_p,
        hat_q,
        overlap,
    })
}

/// Dilates a full instance, padding the mirror operators with Bob's unitary.
pub fn dilate_instance(
    inst: &Instance,
    junk_a: usize,
    junk_b: usize,
    seed: u64,
) -> Result<Instance> {
    let (realization, parts) = dilate_with_parts(&inst.realization, junk_a, junk_b, seed)?;
    let hat_p = dilate_povm(&inst.hat_p, &parts.w_b, junk_b)?;
    let hat_q = dilate_povm(&inst.hat_q, &parts.w_b, junk_b)?;
    Ok(Instance {
        realization,
        hat_p,
        hat_q,
        overlap: inst.overlap.clone(),
    })
}

/// PSD check used by tests and validation paths.
pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    let spectrum = hermitian_eigen(m)?;
    Ok(spectrum
        .eigenvalues()
        .last()
        .copied()
        .unwrap_or(f64::INFINITY))
}

/// Checks that a matrix is a density matrix within standard tolerances.
pub fn check_density(m: &ComplexMatrix) -> Result<()> {
    let trace = m.trace().re;
    if (trace - 1.0).abs() > POVM_TOL {
        return Err(Error::TraceNotOne { trace });
    }
    let min = min_eigenvalue(m)?;
    if min < -NEGATIVE_EIGENVALUE_TOL {
        return Err(Error::NegativeEigenvalue { value: min });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fourier_d2_second_vector() {
        let basis = fourier_basis(2).unwrap();
        let minus = &basis[1];
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((minus.amplitudes()[0] - c(s, 0.0)).norm() < 1e-12);
        assert!((minus.amplitudes()[1] - c(-s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn fourier_d3_orthonormal() {
        let basis = fourier_basis(3).unwrap();
        for (i, v) in basis.iter().enumerate() {
            for (j, w) in basis.iter().enumerate() {
                let g = v.inner(w);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fourier_d4_flat_amplitudes() {
        let basis = fourier_basis(4).unwrap();
        for v in &basis {
            for amp in v.amplitudes() {
                assert!((amp.norm() - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fourier_rejects_small_dim() {
        assert!(fourier_basis(1).is_err());
    }

    #[test]
    fn pauli_x_d2_standard() {
        let x = pauli_x(2).unwrap();
        assert!((x[(0, 1)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[(1, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(x[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn pauli_x_cubed_is_identity() {
        let x = pauli_x(3).unwrap();
        let x3 = &(&x * &x) * &x;
        assert!((&x3 - &ComplexMatrix::identity(3)).max_norm() < 1e-12);
    }

    #[test]
    fn pauli_x_spectral_form_matches_shift() {
        // X|χ_j⟩ = ω^{−j}|χ_j⟩: shifting the Fourier sum reindexes it with
        // one inverse phase left over
        for d in 2..=8 {
            let shift = pauli_x(d).unwrap();
            let basis = fourier_basis(d).unwrap();
            let mut spectral = ComplexMatrix::zeros(d, d);
            for (j, chi) in basis.iter().enumerate() {
                spectral = &spectral + &chi.projector().scale(root_of_unity_power(d, -(j as f64)));
            }
            assert!((&shift - &spectral).max_norm() < 1e-12, "d = {d}");
        }
    }

    #[test]
    fn u_epsilon_endpoints() {
        // U_1 carries the ω^{+j} phases, so it is the inverse shift X†;
        // for d = 2 the two coincide
        for d in 2..=6 {
            let u0 = u_epsilon(d, 0.0).unwrap();
            assert!((&u0 - &ComplexMatrix::identity(d)).max_norm() < 1e-12);
            let u1 = u_epsilon(d, 1.0).unwrap();
            assert!((&u1 - &pauli_x(d).unwrap().dagger()).max_norm() < 1e-12);
        }
        let u1 = u_epsilon(2, 1.0).unwrap();
        assert!((&u1 - &pauli_x(2).unwrap()).max_norm() < 1e-12);
    }

    #[test]
    fn u_epsilon_half_way_qubit() {
        let u = u_epsilon(2, 0.5).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                assert!((u[(j, k)].norm_sqr() - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn u_epsilon_unitary() {
        let u = u_epsilon(5, 0.37).unwrap();
        let prod = &u.dagger() * &u;
        assert!((&prod - &ComplexMatrix::identity(5)).max_norm() < 1e-12);
    }

    #[test]
    fn u_epsilon_rejects_out_of_range() {
        assert!(u_epsilon(3, -0.1).is_err());
        assert!(u_epsilon(3, 1.1).is_err());
    }

    #[test]
    fn u_epsilon_distance_to_identity_formula() {
        // ‖U_ε − I‖₂ = 2·max_j |sin(πεj/d)|: both sides computed independently
        for &(d, eps) in &[(2usize, 0.3), (4, 0.11), (6, 0.9)] {
            let u = u_epsilon(d, eps).unwrap();
            let diff = &u - &ComplexMatrix::identity(d);
            let gram = &diff.dagger() * &diff;
            let top = hermitian_eigen(&gram).unwrap().eigenvalues()[0]
                .max(0.0)
                .sqrt();
            let formula = (0..d)
                .map(|j| 2.0 * (PI * eps * j as f64 / d as f64).sin().abs())
                .fold(0.0, f64::max);
            assert!((top - formula).abs() < 1e-10, "d={d} eps={eps}");
        }
    }

    #[test]
    fn overlap_eps_zero_is_identity() {
        let o = overlap_direct(4, 0.0).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                let expected = if j == k { 1.0 } else { 0.0 };
                assert!((o.get(j, k) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn overlap_interior_strictly_positive() {
        for d in 2..=8 {
            for &eps in &[0.05, 0.3, 0.77, 0.95] {
                let o = overlap_direct(d, eps).unwrap();
                assert!(o.min_entry() > 0.0, "d={d} eps={eps}");
            }
        }
    }

    #[test]
    fn overlap_cross_oracle_agreement() {
        let direct = overlap_direct(3, 0.5).unwrap();
        let closed = overlap_closed_form(3, 0.5).unwrap();
        assert!(direct.max_abs_difference(&closed) < 1e-10);
    }

    #[test]
    fn overlap_closed_form_hand_value() {
        // d=2, ε=1/2, j=k: O² = (1/4)·(1−cos π)/(1−cos(π/2)) = 1/2
        let o = overlap_closed_form(2, 0.5).unwrap();
        assert!((o.get(0, 0).powi(2) - 0.5).abs() < 1e-12);
        assert!((o.get(1, 1).powi(2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn overlap_closed_form_rejects_endpoints() {
        assert!(overlap_closed_form(3, 0.0).is_err());
        assert!(overlap_closed_form(3, 1.0).is_err());
    }

    #[test]
    fn overlap_doubly_stochastic() {
        let o = overlap_direct(6, 0.41).unwrap();
        assert!(o.doubly_stochastic_residual() < 1e-9);
    }

    #[test]
    fn max_entangled_qubit_amplitudes() {
        let phi = max_entangled(2).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((phi.amplitudes()[0] - c(s, 0.0)).norm() < 1e-12);
        assert!((phi.amplitudes()[3] - c(s, 0.0)).norm() < 1e-12);
        assert!(phi.amplitudes()[1].norm() < 1e-15);
    }

    #[test]
    fn max_entangled_reduced_states() {
        for d in 2..=5 {
            let phi = max_entangled(d).unwrap();
            let rho = phi.projector();
            let expected = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
            for keep in [&[0usize][..], &[1usize][..]] {
                let reduced = rho.partial_trace(&[d, d], keep).unwrap();
                assert!((&reduced - &expected).max_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn max_entangled_transpose_trick() {
        // (M ⊗ I)|φ⁺⟩ = (I ⊗ Mᵀ)|φ⁺⟩, contracted directly
        let d = 3;
        let phi = max_entangled(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = ComplexMatrix::from_fn(d, d, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let id = ComplexMatrix::identity(d);
        let lhs = m.kron(&id).mul_vec(&phi);
        let rhs = id.kron(&m.transpose()).mul_vec(&phi);
        let diff: f64 = lhs
            .amplitudes()
            .iter()
            .zip(rhs.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn ideal_realization_povms_projective() {
        let real = ideal_realization(3, 0.4).unwrap();
        for p in real.alice.iter().chain(real.bob.iter()) {
            assert!(p.is_projective());
        }
    }

    #[test]
    fn ideal_realization_eps_zero_settings_equal() {
        let real = ideal_realization(3, 0.0).unwrap();
        for (e0, e1) in real.alice[0].effects().iter().zip(real.alice[1].effects()) {
            assert!((e0 - e1).max_norm() < 1e-12);
        }
    }

    #[test]
    fn ideal_realization_key_pair_correlated() {
        // p(a,b|0,ŷ) = δ_ab/2 by direct contraction: ⟨φ⁺|(A⊗B)|φ⁺⟩ = (1/d)Σ A[j,k]B[j,k]
        let d = 2;
        let real = ideal_realization(d, 0.3).unwrap();
        for a in 0..d {
            for b in 0..d {
                let ea = &real.alice[0].effects()[a];
                let eb = &real.bob[0].effects()[b];
                let mut acc = c(0.0, 0.0);
                for j in 0..d {
                    for k in 0..d {
                        acc += ea[(j, k)] * eb[(j, k)];
                    }
                }
                let p = (acc / d as f64).re;
                let expected = if a == b { 0.5 } else { 0.0 };
                assert!((p - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn with_bob_settings_keeps_key_last() {
        let real = ideal_realization(2, 0.5).unwrap();
        let extra = vec![
            Povm::new(basis_projectors(2)).unwrap(),
            Povm::new(basis_projectors(2)).unwrap(),
        ];
        let real = real.with_bob_settings(extra).unwrap();
        assert_eq!(real.bob.len(), 3);
        assert_eq!(real.key_setting_bob, 2);
    }

    #[test]
    fn noise_povm_valid_and_symmetric() {
        let real = ideal_realization(2, 0.5).unwrap();
        let noisy = real.with_bob_key_noise(0.1).unwrap();
        let key = noisy.bob_key();
        assert_eq!(key.outcomes(), 2);
        // effects remain PSD and complete by Povm construction; not projective
        assert!(!key.is_projective());
        assert!(real.with_bob_key_noise(0.6).is_err());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(6, &mut rng);
        let prod = &u.dagger() * &u;
        assert!((&prod - &ComplexMatrix::identity(6)).max_norm() < 1e-12);
    }

    #[test]
    fn random_density_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density(4, &mut rng);
        check_density(&rho).unwrap();
        assert!(
            min_eigenvalue(&rho).unwrap() > 0.0,
            "Ginibre G†G is full rank"
        );
    }

    #[test]
    fn dilation_state_stays_density() {
        let real = ideal_realization(2, 0.5).unwrap();
        let dilated = dilate(&real, 2, 2, 42).unwrap();
        assert_eq!(dilated.dim_a, 4);
        check_density(&dilated.state).unwrap();
    }

    #[test]
    fn dilation_preserves_born_probabilities() {
        // ⟨(A⊗B)⟩ evaluated by direct index loops on both realizations
        let born = |real: &Realization, x: usize, a: usize, b: usize| -> f64 {
            let ea = &real.alice[x].effects()[a];
            let eb = &real.bob[0].effects()[b];
            let (da, db) = (real.dim_a, real.dim_b);
            let mut acc = c(0.0, 0.0);
            for i in 0..da {
                for j in 0..da {
                    for k in 0..db {
                        for l in 0..db {
                            acc += ea[(i, j)] * eb[(k, l)] * real.state[(j * db + l, i * db + k)];
                        }
                    }
                }
            }
            acc.re
        };
        let real = ideal_realization(2, 0.5).unwrap();
        let trivial = dilate(&real, 1, 1, 3).unwrap();
        let padded = dilate(&real, 2, 2, 42).unwrap();
        for x in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let reference = born(&real, x, a, b);
                    assert!((born(&trivial, x, a, b) - reference).abs() < 1e-10);
                    assert!((born(&padded, x, a, b) - reference).abs() < 1e-10);
                }
            }
        }
    }
}

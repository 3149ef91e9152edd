//! Born correlations, conditional entropies, the classical-quantum state held
//! against the eavesdropper, and the Devetak–Winter key-rate bound.

use num_complex::Complex64;

use crate::construction::{Realization, Scenario};
use crate::entropy::{entropy_from_eigenvalues, shannon_entropy, NEGATIVE_EIGENVALUE_TOL};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, StateVector};

/// Probability tensor p(a,b|x,y) over a Bell scenario.
#[derive(Debug, Clone)]
pub struct Correlation {
    scenario: Scenario,
    /// values[x][y][a][b]
    values: Vec<Vec<Vec<Vec<f64>>>>,
}

impl Correlation {
    /// Validates shape, positivity, normalization and no-signaling.
    pub fn new(scenario: Scenario, values: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self> {
        scenario.validate()?;
        let corr = Self { scenario, values };
        corr.validate()?;
        Ok(corr)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn values(&self) -> &Vec<Vec<Vec<Vec<f64>>>> {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.values[x][y][a][b]
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        if self.values.len() != s.alice_settings() {
            return Err(Error::CorrelationInvariant {
                x: self.values.len(),
                y: 0,
                detail: "wrong number of Alice settings".into(),
            });
        }
        for (x, per_y) in self.values.iter().enumerate() {
            if per_y.len() != s.bob_settings() {
                return Err(Error::CorrelationInvariant {
                    x,
                    y: per_y.len(),
                    detail: "wrong number of Bob settings".into(),
                });
            }
            for (y, block) in per_y.iter().enumerate() {
                if block.len() != s.alice_outcomes[x]
                    || block.iter().any(|row| row.len() != s.bob_outcomes[y])
                {
                    return Err(Error::CorrelationInvariant {
                        x,
                        y,
                        detail: "outcome block shape mismatch".into(),
                    });
                }
                let mut sum = 0.0;
                for row in block {
                    for &p in row {
                        if p < -1e-12 {
                            return Err(Error::CorrelationInvariant {
                                x,
                                y,
                                detail: format!("negative probability {p}"),
                            });
                        }
                        sum += p;
                    }
                }
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::CorrelationInvariant {
                        x,
                        y,
                        detail: format!("probabilities sum to {sum}"),
                    });
                }
            }
        }
        // no-signaling: Alice's marginal independent of y, Bob's of x
        for x in 0..s.alice_settings() {
            for a in 0..s.alice_outcomes[x] {
                let first: f64 = self.values[x][0][a].iter().sum();
                for y in 1..s.bob_settings() {
                    let here: f64 = self.values[x][y][a].iter().sum();
                    if (here - first).abs() > 1e-9 {
                        return Err(Error::CorrelationInvariant {
                            x,
                            y,
                            detail: format!(
                                "Alice marginal for outcome {a} depends on Bob's setting: {first} vs {here}"
                            ),
                        });
                    }
                }
            }
        }
        for y in 0..s.bob_settings() {
            for b in 0..s.bob_outcomes[y] {
                let first: f64 = (0..s.alice_outcomes[0])
                    .map(|a| self.values[0][y][a][b])
                    .sum();
                for x in 1..s.alice_settings() {
                    let here: f64 = (0..s.alice_outcomes[x])
                        .map(|a| self.values[x][y][a][b])
                        .sum();
                    if (here - first).abs() > 1e-9 {
                        return Err(Error::CorrelationInvariant {
                            x,
                            y,
                            detail: format!(
                                "Bob marginal for outcome {b} depends on Alice's setting: {first} vs {here}"
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// p_A(a|x), computed against Bob's first setting (legal after the
    /// no-signaling check).
    pub fn alice_marginal(&self, x: usize) -> Vec<f64> {
        self.values[x][0]
            .iter()
            .map(|row| row.iter().sum())
            .collect()
    }
}

/// Full Born tensor p(a,b|x,y) = tr[(A^x_a ⊗ B^y_b)ρ].
pub fn born_correlation(real: &Realization) -> Result<Correlation> {
    let scenario = real.scenario();
    let mut values = Vec::with_capacity(real.alice.len());
    for pa in &real.alice {
        let mut per_y = Vec::with_capacity(real.bob.len());
        for pb in &real.bob {
            let mut block = vec![vec![0.0; pb.outcomes()]; pa.outcomes()];
            for (a, ea) in pa.effects().iter().enumerate() {
                for (b, eb) in pb.effects().iter().enumerate() {
                    block[a][b] = born_probability(ea, eb, &real.state);
                }
            }
            per_y.push(block);
        }
        values.push(per_y);
    }
    Correlation::new(scenario, values)
}

/// tr[(E_A ⊗ E_B)ρ] without forming the Kronecker product:
/// Σ over index pairs of (E_A)[i,j]·(E_B)[k,l]·ρ[(j,l),(i,k)].
fn born_probability(ea: &ComplexMatrix, eb: &ComplexMatrix, rho: &ComplexMatrix) -> f64 {
    let da = ea.rows();
    let db = eb.rows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..da {
        for j in 0..da {
            let a = ea[(i, j)];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    acc += a * eb[(k, l)] * rho[(j * db + l, i * db + k)];
                }
            }
        }
    }
    acc.re
}

/// Conditional Shannon entropy H(A|B) = H(AB) − H(B) of the joint outcome
/// distribution at the designated settings, in bits.
pub fn h_a_given_b(corr: &Correlation, x_hat: usize, y_hat: usize) -> Result<f64> {
    let s = corr.scenario();
    if x_hat >= s.alice_settings() {
        return Err(Error::InvalidSetting {
            index: x_hat,
            available: s.alice_settings(),
        });
    }
    if y_hat >= s.bob_settings() {
        return Err(Error::InvalidSetting {
            index: y_hat,
            available: s.bob_settings(),
        });
    }
    let block = &corr.values()[x_hat][y_hat];
    let joint: Vec<f64> = block
        .iter()
        .flatten()
        .copied()
        .map(|p| p.max(0.0))
        .collect();
    let bob: Vec<f64> = (0..s.bob_outcomes[y_hat])
        .map(|b| block.iter().map(|row| row[b].max(0.0)).sum())
        .collect();
    Ok(shannon_entropy(&joint)? - shannon_entropy(&bob)?)
}

/// Block-diagonal classical-quantum state: Alice's key outcome alongside the
/// eavesdropper's conditional state.
#[derive(Debug, Clone)]
pub struct ClassicalQuantumState {
    /// p_A(a|x̂): trace of each block.
    pub outcome_probs: Vec<f64>,
    /// One environment operator per outcome, trace = outcome probability.
    pub conditional_env_states: Vec<ComplexMatrix>,
}

impl ClassicalQuantumState {
    pub fn env_dim(&self) -> usize {
        self.conditional_env_states
            .first()
            .map(|m| m.rows())
            .unwrap_or(0)
    }

    /// σ_E = Σ_a blocks.
    pub fn env_state(&self) -> ComplexMatrix {
        let r = self.env_dim();
        self.conditional_env_states
            .iter()
            .fold(ComplexMatrix::zeros(r, r), |acc, m| &acc + m)
    }

    /// max_a ‖block_a − p_a·σ_E‖: zero exactly when the eavesdropper learns
    /// nothing from Alice's outcome.
    pub fn product_form_residual(&self) -> f64 {
        let env = self.env_state();
        self.conditional_env_states
            .iter()
            .zip(&self.outcome_probs)
            .map(|(block, &p)| (block - &env.scale_real(p)).max_norm())
            .fold(0.0, f64::max)
    }
}

/// ‖tr_E|ψ⟩⟨ψ| − ρ‖ for a purification laid out as H_AB ⊗ H_E (environment
/// last).
pub fn purification_residual(real: &Realization, purification: &StateVector) -> Result<f64> {
    let m = real.state.rows();
    let total = purification.dim();
    if total % m != 0 || total == 0 {
        return Err(Error::DimensionMismatch(format!(
            "purification dimension {total} is not a multiple of the state dimension {m}"
        )));
    }
    let r = total / m;
    let amps = purification.amplitudes();
    let mut worst: f64 = 0.0;
    for s in 0..m {
        for t in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..r {
                acc += amps[s * r + e] * amps[t * r + e].conj();
            }
            worst = worst.max((acc - real.state[(s, t)]).norm());
        }
    }
    Ok(worst)
}

/// σ_AE blocks tr_AB[(A^x̂_a ⊗ I_B ⊗ I_E)|ψ⟩⟨ψ|] for every outcome a.
///
/// The projector |ψ⟩⟨ψ| is never formed; with Ψ the (dim_AB × dim_E)
/// reshaping of the purification, each block is (Ψ†(A⊗I)Ψ)ᵀ.
pub fn sigma_ae(real: &Realization, purification: &StateVector) -> Result<ClassicalQuantumState> {
    let residual = purification_residual(real, purification)?;
    if residual > 1e-9 {
        return Err(Error::PurificationMismatch { residual });
    }
    let m = real.state.rows();
    let r = purification.dim() / m;
    let amps = purification.amplitudes();
    let key = real.alice_key();
    let id_b = ComplexMatrix::identity(real.dim_b);

    let mut outcome_probs = Vec::with_capacity(key.outcomes());
    let mut blocks = Vec::with_capacity(key.outcomes());
    for effect in key.effects() {
        let padded = effect.kron(&id_b);
        // C = (A ⊗ I)·Ψ, block = (Ψ†C)ᵀ
        let mut c = vec![Complex64::new(0.0, 0.0); m * r];
        for s in 0..m {
            for t in 0..m {
                let w = padded[(s, t)];
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for e in 0..r {
                    c[s * r + e] += w * amps[t * r + e];
                }
            }
        }
        let mut block = ComplexMatrix::zeros(r, r);
        for e in 0..r {
            for ep in 0..r {
                let mut acc = Complex64::new(0.0, 0.0);
                for s in 0..m {
                    acc += c[s * r + e] * amps[s * r + ep].conj();
                }
                block[(e, ep)] = acc;
            }
        }
        outcome_probs.push(block.trace().re);
        blocks.push(block);
    }

    let total: f64 = outcome_probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { sum: total });
    }
    Ok(ClassicalQuantumState {
        outcome_probs,
        conditional_env_states: blocks,
    })
}

/// Conditional von Neumann entropy H(A|E) = H(AE) − H(E) in bits, from the
/// block-diagonal spectrum.
pub fn h_a_given_e(cq: &ClassicalQuantumState) -> Result<f64> {
    let mut joint_eigenvalues = Vec::new();
    for block in &cq.conditional_env_states {
        let spectrum = crate::eigen::hermitian_eigen(block)?;
        for &ev in spectrum.eigenvalues() {
            if ev < -NEGATIVE_EIGENVALUE_TOL {
                return Err(Error::NegativeEigenvalue { value: ev });
            }
            joint_eigenvalues.push(ev);
        }
    }
    let h_ae = entropy_from_eigenvalues(&joint_eigenvalues)?;
    let env = cq.env_state();
    let h_e = entropy_from_eigenvalues(crate::eigen::hermitian_eigen(&env)?.eigenvalues())?;
    Ok(h_ae - h_e)
}

/// The Devetak–Winter bound r ≥ H(A|E) − H(A|B) evaluated for one explicit
/// purification (a certificate for this instance, not an infimum over all
/// compatible models).
#[derive(Debug, Clone)]
pub struct KeyRateReport {
    pub h_a: f64,
    pub h_a_given_b: f64,
    pub h_a_given_e: f64,
    pub dw_rate: f64,
    pub purification_residual: f64,
    pub product_form_residual: f64,
}

pub fn devetak_winter(real: &Realization, purification: &StateVector) -> Result<KeyRateReport> {
    let corr = born_correlation(real)?;
    let h_ab = h_a_given_b(&corr, real.key_setting_alice, real.key_setting_bob)?;
    let cq = sigma_ae(real, purification)?;
    let h_ae = h_a_given_e(&cq)?;
    let marginal = corr.alice_marginal(real.key_setting_alice);
    let h_a = shannon_entropy(&marginal)?;
    Ok(KeyRateReport {
        h_a,
        h_a_given_b: h_ab,
        h_a_given_e: h_ae,
        dw_rate: h_ae - h_ab,
        purification_residual: purification_residual(real, purification)?,
        product_form_residual: cq.product_form_residual(),
    })
}

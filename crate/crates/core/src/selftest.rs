//! Verification of the self-testing machinery: the overlap relations between
//! the two measurement families, the explicit local isometries built from
//! them, and the extraction identities for measurements, states and the
//! matrix-form privacy condition.

use num_complex::Complex64;

use crate::construction::{max_entangled, min_eigenvalue, OverlapMatrix, Povm, Realization};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, StateVector};

/// Anchor column entries at or below this make the 1/O coefficients blow up.
pub const OVERLAP_ANCHOR_TOLERANCE: f64 = 1e-6;

/// Residuals of the relations P_j Q_k P_j = O_jk² P_j and
/// Q_k P_j Q_k = O_jk² Q_k, plus projectivity of both families.
#[derive(Debug, Clone)]
pub struct RelationReport {
    pub max_residual_pqp: f64,
    pub max_residual_qpq: f64,
    pub projectivity_residual: f64,
    /// Per-pair residuals indexed (j, k): (pqp, qpq).
    pub pair_residuals: Vec<Vec<(f64, f64)>>,
}

impl RelationReport {
    pub fn max_residual(&self) -> f64 {
        self.max_residual_pqp
            .max(self.max_residual_qpq)
            .max(self.projectivity_residual)
    }
}

pub fn check_relations(p: &Povm, q: &Povm, o: &OverlapMatrix) -> Result<RelationReport> {
    let d = p.outcomes();
    if q.outcomes() != d || o.dim() != d || p.dim() != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relation check needs matching shapes: P has {} outcomes on dim {}, \
             Q has {} on dim {}, O has dimension {}",
            d,
            p.dim(),
            q.outcomes(),
            q.dim(),
            o.dim()
        )));
    }

    let mut pair_residuals = vec![vec![(0.0, 0.0); d]; d];
    let mut max_pqp: f64 = 0.0;
    let mut max_qpq: f64 = 0.0;
    for j in 0..d {
        let pj = &p.effects()[j];
        for k in 0..d {
            let qk = &q.effects()[k];
            let o2 = o.get(j, k).powi(2);
            let pqp = (&(&(pj * qk) * pj) - &pj.scale_real(o2)).max_norm();
            let qpq = (&(&(qk * pj) * qk) - &qk.scale_real(o2)).max_norm();
            pair_residuals[j][k] = (pqp, qpq);
            max_pqp = max_pqp.max(pqp);
            max_qpq = max_qpq.max(qpq);
        }
    }

    let projectivity_residual = p.projectivity_residual().max(q.projectivity_residual());

    Ok(RelationReport {
        max_residual_pqp: max_pqp,
        max_residual_qpq: max_qpq,
        projectivity_residual,
        pair_residuals,
    })
}

/// The explicit local isometries V_A: H_A → C^d ⊗ H_{A'} and
/// V_B: H_B → C^d ⊗ H_{B'}, stored as (d·n) × n matrices.
#[derive(Debug, Clone)]
pub struct IsometryPair {
    v_a: ComplexMatrix,
    v_b: ComplexMatrix,
    anchor: usize,
    block_dim: usize,
}

impl IsometryPair {
    pub fn v_a(&self) -> &ComplexMatrix {
        &self.v_a
    }

    pub fn v_b(&self) -> &ComplexMatrix {
        &self.v_b
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    /// Number of outcomes d (the extracted block dimension).
    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn dim_a(&self) -> usize {
        self.v_a.cols()
    }

    pub fn dim_b(&self) -> usize {
        self.v_b.cols()
    }

    /// max(‖V_A†V_A − I‖, ‖V_B†V_B − I‖); small whenever the overlap
    /// relations hold.
    pub fn isometry_residual(&self) -> f64 {
        let ra =
            (&(&self.v_a.dagger() * &self.v_a) - &ComplexMatrix::identity(self.dim_a())).max_norm();
        let rb =
            (&(&self.v_b.dagger() * &self.v_b) - &ComplexMatrix::identity(self.dim_b())).max_norm();
        ra.max(rb)
    }
}

/// Builds both isometries from the measurement operators and a fixed anchor
/// column j of the overlap matrix:
/// V = (1/O_{d−1,j}) Σ_k (1/O_{kj}) |k⟩ ⊗ P_{d−1} Q_j P_k.
pub fn build_isometries(
    p: &Povm,
    q: &Povm,
    hat_p: &Povm,
    hat_q: &Povm,
    o: &OverlapMatrix,
    anchor: usize,
) -> Result<IsometryPair> {
    let d = p.outcomes();
    if q.outcomes() != d || hat_p.outcomes() != d || hat_q.outcomes() != d || o.dim() != d {
        return Err(Error::DimensionMismatch(
            "all measurement families must share the outcome count of the overlap matrix".into(),
        ));
    }
    if anchor >= d {
        return Err(Error::InvalidSetting {
            index: anchor,
            available: d,
        });
    }
    for k in 0..d {
        let value = o.get(k, anchor);
        if value <= OVERLAP_ANCHOR_TOLERANCE {
            return Err(Error::NearZeroOverlap {
                row: k,
                col: anchor,
                value,
                threshold: OVERLAP_ANCHOR_TOLERANCE,
            });
        }
    }

    let v_a = stack_isometry(p, q, o, anchor);
    let v_b = stack_isometry(hat_p, hat_q, o, anchor);
    Ok(IsometryPair {
        v_a,
        v_b,
        anchor,
        block_dim: d,
    })
}

fn stack_isometry(p: &Povm, q: &Povm, o: &OverlapMatrix, anchor: usize) -> ComplexMatrix {
    let d = p.outcomes();
    let n = p.dim();
    let last = &p.effects()[d - 1];
    let q_anchor = &q.effects()[anchor];
    let lead = &(last * q_anchor);
    let outer_coeff = 1.0 / o.get(d - 1, anchor);

    let mut v = ComplexMatrix::zeros(d * n, n);
    for k in 0..d {
        let coeff = outer_coeff / o.get(k, anchor);
        let block = (lead * &p.effects()[k]).scale_real(coeff);
        for r in 0..n {
            for c in 0..n {
                v[(k * n + r, c)] = block[(r, c)];
            }
        }
    }
    v
}

/// Residual of an extraction identity together with the operator read off
/// the relevant block.
#[derive(Debug, Clone)]
pub struct ExtractionReport {
    pub max_residual: f64,
    pub extracted: ComplexMatrix,
}

/// Checks V_A P_a V_A† = |a⟩⟨a| ⊗ Ã for a fixed Ã, read off the (0,0) block
/// of the a = 0 conjugation. For the reference family Ã equals P_{d−1}.
pub fn verify_measurement_extraction(iso: &IsometryPair, p: &Povm) -> Result<ExtractionReport> {
    let d = iso.block_dim;
    let n = iso.dim_a();
    if p.outcomes() != d || p.dim() != n {
        return Err(Error::DimensionMismatch(
            "measurement does not match the isometry it was built from".into(),
        ));
    }

    let conjugated: Vec<ComplexMatrix> = (0..d)
        .map(|a| &(&iso.v_a * &p.effects()[a]) * &iso.v_a.dagger())
        .collect();
    let extracted = conjugated[0].block(0, 0, n, n);

    let mut max_residual: f64 = 0.0;
    for (a, m) in conjugated.iter().enumerate() {
        let target = StateVector::basis(d, a).projector().kron(&extracted);
        max_residual = max_residual.max((m - &target).max_norm());
    }
    Ok(ExtractionReport {
        max_residual,
        extracted,
    })
}

/// Checks V_B V_B† = I_{C^d} ⊗ B̃ with B̃ read off the first block.
pub fn verify_bob_projection(iso: &IsometryPair) -> ExtractionReport {
    let d = iso.block_dim;
    let n = iso.dim_b();
    let m = &(&iso.v_b * &iso.v_b.dagger());
    let extracted = m.block(0, 0, n, n);
    let target = ComplexMatrix::identity(d).kron(&extracted);
    ExtractionReport {
        max_residual: (m - &target).max_norm(),
        extracted,
    }
}

/// Result of pushing a state through V_A ⊗ V_B and splitting off the
/// maximally entangled block.
#[derive(Debug, Clone)]
pub struct StateExtractionReport {
    pub residual: f64,
    /// Extracted junk state σ_{A'B'}, trace-normalized.
    pub junk: ComplexMatrix,
    pub junk_trace: f64,
}

/// Verifies (V_A ⊗ V_B) ρ (V_A† ⊗ V_B†) = |φ⁺_d⟩⟨φ⁺_d| ⊗ σ_{A'B'}.
///
/// The transformed state lives on (C^d, A', C^d, B'); it is reordered to
/// (C^d, C^d, A', B'), σ is read off by the partial expectation
/// ⟨φ⁺_d|·|φ⁺_d⟩ over the paired C^d factors, and the residual compares the
/// reconstruction against the transformed state.
pub fn verify_state_extraction(
    iso: &IsometryPair,
    rho: &ComplexMatrix,
    d: usize,
) -> Result<StateExtractionReport> {
    if d != iso.block_dim {
        return Err(Error::DimensionMismatch(format!(
            "requested block dimension {} but isometries extract {}",
            d, iso.block_dim
        )));
    }
    let n_a = iso.dim_a();
    let n_b = iso.dim_b();
    if rho.rows() != n_a * n_b || !rho.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, expected {}",
            rho.rows(),
            rho.cols(),
            n_a * n_b
        )));
    }

    let transformed = conjugate_and_reorder(iso, rho)?;
    let phi = max_entangled(d)?;
    let junk_raw = partial_expectation_first(&transformed, &phi, n_a * n_b);
    let reconstruction = phi.projector().kron(&junk_raw);
    let residual = (&transformed - &reconstruction).max_norm();

    let junk_trace = junk_raw.trace().re;
    let junk = if junk_trace.abs() > 1e-12 {
        junk_raw.scale_real(1.0 / junk_trace)
    } else {
        junk_raw
    };
    Ok(StateExtractionReport {
        residual,
        junk,
        junk_trace,
    })
}

/// X·M·X† for X = V_A ⊗ V_B, reordered from (C^d, A', C^d, B') to
/// (C^d, C^d, A', B').
///
/// The Kronecker product is never formed: M is treated as a four-index
/// tensor and V_A, V_B are contracted one index at a time, which keeps the
/// cost near the size of the output instead of (d·n_A·d·n_B)²·n_A·n_B.
fn conjugate_and_reorder(iso: &IsometryPair, m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = iso.block_dim;
    let n_a = iso.dim_a();
    let n_b = iso.dim_b();
    let da = d * n_a;
    let db = d * n_b;
    let zero = Complex64::new(0.0, 0.0);

    // T[a1,b1,a2,b2] → Σ_{a1} V_A[α1,a1]·T: row-side A index
    let mut t1 = vec![zero; da * n_b * n_a * n_b];
    let rest1 = n_b * n_a * n_b;
    for alpha1 in 0..da {
        for a1 in 0..n_a {
            let v = iso.v_a[(alpha1, a1)];
            if v == zero {
                continue;
            }
            let dst = alpha1 * rest1;
            let src = a1 * n_b * n_a * n_b;
            for r in 0..rest1 {
                t1[dst + r] += v * m.data()[src + r];
            }
        }
    }

    // row-side B index: [α1,b1,(a2,b2)] → [α1,β1,(a2,b2)]
    let tail = n_a * n_b;
    let mut t2 = vec![zero; da * db * tail];
    for alpha1 in 0..da {
        let base1 = alpha1 * n_b * tail;
        let base2 = alpha1 * db * tail;
        for beta1 in 0..db {
            for b1 in 0..n_b {
                let v = iso.v_b[(beta1, b1)];
                if v == zero {
                    continue;
                }
                let src = base1 + b1 * tail;
                let dst = base2 + beta1 * tail;
                for r in 0..tail {
                    t2[dst + r] += v * t1[src + r];
                }
            }
        }
    }

    // column-side A index: [(α1,β1),a2,b2] → [(α1,β1),α2,b2], conjugated
    let lead = da * db;
    let mut t3 = vec![zero; lead * da * n_b];
    for l in 0..lead {
        let src_base = l * tail;
        let dst_base = l * da * n_b;
        for alpha2 in 0..da {
            for a2 in 0..n_a {
                let v = iso.v_a[(alpha2, a2)].conj();
                if v == zero {
                    continue;
                }
                let src = src_base + a2 * n_b;
                let dst = dst_base + alpha2 * n_b;
                for b2 in 0..n_b {
                    t3[dst + b2] += v * t2[src + b2];
                }
            }
        }
    }

    // column-side B index: [(α1,β1,α2),b2] → [(α1,β1,α2),β2], conjugated
    let mut out = ComplexMatrix::zeros(lead, lead);
    for row in 0..lead {
        for alpha2 in 0..da {
            let src_base = (row * da + alpha2) * n_b;
            for beta2 in 0..db {
                let mut acc = zero;
                for b2 in 0..n_b {
                    acc += iso.v_b[(beta2, b2)].conj() * t3[src_base + b2];
                }
                out[(row, alpha2 * db + beta2)] = acc;
            }
        }
    }

    out.permute_systems(&[d, n_a, d, n_b], &[0, 2, 1, 3])
}

/// ⟨v| m |v⟩ over the leading factor of C^{dim(v)} ⊗ C^{rest}.
fn partial_expectation_first(m: &ComplexMatrix, v: &StateVector, rest: usize) -> ComplexMatrix {
    let d = v.dim();
    debug_assert_eq!(m.rows(), d * rest);
    let mut out = ComplexMatrix::zeros(rest, rest);
    for g in 0..d {
        let vg = v.amplitudes()[g].conj();
        if vg == Complex64::new(0.0, 0.0) {
            continue;
        }
        for gp in 0..d {
            let vgp = v.amplitudes()[gp];
            if vgp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let w = vg * vgp;
            for a in 0..rest {
                for b in 0..rest {
                    out[(a, b)] += w * m[(g * rest + a, gp * rest + b)];
                }
            }
        }
    }
    out
}

/// Residuals of the matrix-form condition
/// (V_A⊗V_B)(A_a⊗I)ρ(V_A†⊗V_B†) = (|a⟩⟨a|⊗I)|φ⁺⟩⟨φ⁺| ⊗ (Ã⊗B̃)σ_{A'B'},
/// plus checks that (Ã⊗B̃)σ_{A'B'} is a quantum state.
#[derive(Debug, Clone)]
pub struct MatrixFormReport {
    pub max_residual: f64,
    /// Trace of the transformed operator per outcome; 1/d in the ideal case.
    pub outcome_traces: Vec<f64>,
    pub product_state_trace: f64,
    pub product_state_min_eigenvalue: f64,
}

pub fn verify_matrix_selftest(real: &Realization, iso: &IsometryPair) -> Result<MatrixFormReport> {
    let d = iso.block_dim;
    let n_a = iso.dim_a();
    let n_b = iso.dim_b();
    if real.dim_a != n_a || real.dim_b != n_b {
        return Err(Error::DimensionMismatch(
            "realization does not match the isometry dimensions".into(),
        ));
    }
    let key = real.alice_key();
    if key.outcomes() != d {
        return Err(Error::DimensionMismatch(format!(
            "key setting has {} outcomes, isometries extract {}",
            key.outcomes(),
            d
        )));
    }

    let a_tilde = verify_measurement_extraction(iso, key)?.extracted;
    let b_tilde = verify_bob_projection(iso).extracted;
    let phi = max_entangled(d)?;
    let sigma =
        partial_expectation_first(&conjugate_and_reorder(iso, &real.state)?, &phi, n_a * n_b);

    let product_state = &a_tilde.kron(&b_tilde) * &sigma;
    let product_state_trace = product_state.trace().re;
    let symmetrized = (&product_state + &product_state.dagger()).scale_real(0.5);
    let product_state_min_eigenvalue = min_eigenvalue(&symmetrized)?;

    let phi_proj = phi.projector();
    let id_b = ComplexMatrix::identity(n_b);
    let id_d = ComplexMatrix::identity(d);
    let mut max_residual: f64 = 0.0;
    let mut outcome_traces = Vec::with_capacity(d);
    for a in 0..d {
        let keyed = &key.effects()[a].kron(&id_b) * &real.state;
        let lhs = conjugate_and_reorder(iso, &keyed)?;
        outcome_traces.push(lhs.trace().re);

        let left = &StateVector::basis(d, a).projector().kron(&id_d) * &phi_proj;
        let rhs = left.kron(&product_state);
        max_residual = max_residual.max((&lhs - &rhs).max_norm());
    }

    Ok(MatrixFormReport {
        max_residual,
        outcome_traces,
        product_state_trace,
        product_state_min_eigenvalue,
    })
}

/// All verification residuals for one instance in a single pass.
#[derive(Debug, Clone)]
pub struct SelfTestSummary {
    pub relations: RelationReport,
    pub isometry_residual: f64,
    pub measurement_extraction: ExtractionReport,
    pub bob_projection: ExtractionReport,
    pub state_extraction: StateExtractionReport,
    pub matrix_form: MatrixFormReport,
    pub anchor: usize,
}

impl SelfTestSummary {
    /// Largest residual over every verified identity.
    pub fn max_residual(&self) -> f64 {
        self.relations
            .max_residual()
            .max(self.isometry_residual)
            .max(self.measurement_extraction.max_residual)
            .max(self.bob_projection.max_residual)
            .max(self.state_extraction.residual)
            .max(self.matrix_form.max_residual)
    }
}

/// Runs the whole verification suite on a realization whose Alice settings 0
/// and 1 play the roles of P and Q, with the given mirror operators.
pub fn verify_instance(
    real: &Realization,
    hat_p: &Povm,
    hat_q: &Povm,
    o: &OverlapMatrix,
    anchor: usize,
) -> Result<SelfTestSummary> {
    if real.alice.len() < 2 {
        return Err(Error::InvalidRealization(
            "need both measurement families on Alice's side".into(),
        ));
    }
    let p = &real.alice[0];
    let q = &real.alice[1];
    let relations = check_relations(p, q, o)?;
    let iso = build_isometries(p, q, hat_p, hat_q, o, anchor)?;
    let measurement_extraction = verify_measurement_extraction(&iso, p)?;
    let bob_projection = verify_bob_projection(&iso);
    let state_extraction = verify_state_extraction(&iso, &real.state, iso.block_dim())?;
    let matrix_form = verify_matrix_selftest(real, &iso)?;
    Ok(SelfTestSummary {
        relations,
        isometry_residual: iso.isometry_residual(),
        measurement_extraction,
        bob_projection,
        state_extraction,
        matrix_form,
        anchor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{
        dilate_instance, dilate_with_parts, ideal_instance, ideal_realization, overlap_direct, Povm,
    };

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ideal_iso(d: usize, eps: f64, anchor: usize) -> IsometryPair {
        let inst = ideal_instance(d, eps).unwrap();
        build_isometries(
            &inst.realization.alice[0],
            &inst.realization.alice[1],
            &inst.hat_p,
            &inst.hat_q,
            &inst.overlap,
            anchor,
        )
        .unwrap()
    }

    #[test]
    fn relations_hold_for_ideal_instances() {
        for &(d, eps) in &[(2usize, 0.5), (3, 0.25), (4, 0.7)] {
            let real = ideal_realization(d, eps).unwrap();
            let o = overlap_direct(d, eps).unwrap();
            let report = check_relations(&real.alice[0], &real.alice[1], &o).unwrap();
            assert!(report.max_residual() <= 1e-12, "d={d} eps={eps}");
        }
    }

    #[test]
    fn relations_trivial_at_eps_zero() {
        let real = ideal_realization(3, 0.0).unwrap();
        let o = overlap_direct(3, 0.0).unwrap();
        let report = check_relations(&real.alice[0], &real.alice[1], &o).unwrap();
        assert!(report.max_residual_pqp < 1e-14);
        assert!(report.max_residual_qpq < 1e-14);
    }

    #[test]
    fn relations_detect_rotated_q() {
        // rotate Q by angle 0.1 in the (0,1) plane but keep the old overlap
        let d = 3;
        let eps = 0.5;
        let real = ideal_realization(d, eps).unwrap();
        let o = overlap_direct(d, eps).unwrap();
        let mut rot = ComplexMatrix::identity(d);
        let (s, cth) = (0.1_f64.sin(), 0.1_f64.cos());
        rot[(0, 0)] = c(cth, 0.0);
        rot[(0, 1)] = c(-s, 0.0);
        rot[(1, 0)] = c(s, 0.0);
        rot[(1, 1)] = c(cth, 0.0);
        let rotated = Povm::new(
            real.alice[1]
                .effects()
                .iter()
                .map(|e| &(&rot * e) * &rot.dagger())
                .collect(),
        )
        .unwrap();
        let report = check_relations(&real.alice[0], &rotated, &o).unwrap();
        assert!(report.max_residual() > 1e-3);
    }

    #[test]
    fn isometry_property_ideal_qubit() {
        let iso = ideal_iso(2, 0.5, 0);
        assert!(iso.isometry_residual() < 1e-10);
    }

    #[test]
    fn isometry_rejects_near_zero_overlap() {
        let inst = ideal_instance(2, 1e-9).unwrap();
        let err = build_isometries(
            &inst.realization.alice[0],
            &inst.realization.alice[1],
            &inst.hat_p,
            &inst.hat_q,
            &inst.overlap,
            0,
        );
        assert!(matches!(err, Err(Error::NearZeroOverlap { .. })));
    }

    #[test]
    fn measurement_extraction_ideal_qubit() {
        let inst = ideal_instance(2, 0.5).unwrap();
        let iso = ideal_iso(2, 0.5, 0);
        let report = verify_measurement_extraction(&iso, &inst.realization.alice[0]).unwrap();
        assert!(report.max_residual <= 1e-10);
        // Ã = P_{d−1} = |1⟩⟨1|
        let p_last = &inst.realization.alice[0].effects()[1];
        assert!((&report.extracted - p_last).max_norm() <= 1e-10);
    }

    #[test]
    fn measurement_extraction_ideal_d4() {
        let inst = ideal_instance(4, 0.3).unwrap();
        let iso = ideal_iso(4, 0.3, 0);
        let report = verify_measurement_extraction(&iso, &inst.realization.alice[0]).unwrap();
        assert!(report.max_residual <= 1e-10);
    }

    #[test]
    fn measurement_extraction_dilated() {
        let inst = ideal_instance(2, 0.5).unwrap();
        let dilated = dilate_instance(&inst, 2, 2, 7).unwrap();
        let iso = build_isometries(
            &dilated.realization.alice[0],
            &dilated.realization.alice[1],
            &dilated.hat_p,
            &dilated.hat_q,
            &dilated.overlap,
            0,
        )
        .unwrap();
        let report = verify_measurement_extraction(&iso, &dilated.realization.alice[0]).unwrap();
        assert!(report.max_residual <= 1e-8);
    }

    #[test]
    fn bob_projection_ideal() {
        for &(d, eps) in &[(2usize, 0.5), (3, 0.7)] {
            let iso = ideal_iso(d, eps, 0);
            let report = verify_bob_projection(&iso);
            assert!(report.max_residual <= 1e-10, "d={d} eps={eps}");
        }
    }

    #[test]
    fn bob_projection_detects_non_projective_hats() {
        let d = 2;
        let eps = 0.5;
        let inst = ideal_instance(d, eps).unwrap();
        // smooth the mirror operators: still a POVM, no longer projective
        let smooth = |p: &Povm| {
            Povm::new(
                p.effects()
                    .iter()
                    .map(|e| {
                        &e.scale_real(0.8) + &ComplexMatrix::identity(d).scale_real(0.2 / d as f64)
                    })
                    .collect::<Vec<_>>(),
            )
            .unwrap()
        };
        let hat_p = smooth(&inst.hat_p);
        let hat_q = smooth(&inst.hat_q);
        assert!(!hat_p.is_projective());
        let iso = build_isometries(
            &inst.realization.alice[0],
            &inst.realization.alice[1],
            &hat_p,
            &hat_q,
            &inst.overlap,
            0,
        )
        .unwrap();
        let report = verify_bob_projection(&iso);
        assert!(
            report.max_residual > 1e-3,
            "residual {}",
            report.max_residual
        );
    }

    #[test]
    fn state_extraction_ideal_rank_one_junk() {
        for &(d, eps) in &[(2usize, 0.5), (3, 0.4)] {
            let inst = ideal_instance(d, eps).unwrap();
            let iso = ideal_iso(d, eps, 0);
            let report = verify_state_extraction(&iso, &inst.realization.state, d).unwrap();
            assert!(
                report.residual <= 1e-9,
                "d={d}: residual {}",
                report.residual
            );
            // junk is pure: λ_max = 1
            let top = crate::eigen::hermitian_eigen(&report.junk)
                .unwrap()
                .eigenvalues()[0];
            assert!((top - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn state_extraction_dilated_matches_construction() {
        let d = 2;
        let inst = ideal_instance(d, 0.5).unwrap();
        let (dilated_real, parts) = dilate_with_parts(&inst.realization, 2, 2, 21).unwrap();
        let hat_p = crate::construction::dilate_povm(&inst.hat_p, &parts.w_b, 2).unwrap();
        let hat_q = crate::construction::dilate_povm(&inst.hat_q, &parts.w_b, 2).unwrap();
        let iso = build_isometries(
            &dilated_real.alice[0],
            &dilated_real.alice[1],
            &hat_p,
            &hat_q,
            &inst.overlap,
            0,
        )
        .unwrap();
        let report = verify_state_extraction(&iso, &dilated_real.state, d).unwrap();
        assert!(report.residual <= 1e-8, "residual {}", report.residual);

        // expected junk: (W_A ⊗ W_B)·[|d−1⟩⟨d−1| ⊗ |d−1⟩⟨d−1| ⊗ σ_junk]·(W_A ⊗ W_B)†
        // on slots (d, j_a, d, j_b) after moving junk systems into place
        let corner = StateVector::basis(d, d - 1).projector();
        let raw = corner
            .kron(&corner)
            .kron(&parts.junk)
            .permute_systems(&[d, d, 2, 2], &[0, 2, 1, 3])
            .unwrap();
        let w = parts.w_a.kron(&parts.w_b);
        let expected = &(&w * &raw) * &w.dagger();
        assert!((&report.junk - &expected).max_norm() <= 1e-8);
    }

    #[test]
    fn state_extraction_detects_mismatched_epsilon() {
        // The ε mismatch enters through the 1/O coefficients: isometries
        // built from ε' = 0.9 operators but the ε = 0.5 overlap matrix are
        // no longer isometries, and the extraction residual blows up.
        let d = 2;
        let state = ideal_realization(d, 0.5).unwrap().state;
        let wrong = ideal_instance(d, 0.9).unwrap();
        let o_half = overlap_direct(d, 0.5).unwrap();
        let iso = build_isometries(
            &wrong.realization.alice[0],
            &wrong.realization.alice[1],
            &wrong.hat_p,
            &wrong.hat_q,
            &o_half,
            0,
        )
        .unwrap();
        let report = verify_state_extraction(&iso, &state, d).unwrap();
        assert!(report.residual > 1e-2, "residual {}", report.residual);
    }

    #[test]
    fn matrix_selftest_ideal_qubit() {
        let inst = ideal_instance(2, 0.5).unwrap();
        let iso = ideal_iso(2, 0.5, 0);
        let report = verify_matrix_selftest(&inst.realization, &iso).unwrap();
        assert!(report.max_residual <= 1e-10);
        assert!((report.product_state_trace - 1.0).abs() <= 1e-9);
        assert!(report.product_state_min_eigenvalue >= -1e-9);
        for t in &report.outcome_traces {
            assert!((t - 0.5).abs() <= 1e-10);
        }
    }

    #[test]
    fn matrix_selftest_dilated() {
        let inst = ideal_instance(3, 0.4).unwrap();
        let dilated = dilate_instance(&inst, 2, 2, 11).unwrap();
        let iso = build_isometries(
            &dilated.realization.alice[0],
            &dilated.realization.alice[1],
            &dilated.hat_p,
            &dilated.hat_q,
            &dilated.overlap,
            0,
        )
        .unwrap();
        let report = verify_matrix_selftest(&dilated.realization, &iso).unwrap();
        assert!(
            report.max_residual <= 1e-8,
            "residual {}",
            report.max_residual
        );
        for t in &report.outcome_traces {
            assert!((t - 1.0 / 3.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn anchor_choice_does_not_matter() {
        let d = 3;
        let eps = 0.25;
        let inst = ideal_instance(d, eps).unwrap();
        let mut residuals = Vec::new();
        for anchor in 0..d {
            let summary = verify_instance(
                &inst.realization,
                &inst.hat_p,
                &inst.hat_q,
                &inst.overlap,
                anchor,
            )
            .unwrap();
            residuals.push(summary.max_residual());
        }
        for r in &residuals {
            assert!(*r <= 1e-8, "anchor residuals {residuals:?}");
        }
    }

    #[test]
    fn verify_instance_full_suite() {
        let inst = ideal_instance(2, 0.5).unwrap();
        let summary = verify_instance(
            &inst.realization,
            &inst.hat_p,
            &inst.hat_q,
            &inst.overlap,
            0,
        )
        .unwrap();
        assert!(summary.max_residual() <= 1e-10);
    }

    #[test]
    fn contracted_conjugation_matches_naive_kron() {
        let inst = ideal_instance(3, 0.6).unwrap();
        let iso = ideal_iso(3, 0.6, 1);
        let m = &inst.realization.state;
        let fast = conjugate_and_reorder(&iso, m).unwrap();
        let x = iso.v_a().kron(iso.v_b());
        let naive = (&(&x * m) * &x.dagger())
            .permute_systems(&[3, 3, 3, 3], &[0, 2, 1, 3])
            .unwrap();
        assert!((&fast - &naive).max_norm() < 1e-13);
    }

    #[test]
    fn partial_expectation_matches_direct_sum() {
        // sanity for the ⟨v|·|v⟩ helper: compare against an explicit loop
        let v = StateVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let m = ComplexMatrix::from_fn(4, 4, |i, j| c((i + 1) as f64, (j as f64) * 0.5));
        let got = partial_expectation_first(&m, &v, 2);
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = c(0.0, 0.0);
                for g in 0..2 {
                    for gp in 0..2 {
                        acc += v.amplitudes()[g].conj()
                            * m[(g * 2 + a, gp * 2 + b)]
                            * v.amplitudes()[gp];
                    }
                }
                assert!((got[(a, b)] - acc).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_one_relation_oracle() {
        // For rank-1 projectors P_j = |j⟩⟨j| and Q_k = U|k⟩⟨k|U†:
        // P_j Q_k P_j = |⟨j|U|k⟩|² P_j exactly, by direct multiplication.
        let d = 4;
        let eps = 0.3;
        let real = ideal_realization(d, eps).unwrap();
        let u = crate::construction::u_epsilon(d, eps).unwrap();
        for j in 0..d {
            let pj = &real.alice[0].effects()[j];
            for k in 0..d {
                let qk = &real.alice[1].effects()[k];
                let lhs = &(pj * qk) * pj;
                let amp2 = u[(j, k)].norm_sqr();
                assert!((&lhs - &pj.scale_real(amp2)).max_norm() < 1e-13);
            }
        }
        // and the closed-form overlap squares agree with |⟨j|U|k⟩|²
        let o = overlap_direct(d, eps).unwrap();
        for j in 0..d {
            for k in 0..d {
                assert!((o.get(j, k).powi(2) - u[(j, k)].norm_sqr()).abs() < 1e-13);
            }
        }
    }
}

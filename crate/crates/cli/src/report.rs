//! Serializable reports emitted by the commands.

use serde::Serialize;

use dikey_core::keyrate::KeyRateReport;
use dikey_core::selftest::SelfTestSummary;

/// Everything the certification pipeline measured, plus the pass verdict.
#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub d: usize,
    pub epsilon: f64,
    pub junk_a: usize,
    pub junk_b: usize,
    pub seed: u64,
    pub anchor: usize,
    pub min_overlap: f64,
    pub relation_residual_pqp: f64,
    pub relation_residual_qpq: f64,
    pub projectivity_residual: f64,
    pub isometry_residual: f64,
    pub measurement_extraction_residual: f64,
    pub bob_projection_residual: f64,
    pub state_extraction_residual: f64,
    pub matrix_form_residual: f64,
    pub product_state_trace: f64,
    pub product_state_min_eigenvalue: f64,
    pub h_a: f64,
    pub h_a_given_b: f64,
    pub h_a_given_e: f64,
    pub dw_rate: f64,
    pub purification_residual: f64,
    pub product_form_residual: f64,
    pub tolerance: f64,
    pub rate_floor: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

impl CertifyReport {
    pub fn assemble(
        d: usize,
        epsilon: f64,
        junk_a: usize,
        junk_b: usize,
        seed: u64,
        min_overlap: f64,
        summary: &SelfTestSummary,
        rates: &KeyRateReport,
        tolerance: f64,
    ) -> Self {
        let rate_floor = (d as f64).log2() - 1e-6;
        let mut failures = Vec::new();
        let mut check = |name: &str, value: f64| {
            // NaN counts as a failure
            if value.is_nan() || value > tolerance {
                failures.push(format!("{name} = {value:.3e} exceeds {tolerance:.1e}"));
            }
        };
        check("relation_residual_pqp", summary.relations.max_residual_pqp);
        check("relation_residual_qpq", summary.relations.max_residual_qpq);
        check(
            "projectivity_residual",
            summary.relations.projectivity_residual,
        );
        check("isometry_residual", summary.isometry_residual);
        check(
            "measurement_extraction_residual",
            summary.measurement_extraction.max_residual,
        );
        check(
            "bob_projection_residual",
            summary.bob_projection.max_residual,
        );
        check(
            "state_extraction_residual",
            summary.state_extraction.residual,
        );
        check("matrix_form_residual", summary.matrix_form.max_residual);
        check(
            "product_state_trace_deviation",
            (summary.matrix_form.product_state_trace - 1.0).abs(),
        );
        check(
            "product_state_negativity",
            (-summary.matrix_form.product_state_min_eigenvalue).max(0.0),
        );
        check("purification_residual", rates.purification_residual);
        check("product_form_residual", rates.product_form_residual);
        if rates.dw_rate < rate_floor {
            failures.push(format!(
                "dw_rate = {:.9} below floor {rate_floor:.9}",
                rates.dw_rate
            ));
        }

        Self {
            d,
            epsilon,
            junk_a,
            junk_b,
            seed,
            anchor: summary.anchor,
            min_overlap,
            relation_residual_pqp: summary.relations.max_residual_pqp,
            relation_residual_qpq: summary.relations.max_residual_qpq,
            projectivity_residual: summary.relations.projectivity_residual,
            isometry_residual: summary.isometry_residual,
            measurement_extraction_residual: summary.measurement_extraction.max_residual,
            bob_projection_residual: summary.bob_projection.max_residual,
            state_extraction_residual: summary.state_extraction.residual,
            matrix_form_residual: summary.matrix_form.max_residual,
            product_state_trace: summary.matrix_form.product_state_trace,
            product_state_min_eigenvalue: summary.matrix_form.product_state_min_eigenvalue,
            h_a: rates.h_a,
            h_a_given_b: rates.h_a_given_b,
            h_a_given_e: rates.h_a_given_e,
            dw_rate: rates.dw_rate,
            purification_residual: rates.purification_residual,
            product_form_residual: rates.product_form_residual,
            tolerance,
            rate_floor,
            pass: failures.is_empty(),
            failures,
        }
    }
}

/// Self-test residuals for one (possibly dilated) instance.
#[derive(Debug, Clone, Serialize)]
pub struct SelfTestCheckReport {
    pub d: usize,
    pub epsilon: f64,
    pub junk_a: usize,
    pub junk_b: usize,
    pub seed: u64,
    pub anchor: usize,
    pub relation_residual_pqp: f64,
    pub relation_residual_qpq: f64,
    pub projectivity_residual: f64,
    pub isometry_residual: f64,
    pub measurement_extraction_residual: f64,
    pub bob_projection_residual: f64,
    pub state_extraction_residual: f64,
    pub matrix_form_residual: f64,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SelfTestCheckReport {
    pub fn assemble(
        d: usize,
        epsilon: f64,
        junk_a: usize,
        junk_b: usize,
        seed: u64,
        summary: &SelfTestSummary,
        tolerance: f64,
    ) -> Self {
        let max_residual = summary.max_residual();
        Self {
            d,
            epsilon,
            junk_a,
            junk_b,
            seed,
            anchor: summary.anchor,
            relation_residual_pqp: summary.relations.max_residual_pqp,
            relation_residual_qpq: summary.relations.max_residual_qpq,
            projectivity_residual: summary.relations.projectivity_residual,
            isometry_residual: summary.isometry_residual,
            measurement_extraction_residual: summary.measurement_extraction.max_residual,
            bob_projection_residual: summary.bob_projection.max_residual,
            state_extraction_residual: summary.state_extraction.residual,
            matrix_form_residual: summary.matrix_form.max_residual,
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
        }
    }
}

/// One sweep grid point. Numeric fields are None when the pipeline failed;
/// the error column says why.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub d: usize,
    pub epsilon: f64,
    pub min_overlap: Option<f64>,
    pub relation_residual: Option<f64>,
    pub h_a_e_bits: Option<f64>,
    pub h_a_b_bits: Option<f64>,
    pub dw_rate_bits: Option<f64>,
    pub l1_to_eps0: Option<f64>,
    pub lp_distance: Option<f64>,
    pub runtime_ms: u128,
    pub error: Option<String>,
}

//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured worst case (run with `-- --nocapture` to see them).
//!
//! Grid for criteria 1-3: d ∈ {2,...,6} × ε ∈ {0.1, 0.3, 0.5, 0.7, 0.9}.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dikey_cli::commands::{run_certify, CertifyOptions};
use dikey_core::construction::{
    dilate, dilate_instance, ideal_instance, ideal_realization, overlap_closed_form,
    overlap_direct, random_density, random_unitary, Povm, Realization,
};
use dikey_core::entropy::{purify, von_neumann_entropy};
use dikey_core::keyrate::{devetak_winter, h_a_given_e, sigma_ae};
use dikey_core::locality::{
    chsh_functional, enumerate_vertices, l1_between, l1_distance_to_local, local_bound,
};
use dikey_core::matrix::{ComplexMatrix, StateVector};
use dikey_core::selftest::verify_instance;

const GRID_D: [usize; 5] = [2, 3, 4, 5, 6];
const GRID_EPS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

/// Runs `work` over the items on all available cores, preserving nothing but
/// the worst result via the reducer.
fn parallel_worst<T: Send + Sync>(items: &[T], work: impl Fn(&T) -> f64 + Send + Sync) -> f64 {
    let cursor = AtomicUsize::new(0);
    let worst = Mutex::new(0.0f64);
    let jobs = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(2)
        .min(items.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let idx = cursor.fetch_add(1, Ordering::SeqCst);
                if idx >= items.len() {
                    break;
                }
                let value = work(&items[idx]);
                let mut guard = worst.lock().unwrap();
                if value > *guard {
                    *guard = value;
                }
            });
        }
    });
    worst.into_inner().unwrap()
}

#[test]
fn criterion_1_key_rate_reproduction() {
    let grid: Vec<(usize, f64)> = GRID_D
        .iter()
        .flat_map(|&d| GRID_EPS.iter().map(move |&e| (d, e)))
        .collect();
    let worst = parallel_worst(&grid, |&(d, epsilon)| {
        let report = run_certify(&CertifyOptions {
            d,
            epsilon,
            ..CertifyOptions::default()
        })
        .unwrap_or_else(|e| panic!("certify d={d} eps={epsilon}: {e}"));
        assert!(report.pass, "d={d} eps={epsilon}: {:?}", report.failures);
        (report.dw_rate - (d as f64).log2()).abs()
    });
    assert!(worst <= 1e-8, "worst key-rate deviation {worst:.3e}");
    println!("acceptance 1 (key-rate reproduction): PASS — worst |dw_rate − log2 d| = {worst:.3e}");
}

#[test]
fn criterion_2_privacy_pinning() {
    let mut cases = Vec::new();
    for &d in &GRID_D {
        for &eps in &GRID_EPS {
            for seed in 0..5u64 {
                cases.push((d, eps, seed));
            }
        }
    }
    let worst = parallel_worst(&cases, |&(d, eps, seed)| {
        let real = ideal_realization(d, eps).unwrap();
        let dilated = dilate(&real, 2, 2, seed).unwrap();
        let psi = purify(&dilated.state).unwrap();
        let report = devetak_winter(&dilated, &psi)
            .unwrap_or_else(|e| panic!("d={d} eps={eps} seed={seed}: {e}"));
        let entropy_dev = (report.h_a_given_e - (d as f64).log2()).abs();
        assert!(
            report.product_form_residual <= 1e-8,
            "d={d} eps={eps} seed={seed}: product-form residual {}",
            report.product_form_residual
        );
        entropy_dev.max(report.product_form_residual)
    });
    assert!(worst <= 1e-8, "worst deviation {worst:.3e}");
    println!(
        "acceptance 2 (privacy pinning, 125 dilated instances): PASS — worst deviation {worst:.3e}"
    );
}

#[test]
fn criterion_3_selftest_identity_suite() {
    let grid: Vec<(usize, f64)> = GRID_D
        .iter()
        .flat_map(|&d| GRID_EPS.iter().map(move |&e| (d, e)))
        .collect();
    let worst = parallel_worst(&grid, |&(d, eps)| {
        let inst = ideal_instance(d, eps).unwrap();
        let summary = verify_instance(
            &inst.realization,
            &inst.hat_p,
            &inst.hat_q,
            &inst.overlap,
            0,
        )
        .unwrap_or_else(|e| panic!("verify d={d} eps={eps}: {e}"));
        // the extracted blocks are the last effects of each family
        let a_dev = (&summary.measurement_extraction.extracted
            - &inst.realization.alice[0].effects()[d - 1])
            .max_norm();
        let b_dev = (&summary.bob_projection.extracted - &inst.hat_p.effects()[d - 1]).max_norm();
        summary.max_residual().max(a_dev).max(b_dev)
    });
    assert!(worst <= 1e-8, "worst self-test residual {worst:.3e}");

    // dilated spot checks
    for &(d, eps, seed) in &[(2usize, 0.5, 7u64), (3, 0.4, 11)] {
        let inst = ideal_instance(d, eps).unwrap();
        let dilated = dilate_instance(&inst, 2, 2, seed).unwrap();
        let summary = verify_instance(
            &dilated.realization,
            &dilated.hat_p,
            &dilated.hat_q,
            &dilated.overlap,
            0,
        )
        .unwrap();
        assert!(
            summary.max_residual() <= 1e-8,
            "dilated d={d}: {}",
            summary.max_residual()
        );
    }

    // negative control: rotated second family with an unchanged overlap matrix
    let d = 3;
    let inst = ideal_instance(d, 0.5).unwrap();
    let mut rot = ComplexMatrix::identity(d);
    let (s, c) = (0.1f64.sin(), 0.1f64.cos());
    rot[(0, 0)] = num_complex::Complex64::new(c, 0.0);
    rot[(0, 1)] = num_complex::Complex64::new(-s, 0.0);
    rot[(1, 0)] = num_complex::Complex64::new(s, 0.0);
    rot[(1, 1)] = num_complex::Complex64::new(c, 0.0);
    let rotated = Povm::new(
        inst.realization.alice[1]
            .effects()
            .iter()
            .map(|e| &(&rot * e) * &rot.dagger())
            .collect(),
    )
    .unwrap();
    let relations =
        dikey_core::selftest::check_relations(&inst.realization.alice[0], &rotated, &inst.overlap)
            .unwrap();
    assert!(
        relations.max_residual() > 1e-3,
        "rotated control undetected: {}",
        relations.max_residual()
    );

    // negative control: non-projective mirror operators
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
    let iso = dikey_core::selftest::build_isometries(
        &inst.realization.alice[0],
        &inst.realization.alice[1],
        &smooth(&inst.hat_p),
        &smooth(&inst.hat_q),
        &inst.overlap,
        0,
    )
    .unwrap();
    let bob = dikey_core::selftest::verify_bob_projection(&iso);
    assert!(
        bob.max_residual > 1e-3,
        "smoothed control undetected: {}",
        bob.max_residual
    );

    println!(
        "acceptance 3 (self-test identities + negative controls): PASS — worst grid residual {worst:.3e}"
    );
}

#[test]
fn criterion_4_overlap_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1CE);
    let mut worst = 0.0f64;
    let mut min_entry = f64::INFINITY;
    for _ in 0..200 {
        let d = rng.gen_range(2..=8);
        let eps = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let direct = overlap_direct(d, eps).unwrap();
        let closed = overlap_closed_form(d, eps).unwrap();
        worst = worst.max(direct.max_abs_difference(&closed));
        min_entry = min_entry.min(direct.min_entry().min(closed.min_entry()));
    }
    assert!(worst <= 1e-10, "worst cross-oracle gap {worst:.3e}");
    assert!(
        min_entry > 0.0,
        "an overlap entry vanished: {min_entry:.3e}"
    );
    println!(
        "acceptance 4 (overlap closed form, 200 samples): PASS — worst gap {worst:.3e}, min entry {min_entry:.3e}"
    );
}

#[test]
fn criterion_5_vanishing_nonlocality() {
    let base = dikey_core::keyrate::born_correlation(&ideal_realization(2, 0.0).unwrap()).unwrap();
    let lp_base = l1_distance_to_local(&base).unwrap();
    assert!(
        lp_base.distance <= 1e-9,
        "eps=0 point not certified local: {}",
        lp_base.distance
    );

    let mut previous = f64::INFINITY;
    let mut summary = Vec::new();
    for k in 1..=6 {
        let eps = 10f64.powi(-k);
        let corr =
            dikey_core::keyrate::born_correlation(&ideal_realization(2, eps).unwrap()).unwrap();
        let gap = l1_between(&corr, &base).unwrap();
        assert!(gap < previous, "l1 not strictly decreasing at eps={eps}");
        assert!(gap < 10.0 * eps, "eps={eps}: l1 {gap} >= {}", 10.0 * eps);
        let lp = l1_distance_to_local(&corr).unwrap();
        assert!(
            lp.distance <= gap + 1e-9,
            "eps={eps}: LP distance {} above l1 bound {gap}",
            lp.distance
        );
        summary.push(format!("1e-{k}:{gap:.2e}"));
        previous = gap;
    }
    println!(
        "acceptance 5 (vanishing non-locality, d=2): PASS — l1 to eps=0 per eps: {}",
        summary.join(" ")
    );
}

#[test]
fn criterion_6_lp_oracle_sanity() {
    let chsh = chsh_functional();
    let bound = local_bound(&chsh).unwrap();
    assert!(
        (bound.bound - 2.0).abs() <= 1e-12,
        "CHSH local bound {}",
        bound.bound
    );

    // PR box: p(a,b|x,y) = 1/2 iff a⊕b = x·y
    let scenario = chsh.scenario.clone();
    let pr_values = (0..2)
        .map(|x| {
            (0..2)
                .map(|y| {
                    (0..2)
                        .map(|a| {
                            (0..2)
                                .map(|b| if (a + b) % 2 == x * y { 0.5 } else { 0.0 })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let pr = dikey_core::keyrate::Correlation::new(scenario.clone(), pr_values).unwrap();
    let pr_distance = l1_distance_to_local(&pr).unwrap().distance;
    assert!(pr_distance > 0.4, "PR-box distance {pr_distance}");

    let mut worst_vertex = 0.0f64;
    for strategy in enumerate_vertices(&scenario).unwrap() {
        let corr = strategy.correlation(&scenario).unwrap();
        let d = l1_distance_to_local(&corr).unwrap().distance;
        worst_vertex = worst_vertex.max(d);
    }
    assert!(worst_vertex <= 1e-9, "vertex distance {worst_vertex:.3e}");
    println!(
        "acceptance 6 (LP oracle sanity): PASS — CHSH bound 2, PR distance {pr_distance:.3}, worst vertex {worst_vertex:.1e}"
    );
}

#[test]
fn criterion_7_entropy_property_suite() {
    let mut worst_additivity = 0.0f64;
    let mut worst_purification_gap = 0.0f64;
    for instance in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(instance);

        // additivity under the tensor product
        let da = rng.gen_range(2..=4);
        let db = rng.gen_range(2..=4);
        let rho = random_density(da, &mut rng);
        let sigma = random_density(db, &mut rng);
        let joint = von_neumann_entropy(&rho.kron(&sigma)).unwrap();
        let split = von_neumann_entropy(&rho).unwrap() + von_neumann_entropy(&sigma).unwrap();
        worst_additivity = worst_additivity.max((joint - split).abs());

        // random realization: H(A|E) within [0, log2 k_A], purification-independent
        let state = random_density(da * db, &mut rng);
        let alice = random_projective(da, &mut rng);
        let bob = random_projective(db, &mut rng);
        let real = Realization::new(state, da, db, vec![alice], vec![bob], 0, 0).unwrap();
        let psi = purify(&real.state).unwrap();
        let cq = sigma_ae(&real, &psi).unwrap();
        let h = h_a_given_e(&cq).unwrap();
        assert!(h >= -1e-9, "instance {instance}: H(A|E) = {h}");
        assert!(
            h <= (da as f64).log2() + 1e-9,
            "instance {instance}: H(A|E) = {h} above log2({da})"
        );

        let m = real.state.rows();
        let r = psi.dim() / m;
        let w = random_unitary(r + 1, &mut rng);
        let extended = extend_environment(&psi, m, r, &w);
        let h_extended = h_a_given_e(&sigma_ae(&real, &extended).unwrap()).unwrap();
        worst_purification_gap = worst_purification_gap.max((h - h_extended).abs());
    }
    assert!(
        worst_additivity <= 1e-8,
        "additivity gap {worst_additivity:.3e}"
    );
    assert!(
        worst_purification_gap <= 1e-8,
        "purification gap {worst_purification_gap:.3e}"
    );
    println!(
        "acceptance 7 (entropy properties, 100 instances): PASS — additivity {worst_additivity:.3e}, purification independence {worst_purification_gap:.3e}"
    );
}

fn random_projective(d: usize, rng: &mut impl Rng) -> Povm {
    let u = random_unitary(d, rng);
    Povm::new(
        (0..d)
            .map(|k| StateVector::new((0..d).map(|r| u[(r, k)]).collect()).projector())
            .collect(),
    )
    .unwrap()
}

fn extend_environment(
    psi: &StateVector,
    system_dim: usize,
    env_dim: usize,
    w: &ComplexMatrix,
) -> StateVector {
    let r_big = w.rows();
    let zero = num_complex::Complex64::new(0.0, 0.0);
    let mut amps = vec![zero; system_dim * r_big];
    for s in 0..system_dim {
        for e_new in 0..r_big {
            let mut acc = zero;
            for e in 0..env_dim {
                acc += w[(e_new, e)] * psi.amplitudes()[s * env_dim + e];
            }
            amps[s * r_big + e_new] = acc;
        }
    }
    StateVector::new(amps)
}

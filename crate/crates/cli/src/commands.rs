//! Command implementations, separated from argument parsing so tests can
//! drive them directly.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use dikey_core::construction::{
    dilate_instance, ideal_instance, ideal_realization, Instance, Povm,
};
use dikey_core::entropy::purify;
use dikey_core::io::{CorrelationFile, FunctionalFile, MeasurementFile};
use dikey_core::keyrate::{born_correlation, devetak_winter};
use dikey_core::locality::{
    l1_between, l1_distance_to_local_with_caps, local_bound_with_cap, DistanceReport,
    LocalBoundReport, DEFAULT_LP_CELL_CAP, DEFAULT_PIVOT_CAP, DEFAULT_VERTEX_CAP,
};
use dikey_core::selftest::verify_instance;
use dikey_core::{Error, Result};

use crate::config::SweepConfig;
use crate::report::{CertifyReport, SelfTestCheckReport, SweepRow};

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub d: usize,
    pub epsilon: f64,
    pub anchor: usize,
    pub junk_a: usize,
    pub junk_b: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            d: 2,
            epsilon: 0.5,
            anchor: 0,
            junk_a: 1,
            junk_b: 1,
            seed: 0,
            tolerance: 1e-8,
        }
    }
}

fn build_instance(
    d: usize,
    epsilon: f64,
    junk_a: usize,
    junk_b: usize,
    seed: u64,
) -> Result<Instance> {
    build_instance_with_plugin(d, epsilon, junk_a, junk_b, seed, None)
}

/// Extra Bob settings go in before dilation so the junk padding covers them
/// too.
fn build_instance_with_plugin(
    d: usize,
    epsilon: f64,
    junk_a: usize,
    junk_b: usize,
    seed: u64,
    extra_bob: Option<Vec<Povm>>,
) -> Result<Instance> {
    let mut inst = ideal_instance(d, epsilon)?;
    if let Some(povms) = extra_bob {
        inst.realization = inst.realization.with_bob_settings(povms)?;
    }
    if junk_a > 1 || junk_b > 1 {
        dilate_instance(&inst, junk_a, junk_b, seed)
    } else {
        Ok(inst)
    }
}

/// The headline pipeline: construct, verify every self-testing identity,
/// purify, and evaluate the Devetak–Winter bound.
pub fn run_certify(opts: &CertifyOptions) -> Result<CertifyReport> {
    let inst = build_instance(opts.d, opts.epsilon, opts.junk_a, opts.junk_b, opts.seed)?;
    let summary = verify_instance(
        &inst.realization,
        &inst.hat_p,
        &inst.hat_q,
        &inst.overlap,
        opts.anchor,
    )?;
    let psi = purify(&inst.realization.state)?;
    let rates = devetak_winter(&inst.realization, &psi)?;
    Ok(CertifyReport::assemble(
        opts.d,
        opts.epsilon,
        opts.junk_a,
        opts.junk_b,
        opts.seed,
        inst.overlap.min_entry(),
        &summary,
        &rates,
        opts.tolerance,
    ))
}

/// Self-test verification alone, on a dilated instance.
pub fn run_selftest_check(opts: &CertifyOptions) -> Result<SelfTestCheckReport> {
    let inst = build_instance(opts.d, opts.epsilon, opts.junk_a, opts.junk_b, opts.seed)?;
    let summary = verify_instance(
        &inst.realization,
        &inst.hat_p,
        &inst.hat_q,
        &inst.overlap,
        opts.anchor,
    )?;
    Ok(SelfTestCheckReport::assemble(
        opts.d,
        opts.epsilon,
        opts.junk_a,
        opts.junk_b,
        opts.seed,
        &summary,
        opts.tolerance,
    ))
}

/// One sweep grid point. Noise feeds only the key-rate branch; the distance
/// columns always refer to the noiseless correlation.
fn sweep_point(
    d: usize,
    epsilon: f64,
    cfg: &SweepConfig,
    plugin: Option<&MeasurementFile>,
) -> SweepRow {
    let started = Instant::now();
    let mut row = SweepRow {
        d,
        epsilon,
        min_overlap: None,
        relation_residual: None,
        h_a_e_bits: None,
        h_a_b_bits: None,
        dw_rate_bits: None,
        l1_to_eps0: None,
        lp_distance: None,
        runtime_ms: 0,
        error: None,
    };

    let outcome = (|| -> Result<()> {
        let extra = plugin.map(|file| file.clone().into_povms()).transpose()?;
        let inst = build_instance_with_plugin(
            d,
            epsilon,
            cfg.junk_a,
            cfg.junk_b,
            cfg.seed,
            extra.clone(),
        )?;
        row.min_overlap = Some(inst.overlap.min_entry());
        let relations = dikey_core::selftest::check_relations(
            &inst.realization.alice[0],
            &inst.realization.alice[1],
            &inst.overlap,
        )?;
        row.relation_residual = Some(relations.max_residual());

        let rate_real = if cfg.noise > 0.0 {
            inst.realization.with_bob_key_noise(cfg.noise)?
        } else {
            inst.realization.clone()
        };
        let psi = purify(&rate_real.state)?;
        let rates = devetak_winter(&rate_real, &psi)?;
        row.h_a_e_bits = Some(rates.h_a_given_e);
        row.h_a_b_bits = Some(rates.h_a_given_b);
        row.dw_rate_bits = Some(rates.dw_rate);

        let corr = born_correlation(&inst.realization)?;
        let mut base_real = ideal_realization(d, 0.0)?;
        if let Some(povms) = extra {
            base_real = base_real.with_bob_settings(povms)?;
        }
        let base = born_correlation(&base_real)?;
        row.l1_to_eps0 = Some(l1_between(&corr, &base)?);

        if cfg.lp {
            match l1_distance_to_local_with_caps(
                &corr,
                DEFAULT_VERTEX_CAP,
                DEFAULT_LP_CELL_CAP,
                DEFAULT_PIVOT_CAP,
            ) {
                Ok(report) => row.lp_distance = Some(report.distance),
                // capped problems leave the column empty, per the CSV contract
                Err(Error::VertexCapExceeded { .. }) | Err(Error::LpSizeExceeded { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    })();

    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    row.runtime_ms = started.elapsed().as_millis();
    row
}

/// Runs the whole grid, buffering rows in grid order. Grid points execute in
/// parallel up to `jobs` workers; every computation is pure.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let plugin = match &cfg.bob_measurements {
        Some(path) => {
            let json = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidFile(format!("{path}: {e}")))?;
            Some(MeasurementFile::from_json(&json)?)
        }
        None => None,
    };

    let grid = cfg.grid();
    let slots: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; grid.len()]);
    let cursor = AtomicUsize::new(0);
    let workers = cfg.jobs.min(grid.len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = cursor.fetch_add(1, Ordering::SeqCst);
                if idx >= grid.len() {
                    break;
                }
                let (d, eps) = grid[idx];
                let row = sweep_point(d, eps, cfg, plugin.as_ref());
                slots.lock().expect("sweep worker poisoned")[idx] = Some(row);
            });
        }
    });

    Ok(slots
        .into_inner()
        .expect("sweep workers finished")
        .into_iter()
        .map(|row| row.expect("every grid point produced a row"))
        .collect())
}

/// 12-significant-digit science notation, '.' decimal, locale-independent.
fn fmt_sig(v: f64) -> String {
    format!("{v:.11e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

pub const SWEEP_CSV_HEADER: &str =
    "d,epsilon,min_overlap,relation_residual,h_a_e_bits,h_a_b_bits,dw_rate_bits,l1_to_eps0,lp_distance,runtime_ms,error";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let error = row
            .error
            .as_deref()
            .unwrap_or("")
            .replace(',', ";")
            .replace('\n', " ");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.d,
            fmt_sig(row.epsilon),
            fmt_opt(row.min_overlap),
            fmt_opt(row.relation_residual),
            fmt_opt(row.h_a_e_bits),
            fmt_opt(row.h_a_b_bits),
            fmt_opt(row.dw_rate_bits),
            fmt_opt(row.l1_to_eps0),
            fmt_opt(row.lp_distance),
            row.runtime_ms,
            error,
        ));
    }
    out
}

/// Companion gnuplot script: dw_rate and l1_to_eps0 against ε, log-log.
pub fn sweep_plot_script(csv_name: &str) -> String {
    format!(
        "# plot dw_rate and l1 distance against epsilon (log-log)\n\
         set datafile separator ','\n\
         set logscale xy\n\
         set xlabel 'epsilon'\n\
         set ylabel 'bits / l1 distance'\n\
         set key left bottom\n\
         plot '{csv_name}' skip 1 using 2:7 with linespoints title 'dw rate (bits)', \\\n\
         \x20    '{csv_name}' skip 1 using 2:8 with linespoints title 'l1 to eps=0'\n"
    )
}

#[derive(Debug, Clone)]
pub struct DistanceOptions {
    pub vertex_cap: u128,
    pub cell_cap: u128,
    pub pivot_cap: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self {
            vertex_cap: DEFAULT_VERTEX_CAP,
            cell_cap: DEFAULT_LP_CELL_CAP,
            pivot_cap: DEFAULT_PIVOT_CAP,
        }
    }
}

pub fn run_distance(correlation_json: &str, opts: &DistanceOptions) -> Result<DistanceReport> {
    let corr = CorrelationFile::from_json(correlation_json)?.into_correlation()?;
    l1_distance_to_local_with_caps(&corr, opts.vertex_cap, opts.cell_cap, opts.pivot_cap)
}

pub fn run_local_bound(functional_json: &str, vertex_cap: u128) -> Result<LocalBoundReport> {
    let functional = FunctionalFile::from_json(functional_json)?.into_functional()?;
    local_bound_with_cap(&functional, vertex_cap)
}

//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints its `[PASS]`/`[FAIL]` line, including under a plain
//! `cargo test`. A non-flag argument filters criteria by name. Tolerances
//! and runtime budgets are pinned here; budgets assume the optimized test
//! profile.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use beatdesign_core::fixtures::{city_replica, REPORTED_VARIANCE};
use beatdesign_core::forecast::{build_weights, fit, FitOptions};
use beatdesign_core::geo::{atomize, AtomGrid, GridKind, Polygon, Projection};
use beatdesign_core::ingest::synthetic::{generate_synthetic, SyntheticSpec};
use beatdesign_core::interp::{interpolate, overlay, resolve_modes};
use beatdesign_core::mip::oracle::feasible_completion;
use beatdesign_core::mip::{build_model, MipMode, MipParams};
use beatdesign_core::optimize::{anneal, greedy_expand, AnnealConfig, GreedyOptions};
use beatdesign_core::partition::{beat_loads, is_contiguous, objective_z, BeatDesign, CompactnessParams};
use beatdesign_core::report::{beat_table, AnnualWorkload};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VARIANCE_TOL: f64 = 0.15;
const REDUCTION_REPORTED_MIN: f64 = 0.90;
const REDUCTION_SEARCH_MIN: f64 = 0.85;
const ANNEAL_OPT_SLACK: f64 = 0.05;
const ANNEAL_MIN_HITS: usize = 19;
const NOISELESS_TOL: f64 = 1e-6;
const RHO_MEDIAN_TOL: f64 = 0.1;
const CONSERVATION_REL_TOL: f64 = 1e-9;

static REPORTED: AtomicBool = AtomicBool::new(false);

fn verdict(n: u32, pass: bool, detail: &str, elapsed: Duration, budget: Duration) -> bool {
    REPORTED.store(true, Ordering::SeqCst);
    let ok = pass && elapsed <= budget;
    println!(
        "[{}] criterion {n}: {detail} ({:.2}s, budget {:.0}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    ok
}

fn rect_grid(rows: usize, cols: usize) -> AtomGrid {
    atomize(
        &[Polygon::rect(0.0, 0.0, cols as f64, rows as f64)],
        1.0,
        GridKind::SquareRook,
        Projection::PlanarMiles,
    )
    .unwrap()
}

fn criterion_1_replica_variances() {
    let t0 = Instant::now();
    let r = city_replica().unwrap();
    let annual = AnnualWorkload::from_panel(&r.panel, 2019).unwrap();
    let designs = vec![
        ("existing".to_string(), r.existing.clone()),
        ("greedy".to_string(), r.greedy.clone()),
        ("refined".to_string(), r.refined.clone()),
    ];
    let table = beat_table(&designs, &[annual]).unwrap();
    let got: Vec<f64> = table.columns.iter().map(|c| c.variance).collect();
    let pass = got
        .iter()
        .zip(REPORTED_VARIANCE)
        .all(|(g, want)| (g - want).abs() <= VARIANCE_TOL);
    let detail = format!("variances {got:.3?} vs {REPORTED_VARIANCE:?} ± {VARIANCE_TOL}");
    assert!(verdict(1, pass, &detail, t0.elapsed(), Duration::from_secs(1)));
}

fn criterion_2_variance_reduction() {
    let t0 = Instant::now();
    let r = city_replica().unwrap();
    let w = &r.hours_per_day;
    let var = |d: &BeatDesign| objective_z(d, w).unwrap() / d.k() as f64;
    let (v_exist, v_refined) = (var(&r.existing), var(&r.refined));
    let reported = (v_exist - v_refined) / v_exist;

    let greedy = greedy_expand(&r.existing, &r.grid, w, 15, &GreedyOptions::default()).unwrap();
    let cfg = AnnealConfig {
        t0: 2.0,
        gamma: 0.9995,
        iterations: 20_000,
        seed: 2019,
        chains: 4,
        ..Default::default()
    };
    let res = anneal(greedy.last(), &r.grid, &[w.clone()], &cfg).unwrap();
    let v_greedy = var(greedy.last());
    let v_search = res.best_z / 15.0;
    let searched = (v_exist - v_search) / v_exist;
    let pass = reported >= REDUCTION_REPORTED_MIN
        && searched >= REDUCTION_SEARCH_MIN
        && is_contiguous(&res.best, &r.grid);
    let detail = format!(
        "refined reduction {:.1}% (min {:.0}%), greedy+anneal {v_exist:.2} -> {v_greedy:.2} -> {v_search:.2} = {:.1}% (min {:.0}%)",
        100.0 * reported,
        100.0 * REDUCTION_REPORTED_MIN,
        100.0 * searched,
        100.0 * REDUCTION_SEARCH_MIN
    );
    assert!(verdict(2, pass, &detail, t0.elapsed(), Duration::from_secs(60)));
}

fn criterion_3_mip_size() {
    let t0 = Instant::now();
    let r = city_replica().unwrap();
    let params = MipParams {
        k: 15,
        mode: MipMode::Dense,
        ..Default::default()
    };
    let m = build_model(&r.grid, &r.hours_per_day, &params, true).unwrap();
    let c = m.count_report();
    let dh: u64 = c.variables.iter().filter(|v| v.family == "d" || v.family == "h").map(|v| v.count).sum();
    let f = c.variables.iter().find(|v| v.family == "f").unwrap().count;
    let pass = c.n_atoms == 1187
        && dh == 35_610
        && f == 21_134_535
        && c.total_variables == 21_170_145
        && c.closed_form.constraint_identity == 63_421_410
        && c.reference.variables_match
        && c.reference.constraints_match;
    let detail = format!(
        "I = {}, d+h = {dh}, f = {f}, total = {}, 3I²K+IK = {}",
        c.n_atoms, c.total_variables, c.closed_form.constraint_identity
    );
    assert!(verdict(3, pass, &detail, t0.elapsed(), Duration::from_secs(1)));
}

fn criterion_4_flow_equivalence() {
    let t0 = Instant::now();
    let mut checked = 0u64;
    let mut mismatches = Vec::new();
    for rows in 1..=4 {
        for cols in 1..=3 {
            let g = rect_grid(rows, cols);
            let n = g.len();
            for k in [2usize, 3] {
                if n < k {
                    continue;
                }
                for mode in [MipMode::Sparse, MipMode::Dense] {
                    let m = build_model(&g, &vec![1.0; n], &MipParams { k, mode, ..Default::default() }, false).unwrap();
                    let total = k.pow(n as u32);
                    let mut a = vec![0usize; n];
                    for code in 0..total {
                        let mut c = code;
                        for x in a.iter_mut() {
                            *x = c % k;
                            c /= k;
                        }
                        let partition = BeatDesign::new(a.clone(), k)
                            .map(|d| is_contiguous(&d, &g))
                            .unwrap_or(false);
                        let flow = feasible_completion(&m, &a).is_some();
                        if partition != flow {
                            mismatches.push(format!("{rows}x{cols} K={k} {mode:?} {a:?}"));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    let detail = format!("{checked} assignments checked, {} mismatches {:?}", mismatches.len(), mismatches.iter().take(3).collect::<Vec<_>>());
    assert!(verdict(4, mismatches.is_empty(), &detail, t0.elapsed(), Duration::from_secs(300)));
}

fn brute_force_two(g: &AtomGrid, w: &[f64]) -> f64 {
    let n = g.len();
    let mut best = f64::INFINITY;
    // atom 0 stays in beat 0; the objective is symmetric in labels
    for mask in 0u32..(1 << (n - 1)) {
        let a: Vec<usize> = (0..n).map(|i| if i == 0 { 0 } else { (mask >> (i - 1) & 1) as usize }).collect();
        let Ok(d) = BeatDesign::new(a, 2) else { continue };
        if is_contiguous(&d, g) {
            best = best.min(objective_z(&d, w).unwrap());
        }
    }
    best
}

fn criterion_5_anneal_near_optimal() {
    let t0 = Instant::now();
    let g = rect_grid(4, 4);
    let init = BeatDesign::from_assignment((0..16).map(|i| usize::from(i % 4 >= 2)).collect()).unwrap();
    let mut hits = 0;
    let mut worst = 0.0f64;
    for inst in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + inst);
        let w: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..10.0)).collect();
        let opt = brute_force_two(&g, &w);
        let cfg = AnnealConfig {
            // near balance a move costs about 2x², up to ~200 for these weights
            t0: 100.0,
            gamma: 0.999,
            iterations: 10_000,
            seed: inst,
            chains: 3,
            compactness: CompactnessParams::disabled(),
            ..Default::default()
        };
        let res = anneal(&init, &g, &[w.clone()], &cfg).unwrap();
        let gap = (res.best_z - opt) / opt.max(1e-12);
        worst = worst.max(gap);
        if res.best_z <= opt * (1.0 + ANNEAL_OPT_SLACK) + 1e-9 {
            hits += 1;
        }
    }
    let detail = format!("{hits}/20 instances within {:.0}% of optimum (need {ANNEAL_MIN_HITS}); worst gap {:.2}%", 100.0 * ANNEAL_OPT_SLACK, 100.0 * worst);
    assert!(verdict(5, hits >= ANNEAL_MIN_HITS, &detail, t0.elapsed(), Duration::from_secs(120)));
}

fn criterion_6_regression_recovery() {
    let t0 = Instant::now();
    // noiseless: fit the latent rates themselves
    let spec = SyntheticSpec::default();
    let inst = generate_synthetic(&spec).unwrap();
    let w = build_weights(&inst.grid);
    let m = fit(&inst.truth.lambda, &inst.truth.x, &w, &FitOptions::default()).unwrap();
    let mut errs = vec![
        (m.rho - spec.rho).abs(),
        (m.beta0 - spec.beta0).abs(),
        (m.intercept - spec.intercept).abs(),
    ];
    errs.extend(m.beta[0].iter().zip(&spec.factors).map(|(b, f)| (b - f.beta).abs()));
    let noiseless_max = errs.iter().cloned().fold(0.0, f64::max);

    // Poisson counts on a 20×20 grid, 12 months, 20 seeds
    let mut rho_errs = Vec::new();
    let mut sign_failures = Vec::new();
    for seed in 1..=20u64 {
        let spec = SyntheticSpec {
            seed,
            ..SyntheticSpec::high_signal()
        };
        assert_eq!((spec.rows, spec.cols, spec.n_months), (20, 20, 12));
        let inst = generate_synthetic(&spec).unwrap();
        let w = build_weights(&inst.grid);
        let m = fit(&inst.truth.counts, &inst.truth.x, &w, &FitOptions::default()).unwrap();
        let same = |a: f64, b: f64| a.signum() == b.signum();
        let signs = same(m.rho, spec.rho)
            && same(m.beta0, spec.beta0)
            && same(m.intercept, spec.intercept)
            && m.beta[0].iter().zip(&spec.factors).all(|(b, f)| same(*b, f.beta));
        if !signs {
            sign_failures.push(seed);
        }
        rho_errs.push((m.rho - spec.rho).abs());
    }
    rho_errs.sort_by(f64::total_cmp);
    let median = (rho_errs[9] + rho_errs[10]) / 2.0;
    let pass = noiseless_max <= NOISELESS_TOL && sign_failures.is_empty() && median <= RHO_MEDIAN_TOL;
    let detail = format!(
        "noiseless max error {noiseless_max:.2e} (tol {NOISELESS_TOL:e}); Poisson median |rho - rho*| {median:.4} (tol {RHO_MEDIAN_TOL}), sign failures {sign_failures:?}"
    );
    assert!(verdict(6, pass, &detail, t0.elapsed(), Duration::from_secs(120)));
}

fn criterion_7_interpolation_conservation() {
    let t0 = Instant::now();
    let inst = generate_synthetic(&SyntheticSpec::default()).unwrap();
    let names = inst.spec.factor_names();
    let modes = resolve_modes(&names, &BTreeMap::new(), true);
    let weights = overlay(&inst.grid, &inst.blocks, &inst.grid.projection).unwrap();
    let first = inst.spec.first_month;
    let n_months = inst.spec.n_months;
    let (tensor, _) = interpolate(&weights, &inst.census, &names, &modes, first, n_months, None, None).unwrap();
    let mut worst = 0.0f64;
    for (l, name) in names.iter().enumerate() {
        for m in 0..n_months {
            let year = first.offset(m as i64).year;
            let blocks: f64 = inst
                .census
                .iter()
                .filter(|r| r.year == year)
                .map(|r| r.factors[name].unwrap())
                .sum();
            let atoms: f64 = (0..inst.grid.len()).map(|i| tensor.get(i, m, l)).sum();
            worst = worst.max((atoms - blocks).abs() / blocks.abs().max(f64::MIN_POSITIVE));
        }
    }
    let detail = format!("max relative error {worst:.2e} (tol {CONSERVATION_REL_TOL:e})");
    assert!(verdict(7, worst <= CONSERVATION_REL_TOL, &detail, t0.elapsed(), Duration::from_secs(1)));
}

fn criterion_8_greedy_invariant() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut steps = 0;
    for inst in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + inst);
        let (rows, cols) = (rng.random_range(2..9), rng.random_range(2..9));
        let g = rect_grid(rows, cols);
        let n = g.len();
        let w: Vec<f64> = (0..n).map(|_| -rng.random_range(0.0f64..1.0).ln() * 3.0).collect();
        let k0 = rng.random_range(1..=cols.min(3));
        let init = BeatDesign::from_assignment(
            g.atoms.iter().map(|a| (a.grid_coord.col as usize * k0) / cols).collect(),
        )
        .unwrap();
        let target = (k0 + rng.random_range(1..10)).min(n);
        let opts = GreedyOptions {
            workload_weighted: inst % 2 == 1,
        };
        let res = greedy_expand(&init, &g, &w, target, &opts).unwrap();
        let mut prev = f64::INFINITY;
        for d in &res.designs {
            let max = beat_loads(d, &w).unwrap().into_iter().fold(f64::NEG_INFINITY, f64::max);
            if max > prev + 1e-12 || !is_contiguous(d, &g) || d.n_atoms() != n {
                failures.push(inst);
                break;
            }
            prev = max;
            steps += 1;
        }
    }
    let detail = format!("{steps} designs over 50 instances; failing instances {failures:?}");
    assert!(verdict(8, failures.is_empty(), &detail, t0.elapsed(), Duration::from_secs(60)));
}

const CRITERIA: [(&str, fn()); 8] = [
    ("criterion_1_replica_variances", criterion_1_replica_variances),
    ("criterion_2_variance_reduction", criterion_2_variance_reduction),
    ("criterion_3_mip_size", criterion_3_mip_size),
    ("criterion_4_flow_equivalence", criterion_4_flow_equivalence),
    ("criterion_5_anneal_near_optimal", criterion_5_anneal_near_optimal),
    ("criterion_6_regression_recovery", criterion_6_regression_recovery),
    ("criterion_7_interpolation_conservation", criterion_7_interpolation_conservation),
    ("criterion_8_greedy_invariant", criterion_8_greedy_invariant),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (k, (name, run)) in CRITERIA.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        REPORTED.store(false, Ordering::SeqCst);
        if std::panic::catch_unwind(run).is_err() {
            if !REPORTED.load(Ordering::SeqCst) {
                println!("[FAIL] criterion {}: panicked before reporting", k + 1);
            }
            failed.push(*name);
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}

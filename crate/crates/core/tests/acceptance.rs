//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Every run uses master seed 1. Statistical comparisons are paired: all
//! algorithms at one trial index see the same channel and initial layout.

use std::time::Instant;

use prafd::experiment::{run_experiment, Algorithm, ExperimentResults, ExperimentSpec, Sweep};
use prafd::oracle;
use prafd::report::{emit_csv, without_wall_time, AGGREGATES_FILE, TRIALS_FILE};
use prafd::ScenarioConfig;

const SEED: u64 = 1;

struct Outcome {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn spec(k: usize, n: usize, algorithms: &[Algorithm], trials: usize) -> ExperimentSpec {
    ExperimentSpec {
        base: ScenarioConfig::default().with_users(k).with_antennas(n),
        algorithms: algorithms.to_vec(),
        trials,
        seed: SEED,
        ..Default::default()
    }
}

fn run(spec: &ExperimentSpec) -> ExperimentResults {
    let res = run_experiment(spec).expect("experiment runs");
    for r in &res.records {
        if let Err(e) = &r.outcome {
            println!("  note: {} trial {} failed: {e}", r.algorithm, r.trial);
        }
    }
    res
}

fn mean(res: &ExperimentResults, alg: Algorithm, value: Option<f64>) -> f64 {
    res.aggregate(alg, value).expect("aggregate").mean
}

fn oracle_outcome(id: usize, title: &'static str, report: prafd::Result<oracle::OracleReport>) -> Outcome {
    match report {
        Ok(r) => Outcome {
            id,
            title,
            passed: r.passed(),
            detail: r.to_string(),
        },
        Err(e) => Outcome {
            id,
            title,
            passed: false,
            detail: format!("suite error: {e}"),
        },
    }
}

fn main() {
    let mut out: Vec<Outcome> = Vec::new();

    // 1, 2: monotone AO and tight surrogate over 200 trials at K = N = 2.
    let started = Instant::now();
    let base = run(&spec(2, 2, &[Algorithm::FpBsum], 200));
    let elapsed = started.elapsed().as_secs_f64();
    let ok: Vec<_> = base.successes(Algorithm::FpBsum, None).map(|(_, r)| r).collect();
    let drops = ok
        .iter()
        .filter(|r| r.objective_trace.windows(2).any(|w| w[1] < w[0] - 1e-9))
        .count();
    let violations: usize = ok.iter().map(|r| r.block_violations).sum();
    let worst_drop = ok
        .iter()
        .flat_map(|r| r.objective_trace.windows(2).map(|w| w[0] - w[1]))
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(Outcome {
        id: 1,
        title: "monotone AO",
        passed: ok.len() == 200 && drops == 0 && violations == 0 && elapsed < 300.0,
        detail: format!(
            "{} trials, {drops} non-monotone traces, {violations} block violations, largest drop {worst_drop:.2e}, {elapsed:.1}s",
            ok.len()
        ),
    });
    let gaps: Vec<f64> = ok.iter().flat_map(|r| r.sandwich_gaps.iter().copied()).collect();
    let worst_gap = gaps.iter().copied().fold(0.0, f64::max);
    out.push(Outcome {
        id: 2,
        title: "FP sandwich",
        passed: !gaps.is_empty() && worst_gap <= 1e-9,
        detail: format!("{} refreshes, worst relative gap {worst_gap:.2e}", gaps.len()),
    });

    // 3-8: brute-force oracles.
    out.push(oracle_outcome(3, "W_t optimality", oracle::transmit_suite(500, SEED, 1e-4, 1e-6)));
    out.push(oracle_outcome(4, "W_r closed form", oracle::receive_suite(500, SEED, 1e-9, 1e-8)));
    out.push(oracle_outcome(5, "power allocation oracle", Ok(oracle::power_suite(1000, SEED))));
    out.push(oracle_outcome(6, "gradient/Hessian", oracle::placement_suite(1000, SEED, 1e-4, 1e-6)));
    out.push(oracle_outcome(7, "geometry oracle", oracle::geometry_suite(1000, SEED, 0.05)));
    out.push(oracle_outcome(8, "receive scaling invariance", oracle::receive_scaling_suite(1000, SEED, 1e-9)));

    // 9: paired comparisons.
    let started = Instant::now();
    let cmp = run(&spec(2, 2, &[Algorithm::FpBsum, Algorithm::Fpas, Algorithm::FpGd], 200));
    let single = run(&spec(1, 1, &[Algorithm::FpBsum, Algorithm::Fpas], 200));
    let elapsed = started.elapsed().as_secs_f64();
    let (bsum, fpas, gd) = (
        mean(&cmp, Algorithm::FpBsum, None),
        mean(&cmp, Algorithm::Fpas, None),
        mean(&cmp, Algorithm::FpGd, None),
    );
    let (bsum1, fpas1) = (mean(&single, Algorithm::FpBsum, None), mean(&single, Algorithm::Fpas, None));
    let gain1 = bsum1 / fpas1 - 1.0;
    let checks = [bsum > fpas, bsum >= gd, gain1 >= 0.10, elapsed < 900.0];
    out.push(Outcome {
        id: 9,
        title: "paired comparisons",
        passed: checks.iter().all(|c| *c),
        detail: format!(
            "K=N=2: FP-BSUM {bsum:.4} vs FPAS {fpas:.4} [{}], vs FP-GD {gd:.4} [{}]; K=N=1: PRAS gain {:.1}% [{}]; {elapsed:.1}s",
            if checks[0] { "ok" } else { "miss" },
            if checks[1] { "ok" } else { "miss" },
            100.0 * gain1,
            if checks[2] { "ok" } else { "miss" },
        ),
    });

    // 10: region-size saturation.
    let mut sweep = spec(2, 2, &[Algorithm::FpBsum], 200);
    sweep.sweep = Some("A=1,2,3,4,5".parse::<Sweep>().unwrap());
    let res = run(&sweep);
    let means: Vec<f64> = [1.0, 2.0, 3.0, 4.0, 5.0]
        .iter()
        .map(|a| mean(&res, Algorithm::FpBsum, Some(*a)))
        .collect();
    let monotone = means.windows(2).all(|w| w[1] >= w[0]);
    let saturating = means[4] - means[3] < means[1] - means[0];
    out.push(Outcome {
        id: 10,
        title: "region-size saturation",
        passed: monotone && saturating,
        detail: format!(
            "means over A=1..5: {} (non-decreasing: {monotone}, gain 4->5 below 1->2: {saturating})",
            means.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(", ")
        ),
    });

    // 11: convergence speed at the default scenario.
    let defaults = run(&ExperimentSpec {
        algorithms: vec![Algorithm::FpBsum],
        trials: 200,
        seed: SEED,
        ..Default::default()
    });
    let agg = defaults.aggregate(Algorithm::FpBsum, None).unwrap();
    out.push(Outcome {
        id: 11,
        title: "convergence speed",
        passed: agg.n_ok > 0 && agg.median_iterations <= 15.0,
        detail: format!(
            "median outer iterations {} (mean {:.2}) over {} trials",
            agg.median_iterations, agg.mean_iterations, agg.n_ok
        ),
    });

    // 12: robustness direction.
    let mut angle = spec(2, 2, &[Algorithm::FpBsum], 200);
    angle.sweep = Some("theta_m=0,0.2".parse().unwrap());
    let res = run(&angle);
    let (clean, noisy) = (
        mean(&res, Algorithm::FpBsum, Some(0.0)),
        mean(&res, Algorithm::FpBsum, Some(0.2)),
    );
    let mut prm = spec(2, 2, &[Algorithm::FpBsum], 200);
    prm.sigma_e2 = 0.2;
    let res = run(&prm);
    let rise_and_fall = res
        .successes(Algorithm::FpBsum, None)
        .filter(|(_, r)| r.evaluated_trace.windows(2).any(|w| w[1] < w[0]))
        .count();
    out.push(Outcome {
        id: 12,
        title: "robustness direction",
        passed: noisy < clean && rise_and_fall >= 1,
        detail: format!(
            "theta_m=0.2: {noisy:.4} vs {clean:.4} ({:+.1}%); sigma_e2=0.2: {rise_and_fall}/200 non-monotone evaluated traces",
            100.0 * (noisy / clean - 1.0)
        ),
    });

    // 13: determinism of the emitted CSV, across thread counts.
    let mut det = spec(2, 2, &Algorithm::ALL, 6);
    det.sweep = Some("theta_m=0,0.2".parse().unwrap());
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, threads) in dirs.iter().zip([1, 4]) {
        det.threads = Some(threads);
        emit_csv(&run(&det), dir.path()).unwrap();
    }
    let same = [TRIALS_FILE, AGGREGATES_FILE].iter().all(|f| {
        without_wall_time(dirs[0].path().join(f)).unwrap() == without_wall_time(dirs[1].path().join(f)).unwrap()
    });
    out.push(Outcome {
        id: 13,
        title: "determinism",
        passed: same,
        detail: format!(
            "two runs (1 and 4 threads) {} byte-identical outside wall-time columns",
            if same { "are" } else { "are NOT" }
        ),
    });

    out.sort_by_key(|o| o.id);
    let failed = out.iter().filter(|o| !o.passed).count();
    println!();
    for o in &out {
        println!(
            "{} criterion {:>2} ({}): {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.id,
            o.title,
            o.detail
        );
    }
    println!("\nacceptance: {} passed, {failed} failed", out.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Acceptance gate: one test per release criterion, each printing a
//! `ACCEPTANCE <n> (<name>): PASS/FAIL` line (run with `--nocapture` to see
//! the lines as they pass).
//!
//! The criteria pin the library's headline claims end to end: exactness and
//! convergence exponents of the finite-difference estimator under Gaussian
//! noise, its per-coordinate bias/variance identities, packing invariants,
//! adversarial-oracle statistics, the information-theoretic floor of the
//! recovery game, closed-form cross-checks, the achievable-versus-floor gap
//! slope, and byte-level determinism of the CLI.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use zograd::bounds::{bernoulli_kl, fdm_gaussian_rate_constant, folded_gaussian_mean};
use zograd::estimators::{fdm_estimate, FdmConfig, StepPolicy};
use zograd::funcspace::{CubicFunction, DomainBox, FunctionSpec, SignVector};
use zograd::harness::{
    fit_rate, gap_report, pairwise_sum, run_fdm_grid, run_recovery_game, trial_seed,
    CubicFamily, ExperimentGrid, RateAxis,
};
use zograd::oracles::Oracle;
use zograd::packing::{build_packing, min_discrepancy_psi, separation_threshold, target_size};
use zograd::Error;

fn report(n: u32, name: &str, pass: bool, details: &str) {
    println!(
        "ACCEPTANCE {n} ({name}): {} — {details}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "ACCEPTANCE {n} ({name}) FAILED — {details}");
}

fn grid(
    dims: Vec<usize>,
    budgets: Vec<u64>,
    sigma: f64,
    k: f64,
    trials: u64,
    policy: StepPolicy,
    seed: u64,
) -> ExperimentGrid {
    ExperimentGrid {
        dims,
        budgets,
        sigma,
        k,
        family: CubicFamily { quad: 0.0, lin: 0.0 },
        trials,
        master_seed: seed,
        step_policy: policy,
        radius: 1.0,
        x_star: 0.0,
    }
}

#[test]
fn acceptance_1_curvature_free_exactness() {
    // d = 4, T = 160, sigma = 1, boundary step 1 from the unit box: the
    // closed form d^(3/2) sigma / (h sqrt(T)) sqrt(2/pi) = 0.50463 is the
    // exact expectation, and 10^5 trials must land within 1% of it on a
    // single worker thread in under a minute.
    let g = grid(
        vec![4],
        vec![160],
        1.0,
        0.0,
        100_000,
        StepPolicy::Boundary,
        0xAC01,
    );
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let records = pool.install(|| run_fdm_grid(&g)).unwrap();
    let elapsed = start.elapsed();
    let r = records[0];
    let closed_form = 4.0f64.powf(1.5) / 160.0f64.sqrt() * (2.0 / PI).sqrt();
    let rel = (r.mean_l1_error - closed_form).abs() / closed_form;
    let pass = rel <= 0.01 && elapsed < Duration::from_secs(60);
    report(
        1,
        "curvature-free exact rate",
        pass,
        &format!(
            "mean {:.5} vs closed form {closed_form:.5} (rel dev {:.4}%), 10^5 \
             single-threaded trials in {:.2?}",
            r.mean_l1_error,
            100.0 * rel,
            elapsed
        ),
    );
}

#[test]
fn acceptance_2_rate_exponents() {
    let budgets: Vec<u64> = (7..=12).map(|e| (1u64 << e) * 4).collect();
    let trials = 10_000;

    let rec_t0 = run_fdm_grid(&grid(
        vec![4],
        budgets.clone(),
        1.0,
        0.0,
        trials,
        StepPolicy::Boundary,
        0xAC02,
    ))
    .unwrap();
    let slope_t0 = fit_rate(&rec_t0, RateAxis::Budget).unwrap().slope;

    let rec_t6 = run_fdm_grid(&grid(
        vec![4],
        budgets,
        1.0,
        6.0,
        trials,
        StepPolicy::OptimalGaussian,
        0xAC12,
    ))
    .unwrap();
    let slope_t6 = fit_rate(&rec_t6, RateAxis::Budget).unwrap().slope;

    let rec_d0 = run_fdm_grid(&grid(
        vec![4, 8, 16, 32],
        vec![16_384],
        1.0,
        0.0,
        trials,
        StepPolicy::Boundary,
        0xAC22,
    ))
    .unwrap();
    let slope_d0 = fit_rate(&rec_d0, RateAxis::Dimension).unwrap().slope;

    let rec_d6 = run_fdm_grid(&grid(
        vec![4, 8, 16, 32],
        vec![16_384],
        1.0,
        6.0,
        trials,
        StepPolicy::OptimalGaussian,
        0xAC32,
    ))
    .unwrap();
    let slope_d6 = fit_rate(&rec_d6, RateAxis::Dimension).unwrap().slope;
    // The erf/exp factor of the curved rate is handled by the per-cell
    // closed-form prediction: every cell must sit on its predicted value,
    // which is what makes the raw d-slope exactly 4/3.
    let d6_calibrated = rec_d6.iter().all(|r| {
        (r.mean_l1_error - r.predicted).abs()
            <= (3.0 * r.ci_halfwidth).max(0.01 * r.predicted)
    });

    let pass = (slope_t0 + 0.5).abs() <= 0.03
        && (slope_t6 + 1.0 / 3.0).abs() <= 0.05
        && (slope_d0 - 1.5).abs() <= 0.05
        && (slope_d6 - 4.0 / 3.0).abs() <= 0.07
        && d6_calibrated;
    report(
        2,
        "convergence exponents",
        pass,
        &format!(
            "slope vs T: {slope_t0:.4} (want -0.50±0.03), {slope_t6:.4} (want \
             -0.333±0.05); slope vs d: {slope_d0:.4} (want 1.50±0.05), \
             {slope_d6:.4} (want 1.333±0.07); curved cells on prediction: \
             {d6_calibrated}"
        ),
    );
}

#[test]
fn acceptance_3_bias_variance_identities() {
    // One finite-difference coordinate at (d=2, T=8, sigma=1, h=0.5, k=6):
    // mean must equal grad_i + h^2 k / 6 within 4 standard errors and the
    // sample variance must equal sigma^2 d / (h^2 T) = 1 within 5%.
    let (h, budget, sigma, k) = (0.5, 8u64, 1.0, 6.0);
    let f: FunctionSpec =
        CubicFunction::new(k, vec![0.2, 0.0], vec![0.7, -0.3]).unwrap().into();
    let x_star = [0.0, 0.0];
    let domain = DomainBox::centered(2, 1.0).unwrap();
    let grad = f.grad(&x_star).unwrap();
    let config = FdmConfig { budget, step_policy: StepPolicy::Fixed(h) };
    let n = 1_000_000usize;
    let samples: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|trial| {
            let rng = ChaCha8Rng::seed_from_u64(trial_seed(0xAC03, 0, trial as u64));
            let mut oracle = Oracle::gaussian(sigma, domain.clone(), budget, rng).unwrap();
            let est = fdm_estimate(&mut oracle, &f, &x_star, &config).unwrap();
            (est.grad_hat[0], est.grad_hat[1])
        })
        .collect();
    let var_target = sigma * sigma * 2.0 / (h * h * budget as f64);
    let mut detail = String::new();
    let mut pass = true;
    for coord in 0..2 {
        let values: Vec<f64> = samples
            .iter()
            .map(|s| if coord == 0 { s.0 } else { s.1 })
            .collect();
        let mean = pairwise_sum(&values) / n as f64;
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&sq) / (n as f64 - 1.0);
        let mean_target = grad[coord] + h * h * k / 6.0;
        let se = (var / n as f64).sqrt();
        let mean_ok = (mean - mean_target).abs() <= 4.0 * se;
        let var_ok = (var - var_target).abs() <= 0.05 * var_target;
        pass &= mean_ok && var_ok;
        detail.push_str(&format!(
            "coord {coord}: mean {mean:.5} vs {mean_target:.5} ({:.1} SE), var \
             {var:.5} vs {var_target:.5}; ",
            (mean - mean_target).abs() / se
        ));
    }
    report(3, "bias/variance identities", pass, detail.trim_end_matches("; "));
}

#[test]
fn acceptance_4_packing_invariants() {
    let delta = 0.25;
    let mut detail = String::new();
    let mut pass = true;
    for d in [4usize, 8, 16, 32, 64] {
        let set = build_packing(d, 0xAC04).unwrap();
        let min_dist = set.min_pairwise_distance();
        let psi = min_discrepancy_psi(&set, delta, &vec![0.0; d]).unwrap();
        let ok = set.len() >= target_size(d)
            && min_dist >= separation_threshold(d)
            && psi >= delta / 2.0;
        pass &= ok;
        detail.push_str(&format!(
            "d={d}: size {}≥{}, min dist {}≥{}, psi {psi}≥{}; ",
            set.len(),
            target_size(d),
            min_dist,
            separation_threshold(d),
            delta / 2.0
        ));
    }
    report(4, "packing invariants", pass, detail.trim_end_matches("; "));
}

#[test]
fn acceptance_5_adversarial_oracle_statistics() {
    // 20 random in-domain points on the sigma-matched box (radius 2 sigma):
    // empirical mean within 4 SE of the hidden hyperplane value, sample
    // variance at most ||x||^2/(4d) plus 3 Monte Carlo errors.
    let (d, delta, sigma, radius) = (6usize, 0.2, 1.0, 2.0);
    let domain = DomainBox::centered(d, radius).unwrap();
    let n = 100_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC05);
    let mut pass = true;
    let mut worst_mean_z: f64 = 0.0;
    let mut worst_var_margin = f64::INFINITY;
    for _ in 0..20 {
        let alpha = SignVector::random(d, &mut rng);
        let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 2.0 * radius - radius).collect();
        let f: FunctionSpec =
            zograd::funcspace::HyperplaneFunction::new(alpha.clone(), delta)
                .unwrap()
                .into();
        let truth = f.eval(&x).unwrap();
        let oracle_rng = ChaCha8Rng::seed_from_u64(rng.gen());
        let mut oracle =
            Oracle::adversarial(alpha, delta, sigma, domain.clone(), n, oracle_rng)
                .unwrap();
        let samples: Vec<f64> = (0..n).map(|_| oracle.query(&f, &x).unwrap()).collect();
        let nf = n as f64;
        let mean = pairwise_sum(&samples) / nf;
        let centered: Vec<f64> = samples.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&centered) / (nf - 1.0);
        let fourth: Vec<f64> =
            samples.iter().map(|v| (v - mean).powi(4)).collect();
        let m4 = pairwise_sum(&fourth) / nf;
        let se_mean = (var / nf).sqrt();
        let se_var = ((m4 - var * var).max(0.0) / nf).sqrt();
        let bound = x.iter().map(|v| v * v).sum::<f64>() / (4.0 * d as f64);
        let mean_z = (mean - truth).abs() / se_mean;
        let var_margin = bound + 3.0 * se_var - var;
        worst_mean_z = worst_mean_z.max(mean_z);
        worst_var_margin = worst_var_margin.min(var_margin);
        pass &= mean_z <= 4.0 && var_margin >= 0.0;
    }
    // Construction must be refused as soon as the box outgrows 2 sigma.
    let wide = DomainBox::centered(d, 2.5).unwrap();
    let refused = matches!(
        Oracle::adversarial(
            SignVector::new(vec![1i8; d]).unwrap(),
            delta,
            sigma,
            wide,
            16,
            ChaCha8Rng::seed_from_u64(0)
        ),
        Err(Error::VarianceCapExceeded { .. })
    );
    pass &= refused;
    report(
        5,
        "adversarial oracle statistics",
        pass,
        &format!(
            "20 points: worst mean deviation {worst_mean_z:.2} SE (cap 4), worst \
             variance margin {worst_var_margin:.6} (must be >= 0); oversized box \
             refused: {refused}"
        ),
    );
}

#[test]
fn acceptance_6_fano_floor_never_violated() {
    let trials = 10_000u64;
    let mut pass = true;
    let mut floor_cells = 0;
    let mut ceiling_cells = 0;
    let mut worst_floor_margin = f64::INFINITY;
    for d in [16usize, 32, 64] {
        for delta in [0.01, 0.05, 0.1] {
            for mult in [2u64, 8, 32] {
                let budget = mult * d as u64;
                let result =
                    run_recovery_game(d, budget, delta, trials, 0xAC06).unwrap();
                let p = result.empirical_error_prob;
                let se = (p * (1.0 - p) / trials as f64).sqrt();
                if result.fano_floor > 0.0 {
                    floor_cells += 1;
                    let margin = p - (result.fano_floor - 3.0 * se);
                    worst_floor_margin = worst_floor_margin.min(margin);
                    pass &= margin >= 0.0;
                }
                if result.markov_ceiling_applicable {
                    ceiling_cells += 1;
                    pass &= p <= 1.0 / 3.0 + 3.0 * se;
                }
            }
        }
    }
    // The cells with a positive floor are fixed by the closed form.
    pass &= floor_cells == 10;
    report(
        6,
        "recovery floor and ceiling",
        pass,
        &format!(
            "27 cells, 10^4 trials each: {floor_cells} positive-floor cells all \
             respected (worst margin {worst_floor_margin:.4}); {ceiling_cells} \
             low-risk cells under the 1/3 ceiling (regime exercised separately \
             when absent here)"
        ),
    );
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[test]
fn acceptance_7_closed_form_cross_checks() {
    // (a) Bernoulli KL under its quadratic bound on a 1000-point grid.
    let mut kl_ok = true;
    for i in 1..=1000 {
        let delta = 0.25 * i as f64 / 1000.0;
        kl_ok &= bernoulli_kl(delta).unwrap() <= 16.0 * delta * delta;
    }
    // (b) folded-Gaussian mean against quadrature over mu/s in [-6, 6].
    let mut worst_quad_err: f64 = 0.0;
    for s in [0.5f64, 1.0, 2.0] {
        let mut ratio = -6.0f64;
        while ratio <= 6.0 {
            let mu = ratio * s;
            let closed = folded_gaussian_mean(mu, s);
            let density = |z: f64| {
                let u = (z - mu) / s;
                z.abs() * (-0.5 * u * u).exp() / (s * (2.0 * PI).sqrt())
            };
            let mut cuts = vec![mu - 10.0 * s, mu + 10.0 * s];
            if cuts[0] < 0.0 && cuts[1] > 0.0 {
                cuts.insert(1, 0.0);
            }
            let mut integrated = 0.0;
            for pair in cuts.windows(2) {
                integrated += simpson(&density, pair[0], pair[1], 1e-12, 40);
            }
            worst_quad_err = worst_quad_err.max((closed - integrated).abs());
            ratio += 0.25;
        }
    }
    let quad_ok = worst_quad_err <= 1e-7;
    // (c) The curved-rate constant, frozen at its 25-digit evaluation.
    let constant = fdm_gaussian_rate_constant();
    let constant_ok = (constant - 1.221_940_520_980_829_6).abs() <= 1e-6;
    let pass = kl_ok && quad_ok && constant_ok;
    report(
        7,
        "closed-form cross-checks",
        pass,
        &format!(
            "KL <= 16 delta^2 on 1000-point grid: {kl_ok}; folded mean vs \
             quadrature worst abs err {worst_quad_err:.2e} (cap 1e-7); rate \
             constant {constant:.10} within 1e-6 of reference"
        ),
    );
}

#[test]
fn acceptance_8_gap_slope() {
    // Formula-level: ratio of the exact curvature-free rate to the minimax
    // floor, log-log slope vs d at large d where the floor's additive
    // deficit is negligible.
    let report_data =
        gap_report(&[4096, 8192, 16384, 32768], &[409_600], 1.0, 0.0, 2.0).unwrap();
    let slope = report_data.slope_vs_d.unwrap();
    let pass = (slope - 1.0).abs() <= 0.01;
    report(
        8,
        "achievable/floor gap slope",
        pass,
        &format!("log-log slope of exact/lower vs d = {slope:.5} (want 1.00±0.01)"),
    );
}

fn run_cli(dir: &Path, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_zograd"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    assert!(
        status.status.success(),
        "zograd {args:?} failed: {}",
        String::from_utf8_lossy(&status.stderr)
    );
}

fn fresh_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "zograd-acceptance-{}-{tag}",
        std::process::id()
    ));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|entry| {
            let entry = entry.unwrap();
            (
                entry.file_name().to_string_lossy().into_owned(),
                fs::read(entry.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn acceptance_9_cli_determinism() {
    let invocations: Vec<(&str, Vec<&str>)> = vec![
        (
            "rates",
            vec![
                "rates", "--dims", "4,8", "--budgets", "160,320", "--trials", "200",
                "--seed", "11", "--out", "rates.csv",
            ],
        ),
        (
            "recovery",
            vec![
                "recovery", "--d", "8", "--T", "64", "--delta", "0.1", "--trials",
                "200", "--seed", "11", "--transcript", "transcript.csv", "--out",
                "recovery.json",
            ],
        ),
        (
            "bounds",
            vec![
                "bounds", "--d", "16", "--T", "100", "--delta", "0.05", "--seed",
                "11", "--out", "bounds.json",
            ],
        ),
        (
            "packing",
            vec!["packing", "--d", "16", "--seed", "11", "--out", "packing.csv"],
        ),
        (
            "gap",
            vec![
                "gap", "--dims", "16,32,64", "--budgets", "320,3200", "--seed",
                "11", "--out", "gap.csv",
            ],
        ),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (name, args) in &invocations {
        let dir_a = fresh_dir(&format!("{name}-a"));
        let dir_b = fresh_dir(&format!("{name}-b"));
        let mut args_a: Vec<&str> = args.clone();
        args_a.extend(["--threads", "1"]);
        let mut args_b: Vec<&str> = args.clone();
        args_b.extend(["--threads", "4"]);
        run_cli(&dir_a, &args_a);
        run_cli(&dir_b, &args_b);
        let files_a = dir_files(&dir_a);
        let files_b = dir_files(&dir_b);
        let identical = !files_a.is_empty() && files_a == files_b;
        pass &= identical;
        detail.push_str(&format!(
            "{name}: {} files byte-identical across --threads 1/4: {identical}; ",
            files_a.len()
        ));
        let _ = fs::remove_dir_all(&dir_a);
        let _ = fs::remove_dir_all(&dir_b);
    }
    report(9, "CLI determinism", pass, detail.trim_end_matches("; "));
}

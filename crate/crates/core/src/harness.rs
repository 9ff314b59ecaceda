//! Seeded Monte Carlo experiment engine.
//!
//! Runs the finite-difference estimator against fresh seeded oracles across
//! `(d, T)` grids ([`run_fdm_grid`]), fits log-log convergence slopes
//! ([`fit_rate`]), plays the sign-pattern recovery game against the
//! adversarial oracle ([`run_recovery_game`]), tabulates the gap between the
//! achievable rate and the minimax floor ([`gap_report`]), and writes
//! machine-readable results ([`emit_results`]).
//!
//! Everything is reproducible from a single master seed, independent of the
//! worker-thread count: each trial gets its own counter-based generator via
//! [`trial_seed`], per-trial outputs are collected in trial order, and
//! floating-point reductions use the fixed-shape [`pairwise_sum`], so two
//! runs with the same seed produce byte-identical output files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{fano_error_floor, fdm_gaussian_exact, gaussian_fdm_error_at_h,
    lower_bound_minimax, RateInputs};
use crate::error::{Error, Result};
use crate::estimators::{fdm_estimate, FdmConfig, PackedDecoder, StepPolicy};
use crate::funcspace::{CubicFunction, DomainBox, FunctionSpec, HyperplaneFunction};
use crate::oracles::{Oracle, OracleTranscript};
use crate::packing::{build_packing, PackingSet};

/// RNG stream carrying the trial driver's own draws (model selection,
/// decoder fallback).
const TRIAL_STREAM: u64 = 0;
/// RNG stream carrying the oracle's noise, disjoint from [`TRIAL_STREAM`]
/// so driver draws never perturb the oracle sequence.
const ORACLE_STREAM: u64 = 1;
/// Cell id reserved for deriving the recovery game's packing seed.
const RECOVERY_PACKING_CELL: u64 = 0;
/// Cell id under which the recovery game derives its per-trial seeds.
const RECOVERY_TRIAL_CELL: u64 = 1;

/// One round of the splitmix64 mixing function: adds the Weyl increment,
/// then finalizes with xor-shift multiplies. Full-avalanche, bijective.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives the seed of one trial's generator from the master seed, the grid
/// cell index, and the trial index, by folding each coordinate through
/// splitmix64. Any two distinct `(master_seed, cell, trial)` triples yield
/// unrelated streams; equal triples yield identical streams, which is what
/// makes experiments reproducible under arbitrary scheduling.
pub fn trial_seed(master_seed: u64, cell: u64, trial: u64) -> u64 {
    let mut s = splitmix64(master_seed);
    s = splitmix64(s ^ cell);
    splitmix64(s ^ trial)
}

/// ChaCha8 generator for `seed`, switched to the given stream.
fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sums values by recursive halving (pairwise/tree summation). The
/// reduction shape depends only on the slice length, so the result is
/// bit-identical however the values were produced — the keystone of
/// thread-count-independent output — and rounding error grows only
/// logarithmically in the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values {
        [] => 0.0,
        [x] => *x,
        _ => {
            let mid = values.len() / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Mean and 95% normal-approximation confidence halfwidth
/// (`1.96 sd / sqrt(n)`), both via [`pairwise_sum`].
fn mean_and_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let squares: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&squares) / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Sum of coordinate-wise absolute differences.
fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Cubic-family coefficients shared by every grid cell: each coordinate of
/// the test function is `k x^3/6 + quad x^2/2 + lin x`, so the family
/// broadcasts across dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicFamily {
    /// Quadratic coefficient per coordinate.
    pub quad: f64,
    /// Linear coefficient per coordinate.
    pub lin: f64,
}

/// A grid of `(d, T)` Monte Carlo cells sharing noise scale, curvature,
/// function family, step policy, and master seed.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentGrid {
    /// Dimensions to sweep.
    pub dims: Vec<usize>,
    /// Query budgets to sweep; every `(d, T)` cell must satisfy `T >= 2d`.
    pub budgets: Vec<u64>,
    /// Oracle noise scale.
    pub sigma: f64,
    /// Third-derivative bound of the cubic family (its `k` coefficient).
    pub k: f64,
    /// Quadratic/linear coefficients of the cubic family.
    pub family: CubicFamily,
    /// Trials per cell; at least 100 so the normal-approximation CI holds.
    pub trials: u64,
    /// Root of all randomness in the grid.
    pub master_seed: u64,
    /// Step-size rule passed to the estimator.
    pub step_policy: StepPolicy,
    /// Half-width of the centered box domain.
    pub radius: f64,
    /// Coordinate of the probe point, broadcast to every axis; must lie
    /// strictly inside the domain.
    pub x_star: f64,
}

impl ExperimentGrid {
    /// Checks every field and every `(d, T)` cell against the documented
    /// ranges.
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::invalid("grid needs at least one dimension"));
        }
        if self.budgets.is_empty() {
            return Err(Error::invalid("grid needs at least one budget"));
        }
        if self.dims.iter().any(|&d| d == 0) {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        for &d in &self.dims {
            for &t in &self.budgets {
                if t < 2 * d as u64 {
                    return Err(Error::invalid(format!(
                        "cell (d={d}, T={t}) violates T >= 2d"
                    )));
                }
            }
        }
        if self.trials < 100 {
            return Err(Error::invalid(format!(
                "need at least 100 trials per cell for the CI, got {}",
                self.trials
            )));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::invalid(format!(
                "noise scale must be finite and nonnegative, got {}",
                self.sigma
            )));
        }
        if !self.k.is_finite() || self.k < 0.0 {
            return Err(Error::invalid(format!(
                "curvature must be finite and nonnegative, got {}",
                self.k
            )));
        }
        if !self.family.quad.is_finite() || !self.family.lin.is_finite() {
            return Err(Error::invalid("family coefficients must be finite"));
        }
        if !self.radius.is_finite() || self.radius <= 0.0 {
            return Err(Error::invalid(format!(
                "domain radius must be positive and finite, got {}",
                self.radius
            )));
        }
        if !self.x_star.is_finite() || self.x_star.abs() >= self.radius {
            return Err(Error::invalid(format!(
                "probe coordinate {} must lie strictly inside radius {}",
                self.x_star, self.radius
            )));
        }
        Ok(())
    }
}

/// One grid cell's Monte Carlo outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    /// Dimension.
    pub d: usize,
    /// Requested query budget.
    #[serde(rename = "T")]
    pub budget: u64,
    /// Oracle noise scale.
    pub sigma: f64,
    /// Curvature of the cell's cubic family.
    pub k: f64,
    /// Trials averaged.
    pub trials: u64,
    /// Empirical mean of the L1 gradient-estimation error.
    pub mean_l1_error: f64,
    /// 95% confidence halfwidth of the mean (normal approximation).
    pub ci_halfwidth: f64,
    /// Closed-form expectation for the cell: the exact Gaussian error
    /// evaluated at the step the run used and the queries it consumed.
    pub predicted: f64,
    /// Master seed the grid ran under.
    pub seed: u64,
}

/// Runs every `(d, T)` cell of the grid: `trials` independent
/// finite-difference estimates against fresh seeded Gaussian oracles,
/// scored by L1 distance to the analytic gradient. The `predicted` column
/// carries the closed-form expectation at the step size and effective
/// budget (`2d * floor(T / 2d)` queries) the estimator actually used, so
/// empirical and predicted columns are directly comparable for every cell.
pub fn run_fdm_grid(grid: &ExperimentGrid) -> Result<Vec<ExperimentRecord>> {
    grid.validate()?;
    let mut records = Vec::with_capacity(grid.dims.len() * grid.budgets.len());
    for (di, &d) in grid.dims.iter().enumerate() {
        for (bi, &budget) in grid.budgets.iter().enumerate() {
            let cell = (di * grid.budgets.len() + bi) as u64;
            records.push(run_gaussian_cell(grid, d, budget, cell)?);
        }
    }
    Ok(records)
}

fn run_gaussian_cell(
    grid: &ExperimentGrid,
    d: usize,
    budget: u64,
    cell: u64,
) -> Result<ExperimentRecord> {
    let f: FunctionSpec =
        CubicFunction::uniform(d, grid.k, grid.family.quad, grid.family.lin)?.into();
    let x_star = vec![grid.x_star; d];
    let domain = DomainBox::centered(d, grid.radius)?;
    let grad_true = f.grad(&x_star)?;
    let config = FdmConfig { budget, step_policy: grid.step_policy };
    let outcomes: Result<Vec<(f64, f64, u64)>> = (0..grid.trials as usize)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(grid.master_seed, cell, trial as u64);
            let oracle_rng = seeded_rng(seed, ORACLE_STREAM);
            let mut oracle =
                Oracle::gaussian(grid.sigma, domain.clone(), budget, oracle_rng)?;
            let estimate = fdm_estimate(&mut oracle, &f, &x_star, &config)?;
            let error = l1_distance(&estimate.grad_hat, &grad_true);
            Ok((error, estimate.step_used, estimate.queries_used))
        })
        .collect();
    let outcomes = outcomes?;
    let errors: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let (mean, ci) = mean_and_ci(&errors);
    // Every trial resolves the same step and consumes the same quota.
    let (step_used, queries_used) = (outcomes[0].1, outcomes[0].2);
    let predicted = gaussian_fdm_error_at_h(
        &RateInputs::new(d, queries_used, grid.sigma, grid.k),
        step_used,
    );
    Ok(ExperimentRecord {
        d,
        budget,
        sigma: grid.sigma,
        k: grid.k,
        trials: grid.trials,
        mean_l1_error: mean,
        ci_halfwidth: ci,
        predicted,
        seed: grid.master_seed,
    })
}

/// Which grid axis a rate fit varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateAxis {
    /// Fit against the query budget `T`.
    Budget,
    /// Fit against the dimension `d`.
    Dimension,
}

/// Ordinary-least-squares fit of `log(mean_l1_error)` against the log of
/// the chosen axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    /// The fitted convergence exponent.
    pub slope: f64,
    /// Intercept in log space.
    pub intercept: f64,
    /// Coefficient of determination of the log-log fit.
    pub r_squared: f64,
}

/// Fits a power law to records that vary only along `axis`: ordinary least
/// squares on `(log axis value, log mean_l1_error)`. Needs at least three
/// records, at least two distinct axis values, positive errors, and all
/// off-axis parameters (`sigma`, `k`, and the other grid axis) constant.
pub fn fit_rate(records: &[ExperimentRecord], axis: RateAxis) -> Result<RateFit> {
    if records.len() < 3 {
        return Err(Error::TooFewPoints { got: records.len() });
    }
    for r in records {
        if !(r.mean_l1_error > 0.0) || !r.mean_l1_error.is_finite() {
            return Err(Error::invalid(format!(
                "rate fit needs positive finite errors, got {}",
                r.mean_l1_error
            )));
        }
    }
    let first = &records[0];
    let off_axis_constant = records.iter().all(|r| match axis {
        RateAxis::Budget => r.d == first.d,
        RateAxis::Dimension => r.budget == first.budget,
    });
    let params_constant =
        records.iter().all(|r| r.sigma == first.sigma && r.k == first.k);
    if !off_axis_constant || !params_constant {
        return Err(Error::invalid(
            "rate fit needs records varying only along the chosen axis",
        ));
    }
    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            let x = match axis {
                RateAxis::Budget => r.budget as f64,
                RateAxis::Dimension => r.d as f64,
            };
            (x.ln(), r.mean_l1_error.ln())
        })
        .collect();
    ols(&points)
}

fn ols(points: &[(f64, f64)]) -> Result<RateFit> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "rate fit needs at least two distinct axis values",
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| {
            let resid = p.1 - (slope * p.0 + intercept);
            resid * resid
        })
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { slope, intercept, r_squared })
}

/// Outcome of the sign-pattern recovery game.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryGameResult {
    /// Dimension.
    pub d: usize,
    /// Query budget per trial.
    #[serde(rename = "T")]
    pub budget: u64,
    /// Adversarial oracle bias.
    pub delta: f64,
    /// Trials played.
    pub trials: u64,
    /// Fraction of trials where the decoded pattern missed the truth.
    pub empirical_error_prob: f64,
    /// Information-theoretic floor on that fraction (raw; negative means
    /// vacuous).
    pub fano_floor: f64,
    /// Whether the observed mean risk stayed within `psi / 9`, the regime
    /// where decoding errors are guaranteed rare (probability at most 1/3).
    pub markov_ceiling_applicable: bool,
    /// Mean L1 distance between the estimated and true gradients.
    pub mean_l1_risk: f64,
    /// Minimum pairwise gradient gap of the packing used.
    pub psi: f64,
}

fn validate_recovery(d: usize, budget: u64, delta: f64) -> Result<()> {
    if d < 4 {
        return Err(Error::invalid(format!(
            "recovery game needs dimension at least 4, got {d}"
        )));
    }
    if budget < 2 * d as u64 {
        return Err(Error::BudgetTooSmall { budget, d });
    }
    if !delta.is_finite() || !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::invalid(format!(
            "recovery game needs delta in (0, 0.25], got {delta}"
        )));
    }
    Ok(())
}

/// Fixtures shared by every trial of one recovery game.
struct RecoveryArena {
    packing: PackingSet,
    decoder: PackedDecoder,
    domain: DomainBox,
    x_star: Vec<f64>,
    config: FdmConfig,
    delta: f64,
    sigma: f64,
}

fn recovery_arena(d: usize, budget: u64, delta: f64, master_seed: u64) -> Result<RecoveryArena> {
    validate_recovery(d, budget, delta)?;
    // The adversarial oracle's variance argument needs the domain no wider
    // than 2 sigma; the game pins sigma = 1 (every reported quantity is
    // invariant to the common scale of sigma, radius, and step).
    let sigma = 1.0;
    let packing = build_packing(d, trial_seed(master_seed, RECOVERY_PACKING_CELL, 0))?;
    let domain = DomainBox::centered(d, 2.0 * sigma)?;
    let x_star = vec![0.0; d];
    let decoder = PackedDecoder::new(&packing, delta, &x_star)?;
    Ok(RecoveryArena {
        packing,
        decoder,
        domain,
        x_star,
        config: FdmConfig { budget, step_policy: StepPolicy::Boundary },
        delta,
        sigma,
    })
}

/// One round: draw the truth uniformly from the packing, estimate its
/// gradient through the adversarial oracle, decode, score.
fn recovery_trial(
    arena: &RecoveryArena,
    seed: u64,
    record: bool,
) -> Result<(bool, f64, Option<OracleTranscript>)> {
    let mut trial_rng = seeded_rng(seed, TRIAL_STREAM);
    let index = trial_rng.gen_range(0..arena.packing.len());
    let alpha_star = arena.packing.vectors()[index].clone();
    let f: FunctionSpec =
        HyperplaneFunction::new(alpha_star.clone(), arena.delta)?.into();
    let grad_true = f.grad(&arena.x_star)?;
    let mut oracle = Oracle::adversarial(
        alpha_star.clone(),
        arena.delta,
        arena.sigma,
        arena.domain.clone(),
        arena.config.budget,
        seeded_rng(seed, ORACLE_STREAM),
    )?;
    if record {
        oracle.record_transcript();
    }
    let estimate = fdm_estimate(&mut oracle, &f, &arena.x_star, &arena.config)?;
    let decoded = arena.decoder.decode(&estimate.grad_hat, &mut trial_rng)?;
    let risk = l1_distance(&estimate.grad_hat, &grad_true);
    Ok((decoded != alpha_star, risk, oracle.take_transcript()))
}

/// Plays `trials` rounds of the recovery game at bias `delta`: per round,
/// a sign pattern drawn uniformly from the packing is observed only through
/// the adversarial oracle, the finite-difference estimate of its gradient
/// is decoded back to a pattern, and a miss is scored when the decoded
/// pattern differs. Reports the empirical miss probability next to the
/// information-theoretic floor, plus the mean L1 risk and whether it stayed
/// within `psi / 9` (the regime where misses are provably rare).
///
/// The game fixes `sigma = 1` on the box of radius 2 with the boundary step
/// policy; all reported quantities are invariant to that common scale.
pub fn run_recovery_game(
    d: usize,
    budget: u64,
    delta: f64,
    trials: u64,
    master_seed: u64,
) -> Result<RecoveryGameResult> {
    if trials == 0 {
        return Err(Error::invalid("recovery game needs at least one trial"));
    }
    let arena = recovery_arena(d, budget, delta, master_seed)?;
    let outcomes: Result<Vec<(bool, f64)>> = (0..trials as usize)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(master_seed, RECOVERY_TRIAL_CELL, trial as u64);
            recovery_trial(&arena, seed, false).map(|(miss, risk, _)| (miss, risk))
        })
        .collect();
    let outcomes = outcomes?;
    let misses = outcomes.iter().filter(|o| o.0).count();
    let risks: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    let mean_l1_risk = pairwise_sum(&risks) / trials as f64;
    let psi = arena.decoder.psi();
    Ok(RecoveryGameResult {
        d,
        budget,
        delta,
        trials,
        empirical_error_prob: misses as f64 / trials as f64,
        fano_floor: fano_error_floor(d, budget, delta),
        markov_ceiling_applicable: mean_l1_risk <= psi / 9.0,
        mean_l1_risk,
        psi,
    })
}

/// Replays trial 0 of the recovery game with oracle recording switched on
/// and returns its transcript — the exact query/response stream a run under
/// the same master seed scores.
pub fn recovery_transcript(
    d: usize,
    budget: u64,
    delta: f64,
    master_seed: u64,
) -> Result<OracleTranscript> {
    let arena = recovery_arena(d, budget, delta, master_seed)?;
    let seed = trial_seed(master_seed, RECOVERY_TRIAL_CELL, 0);
    let (_, _, transcript) = recovery_trial(&arena, seed, true)?;
    Ok(transcript.expect("recording was enabled"))
}

/// One `(d, T)` cell of the achievable-versus-floor comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapRow {
    /// Dimension.
    pub d: usize,
    /// Query budget.
    #[serde(rename = "T")]
    pub budget: u64,
    /// Exact Gaussian-oracle rate of the finite-difference estimator.
    pub exact: f64,
    /// Minimax floor (0 when vacuous).
    pub lower: f64,
    /// `exact / lower`; absent when the floor is vacuous.
    pub ratio: Option<f64>,
    /// Whether the floor is vacuous at this cell.
    pub vacuous: bool,
}

/// Gap table plus log-log slopes of the ratio along each axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    /// One row per `(d, T)` cell, dimension-major.
    pub rows: Vec<GapRow>,
    /// Slope of `log ratio` vs `log d` along the first budget; `None` with
    /// fewer than three usable cells.
    pub slope_vs_d: Option<f64>,
    /// Slope of `log ratio` vs `log T` along the first dimension; `None`
    /// with fewer than three usable cells.
    pub slope_vs_budget: Option<f64>,
}

/// Tabulates the exact Gaussian finite-difference rate against the minimax
/// floor over `dims x budgets` and fits the log-log slope of their ratio
/// along each axis. Cells where the floor is vacuous are flagged and
/// excluded from the slopes. For `k = 0` the ratio is budget-free and grows
/// linearly in `d` (up to the floor's small-`d` deficit); for `k > 0` it
/// grows like `T^(1/6)`.
pub fn gap_report(
    dims: &[usize],
    budgets: &[u64],
    sigma: f64,
    k: f64,
    h_r: f64,
) -> Result<GapReport> {
    if dims.is_empty() || budgets.is_empty() {
        return Err(Error::invalid("gap report needs at least one dimension and one budget"));
    }
    let mut rows = Vec::with_capacity(dims.len() * budgets.len());
    for &d in dims {
        for &budget in budgets {
            let inputs = RateInputs::new(d, budget, sigma, k).with_h_r(h_r);
            let exact = fdm_gaussian_exact(&inputs)?;
            let lower = lower_bound_minimax(d, budget);
            let vacuous = lower == 0.0;
            rows.push(GapRow {
                d,
                budget,
                exact,
                lower,
                ratio: if vacuous { None } else { Some(exact / lower) },
                vacuous,
            });
        }
    }
    let slope_points = |rows: Vec<&GapRow>, x: fn(&GapRow) -> f64| -> Option<f64> {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| match r.ratio {
                Some(ratio) if ratio > 0.0 => Some((x(r).ln(), ratio.ln())),
                _ => None,
            })
            .collect();
        if points.len() < 3 {
            return None;
        }
        ols(&points).ok().map(|fit| fit.slope)
    };
    let slope_vs_d = slope_points(
        rows.iter().filter(|r| r.budget == budgets[0]).collect(),
        |r| r.d as f64,
    );
    let slope_vs_budget = slope_points(
        rows.iter().filter(|r| r.d == dims[0]).collect(),
        |r| r.budget as f64,
    );
    Ok(GapReport { rows, slope_vs_d, slope_vs_budget })
}

/// On-disk format for [`emit_results`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    /// Comma-separated values with a fixed header.
    Csv,
    /// Pretty-printed JSON array mirroring the CSV fields.
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid(format!(
                "unknown output format {other:?} (expected csv or json)"
            ))),
        }
    }
}

/// Column order of the experiment-record CSV.
pub const RECORD_CSV_HEADER: &str =
    "d,T,sigma,k,trials,mean_l1_error,ci_halfwidth,predicted,seed";

fn record_csv_line(r: &ExperimentRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.d,
        r.budget,
        r.sigma,
        r.k,
        r.trials,
        r.mean_l1_error,
        r.ci_halfwidth,
        r.predicted,
        r.seed
    )
}

/// Renders records to CSV text (header always present, LF line endings).
pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(RECORD_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&record_csv_line(r));
        out.push('\n');
    }
    out
}

/// Parses text produced by [`records_to_csv`] back into records; floats
/// round-trip exactly because the writer uses shortest-representation
/// formatting.
pub fn parse_records_csv(text: &str) -> Result<Vec<ExperimentRecord>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::invalid("records CSV is empty"))?;
    if header != RECORD_CSV_HEADER {
        return Err(Error::invalid(format!("unexpected records header {header:?}")));
    }
    lines
        .filter(|line| !line.trim().is_empty())
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(Error::invalid(format!(
                    "records row has {} fields, expected 9",
                    fields.len()
                )));
            }
            fn num<T: FromStr>(s: &str, what: &str) -> Result<T> {
                s.parse().map_err(|_| Error::invalid(format!("bad {what}: {s:?}")))
            }
            Ok(ExperimentRecord {
                d: num(fields[0], "dimension")?,
                budget: num(fields[1], "budget")?,
                sigma: num(fields[2], "sigma")?,
                k: num(fields[3], "k")?,
                trials: num(fields[4], "trials")?,
                mean_l1_error: num(fields[5], "mean error")?,
                ci_halfwidth: num(fields[6], "ci halfwidth")?,
                predicted: num(fields[7], "prediction")?,
                seed: num(fields[8], "seed")?,
            })
        })
        .collect()
}

/// Writes records to `path` in the chosen format, then drops companion
/// plot-data files next to it: `<stem>.plot.d<d>.csv` (x = `T`) for every
/// dimension present, and `<stem>.plot.T<T>.csv` (x = `d`) for every budget
/// shared by at least two dimensions. Companion files carry the columns
/// `x,empirical,predicted`. All output uses LF endings and
/// shortest-representation floats, so identical records produce
/// byte-identical files.
pub fn emit_results(
    records: &[ExperimentRecord],
    path: &Path,
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Csv => fs::write(path, records_to_csv(records))?,
        OutputFormat::Json => {
            let mut json = serde_json::to_string_pretty(records)
                .map_err(|e| Error::invalid(format!("JSON encoding failed: {e}")))?;
            json.push('\n');
            fs::write(path, json)?;
        }
    }
    write_plot_companions(records, path)
}

fn write_plot_companions(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Ok(());
    }
    let stem = path.with_extension("");
    let mut dims_seen: Vec<usize> = Vec::new();
    let mut budgets_seen: Vec<u64> = Vec::new();
    for r in records {
        if !dims_seen.contains(&r.d) {
            dims_seen.push(r.d);
        }
        if !budgets_seen.contains(&r.budget) {
            budgets_seen.push(r.budget);
        }
    }
    for &d in &dims_seen {
        let mut out = String::from("x,empirical,predicted\n");
        for r in records.iter().filter(|r| r.d == d) {
            out.push_str(&format!(
                "{},{},{}\n",
                r.budget, r.mean_l1_error, r.predicted
            ));
        }
        fs::write(companion_path(&stem, &format!("d{d}")), out)?;
    }
    for &budget in &budgets_seen {
        let rows: Vec<&ExperimentRecord> =
            records.iter().filter(|r| r.budget == budget).collect();
        let mut dims_at_budget: Vec<usize> = rows.iter().map(|r| r.d).collect();
        dims_at_budget.dedup();
        if dims_at_budget.len() < 2 {
            continue;
        }
        let mut out = String::from("x,empirical,predicted\n");
        for r in rows {
            out.push_str(&format!("{},{},{}\n", r.d, r.mean_l1_error, r.predicted));
        }
        fs::write(companion_path(&stem, &format!("T{budget}")), out)?;
    }
    Ok(())
}

fn companion_path(stem: &Path, tag: &str) -> PathBuf {
    PathBuf::from(format!("{}.plot.{}.csv", stem.display(), tag))
}

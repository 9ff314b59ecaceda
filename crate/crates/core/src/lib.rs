//! Zeroth-order gradient estimation under noisy function evaluations:
//! simulation, closed-form rates, and the information-theoretic limits that
//! frame them.
//!
//! The crate answers one question from both sides: *how well can the
//! gradient of an unknown smooth function be estimated from `T` noisy
//! function evaluations?*
//!
//! * **Achievability** — [`oracles`] simulates budgeted stochastic value
//!   oracles, [`estimators`] runs the central finite-difference scheme with
//!   tuned step-size rules over the function families in [`funcspace`], and
//!   [`bounds`] evaluates its exact Gaussian-noise error in closed form.
//! * **Impossibility** — [`packing`] builds well-separated sign-pattern
//!   families, [`oracles`] includes the adversarial Bernoulli oracle that
//!   hides one pattern among them, and [`bounds`] assembles the KL/Fano
//!   machinery into an explicit minimax floor scaling as `sqrt(d/T)`.
//! * **Verification** — [`harness`] ties both sides together with seeded,
//!   thread-count-independent Monte Carlo: calibration of empirical risk
//!   against the closed forms, log-log rate fitting, the sign-pattern
//!   recovery game, and the achievable-versus-floor gap report. [`config`]
//!   and the `zograd` binary expose it all for scripted runs.
//!
//! Numerical plumbing lives in [`erf`] (vendored high-accuracy error
//! function) and [`error`] (one crate-wide error enum).

pub mod bounds;
pub mod config;
pub mod erf;
pub mod error;
pub mod estimators;
pub mod funcspace;
pub mod harness;
pub mod oracles;
pub mod packing;

pub use bounds::{
    bernoulli_kl, fano_error_floor, fdm_gaussian_exact, fdm_gaussian_minimized_constant,
    fdm_gaussian_rate_constant, fdm_upper_bound, folded_gaussian_mean,
    gaussian_fdm_error_at_h, kl_transcript_bound, lower_bound_minimax,
    lower_bound_minimax_rate, lower_bound_minimax_with_slope, RateInputs,
};
pub use config::Config;
pub use erf::erf;
pub use error::{Error, Result};
pub use estimators::{
    boundary_step, decode_alpha, fdm_estimate, optimal_step_chebyshev,
    optimal_step_gaussian, FdmConfig, GradientEstimate, PackedDecoder, StepPolicy,
};
pub use funcspace::{
    taylor_central_difference, CoordFamily, CubicFunction, CustomFunction, DomainBox,
    FunctionSpec, HyperplaneFunction, SignVector,
};
pub use harness::{
    emit_results, fit_rate, gap_report, pairwise_sum, parse_records_csv,
    recovery_transcript, records_to_csv, run_fdm_grid, run_recovery_game, trial_seed,
    CubicFamily, ExperimentGrid, ExperimentRecord, GapReport, GapRow, OutputFormat,
    RateAxis, RateFit, RecoveryGameResult, RECORD_CSV_HEADER,
};
pub use oracles::{variance_cap, CustomSampler, Oracle, OracleKind, OracleTranscript,
    TranscriptEntry};
pub use packing::{
    build_packing, hamming, min_discrepancy_psi, separation_threshold, target_size,
    PackingSet,
};

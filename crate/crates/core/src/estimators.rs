//! Finite-difference gradient estimation and packing-based decoding.
//!
//! [`fdm_estimate`] spends a query budget `T` on central differences: each
//! of the `d` coordinates gets `n = floor(T / 2d)` query pairs at
//! `x* ± h e_i`, and the averaged differences form the gradient estimate.
//! The step size `h` trades the deterministic Taylor bias `h^2 K / 6`
//! against the noise variance `sigma^2 d / (h^2 T)`; the [`StepPolicy`]
//! variants implement the closed-form optima of that trade-off plus the
//! largest domain-respecting step for curvature-free functions.
//!
//! [`PackedDecoder`] inverts the hyperplane family: given a gradient
//! estimate it returns the packing member whose gradient lies within a
//! third of the packing's minimum gradient gap, and falls back to a uniform
//! random member when no candidate is that close. At most one member can
//! ever qualify, because two qualifying members would sit within `2/3` of
//! the minimum gap of each other.

use rand::Rng;

use crate::error::{Error, Result};
use crate::funcspace::{check_dim, DomainBox, FunctionSpec, SignVector};
use crate::oracles::Oracle;
use crate::packing::{min_discrepancy_psi, PackingSet};

/// How [`fdm_estimate`] chooses its step size `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepPolicy {
    /// Use the given step verbatim.
    Fixed(f64),
    /// Bias/variance optimum for the worst-case error bound:
    /// `h = cbrt(6 sigma sqrt(d) / (k sqrt(T)))`. Requires `k > 0`.
    OptimalChebyshev,
    /// Bias/variance optimum for the exact Gaussian error:
    /// `h = d^(1/6) sigma^(1/3) (18/pi)^(1/6) / (k^(1/3) T^(1/6))`.
    /// Requires `k > 0`.
    OptimalGaussian,
    /// Largest step the domain allows from `x*` (for `k = 0`, where bias
    /// vanishes and bigger steps strictly reduce variance).
    Boundary,
}

impl std::fmt::Display for StepPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepPolicy::Fixed(h) => write!(f, "fixed:{h}"),
            StepPolicy::OptimalChebyshev => write!(f, "chebyshev"),
            StepPolicy::OptimalGaussian => write!(f, "gaussian"),
            StepPolicy::Boundary => write!(f, "boundary"),
        }
    }
}

impl std::str::FromStr for StepPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chebyshev" => Ok(StepPolicy::OptimalChebyshev),
            "gaussian" => Ok(StepPolicy::OptimalGaussian),
            "boundary" => Ok(StepPolicy::Boundary),
            _ => {
                if let Some(raw) = s.strip_prefix("fixed:") {
                    let h: f64 = raw.parse().map_err(|_| {
                        Error::invalid(format!("cannot parse step size in policy '{s}'"))
                    })?;
                    if !(h > 0.0) || !h.is_finite() {
                        return Err(Error::NonPositiveStep { h });
                    }
                    Ok(StepPolicy::Fixed(h))
                } else {
                    Err(Error::invalid(format!(
                        "unknown step policy '{s}'; expected fixed:<h>, chebyshev, gaussian, or boundary"
                    )))
                }
            }
        }
    }
}

/// Budget and step selection for one finite-difference estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdmConfig {
    /// Query budget `T`; must be at least `2d`.
    pub budget: u64,
    /// Step-size rule.
    pub step_policy: StepPolicy,
}

/// Result of a finite-difference estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    /// The estimated gradient at `x*`.
    pub grad_hat: Vec<f64>,
    /// Oracle queries consumed: exactly `2 d floor(T / 2d)`.
    pub queries_used: u64,
    /// The step size the policy resolved to.
    pub step_used: f64,
}

/// Bias/variance-optimal step for the worst-case error bound:
/// `h = cbrt(6 sigma sqrt(d) / (k sqrt(T)))`.
pub fn optimal_step_chebyshev(d: usize, budget: u64, sigma: f64, k: f64) -> Result<f64> {
    validate_step_inputs(d, budget, sigma, k)?;
    Ok((6.0 * sigma * (d as f64).sqrt() / (k * (budget as f64).sqrt())).cbrt())
}

/// Bias/variance-optimal step for the exact Gaussian error:
/// `h = d^(1/6) sigma^(1/3) (18/pi)^(1/6) / (k^(1/3) T^(1/6))`.
pub fn optimal_step_gaussian(d: usize, budget: u64, sigma: f64, k: f64) -> Result<f64> {
    validate_step_inputs(d, budget, sigma, k)?;
    let d = d as f64;
    let t = budget as f64;
    Ok(d.powf(1.0 / 6.0) * sigma.cbrt() * (18.0 / std::f64::consts::PI).powf(1.0 / 6.0)
        / (k.cbrt() * t.powf(1.0 / 6.0)))
}

fn validate_step_inputs(d: usize, budget: u64, sigma: f64, k: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if budget == 0 {
        return Err(Error::invalid("budget must be positive"));
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::invalid(format!(
            "optimal steps need a positive noise scale, got sigma = {sigma}"
        )));
    }
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::invalid(format!(
            "optimal steps need a positive curvature scale, got k = {k}; \
             use the boundary policy for curvature-free functions"
        )));
    }
    Ok(())
}

/// Largest step usable from `x*`: the distance to the nearest domain face,
/// `min_i min(radius - (x*_i - c_i), radius + (x*_i - c_i))`.
///
/// Errors if `x*` lies outside the domain, or on its boundary (where the
/// largest step is zero and finite differences are undefined).
pub fn boundary_step(x_star: &[f64], domain: &DomainBox) -> Result<f64> {
    check_dim(domain.dim(), x_star.len())?;
    if !domain.contains(x_star) {
        return Err(Error::OutsideDomain);
    }
    let gap = domain.boundary_gap(x_star);
    if gap <= 0.0 {
        return Err(Error::NonPositiveStep { h: gap });
    }
    Ok(gap)
}

/// Estimates the gradient of `f` at `x_star` by central finite differences
/// through `oracle`.
///
/// Spends `n = floor(budget / 2d)` query pairs per coordinate in
/// dimension-major order (all pairs for coordinate 0, then 1, …), each pair
/// probing `x* + h e_i` then `x* - h e_i`, and averages the scaled
/// differences. Exactly `2 d n` oracle queries are consumed; any remainder
/// of the budget is left unspent.
pub fn fdm_estimate(
    oracle: &mut Oracle,
    f: &FunctionSpec,
    x_star: &[f64],
    config: &FdmConfig,
) -> Result<GradientEstimate> {
    let d = f.dim();
    check_dim(d, x_star.len())?;
    check_dim(oracle.domain().dim(), d)?;
    let n = config.budget / (2 * d as u64);
    if n == 0 {
        return Err(Error::BudgetTooSmall { budget: config.budget, d });
    }
    let h = match config.step_policy {
        StepPolicy::Fixed(h) => {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::NonPositiveStep { h });
            }
            h
        }
        StepPolicy::OptimalChebyshev => optimal_step_chebyshev(
            d,
            config.budget,
            oracle.sigma(),
            f.third_derivative_bound(),
        )?,
        StepPolicy::OptimalGaussian => optimal_step_gaussian(
            d,
            config.budget,
            oracle.sigma(),
            f.third_derivative_bound(),
        )?,
        StepPolicy::Boundary => boundary_step(x_star, oracle.domain())?,
    };
    // Every probe moves a single coordinate of x* by h, so all 2d probe
    // points stay inside the domain iff h does not exceed the gap to the
    // nearest face.
    let domain = oracle.domain();
    if !domain.contains(x_star) || h > domain.boundary_gap(x_star) {
        return Err(Error::OutsideDomain);
    }
    let center = domain.center().to_vec();
    let radius = domain.radius();

    let mut grad_hat = vec![0.0; d];
    let scale = 1.0 / (2.0 * h * n as f64);
    let mut probe = x_star.to_vec();
    for i in 0..d {
        let plus = pull_to_face(x_star[i] + h, center[i], radius);
        let minus = pull_to_face(x_star[i] - h, center[i], radius);
        let mut acc = 0.0;
        for _ in 0..n {
            probe[i] = plus;
            let v_plus = oracle.query(f, &probe)?;
            probe[i] = minus;
            let v_minus = oracle.query(f, &probe)?;
            acc += v_plus - v_minus;
        }
        probe[i] = x_star[i];
        grad_hat[i] = acc * scale;
    }
    Ok(GradientEstimate { grad_hat, queries_used: 2 * d as u64 * n, step_used: h })
}

/// Walks a probe coordinate back inside the inclusive face test by ulps.
///
/// `x + h` can land one rounding step beyond the face even when `h` equals
/// the exact gap to it (the pre-check above guarantees the true value is
/// inside); this repairs that without touching any probe genuinely inside.
fn pull_to_face(p: f64, center: f64, radius: f64) -> f64 {
    let mut p = p;
    while (p - center).abs() > radius {
        p = if p > center { p.next_down() } else { p.next_up() };
    }
    p
}

/// Decodes gradient estimates back to packing members.
///
/// Caches the member gradients and the minimum pairwise gradient gap `psi`
/// so repeated decodes (one per Monte Carlo trial) cost one scan each.
#[derive(Clone, Debug)]
pub struct PackedDecoder {
    members: Vec<SignVector>,
    grads: Vec<Vec<f64>>,
    psi: f64,
}

impl PackedDecoder {
    /// Prepares a decoder for `set` with slope scale `delta`, decoding
    /// estimates taken at `x_star`.
    ///
    /// Fails with [`Error::ZeroDiscrepancy`] when the minimum gradient gap
    /// vanishes (`delta = 0` or duplicate members), since no threshold can
    /// separate candidates then.
    pub fn new(set: &PackingSet, delta: f64, x_star: &[f64]) -> Result<Self> {
        let psi = min_discrepancy_psi(set, delta, x_star)?;
        if psi <= 0.0 {
            return Err(Error::ZeroDiscrepancy);
        }
        let grads = set
            .vectors()
            .iter()
            .map(|alpha| {
                crate::funcspace::HyperplaneFunction::new(alpha.clone(), delta)?.grad(x_star)
            })
            .collect::<Result<_>>()?;
        Ok(PackedDecoder { members: set.vectors().to_vec(), grads, psi })
    }

    /// The cached minimum gradient gap.
    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Number of candidate members.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Whether the decoder has no members (never true once constructed).
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Returns the unique member whose gradient lies within `psi / 3` of
    /// `grad_hat` (inclusive), or a uniformly random member when none does.
    pub fn decode<R: Rng + ?Sized>(&self, grad_hat: &[f64], rng: &mut R) -> Result<SignVector> {
        check_dim(self.grads[0].len(), grad_hat.len())?;
        let threshold = self.psi / 3.0;
        for (member, grad) in self.members.iter().zip(&self.grads) {
            let dist: f64 =
                grad_hat.iter().zip(grad).map(|(a, b)| (a - b).abs()).sum();
            if dist <= threshold {
                // Two members this close would be within 2 psi / 3 of each
                // other, below the minimum gap — impossible, so first hit
                // is the only hit.
                return Ok(member.clone());
            }
        }
        Ok(self.members[rng.gen_range(0..self.members.len())].clone())
    }
}

/// One-shot decode: builds a [`PackedDecoder`] and applies it to `grad_hat`.
pub fn decode_alpha<R: Rng + ?Sized>(
    grad_hat: &[f64],
    set: &PackingSet,
    delta: f64,
    x_star: &[f64],
    rng: &mut R,
) -> Result<SignVector> {
    PackedDecoder::new(set, delta, x_star)?.decode(grad_hat, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{CubicFunction, HyperplaneFunction};
    use crate::packing::build_packing;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn signs(v: &[i8]) -> SignVector {
        SignVector::new(v.to_vec()).unwrap()
    }

    fn noiseless_oracle(d: usize, radius: f64, budget: u64) -> Oracle {
        Oracle::gaussian(0.0, DomainBox::centered(d, radius).unwrap(), budget, rng(1)).unwrap()
    }

    #[test]
    fn step_policy_string_round_trip() {
        for text in ["fixed:0.5", "chebyshev", "gaussian", "boundary"] {
            let policy: StepPolicy = text.parse().unwrap();
            assert_eq!(policy.to_string(), text);
        }
        assert_eq!("fixed:0.5".parse::<StepPolicy>().unwrap(), StepPolicy::Fixed(0.5));
        assert!("fixed:0".parse::<StepPolicy>().is_err());
        assert!("fixed:-1".parse::<StepPolicy>().is_err());
        assert!("fixed:abc".parse::<StepPolicy>().is_err());
        assert!("newton".parse::<StepPolicy>().is_err());
    }

    #[test]
    fn noiseless_quadratic_gradient_is_exact() {
        let f = FunctionSpec::from(
            CubicFunction::new(0.0, vec![0.25, 0.5], vec![1.5, -2.0]).unwrap(),
        );
        let mut oracle = noiseless_oracle(2, 4.0, 8);
        let config = FdmConfig { budget: 8, step_policy: StepPolicy::Fixed(0.5) };
        let est = fdm_estimate(&mut oracle, &f, &[0.0, 0.0], &config).unwrap();
        assert_eq!(est.grad_hat, vec![1.5, -2.0]);
        assert_eq!(est.queries_used, 8);
        assert_eq!(est.step_used, 0.5);
    }

    #[test]
    fn noiseless_cubic_shows_exact_taylor_bias() {
        // k = 6, h = 1, x* = 0: every component picks up bias h^2 k / 6 = 1.
        let f = FunctionSpec::from(
            CubicFunction::new(6.0, vec![0.0, 0.0], vec![0.5, -1.0]).unwrap(),
        );
        let mut oracle = noiseless_oracle(2, 2.0, 4);
        let config = FdmConfig { budget: 4, step_policy: StepPolicy::Fixed(1.0) };
        let est = fdm_estimate(&mut oracle, &f, &[0.0, 0.0], &config).unwrap();
        assert_eq!(est.grad_hat, vec![1.5, 0.0]);
    }

    #[test]
    fn query_accounting_uses_exactly_2dn() {
        let f = FunctionSpec::from(CubicFunction::uniform(4, 0.0, 0.0, 1.0).unwrap());
        let mut oracle = noiseless_oracle(4, 2.0, 1000);
        // T = 100, d = 4: n = 12 pairs per coordinate, 96 queries spent.
        let config = FdmConfig { budget: 100, step_policy: StepPolicy::Fixed(0.5) };
        let est = fdm_estimate(&mut oracle, &f, &[0.0; 4], &config).unwrap();
        assert_eq!(est.queries_used, 96);
        assert_eq!(oracle.used(), 96);
    }

    #[test]
    fn budget_below_one_pair_per_coordinate_errors() {
        let f = FunctionSpec::from(CubicFunction::uniform(4, 0.0, 0.0, 1.0).unwrap());
        let mut oracle = noiseless_oracle(4, 2.0, 1000);
        let config = FdmConfig { budget: 7, step_policy: StepPolicy::Fixed(0.5) };
        assert!(matches!(
            fdm_estimate(&mut oracle, &f, &[0.0; 4], &config),
            Err(Error::BudgetTooSmall { budget: 7, d: 4 })
        ));
        assert_eq!(oracle.used(), 0);
    }

    #[test]
    fn chebyshev_step_examples() {
        assert_eq!(optimal_step_chebyshev(1, 36, 1.0, 1.0).unwrap(), 1.0);
        let h = optimal_step_chebyshev(4, 144, 1.0, 6.0).unwrap();
        assert!((h - (1.0f64 / 6.0).cbrt()).abs() < 1e-15);
        assert!((h - 0.550321208149104447).abs() < 1e-12);
        // h scales as T^(-1/6): multiplying T by 8 divides h by sqrt(2).
        let h8 = optimal_step_chebyshev(4, 8 * 144, 1.0, 6.0).unwrap();
        assert!((h / h8 - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_step_examples() {
        let h = optimal_step_gaussian(1, 1, 1.0, 1.0).unwrap();
        assert!((h - (18.0 / std::f64::consts::PI).powf(1.0 / 6.0)).abs() < 1e-15);
        assert!((h - 1.33768473785092542).abs() < 1e-12);
        let h_base = optimal_step_gaussian(4, 512, 1.0, 6.0).unwrap();
        assert!((h_base - 0.327920343572204213).abs() < 1e-12);
        // Doubling sigma multiplies h by 2^(1/3).
        let h_double = optimal_step_gaussian(4, 512, 2.0, 6.0).unwrap();
        assert!((h_double / h_base - 2.0f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn optimal_steps_reject_curvature_free_functions() {
        assert!(optimal_step_chebyshev(4, 100, 1.0, 0.0).is_err());
        assert!(optimal_step_gaussian(4, 100, 1.0, 0.0).is_err());
        assert!(optimal_step_chebyshev(4, 100, 1.0, -1.0).is_err());
        assert!(optimal_step_chebyshev(4, 100, 0.0, 1.0).is_err());
    }

    #[test]
    fn boundary_step_examples() {
        let sym = DomainBox::centered(3, 2.0).unwrap();
        assert_eq!(boundary_step(&[0.0; 3], &sym).unwrap(), 2.0);
        let square = DomainBox::centered(2, 1.0).unwrap();
        assert_eq!(boundary_step(&[0.5, 0.0], &square).unwrap(), 0.5);
        let line = DomainBox::centered(1, 1.0).unwrap();
        assert!(matches!(
            boundary_step(&[1.0], &line),
            Err(Error::NonPositiveStep { .. })
        ));
        assert!(matches!(boundary_step(&[1.5], &line), Err(Error::OutsideDomain)));
    }

    #[test]
    fn boundary_policy_probes_the_faces() {
        // x* = 0 in [-1, 1]^2: boundary step is 1 and probes sit exactly on
        // the faces, which the inclusive domain test must admit.
        let f = FunctionSpec::from(
            CubicFunction::new(0.0, vec![0.0, 0.0], vec![2.0, -0.5]).unwrap(),
        );
        let mut oracle = noiseless_oracle(2, 1.0, 100);
        let config = FdmConfig { budget: 8, step_policy: StepPolicy::Boundary };
        let est = fdm_estimate(&mut oracle, &f, &[0.0, 0.0], &config).unwrap();
        assert_eq!(est.step_used, 1.0);
        assert_eq!(est.grad_hat, vec![2.0, -0.5]);
    }

    #[test]
    fn off_center_start_limits_the_probe_step() {
        let f = FunctionSpec::from(CubicFunction::uniform(2, 0.0, 0.0, 1.0).unwrap());
        let mut oracle = noiseless_oracle(2, 1.0, 100);
        // h = 0.75 from x* = (0.5, 0) would cross the +x face.
        let config = FdmConfig { budget: 8, step_policy: StepPolicy::Fixed(0.75) };
        assert!(matches!(
            fdm_estimate(&mut oracle, &f, &[0.5, 0.0], &config),
            Err(Error::OutsideDomain)
        ));
        // The boundary policy adapts to 0.5 instead.
        let config = FdmConfig { budget: 8, step_policy: StepPolicy::Boundary };
        let est = fdm_estimate(&mut oracle, &f, &[0.5, 0.0], &config).unwrap();
        assert_eq!(est.step_used, 0.5);
        assert_eq!(est.grad_hat, vec![1.0, 1.0]);
    }

    #[test]
    fn noisy_estimate_concentrates_near_gradient() {
        // sigma = 1, d = 2, T = 20_000, h = 1: per-coordinate standard
        // deviation is sqrt(sigma^2 d / (h^2 T)) = 0.01.
        let f = FunctionSpec::from(CubicFunction::uniform(2, 0.0, 0.0, 3.0).unwrap());
        let domain = DomainBox::centered(2, 2.0).unwrap();
        let mut oracle = Oracle::gaussian(1.0, domain, 20_000, rng(11)).unwrap();
        let config = FdmConfig { budget: 20_000, step_policy: StepPolicy::Fixed(1.0) };
        let est = fdm_estimate(&mut oracle, &f, &[0.0, 0.0], &config).unwrap();
        for g in est.grad_hat {
            assert!((g - 3.0).abs() < 0.06, "component {g} strays from 3.0");
        }
    }

    #[test]
    fn decode_returns_exact_member() {
        let set = build_packing(8, 5).unwrap();
        let delta = 0.25;
        let x_star = vec![0.0; 8];
        let decoder = PackedDecoder::new(&set, delta, &x_star).unwrap();
        let mut r = rng(12);
        for alpha in set.vectors() {
            let grad =
                HyperplaneFunction::new(alpha.clone(), delta).unwrap().grad(&x_star).unwrap();
            assert_eq!(&decoder.decode(&grad, &mut r).unwrap(), alpha);
        }
    }

    #[test]
    fn decode_accepts_distance_exactly_one_third_psi() {
        // With delta = 1/4 and the antipodal pair in d = 4, psi = 1/2 and
        // all the arithmetic below is exact in binary floating point, so
        // the decoded distance equals psi/3 to the last bit.
        let set =
            PackingSet::new(4, vec![signs(&[1, 1, 1, 1]), signs(&[-1, -1, -1, -1])]).unwrap();
        let x_star = vec![0.0; 4];
        let decoder = PackedDecoder::new(&set, 0.25, &x_star).unwrap();
        assert_eq!(decoder.psi(), 0.5);
        let threshold = decoder.psi() / 3.0;
        let mut grad = HyperplaneFunction::new(signs(&[1, 1, 1, 1]), 0.25)
            .unwrap()
            .grad(&x_star)
            .unwrap();
        grad[0] += threshold;
        // The perturbation is exactly representable, so the L1 distance is
        // exactly the threshold and the inclusive rule must accept.
        assert_eq!(grad[0] - 0.0625, threshold);
        let mut r = rng(13);
        assert_eq!(decoder.decode(&grad, &mut r).unwrap(), signs(&[1, 1, 1, 1]));
    }

    #[test]
    fn decode_far_estimates_fall_back_to_uniform() {
        let set =
            PackingSet::new(4, vec![signs(&[1, 1, 1, 1]), signs(&[-1, -1, -1, -1])]).unwrap();
        let decoder = PackedDecoder::new(&set, 0.25, &[0.0; 4]).unwrap();
        let far = vec![10.0; 4];
        let mut r = rng(14);
        let n = 10_000;
        let mut first = 0u32;
        for _ in 0..n {
            if decoder.decode(&far, &mut r).unwrap() == set[0] {
                first += 1;
            }
        }
        // Binomial(10^4, 1/2): five sigma is 250.
        let sigma = (n as f64 * 0.25).sqrt();
        assert!(
            (f64::from(first) - 5000.0).abs() <= 5.0 * sigma,
            "uniform fallback skewed: {first}/{n}"
        );
    }

    #[test]
    fn decoder_rejects_zero_gap() {
        let set =
            PackingSet::new(4, vec![signs(&[1, 1, 1, 1]), signs(&[-1, -1, -1, -1])]).unwrap();
        assert!(matches!(
            PackedDecoder::new(&set, 0.0, &[0.0; 4]),
            Err(Error::ZeroDiscrepancy)
        ));
    }

    #[test]
    fn one_shot_decode_matches_decoder() {
        let set = build_packing(4, 20).unwrap();
        let x_star = vec![0.0; 4];
        let grad = HyperplaneFunction::new(set[0].clone(), 0.2)
            .unwrap()
            .grad(&x_star)
            .unwrap();
        let mut r = rng(15);
        assert_eq!(decode_alpha(&grad, &set, 0.2, &x_star, &mut r).unwrap(), set[0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn at_most_one_member_within_threshold(
            seed in 0u64..10_000,
            scale in 0.0f64..0.3,
        ) {
            let set = build_packing(8, 17).unwrap();
            let delta = 0.25;
            let x_star = vec![0.0; 8];
            let decoder = PackedDecoder::new(&set, delta, &x_star).unwrap();
            let threshold = decoder.psi() / 3.0;
            let mut r = rng(seed);
            // Random probe near a random member.
            let base = &set[r.gen_range(0..set.len())];
            let grad = HyperplaneFunction::new(base.clone(), delta)
                .unwrap().grad(&x_star).unwrap();
            let probe: Vec<f64> = grad
                .iter()
                .map(|g| g + scale * delta * (r.gen::<f64>() * 2.0 - 1.0))
                .collect();
            let mut hits = 0;
            for alpha in set.vectors() {
                let g = HyperplaneFunction::new(alpha.clone(), delta)
                    .unwrap().grad(&x_star).unwrap();
                let dist: f64 = probe.iter().zip(&g).map(|(a, b)| (a - b).abs()).sum();
                if dist <= threshold {
                    hits += 1;
                }
            }
            prop_assert!(hits <= 1, "found {hits} members within psi/3");
        }

        #[test]
        fn estimator_variance_shrinks_with_budget(
            seed in 0u64..1000,
        ) {
            // Doubling T at fixed h roughly halves the squared error of a
            // noiseless-mean estimate; check the weaker monotonic claim on
            // averaged absolute error to keep the test cheap and stable.
            let f = FunctionSpec::from(CubicFunction::uniform(1, 0.0, 0.0, 0.0).unwrap());
            let domain = DomainBox::centered(1, 1.0).unwrap();
            let mut small_err = 0.0;
            let mut big_err = 0.0;
            for t in 0..8u64 {
                let mut o1 = Oracle::gaussian(
                    1.0, domain.clone(), 64, rng(seed * 16 + t)).unwrap();
                let e1 = fdm_estimate(&mut o1, &f, &[0.0],
                    &FdmConfig { budget: 64, step_policy: StepPolicy::Fixed(1.0) }).unwrap();
                small_err += e1.grad_hat[0].abs();
                let mut o2 = Oracle::gaussian(
                    1.0, domain.clone(), 4096, rng(seed * 16 + t + 8)).unwrap();
                let e2 = fdm_estimate(&mut o2, &f, &[0.0],
                    &FdmConfig { budget: 4096, step_policy: StepPolicy::Fixed(1.0) }).unwrap();
                big_err += e2.grad_hat[0].abs();
            }
            // 64x the budget shrinks the error 8x in expectation; allow slack.
            prop_assert!(big_err < small_err, "error did not shrink: {big_err} vs {small_err}");
        }
    }
}

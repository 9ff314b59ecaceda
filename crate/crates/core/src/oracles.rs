//! Budgeted stochastic zero-order oracles.
//!
//! An [`Oracle`] answers point queries about a function with noisy,
//! unbiased values: the caller supplies `x`, the oracle returns a sample
//! whose mean is `f(x)` and whose variance is at most `sigma^2`. Queries are
//! strictly budgeted — after `budget` successful answers further queries
//! fail with a catchable error, never a silent clamp — and all randomness
//! flows from an externally seeded generator so runs are reproducible.
//!
//! Two concrete noise models are provided:
//!
//! * **Gaussian** — returns `f(x) + sigma * Z` with `Z` standard normal.
//! * **Adversarial Bernoulli** — the information-theoretic worst case for
//!   sign-pattern recovery: the oracle picks a coordinate `i` uniformly at
//!   random, flips a coin with success probability `1/2 + alpha_i * delta`,
//!   and returns `±x_i/2`. The mean is exactly the hyperplane value
//!   `g_alpha(x)`, yet each answer leaks at most a whisker of information
//!   about one coordinate of `alpha`. Construction is refused unless the
//!   query domain is small enough (`sup_i |x_i| <= 2 sigma`) to keep the
//!   variance within `sigma^2`.
//!
//! A `custom` kind accepts an arbitrary sampling closure as an extension
//! point.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::funcspace::{check_dim, DomainBox, FunctionSpec, SignVector};

/// Sampling closure type for [`Oracle::custom`].
pub type CustomSampler = Arc<dyn Fn(&FunctionSpec, &[f64], &mut ChaCha8Rng) -> f64 + Send + Sync>;

enum Noise {
    Gaussian,
    Adversarial { alpha: SignVector, delta: f64 },
    Custom(CustomSampler),
}

/// Which noise model an oracle uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    /// `f(x) + sigma * Z`, `Z` standard normal.
    Gaussian,
    /// Coordinate-and-coin payload `±x_i/2` with mean `g_alpha(x)`.
    AdversarialBernoulli,
    /// User-supplied sampler.
    Custom,
}

/// One recorded oracle answer.
#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptEntry {
    /// 1-based query index.
    pub t: u64,
    /// The queried point.
    pub x: Vec<f64>,
    /// The value returned.
    pub value: f64,
    /// Adversarial kind only: the coordinate drawn (0-based).
    pub coord: Option<usize>,
    /// Adversarial kind only: the coin outcome.
    pub bit: Option<bool>,
}

/// Append-only record of every answered query, in query order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleTranscript {
    entries: Vec<TranscriptEntry>,
}

impl OracleTranscript {
    /// Number of recorded queries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Whether nothing has been recorded yet.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The recorded entries in query order.
    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    /// Writes the transcript as CSV with columns `t,i,b,value`.
    ///
    /// `i` is the 0-based coordinate index and `b` the coin outcome (0/1);
    /// both are empty for noise models that do not produce them.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,i,b,value")?;
        for e in &self.entries {
            let i = e.coord.map(|c| c.to_string()).unwrap_or_default();
            let b = e.bit.map(|b| if b { "1" } else { "0" }.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", e.t, i, b, e.value)?;
        }
        Ok(())
    }
}

/// A budgeted stochastic zero-order oracle.
pub struct Oracle {
    noise: Noise,
    sigma: f64,
    domain: DomainBox,
    budget: u64,
    used: u64,
    rng: ChaCha8Rng,
    transcript: Option<OracleTranscript>,
}

impl fmt::Debug for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Oracle")
            .field("kind", &self.kind())
            .field("sigma", &self.sigma)
            .field("budget", &self.budget)
            .field("used", &self.used)
            .finish_non_exhaustive()
    }
}

impl Oracle {
    /// Gaussian-noise oracle: answers `f(x) + sigma * Z`.
    ///
    /// `sigma = 0` yields a deterministic oracle returning `f(x)` exactly.
    pub fn gaussian(sigma: f64, domain: DomainBox, budget: u64, rng: ChaCha8Rng) -> Result<Self> {
        validate_common(sigma, budget)?;
        Ok(Oracle {
            noise: Noise::Gaussian,
            sigma,
            domain,
            budget,
            used: 0,
            rng,
            transcript: None,
        })
    }

    /// Adversarial Bernoulli oracle for the sign pattern `alpha`.
    ///
    /// Each answer draws a coordinate `i` uniformly, then a coin `b` with
    /// success probability `1/2 + alpha_i * delta`, and returns `x_i/2` on
    /// success and `-x_i/2` otherwise — so the mean over both draws is the
    /// hyperplane value `g_alpha(x)`. Requires `delta` in `(0, 1/4]` and a
    /// domain small enough that the variance stays within `sigma^2`; see
    /// [`variance_cap`].
    pub fn adversarial(
        alpha: SignVector,
        delta: f64,
        sigma: f64,
        domain: DomainBox,
        budget: u64,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        validate_common(sigma, budget)?;
        check_dim(domain.dim(), alpha.dim())?;
        if !delta.is_finite() || !(delta > 0.0 && delta <= 0.25) {
            return Err(Error::invalid(format!(
                "adversarial bias delta must lie in (0, 0.25], got {delta}"
            )));
        }
        variance_cap(&domain, sigma)?;
        Ok(Oracle {
            noise: Noise::Adversarial { alpha, delta },
            sigma,
            domain,
            budget,
            used: 0,
            rng,
            transcript: None,
        })
    }

    /// Oracle with a user-supplied sampling closure.
    ///
    /// The caller is responsible for the closure being unbiased with
    /// variance at most `sigma^2`; nothing here checks it.
    pub fn custom(
        sampler: impl Fn(&FunctionSpec, &[f64], &mut ChaCha8Rng) -> f64 + Send + Sync + 'static,
        sigma: f64,
        domain: DomainBox,
        budget: u64,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        validate_common(sigma, budget)?;
        Ok(Oracle {
            noise: Noise::Custom(Arc::new(sampler)),
            sigma,
            domain,
            budget,
            used: 0,
            rng,
            transcript: None,
        })
    }

    /// The noise model in use.
    pub fn kind(&self) -> OracleKind {
        match self.noise {
            Noise::Gaussian => OracleKind::Gaussian,
            Noise::Adversarial { .. } => OracleKind::AdversarialBernoulli,
            Noise::Custom(_) => OracleKind::Custom,
        }
    }

    /// Noise scale `sigma`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Total query budget `T`.
    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Queries answered so far.
    pub fn used(&self) -> u64 {
        self.used
    }

    /// Queries still available.
    pub fn remaining(&self) -> u64 {
        self.budget - self.used
    }

    /// The query domain.
    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    /// Starts recording every subsequent answer into a transcript.
    pub fn record_transcript(&mut self) {
        if self.transcript.is_none() {
            self.transcript = Some(OracleTranscript::default());
        }
    }

    /// The transcript recorded so far, if recording was enabled.
    pub fn transcript(&self) -> Option<&OracleTranscript> {
        self.transcript.as_ref()
    }

    /// Stops recording and hands back the transcript.
    pub fn take_transcript(&mut self) -> Option<OracleTranscript> {
        self.transcript.take()
    }

    /// Answers one query at `x` about `f`.
    ///
    /// Fails — without consuming budget — if the budget is already
    /// exhausted, if dimensions disagree, or if `x` lies outside the domain.
    /// Each successful answer consumes exactly one unit of budget.
    pub fn query(&mut self, f: &FunctionSpec, x: &[f64]) -> Result<f64> {
        if self.used >= self.budget {
            return Err(Error::BudgetExhausted { budget: self.budget });
        }
        check_dim(self.domain.dim(), f.dim())?;
        check_dim(f.dim(), x.len())?;
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain);
        }
        let (value, coord, bit) = match &self.noise {
            Noise::Gaussian => {
                let z: f64 = self.rng.sample(StandardNormal);
                (f.eval(x)? + self.sigma * z, None, None)
            }
            Noise::Adversarial { alpha, delta } => {
                let d = alpha.dim();
                let i = self.rng.gen_range(0..d);
                let p = 0.5 + f64::from(alpha[i]) * delta;
                let b = self.rng.gen::<f64>() < p;
                let payload = x[i] / 2.0;
                (if b { payload } else { -payload }, Some(i), Some(b))
            }
            Noise::Custom(sampler) => (sampler(f, x, &mut self.rng), None, None),
        };
        self.used += 1;
        if let Some(t) = &mut self.transcript {
            t.entries.push(TranscriptEntry {
                t: self.used,
                x: x.to_vec(),
                value,
                coord,
                bit,
            });
        }
        Ok(value)
    }
}

fn validate_common(sigma: f64, budget: u64) -> Result<()> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::invalid(format!(
            "noise scale sigma must be finite and nonnegative, got {sigma}"
        )));
    }
    if budget == 0 {
        return Err(Error::invalid("oracle budget must be at least 1"));
    }
    Ok(())
}

/// Per-coordinate payload caps `sup_x |x_i| = radius + |center_i|` for the
/// adversarial oracle over `domain`.
///
/// The adversarial answer is `±x_i/2`, so its variance at any admissible `x`
/// is at most `(max_i cap_i)^2 / 4`. The construction is accepted only when
/// `max_i cap_i <= 2 sigma`, which keeps that variance within `sigma^2`;
/// otherwise this returns [`Error::VarianceCapExceeded`].
pub fn variance_cap(domain: &DomainBox, sigma: f64) -> Result<Vec<f64>> {
    let caps: Vec<f64> =
        domain.center().iter().map(|c| domain.radius() + c.abs()).collect();
    let worst = caps.iter().cloned().fold(0.0, f64::max);
    let limit = 2.0 * sigma;
    if worst > limit {
        return Err(Error::VarianceCapExceeded { cap: worst, limit });
    }
    Ok(caps)
}

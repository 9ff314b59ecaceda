//! Well-separated sign-vector packings.
//!
//! A packing is a subset of `{-1, +1}^d` whose members are pairwise far
//! apart in Hamming distance. Spreading the hyperplane family's sign
//! patterns out like this forces any two candidate gradients to differ by a
//! fixed L1 margin, which is what makes recovering the pattern from a noisy
//! gradient estimate a well-posed test problem.
//!
//! [`build_packing`] draws candidates uniformly at random and keeps those at
//! Hamming distance at least `ceil(d/4)` from everything kept so far, until
//! [`target_size`] vectors survive. A counting argument guarantees a packing
//! of size `(2/sqrt(e))^(d/2)` exists at that separation, and random draws
//! find one quickly; the builder gives up with an error after `1000 *
//! target` draws rather than looping forever.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::funcspace::{check_dim, HyperplaneFunction, SignVector};

/// A set of pairwise well-separated sign vectors in `{-1, +1}^d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackingSet {
    d: usize,
    vectors: Vec<SignVector>,
}

impl PackingSet {
    /// Wraps an explicit list of sign vectors.
    ///
    /// Requires at least two vectors (a packing is about pairwise
    /// separation) all of dimension `d`. No minimum-distance requirement is
    /// imposed here; use [`build_packing`] to construct separated sets.
    pub fn new(d: usize, vectors: Vec<SignVector>) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(Error::PackingTooSmall);
        }
        for v in &vectors {
            check_dim(d, v.dim())?;
        }
        Ok(PackingSet { d, vectors })
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of vectors in the packing.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    /// Whether the packing is empty (never true for a validated set).
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The packed sign vectors.
    pub fn vectors(&self) -> &[SignVector] {
        &self.vectors
    }

    /// Smallest Hamming distance over all pairs.
    pub fn min_pairwise_distance(&self) -> usize {
        let mut best = usize::MAX;
        for (i, a) in self.vectors.iter().enumerate() {
            for b in &self.vectors[i + 1..] {
                best = best.min(hamming_unchecked(a, b));
            }
        }
        best
    }
}

impl std::ops::Index<usize> for PackingSet {
    type Output = SignVector;

    fn index(&self, i: usize) -> &SignVector {
        &self.vectors[i]
    }
}

/// Hamming distance between two sign vectors of equal dimension.
pub fn hamming(a: &SignVector, b: &SignVector) -> Result<usize> {
    check_dim(a.dim(), b.dim())?;
    Ok(hamming_unchecked(a, b))
}

fn hamming_unchecked(a: &SignVector, b: &SignVector) -> usize {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .filter(|(x, y)| x != y)
        .count()
}

/// Number of vectors a dimension-`d` packing must contain:
/// `ceil((2/sqrt(e))^(d/2))`.
pub fn target_size(d: usize) -> usize {
    assert!(d > 0, "packing dimension must be positive");
    // (2/sqrt(e))^(d/2) = exp((d/2) * (ln 2 - 1/2))
    let log = (d as f64 / 2.0) * (std::f64::consts::LN_2 - 0.5);
    log.exp().ceil() as usize
}

/// Minimum pairwise Hamming distance a packing must maintain: `ceil(d/4)`.
pub fn separation_threshold(d: usize) -> usize {
    (d + 3) / 4
}

/// Builds a packing of [`target_size`]`(d)` sign vectors with pairwise
/// Hamming distance at least `ceil(d/4)`, deterministically from `seed`.
///
/// Candidates are drawn uniformly from `{-1, +1}^d` and kept greedily. If
/// `1000 * target` draws do not yield enough survivors the attempt is
/// abandoned with [`Error::PackingExhausted`]; rerunning with another seed
/// is then the caller's choice.
pub fn build_packing(d: usize, seed: u64) -> Result<PackingSet> {
    if d == 0 {
        return Err(Error::invalid("packing dimension must be positive"));
    }
    let target = target_size(d);
    let threshold = separation_threshold(d);
    let budget = 1000 * target as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept: Vec<SignVector> = Vec::with_capacity(target);
    let mut draws: u64 = 0;
    while kept.len() < target && draws < budget {
        let candidate = SignVector::random(d, &mut rng);
        draws += 1;
        if kept.iter().all(|v| hamming_unchecked(v, &candidate) >= threshold) {
            kept.push(candidate);
        }
    }
    if kept.len() < target {
        return Err(Error::PackingExhausted { d, target, kept: kept.len(), draws });
    }
    PackingSet::new(d, kept)
}

/// Smallest L1 gap between gradients of hyperplane functions indexed by the
/// packing: `psi = min over pairs of ||grad g_a - grad g_b||_1`.
///
/// Gradients are evaluated at `x_star`. For the identity coordinate map the
/// gap equals `(2 delta / d) * min_pairwise_distance`, so a packing at
/// separation `ceil(d/4)` yields `psi >= delta/2`.
pub fn min_discrepancy_psi(set: &PackingSet, delta: f64, x_star: &[f64]) -> Result<f64> {
    if set.len() < 2 {
        return Err(Error::PackingTooSmall);
    }
    check_dim(set.dim(), x_star.len())?;
    let grads: Vec<Vec<f64>> = set
        .vectors()
        .iter()
        .map(|alpha| HyperplaneFunction::new(alpha.clone(), delta)?.grad(x_star))
        .collect::<Result<_>>()?;
    let mut best = f64::INFINITY;
    for (i, a) in grads.iter().enumerate() {
        for b in &grads[i + 1..] {
            let l1: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
            best = best.min(l1);
        }
    }
    Ok(best)
}

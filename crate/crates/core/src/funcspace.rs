//! Function families the estimators and oracles operate on.
//!
//! Two concrete families cover the regimes of interest, plus an escape hatch:
//!
//! * [`HyperplaneFunction`] — near-linear functions `g(x) = (delta/d) * sum_i
//!   alpha_i * h(x_i)` indexed by a sign vector `alpha`. With the identity
//!   coordinate map their third derivative vanishes, so finite differences
//!   are unbiased and the only obstruction to recovering `alpha` is oracle
//!   noise.
//! * [`CubicFunction`] — separable cubics `f(x) = sum_i (k x_i^3/6 +
//!   c_i x_i^2/2 + c'_i x_i)` whose third derivative is exactly `k` in every
//!   coordinate, making the bias/variance trade-off of a finite-difference
//!   step analytically exact.
//! * [`CustomFunction`] — arbitrary closures with a caller-supplied
//!   third-derivative bound.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};

/// Coordinate map applied to each component inside a [`HyperplaneFunction`].
///
/// Only the identity map is currently provided; the enum exists so the
/// hyperplane family is explicit about which map it was built with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CoordFamily {
    /// `h(t) = t`, with `h'(t) = 1`.
    #[default]
    Identity,
}

impl CoordFamily {
    /// Applies the coordinate map to a scalar.
    pub fn apply(self, t: f64) -> f64 {
        match self {
            CoordFamily::Identity => t,
        }
    }

    /// Derivative of the coordinate map at `t`.
    pub fn derivative(self, _t: f64) -> f64 {
        match self {
            CoordFamily::Identity => 1.0,
        }
    }
}

/// A vector in `{-1, +1}^d`, the index set of the hyperplane family.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    /// Wraps a raw vector, rejecting entries other than `-1`/`+1` and the
    /// empty vector.
    pub fn new(components: Vec<i8>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("sign vector must have at least one component"));
        }
        if let Some(bad) = components.iter().find(|&&c| c != 1 && c != -1) {
            return Err(Error::invalid(format!(
                "sign vector components must be +1 or -1, got {bad}"
            )));
        }
        Ok(SignVector(components))
    }

    /// Draws a uniformly random sign vector of dimension `d`.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        assert!(d > 0, "sign vector dimension must be positive");
        SignVector((0..d).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
    }

    /// Dimension `d`.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// The components as a slice of `+1`/`-1` values.
    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    /// Iterates over the components as `f64` values.
    pub fn iter_f64(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|&c| f64::from(c))
    }
}

impl std::ops::Index<usize> for SignVector {
    type Output = i8;

    fn index(&self, i: usize) -> &i8 {
        &self.0[i]
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", if *c > 0 { "+1" } else { "-1" })?;
        }
        write!(f, ")")
    }
}

/// Axis-aligned box `{x : |x_i - center_i| <= radius}` that oracle queries
/// must stay inside.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainBox {
    center: Vec<f64>,
    radius: f64,
}

impl DomainBox {
    /// A box of the given per-coordinate half-width around `center`.
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::invalid("domain center must have at least one coordinate"));
        }
        if !center.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("domain center must be finite"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!(
                "domain radius must be positive and finite, got {radius}"
            )));
        }
        Ok(DomainBox { center, radius })
    }

    /// The box `[-radius, radius]^d`.
    pub fn centered(d: usize, radius: f64) -> Result<Self> {
        DomainBox::new(vec![0.0; d.max(1)], radius).and_then(|b| {
            if d == 0 {
                Err(Error::invalid("domain dimension must be positive"))
            } else {
                Ok(b)
            }
        })
    }

    /// Dimension of the box.
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Per-coordinate half-width.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Center point.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Whether `x` lies in the box, boundary included.
    ///
    /// # Panics
    ///
    /// Panics if `x` has the wrong dimension; callers validate dimensions
    /// before performing domain checks.
    pub fn contains(&self, x: &[f64]) -> bool {
        assert_eq!(x.len(), self.dim(), "domain check on mismatched dimension");
        x.iter()
            .zip(&self.center)
            .all(|(xi, ci)| (xi - ci).abs() <= self.radius)
    }

    /// Distance from `x` to the nearest face: `min_i (radius - |x_i - c_i|)`.
    ///
    /// Positive strictly inside, zero on the boundary, negative outside.
    ///
    /// # Panics
    ///
    /// Panics if `x` has the wrong dimension.
    pub fn boundary_gap(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "boundary gap on mismatched dimension");
        x.iter()
            .zip(&self.center)
            .map(|(xi, ci)| self.radius - (xi - ci).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Member of the sign-indexed near-linear family
/// `g(x) = (delta/d) * sum_i alpha_i * h(x_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperplaneFunction {
    alpha: SignVector,
    delta: f64,
    family: CoordFamily,
}

impl HyperplaneFunction {
    /// Builds the function for a sign pattern and slope scale `delta`,
    /// which must lie in `[0, 1/4]`.
    pub fn new(alpha: SignVector, delta: f64) -> Result<Self> {
        if !delta.is_finite() || !(0.0..=0.25).contains(&delta) {
            return Err(Error::invalid(format!(
                "hyperplane slope scale must lie in [0, 0.25], got {delta}"
            )));
        }
        Ok(HyperplaneFunction { alpha, delta, family: CoordFamily::Identity })
    }

    /// Dimension `d`.
    pub fn dim(&self) -> usize {
        self.alpha.dim()
    }

    /// The sign pattern indexing this member.
    pub fn alpha(&self) -> &SignVector {
        &self.alpha
    }

    /// Slope scale `delta`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Evaluates `g(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let scale = self.delta / self.dim() as f64;
        Ok(scale
            * x.iter()
                .zip(self.alpha.iter_f64())
                .map(|(&xi, ai)| ai * self.family.apply(xi))
                .sum::<f64>())
    }

    /// Gradient of `g` at `x`: `(delta/d) * alpha` under the identity map.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let scale = self.delta / self.dim() as f64;
        Ok(x.iter()
            .zip(self.alpha.iter_f64())
            .map(|(&xi, ai)| scale * ai * self.family.derivative(xi))
            .collect())
    }
}

/// Separable cubic `f(x) = sum_i (k x_i^3/6 + c_i x_i^2/2 + c'_i x_i)`.
///
/// The third derivative in every coordinate is exactly `k`, so the
/// central-difference bias at step `h` is exactly `h^2 k / 6`.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicFunction {
    k: f64,
    quad: Vec<f64>,
    lin: Vec<f64>,
}

impl CubicFunction {
    /// Builds the cubic from its curvature scale `k >= 0` and per-coordinate
    /// quadratic (`c`) and linear (`c'`) coefficients, which must have equal
    /// nonzero length.
    pub fn new(k: f64, quad: Vec<f64>, lin: Vec<f64>) -> Result<Self> {
        if !k.is_finite() || k < 0.0 {
            return Err(Error::invalid(format!(
                "cubic coefficient k must be finite and nonnegative, got {k}"
            )));
        }
        if quad.is_empty() {
            return Err(Error::invalid("cubic needs at least one coordinate"));
        }
        if quad.len() != lin.len() {
            return Err(Error::DimensionMismatch { expected: quad.len(), got: lin.len() });
        }
        if !quad.iter().chain(lin.iter()).all(|c| c.is_finite()) {
            return Err(Error::invalid("cubic coefficients must be finite"));
        }
        Ok(CubicFunction { k, quad, lin })
    }

    /// Convenience constructor broadcasting scalar coefficients to every
    /// coordinate.
    pub fn uniform(d: usize, k: f64, quad: f64, lin: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("cubic dimension must be positive"));
        }
        CubicFunction::new(k, vec![quad; d], vec![lin; d])
    }

    /// Dimension `d`.
    pub fn dim(&self) -> usize {
        self.quad.len()
    }

    /// Curvature scale `k` (also the exact third derivative).
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Evaluates `f(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(x.iter()
            .zip(self.quad.iter().zip(&self.lin))
            .map(|(&xi, (&ci, &li))| self.k * xi * xi * xi / 6.0 + ci * xi * xi / 2.0 + li * xi)
            .sum())
    }

    /// Gradient: `grad_i = k x_i^2/2 + c_i x_i + c'_i`.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(x.iter()
            .zip(self.quad.iter().zip(&self.lin))
            .map(|(&xi, (&ci, &li))| self.k * xi * xi / 2.0 + ci * xi + li)
            .collect())
    }
}

/// User-supplied function with explicit gradient and third-derivative bound.
#[derive(Clone)]
pub struct CustomFunction {
    dim: usize,
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    third_derivative_bound: f64,
}

impl CustomFunction {
    /// Wraps closures for the value and gradient together with a bound `K`
    /// on the absolute third derivative along any coordinate.
    pub fn new(
        dim: usize,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        third_derivative_bound: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("custom function dimension must be positive"));
        }
        if !third_derivative_bound.is_finite() || third_derivative_bound < 0.0 {
            return Err(Error::invalid(format!(
                "third-derivative bound must be finite and nonnegative, got {third_derivative_bound}"
            )));
        }
        Ok(CustomFunction {
            dim,
            eval: Arc::new(eval),
            grad: Arc::new(grad),
            third_derivative_bound,
        })
    }
}

impl fmt::Debug for CustomFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFunction")
            .field("dim", &self.dim)
            .field("third_derivative_bound", &self.third_derivative_bound)
            .finish_non_exhaustive()
    }
}

/// A member of any supported family, behind one interface.
#[derive(Clone, Debug)]
pub enum FunctionSpec {
    /// Sign-indexed near-linear function.
    Hyperplane(HyperplaneFunction),
    /// Separable cubic with exact third derivative.
    Cubic(CubicFunction),
    /// Arbitrary closures with a stated smoothness bound.
    Custom(CustomFunction),
}

impl FunctionSpec {
    /// Dimension of the function's domain.
    pub fn dim(&self) -> usize {
        match self {
            FunctionSpec::Hyperplane(g) => g.dim(),
            FunctionSpec::Cubic(f) => f.dim(),
            FunctionSpec::Custom(c) => c.dim,
        }
    }

    /// Evaluates the function at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            FunctionSpec::Hyperplane(g) => g.eval(x),
            FunctionSpec::Cubic(f) => f.eval(x),
            FunctionSpec::Custom(c) => {
                check_dim(c.dim, x.len())?;
                Ok((c.eval)(x))
            }
        }
    }

    /// Gradient at `x`.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            FunctionSpec::Hyperplane(g) => g.grad(x),
            FunctionSpec::Cubic(f) => f.grad(x),
            FunctionSpec::Custom(c) => {
                check_dim(c.dim, x.len())?;
                let g = (c.grad)(x);
                check_dim(c.dim, g.len())?;
                Ok(g)
            }
        }
    }

    /// Upper bound `K` on the absolute third derivative along any coordinate.
    ///
    /// Exactly `k` for cubics, `0` for hyperplanes, and the caller-supplied
    /// bound for custom functions.
    pub fn third_derivative_bound(&self) -> f64 {
        match self {
            FunctionSpec::Hyperplane(_) => 0.0,
            FunctionSpec::Cubic(f) => f.k,
            FunctionSpec::Custom(c) => c.third_derivative_bound,
        }
    }
}

impl From<HyperplaneFunction> for FunctionSpec {
    fn from(g: HyperplaneFunction) -> Self {
        FunctionSpec::Hyperplane(g)
    }
}

impl From<CubicFunction> for FunctionSpec {
    fn from(f: CubicFunction) -> Self {
        FunctionSpec::Cubic(f)
    }
}

impl From<CustomFunction> for FunctionSpec {
    fn from(c: CustomFunction) -> Self {
        FunctionSpec::Custom(c)
    }
}

/// Noiseless central difference `(f(x + h e_i) - f(x - h e_i)) / (2h)`.
///
/// For a cubic this equals `grad_i(x) + h^2 k / 6` exactly; for a hyperplane
/// it equals `grad_i(x)` exactly. When a domain is supplied both probe
/// points must stay inside it.
pub fn taylor_central_difference(
    f: &FunctionSpec,
    x: &[f64],
    i: usize,
    h: f64,
    domain: Option<&DomainBox>,
) -> Result<f64> {
    let d = f.dim();
    check_dim(d, x.len())?;
    if i >= d {
        return Err(Error::invalid(format!(
            "coordinate index {i} out of range for dimension {d}"
        )));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::NonPositiveStep { h });
    }
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    plus[i] += h;
    minus[i] -= h;
    if let Some(b) = domain {
        check_dim(d, b.dim())?;
        if !b.contains(&plus) || !b.contains(&minus) {
            return Err(Error::OutsideDomain);
        }
    }
    Ok((f.eval(&plus)? - f.eval(&minus)?) / (2.0 * h))
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

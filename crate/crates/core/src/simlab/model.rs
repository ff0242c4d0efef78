//! Synthetic joint laws with exact marginals and conditional survival
//! functions.
//!
//! Every dependent family is driven by one scalar coordinate `u` of `X`
//! (the first coordinate, or the normal score for the Gaussian copula):
//! given `u`, `Y ~ N(mean(u), scale^2)`, or `Y = mean(u)` when the scale is
//! zero. That keeps `G_x(t)` a normal tail and every expectation over `X` a
//! one-dimensional quadrature.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::quadrature::integrate;
use crate::error::{Error, Result};
use crate::inference::{normal_cdf, normal_quantile};
use crate::sample::Sample;

const MARGINAL_TOL: f64 = 1e-12;
const MARGINAL_SEGMENTS: usize = 2000;

/// Link applied to the driving coordinate `u ∈ [-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Linear,
    Cubic,
    Square,
    /// `sin(pi u)`.
    Sine,
}

impl Link {
    pub fn apply(self, u: f64) -> f64 {
        match self {
            Self::Linear => u,
            Self::Cubic => u * u * u,
            Self::Square => u * u,
            Self::Sine => (PI * u).sin(),
        }
    }

    /// `P(link(U) <= t)` for `U ~ Uniform(-1, 1)`.
    fn uniform_cdf(self, t: f64) -> f64 {
        let p = match self {
            Self::Linear => (t + 1.0) / 2.0,
            Self::Cubic => (t.cbrt() + 1.0) / 2.0,
            Self::Square => t.max(0.0).sqrt(),
            // sin(pi u) over one full period.
            Self::Sine => 0.5 + t.clamp(-1.0, 1.0).asin() / PI,
        };
        p.clamp(0.0, 1.0)
    }

    fn uniform_quantile(self, p: f64) -> f64 {
        match self {
            Self::Linear => 2.0 * p - 1.0,
            Self::Cubic => (2.0 * p - 1.0).powi(3),
            Self::Square => p * p,
            Self::Sine => (PI * (p - 0.5)).sin(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Cubic => "cubic",
            Self::Square => "square",
            Self::Sine => "sine",
        }
    }
}

impl std::str::FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "cubic" => Ok(Self::Cubic),
            "square" => Ok(Self::Square),
            "sine" => Ok(Self::Sine),
            other => Err(Error::InvalidModelParam(format!("unknown link '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `X ~ U[0,1]^d`, `Y ~ U[0,1]` independent.
    IndependentUniform,
    /// `X ~ N(0,1)`, `Y | X ~ N(rho X, 1 - rho^2)`.
    GaussianCopula { rho: f64 },
    /// `X ~ U[-1,1]^d`, `Y = link(X_1) + sigma_e Z`.
    NoisyFunction { link: Link, sigma_e: f64 },
    /// `X ~ U[-1,1]^d`, `Y = link(X_1)`.
    ExactFunction { link: Link },
    /// `X` uniform on the unit sphere in `R^d`, `Y = link(X_1) + sigma_e Z`.
    SphereManifold { link: Link, sigma_e: f64 },
}

/// A validated synthetic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec")]
pub struct ModelSpec {
    #[serde(flatten)]
    family: Family,
    d: usize,
}

#[derive(Deserialize)]
struct RawModelSpec {
    #[serde(flatten)]
    family: Family,
    d: usize,
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;

    fn try_from(raw: RawModelSpec) -> Result<Self> {
        Self::new(raw.family, raw.d)
    }
}

/// Law of the driving coordinate, for expectations over `X`.
#[derive(Debug, Clone, Copy)]
enum Driver {
    UniformPm1,
    StandardNormal,
    /// First coordinate of a uniform point on the sphere in `R^d`,
    /// integrated through its polar angle.
    SphereFirst {
        d: usize,
        norm: f64,
    },
}

impl Driver {
    fn expect<F: Fn(f64) -> f64>(self, f: F, tol: f64, segments: usize) -> Result<f64> {
        match self {
            Self::UniformPm1 => Ok(0.5 * integrate(f, -1.0, 1.0, 2.0 * tol, segments)?),
            Self::StandardNormal => integrate(
                |u| crate::inference::special::normal_pdf(u) * f(u),
                -10.0,
                10.0,
                tol,
                segments,
            ),
            Self::SphereFirst { d, norm } => {
                let power = d as i32 - 2;
                let v = integrate(
                    |theta: f64| theta.sin().powi(power) * f(theta.cos()),
                    0.0,
                    PI,
                    tol * norm,
                    segments,
                )?;
                Ok(v / norm)
            }
        }
    }
}

impl ModelSpec {
    pub fn new(family: Family, d: usize) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidModelParam(msg));
        if d == 0 {
            return bad("dimension must be >= 1".into());
        }
        match family {
            Family::IndependentUniform | Family::ExactFunction { .. } => {}
            Family::GaussianCopula { rho } => {
                if rho.is_nan() || rho.abs() >= 1.0 {
                    return bad(format!("gaussian copula needs |rho| < 1, got {rho}"));
                }
                if d != 1 {
                    return bad(format!("gaussian copula is univariate, got d = {d}"));
                }
            }
            Family::NoisyFunction { sigma_e, .. } | Family::SphereManifold { sigma_e, .. } => {
                if !(sigma_e.is_finite() && sigma_e >= 0.0) {
                    return bad(format!("noise scale must be >= 0, got {sigma_e}"));
                }
                if sigma_e == 0.0 {
                    return bad("noise scale 0 makes Y a function of X; use exact_function".into());
                }
                if matches!(family, Family::SphereManifold { .. }) && d < 2 {
                    return bad(format!("sphere manifold needs d >= 2, got {d}"));
                }
            }
        }
        Ok(Self { family, d })
    }

    pub fn independent_uniform(d: usize) -> Result<Self> {
        Self::new(Family::IndependentUniform, d)
    }

    pub fn gaussian_copula(rho: f64) -> Result<Self> {
        Self::new(Family::GaussianCopula { rho }, 1)
    }

    pub fn noisy_function(link: Link, sigma_e: f64, d: usize) -> Result<Self> {
        Self::new(Family::NoisyFunction { link, sigma_e }, d)
    }

    pub fn exact_function(link: Link, d: usize) -> Result<Self> {
        Self::new(Family::ExactFunction { link }, d)
    }

    pub fn sphere_manifold(d: usize, link: Link, sigma_e: f64) -> Result<Self> {
        Self::new(Family::SphereManifold { link, sigma_e }, d)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            Family::IndependentUniform => "independent_uniform",
            Family::GaussianCopula { .. } => "gaussian_copula",
            Family::NoisyFunction { .. } => "noisy_function",
            Family::ExactFunction { .. } => "exact_function",
            Family::SphereManifold { .. } => "sphere_manifold",
        }
    }

    /// True when `Y` is a measurable function of `X`.
    pub fn is_degenerate(&self) -> bool {
        matches!(self.family, Family::ExactFunction { .. })
    }

    /// Draws `n` i.i.d. observations.
    pub fn sample_with<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Sample> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let d = self.d;
        let mut x = Vec::with_capacity(n * d);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let row = x.len();
            match self.family {
                Family::IndependentUniform => {
                    x.extend((0..d).map(|_| rng.random::<f64>()));
                    y.push(rng.random::<f64>());
                }
                Family::GaussianCopula { rho } => {
                    let u: f64 = rng.sample(StandardNormal);
                    let z: f64 = rng.sample(StandardNormal);
                    x.push(u);
                    y.push(rho * u + (1.0 - rho * rho).sqrt() * z);
                }
                Family::NoisyFunction { link, sigma_e } => {
                    x.extend((0..d).map(|_| rng.random_range(-1.0..1.0)));
                    let z: f64 = rng.sample(StandardNormal);
                    y.push(link.apply(x[row]) + sigma_e * z);
                }
                Family::ExactFunction { link } => {
                    x.extend((0..d).map(|_| rng.random_range(-1.0..1.0)));
                    y.push(link.apply(x[row]));
                }
                Family::SphereManifold { link, sigma_e } => {
                    let point = loop {
                        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                        let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                        if len > 0.0 {
                            break v.into_iter().map(|c| c / len).collect::<Vec<_>>();
                        }
                    };
                    x.extend_from_slice(&point);
                    let z: f64 = rng.sample(StandardNormal);
                    y.push(link.apply(point[0]) + sigma_e * z);
                }
            }
        }
        Sample::from_flat(d, x, y)
    }

    fn driver(&self) -> Option<Driver> {
        match self.family {
            Family::IndependentUniform => None,
            Family::GaussianCopula { .. } => Some(Driver::StandardNormal),
            Family::NoisyFunction { .. } | Family::ExactFunction { .. } => Some(Driver::UniformPm1),
            Family::SphereManifold { .. } => {
                let d = self.d as f64;
                // ∫_0^pi sin^{d-2}
                let norm = PI.sqrt() * libm::tgamma((d - 1.0) / 2.0) / libm::tgamma(d / 2.0);
                Some(Driver::SphereFirst { d: self.d, norm })
            }
        }
    }

    /// Conditional mean and scale of `Y` given the driving coordinate.
    fn conditional(&self, u: f64) -> (f64, f64) {
        match self.family {
            Family::IndependentUniform => unreachable!("no driving coordinate"),
            Family::GaussianCopula { rho } => (rho * u, (1.0 - rho * rho).sqrt()),
            Family::NoisyFunction { link, sigma_e } | Family::SphereManifold { link, sigma_e } => {
                (link.apply(u), sigma_e)
            }
            Family::ExactFunction { link } => (link.apply(u), 0.0),
        }
    }

    fn survival_given_driver(&self, u: f64, t: f64) -> f64 {
        let (mean, scale) = self.conditional(u);
        if scale == 0.0 {
            if mean >= t {
                1.0
            } else {
                0.0
            }
        } else {
            normal_cdf((mean - t) / scale)
        }
    }

    /// `G_x(t) = P(Y >= t | X = x)`.
    pub fn conditional_survival(&self, x: &[f64], t: f64) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                row: 0,
                expected: self.d,
                found: x.len(),
            });
        }
        match self.family {
            Family::IndependentUniform => Ok(1.0 - self.cdf_y(t)?),
            _ => Ok(self.survival_given_driver(x[0], t)),
        }
    }

    /// True when `F_Y` and `h` have closed forms; otherwise both need
    /// quadrature over the law of `X`.
    pub(crate) fn has_closed_forms(&self) -> bool {
        matches!(
            self.family,
            Family::IndependentUniform | Family::ExactFunction { .. }
        )
    }

    /// Marginal CDF `F_Y(t)`.
    pub fn cdf_y(&self, t: f64) -> Result<f64> {
        match self.family {
            Family::IndependentUniform => Ok(t.clamp(0.0, 1.0)),
            Family::GaussianCopula { .. } => Ok(normal_cdf(t)),
            Family::ExactFunction { link } => Ok(link.uniform_cdf(t)),
            _ => {
                let survival = self.expect_over_x(
                    |u| self.survival_given_driver(u, t),
                    MARGINAL_TOL,
                    MARGINAL_SEGMENTS,
                )?;
                Ok((1.0 - survival).clamp(0.0, 1.0))
            }
        }
    }

    /// Marginal density of `Y`, for the smooth families.
    pub(crate) fn density_y(&self, t: f64) -> Result<f64> {
        use crate::inference::special::normal_pdf;
        match self.family {
            Family::IndependentUniform => Ok(if (0.0..=1.0).contains(&t) { 1.0 } else { 0.0 }),
            Family::GaussianCopula { .. } => Ok(normal_pdf(t)),
            Family::ExactFunction { .. } => Err(Error::OutOfDomain(
                "density of an exact-function response is not tabulated".into(),
            )),
            _ => self.expect_over_x(
                |u| {
                    let (mean, scale) = self.conditional(u);
                    normal_pdf((t - mean) / scale) / scale
                },
                MARGINAL_TOL,
                MARGINAL_SEGMENTS,
            ),
        }
    }

    /// Marginal quantile `F_Y^{-1}(p)`, closed form where available and
    /// bisection otherwise.
    pub fn quantile_y(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::OutOfDomain(format!(
                "quantile needs p in (0, 1), got {p}"
            )));
        }
        match self.family {
            Family::IndependentUniform => Ok(p),
            Family::GaussianCopula { .. } => normal_quantile(p),
            Family::ExactFunction { link } => Ok(link.uniform_quantile(p)),
            Family::NoisyFunction { sigma_e, .. } | Family::SphereManifold { sigma_e, .. } => {
                // Links map [-1, 1] into [-1, 1].
                let (mut lo, mut hi) = (-1.0 - 12.0 * sigma_e, 1.0 + 12.0 * sigma_e);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if !(mid > lo && mid < hi) {
                        break;
                    }
                    if self.cdf_y(mid)? < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }

    /// `E_X[f(u(X))]` over the driving coordinate.
    pub(crate) fn expect_over_x<F: Fn(f64) -> f64>(
        &self,
        f: F,
        tol: f64,
        segments: usize,
    ) -> Result<f64> {
        match self.driver() {
            Some(driver) => driver.expect(f, tol, segments),
            None => Err(Error::OutOfDomain(
                "model has no covariate dependence to integrate".into(),
            )),
        }
    }

    /// `h(t) = E[G_X(t)^2]` evaluated directly (closed form or quadrature).
    pub fn h_direct(&self, t: f64) -> Result<f64> {
        match self.family {
            Family::IndependentUniform => Ok((1.0 - self.cdf_y(t)?).powi(2)),
            // G_x is an indicator, so G_x^2 = G_x and h = 1 - F_Y.
            Family::ExactFunction { .. } => Ok(1.0 - self.cdf_y(t)?),
            _ => self.expect_over_x(
                |u| self.survival_given_driver(u, t).powi(2),
                MARGINAL_TOL,
                MARGINAL_SEGMENTS,
            ),
        }
    }

    /// Interval carrying all but a negligible tail of `Y`.
    pub(crate) fn y_support(&self) -> (f64, f64) {
        match self.family {
            Family::IndependentUniform => (0.0, 1.0),
            Family::GaussianCopula { .. } => (-12.0, 12.0),
            Family::ExactFunction { .. } => (-1.0, 1.0),
            Family::NoisyFunction { sigma_e, .. } | Family::SphereManifold { sigma_e, .. } => {
                (-1.0 - 12.0 * sigma_e, 1.0 + 12.0 * sigma_e)
            }
        }
    }
}

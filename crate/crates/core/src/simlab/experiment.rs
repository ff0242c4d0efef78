//! Seeded Monte Carlo experiments over the synthetic models.
//!
//! Replicate `r` draws its sample from a ChaCha8 stream keyed by
//! `(seed, r)`, and results are collected in replicate order, so the thread
//! count never changes a result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hajek::HajekProjection;
use super::ks::ks_statistic;
use super::model::{Family, Link, ModelSpec};
use super::population::{population_xi, DEFAULT_QUADRATURE_SEGMENTS};
use crate::error::{Error, Result};
use crate::estimators::{
    sigma_bar_hat_sq_from_ranks, sigma_hat_sq_from_ranks, xi_bar_n_from_ranks, xi_n_from_ranks,
    EstimatorKind, Mode,
};
use crate::inference::{confidence_interval, threshold_test};
use crate::neighbors::{build_nn_table, build_right_nn_table, NeighborTable};
use crate::sample::{compute_ranks, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Coefficient and variance estimate per replicate.
    Clt,
    /// Adds interval coverage of the population value.
    Coverage,
    /// Adds the one-sided threshold test decision.
    Test,
    /// Adds the gap between the coefficient and its Hájek projection.
    Hajek,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clt" => Ok(Self::Clt),
            "coverage" => Ok(Self::Coverage),
            "test" => Ok(Self::Test),
            "hajek" => Ok(Self::Hajek),
            other => Err(Error::InvalidConfig(format!(
                "unknown experiment '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindChoice {
    /// Right-NN when `d = 1`, Euclidean otherwise.
    #[default]
    Auto,
    Nn,
    RightNn,
}

impl KindChoice {
    pub fn resolve(self, d: usize) -> EstimatorKind {
        match self {
            Self::Auto => EstimatorKind::auto(d),
            Self::Nn => EstimatorKind::Nn,
            Self::RightNn => EstimatorKind::RightNn,
        }
    }
}

impl From<EstimatorKind> for KindChoice {
    fn from(kind: EstimatorKind) -> Self {
        match kind {
            EstimatorKind::Nn => Self::Nn,
            EstimatorKind::RightNn => Self::RightNn,
        }
    }
}

impl std::str::FromStr for KindChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "nn" => Ok(Self::Nn),
            "right_nn" | "right-nn" => Ok(Self::RightNn),
            other => Err(Error::InvalidConfig(format!(
                "unknown estimator kind '{other}'"
            ))),
        }
    }
}

fn default_d() -> usize {
    1
}

fn default_alpha() -> f64 {
    0.05
}

/// Flat key-value experiment description; round-trips through TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Model family name, e.g. `gaussian_copula`.
    pub family: String,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<Link>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub kind: KindChoice,
}

impl ExperimentConfig {
    /// Config describing `spec`, with `alpha = 0.05`, no `kappa` and the
    /// automatic estimator.
    pub fn for_model(
        experiment: ExperimentKind,
        spec: &ModelSpec,
        n: usize,
        reps: usize,
        seed: u64,
    ) -> Self {
        let (mut rho, mut sigma_e, mut link) = (None, None, None);
        match spec.family() {
            Family::IndependentUniform => {}
            Family::GaussianCopula { rho: r } => rho = Some(r),
            Family::NoisyFunction {
                link: l,
                sigma_e: s,
            }
            | Family::SphereManifold {
                link: l,
                sigma_e: s,
            } => {
                link = Some(l);
                sigma_e = Some(s);
            }
            Family::ExactFunction { link: l } => link = Some(l),
        }
        Self {
            experiment,
            family: spec.name().to_string(),
            d: spec.d(),
            rho,
            sigma_e,
            link,
            n,
            reps,
            seed,
            alpha: default_alpha(),
            kappa: None,
            kind: KindChoice::Auto,
        }
    }

    /// Builds and validates the model.
    pub fn model(&self) -> Result<ModelSpec> {
        let need =
            |field: &str| Error::InvalidModelParam(format!("{} needs '{field}'", self.family));
        let family = match self.family.as_str() {
            "independent_uniform" => Family::IndependentUniform,
            "gaussian_copula" => Family::GaussianCopula {
                rho: self.rho.ok_or_else(|| need("rho"))?,
            },
            "noisy_function" => Family::NoisyFunction {
                link: self.link.ok_or_else(|| need("link"))?,
                sigma_e: self.sigma_e.ok_or_else(|| need("sigma_e"))?,
            },
            "exact_function" => Family::ExactFunction {
                link: self.link.ok_or_else(|| need("link"))?,
            },
            "sphere_manifold" => Family::SphereManifold {
                link: self.link.ok_or_else(|| need("link"))?,
                sigma_e: self.sigma_e.ok_or_else(|| need("sigma_e"))?,
            },
            other => {
                return Err(Error::InvalidModelParam(format!(
                    "unknown model family '{other}'"
                )))
            }
        };
        ModelSpec::new(family, self.d)
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))
    }

    pub fn to_kv_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }
}

/// Per-replicate record; the optional fields are filled by the experiment
/// kinds that need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub coefficient: f64,
    /// Raw (unclamped) estimate of `n Var`.
    pub variance_est: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_hit: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reject: Option<bool>,
    /// Coefficient minus its Hájek projection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hajek_gap: Option<f64>,
}

/// Aggregates, each a deterministic function of the replicate list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Monte Carlo standard error of `mean`.
    pub mc_se_mean: f64,
    /// Sample variance of the coefficient across replicates.
    pub mc_variance: f64,
    /// `n * mc_variance`.
    pub n_var: f64,
    pub median_variance_est: f64,
    /// KS distance of `(coef - mean) / sqrt(variance_est / n)` against
    /// N(0, 1), over replicates with a positive variance estimate.
    pub ks_distance: Option<f64>,
    pub coverage: Option<f64>,
    pub mean_ci_width: Option<f64>,
    pub rejection_rate: Option<f64>,
    /// `n` times the variance of the Hájek gap.
    pub hajek_n_var: Option<f64>,
    pub population_xi: Option<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let k = s.len() / 2;
    if s.len() % 2 == 1 {
        s[k]
    } else {
        0.5 * (s[k - 1] + s[k])
    }
}

fn rate(flags: impl Iterator<Item = Option<bool>>) -> Option<f64> {
    let flags: Option<Vec<bool>> = flags.collect();
    let flags = flags.filter(|f| !f.is_empty())?;
    Some(flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64)
}

impl Summary {
    /// Recomputes every aggregate from stored replicates (`len >= 2`).
    pub fn from_replicates(
        n: usize,
        replicates: &[Replicate],
        population_xi: Option<f64>,
    ) -> Result<Self> {
        if replicates.len() < 2 {
            return Err(Error::TooFewValues {
                n: replicates.len(),
                required: 2,
            });
        }
        let nf = n as f64;
        let coef: Vec<f64> = replicates.iter().map(|r| r.coefficient).collect();
        let var_est: Vec<f64> = replicates.iter().map(|r| r.variance_est).collect();
        let m = mean(&coef);
        let mc_variance = sample_variance(&coef);

        let z: Vec<f64> = replicates
            .iter()
            .filter(|r| r.variance_est > 0.0)
            .map(|r| (r.coefficient - m) / (r.variance_est / nf).sqrt())
            .collect();
        let ks_distance = if z.len() >= 2 {
            Some(ks_statistic(&z)?)
        } else {
            None
        };

        let widths: Option<Vec<f64>> = replicates.iter().map(|r| r.ci_width).collect();
        let gaps: Option<Vec<f64>> = replicates.iter().map(|r| r.hajek_gap).collect();
        Ok(Self {
            mean: m,
            mc_se_mean: (mc_variance / coef.len() as f64).sqrt(),
            mc_variance,
            n_var: nf * mc_variance,
            median_variance_est: median(&var_est),
            ks_distance,
            coverage: rate(replicates.iter().map(|r| r.ci_hit)),
            mean_ci_width: widths.map(|w| mean(&w)),
            rejection_rate: rate(replicates.iter().map(|r| r.reject)),
            hajek_n_var: gaps.map(|g| nf * sample_variance(&g)),
            population_xi,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub replicates: Vec<Replicate>,
    pub summary: Summary,
}

/// Random stream for replicate `rep` of an experiment seeded with `seed`.
pub fn replicate_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// The sample of replicate 0 for `(spec, n, seed)`.
pub fn sample_model(spec: &ModelSpec, n: usize, seed: u64) -> Result<Sample> {
    spec.sample_with(n, &mut replicate_rng(seed, 0))
}

/// Coefficient, raw variance estimate and the neighbor table they used.
fn evaluate(sample: &Sample, kind: EstimatorKind) -> Result<(f64, f64, NeighborTable)> {
    let ranks = compute_ranks(sample);
    Ok(match kind {
        EstimatorKind::RightNn => {
            let table = build_right_nn_table(sample, 3)?;
            let coef = xi_bar_n_from_ranks(&ranks, &table);
            let var = sigma_bar_hat_sq_from_ranks(&ranks, &table, Mode::Optimized);
            (coef, var, table)
        }
        EstimatorKind::Nn => {
            let table = build_nn_table(sample, 3)?;
            let coef = xi_n_from_ranks(&ranks, &table);
            let var = sigma_hat_sq_from_ranks(&ranks, &table, Mode::Optimized);
            (coef, var, table)
        }
    })
}

/// Shared driver; `extra` fills the kind-specific replicate fields.
struct Plan<'a> {
    config: ExperimentConfig,
    spec: ModelSpec,
    kind: EstimatorKind,
    population: Option<f64>,
    projection: Option<&'a HajekProjection>,
}

impl Plan<'_> {
    fn run(self) -> Result<ExperimentResult> {
        let c = &self.config;
        if c.n < 4 {
            return Err(Error::TooFewPoints {
                n: c.n,
                required: 4,
            });
        }
        if c.reps < 2 {
            return Err(Error::InvalidConfig(format!(
                "need reps >= 2, got {}",
                c.reps
            )));
        }
        if self.kind == EstimatorKind::RightNn && self.spec.d() != 1 {
            return Err(Error::NotUnivariate { d: self.spec.d() });
        }
        let replicates = (0..c.reps as u64)
            .into_par_iter()
            .map(|rep| self.replicate(rep))
            .collect::<Result<Vec<_>>>()?;
        let summary = Summary::from_replicates(c.n, &replicates, self.population)?;
        Ok(ExperimentResult {
            config: self.config,
            replicates,
            summary,
        })
    }

    fn replicate(&self, rep: u64) -> Result<Replicate> {
        let c = &self.config;
        let sample = self
            .spec
            .sample_with(c.n, &mut replicate_rng(c.seed, rep))?;
        let (coefficient, variance_est, table) = evaluate(&sample, self.kind)?;
        let usable = variance_est.max(0.0);
        let mut r = Replicate {
            coefficient,
            variance_est,
            ci_hit: None,
            ci_width: None,
            reject: None,
            hajek_gap: None,
        };
        match c.experiment {
            ExperimentKind::Clt => {}
            ExperimentKind::Coverage => {
                let ci = confidence_interval(coefficient, usable, c.n, c.alpha, self.spec.d())?;
                let target = self.population.expect("coverage plan has a target");
                r.ci_hit = Some(ci.contains(target));
                r.ci_width = Some(ci.width());
            }
            ExperimentKind::Test => {
                let kappa = c.kappa.expect("test plan has kappa");
                r.reject = Some(threshold_test(coefficient, usable, c.n, kappa, c.alpha)?.reject);
            }
            ExperimentKind::Hajek => {
                let proj = self.projection.expect("hajek plan has a projection");
                r.hajek_gap = Some(coefficient - proj.xi_star(&sample, &table)?);
            }
        }
        Ok(r)
    }
}

/// Coefficient and variance estimate per replicate; summary carries the
/// mean, `n * Var_MC`, and the KS distance of standardized values.
pub fn run_clt_experiment(
    spec: &ModelSpec,
    n: usize,
    reps: usize,
    seed: u64,
    kind: EstimatorKind,
) -> Result<ExperimentResult> {
    let mut config = ExperimentConfig::for_model(ExperimentKind::Clt, spec, n, reps, seed);
    config.kind = kind.into();
    run_experiment(&config)
}

/// Fraction of `1 - alpha` intervals covering the population value
/// (univariate, non-degenerate models; right-NN estimator).
pub fn run_coverage_experiment(
    spec: &ModelSpec,
    n: usize,
    reps: usize,
    alpha: f64,
    seed: u64,
) -> Result<ExperimentResult> {
    let mut config = ExperimentConfig::for_model(ExperimentKind::Coverage, spec, n, reps, seed);
    config.alpha = alpha;
    run_experiment(&config)
}

/// Rejection rate of the one-sided test of `H0: xi <= kappa`.
pub fn run_test_experiment(
    spec: &ModelSpec,
    n: usize,
    reps: usize,
    kappa: f64,
    alpha: f64,
    seed: u64,
    kind: EstimatorKind,
) -> Result<ExperimentResult> {
    let mut config = ExperimentConfig::for_model(ExperimentKind::Test, spec, n, reps, seed);
    config.kappa = Some(kappa);
    config.alpha = alpha;
    config.kind = kind.into();
    run_experiment(&config)
}

/// `n * Var_MC` of the gap between the coefficient and its Hájek
/// projection.
pub fn run_hajek_experiment(
    spec: &ModelSpec,
    n: usize,
    reps: usize,
    seed: u64,
    kind: EstimatorKind,
) -> Result<ExperimentResult> {
    let mut config = ExperimentConfig::for_model(ExperimentKind::Hajek, spec, n, reps, seed);
    config.kind = kind.into();
    run_experiment(&config)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let spec = config.model()?;
    let kind = config.kind.resolve(spec.d());
    let mut population = None;
    let mut projection = None;
    match config.experiment {
        ExperimentKind::Clt => {}
        ExperimentKind::Coverage => {
            if spec.d() != 1 {
                return Err(Error::NotUnivariate { d: spec.d() });
            }
            if spec.is_degenerate() {
                return Err(Error::DegenerateModel(
                    "Y is a function of X, so the limiting variance is zero".into(),
                ));
            }
            population = Some(population_xi(&spec, DEFAULT_QUADRATURE_SEGMENTS)?);
        }
        ExperimentKind::Test => {
            if config.kappa.is_none() {
                return Err(Error::InvalidConfig("test experiment needs 'kappa'".into()));
            }
        }
        ExperimentKind::Hajek => projection = Some(HajekProjection::new(&spec)?),
    }
    Plan {
        config: config.clone(),
        spec,
        kind,
        population,
        projection: projection.as_ref(),
    }
    .run()
}

//! Simulation protocols on truncated exponential densities over `[0, 3]`.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::limit_theory::ModelFunctions;
use crate::models::{DensitySample, GroupWeights};
use crate::rng::{derive_seed, substream};
use crate::smoothing::{Correction, SourceKind};
use crate::step_core::Interval;
use crate::test_engine::{
    bootstrap_density, critical_value, density_sampler, fit_density, Bandwidth, BootstrapConfig,
    Scheme, StatisticKind,
};

pub const UPPER: f64 = 3.0;

/// `λ e^{−λx} / (1 − e^{−3λ})` on `[0, 3]`; uniform for `λ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncExp {
    lambda: f64,
}

impl TruncExp {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rate {lambda} must be finite and nonnegative"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn domain() -> Interval {
        Interval::new(0.0, UPPER).expect("valid interval")
    }

    /// `1 − e^{−3λ}`.
    fn mass(&self) -> f64 {
        -(-UPPER * self.lambda).exp_m1()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=UPPER).contains(&x) {
            return 0.0;
        }
        if self.lambda == 0.0 {
            1.0 / UPPER
        } else {
            self.lambda * (-self.lambda * x).exp() / self.mass()
        }
    }

    pub fn pdf_prime(&self, x: f64) -> f64 {
        -self.lambda * self.pdf(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, UPPER);
        if self.lambda == 0.0 {
            x / UPPER
        } else {
            -(-self.lambda * x).exp_m1() / self.mass()
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        if self.lambda == 0.0 {
            UPPER * u
        } else {
            (-(-u * self.mass()).ln_1p() / self.lambda).clamp(0.0, UPPER)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    pub fn sample_group<R: Rng + ?Sized>(&self, group_id: usize, n: usize, rng: &mut R) -> DensitySample {
        DensitySample {
            group_id,
            observations: (0..n).map(|_| self.sample(rng)).collect(),
        }
    }

    /// Limit-theory inputs for the density model under the null with this
    /// common density.
    pub fn model_functions(&self, weights: GroupWeights) -> ModelFunctions {
        let (f, fp, cdf) = (*self, *self, *self);
        ModelFunctions::density_null(
            Self::domain(),
            weights,
            Arc::new(move |x| f.pdf(x)),
            Arc::new(move |x| fp.pdf_prime(x)),
            Arc::new(move |x| cdf.cdf(x)),
        )
    }
}

/// Reading of the component normalization in the least favorable mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixtureNormalization {
    /// Each component is the truncated density on `[0, 3]`.
    Truncated,
    /// Components `λ e^{−λx} / (1 − e^{−λ})` restricted to `[0, 3]`, with the
    /// mixture renormalized to a density.
    Literal,
}

impl MixtureNormalization {
    pub fn name(&self) -> &'static str {
        match self {
            MixtureNormalization::Truncated => "truncated",
            MixtureNormalization::Literal => "literal",
        }
    }
}

/// `Σ w_j f(·, λ_j)` with `Σ w_j = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullMixture {
    components: Vec<TruncExp>,
    weights: Vec<f64>,
}

impl NullMixture {
    pub fn new(lambdas: &[f64], c: &[f64], normalization: MixtureNormalization) -> Result<Self> {
        if lambdas.len() != c.len() || lambdas.is_empty() {
            return Err(Error::InvalidParameter("one weight per component required".into()));
        }
        let components = lambdas
            .iter()
            .map(|&l| TruncExp::new(l))
            .collect::<Result<Vec<_>>>()?;
        let raw: Vec<f64> = components
            .iter()
            .zip(c)
            .map(|(f, &cj)| match normalization {
                MixtureNormalization::Truncated => cj,
                // ∫_0^3 λe^{−λx}/(1 − e^{−λ}) dx = (1 − e^{−3λ})/(1 − e^{−λ}).
                MixtureNormalization::Literal if f.lambda == 0.0 => cj * UPPER,
                MixtureNormalization::Literal => {
                    cj * f.mass() / -(-f.lambda).exp_m1()
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        Ok(Self {
            components,
            weights: raw.iter().map(|w| w / total).collect(),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| w * f.pdf(x))
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        for (f, &w) in self.components.iter().zip(&self.weights) {
            if u < w {
                return f.sample(rng);
            }
            u -= w;
        }
        self.components[self.components.len() - 1].sample(rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub lambdas: Vec<f64>,
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    pub bootstrap: usize,
    pub alpha: f64,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub bandwidth: Bandwidth,
    pub correction: Correction,
    pub source: SourceKind,
}

impl SimConfig {
    pub fn new(lambdas: Vec<f64>, sizes: Vec<usize>) -> Self {
        Self {
            lambdas,
            sizes,
            repetitions: 500,
            bootstrap: 500,
            alpha: 0.05,
            seed: 0,
            schemes: vec![Scheme::DensitySmooth],
            bandwidth: Bandwidth::Auto,
            correction: Correction::BoundaryKernel,
            source: SourceKind::Grenander,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.repetitions == 0 || self.bootstrap == 0 {
            return Err(Error::InvalidParameter(
                "repetitions and bootstrap size must be positive".into(),
            ));
        }
        if self.lambdas.len() != self.sizes.len() || self.lambdas.len() < 2 {
            return Err(Error::InvalidParameter(
                "need one rate per group and at least two groups".into(),
            ));
        }
        if self.sizes.contains(&0) {
            return Err(Error::EmptySample);
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidParameter("no bootstrap scheme selected".into()));
        }
        if let Some(s) = self
            .schemes
            .iter()
            .find(|s| !matches!(s, Scheme::DensitySmooth | Scheme::DensityGrenander))
        {
            return Err(Error::InvalidParameter(format!(
                "scheme {} does not apply to the density model",
                s.name()
            )));
        }
        Ok(())
    }

    fn bootstrap_config(&self, scheme: Scheme, seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            scheme,
            replications: self.bootstrap,
            alpha: self.alpha,
            seed,
            bandwidth: self.bandwidth,
            correction: self.correction,
            source: self.source,
        }
    }
}

/// Binomial standard error `√(p(1 − p)/R)`.
pub fn binomial_stderr(p: f64, r: usize) -> f64 {
    (p * (1.0 - p) / r as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub lambda: f64,
    pub n: usize,
    pub scheme: Scheme,
    pub stat: StatisticKind,
    pub rejections: usize,
    pub repetitions: usize,
    pub level: f64,
    pub stderr: f64,
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerPoint {
    pub lambda3: f64,
    pub stat: StatisticKind,
    /// Bootstrap scheme name, or `true_power` for the benchmark.
    pub scheme: String,
    pub rejections: usize,
    pub repetitions: usize,
    pub power: f64,
    pub stderr: f64,
}

const DATA_LABEL: u64 = 0xda7a;

fn scheme_label(s: Scheme) -> u64 {
    0xb007 + s as u64
}

/// Rejection counts `[scheme][stat]` over the repetitions. All schemes see
/// the same simulated data in each repetition.
fn rejection_counts(cfg: &SimConfig) -> Result<Vec<[usize; 2]>> {
    cfg.validate()?;
    let domain = TruncExp::domain();
    let families = cfg
        .lambdas
        .iter()
        .map(|&l| TruncExp::new(l))
        .collect::<Result<Vec<_>>>()?;
    let data_seed = derive_seed(cfg.seed, DATA_LABEL, 0);
    let per_rep = (0..cfg.repetitions as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(data_seed, r);
            let samples: Vec<DensitySample> = families
                .iter()
                .zip(&cfg.sizes)
                .enumerate()
                .map(|(j, (f, &n))| f.sample_group(j, n, &mut rng))
                .collect();
            let fit = fit_density(&samples, domain)?;
            cfg.schemes
                .iter()
                .map(|&scheme| {
                    let seed = derive_seed(cfg.seed, scheme_label(scheme), r);
                    let bc = cfg.bootstrap_config(scheme, seed);
                    let (sampler, _) = density_sampler(&fit, &bc)?;
                    let draws = bootstrap_density(&fit.sizes, &sampler, &bc)?;
                    let mut out = [false; 2];
                    for (k, kind) in [StatisticKind::S1, StatisticKind::S2].into_iter().enumerate() {
                        let values: Vec<f64> = draws.iter().map(|d| d.get(kind)).collect();
                        out[k] = fit.statistics.get(kind) > critical_value(&values, cfg.alpha);
                    }
                    Ok(out)
                })
                .collect::<Result<Vec<[bool; 2]>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![[0usize; 2]; cfg.schemes.len()];
    for rep in &per_rep {
        for (s, flags) in rep.iter().enumerate() {
            for k in 0..2 {
                counts[s][k] += usize::from(flags[k]);
            }
        }
    }
    Ok(counts)
}

/// Simulated level under a common rate `λ_1 = ⋯ = λ_J`.
pub fn run_level(cfg: &SimConfig) -> Result<Vec<LevelRow>> {
    let lambda = cfg.lambdas.first().copied().unwrap_or(0.0);
    if cfg.lambdas.iter().any(|&l| l != lambda) {
        return Err(Error::InvalidParameter(
            "level simulations need equal rates".into(),
        ));
    }
    let start = Instant::now();
    let counts = rejection_counts(cfg)?;
    let runtime_secs = start.elapsed().as_secs_f64();
    let mut rows = Vec::new();
    for (s, &scheme) in cfg.schemes.iter().enumerate() {
        for (k, stat) in [StatisticKind::S1, StatisticKind::S2].into_iter().enumerate() {
            let level = counts[s][k] as f64 / cfg.repetitions as f64;
            rows.push(LevelRow {
                lambda,
                n: cfg.sizes[0],
                scheme,
                stat,
                rejections: counts[s][k],
                repetitions: cfg.repetitions,
                level,
                stderr: binomial_stderr(level, cfg.repetitions),
                runtime_secs,
            });
        }
    }
    Ok(rows)
}

/// Power along a sweep of the last group's rate; the other rates are taken
/// from `cfg.lambdas`.
pub fn run_power(cfg: &SimConfig, sweep: &[f64]) -> Result<Vec<PowerPoint>> {
    if sweep.is_empty() {
        return Err(Error::InvalidParameter("empty sweep".into()));
    }
    let mut points = Vec::new();
    for (i, &l3) in sweep.iter().enumerate() {
        let mut point_cfg = cfg.clone();
        *point_cfg.lambdas.last_mut().ok_or(Error::EmptySample)? = l3;
        point_cfg.seed = derive_seed(cfg.seed, 0x5eeb, i as u64);
        let counts = rejection_counts(&point_cfg)?;
        for (s, scheme) in cfg.schemes.iter().enumerate() {
            for (k, stat) in [StatisticKind::S1, StatisticKind::S2].into_iter().enumerate() {
                let power = counts[s][k] as f64 / cfg.repetitions as f64;
                points.push(PowerPoint {
                    lambda3: l3,
                    stat,
                    scheme: scheme.name().to_string(),
                    rejections: counts[s][k],
                    repetitions: cfg.repetitions,
                    power,
                    stderr: binomial_stderr(power, cfg.repetitions),
                });
            }
        }
    }
    Ok(points)
}

/// Critical values from samples of the least favorable null mixture, then
/// rejection frequencies under the alternative rates.
pub fn true_power_benchmark(
    lambdas: &[f64],
    sizes: &[usize],
    reps: usize,
    alpha: f64,
    seed: u64,
    normalization: MixtureNormalization,
) -> Result<Vec<PowerPoint>> {
    if reps < 100 {
        return Err(Error::InvalidParameter(format!(
            "benchmark needs at least 100 repetitions, got {reps}"
        )));
    }
    if lambdas.len() != sizes.len() || lambdas.len() < 2 {
        return Err(Error::InvalidParameter("one rate per group and at least two groups".into()));
    }
    let domain = TruncExp::domain();
    let weights = GroupWeights::from_sizes(sizes)?;
    let mixture = NullMixture::new(lambdas, weights.as_slice(), normalization)?;
    let families = lambdas
        .iter()
        .map(|&l| TruncExp::new(l))
        .collect::<Result<Vec<_>>>()?;

    let null_seed = derive_seed(seed, 0x0e11, 0);
    let null_stats = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(null_seed, r);
            let samples: Vec<DensitySample> = sizes
                .iter()
                .enumerate()
                .map(|(j, &n)| DensitySample {
                    group_id: j,
                    observations: (0..n).map(|_| mixture.sample(&mut rng)).collect(),
                })
                .collect();
            Ok(fit_density(&samples, domain)?.statistics)
        })
        .collect::<Result<Vec<_>>>()?;

    let alt_seed = derive_seed(seed, 0xa170, 0);
    let alt_stats = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(alt_seed, r);
            let samples: Vec<DensitySample> = families
                .iter()
                .zip(sizes)
                .enumerate()
                .map(|(j, (f, &n))| f.sample_group(j, n, &mut rng))
                .collect();
            Ok(fit_density(&samples, domain)?.statistics)
        })
        .collect::<Result<Vec<_>>>()?;

    let lambda3 = *lambdas.last().unwrap();
    Ok([StatisticKind::S1, StatisticKind::S2]
        .into_iter()
        .map(|stat| {
            let null: Vec<f64> = null_stats.iter().map(|s| s.get(stat)).collect();
            let q = critical_value(&null, alpha);
            let rejections = alt_stats.iter().filter(|s| s.get(stat) > q).count();
            let power = rejections as f64 / reps as f64;
            PowerPoint {
                lambda3,
                stat,
                scheme: "true_power".to_string(),
                rejections,
                repetitions: reps,
                power,
                stderr: binomial_stderr(power, reps),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_member() {
        let f = TruncExp::new(0.0).unwrap();
        assert_eq!(f.pdf(1.2), 1.0 / 3.0);
        assert_eq!(f.quantile(0.5), 1.5);
    }

    #[test]
    fn inverse_cdf_identity() {
        let f = TruncExp::new(1.0).unwrap();
        let u = (1.0 - (-1.0f64).exp()) / (1.0 - (-3.0f64).exp());
        assert!((f.quantile(u) - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let u: f64 = rng.random();
            assert!((f.cdf(f.quantile(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_integrates_to_one() {
        for norm in [MixtureNormalization::Truncated, MixtureNormalization::Literal] {
            let m = NullMixture::new(&[1.0, 1.0, 3.5], &[1.0 / 3.0; 3], norm).unwrap();
            let n = 200_000;
            let h = 3.0 / n as f64;
            // Simpson's rule.
            let mut s = m.pdf(0.0) + m.pdf(3.0);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * m.pdf(i as f64 * h);
            }
            assert!((s * h / 3.0 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn literal_weights() {
        let m = NullMixture::new(&[1.0, 2.0], &[0.5, 0.5], MixtureNormalization::Literal).unwrap();
        let r1 = (1.0 - (-3.0f64).exp()) / (1.0 - (-1.0f64).exp());
        let r2 = (1.0 - (-6.0f64).exp()) / (1.0 - (-2.0f64).exp());
        assert!((m.weights()[0] - r1 / (r1 + r2)).abs() < 1e-14);
    }

    #[test]
    fn level_run_is_deterministic() {
        let mut cfg = SimConfig::new(vec![1.0; 3], vec![30; 3]);
        cfg.repetitions = 1;
        cfg.bootstrap = 20;
        cfg.seed = 8;
        let a = run_level(&cfg).unwrap();
        let b = run_level(&cfg).unwrap();
        assert_eq!(a.len(), 2);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.rejections, y.rejections);
        }
    }

    #[test]
    fn level_requires_equal_rates() {
        let cfg = SimConfig::new(vec![1.0, 2.0], vec![10, 10]);
        assert!(run_level(&cfg).is_err());
    }
}

//! Monte Carlo evaluation of the centering and scaling constants in the
//! Gaussian limits of `n^{1/6}(n^{1/3} S_k − m_k)`.
//!
//! Everything is built from the argmax variables
//! `ζ_j(c) = sup argmax_u {W_j(u + c) − u²}` of independent two-sided
//! Brownian motions, simulated as Gaussian random walks on a grid. With
//! `g(v) = W(v) − v²` the argmax over `v = u + c` maximizes `g(v) + 2cv`, so
//! a single upper hull of the path answers every `c` by a binary search on
//! the hull slopes.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::GroupWeights;
use crate::quadrature::GaussLegendre;
use crate::rng::{derive_seed, substream};
use crate::step_core::{upper_hull, Interval};

/// Two-sided path on the grid `{kδ : |k| ≤ m}` with value 0 at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianGrid {
    step: f64,
    center: usize,
    values: Vec<f64>,
}

impl BrownianGrid {
    fn cells(half_width: f64, step: f64) -> Result<usize> {
        if !(step > 0.0 && half_width >= step && (half_width / step).is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid with half width {half_width} and step {step}"
            )));
        }
        Ok((half_width / step).round() as usize)
    }

    /// Identically zero path.
    pub fn zero(half_width: f64, step: f64) -> Result<Self> {
        let m = Self::cells(half_width, step)?;
        Ok(Self {
            step,
            center: m,
            values: vec![0.0; 2 * m + 1],
        })
    }

    /// Random walk with independent `N(0, δ)` increments on each side.
    pub fn simulate<R: Rng + ?Sized>(half_width: f64, step: f64, rng: &mut R) -> Result<Self> {
        let m = Self::cells(half_width, step)?;
        let sd = step.sqrt();
        let mut values = vec![0.0; 2 * m + 1];
        for k in m + 1..=2 * m {
            let z: f64 = StandardNormal.sample(rng);
            values[k] = values[k - 1] + sd * z;
        }
        for k in (0..m).rev() {
            let z: f64 = StandardNormal.sample(rng);
            values[k] = values[k + 1] + sd * z;
        }
        Ok(Self {
            step,
            center: m,
            values,
        })
    }

    /// Path from explicit values; the middle value is the origin.
    pub fn from_values(step: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() % 2 == 0 || !(step > 0.0) {
            return Err(Error::InvalidParameter(
                "a two-sided grid needs an odd number of values and a positive step".into(),
            ));
        }
        Ok(Self {
            step,
            center: values.len() / 2,
            values,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn half_width(&self) -> f64 {
        self.center as f64 * self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self, k: usize) -> f64 {
        (k as f64 - self.center as f64) * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.time(k)).collect()
    }

    /// Linear interpolation between grid values.
    pub fn eval(&self, u: f64) -> Result<f64> {
        let x = u / self.step + self.center as f64;
        let last = (self.values.len() - 1) as f64;
        if !(0.0..=last).contains(&x) {
            return Err(Error::GridTooNarrow { at: u });
        }
        let k = (x.floor() as usize).min(self.values.len() - 2);
        let w = x - k as f64;
        Ok(self.values[k] * (1.0 - w) + self.values[k + 1] * w)
    }
}

/// Upper hull of `v ↦ W(v) − v²` for repeated argmax queries.
#[derive(Debug, Clone)]
pub struct ArgmaxSolver {
    times: Vec<f64>,
    vertices: Vec<usize>,
    slopes: Vec<f64>,
    last: usize,
}

impl ArgmaxSolver {
    pub fn new(times: &[f64], values: &[f64]) -> Self {
        let g: Vec<f64> = times.iter().zip(values).map(|(t, w)| w - t * t).collect();
        let vertices = upper_hull(times, &g);
        let slopes = vertices
            .windows(2)
            .map(|w| (g[w[1]] - g[w[0]]) / (times[w[1]] - times[w[0]]))
            .collect();
        Self {
            times: times.to_vec(),
            vertices,
            slopes,
            last: times.len() - 1,
        }
    }

    pub fn from_path(path: &BrownianGrid) -> Self {
        Self::new(&path.times(), path.values())
    }

    /// `sup argmax_u {W(u + c) − u²}` over the grid.
    pub fn argmax(&self, c: f64) -> Result<f64> {
        // Moving right along the hull gains (slope + 2c) per unit; ties move
        // right, which is the supremum convention.
        let k = self.slopes.partition_point(|&s| s + 2.0 * c >= 0.0);
        let idx = self.vertices[k];
        let v = self.times[idx];
        if idx == 0 || idx == self.last {
            return Err(Error::GridTooNarrow { at: v });
        }
        Ok(v - c)
    }
}

pub fn simulate_zeta(c: f64, path: &BrownianGrid) -> Result<f64> {
    ArgmaxSolver::from_path(path).argmax(c)
}

/// `κ ζ(t/κ)` with `κ = (l_prime / c)^{1/3}`.
pub fn scaled_argmax<Z>(t: f64, l_prime: f64, c: f64, zeta: Z) -> Result<f64>
where
    Z: Fn(f64) -> Result<f64>,
{
    let kappa = (l_prime / c).cbrt();
    Ok(kappa * zeta(t / kappa)?)
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The functions entering the limit constants.
#[derive(Clone)]
pub struct ModelFunctions {
    pub domain: Interval,
    pub weights: GroupWeights,
    /// Derivative of the common decreasing function.
    pub f0_prime: RealFn,
    /// Increasing functions `L_j` of the embedding, per group.
    pub l: Vec<RealFn>,
    pub l_prime: Vec<RealFn>,
}

impl std::fmt::Debug for ModelFunctions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelFunctions")
            .field("domain", &self.domain)
            .field("weights", &self.weights)
            .field("groups", &self.l.len())
            .finish()
    }
}

impl ModelFunctions {
    pub fn new(
        domain: Interval,
        weights: GroupWeights,
        f0_prime: RealFn,
        l: Vec<RealFn>,
        l_prime: Vec<RealFn>,
    ) -> Result<Self> {
        if l.len() != weights.len() || l_prime.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights, {} functions L and {} derivatives",
                weights.len(),
                l.len(),
                l_prime.len()
            )));
        }
        Ok(Self {
            domain,
            weights,
            f0_prime,
            l,
            l_prime,
        })
    }

    /// Density model under the null: `L_j = F_0` for every group.
    pub fn density_null(
        domain: Interval,
        weights: GroupWeights,
        f0: RealFn,
        f0_prime: RealFn,
        cdf0: RealFn,
    ) -> Self {
        let groups = weights.len();
        Self {
            domain,
            weights,
            f0_prime,
            l: vec![cdf0; groups],
            l_prime: vec![f0; groups],
        }
    }

    pub fn groups(&self) -> usize {
        self.l.len()
    }

    fn c(&self, j: usize) -> f64 {
        self.weights.as_slice()[j]
    }

    /// `(L_j' / c_j)^{1/3}`.
    pub fn kappa(&self, j: usize, s: f64) -> f64 {
        ((self.l_prime[j])(s) / self.c(j)).cbrt()
    }

    pub fn l0(&self, t: f64) -> f64 {
        (0..self.groups()).map(|j| self.c(j) * self.l_ext(j, t)).sum()
    }

    pub fn l0_prime(&self, t: f64) -> f64 {
        (0..self.groups())
            .map(|j| self.c(j) * (self.l_prime[j])(t))
            .sum()
    }

    /// `L_j`, extended linearly outside `[a, b]`.
    fn l_ext(&self, j: usize, t: f64) -> f64 {
        let (a, b) = (self.domain.a(), self.domain.b());
        if t < a {
            (self.l[j])(a) + (self.l_prime[j])(a) * (t - a)
        } else if t > b {
            (self.l[j])(b) + (self.l_prime[j])(b) * (t - b)
        } else {
            (self.l[j])(t)
        }
    }

    fn check(&self, nodes: &[f64]) -> Result<()> {
        for &s in nodes {
            let d = (self.f0_prime)(s);
            if !(d < 0.0 && d.is_finite()) {
                return Err(Error::ModelAssumption(format!(
                    "derivative of the null function is {d} at {s}, not strictly negative"
                )));
            }
            for j in 0..self.groups() {
                let lp = (self.l_prime[j])(s);
                if !(lp > 0.0 && lp.is_finite()) {
                    return Err(Error::ModelAssumption(format!(
                        "derivative of L_{} is {lp} at {s}, not strictly positive",
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether `L_j' / L_0'` is the same at every node for every group.
    pub fn is_proportional(&self, nodes: &[f64]) -> bool {
        (0..self.groups()).all(|j| {
            let ratios: Vec<f64> = nodes
                .iter()
                .map(|&s| (self.l_prime[j])(s) / self.l0_prime(s))
                .collect();
            ratios
                .iter()
                .all(|r| (r - ratios[0]).abs() <= 1e-9 * ratios[0].abs())
        })
    }
}

/// `Y_sj(t) = κ_j(s) ζ_j(t / κ_j(s))`.
pub fn y_sj<Z>(t: f64, s: f64, j: usize, zeta: Z, mf: &ModelFunctions) -> Result<f64>
where
    Z: Fn(f64) -> Result<f64>,
{
    scaled_argmax(t, (mf.l_prime[j])(s), mf.c(j), zeta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitConfig {
    pub reps: usize,
    pub quad_points: usize,
    pub half_width: f64,
    pub step: f64,
    /// Covariances in `t` are integrated up to this many units of the
    /// argmax scale `κ`.
    pub zeta_cutoff: f64,
    pub t_points: usize,
    pub seed: u64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self {
            reps: 2000,
            quad_points: 16,
            half_width: 5.0,
            step: 0.005,
            zeta_cutoff: 4.0,
            t_points: 80,
            seed: 0,
        }
    }
}

impl LimitConfig {
    fn validate(&self) -> Result<()> {
        if self.reps < 2 || self.quad_points == 0 || self.t_points == 0 {
            return Err(Error::InvalidParameter(
                "need at least two repetitions and one node in s and t".into(),
            ));
        }
        if !(self.zeta_cutoff > 0.0) {
            return Err(Error::InvalidParameter("cutoff must be positive".into()));
        }
        Ok(())
    }

    fn nodes(&self, domain: &Interval) -> (Vec<f64>, Vec<f64>) {
        GaussLegendre::new(self.quad_points).nodes_on(domain.a(), domain.b())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

fn mean_and_stderr(xs: &[f64]) -> McEstimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    McEstimate {
        value: mean,
        stderr: (var / n).sqrt(),
    }
}

const M1_LABEL: u64 = 0x6d31;
const SIGMA1_LABEL: u64 = 0x7331;
const M2_LABEL: u64 = 0x6d32;

fn paths<R: Rng>(groups: usize, half_width: f64, step: f64, rng: &mut R) -> Result<Vec<BrownianGrid>> {
    (0..groups)
        .map(|_| BrownianGrid::simulate(half_width, step, rng))
        .collect()
}

/// `m_1 = Σ_{i<j} ∫ |4 f_0'(s)|^{1/3} E|Y_si(0) − Y_sj(0)| ds`; quadrature
/// in `s` is applied to each Monte Carlo draw.
pub fn estimate_m1(mf: &ModelFunctions, cfg: &LimitConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let (nodes, weights) = cfg.nodes(&mf.domain);
    mf.check(&nodes)?;
    let j_count = mf.groups();
    let seed = derive_seed(cfg.seed, M1_LABEL, 0);
    let draws = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r);
            let zetas = paths(j_count, cfg.half_width, cfg.step, &mut rng)?
                .iter()
                .map(|p| simulate_zeta(0.0, p))
                .collect::<Result<Vec<_>>>()?;
            let mut total = 0.0;
            for (&s, &w) in nodes.iter().zip(&weights) {
                let scale = (4.0 * (mf.f0_prime)(s).abs()).cbrt();
                for i in 0..j_count {
                    for j in i + 1..j_count {
                        let d = mf.kappa(i, s) * zetas[i] - mf.kappa(j, s) * zetas[j];
                        total += w * scale * d.abs();
                    }
                }
            }
            Ok(total)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_and_stderr(&draws))
}

/// `8 ∫ cov(B(s), I(s)) ds` from per-draw values `B_r(s)` and
/// `I_r(s) = ∫_0^{t_max} A_r(s, t) dt`.
fn integrated_covariance(per_draw: &[(Vec<f64>, Vec<f64>)], weights: &[f64]) -> McEstimate {
    let r = per_draw.len() as f64;
    let k = weights.len();
    let mut b_mean = vec![0.0; k];
    let mut i_mean = vec![0.0; k];
    for (b, i) in per_draw {
        for s in 0..k {
            b_mean[s] += b[s] / r;
            i_mean[s] += i[s] / r;
        }
    }
    let z: Vec<f64> = per_draw
        .iter()
        .map(|(b, i)| {
            8.0 * (0..k)
                .map(|s| weights[s] * (b[s] - b_mean[s]) * (i[s] - i_mean[s]))
                .sum::<f64>()
        })
        .collect();
    let mut est = mean_and_stderr(&z);
    // Unbiased covariance.
    est.value *= r / (r - 1.0);
    est
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    dt * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

/// `σ_1² = 8 Σ_{i<j} Σ_{l<m} ∫∫ cov(|Y_si(t) − Y_sj(t)|, |Y_sl(0) − Y_sm(0)|) dt ds`
/// with `Y_sj(t)` and `Y_sj(0)` taken from the same path.
pub fn estimate_sigma1(mf: &ModelFunctions, cfg: &LimitConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let (nodes, weights) = cfg.nodes(&mf.domain);
    mf.check(&nodes)?;
    let j_count = mf.groups();
    let kappas: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&s| (0..j_count).map(|j| mf.kappa(j, s)).collect())
        .collect();
    let (t_max, half_width) = t_range(&kappas, cfg);
    let seed = derive_seed(cfg.seed, SIGMA1_LABEL, 0);
    let per_draw = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r);
            let solvers: Vec<ArgmaxSolver> = paths(j_count, half_width, cfg.step, &mut rng)?
                .iter()
                .map(ArgmaxSolver::from_path)
                .collect();
            let mut b = Vec::with_capacity(nodes.len());
            let mut integrals = Vec::with_capacity(nodes.len());
            for (s, kap) in kappas.iter().enumerate() {
                let dt = t_max[s] / cfg.t_points as f64;
                let mut a = Vec::with_capacity(cfg.t_points + 1);
                for step in 0..=cfg.t_points {
                    let t = dt * step as f64;
                    let y = (0..j_count)
                        .map(|j| Ok(kap[j] * solvers[j].argmax(t / kap[j])?))
                        .collect::<Result<Vec<f64>>>()?;
                    let mut sum = 0.0;
                    for i in 0..j_count {
                        for j in i + 1..j_count {
                            sum += (y[i] - y[j]).abs();
                        }
                    }
                    a.push(sum);
                }
                b.push(a[0]);
                integrals.push(trapezoid(&a, dt));
            }
            Ok((b, integrals))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(integrated_covariance(&per_draw, &weights))
}

/// Upper limits `t_max(s)` and the path half width they require.
fn t_range(kappas: &[Vec<f64>], cfg: &LimitConfig) -> (Vec<f64>, f64) {
    let mut half_width = cfg.half_width;
    let t_max = kappas
        .iter()
        .map(|k| {
            let hi = k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = k.iter().copied().fold(f64::INFINITY, f64::min);
            half_width = half_width.max(cfg.zeta_cutoff * hi / lo + cfg.half_width);
            cfg.zeta_cutoff * hi
        })
        .collect();
    (t_max, half_width)
}

/// `W̃_{s0} = Σ_j (c_j L_j'(s) / L_0'(s))^{1/2} W_j` on the common grid.
pub fn combined_path(mf: &ModelFunctions, s: f64, paths: &[BrownianGrid]) -> Result<BrownianGrid> {
    let l0p = mf.l0_prime(s);
    let len = paths[0].values().len();
    let mut values = vec![0.0; len];
    for (j, p) in paths.iter().enumerate() {
        if p.values().len() != len || p.step() != paths[0].step() {
            return Err(Error::InvalidParameter("paths must share a grid".into()));
        }
        let w = (mf.c(j) * (mf.l_prime[j])(s) / l0p).sqrt();
        for (v, x) in values.iter_mut().zip(p.values()) {
            *v += w * x;
        }
    }
    BrownianGrid::from_values(paths[0].step(), values)
}

/// Inverse of `L_0` by bisection, bracketed on a cached grid.
#[derive(Debug, Clone)]
struct L0Inverse {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl L0Inverse {
    const CELLS: usize = 4096;
    const TOL: f64 = 1e-10;

    fn new(mf: &ModelFunctions) -> Result<Self> {
        let (a, len) = (mf.domain.a(), mf.domain.length());
        let grid: Vec<f64> = (0..=Self::CELLS)
            .map(|i| a + len * i as f64 / Self::CELLS as f64)
            .collect();
        let values: Vec<f64> = grid.iter().map(|&t| mf.l0(t)).collect();
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InversionFailure(
                "L_0 is not strictly increasing on the domain".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    fn invert(&self, mf: &ModelFunctions, y: f64) -> f64 {
        let (a, b) = (mf.domain.a(), mf.domain.b());
        let last = self.values.len() - 1;
        if y <= self.values[0] {
            return a + (y - self.values[0]) / mf.l0_prime(a);
        }
        if y >= self.values[last] {
            return b + (y - self.values[last]) / mf.l0_prime(b);
        }
        let k = self.values.partition_point(|&v| v <= y);
        let (mut lo, mut hi) = (self.grid[k - 1], self.grid[k]);
        while hi - lo > Self::TOL {
            let mid = 0.5 * (lo + hi);
            if mf.l0(mid) <= y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Time changes `u ↦ n^{1/3}{L_j(L_0^{-1}(L_0(s) + n^{-1/3} u)) − L_j(s)}` on a
/// grid of `u`, one row per group.
fn time_changes(
    mf: &ModelFunctions,
    inverse: &L0Inverse,
    s: f64,
    n: usize,
    us: &[f64],
) -> Vec<Vec<f64>> {
    let scale = (n as f64).cbrt();
    let base = mf.l0(s);
    let xs: Vec<f64> = us
        .iter()
        .map(|&u| inverse.invert(mf, base + u / scale))
        .collect();
    (0..mf.groups())
        .map(|j| {
            let lj = mf.l_ext(j, s);
            xs.iter().map(|&x| scale * (mf.l_ext(j, x) - lj)).collect()
        })
        .collect()
}

fn hat_values(changes: &[Vec<f64>], mf: &ModelFunctions, paths: &[BrownianGrid]) -> Result<Vec<f64>> {
    let len = changes[0].len();
    let mut values = vec![0.0; len];
    for (j, row) in changes.iter().enumerate() {
        let w = mf.c(j).sqrt();
        for (v, &x) in values.iter_mut().zip(row) {
            *v += w * paths[j].eval(x)?;
        }
    }
    Ok(values)
}

/// `Ŵ_{s0}` on the grid `{kδ : |k| ≤ half_width/δ}` for sample size `n`.
pub fn hat_path(
    mf: &ModelFunctions,
    s: f64,
    n: usize,
    paths: &[BrownianGrid],
    half_width: f64,
) -> Result<BrownianGrid> {
    let step = paths[0].step();
    let grid = BrownianGrid::zero(half_width, step)?;
    let inverse = L0Inverse::new(mf)?;
    let changes = time_changes(mf, &inverse, s, n, &grid.times());
    BrownianGrid::from_values(step, hat_values(&changes, mf, paths)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolConstants {
    pub m2: McEstimate,
    pub sigma2_sq: McEstimate,
    /// `L_j' / L_0'` constant in `s`: `m_2` does not depend on `n`.
    pub proportional: bool,
    /// Sample size used for `m_2`, if it mattered.
    pub n: Option<usize>,
}

/// `m_2` and `σ_2²`. In the proportional case `Ŵ_{s0}` is replaced by
/// `W̃_{s0}` and `n` is ignored; otherwise `n` is required.
pub fn estimate_m2_sigma2(
    mf: &ModelFunctions,
    n: Option<usize>,
    cfg: &LimitConfig,
) -> Result<PoolConstants> {
    cfg.validate()?;
    let (nodes, weights) = cfg.nodes(&mf.domain);
    mf.check(&nodes)?;
    let proportional = mf.is_proportional(&nodes);
    let n = match (proportional, n) {
        (true, _) => None,
        (false, Some(n)) if n >= 1 => Some(n),
        (false, _) => {
            return Err(Error::InvalidParameter(
                "the pooled centering depends on n here; a sample size is required".into(),
            ))
        }
    };
    let j_count = mf.groups();
    // Index j_count holds the pooled scale L_0'(s)^{1/3}.
    let kappas: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&s| {
            (0..j_count)
                .map(|j| mf.kappa(j, s))
                .chain(std::iter::once(mf.l0_prime(s).cbrt()))
                .collect()
        })
        .collect();
    let (t_max, mut half_width) = t_range(&kappas, cfg);

    let hat = match n {
        Some(n) => {
            let inverse = L0Inverse::new(mf)?;
            let us = BrownianGrid::zero(cfg.half_width, cfg.step)?.times();
            let changes: Vec<Vec<Vec<f64>>> = nodes
                .iter()
                .map(|&s| time_changes(mf, &inverse, s, n, &us))
                .collect();
            let reach = changes
                .iter()
                .flatten()
                .flatten()
                .fold(0.0f64, |m, x| m.max(x.abs()));
            half_width = half_width.max(reach + cfg.step);
            Some((us, changes))
        }
        None => None,
    };

    let seed = derive_seed(cfg.seed, M2_LABEL, 0);
    let per_draw = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r);
            let ps = paths(j_count, half_width, cfg.step, &mut rng)?;
            let solvers: Vec<ArgmaxSolver> = ps.iter().map(ArgmaxSolver::from_path).collect();
            let zeta0 = solvers
                .iter()
                .map(|s| s.argmax(0.0))
                .collect::<Result<Vec<f64>>>()?;
            let mut m2 = 0.0;
            let mut b = Vec::with_capacity(nodes.len());
            let mut integrals = Vec::with_capacity(nodes.len());
            for (si, &s) in nodes.iter().enumerate() {
                let kap = &kappas[si];
                let k0 = kap[j_count];
                let tilde = ArgmaxSolver::from_path(&combined_path(mf, s, &ps)?);
                let hat_zeta = match &hat {
                    Some((us, changes)) => {
                        ArgmaxSolver::new(us, &hat_values(&changes[si], mf, &ps)?).argmax(0.0)?
                    }
                    None => tilde.argmax(0.0)?,
                };
                let scale = (4.0 * (mf.f0_prime)(s).abs()).cbrt();
                for j in 0..j_count {
                    m2 += weights[si] * scale * (k0 * hat_zeta - kap[j] * zeta0[j]).abs();
                }
                let dt = t_max[si] / cfg.t_points as f64;
                let mut a = Vec::with_capacity(cfg.t_points + 1);
                for step in 0..=cfg.t_points {
                    let t = dt * step as f64;
                    let y0 = k0 * tilde.argmax(t / k0)?;
                    let mut sum = 0.0;
                    for j in 0..j_count {
                        sum += (kap[j] * solvers[j].argmax(t / kap[j])? - y0).abs();
                    }
                    a.push(sum);
                }
                b.push(a[0]);
                integrals.push(trapezoid(&a, dt));
            }
            Ok((m2, (b, integrals)))
        })
        .collect::<Result<Vec<_>>>()?;
    let m2_draws: Vec<f64> = per_draw.iter().map(|d| d.0).collect();
    let cov_draws: Vec<(Vec<f64>, Vec<f64>)> = per_draw.into_iter().map(|d| d.1).collect();
    Ok(PoolConstants {
        m2: mean_and_stderr(&m2_draws),
        sigma2_sq: integrated_covariance(&cov_draws, &weights),
        proportional,
        n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitConstants {
    pub m1: McEstimate,
    pub sigma1_sq: McEstimate,
    pub m2: McEstimate,
    pub sigma2_sq: McEstimate,
    pub proportional: bool,
    pub n: Option<usize>,
}

pub fn estimate_constants(
    mf: &ModelFunctions,
    n: Option<usize>,
    cfg: &LimitConfig,
) -> Result<LimitConstants> {
    let pooled = estimate_m2_sigma2(mf, n, cfg)?;
    Ok(LimitConstants {
        m1: estimate_m1(mf, cfg)?,
        sigma1_sq: estimate_sigma1(mf, cfg)?,
        m2: pooled.m2,
        sigma2_sq: pooled.sigma2_sq,
        proportional: pooled.proportional,
        n: pooled.n,
    })
}

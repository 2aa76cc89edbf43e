//! Observation models and their cumulative estimators.
//!
//! Each group of observations yields a cadlag [`CumulativeProcess`] whose
//! LCM slope estimates the group's decreasing function: the empirical
//! distribution function for densities, the scaled partial sums of the
//! responses for regression on a uniform design, and the Nelson–Aalen
//! estimator for hazards under right censoring.

use rand::Rng;

use crate::error::{Error, Result};
use crate::step_core::{CumulativeProcess, Interval};

/// Independent draws from one group's density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySample {
    pub group_id: usize,
    pub observations: Vec<f64>,
}

impl DensitySample {
    pub fn new(group_id: usize, observations: Vec<f64>) -> Result<Self> {
        if observations.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite observation".into()));
        }
        Ok(Self {
            group_id,
            observations,
        })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Responses `Y_1, …, Y_n` observed at `t_i = a + (b − a) i / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    pub group_id: usize,
    pub responses: Vec<f64>,
}

impl RegressionSample {
    pub fn new(group_id: usize, responses: Vec<f64>) -> Result<Self> {
        if responses.iter().any(|y| !y.is_finite()) {
            return Err(Error::InvalidParameter("non-finite response".into()));
        }
        Ok(Self {
            group_id,
            responses,
        })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// Design points reconstructed from the group size.
    pub fn design(&self, domain: &Interval) -> Vec<f64> {
        design_points(domain, self.responses.len())
    }
}

/// `t_i = a + (b − a) i / n` for `i = 1, …, n`.
pub fn design_points(domain: &Interval, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| {
            if i == n {
                domain.b()
            } else {
                domain.a() + domain.length() * i as f64 / n as f64
            }
        })
        .collect()
}

/// Right-censored pairs `(X, Δ)` with `X = min(T, Y)` and `Δ = 1{T ≤ Y}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredSample {
    pub group_id: usize,
    pub times: Vec<f64>,
    pub events: Vec<bool>,
}

impl CensoredSample {
    pub fn new(group_id: usize, times: Vec<f64>, events: Vec<bool>) -> Result<Self> {
        if times.len() != events.len() {
            return Err(Error::InvalidParameter(format!(
                "{} times but {} event indicators",
                times.len(),
                events.len()
            )));
        }
        if times.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidParameter(
                "censored times must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            group_id,
            times,
            events,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Pairs sorted by time, events before censorings at tied times.
    fn sorted_pairs(&self) -> Vec<(f64, bool)> {
        let mut pairs: Vec<(f64, bool)> = self
            .times
            .iter()
            .copied()
            .zip(self.events.iter().copied())
            .collect();
        pairs.sort_by(|l, r| l.0.total_cmp(&r.0).then(r.1.cmp(&l.1)));
        pairs
    }
}

/// Group proportions `c_j = n_j / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupWeights {
    c: Vec<f64>,
}

impl GroupWeights {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() || c.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("weights must be positive".into()));
        }
        let total: f64 = c.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { c })
    }

    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let n: usize = sizes.iter().sum();
        if sizes.contains(&0) {
            return Err(Error::EmptySample);
        }
        Self::new(sizes.iter().map(|&k| k as f64 / n as f64).collect())
    }

    pub fn equal(groups: usize) -> Result<Self> {
        Self::from_sizes(&vec![1; groups])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
}

/// Sorted distinct values with `#{x > value}` for each.
fn exceedance_counts(sorted: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = sorted.len();
    let mut xs = Vec::new();
    let mut above = Vec::new();
    let mut i = 0;
    while i < n {
        let x = sorted[i];
        while i < n && sorted[i] == x {
            i += 1;
        }
        xs.push(x);
        above.push(n - i);
    }
    (xs, above)
}

/// Empirical distribution function `F(t) = (1/n) Σ 1{X ≤ t}` on `domain`.
pub fn empirical_cdf(sample: &DensitySample, domain: &Interval) -> Result<CumulativeProcess> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(x) = sample.observations.iter().find(|&&x| !domain.contains(x)) {
        return Err(Error::DomainMismatch(format!(
            "observation {x} outside [{}, {}]",
            domain.a(),
            domain.b()
        )));
    }
    let mut sorted = sample.observations.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let (xs, above) = exceedance_counts(&sorted);
    // Survival form, shared with the Kaplan–Meier estimator so that both
    // agree bit for bit without censoring.
    let values = above.iter().map(|&r| 1.0 - r as f64 / n).collect();
    CumulativeProcess::new(*domain, xs, values, 0.0)
}

/// `F(t) = (1/n) Σ Y_i 1{t_i ≤ t}` on the uniform design.
pub fn regression_cumsum(sample: &RegressionSample, domain: &Interval) -> Result<CumulativeProcess> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = sample.len() as f64;
    let design = sample.design(domain);
    let mut values = Vec::with_capacity(sample.len());
    let mut partial = 0.0;
    for &y in &sample.responses {
        partial += y;
        values.push(partial / n);
    }
    CumulativeProcess::new(*domain, design, values, 0.0)
}

/// Nelson–Aalen cumulative hazard restricted to `[0, upper]`.
///
/// At each distinct uncensored time `t_k` the estimate increases by
/// `d_k / n_k`, with `n_k = #{X ≥ t_k}` and `d_k` the number of events at
/// `t_k`.
pub fn nelson_aalen(sample: &CensoredSample, upper: f64) -> Result<CumulativeProcess> {
    let domain = Interval::new(0.0, upper)?;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let pairs = sample.sorted_pairs();
    let n = pairs.len();
    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    let mut cumulative = 0.0;
    let mut i = 0;
    while i < n {
        let t = pairs[i].0;
        let at_risk = n - i;
        let mut events = 0usize;
        while i < n && pairs[i].0 == t {
            events += usize::from(pairs[i].1);
            i += 1;
        }
        if events > 0 && t <= upper {
            cumulative += events as f64 / at_risk as f64;
            breakpoints.push(t);
            values.push(cumulative);
        }
    }
    if breakpoints.is_empty() {
        return Err(Error::NoEvents);
    }
    CumulativeProcess::new(domain, breakpoints, values, 0.0)
}

/// Product-limit estimate as a distribution function plus its samplable form.
#[derive(Debug, Clone, PartialEq)]
pub struct KaplanMeier {
    process: CumulativeProcess,
    atoms: Vec<f64>,
    cumulative_mass: Vec<f64>,
}

impl KaplanMeier {
    /// Distribution function `1 − S(t)` on `[0, max X]`.
    pub fn process(&self) -> &CumulativeProcess {
        &self.process
    }

    /// Support points of the sampling distribution. When the largest
    /// observation is not an event, the leftover mass sits on it.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let prev = std::iter::once(0.0).chain(self.cumulative_mass.iter().copied());
        self.atoms
            .iter()
            .zip(self.cumulative_mass.iter().zip(prev))
            .map(|(&x, (&c, p))| (x, c - p))
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cumulative_mass.last().unwrap();
        let u: f64 = rng.random::<f64>() * total;
        let k = self.cumulative_mass.partition_point(|&c| c <= u);
        self.atoms[k.min(self.atoms.len() - 1)]
    }
}

/// Kaplan–Meier estimator. With `of_censoring` the roles of events and
/// censorings are swapped, so the result estimates the censoring
/// distribution.
pub fn kaplan_meier(sample: &CensoredSample, of_censoring: bool) -> Result<KaplanMeier> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut pairs: Vec<(f64, bool)> = sample
        .times
        .iter()
        .zip(&sample.events)
        .map(|(&x, &d)| (x, d != of_censoring))
        .collect();
    pairs.sort_by(|l, r| l.0.total_cmp(&r.0).then(r.1.cmp(&l.1)));
    let n = pairs.len();
    let upper = pairs[n - 1].0;
    let domain = Interval::new(0.0, if upper > 0.0 { upper } else { 1.0 })?;

    // S(t_K) = (n_K − d_K)/n · Π correction factors, where the factors
    // account for censorings and are exactly 1 when nothing is censored.
    let mut correction = 1.0;
    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    let mut survival_prev = 1.0;
    let mut atoms = Vec::new();
    let mut cumulative_mass = Vec::new();
    let mut previous_remaining = n;
    let mut i = 0;
    while i < n {
        let t = pairs[i].0;
        let at_risk = n - i;
        let mut events = 0usize;
        while i < n && pairs[i].0 == t {
            events += usize::from(pairs[i].1);
            i += 1;
        }
        if events == 0 {
            continue;
        }
        if at_risk != previous_remaining {
            correction *= previous_remaining as f64 / at_risk as f64;
        }
        let remaining = at_risk - events;
        let survival = remaining as f64 / n as f64 * correction;
        previous_remaining = remaining;
        breakpoints.push(t);
        values.push(1.0 - survival);
        atoms.push(t);
        cumulative_mass.push(1.0 - survival);
        survival_prev = survival;
    }
    if survival_prev > 0.0 {
        if atoms.last() == Some(&upper) {
            *cumulative_mass.last_mut().unwrap() = 1.0;
        } else {
            atoms.push(upper);
            cumulative_mass.push(1.0);
        }
    }
    Ok(KaplanMeier {
        process: CumulativeProcess::new(domain, breakpoints, values, 0.0)?,
        atoms,
        cumulative_mass,
    })
}

/// Pointwise `Σ c_j F_j` on the union of the breakpoints.
pub fn pool(processes: &[CumulativeProcess], weights: &GroupWeights) -> Result<CumulativeProcess> {
    if processes.len() != weights.len() {
        return Err(Error::InvalidParameter(format!(
            "{} processes but {} weights",
            processes.len(),
            weights.len()
        )));
    }
    let domain = processes[0].domain();
    if processes.iter().any(|p| p.domain() != domain) {
        return Err(Error::DomainMismatch(
            "pooled processes must share a domain".into(),
        ));
    }
    let mut xs: Vec<f64> = processes
        .iter()
        .flat_map(|p| p.breakpoints().iter().copied())
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let c = weights.as_slice();
    let combine = |t: f64| -> f64 { processes.iter().zip(c).map(|(p, &w)| w * p.eval(t)).sum() };
    let base = processes
        .iter()
        .zip(c)
        .map(|(p, &w)| w * p.base_value())
        .sum();
    let values = xs.iter().map(|&t| combine(t)).collect();
    CumulativeProcess::new(domain, xs, values, base)
}

/// Empirical `q`-quantile (order statistic `⌈q n⌉`) of the pooled times;
/// the default upper end of the hazard domain.
pub fn pooled_time_quantile(samples: &[CensoredSample], q: f64) -> Result<f64> {
    let mut times: Vec<f64> = samples.iter().flat_map(|s| s.times.iter().copied()).collect();
    if times.is_empty() {
        return Err(Error::EmptySample);
    }
    times.sort_by(f64::total_cmp);
    let k = ((q * times.len() as f64).ceil() as usize).clamp(1, times.len());
    Ok(times[k - 1])
}

//! Boundary-corrected triweight smoothing of a pooled cumulative estimate.
//!
//! The smoothed measure is either the derivative of the LCM (smoothed
//! Grenander) or the raw jump measure of the process. Both are handled in
//! closed form: for the Grenander source `f̂ = Σ p_k 1{x ≤ τ_k}` and summation
//! by parts turns the convolution into sums of kernel tail integrals; for the
//! raw source the convolution is a plain sum of kernels over the atoms.
//!
//! Near the endpoints the estimate is corrected either by local linear
//! extrapolation from `a + h` (resp. `b − h`) or by the boundary kernel
//! `φ(s) K(u) + ψ(s) u K(u)`, whose zeroth and first moments over the
//! truncated support are 1 and 0.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::GL8;
use crate::step_core::{grenander, CumulativeProcess, Interval, MonotoneStepEstimate};

/// `K(0)` of the triweight kernel.
pub const KERNEL_AT_ZERO: f64 = 35.0 / 32.0;

/// Sub-panels per piece inside the boundary strips, where the boundary
/// kernel coefficients are rational rather than polynomial in `t`.
const STRIP_PANELS: usize = 8;

/// Points of the grid used for the infimum and the supremum of an estimate.
pub const DENSITY_GRID_POINTS: usize = 10_001;

/// Triweight kernel `K(u) = (35/32)(1 − u²)³` on `[−1, 1]`.
pub fn kernel(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        let w = 1.0 - u * u;
        KERNEL_AT_ZERO * w * w * w
    }
}

pub fn kernel_derivative(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        let w = 1.0 - u * u;
        -6.0 * KERNEL_AT_ZERO * u * w * w
    }
}

/// `∫_{−1}^{s} u^j K(u) du` for `j ∈ {0, 1, 2}`; `s` is clamped to `[−1, 1]`.
pub fn kernel_moment(j: usize, s: f64) -> f64 {
    if s <= -1.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return [1.0, 0.0, 1.0 / 9.0][j];
    }
    let s2 = s * s;
    match j {
        0 => 0.5 + KERNEL_AT_ZERO * s * (1.0 - s2 + s2 * s2 * (0.6 - s2 / 7.0)),
        1 => {
            KERNEL_AT_ZERO
                * (s2 * (0.5 + s2 * (-0.75 + s2 * (0.5 - s2 / 8.0))) - 0.125)
        }
        2 => {
            KERNEL_AT_ZERO
                * (s * s2 * (1.0 / 3.0 + s2 * (-0.6 + s2 * (3.0 / 7.0 - s2 / 9.0)))
                    + 16.0 / 315.0)
        }
        _ => panic!("kernel moment of order {j} is not defined here"),
    }
}

/// `𝕂_h(x) = ∫_{x/h}^{∞} K(u) du`.
pub fn kernel_tail(x: f64, h: f64) -> f64 {
    1.0 - kernel_moment(0, x / h)
}

/// Solution `(φ, ψ)` of the boundary moment system at relative position `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCoefficients {
    pub s: f64,
    pub phi: f64,
    pub psi: f64,
}

pub fn boundary_coeffs(s: f64) -> Result<BoundaryCoefficients> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!(
            "boundary position {s} outside [-1, 1]"
        )));
    }
    let (m0, m1, m2) = (kernel_moment(0, s), kernel_moment(1, s), kernel_moment(2, s));
    let det = m0 * m2 - m1 * m1;
    if det <= 0.0 {
        return Err(Error::DegenerateEstimate(format!(
            "singular boundary moment system at s = {s}"
        )));
    }
    Ok(BoundaryCoefficients {
        s,
        phi: m2 / det,
        psi: -m1 / det,
    })
}

/// `(φ, ψ, φ', ψ')` at `s ∈ [0, 1]`.
fn coeffs_with_slopes(s: f64) -> (f64, f64, f64, f64) {
    let (m0, m1, m2) = (kernel_moment(0, s), kernel_moment(1, s), kernel_moment(2, s));
    let k = kernel(s);
    let (d0, d1, d2) = (k, s * k, s * s * k);
    let det = m0 * m2 - m1 * m1;
    let ddet = d0 * m2 + m0 * d2 - 2.0 * m1 * d1;
    let phi = m2 / det;
    let psi = -m1 / det;
    let dphi = (d2 * det - m2 * ddet) / (det * det);
    let dpsi = -(d1 * det - m1 * ddet) / (det * det);
    (phi, psi, dphi, dpsi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Correction {
    LocalLinear,
    BoundaryKernel,
}

impl Correction {
    pub fn name(&self) -> &'static str {
        match self {
            Correction::LocalLinear => "local-linear",
            Correction::BoundaryKernel => "boundary-kernel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    /// Density `Σ p_k 1{x ≤ τ_k}` of the LCM.
    Grenander,
    /// Atomic measure of the raw process.
    Empirical,
}

impl SourceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SourceKind::Grenander => "grenander",
            SourceKind::Empirical => "empirical",
        }
    }
}

/// Measure to be smoothed, as sorted atoms `(location, mass)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothSource {
    kind: SourceKind,
    domain: Interval,
    locations: Vec<f64>,
    masses: Vec<f64>,
    /// `prefix[k] = Σ_{i<k} masses[i]`.
    prefix: Vec<f64>,
}

impl SmoothSource {
    fn build(kind: SourceKind, domain: Interval, atoms: Vec<(f64, f64)>) -> Self {
        let (locations, masses): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
        let mut prefix = Vec::with_capacity(masses.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &m in &masses {
            acc += m;
            prefix.push(acc);
        }
        Self {
            kind,
            domain,
            locations,
            masses,
            prefix,
        }
    }

    /// Jumps `p_k` at `τ_k` of a step estimate; a nonzero terminal level
    /// becomes a jump at `b`.
    pub fn from_step(est: &MonotoneStepEstimate) -> Self {
        let mut atoms: Vec<(f64, f64)> = est
            .jump_locations()
            .iter()
            .copied()
            .zip(est.jump_sizes())
            .collect();
        let last = est.terminal_level();
        if last != 0.0 {
            atoms.push((est.domain().b(), last));
        }
        Self::build(SourceKind::Grenander, est.domain(), atoms)
    }

    /// Jumps of the process itself.
    pub fn from_process(process: &CumulativeProcess) -> Self {
        let atoms = process.jumps().filter(|&(_, m)| m != 0.0).collect();
        Self::build(SourceKind::Empirical, process.domain(), atoms)
    }

    /// LCM slope of `process`, ready for smoothing.
    pub fn smoothed_grenander(process: &CumulativeProcess) -> Result<Self> {
        Ok(Self::from_step(&grenander(process)?))
    }

    pub fn new(kind: SourceKind, process: &CumulativeProcess) -> Result<Self> {
        match kind {
            SourceKind::Grenander => Self::smoothed_grenander(process),
            SourceKind::Empirical => Ok(Self::from_process(process)),
        }
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.locations.iter().copied().zip(self.masses.iter().copied())
    }

    /// Atom index range with `|t − location| < h`.
    fn window(&self, t: f64, h: f64) -> (usize, usize) {
        let lo = self.locations.partition_point(|&x| x <= t - h);
        let hi = self.locations.partition_point(|&x| x < t + h);
        (lo, hi.max(lo))
    }

    /// `(G_0, G_1)` with `G_m(t) = ∫ v^m K(v) / h dμ`, `v = (t − x)/h`.
    fn moments(&self, t: f64, h: f64) -> (f64, f64) {
        let (lo, hi) = self.window(t, h);
        match self.kind {
            SourceKind::Grenander => {
                let sa = (t - self.domain.a()) / h;
                let total = self.prefix[self.masses.len()];
                let below = self.prefix[lo];
                let mut g0 = kernel_moment(0, sa) * total - below;
                let mut g1 = kernel_moment(1, sa) * total;
                for k in lo..hi {
                    let v = (t - self.locations[k]) / h;
                    g0 -= self.masses[k] * kernel_moment(0, v);
                    g1 -= self.masses[k] * kernel_moment(1, v);
                }
                (g0, g1)
            }
            SourceKind::Empirical => {
                let mut g0 = 0.0;
                let mut g1 = 0.0;
                for k in lo..hi {
                    let v = (t - self.locations[k]) / h;
                    let w = self.masses[k] * kernel(v);
                    g0 += w;
                    g1 += w * v;
                }
                (g0 / h, g1 / h)
            }
        }
    }

    /// Time derivatives of [`Self::moments`].
    fn moment_slopes(&self, t: f64, h: f64) -> (f64, f64) {
        let (lo, hi) = self.window(t, h);
        match self.kind {
            SourceKind::Grenander => {
                let sa = ((t - self.domain.a()) / h).clamp(-1.0, 1.0);
                let total = self.prefix[self.masses.len()];
                let ka = kernel(sa);
                let mut d0 = ka * total;
                let mut d1 = sa * ka * total;
                for k in lo..hi {
                    let v = (t - self.locations[k]) / h;
                    let kv = self.masses[k] * kernel(v);
                    d0 -= kv;
                    d1 -= v * kv;
                }
                (d0 / h, d1 / h)
            }
            SourceKind::Empirical => {
                let mut d0 = 0.0;
                let mut d1 = 0.0;
                for k in lo..hi {
                    let v = (t - self.locations[k]) / h;
                    let m = self.masses[k];
                    let kd = kernel_derivative(v);
                    d0 += m * kd;
                    d1 += m * (kernel(v) + v * kd);
                }
                (d0 / (h * h), d1 / (h * h))
            }
        }
    }

    /// Breakpoints of the piecewise-polynomial structure in `t`.
    fn piece_ends(&self, h: f64) -> Vec<f64> {
        let (a, b) = (self.domain.a(), self.domain.b());
        let mut ends = vec![a, b, a + h, b - h];
        for &x in &self.locations {
            for e in [x - h, x + h] {
                if a < e && e < b {
                    ends.push(e);
                }
            }
        }
        ends.sort_by(f64::total_cmp);
        ends.dedup();
        ends
    }
}

/// Boundary-corrected kernel estimate with bandwidth `h < (b − a)/2`.
#[derive(Debug, Clone)]
pub struct SmoothEstimate {
    source: Arc<SmoothSource>,
    bandwidth: f64,
    correction: Correction,
}

impl SmoothEstimate {
    pub fn new(source: Arc<SmoothSource>, bandwidth: f64, correction: Correction) -> Result<Self> {
        let half = 0.5 * source.domain.length();
        if !(bandwidth > 0.0 && bandwidth < half) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth {bandwidth} outside (0, {half})"
            )));
        }
        Ok(Self {
            source,
            bandwidth,
            correction,
        })
    }

    pub fn source(&self) -> &SmoothSource {
        &self.source
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn correction(&self) -> Correction {
        self.correction
    }

    pub fn domain(&self) -> Interval {
        self.source.domain
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let h = self.bandwidth;
        let (a, b) = (self.domain().a(), self.domain().b());
        if t < a + h {
            match self.correction {
                Correction::BoundaryKernel => {
                    let (phi, psi, _, _) = coeffs_with_slopes((t - a) / h);
                    let (g0, g1) = self.source.moments(t, h);
                    phi * g0 + psi * g1
                }
                Correction::LocalLinear => self.linear_extension(a + h, t),
            }
        } else if t > b - h {
            match self.correction {
                Correction::BoundaryKernel => {
                    let (phi, psi, _, _) = coeffs_with_slopes((b - t) / h);
                    let (g0, g1) = self.source.moments(t, h);
                    phi * g0 - psi * g1
                }
                Correction::LocalLinear => self.linear_extension(b - h, t),
            }
        } else {
            self.source.moments(t, h).0
        }
    }

    fn linear_extension(&self, anchor: f64, t: f64) -> f64 {
        let h = self.bandwidth;
        self.source.moments(anchor, h).0 + self.source.moment_slopes(anchor, h).0 * (t - anchor)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let h = self.bandwidth;
        let (a, b) = (self.domain().a(), self.domain().b());
        if t < a + h {
            match self.correction {
                Correction::BoundaryKernel => {
                    let (phi, psi, dphi, dpsi) = coeffs_with_slopes((t - a) / h);
                    let (g0, g1) = self.source.moments(t, h);
                    let (d0, d1) = self.source.moment_slopes(t, h);
                    dphi / h * g0 + phi * d0 + dpsi / h * g1 + psi * d1
                }
                Correction::LocalLinear => self.source.moment_slopes(a + h, h).0,
            }
        } else if t > b - h {
            match self.correction {
                Correction::BoundaryKernel => {
                    let (phi, psi, dphi, dpsi) = coeffs_with_slopes((b - t) / h);
                    let (g0, g1) = self.source.moments(t, h);
                    let (d0, d1) = self.source.moment_slopes(t, h);
                    -dphi / h * g0 + phi * d0 + dpsi / h * g1 - psi * d1
                }
                Correction::LocalLinear => self.source.moment_slopes(b - h, h).0,
            }
        } else {
            self.source.moment_slopes(t, h).0
        }
    }

    /// `∫_a^b g(f̃(t)) dt` over the polynomial pieces of the estimate.
    fn integrate_pieces<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let h = self.bandwidth;
        let (a, b) = (self.domain().a(), self.domain().b());
        let ends = self.source.piece_ends(h);
        let strips = self.correction == Correction::BoundaryKernel;
        let mut total = 0.0;
        for w in ends.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let in_strip = strips && (hi <= a + h || lo >= b - h);
            let panels = if in_strip { STRIP_PANELS } else { 1 };
            let step = (hi - lo) / panels as f64;
            for p in 0..panels {
                let l = lo + step * p as f64;
                let r = if p + 1 == panels { hi } else { l + step };
                total += GL8.integrate(l, r, |t| g(self.evaluate(t)));
            }
        }
        total
    }

    pub fn integral(&self) -> f64 {
        self.integrate_pieces(|v| v)
    }

    pub fn integral_of_square(&self) -> f64 {
        self.integrate_pieces(|v| v * v)
    }

    /// `(min, max)` over an equispaced grid of [`DENSITY_GRID_POINTS`].
    pub fn grid_range(&self) -> (f64, f64) {
        let (a, len) = (self.domain().a(), self.domain().length());
        let last = (DENSITY_GRID_POINTS - 1) as f64;
        (0..DENSITY_GRID_POINTS)
            .map(|i| self.evaluate(a + len * i as f64 / last))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Least squares cross-validation criterion
/// `∫ f̃² − (2n/(n−1)) ∫ f̃ dF_n0 + 2 K(0) / ((n−1) h)`,
/// with `empirical` the pooled empirical distribution function.
pub fn lscv(est: &SmoothEstimate, empirical: &CumulativeProcess, n: usize) -> f64 {
    let nf = n as f64;
    let square = est.integral_of_square();
    let cross: f64 = empirical
        .jumps()
        .map(|(x, mass)| mass * est.evaluate(x))
        .sum();
    square - 2.0 * nf / (nf - 1.0) * cross + 2.0 * KERNEL_AT_ZERO / ((nf - 1.0) * est.bandwidth())
}

/// 40 log-spaced bandwidths in `[0.05 (b − a)/3, 0.45 (b − a)]`.
pub fn default_bandwidth_grid(domain: &Interval) -> Vec<f64> {
    const POINTS: usize = 40;
    let lo = 0.05 * domain.length() / 3.0;
    let hi = 0.45 * domain.length();
    let ratio = (hi / lo).ln();
    (0..POINTS)
        .map(|i| lo * (ratio * i as f64 / (POINTS - 1) as f64).exp())
        .collect()
}

/// Grid point minimizing [`lscv`]; ties go to the larger bandwidth.
pub fn select_bandwidth(
    source: &Arc<SmoothSource>,
    correction: Correction,
    empirical: &CumulativeProcess,
    n: usize,
    grid: &[f64],
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty bandwidth grid".into()));
    }
    let scores: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&h| {
            let est = SmoothEstimate::new(Arc::clone(source), h, correction)?;
            Ok((h, lscv(&est, empirical, n)))
        })
        .collect::<Result<_>>()?;
    let mut best = scores[0];
    for &(h, score) in &scores[1..] {
        if score < best.1 || (score == best.1 && h > best.0) {
            best = (h, score);
        }
    }
    Ok(best.0)
}

/// Shifted (and optionally normalized) version of a smooth estimate that is
/// nonnegative on the evaluation grid.
#[derive(Debug, Clone)]
pub struct NormalizedDensity {
    estimate: SmoothEstimate,
    shift: f64,
    normalizer: f64,
    grid_max: f64,
}

impl NormalizedDensity {
    pub fn estimate(&self) -> &SmoothEstimate {
        &self.estimate
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Maximum of [`Self::pdf`] on the evaluation grid.
    pub fn grid_max(&self) -> f64 {
        self.grid_max
    }

    pub fn domain(&self) -> Interval {
        self.estimate.domain()
    }

    pub fn pdf(&self, t: f64) -> f64 {
        ((self.estimate.evaluate(t) + self.shift) / self.normalizer).max(0.0)
    }
}

/// Shift `f̃` up by `−min(inf f̃, 0)` and divide by its integral.
pub fn make_density(est: &SmoothEstimate) -> Result<NormalizedDensity> {
    shifted(est, true)
}

/// Shift only: a nonnegative failure rate.
pub fn make_hazard(est: &SmoothEstimate) -> Result<NormalizedDensity> {
    shifted(est, false)
}

fn shifted(est: &SmoothEstimate, normalize: bool) -> Result<NormalizedDensity> {
    let (lo, hi) = est.grid_range();
    let shift = (-lo).max(0.0);
    let normalizer = if normalize {
        est.integral() + shift * est.domain().length()
    } else {
        1.0
    };
    if !(normalizer > 0.0 && normalizer.is_finite()) {
        return Err(Error::DegenerateEstimate(format!(
            "normalizing constant {normalizer} is not positive"
        )));
    }
    Ok(NormalizedDensity {
        estimate: est.clone(),
        shift,
        normalizer,
        grid_max: (hi + shift) / normalizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_jump_source() -> Arc<SmoothSource> {
        let d = Interval::new(0.0, 3.0).unwrap();
        let est = MonotoneStepEstimate::new(d, vec![1.5], vec![1.0, 0.0]).unwrap();
        Arc::new(SmoothSource::from_step(&est))
    }

    #[test]
    fn kernel_moments_closed_forms() {
        assert!((kernel_moment(0, 1.0) - 1.0).abs() < 1e-15);
        assert!(kernel_moment(1, 1.0).abs() < 1e-15);
        assert!((kernel_moment(2, 1.0) - 1.0 / 9.0).abs() < 1e-15);
        assert!((kernel_moment(0, 0.0) - 0.5).abs() < 1e-15);
        assert!((kernel_moment(1, 0.0) + 35.0 / 256.0).abs() < 1e-15);
        assert_eq!(kernel_moment(0, -1.0), 0.0);
        assert_eq!(kernel_moment(2, -3.0), 0.0);
    }

    #[test]
    fn kernel_tail_values() {
        assert!((kernel_tail(-0.5, 0.5) - 1.0).abs() < 1e-15);
        assert!((kernel_tail(0.0, 0.5) - 0.5).abs() < 1e-15);
        assert_eq!(kernel_tail(0.7, 0.5), 0.0);
    }

    #[test]
    fn boundary_coefficients() {
        let c = boundary_coeffs(1.0).unwrap();
        assert!((c.phi - 1.0).abs() < 1e-12 && c.psi.abs() < 1e-12);
        let c = boundary_coeffs(0.0).unwrap();
        assert!((c.phi - 6.1146).abs() < 5e-4, "phi = {}", c.phi);
        assert!((c.psi - 15.047).abs() < 5e-3, "psi = {}", c.psi);
        assert!(boundary_coeffs(1.5).is_err());
        assert!(boundary_coeffs(-1.0).is_err());
    }

    #[test]
    fn boundary_coefficients_solve_the_system() {
        for i in 0..=50 {
            let s = -0.9 + 1.9 * i as f64 / 50.0;
            let c = boundary_coeffs(s).unwrap();
            let (m0, m1, m2) = (kernel_moment(0, s), kernel_moment(1, s), kernel_moment(2, s));
            assert!((c.phi * m0 + c.psi * m1 - 1.0).abs() < 1e-10);
            assert!((c.phi * m1 + c.psi * m2).abs() < 1e-10);
        }
    }

    #[test]
    fn single_jump_midpoint() {
        let est = SmoothEstimate::new(single_jump_source(), 0.5, Correction::BoundaryKernel).unwrap();
        assert!((est.evaluate(1.5) - 0.5).abs() < 1e-15);
        assert!((est.evaluate(0.9) - 1.0).abs() < 1e-15);
        assert!(est.evaluate(2.1).abs() < 1e-15);
    }

    #[test]
    fn bandwidth_must_be_below_half_length() {
        assert!(SmoothEstimate::new(single_jump_source(), 1.5, Correction::BoundaryKernel).is_err());
        assert!(SmoothEstimate::new(single_jump_source(), 0.0, Correction::BoundaryKernel).is_err());
    }

    #[test]
    fn flat_estimate_has_zero_interior_derivative() {
        let d = Interval::new(0.0, 3.0).unwrap();
        let src = Arc::new(SmoothSource::from_step(&MonotoneStepEstimate::constant(d, 1.0 / 3.0)));
        for corr in [Correction::BoundaryKernel, Correction::LocalLinear] {
            let est = SmoothEstimate::new(Arc::clone(&src), 0.4, corr).unwrap();
            for t in [0.5, 1.0, 2.0, 2.6] {
                assert!(est.derivative(t).abs() < 1e-14);
                assert!((est.evaluate(t) - 1.0 / 3.0).abs() < 1e-14);
            }
            // The boundary kernel reproduces constants up to the endpoint.
            if corr == Correction::BoundaryKernel {
                assert!((est.evaluate(0.0) - 1.0 / 3.0).abs() < 1e-12);
                assert!((est.evaluate(3.0) - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn local_linear_strip_is_linear() {
        let d = Interval::new(0.0, 3.0).unwrap();
        let est = MonotoneStepEstimate::new(d, vec![0.5, 1.2, 2.0], vec![0.8, 0.5, 0.2, 0.1]).unwrap();
        let src = Arc::new(SmoothSource::from_step(&est));
        let sm = SmoothEstimate::new(src, 0.6, Correction::LocalLinear).unwrap();
        let slope = sm.derivative(0.6);
        for t in [0.0, 0.2, 0.59] {
            assert_eq!(sm.derivative(t), slope);
            assert!((sm.evaluate(t) - (sm.evaluate(0.6) + slope * (t - 0.6))).abs() < 1e-14);
        }
    }

    #[test]
    fn lscv_third_term() {
        let h: f64 = 0.5;
        let third = 2.0 * KERNEL_AT_ZERO / (100.0 * h);
        assert!((third - 0.04375).abs() < 1e-15);
    }

    #[test]
    fn lscv_constant_estimate_terms() {
        let d = Interval::new(0.0, 3.0).unwrap();
        let c = 1.0 / 3.0;
        let src = Arc::new(SmoothSource::from_step(&MonotoneStepEstimate::constant(d, c)));
        let est = SmoothEstimate::new(src, 0.5, Correction::BoundaryKernel).unwrap();
        let xs: Vec<f64> = (0..11).map(|i| 0.1 + 0.27 * i as f64).collect();
        let cdf = crate::models::empirical_cdf(&crate::models::DensitySample::new(0, xs).unwrap(), &d).unwrap();
        let n = 11usize;
        let nf = n as f64;
        let first_two = lscv(&est, &cdf, n) - 2.0 * KERNEL_AT_ZERO / ((nf - 1.0) * 0.5);
        let expected = c * c * 3.0 - 2.0 * nf / (nf - 1.0) * c;
        assert!((first_two - expected).abs() < 1e-12, "{first_two} vs {expected}");
    }

    #[test]
    fn select_bandwidth_edge_cases() {
        let d = Interval::new(0.0, 3.0).unwrap();
        let cdf = crate::models::empirical_cdf(
            &crate::models::DensitySample::new(0, vec![0.2, 0.5, 0.9, 1.4, 2.2]).unwrap(),
            &d,
        )
        .unwrap();
        let src = Arc::new(SmoothSource::smoothed_grenander(&cdf).unwrap());
        assert_eq!(
            select_bandwidth(&src, Correction::BoundaryKernel, &cdf, 5, &[0.7]).unwrap(),
            0.7
        );
        assert!(select_bandwidth(&src, Correction::BoundaryKernel, &cdf, 5, &[]).is_err());
    }

    #[test]
    fn default_grid_bounds() {
        let g = default_bandwidth_grid(&Interval::new(0.0, 3.0).unwrap());
        assert_eq!(g.len(), 40);
        assert!((g[0] - 0.05).abs() < 1e-12);
        assert!((g[39] - 1.35).abs() < 1e-12);
    }

    #[test]
    fn make_density_of_a_proper_density_is_unchanged() {
        let d = Interval::new(0.0, 3.0).unwrap();
        let src = Arc::new(SmoothSource::from_step(&MonotoneStepEstimate::constant(d, 1.0 / 3.0)));
        let est = SmoothEstimate::new(src, 0.5, Correction::BoundaryKernel).unwrap();
        let dens = make_density(&est).unwrap();
        assert_eq!(dens.shift(), 0.0);
        assert!((dens.normalizer() - 1.0).abs() < 1e-12);
        assert!((dens.pdf(1.0) - 1.0 / 3.0).abs() < 1e-12);
    }
}

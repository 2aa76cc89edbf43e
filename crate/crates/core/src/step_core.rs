//! Step processes, least concave majorants and their left-hand slopes.
//!
//! Evaluation conventions: a [`CumulativeProcess`] is right-continuous
//! (cadlag), a [`MonotoneStepEstimate`] is left-continuous with its value at
//! the left endpoint defined as the limit from the right.

use crate::error::{Error, Result};

/// Relative tolerance on hull cross-products.
const HULL_RTOL: f64 = 1e-12;

/// Closed interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, t: f64) -> bool {
        self.a <= t && t <= self.b
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.a <= other.a && other.b <= self.b
    }
}

/// Cadlag step process on `[a, b]`.
///
/// Holds `base_value` on `[a, breakpoints[0])` and `values[k]` on
/// `[breakpoints[k], breakpoints[k + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeProcess {
    domain: Interval,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    base_value: f64,
}

impl CumulativeProcess {
    pub fn new(
        domain: Interval,
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        base_value: f64,
    ) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if !base_value.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite process value".into()));
        }
        if breakpoints.iter().any(|&x| !domain.contains(x)) {
            return Err(Error::DomainMismatch(format!(
                "breakpoint outside [{}, {}]",
                domain.a, domain.b
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            domain,
            breakpoints,
            values,
            base_value,
        })
    }

    /// Builds the process `base + Σ size · 1{location ≤ t}`. Jumps at the same
    /// location are merged; zero net jumps are kept as breakpoints.
    pub fn from_jumps<I>(domain: Interval, base_value: f64, jumps: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut jumps: Vec<(f64, f64)> = jumps.into_iter().collect();
        if jumps.iter().any(|(x, s)| !x.is_finite() || !s.is_finite()) {
            return Err(Error::InvalidParameter("non-finite jump".into()));
        }
        jumps.sort_by(|l, r| l.0.total_cmp(&r.0));
        let mut breakpoints: Vec<f64> = Vec::with_capacity(jumps.len());
        let mut values: Vec<f64> = Vec::with_capacity(jumps.len());
        let mut level = base_value;
        for (x, size) in jumps {
            level += size;
            match breakpoints.last() {
                Some(&last) if last == x => *values.last_mut().unwrap() = level,
                _ => {
                    breakpoints.push(x);
                    values.push(level);
                }
            }
        }
        Self::new(domain, breakpoints, values, base_value)
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    /// Value of the last breakpoint `≤ t`, or the base value before the first.
    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&x| x <= t);
        if idx == 0 {
            self.base_value
        } else {
            self.values[idx - 1]
        }
    }

    /// `(location, size)` of every breakpoint.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let prev = std::iter::once(self.base_value).chain(self.values.iter().copied());
        self.breakpoints
            .iter()
            .zip(self.values.iter().zip(prev))
            .map(|(&x, (&v, p))| (x, v - p))
    }

    /// Restriction to a subinterval `[a, upper]` of the domain.
    pub fn restrict_to(&self, domain: Interval) -> Result<Self> {
        if !self.domain.contains_interval(&domain) {
            return Err(Error::DomainMismatch(
                "restriction must lie inside the domain".into(),
            ));
        }
        let base = self.eval(domain.a);
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        for (&x, &v) in self.breakpoints.iter().zip(&self.values) {
            if x > domain.a && x <= domain.b {
                breakpoints.push(x);
                values.push(v);
            }
        }
        Self::new(domain, breakpoints, values, base)
    }

    /// Points of the cumulative sum diagram: `(a, F(a))`, every breakpoint
    /// inside `(a, b)`, and `(b, F(b))`.
    fn diagram(&self) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = (self.domain.a, self.domain.b);
        let mut xs = Vec::with_capacity(self.breakpoints.len() + 2);
        let mut ys = Vec::with_capacity(self.breakpoints.len() + 2);
        xs.push(a);
        ys.push(self.eval(a));
        for (&x, &v) in self.breakpoints.iter().zip(&self.values) {
            if x > a && x < b {
                xs.push(x);
                ys.push(v);
            }
        }
        xs.push(b);
        ys.push(self.eval(b));
        (xs, ys)
    }
}

/// Indices of the vertices of the upper convex hull of points sorted by
/// strictly increasing `x`. Collinear middle points are dropped, so the
/// chord slopes between returned vertices are strictly decreasing.
pub fn upper_hull(xs: &[f64], ys: &[f64]) -> Vec<usize> {
    debug_assert_eq!(xs.len(), ys.len());
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for k in 0..xs.len() {
        while hull.len() >= 2 {
            let i = hull[hull.len() - 2];
            let j = hull[hull.len() - 1];
            let lhs = (xs[j] - xs[i]) * (ys[k] - ys[i]);
            let rhs = (ys[j] - ys[i]) * (xs[k] - xs[i]);
            let scale = lhs.abs() + rhs.abs();
            // j stays only if it lies strictly above the chord i -> k.
            if lhs - rhs >= -HULL_RTOL * scale {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull
}

/// Piecewise-linear concave function through its knots.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveMajorant {
    domain: Interval,
    knots: Vec<f64>,
    knot_values: Vec<f64>,
}

impl ConcaveMajorant {
    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn knot_values(&self) -> &[f64] {
        &self.knot_values
    }

    /// Chord slopes between consecutive knots.
    pub fn slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .zip(self.knot_values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    /// Linear interpolation between knots; constant extension outside.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.knots.len();
        if t <= self.knots[0] {
            return self.knot_values[0];
        }
        if t >= self.knots[n - 1] {
            return self.knot_values[n - 1];
        }
        let k = self.knots.partition_point(|&x| x <= t);
        let (x0, x1) = (self.knots[k - 1], self.knots[k]);
        let (y0, y1) = (self.knot_values[k - 1], self.knot_values[k]);
        y0 + (y1 - y0) * (t - x0) / (x1 - x0)
    }
}

/// Least concave majorant of the cumulative sum diagram of `process`.
pub fn lcm(process: &CumulativeProcess) -> Result<ConcaveMajorant> {
    if process.breakpoints.is_empty() {
        return Err(Error::DegenerateProcess("process has no breakpoints".into()));
    }
    let (xs, ys) = process.diagram();
    let hull = upper_hull(&xs, &ys);
    Ok(ConcaveMajorant {
        domain: process.domain,
        knots: hull.iter().map(|&i| xs[i]).collect(),
        knot_values: hull.iter().map(|&i| ys[i]).collect(),
    })
}

/// Left-hand slopes of a concave majorant.
pub fn left_slopes(cm: &ConcaveMajorant) -> MonotoneStepEstimate {
    let levels = cm.slopes();
    let breaks = cm.knots[1..cm.knots.len() - 1].to_vec();
    MonotoneStepEstimate::from_parts(cm.domain, breaks, levels)
}

/// Grenander-type estimator: left slopes of the least concave majorant.
pub fn grenander(process: &CumulativeProcess) -> Result<MonotoneStepEstimate> {
    Ok(left_slopes(&lcm(process)?))
}

/// Left-continuous nonincreasing step function on `[a, b]`.
///
/// `levels[k]` is the value on `(breaks[k - 1], breaks[k]]`, with
/// `breaks[-1] = a` and `breaks[m - 1] = b`; the value at `a` is `levels[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneStepEstimate {
    domain: Interval,
    breaks: Vec<f64>,
    levels: Vec<f64>,
}

impl MonotoneStepEstimate {
    /// Validates and builds a step estimate. Adjacent equal levels are merged.
    pub fn new(domain: Interval, breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breaks.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} levels need {} jump locations, got {}",
                levels.len(),
                levels.len().saturating_sub(1),
                breaks.len()
            )));
        }
        if levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter("non-finite level".into()));
        }
        if breaks.iter().any(|&x| !(domain.a < x && x < domain.b)) {
            return Err(Error::DomainMismatch(
                "jump locations must lie strictly inside the domain".into(),
            ));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "jump locations must be strictly increasing".into(),
            ));
        }
        if levels.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("levels must be nonincreasing".into()));
        }
        Ok(Self::from_parts(domain, breaks, levels))
    }

    pub fn constant(domain: Interval, level: f64) -> Self {
        Self::from_parts(domain, Vec::new(), vec![level])
    }

    fn from_parts(domain: Interval, breaks: Vec<f64>, levels: Vec<f64>) -> Self {
        let mut merged_breaks = Vec::with_capacity(breaks.len());
        let mut merged_levels = Vec::with_capacity(levels.len());
        merged_levels.push(levels[0]);
        for (&x, &l) in breaks.iter().zip(&levels[1..]) {
            if l == *merged_levels.last().unwrap() {
                continue;
            }
            merged_breaks.push(x);
            merged_levels.push(l);
        }
        Self {
            domain,
            breaks: merged_breaks,
            levels: merged_levels,
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Jump locations `τ_1 < … < τ_m` inside `(a, b)`.
    pub fn jump_locations(&self) -> &[f64] {
        &self.breaks
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// `p_k = level before τ_k − level after τ_k`, all positive.
    pub fn jump_sizes(&self) -> Vec<f64> {
        self.levels.windows(2).map(|w| w[0] - w[1]).collect()
    }

    /// Value on the last piece, i.e. at `b`.
    pub fn terminal_level(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.levels[self.breaks.partition_point(|&x| x < t)]
    }

    /// `sup{t ∈ [a, b] : f(t) ≥ level}`, or `a` when the set is empty.
    pub fn generalized_inverse(&self, level: f64) -> f64 {
        let count = self.levels.partition_point(|&l| l >= level);
        if count == 0 {
            self.domain.a
        } else if count == self.levels.len() {
            self.domain.b
        } else {
            self.breaks[count - 1]
        }
    }

    /// Exact integral over `on`.
    pub fn integral(&self, on: &Interval) -> f64 {
        piece_ends(&[&self.breaks], on)
            .windows(2)
            .map(|w| self.eval(w[1]) * (w[1] - w[0]))
            .sum()
    }
}

/// Sorted, deduplicated piece endpoints: `on.a`, every break strictly inside
/// `on`, and `on.b`.
fn piece_ends(break_sets: &[&[f64]], on: &Interval) -> Vec<f64> {
    let mut ends = vec![on.a, on.b];
    for set in break_sets {
        ends.extend(set.iter().copied().filter(|&x| on.a < x && x < on.b));
    }
    ends.sort_by(f64::total_cmp);
    ends.dedup();
    ends
}

/// Exact `∫_on |f − g| dt` by merging the two break sequences.
pub fn l1_distance(
    f: &MonotoneStepEstimate,
    g: &MonotoneStepEstimate,
    on: &Interval,
) -> Result<f64> {
    if f.domain != g.domain {
        return Err(Error::DomainMismatch(
            "estimates are defined on different domains".into(),
        ));
    }
    if !f.domain.contains_interval(on) {
        return Err(Error::DomainMismatch(
            "integration interval exceeds the domain".into(),
        ));
    }
    // Both functions are constant on each (u, v]; left-continuity gives the
    // value at v.
    Ok(piece_ends(&[&f.breaks, &g.breaks], on)
        .windows(2)
        .map(|w| (f.eval(w[1]) - g.eval(w[1])).abs() * (w[1] - w[0]))
        .sum())
}

/// Exact `∫ |Û_f(y) − Û_g(y)| dy` over all levels `y`, by merging the two
/// level sequences. Equals [`l1_distance`] over the whole domain.
pub fn inverse_l1_distance(f: &MonotoneStepEstimate, g: &MonotoneStepEstimate) -> Result<f64> {
    if f.domain != g.domain {
        return Err(Error::DomainMismatch(
            "estimates are defined on different domains".into(),
        ));
    }
    let mut ys: Vec<f64> = f.levels.iter().chain(&g.levels).copied().collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    Ok(ys
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (f.generalized_inverse(mid) - g.generalized_inverse(mid)).abs() * (w[1] - w[0])
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn interval_rejects_reversed_bounds() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn process_evaluation_is_right_continuous() {
        let p = CumulativeProcess::from_jumps(unit(0.0, 3.0), 0.0, [(1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0), (1.0, 0.0)])
            .unwrap();
        assert_eq!(p.eval(0.999), 0.0);
        assert_eq!(p.eval(1.0), 2.0 / 3.0);
        assert_eq!(p.eval(2.0), 1.0);
        assert_eq!(p.breakpoints(), &[1.0, 2.0]);
    }

    #[test]
    fn lcm_of_empty_process_is_an_error() {
        let p = CumulativeProcess::new(unit(0.0, 1.0), vec![], vec![], 0.0).unwrap();
        assert!(matches!(lcm(&p), Err(Error::DegenerateProcess(_))));
    }

    #[test]
    fn lcm_of_single_jump() {
        let p = CumulativeProcess::from_jumps(unit(0.0, 3.0), 0.0, [(1.5, 1.0)]).unwrap();
        let cm = lcm(&p).unwrap();
        assert_eq!(cm.knots(), &[0.0, 1.5, 3.0]);
        assert_eq!(cm.knot_values(), &[0.0, 1.0, 1.0]);
        let est = left_slopes(&cm);
        assert_eq!(est.levels(), &[2.0 / 3.0, 0.0]);
        assert_eq!(est.jump_locations(), &[1.5]);
        assert_eq!(est.eval(1.5), 2.0 / 3.0);
        assert_eq!(est.eval(1.5 + 1e-12), 0.0);
        assert_eq!(est.eval(0.0), 2.0 / 3.0);
    }

    #[test]
    fn concave_input_is_its_own_majorant() {
        // Slopes 3, 2, 1 on unit steps.
        let p = CumulativeProcess::from_jumps(unit(0.0, 3.0), 0.0, [(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)])
            .unwrap();
        let cm = lcm(&p).unwrap();
        assert_eq!(cm.knots(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(cm.knot_values(), &[0.0, 3.0, 5.0, 6.0]);
    }

    #[test]
    fn three_knot_majorant_slopes() {
        let p = CumulativeProcess::from_jumps(unit(0.0, 2.0), 0.0, [(1.0, 2.0), (2.0, 1.0)]).unwrap();
        let est = grenander(&p).unwrap();
        assert_eq!(est.levels(), &[2.0, 1.0]);
        assert_eq!(est.jump_sizes(), vec![1.0]);
    }

    #[test]
    fn collinear_points_collapse() {
        let p = CumulativeProcess::from_jumps(unit(0.0, 3.0), 0.0, [(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)])
            .unwrap();
        let cm = lcm(&p).unwrap();
        assert_eq!(cm.knots(), &[0.0, 3.0]);
        assert_eq!(left_slopes(&cm).levels(), &[1.0]);
    }

    #[test]
    fn generalized_inverse_conventions() {
        let d = unit(0.0, 3.0);
        let c = MonotoneStepEstimate::constant(d, 0.25);
        assert_eq!(c.generalized_inverse(0.25), 3.0);
        assert_eq!(c.generalized_inverse(0.3), 0.0);
        let f = MonotoneStepEstimate::new(d, vec![1.5], vec![2.0 / 3.0, 0.0]).unwrap();
        assert_eq!(f.generalized_inverse(0.5), 1.5);
        assert_eq!(f.generalized_inverse(-0.1), 3.0);
        assert_eq!(f.generalized_inverse(1.0), 0.0);
    }

    #[test]
    fn l1_of_constants() {
        let d = unit(0.0, 3.0);
        let f = MonotoneStepEstimate::constant(d, 0.5);
        let g = MonotoneStepEstimate::constant(d, 1.0 / 3.0);
        assert!((l1_distance(&f, &g, &d).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(l1_distance(&f, &f, &d).unwrap(), 0.0);
        assert!((inverse_l1_distance(&f, &g).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn l1_rejects_mismatched_domains() {
        let f = MonotoneStepEstimate::constant(unit(0.0, 3.0), 0.5);
        let g = MonotoneStepEstimate::constant(unit(0.0, 2.0), 0.5);
        assert!(l1_distance(&f, &g, &unit(0.0, 2.0)).is_err());
        assert!(l1_distance(&f, &f, &unit(0.0, 4.0)).is_err());
    }

    #[test]
    fn step_estimate_validation() {
        let d = unit(0.0, 1.0);
        assert!(MonotoneStepEstimate::new(d, vec![0.5], vec![1.0, 2.0]).is_err());
        assert!(MonotoneStepEstimate::new(d, vec![1.0], vec![2.0, 1.0]).is_err());
        assert!(MonotoneStepEstimate::new(d, vec![], vec![2.0, 1.0]).is_err());
        let merged = MonotoneStepEstimate::new(d, vec![0.3, 0.6], vec![2.0, 2.0, 1.0]).unwrap();
        assert_eq!(merged.jump_locations(), &[0.6]);
    }

    #[test]
    fn restriction_keeps_values() {
        let p = CumulativeProcess::from_jumps(unit(0.0, 3.0), 0.0, [(0.5, 1.0), (1.0, 1.0), (2.5, 1.0)])
            .unwrap();
        let r = p.restrict_to(unit(0.0, 2.0)).unwrap();
        assert_eq!(r.breakpoints(), &[0.5, 1.0]);
        assert_eq!(r.eval(2.0), 2.0);
    }
}

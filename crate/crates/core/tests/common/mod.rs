//! Independent oracles shared by the property and acceptance suites.
#![allow(dead_code)]

use monotest::smoothing::{boundary_coeffs, kernel};
use monotest::{CumulativeProcess, MonotoneStepEstimate};

/// Points of the cumulative sum diagram, rebuilt from the public accessors.
pub fn diagram(p: &CumulativeProcess) -> Vec<(f64, f64)> {
    let d = p.domain();
    let mut pts = vec![(d.a(), p.eval(d.a()))];
    for (&x, &v) in p.breakpoints().iter().zip(p.values()) {
        if x > d.a() && x < d.b() {
            pts.push((x, v));
        }
    }
    pts.push((d.b(), p.eval(d.b())));
    pts
}

/// Smallest concave majorant of the points at `t`: the best chord over all
/// pairs bracketing `t`.
pub fn brute_majorant(pts: &[(f64, f64)], t: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (i, &(xi, yi)) in pts.iter().enumerate() {
        if xi > t {
            break;
        }
        for &(xj, yj) in &pts[i..] {
            if xj < t {
                continue;
            }
            let v = if xj == xi { yi.max(yj) } else { yi + (yj - yi) * (t - xi) / (xj - xi) };
            best = best.max(v);
        }
    }
    best
}

/// Antitonic least squares fit with unit weights.
pub fn pava_decreasing(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, n)| std::iter::repeat_n(m, n))
        .collect()
}

/// Composite Simpson rule with `panels` (even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(lo: f64, hi: f64, panels: usize, f: F) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + h * k as f64);
    }
    s * h / 3.0
}

/// Simpson over each piece of a partition given by sorted `cuts`.
pub fn simpson_pieces<F: Fn(f64) -> f64>(cuts: &[f64], panels: usize, f: F) -> f64 {
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| simpson(w[0], w[1], panels, &f))
        .sum()
}

/// `∫|f − g|` from the midpoints of the merged pieces.
pub fn midpoint_l1(f: &MonotoneStepEstimate, g: &MonotoneStepEstimate) -> f64 {
    let d = f.domain();
    let mut cuts = vec![d.a(), d.b()];
    cuts.extend_from_slice(f.jump_locations());
    cuts.extend_from_slice(g.jump_locations());
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            (f.eval(m) - g.eval(m)).abs() * (w[1] - w[0])
        })
        .sum()
}

/// `∫ w(x) f̂(x) dx` with the weight of the corrected kernel at `t`.
pub fn convolution_oracle(f: &MonotoneStepEstimate, h: f64, t: f64) -> f64 {
    let (a, b) = (0.0, 3.0);
    let weight = |x: f64| -> f64 {
        let v = (t - x) / h;
        let k = kernel(v) / h;
        if t < a + h {
            let c = boundary_coeffs((t - a) / h).unwrap();
            (c.phi + c.psi * v) * k
        } else if t > b - h {
            let c = boundary_coeffs((b - t) / h).unwrap();
            (c.phi - c.psi * v) * k
        } else {
            k
        }
    };
    let mut cuts = vec![a, b, (t - h).clamp(a, b), (t + h).clamp(a, b)];
    cuts.extend_from_slice(f.jump_locations());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    // f̂ is constant inside each piece; read it at the midpoint
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| f.eval(0.5 * (w[0] + w[1])) * simpson(w[0], w[1], 2000, weight))
        .sum()
}


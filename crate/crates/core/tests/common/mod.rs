//! Independent reference implementations shared by the property tests and
//! the acceptance run. None of these call into the code they check.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdff::arm::{Morphology, MorphologyKind};
use pdff::dtw::dtw_distance;
use pdff::optimizer::{costs_to_weights, update_distribution, SearchDistribution};
use pdff::policy::{BasisConfig, Policy, Simulator};

/// Fingertip as a sum of complex exponentials of the cumulative angles.
pub fn fk_oracle(lengths: &[f64], angles: &[f64]) -> (f64, f64) {
    let mut phase = 0.0;
    let mut tip = Complex::new(0.0, 0.0);
    for (l, q) in lengths.iter().zip(angles) {
        phase += q;
        tip += Complex::from_polar(*l, phase);
    }
    (tip.re, tip.im)
}

/// Largest FK deviation from [`fk_oracle`] over `n` random postures per
/// morphology, angles uniform in `[-π, π]`.
pub fn fk_max_error(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for kind in MorphologyKind::ALL {
        let arm = Morphology::standard(kind).arm;
        for _ in 0..n {
            let q: Vec<f64> = (0..arm.joint_count())
                .map(|_| rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI))
                .collect();
            let p = arm.end_effector(&q).unwrap();
            let (x, y) = fk_oracle(arm.link_lengths(), &q);
            worst = worst.max((p.x - x).abs()).max((p.y - y).abs());
        }
    }
    worst
}

/// Normalized exponentiated costs, written out term by term.
pub fn weights_oracle(costs: &[f64], h: f64) -> Vec<f64> {
    let lo = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return vec![1.0 / costs.len() as f64; costs.len()];
    }
    let raw: Vec<f64> = costs
        .iter()
        .map(|c| (-h * (c - lo) / (hi - lo)).exp())
        .collect();
    let z: f64 = raw.iter().sum();
    raw.iter().map(|r| r / z).collect()
}

/// Brute-force weighted mean and weighted outer products around `old_mean`,
/// accumulated element by element.
pub fn update_oracle(
    old_mean: &[f64],
    candidates: &[Vec<f64>],
    weights: &[f64],
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = old_mean.len();
    let mut mean = vec![0.0; n];
    let mut cov = vec![vec![0.0; n]; n];
    for (c, w) in candidates.iter().zip(weights) {
        for i in 0..n {
            mean[i] += w * c[i];
            for j in 0..n {
                cov[i][j] += w * (c[i] - old_mean[i]) * (c[j] - old_mean[j]);
            }
        }
    }
    (mean, cov)
}

/// Runs one library update on random candidates and random weights and
/// returns the largest deviation from [`update_oracle`] over all blocks.
/// The floor is zero so that no eigenvalue clipping happens.
pub fn update_max_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let joints = rng.random_range(1..=6);
        let basis = rng.random_range(1..=5);
        let k = rng.random_range(2..=20);
        let means: Vec<DVector<f64>> = (0..joints)
            .map(|_| DVector::from_fn(basis, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let covs: Vec<DMatrix<f64>> = (0..joints)
            .map(|_| DMatrix::identity(basis, basis))
            .collect();
        let dist = SearchDistribution::from_parts(means.clone(), covs, 0.0).unwrap();
        let candidates: Vec<Policy> = (0..k)
            .map(|_| {
                Policy::new(
                    (0..joints)
                        .map(|_| DVector::from_fn(basis, |_, _| rng.random_range(-2.0..2.0)))
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let costs: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..10.0)).collect();
        let weights = weights_oracle(&costs, 10.0);
        let next = update_distribution(&dist, &candidates, &weights).unwrap();
        for m in 0..joints {
            let old: Vec<f64> = means[m].iter().copied().collect();
            let cands: Vec<Vec<f64>> = candidates
                .iter()
                .map(|c| c.joint(m).iter().copied().collect())
                .collect();
            let (mean, cov) = update_oracle(&old, &cands, &weights);
            for i in 0..basis {
                worst = worst.max((next.means()[m][i] - mean[i]).abs());
                for j in 0..basis {
                    worst = worst.max((next.covariances()[m][(i, j)] - cov[i][j]).abs());
                }
            }
        }
    }
    worst
}

/// Largest change in the weights under `J -> a J + b` with `a > 0`.
pub fn weights_affine_max_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let k = rng.random_range(2..=30);
        let costs: Vec<f64> = (0..k).map(|_| rng.random_range(-50.0..50.0)).collect();
        let a = rng.random_range(0.01..100.0);
        let b = rng.random_range(-100.0..100.0);
        let shifted: Vec<f64> = costs.iter().map(|c| a * c + b).collect();
        let w0 = costs_to_weights(&costs, 10.0).unwrap();
        let w1 = costs_to_weights(&shifted, 10.0).unwrap();
        for (x, y) in w0.iter().zip(&w1) {
            worst = worst.max((x - y).abs());
        }
        for (x, y) in w0.iter().zip(weights_oracle(&costs, 10.0)) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

/// Lower cost never gets a lower weight.
pub fn weights_monotone(trials: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).all(|_| {
        let k = rng.random_range(2..=30);
        let costs: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..10.0)).collect();
        let w = costs_to_weights(&costs, rng.random_range(0.0..30.0)).unwrap();
        (0..k).all(|i| (0..k).all(|j| costs[i] >= costs[j] || w[i] >= w[j]))
    })
}

/// Final joint angles of a rollout from rest computed as
/// `q(T) = ∫ (T - s) a(s) ds` with composite Simpson quadrature on the
/// closed-form kernel activations.
pub fn exact_final_angles(basis: &BasisConfig, policy: &Policy) -> Vec<f64> {
    let n_centers = basis.count;
    let centers: Vec<f64> = (0..n_centers)
        .map(|b| {
            if n_centers == 1 {
                basis.duration / 2.0
            } else {
                basis.duration * b as f64 / (n_centers - 1) as f64
            }
        })
        .collect();
    let accel = |s: f64, m: usize| -> f64 {
        let raw: Vec<f64> = centers
            .iter()
            .map(|c| (-(s - c).powi(2) / (basis.width * basis.width)).exp())
            .collect();
        let z: f64 = raw.iter().sum();
        raw.iter()
            .zip(policy.joint(m).iter())
            .map(|(r, w)| r / z * w)
            .sum()
    };
    let t = basis.duration;
    let intervals = 20_000;
    let h = t / intervals as f64;
    (0..policy.joint_count())
        .map(|m| {
            let f = |s: f64| (t - s) * accel(s, m);
            let mut sum = f(0.0) + f(t);
            for i in 1..intervals {
                let s = i as f64 * h;
                sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(s);
            }
            sum * h / 3.0
        })
        .collect()
}

/// Ratio of the Euler final-angle error at `dt` to the error at `dt / 10`.
pub fn rollout_refinement_ratio(policy: &Policy, dt: f64) -> f64 {
    let arm = Morphology::standard(MorphologyKind::Human).arm;
    let coarse_cfg = BasisConfig {
        dt,
        ..BasisConfig::default()
    };
    let fine_cfg = BasisConfig {
        dt: dt / 10.0,
        ..BasisConfig::default()
    };
    let exact = exact_final_angles(&coarse_cfg, policy);
    let err = |cfg: &BasisConfig| {
        let sim = Simulator::new(arm.clone(), cfg.basis().unwrap(), cfg.dt).unwrap();
        let traj = sim.rollout(policy).unwrap();
        traj.final_angles()
            .unwrap()
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    err(&coarse_cfg) / err(&fine_cfg)
}

/// Minimum path cost over every monotone path, found by explicit
/// depth-first enumeration.
pub fn dtw_exhaustive(a: &[f64], b: &[f64]) -> f64 {
    fn walk(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (a[i] - b[j]).powi(2);
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

/// Every series of length 1 to `max_len` over `alphabet`.
pub fn all_series(alphabet: &[f64], max_len: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| {
                alphabet.iter().map(move |&v| {
                    let mut t = s.clone();
                    t.push(v);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Number of series pairs where the DP distance disagrees with enumeration.
pub fn dtw_mismatches(max_len: usize) -> usize {
    let series = all_series(&[0.0, 1.0, 2.0], max_len);
    let mut bad = 0;
    for a in &series {
        for b in &series {
            if (dtw_distance(a, b) - dtw_exhaustive(a, b)).abs() > 1e-12 {
                bad += 1;
            }
        }
    }
    bad
}

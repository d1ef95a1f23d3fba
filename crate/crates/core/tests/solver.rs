mod common;

use common::random_dataset;
use lsib::dataset::{gen_contradicting, gen_unique, ConfusionSpec, GenMode};
use lsib::solver::{
    best_lagrangian, brute_force_frontier, lagrangian_grad, lagrangian_value, pareto_frontier,
    solve, sweep_beta, SolverConfig,
};
use lsib::{Channel, InfoPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let h = 1e-5;
    for _ in 0..100 {
        // a single input has a constant objective and nothing to compare
        let n = rng.gen_range(2..6);
        let k = rng.gen_range(2..4);
        let consistent = rng.gen_bool(0.5);
        let d = random_dataset(&mut rng, n, k, consistent);
        let t = rng.gen_range(2..5);
        let beta = rng.gen_range(0.0..2.0);
        let mut logits: Vec<f64> = (0..n * t).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let grad = lagrangian_grad(&d, &logits, t, beta).unwrap();
        let value =
            |z: &[f64]| lagrangian_value(&d, &Channel::softmax(z, t).unwrap(), beta).unwrap();
        let mut fd = vec![0.0; logits.len()];
        for i in 0..logits.len() {
            let orig = logits[i];
            logits[i] = orig + h;
            let up = value(&logits);
            logits[i] = orig - h;
            let down = value(&logits);
            logits[i] = orig;
            fd[i] = (up - down) / (2.0 * h);
        }
        let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1e-8);
        let err = grad
            .iter()
            .zip(&fd)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(
            err / scale <= 1e-5,
            "n={n} k={k} t={t} beta={beta} scale={scale} err={err}"
        );
    }
}

#[test]
fn solving_is_deterministic() {
    let d = gen_unique(3, 4, 2).unwrap();
    let cfg = SolverConfig {
        beta: 0.3,
        seed: 9,
        max_iters: 3000,
        ..SolverConfig::default()
    };
    let a = solve(&d, &cfg).unwrap();
    let b = solve(&d, &cfg).unwrap();
    assert_eq!(a.channel, b.channel);
    assert_eq!(a.trace, b.trace);
    let swept = sweep_beta(&d, &[0.3, 0.3], &cfg);
    for r in swept {
        assert_eq!(r.unwrap().channel, a.channel);
    }
}

#[test]
fn zero_beta_reaches_full_label_information() {
    let d = gen_unique(3, 5, 0).unwrap();
    let r = solve(&d, &SolverConfig::default()).unwrap();
    assert!(r.converged);
    assert!((r.point.i_ty - d.entropy_y()).abs() < 1e-4);
}

#[test]
fn solver_matches_brute_force_on_contradicting_pairs() {
    let spec = ConfusionSpec::new(vec![vec![0.8, 0.2], vec![0.4, 0.6]], 2, 10).unwrap();
    let d = gen_contradicting(&spec, GenMode::Exact, 0).unwrap();
    let frontier = brute_force_frontier(&d, 0.01).unwrap();
    let betas = [0.0, 0.05, 0.1, 0.2, 0.5];
    for (beta, r) in betas
        .iter()
        .zip(sweep_beta(&d, &betas, &SolverConfig::default()))
    {
        let r = r.unwrap();
        let best = best_lagrangian(&frontier, *beta).unwrap();
        assert!(
            (r.objective - best).abs() < 1e-3,
            "beta {beta}: {} vs {best}",
            r.objective
        );
    }
}

#[test]
fn frontier_is_nondominated() {
    let pts = vec![
        InfoPoint::new(0.0, 0.0),
        InfoPoint::new(0.5, 0.2),
        InfoPoint::new(0.4, 0.3),
        InfoPoint::new(1.0, 0.3),
        InfoPoint::new(1.0, 0.5),
    ];
    let f = pareto_frontier(pts);
    for a in &f {
        for b in &f {
            assert!(!(b.i_xt <= a.i_xt && b.i_ty > a.i_ty));
        }
    }
    assert!(f.contains(&InfoPoint::new(0.4, 0.3)));
    assert!(!f.contains(&InfoPoint::new(0.5, 0.2)));
}

//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Criterion 10 lives in the CLI crate.

#[path = "common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{random_channel, random_dataset, random_positive_channel};
use lsib::curve::{check_feasible, empirical_curve, erasure_channel, Feasibility};
use lsib::dataset::{
    gen_contradicting, gen_factor_dataset, gen_unique, ConfusionSpec, FactorGenConfig, FactorRole,
    GenMode,
};
use lsib::dist::{info_point, Dist};
use lsib::objectives::{
    compression_upper_bound, cp_loss, cp_loss_kl_form, ls_loss, ls_loss_decomposed,
    optimal_ls_channel, sufficiency_lower_bound, ClassifierSpec, SmoothingConfig,
};
use lsib::probe::{nuisance_report, ProbeSetup};
use lsib::solver::{
    best_lagrangian, brute_force_frontier, brute_force_frontier_with, lagrangian_grad,
    lagrangian_value, ls_theoretical_points, solve, sweep_beta, SolveResult, SolverConfig,
};
use lsib::trainer::{train_tabular, TrainConfig, TrainLoss};
use lsib::{Channel, Dataset, InfoPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run(label: &str, limit: Duration, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = check();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = out.pass && in_time;
    println!(
        "[{}] {label}: {} ({:.2}s, limit {}s{})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", too slow" }
    );
    pass
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

fn criterion_1() -> Outcome {
    let d = gen_unique(4, 25, 0).unwrap();
    let curve = empirical_curve(&d).unwrap();
    let knee_err = (curve.h_y() - 4f64.ln()).abs();
    let mut worst = 0.0f64;
    let mut all_on = true;
    for alpha in grid(0.0, 1.0, 0.1) {
        let p = info_point(&d, &erasure_channel(&d, alpha).unwrap()).unwrap();
        all_on &= check_feasible(&p, &curve, 1e-9).unwrap() == Feasibility::OnCurve;
        worst = worst.max((p.i_ty - curve.value(p.i_xt).unwrap()).abs());
    }
    outcome(
        knee_err <= 1e-15 && all_on,
        format!(
            "knee {:.6} (|err| {knee_err:.1e}), erasure points off curve by at most {worst:.1e}",
            curve.h_y()
        ),
    )
}

fn criterion_2() -> Outcome {
    let d = gen_unique(4, 25, 0).unwrap();
    let h = d.entropy_y();
    let trained = train_tabular(&d, &TrainConfig::new(TrainLoss::CrossEntropy)).unwrap();
    let t_err = (trained.point.i_xt - h)
        .abs()
        .max((trained.point.i_ty - h).abs());
    let closed = info_point(
        &d,
        &optimal_ls_channel(&d, &SmoothingConfig::uniform(0.0, 4).unwrap()).unwrap(),
    )
    .unwrap();
    let c_err = (closed.i_xt - h).abs().max((closed.i_ty - h).abs());
    outcome(
        t_err <= 1e-3 && c_err <= 1e-12,
        format!("trained off (H(Y), H(Y)) by {t_err:.1e}, closed form by {c_err:.1e}"),
    )
}

fn criterion_3() -> Outcome {
    let d = gen_unique(4, 25, 0).unwrap();
    let alphas = grid(0.1, 0.9, 0.1);
    let rows: Vec<(InfoPoint, InfoPoint)> = std::thread::scope(|s| {
        let handles: Vec<_> = alphas
            .iter()
            .map(|&a| {
                let d = &d;
                s.spawn(move || {
                    let cfg = SmoothingConfig::uniform(a, 4).unwrap();
                    let closed = info_point(d, &optimal_ls_channel(d, &cfg).unwrap()).unwrap();
                    let trained =
                        train_tabular(d, &TrainConfig::new(TrainLoss::LabelSmoothing(cfg)))
                            .unwrap();
                    (closed, trained.point)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let closed_diag = rows
        .iter()
        .map(|(c, _)| (c.i_ty - c.i_xt).abs())
        .fold(0.0, f64::max);
    let trained_diag = rows
        .iter()
        .map(|(_, t)| (t.i_ty - t.i_xt).abs())
        .fold(0.0, f64::max);
    let match_err = rows
        .iter()
        .map(|(c, t)| (c.i_xt - t.i_xt).abs().max((c.i_ty - t.i_ty).abs()))
        .fold(0.0, f64::max);
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].0.i_xt < w[0].0.i_xt && w[1].1.i_xt < w[0].1.i_xt);
    outcome(
        closed_diag <= 1e-6 && trained_diag <= 1e-3 && match_err <= 1e-3 && decreasing,
        format!(
            "|I(T;Y)-I(X;T)| closed {closed_diag:.1e}, trained {trained_diag:.1e}; trained vs closed {match_err:.1e}; \
             I(X;T) strictly decreasing: {decreasing}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let random_r = |rng: &mut ChaCha8Rng, k: usize| {
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = v.iter().sum();
        Dist::new(v.into_iter().map(|x| x / s).collect()).unwrap()
    };
    let (mut ls_err, mut cp_err) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let k = rng.gen_range(2..5);
        let n = rng.gen_range(1..6);
        let consistent = rng.gen_bool(0.5);
        let d = random_dataset(&mut rng, n, k, consistent);
        let c = random_positive_channel(&mut rng, n, k);
        let r = random_r(&mut rng, k);
        let cfg = SmoothingConfig::new(rng.gen(), r).unwrap();
        ls_err = ls_err.max(
            (ls_loss(&d, &c, &cfg).unwrap() - ls_loss_decomposed(&d, &c, &cfg).unwrap().total())
                .abs(),
        );
        let beta = rng.gen_range(0.0..2.0);
        cp_err = cp_err
            .max((cp_loss(&d, &c, beta).unwrap() - cp_loss_kl_form(&d, &c, beta).unwrap()).abs());
    }
    let (mut upper_slack, mut lower_slack) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..1000 {
        let k = rng.gen_range(2..5);
        let n = rng.gen_range(1..6);
        let consistent = rng.gen_bool(0.5);
        let d = random_dataset(&mut rng, n, k, consistent);
        let c = random_channel(&mut rng, n, k);
        let p = info_point(&d, &c).unwrap();
        let r = random_r(&mut rng, k);
        let spec = ClassifierSpec::new(rng.gen_range(1e-6..0.99)).unwrap();
        upper_slack = upper_slack.min(compression_upper_bound(&d, &c, &r).unwrap() - p.i_xt);
        lower_slack = lower_slack.min(p.i_ty - sufficiency_lower_bound(&d, &c, &spec).unwrap());
    }
    outcome(
        ls_err <= 1e-10 && cp_err <= 1e-10 && upper_slack >= -1e-9 && lower_slack >= -1e-9,
        format!(
            "smoothing split err {ls_err:.1e}, penalty split err {cp_err:.1e}; \
             min bound slack upper {upper_slack:.1e}, lower {lower_slack:.1e}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..6);
        let k = rng.gen_range(2..4);
        let consistent = rng.gen_bool(0.5);
        let d = random_dataset(&mut rng, n, k, consistent);
        let t = rng.gen_range(2..5);
        let beta = rng.gen_range(0.0..2.0);
        let mut z: Vec<f64> = (0..n * t).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let g = lagrangian_grad(&d, &z, t, beta).unwrap();
        let value =
            |z: &[f64]| lagrangian_value(&d, &Channel::softmax(z, t).unwrap(), beta).unwrap();
        let mut err = 0.0f64;
        for i in 0..z.len() {
            let orig = z[i];
            z[i] = orig + h;
            let up = value(&z);
            z[i] = orig - h;
            let down = value(&z);
            z[i] = orig;
            err = err.max(((up - down) / (2.0 * h) - g[i]).abs());
        }
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-8);
        worst = worst.max(err / scale);
    }
    outcome(
        worst <= 1e-5,
        format!("max relative error {worst:.1e} over 100 instances"),
    )
}

/// Largest `i_ty` lead of a solved point over some LS point that uses at
/// least as much `i_xt`.
fn gap_over_ls(solved: &[InfoPoint], ls: &[InfoPoint]) -> f64 {
    solved
        .iter()
        .filter_map(|s| {
            ls.iter()
                .filter(|l| l.i_xt >= s.i_xt)
                .map(|l| s.i_ty - l.i_ty)
                .max_by(f64::total_cmp)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn solver_vs_frontier(results: &[SolveResult], frontier: &[InfoPoint]) -> f64 {
    results
        .iter()
        .map(|r| (r.objective - best_lagrangian(frontier, r.beta).unwrap()).abs())
        .fold(0.0, f64::max)
}

fn ls_curve(d: &Dataset) -> Vec<InfoPoint> {
    ls_theoretical_points(d, &grid(0.0, 1.0, 0.001))
        .unwrap()
        .into_iter()
        .map(|p| p.1)
        .collect()
}

fn criterion_6() -> Outcome {
    let spec = ConfusionSpec::new(vec![vec![0.7, 0.3], vec![0.3, 0.7]], 2, 10).unwrap();
    let d = gen_contradicting(&spec, GenMode::Exact, 0).unwrap();
    let betas = grid(0.0, 1.0, 0.1);
    let results: Vec<SolveResult> = sweep_beta(&d, &betas, &SolverConfig::default())
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let solved: Vec<InfoPoint> = results.iter().map(|r| r.point).collect();
    let gap = gap_over_ls(&solved, &ls_curve(&d));
    let bf = solver_vs_frontier(&results, &brute_force_frontier(&d, 0.01).unwrap());
    outcome(
        gap >= 0.003 && bf <= 1e-3,
        format!("largest I(T;Y) lead over label smoothing {gap:.6} nats (needs 0.003); solver vs brute force {bf:.1e}"),
    )
}

fn criterion_6_block() -> Outcome {
    let matrix = vec![
        vec![0.7, 0.3, 0.0],
        vec![0.3, 0.7, 0.0],
        vec![0.0, 0.0, 1.0],
    ];
    let d = gen_contradicting(
        &ConfusionSpec::new(matrix, 3, 10).unwrap(),
        GenMode::Exact,
        0,
    )
    .unwrap();
    let betas = grid(0.0, 1.0, 0.1);
    let results: Vec<SolveResult> = sweep_beta(&d, &betas, &SolverConfig::default())
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let solved: Vec<InfoPoint> = results.iter().map(|r| r.point).collect();
    let gap = gap_over_ls(&solved, &ls_curve(&d));
    let bf = solver_vs_frontier(&results, &brute_force_frontier_with(&d, 3, 0.05).unwrap());
    outcome(
        gap >= 0.003 && bf <= 1e-3,
        format!("largest I(T;Y) lead over label smoothing {gap:.6} nats; solver vs brute force (grid 0.05) {bf:.1e}"),
    )
}

fn criterion_7() -> Outcome {
    let d = gen_unique(4, 25, 0).unwrap();
    let r = solve(&d, &SolverConfig::default().with_beta(1.5)).unwrap();
    outcome(
        r.converged && r.point.i_xt <= 1e-3,
        format!(
            "I(X;T) = {:.1e} after {} iterations",
            r.point.i_xt, r.iterations
        ),
    )
}

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn criterion_8() -> Outcome {
    let report = nuisance_report(
        FactorRole::Nuisance,
        &[0.0, 0.6],
        &SEEDS,
        &ProbeSetup::default(),
    )
    .unwrap();
    let ce = report.summary_for(0.0).unwrap();
    let ls = report.summary_for(0.6).unwrap();
    let all_ok = ce.n_ok == SEEDS.len() && ls.n_ok == SEEDS.len();
    let parity = (ce.target_mean - ls.target_mean).abs();
    outcome(
        all_ok && ls.probe_mean < ce.probe_mean && parity <= 0.02,
        format!(
            "nuisance probe acc ce {:.3}±{:.3}, ls(0.6) {:.3}±{:.3}; target acc diff {parity:.3}",
            ce.probe_mean, ce.probe_sd, ls.probe_mean, ls.probe_sd
        ),
    )
}

fn criterion_9() -> Outcome {
    let setup = ProbeSetup::default();
    let (mut max_cmi, mut min_mi) = (0.0f64, f64::INFINITY);
    for &seed in &SEEDS {
        let fd = gen_factor_dataset(&FactorGenConfig {
            redundant_noise: setup.redundant_noise,
            ..FactorGenConfig::new(
                FactorRole::Redundant,
                setup.n_informative,
                setup.n_second,
                setup.n_classes,
                setup.n_rows,
                seed,
            )
        })
        .unwrap();
        max_cmi = max_cmi.max(fd.conditional_mi_second_label());
        min_mi = min_mi.min(fd.mi_second_label());
    }
    let report = nuisance_report(FactorRole::Redundant, &[0.0, 0.1], &SEEDS, &setup).unwrap();
    let ce = report.summary_for(0.0).unwrap();
    let ls = report.summary_for(0.1).unwrap();
    let all_ok = ce.n_ok == SEEDS.len() && ls.n_ok == SEEDS.len();
    outcome(
        max_cmi == 0.0 && min_mi > 0.1 && all_ok && ls.probe_mean < ce.probe_mean,
        format!(
            "I(second;Y|F) max {max_cmi}, I(second;Y) min {min_mi:.3}; redundant probe acc ce {:.3}±{:.3}, ls(0.1) {:.3}±{:.3}",
            ce.probe_mean, ce.probe_sd, ls.probe_mean, ls.probe_sd
        ),
    )
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let results = [
        run(
            "1 empirical IB curve and erasure channels",
            secs(1),
            criterion_1,
        ),
        run(
            "2 cross entropy reaches minimal sufficiency",
            secs(10),
            criterion_2,
        ),
        run("3 label smoothing sweeps the curve", secs(60), criterion_3),
        run(
            "4 loss identities and variational bounds",
            secs(5),
            criterion_4,
        ),
        run(
            "5 Lagrangian gradient vs finite differences",
            secs(5),
            criterion_5,
        ),
        run(
            "6 Lagrangian beats label smoothing on contradicting 2x2 data",
            secs(60),
            criterion_6,
        ),
        run(
            "7 large beta collapses to the trivial solution",
            secs(30),
            criterion_7,
        ),
        run(
            "8 label smoothing removes a nuisance factor",
            secs(300),
            criterion_8,
        ),
        run(
            "9 label smoothing suppresses a redundant factor",
            secs(300),
            criterion_9,
        ),
    ];
    run(
        "6 supplement: same check on a 3-class block confusion (informational)",
        secs(60),
        criterion_6_block,
    );
    let failed = results.iter().filter(|&&p| !p).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

#![allow(dead_code)]

use lsib::{Channel, Dataset};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random count table; every input gets at least one label.
pub fn random_dataset(
    rng: &mut ChaCha8Rng,
    n_inputs: usize,
    k: usize,
    consistent: bool,
) -> Dataset {
    let ids = (0..n_inputs).map(|i| format!("x{i}")).collect();
    let mut entries = Vec::new();
    for x in 0..n_inputs {
        let first = rng.gen_range(0..k);
        entries.push((x, first, rng.gen_range(1..6)));
        if !consistent {
            for y in 0..k {
                if y != first && rng.gen_bool(0.5) {
                    entries.push((x, y, rng.gen_range(1..6)));
                }
            }
        }
    }
    Dataset::new(ids, k, entries).unwrap()
}

/// Random stochastic rows, some with exact zeros.
pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, t: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..t)
                .map(|_| {
                    if rng.gen_bool(0.15) {
                        0.0
                    } else {
                        rng.gen::<f64>().powi(2)
                    }
                })
                .collect();
            if row.iter().all(|&v| v == 0.0) {
                row[rng.gen_range(0..t)] = 1.0;
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            row
        })
        .collect()
}

/// Random channel with strictly positive rows.
pub fn random_positive_channel(rng: &mut ChaCha8Rng, n: usize, t: usize) -> Channel {
    let rows = (0..n)
        .map(|_| {
            let row: Vec<f64> = (0..t).map(|_| rng.gen_range(0.01..1.0)).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|v| v / s).collect()
        })
        .collect();
    Channel::from_rows(rows).unwrap()
}

pub fn random_channel(rng: &mut ChaCha8Rng, n: usize, t: usize) -> Channel {
    Channel::from_rows(random_rows(rng, n, t)).unwrap()
}

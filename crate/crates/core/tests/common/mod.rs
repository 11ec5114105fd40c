#![allow(dead_code)]

use missview_core::rng::SeededRng;
use missview_core::{Dataset, Variable};

/// `m` numeric variables over `n` items, each cell missing with its
/// variable's probability drawn from `[0, max_rate]`.
pub fn random_dataset(seed: u64, m: usize, n: usize, max_rate: f64) -> Dataset {
    let mut rng = SeededRng::new(seed);
    let variables = (0..m)
        .map(|v| {
            let rate = rng.unit() * max_rate;
            let values: Vec<Option<f64>> = (0..n)
                .map(|_| {
                    let x = rng.unit() * 100.0;
                    (rng.unit() >= rate).then_some(x)
                })
                .collect();
            Variable::numeric(format!("x{}", v + 1), values)
        })
        .collect();
    Dataset::new(format!("random-{seed}"), variables).unwrap()
}

/// Naive double loop over cells: per-variable missing counts and pairwise
/// joint counts, without touching masks or summaries.
pub fn cell_scan(ds: &Dataset) -> (Vec<usize>, Vec<Vec<usize>>) {
    let m = ds.n_variables();
    let mut counts = vec![0; m];
    let mut joint = vec![vec![0; m]; m];
    for i in 0..ds.n_items() {
        for a in 0..m {
            if !ds.cell(a, i).is_missing() {
                continue;
            }
            counts[a] += 1;
            for b in 0..m {
                if ds.cell(b, i).is_missing() {
                    joint[a][b] += 1;
                }
            }
        }
    }
    (counts, joint)
}

/// Half the L1 distance between two count vectors after normalization.
pub fn tv_oracle(grey: &[usize], red: &[usize]) -> f64 {
    let gt: usize = grey.iter().sum();
    let rt: usize = red.iter().sum();
    let mut acc = 0.0;
    for b in 0..grey.len() {
        let g = grey[b] as f64 / gt as f64;
        let r = red[b] as f64 / rt as f64;
        acc += if g > r { g - r } else { r - g };
    }
    acc / 2.0
}

/// Sort-and-interpolate quantile at probability `p`.
pub fn quantile_oracle(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = p * (v.len() as f64 - 1.0);
    let below = pos.floor() as usize;
    let above = pos.ceil() as usize;
    v[below] * (1.0 - (pos - below as f64)) + v[above] * (pos - below as f64)
}

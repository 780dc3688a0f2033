//! Random instances and brute-force reference computations shared by the
//! integration tests. Nothing here calls into the contraction code under test.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ttts::tt::{TensorTrain, TtCore, UniformGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Train with every interior bond of rank `rank` and entries uniform in
/// `[lo, hi)`.
pub fn random_tt(rng: &mut impl Rng, shape: &[usize], rank: usize, lo: f64, hi: f64) -> TensorTrain {
    let d = shape.len();
    let cores = (0..d)
        .map(|j| {
            let l = if j == 0 { 1 } else { rank };
            let r = if j + 1 == d { 1 } else { rank };
            let values = (0..l * shape[j] * r).map(|_| rng.random_range(lo..hi)).collect();
            TtCore::new(l, shape[j], r, values).unwrap()
        })
        .collect();
    TensorTrain::new(cores).unwrap()
}

pub fn random_shape(rng: &mut impl Rng, max_d: usize, max_n: usize) -> Vec<usize> {
    let d = rng.random_range(1..=max_d);
    (0..d).map(|_| rng.random_range(1..=max_n)).collect()
}

/// Every multi-index of `shape` in row-major order.
pub fn all_indices(shape: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &n in shape {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}

/// Entry by explicit slice products, one core at a time.
pub fn naive_entry(t: &TensorTrain, idx: &[usize]) -> f64 {
    let mut row = vec![1.0];
    for (core, &i) in t.cores().iter().zip(idx) {
        let (_, _, r) = core.shape();
        let mut next = vec![0.0; r];
        for (a, &x) in row.iter().enumerate() {
            for (b, slot) in next.iter_mut().enumerate() {
                *slot += x * core.get(a, i, b);
            }
        }
        row = next;
    }
    row[0]
}

/// Full tensor as (index, value) pairs.
pub fn dense(t: &TensorTrain) -> Vec<(Vec<usize>, f64)> {
    all_indices(&t.shape())
        .into_iter()
        .map(|i| {
            let v = naive_entry(t, &i);
            (i, v)
        })
        .collect()
}

pub fn prefix_sum(t: &TensorTrain, prefix: &[usize]) -> f64 {
    dense(t)
        .into_iter()
        .filter(|(i, _)| i.starts_with(prefix))
        .map(|(_, v)| v)
        .sum()
}

/// Multilinear interpolation of grid values `f` at `x`, summing over the
/// 2^d bracketing corners.
pub fn multilinear(f: impl Fn(&[usize]) -> f64, x: &[f64], grids: &[UniformGrid]) -> f64 {
    let brackets: Vec<(usize, usize, f64)> = x
        .iter()
        .zip(grids)
        .map(|(&x, g)| {
            if g.points == 1 {
                return (0, 0, 0.0);
            }
            let h = (g.hi - g.lo) / (g.points - 1) as f64;
            let pos = ((x - g.lo) / h).clamp(0.0, (g.points - 1) as f64);
            let i = (pos.floor() as usize).min(g.points - 2);
            (i, i + 1, pos - i as f64)
        })
        .collect();
    let d = x.len();
    let mut total = 0.0;
    for mask in 0..(1usize << d) {
        let mut w = 1.0;
        let mut idx = Vec::with_capacity(d);
        for (k, &(i0, i1, t)) in brackets.iter().enumerate() {
            if mask >> k & 1 == 1 {
                w *= t;
                idx.push(i1);
            } else {
                w *= 1.0 - t;
                idx.push(i0);
            }
        }
        if w != 0.0 {
            total += w * f(&idx);
        }
    }
    total
}

/// `|a - b| <= tol * max(|a|, |b|, 1)`.
pub fn assert_close(a: f64, b: f64, tol: f64) {
    let scale = a.abs().max(b.abs()).max(1.0);
    assert!((a - b).abs() <= tol * scale, "{a} vs {b} (tol {tol})");
}

/// Property-test settings without on-disk failure persistence.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        ..Default::default()
    }
}

//! TT-based global optimization: cost-to-density transforms, conditioning on
//! task variables, greedy sweep retrieval and prefix-guided sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::search::{Solution, SolutionSet};
use crate::tt::{SuffixSums, TensorTrain, TtCore, UniformGrid};

/// Strictly decreasing map from cost to a nonnegative density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MonotoneTransform {
    /// `exp(-beta c)`.
    NegExp { beta: f64 },
    /// Softplus of the reflected cost, `ln(1 + exp(beta (ceiling - c))) / beta`.
    ShiftReflect { ceiling: f64, beta: f64 },
    /// `1 / (1 + beta (c - floor))` above `floor`, mirrored to `2 - 1 / (1 + beta (floor - c))` below it.
    Reciprocal { floor: f64, beta: f64 },
}

impl Default for MonotoneTransform {
    fn default() -> Self {
        MonotoneTransform::NegExp { beta: 1.0 }
    }
}

impl MonotoneTransform {
    pub fn beta(&self) -> f64 {
        match *self {
            MonotoneTransform::NegExp { beta }
            | MonotoneTransform::ShiftReflect { beta, .. }
            | MonotoneTransform::Reciprocal { beta, .. } => beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let beta = self.beta();
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!("transform beta must be positive, got {beta}")));
        }
        let shift = match *self {
            MonotoneTransform::NegExp { .. } => 0.0,
            MonotoneTransform::ShiftReflect { ceiling, .. } => ceiling,
            MonotoneTransform::Reciprocal { floor, .. } => floor,
        };
        if !shift.is_finite() {
            return Err(Error::Config("transform offset must be finite".into()));
        }
        Ok(())
    }

    pub fn apply(&self, c: f64) -> f64 {
        match *self {
            MonotoneTransform::NegExp { beta } => (-beta * c).exp(),
            MonotoneTransform::ShiftReflect { ceiling, beta } => {
                let x = beta * (ceiling - c);
                (x.max(0.0) + (-x.abs()).exp().ln_1p()) / beta
            }
            MonotoneTransform::Reciprocal { floor, beta } => {
                if c >= floor {
                    1.0 / (1.0 + beta * (c - floor))
                } else {
                    2.0 - 1.0 / (1.0 + beta * (floor - c))
                }
            }
        }
    }
}

pub fn transform_cost(c: f64, m: &MonotoneTransform) -> f64 {
    m.apply(c)
}

/// Fixes the leading `z.len()` modes of `q_aug` at continuous values by
/// contracting each core with its linear-interpolation weights.
pub fn condition(q_aug: &TensorTrain, z: &[f64], z_grids: &[UniformGrid]) -> Result<TensorTrain> {
    let m = z.len();
    if z_grids.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{m} condition values with {} grids",
            z_grids.len()
        )));
    }
    if q_aug.ndim() < m + 1 {
        return Err(Error::DimensionMismatch(format!(
            "cannot condition {m} modes of a train with {} modes",
            q_aug.ndim()
        )));
    }
    if m == 0 {
        return Ok(q_aug.clone());
    }
    let cores = q_aug.cores();
    let mut row = vec![1.0];
    for (k, (&x, grid)) in z.iter().zip(z_grids).enumerate() {
        let core = &cores[k];
        if grid.points != core.mode_size() {
            return Err(Error::DimensionMismatch(format!(
                "condition grid {k} has {} points but mode size is {}",
                grid.points,
                core.mode_size()
            )));
        }
        let w = grid.interpolation_weights(k, x)?;
        let mut next = vec![0.0; core.right_rank()];
        for (i, &wi) in w.iter().enumerate() {
            if wi != 0.0 {
                for (n, v) in next.iter_mut().zip(core.apply_left(&row, i)) {
                    *n += wi * v;
                }
            }
        }
        row = next;
    }
    let head = &cores[m];
    let (_, n, r) = head.shape();
    let mut values = Vec::with_capacity(n * r);
    for i in 0..n {
        values.extend(head.apply_left(&row, i));
    }
    let mut out = vec![TtCore::new(1, n, r, values)?];
    out.extend_from_slice(&cores[m + 1..]);
    TensorTrain::new(out)
}

/// Index of the largest value; the lowest index wins ties and NaN never wins.
pub(crate) fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] || (values[best].is_nan() && !v.is_nan()) {
            best = i;
        }
    }
    best
}

/// Greedy completion of `prefix`: at each remaining layer take the child
/// with the largest node value.
pub fn greedy_complete(t: &TensorTrain, cache: &SuffixSums, prefix: &[usize]) -> Result<Vec<usize>> {
    let mut path = prefix.to_vec();
    let mut row = t.prefix_row(prefix)?;
    for layer in prefix.len()..t.ndim() {
        let children = t.child_values(&row, layer, cache)?;
        let c = first_argmax(&children);
        row = t.cores()[layer].apply_left(&row, c);
        path.push(c);
    }
    Ok(path)
}

pub fn sweep_argmax(t: &TensorTrain) -> Vec<usize> {
    let cache = SuffixSums::new(t);
    greedy_complete(t, &cache, &[]).expect("fresh cache and empty prefix are always valid")
}

/// Samples a completion of `prefix` with child weights `max(node_value, 0)`,
/// falling back to a uniform choice when every weight is zero.
pub fn sample_complete<R: Rng>(
    t: &TensorTrain,
    cache: &SuffixSums,
    prefix: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut path = prefix.to_vec();
    let mut row = t.prefix_row(prefix)?;
    for layer in prefix.len()..t.ndim() {
        let weights: Vec<f64> = t
            .child_values(&row, layer, cache)?
            .into_iter()
            .map(|v| if v > 0.0 { v } else { 0.0 })
            .collect();
        let total: f64 = weights.iter().sum();
        let c = if total > 0.0 && total.is_finite() {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                acc += w;
                if w > 0.0 && u < acc {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave u just above the final partial sum.
            pick.unwrap_or_else(|| weights.iter().rposition(|&w| w > 0.0).expect("positive total"))
        } else {
            rng.random_range(0..weights.len())
        };
        row = t.cores()[layer].apply_left(&row, c);
        path.push(c);
    }
    Ok(path)
}

/// Generator for draw `k` of a seeded batch; independent of batch order.
pub(crate) fn stream_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

pub fn tt_sample(t: &TensorTrain, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let cache = SuffixSums::new(t);
    (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            sample_complete(t, &cache, &[], &mut rng).expect("fresh cache and empty prefix are always valid")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtgoConfig {
    pub samples: usize,
    pub tau: usize,
    pub seed: u64,
}

impl Default for TtgoConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            tau: 10,
            seed: 0,
        }
    }
}

/// TTGO retrieval: the sweep argmax plus `samples` draws from the
/// conditioned density, ranked by true cost.
pub fn ttgo_solve(problem: &Problem, q: &TensorTrain, z: &[f64], cfg: &TtgoConfig) -> Result<SolutionSet> {
    if cfg.tau == 0 {
        return Err(Error::Config("tau must be at least 1".into()));
    }
    if q.shape() != problem.tree_shape() {
        return Err(Error::ShapeMismatch(format!(
            "model shape {:?} does not match tree shape {:?}",
            q.shape(),
            problem.tree_shape()
        )));
    }
    let mut candidates = vec![sweep_argmax(q)];
    candidates.extend(tt_sample(q, cfg.samples, cfg.seed));
    candidates.sort();
    candidates.dedup();
    let evaluated: Vec<Solution> = candidates
        .par_iter()
        .map(|b| {
            let (actions, weights) = problem.decode(b)?;
            let cost = problem.cost(z, &actions, &weights)?;
            Ok(Solution { actions, weights, cost })
        })
        .collect::<Result<_>>()?;
    let mut set = SolutionSet::new(cfg.tau);
    for s in evaluated {
        set.insert(s);
    }
    Ok(set)
}

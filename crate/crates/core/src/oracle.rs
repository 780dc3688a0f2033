//! Dense ground truth: explicit tensors, exhaustive grid search, a
//! table-based version of the tree search, and the argmax error bound check.
//!
//! Everything here scales with the full grid and refuses inputs above
//! [`DENSE_LIMIT`] entries.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::search::{ucb_score, SearchConfig, Solution, SolutionSet, TraceEntry};
use crate::tt::{TensorTrain, UniformGrid};
use crate::ttgo::{first_argmax, sample_complete, stream_rng, sweep_argmax};

pub const DENSE_LIMIT: u128 = 10_000_000;
pub const TABLE_LIMIT: u128 = 1_000_000;

fn checked_size(shape: &[usize], limit: u128) -> Result<usize> {
    let entries = shape.iter().map(|&n| n as u128).product::<u128>();
    if entries > limit {
        return Err(Error::SizeLimit { entries, limit });
    }
    Ok(entries as usize)
}

/// Row-major dense tensor, last index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn from_fn<F: Fn(&[usize]) -> f64 + Sync>(shape: &[usize], f: F) -> Result<Self> {
        let size = checked_size(shape, DENSE_LIMIT)?;
        let data = (0..size).into_par_iter().map(|lin| f(&unravel(lin, shape))).collect();
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[ravel(index, &self.shape)]
    }

    /// Sum over every entry whose index starts with `prefix`.
    pub fn prefix_sum(&self, prefix: &[usize]) -> f64 {
        let block: usize = self.shape[prefix.len()..].iter().product();
        let start = ravel(prefix, &self.shape[..prefix.len()]) * block;
        self.data[start..start + block].iter().sum()
    }

    /// Linear index of the largest entry; the first occurrence wins.
    pub fn argmax(&self) -> Vec<usize> {
        unravel(first_argmax(&self.data), &self.shape)
    }

    /// Multilinear interpolation over the `2^d` surrounding grid nodes.
    pub fn interpolate(&self, x: &[f64], grids: &[UniformGrid]) -> Result<f64> {
        let d = self.shape.len();
        let located = x
            .iter()
            .zip(grids)
            .enumerate()
            .map(|(k, (&v, g))| g.locate(k, v))
            .collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = Vec::with_capacity(d);
            for (k, &(i, t)) in located.iter().enumerate() {
                if corner >> k & 1 == 1 {
                    w *= t;
                    idx.push((i + 1).min(self.shape[k] - 1));
                } else {
                    w *= 1.0 - t;
                    idx.push(i);
                }
            }
            if w != 0.0 {
                total += w * self.get(&idx);
            }
        }
        Ok(total)
    }

    /// Greedy descent by prefix sums, lowest index on ties.
    pub fn greedy_complete(&self, prefix: &[usize]) -> Vec<usize> {
        let mut path = prefix.to_vec();
        for layer in prefix.len()..self.shape.len() {
            let sums: Vec<f64> = (0..self.shape[layer])
                .map(|c| {
                    path.push(c);
                    let s = self.prefix_sum(&path);
                    path.pop();
                    s
                })
                .collect();
            path.push(first_argmax(&sums));
        }
        path
    }
}

pub fn ravel(index: &[usize], shape: &[usize]) -> usize {
    index.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

pub fn unravel(mut lin: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = lin % shape[k];
        lin /= shape[k];
    }
    idx
}

/// Full tensor by successive contraction of the cores.
pub fn dense_reconstruct(t: &TensorTrain) -> Result<DenseTensor> {
    let shape = t.shape();
    checked_size(&shape, DENSE_LIMIT)?;
    // rows x rank, rows enumerate the processed prefix.
    let mut m = vec![1.0];
    let mut rank = 1;
    for core in t.cores() {
        let (_, n, r) = core.shape();
        let rows = m.len() / rank;
        let mut next = vec![0.0; rows * n * r];
        for p in 0..rows {
            let row = &m[p * rank..(p + 1) * rank];
            for i in 0..n {
                let out = core.apply_left(row, i);
                next[(p * n + i) * r..(p * n + i + 1) * r].copy_from_slice(&out);
            }
        }
        m = next;
        rank = r;
    }
    Ok(DenseTensor { shape, data: m })
}

/// Per-layer visit counter mirroring the layered visit models.
#[derive(Debug, Clone, Default)]
pub struct DenseVisitCounter {
    shape: Vec<usize>,
    counts: Vec<std::collections::HashMap<Vec<usize>, u64>>,
    root: u64,
}

impl DenseVisitCounter {
    pub fn new(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            counts: vec![Default::default(); shape.len()],
            root: 0,
        }
    }

    pub fn record(&mut self, visited: &[Vec<usize>]) {
        if visited.is_empty() {
            return;
        }
        self.root += 1;
        for g in 1..=self.shape.len() {
            let distinct: BTreeSet<&[usize]> = visited.iter().map(|p| &p[..g]).collect();
            for p in distinct {
                *self.counts[g - 1].entry(p.to_vec()).or_insert(0) += 1;
            }
        }
    }

    /// Visits of `prefix` times the number of branches below it.
    pub fn node_visits(&self, prefix: &[usize]) -> f64 {
        let below: f64 = self.shape[prefix.len()..].iter().map(|&n| n as f64).product();
        let n = if prefix.is_empty() {
            self.root
        } else {
            self.counts[prefix.len() - 1].get(prefix).copied().unwrap_or(0)
        };
        n as f64 * below
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub index: Vec<usize>,
    pub actions: Vec<i64>,
    pub weights: Vec<f64>,
    pub cost: f64,
}

/// Problem with every weight dimension resampled to `points` nodes.
pub fn regrid(problem: &Problem, points: usize) -> Result<Problem> {
    let mut p = problem.clone();
    p.weight_dims = problem
        .weight_dims
        .iter()
        .map(|g| UniformGrid::new(g.lo, g.hi, points))
        .collect::<Result<_>>()?;
    Ok(p)
}

/// Exhaustive minimum over the decision grid at the default condition,
/// optionally resampling the weight grids to `resolution` points.
pub fn grid_argmin(problem: &Problem, resolution: Option<usize>) -> Result<GridOptimum> {
    let p = match resolution {
        Some(n) => regrid(problem, n)?,
        None => problem.clone(),
    };
    p.check_grid()?;
    let shape = p.tree_shape();
    let size = checked_size(&shape, DENSE_LIMIT)?;
    let z = p.default_condition.clone();
    let chunk = 4096;
    let best = (0..size.div_ceil(chunk))
        .into_par_iter()
        .map(|c| -> Result<(f64, usize)> {
            let mut best = (f64::INFINITY, usize::MAX);
            for lin in c * chunk..((c + 1) * chunk).min(size) {
                let cost = p.branch_cost(&z, &unravel(lin, &shape))?;
                if cost < best.0 {
                    best = (cost, lin);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::INFINITY, usize::MAX), |a, b| {
            if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        });
    let index = unravel(best.1, &shape);
    let (actions, weights) = p.decode(&index)?;
    Ok(GridOptimum {
        index,
        actions,
        weights,
        cost: best.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxBoundReport {
    pub eps: f64,
    /// `max T - T(argmax t)` with the dense argmax of the model.
    pub gap: f64,
    pub holds: bool,
    /// Same gap with the greedy sweep in place of the dense argmax.
    pub sweep_gap: f64,
    pub sweep_holds: bool,
}

/// Compares the model `t` with the exact tensor `f` on the whole grid.
pub fn check_argmax_bound<F: Fn(&[usize]) -> f64 + Sync>(f: F, t: &TensorTrain) -> Result<ArgmaxBoundReport> {
    let exact = DenseTensor::from_fn(&t.shape(), f)?;
    let model = dense_reconstruct(t)?;
    let eps = exact
        .data
        .iter()
        .zip(&model.data)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let top = exact.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let gap = top - exact.get(&model.argmax());
    let sweep_gap = top - exact.get(&sweep_argmax(t));
    let bound = 2.0 * eps + 1e-12;
    Ok(ArgmaxBoundReport {
        eps,
        gap,
        holds: gap <= bound,
        sweep_gap,
        sweep_holds: sweep_gap <= bound,
    })
}

/// The tree search with every node statistic in an explicit table: value
/// sums and visit counts for each of the `sum_g prod_{k<=g} N_k` nodes.
#[derive(Debug, Clone)]
pub struct TableMcts {
    shape: Vec<usize>,
    completions: Vec<f64>,
    // sums[g][lin] for depth g = 0..=d; sums[0] is the root.
    sums: Vec<Vec<f64>>,
    counts: Vec<Vec<u64>>,
    expanded: Vec<Vec<bool>>,
}

impl TableMcts {
    /// Builds the node tables from leaf values `q` (row-major over `shape`).
    pub fn from_leaves(shape: &[usize], q: Vec<f64>) -> Result<Self> {
        let size = checked_size(shape, TABLE_LIMIT)?;
        if q.len() != size {
            return Err(Error::ShapeMismatch(format!(
                "{} leaf values for {size} branches",
                q.len()
            )));
        }
        let d = shape.len();
        let mut sums = vec![Vec::new(); d + 1];
        sums[d] = q;
        for g in (0..d).rev() {
            let n = shape[g];
            sums[g] = sums[g + 1].chunks(n).map(|c| c.iter().sum()).collect();
        }
        let mut completions = vec![1.0; d + 1];
        for g in (0..d).rev() {
            completions[g] = completions[g + 1] * shape[g] as f64;
        }
        Ok(Self {
            shape: shape.to_vec(),
            completions,
            counts: sums.iter().map(|s| vec![0; s.len()]).collect(),
            expanded: sums.iter().map(|s| vec![false; s.len()]).collect(),
            sums,
        })
    }

    pub fn from_dense(q: &DenseTensor) -> Result<Self> {
        Self::from_leaves(&q.shape, q.data.clone())
    }

    /// Number of tree nodes below the root held in the tables.
    pub fn node_count(&self) -> usize {
        self.sums[1..].iter().map(Vec::len).sum()
    }

    fn lin(&self, prefix: &[usize]) -> usize {
        ravel(prefix, &self.shape[..prefix.len()])
    }

    pub fn node_value(&self, prefix: &[usize]) -> f64 {
        self.sums[prefix.len()][self.lin(prefix)]
    }

    pub fn node_visits(&self, prefix: &[usize]) -> f64 {
        self.counts[prefix.len()][self.lin(prefix)] as f64 * self.completions[prefix.len()]
    }

    pub fn select(&mut self, cfg: &SearchConfig) -> Vec<Vec<usize>> {
        let d = self.shape.len();
        let mut done: Vec<Vec<usize>> = Vec::new();
        let mut active: Vec<Vec<usize>> = vec![Vec::new()];
        for layer in 0..d {
            if active.is_empty() || done.len() >= cfg.tau {
                break;
            }
            let mut cands: Vec<(f64, f64, Vec<usize>)> = Vec::new();
            for p in &active {
                let parent = self.node_visits(p);
                for c in 0..self.shape[layer] {
                    let mut child = p.clone();
                    child.push(c);
                    let q = self.node_value(&child);
                    let u = ucb_score(q, self.node_visits(&child), parent, cfg.c_explore);
                    cands.push((u, q, child));
                }
            }
            cands.sort_by(|a, b| {
                b.0.total_cmp(&a.0)
                    .then(b.1.total_cmp(&a.1))
                    .then_with(|| a.2.cmp(&b.2))
            });
            cands.truncate(cfg.tau - done.len());
            let single = self.shape[layer] == 1;
            let mut next = Vec::new();
            for (_, _, path) in cands {
                let lin = self.lin(&path);
                let g = path.len();
                if single || self.expanded[g][lin] {
                    if g == d {
                        done.push(path);
                    } else {
                        next.push(path);
                    }
                } else {
                    self.expanded[g][lin] = true;
                    done.push(path);
                }
            }
            active = next;
        }
        done
    }

    pub fn simulate(&self, prefixes: &[Vec<usize>], cfg: &SearchConfig, stream_base: u64) -> Vec<Vec<usize>> {
        prefixes
            .iter()
            .enumerate()
            .map(|(k, p)| {
                if cfg.stochastic {
                    self.sample_complete(p, cfg.seed, stream_base + k as u64)
                } else {
                    self.greedy(p)
                }
            })
            .collect()
    }

    fn greedy(&self, prefix: &[usize]) -> Vec<usize> {
        let mut path = prefix.to_vec();
        for layer in prefix.len()..self.shape.len() {
            let base = self.lin(&path) * self.shape[layer];
            let c = first_argmax(&self.sums[layer + 1][base..base + self.shape[layer]]);
            path.push(c);
        }
        path
    }

    fn sample_complete(&self, prefix: &[usize], seed: u64, stream: u64) -> Vec<usize> {
        // Same draw rule and generator stream as the tensor-train sampler.
        let mut rng = stream_rng(seed, stream);
        let mut path = prefix.to_vec();
        for layer in prefix.len()..self.shape.len() {
            let base = self.lin(&path) * self.shape[layer];
            let weights = self.sums[layer + 1][base..base + self.shape[layer]].to_vec();
            let t = TensorTrain::separable(&[weights]).expect("nonempty layer");
            let cache = crate::tt::SuffixSums::new(&t);
            let c = sample_complete(&t, &cache, &[], &mut rng).expect("valid layer")[0];
            path.push(c);
        }
        path
    }

    pub fn backprop(&mut self, visited: &[Vec<usize>]) {
        if visited.is_empty() {
            return;
        }
        self.counts[0][0] += 1;
        for g in 1..=self.shape.len() {
            let distinct: BTreeSet<&[usize]> = visited.iter().map(|p| &p[..g]).collect();
            for p in distinct {
                let lin = self.lin(p);
                self.counts[g][lin] += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableOutcome {
    pub solutions: SolutionSet,
    pub trace: Vec<TraceEntry>,
    pub evaluations: usize,
    pub node_count: usize,
    /// Whether the wall-time budget ran out before the tables were complete.
    pub truncated: bool,
}

/// Table-based search on a problem: every branch is evaluated to fill the
/// value table, then the search runs `cfg.max_iters` iterations. With a
/// budget, the run stops when it expires and reports the best branches
/// evaluated so far.
pub fn table_mcts(problem: &Problem, cfg: &SearchConfig, budget: Option<Duration>) -> Result<TableOutcome> {
    cfg.validate()?;
    problem.check_grid()?;
    let started = Instant::now();
    let expired = |t: &Instant| budget.is_some_and(|b| t.elapsed() >= b);
    let shape = problem.tree_shape();
    let size = checked_size(&shape, TABLE_LIMIT)?;
    let z = problem.default_condition.clone();
    let mut costs = Vec::with_capacity(size);
    let chunk = 2048;
    let mut truncated = false;
    while costs.len() < size {
        let lo = costs.len();
        let hi = (lo + chunk).min(size);
        let part: Vec<f64> = (lo..hi)
            .into_par_iter()
            .map(|lin| problem.branch_cost(&z, &unravel(lin, &shape)))
            .collect::<Result<_>>()?;
        costs.extend(part);
        if costs.len() < size && expired(&started) {
            truncated = true;
            break;
        }
    }
    let mut solutions = SolutionSet::new(cfg.tau);
    let push = |set: &mut SolutionSet, lin: usize, cost: f64| -> Result<()> {
        let (actions, weights) = problem.decode(&unravel(lin, &shape))?;
        set.insert(Solution { actions, weights, cost });
        Ok(())
    };
    if truncated {
        let mut order: Vec<usize> = (0..costs.len()).collect();
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        for &lin in order.iter().take(cfg.tau) {
            push(&mut solutions, lin, costs[lin])?;
        }
        let best = solutions.best().map_or(f64::INFINITY, |s| s.cost);
        return Ok(TableOutcome {
            solutions,
            trace: vec![TraceEntry {
                iter: 0,
                best_cost: best,
                evals: costs.len(),
                q_rank: 0,
                v_rank: 0,
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
            }],
            evaluations: costs.len(),
            node_count: 0,
            truncated,
        });
    }
    let q: Vec<f64> = costs.iter().map(|&c| problem.transform.apply(c)).collect();
    let mut table = TableMcts::from_leaves(&shape, q)?;
    let mut trace = Vec::new();
    for iter in 1..=cfg.max_iters {
        if expired(&started) {
            truncated = true;
            break;
        }
        let prefixes = table.select(cfg);
        let leaves = table.simulate(&prefixes, cfg, iter as u64 * cfg.tau as u64);
        let mut distinct: Vec<&Vec<usize>> = leaves.iter().collect();
        distinct.sort();
        distinct.dedup();
        for leaf in distinct {
            let lin = ravel(leaf, &shape);
            push(&mut solutions, lin, costs[lin])?;
        }
        table.backprop(&leaves);
        trace.push(TraceEntry {
            iter,
            best_cost: solutions.best().map_or(f64::INFINITY, |s| s.cost),
            evals: size,
            q_rank: 0,
            v_rank: 0,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(TableOutcome {
        solutions,
        trace,
        evaluations: size,
        node_count: table.node_count(),
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross::{guided_cross, VisitDelta};
    use crate::tt::TtCore;

    #[test]
    fn reconstruct_ones() {
        let t = TensorTrain::constant(&[2, 2, 2], 1.0).unwrap();
        assert_eq!(dense_reconstruct(&t).unwrap().data(), &[1.0; 8]);
    }

    #[test]
    fn reconstruct_prefix_indicator() {
        let t = guided_cross(&VisitDelta { prefix: vec![0] }, &[2, 2]).unwrap();
        assert_eq!(dense_reconstruct(&t).unwrap().data(), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn reconstruct_matches_eval() {
        let mut s = 1u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let shapes = [(1, 3, 2), (2, 4, 3), (3, 2, 1)];
        let cores = shapes
            .iter()
            .map(|&(a, n, b)| TtCore::new(a, n, b, (0..a * n * b).map(|_| next()).collect()).unwrap())
            .collect();
        let t = TensorTrain::new(cores).unwrap();
        let dense = dense_reconstruct(&t).unwrap();
        for lin in 0..24 {
            let idx = unravel(lin, &[3, 4, 2]);
            assert!((dense.get(&idx) - t.eval(&idx).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn size_limit() {
        let t = TensorTrain::constant(&[100; 4], 1.0).unwrap();
        assert!(matches!(dense_reconstruct(&t), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn argmax_bound_trivial_cases() {
        let f = |i: &[usize]| (i[0] * 3 + i[1]) as f64;
        let exact = TensorTrain::new(vec![
            TtCore::new(1, 3, 2, vec![0.0, 1.0, 3.0, 1.0, 6.0, 1.0]).unwrap(),
            TtCore::new(2, 3, 1, vec![1.0, 1.0, 1.0, 0.0, 1.0, 2.0]).unwrap(),
        ])
        .unwrap();
        let r = check_argmax_bound(f, &exact).unwrap();
        assert!(r.eps < 1e-12 && r.gap == 0.0 && r.holds);
        let shifted = exact.add(&TensorTrain::constant(&[3, 3], 0.25).unwrap()).unwrap();
        let r = check_argmax_bound(f, &shifted).unwrap();
        assert!((r.eps - 0.25).abs() < 1e-12);
        assert_eq!(r.gap, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn visit_counter_scales_by_completions() {
        let mut c = DenseVisitCounter::new(&[2, 3]);
        c.record(&[vec![1, 2], vec![1, 0]]);
        assert_eq!(c.node_visits(&[1]), 3.0);
        assert_eq!(c.node_visits(&[1, 0]), 1.0);
        assert_eq!(c.node_visits(&[]), 6.0);
    }

    #[test]
    fn interpolation_on_nodes() {
        let d = DenseTensor::from_fn(&[3, 2], |i| (i[0] * 10 + i[1]) as f64).unwrap();
        let g = [
            UniformGrid::new(0.0, 1.0, 3).unwrap(),
            UniformGrid::new(0.0, 1.0, 2).unwrap(),
        ];
        assert_eq!(d.interpolate(&[0.5, 1.0], &g).unwrap(), 11.0);
        assert!((d.interpolate(&[0.25, 0.5], &g).unwrap() - 5.5).abs() < 1e-12);
    }

    #[test]
    fn bandit_finds_best_arm() {
        let q = vec![0.2, 0.9, 0.5, 0.7];
        let mut t = TableMcts::from_leaves(&[4], q).unwrap();
        let cfg = SearchConfig {
            tau: 1,
            ..Default::default()
        };
        for _ in 0..200 {
            let sel = t.select(&cfg);
            let leaves = t.simulate(&sel, &cfg, 0);
            t.backprop(&leaves);
        }
        let v: Vec<f64> = (0..4).map(|i| t.node_visits(&[i])).collect();
        assert!(v[1] > v[0] && v[1] > v[2] && v[1] > v[3], "{v:?}");
    }
}

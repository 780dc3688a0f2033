//! Monte Carlo tree search over a decision tree stored as tensor trains.
//!
//! The value model `Q` holds the transformed cost of every branch. Visits are
//! kept per layer: `V_g` accumulates indicators of visited length-`g`
//! prefixes, so the visit count of a node `p` is the node value of `p` in
//! `V_{|p|}`, i.e. the number of visits times the number of completions
//! below `p`. The root carries a plain counter.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cross::{guided_cross, tt_cross, CrossConfig, CrossDiagnostics, VisitDelta};
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::tt::{SuffixSums, TensorTrain};
use crate::ttgo::{condition, greedy_complete, sample_complete, stream_rng};

/// `q / v + c sqrt(ln v_parent / v)`, infinite for unvisited nodes.
pub fn ucb_score(q: f64, v: f64, v_parent: f64, c: f64) -> f64 {
    if v <= 0.0 {
        return f64::INFINITY;
    }
    let explore = if v_parent > 0.0 {
        (v_parent.ln() / v).max(0.0).sqrt()
    } else {
        0.0
    };
    q / v + c * explore
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub tau: usize,
    pub c_explore: f64,
    pub max_iters: usize,
    pub visit_round_rank: usize,
    pub update_q: bool,
    /// Complete prefixes by sampling from `Q` instead of greedy descent.
    pub stochastic: bool,
    /// Independent searches with seeds `seed, seed + 1, ...`, merged at the end.
    pub instances: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            tau: 10,
            c_explore: 3.0,
            max_iters: 50,
            visit_round_rank: 30,
            update_q: false,
            stochastic: false,
            instances: 1,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        if !(self.c_explore >= 0.0 && self.c_explore.is_finite()) {
            return Err(Error::Config(format!(
                "exploration constant must be nonnegative, got {}",
                self.c_explore
            )));
        }
        if self.max_iters == 0 || self.visit_round_rank == 0 || self.instances == 0 {
            return Err(Error::Config(
                "max_iters, visit_round_rank and instances must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub actions: Vec<i64>,
    pub weights: Vec<f64>,
    pub cost: f64,
}

impl Solution {
    fn same_point(&self, other: &Solution) -> bool {
        self.actions == other.actions
            && self.weights.len() == other.weights.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    fn order(&self, other: &Solution) -> std::cmp::Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.actions.cmp(&other.actions))
            .then_with(|| {
                self.weights
                    .iter()
                    .zip(&other.weights)
                    .map(|(a, b)| a.total_cmp(b))
                    .find(|o| o.is_ne())
                    .unwrap_or(self.weights.len().cmp(&other.weights.len()))
            })
    }
}

/// The best `tau` distinct candidates by true cost, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    tau: usize,
    entries: Vec<Solution>,
}

impl SolutionSet {
    pub fn new(tau: usize) -> Self {
        Self {
            tau,
            entries: Vec::with_capacity(tau + 1),
        }
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn entries(&self) -> &[Solution] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Solution> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> Option<&Solution> {
        self.entries.first()
    }

    /// Returns whether the candidate entered the set.
    pub fn insert(&mut self, s: Solution) -> bool {
        if self.entries.iter().any(|e| e.same_point(&s)) {
            return false;
        }
        let pos = self.entries.partition_point(|e| e.order(&s).is_lt());
        if pos >= self.tau {
            return false;
        }
        self.entries.insert(pos, s);
        self.entries.truncate(self.tau);
        true
    }

    pub fn merge(&mut self, other: SolutionSet) {
        for s in other.entries {
            self.insert(s);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub best_cost: f64,
    pub evals: usize,
    pub q_rank: usize,
    pub v_rank: usize,
    pub wall_ms: f64,
}

/// Models, caches and bookkeeping of one search.
#[derive(Debug, Clone)]
pub struct SearchState {
    shape: Vec<usize>,
    // completions[g] = number of branches below a depth-g node.
    completions: Vec<f64>,
    q_model: TensorTrain,
    q_cache: SuffixSums,
    q_rank_cap: usize,
    v_models: Vec<TensorTrain>,
    v_caches: Vec<SuffixSums>,
    root_visits: u64,
    expanded: BTreeSet<Vec<usize>>,
}

impl SearchState {
    pub fn new(q_model: TensorTrain) -> Result<Self> {
        let shape = q_model.shape();
        if shape.contains(&0) {
            return Err(Error::InfeasibleGrid("tree layer with no branches".into()));
        }
        let d = shape.len();
        let mut completions = vec![1.0; d + 1];
        for g in (0..d).rev() {
            completions[g] = completions[g + 1] * shape[g] as f64;
        }
        let zero = TensorTrain::zeros(&shape)?;
        let zero_cache = SuffixSums::new(&zero);
        Ok(Self {
            q_cache: SuffixSums::new(&q_model),
            q_rank_cap: q_model.max_rank(),
            q_model,
            completions,
            v_models: vec![zero; d],
            v_caches: vec![zero_cache; d],
            root_visits: 0,
            expanded: BTreeSet::new(),
            shape,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn depth(&self) -> usize {
        self.shape.len()
    }

    pub fn q_model(&self) -> &TensorTrain {
        &self.q_model
    }

    /// Visit model of layer `g` (1-based, `1..=d`).
    pub fn v_model(&self, g: usize) -> &TensorTrain {
        &self.v_models[g - 1]
    }

    pub fn v_rank(&self) -> usize {
        self.v_models.iter().map(TensorTrain::max_rank).max().unwrap_or(1)
    }

    /// Total core entries of `Q` and every visit model.
    pub fn storage(&self) -> usize {
        self.q_model.storage() + self.v_models.iter().map(TensorTrain::storage).sum::<usize>()
    }

    pub fn expanded(&self) -> &BTreeSet<Vec<usize>> {
        &self.expanded
    }

    pub fn node_value(&self, prefix: &[usize]) -> Result<f64> {
        self.q_model.node_value(prefix, &self.q_cache)
    }

    pub fn node_visits(&self, prefix: &[usize]) -> Result<f64> {
        if prefix.is_empty() {
            return Ok(self.root_visits as f64 * self.completions[0]);
        }
        let g = prefix.len();
        if g > self.depth() {
            return Err(Error::DimensionMismatch(format!(
                "prefix of length {g} on a tree of depth {}",
                self.depth()
            )));
        }
        self.v_models[g - 1].node_value(prefix, &self.v_caches[g - 1])
    }

    /// Visit counts are integers by construction; snapping removes
    /// round-off from the low-rank model before it reaches the UCB.
    fn snapped_visits(&self, prefix: &[usize]) -> Result<f64> {
        Ok(self.node_visits(prefix)?.round().max(0.0))
    }

    /// Children of `prefix` scored as `(ucb, q)`.
    fn score_children(&self, prefix: &[usize], c: f64) -> Result<Vec<(f64, f64)>> {
        let layer = prefix.len();
        let q = self
            .q_model
            .child_values(&self.q_model.prefix_row(prefix)?, layer, &self.q_cache)?;
        let vm = &self.v_models[layer];
        let v = vm.child_values(&vm.prefix_row(prefix)?, layer, &self.v_caches[layer])?;
        let parent = self.snapped_visits(prefix)?;
        Ok(q.into_iter()
            .zip(v)
            .map(|(q, v)| (ucb_score(q, v.round().max(0.0), parent, c), q))
            .collect())
    }

    /// Beam selection: at each layer keep the best children of the active
    /// paths by UCB (ties by `q`, then lowest index); a path stops at the
    /// first node that was not yet expanded and marks it expanded. Layers
    /// with a single branch offer no choice and count as expanded.
    pub fn select(&mut self, cfg: &SearchConfig) -> Result<Vec<Vec<usize>>> {
        let d = self.depth();
        let mut done: Vec<Vec<usize>> = Vec::new();
        let mut active: Vec<Vec<usize>> = vec![Vec::new()];
        for layer in 0..d {
            if active.is_empty() || done.len() >= cfg.tau {
                break;
            }
            let mut cands: Vec<(f64, f64, Vec<usize>)> = Vec::new();
            for p in &active {
                for (c, (u, q)) in self.score_children(p, cfg.c_explore)?.into_iter().enumerate() {
                    let mut child = p.clone();
                    child.push(c);
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
                if single || self.expanded.contains(&path) {
                    if path.len() == d {
                        done.push(path);
                    } else {
                        next.push(path);
                    }
                } else {
                    self.expanded.insert(path.clone());
                    done.push(path);
                }
            }
            active = next;
        }
        Ok(done)
    }

    /// Completes each prefix to a full branch, greedily by node value or
    /// by sampling from `Q` with the generator stream `stream_base + k`.
    pub fn simulate(&self, prefixes: &[Vec<usize>], cfg: &SearchConfig, stream_base: u64) -> Result<Vec<Vec<usize>>> {
        prefixes
            .par_iter()
            .enumerate()
            .map(|(k, p)| {
                if cfg.stochastic {
                    let mut rng = stream_rng(cfg.seed, stream_base + k as u64);
                    sample_complete(&self.q_model, &self.q_cache, p, &mut rng)
                } else {
                    greedy_complete(&self.q_model, &self.q_cache, p)
                }
            })
            .collect()
    }

    /// Adds deduplicated prefix indicators of the visited branches to every
    /// layer's visit model and rounds.
    pub fn backprop(&mut self, visited: &[Vec<usize>], cfg: &SearchConfig) -> Result<()> {
        let d = self.depth();
        if let Some(p) = visited.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "backprop needs full branches, got length {}",
                p.len()
            )));
        }
        if visited.is_empty() {
            return Ok(());
        }
        self.root_visits += 1;
        let shape = self.shape.clone();
        let updated: Vec<(TensorTrain, SuffixSums)> = (1..=d)
            .into_par_iter()
            .map(|g| {
                let prefixes: BTreeSet<&[usize]> = visited.iter().map(|p| &p[..g]).collect();
                let mut v = self.v_models[g - 1].clone();
                for p in prefixes {
                    let delta = guided_cross(&VisitDelta { prefix: p.to_vec() }, &shape)?;
                    v = v.add(&delta)?;
                }
                let v = v.round(cfg.visit_round_rank, 1e-12);
                let cache = SuffixSums::new(&v);
                Ok((v, cache))
            })
            .collect::<Result<_>>()?;
        for (g, (v, cache)) in updated.into_iter().enumerate() {
            self.v_models[g] = v;
            self.v_caches[g] = cache;
        }
        Ok(())
    }

    /// Moves `Q` at each given leaf to its target value with rank-1 corrections.
    pub fn correct_q(&mut self, leaves: &[(Vec<usize>, f64)], cfg: &SearchConfig) -> Result<()> {
        if leaves.is_empty() {
            return Ok(());
        }
        let mut q = self.q_model.clone();
        for (leaf, target) in leaves {
            let residual = target - self.q_model.eval(leaf)?;
            if residual != 0.0 {
                let delta = guided_cross(&VisitDelta { prefix: leaf.clone() }, &self.shape)?;
                q = q.add(&delta.scale(residual))?;
            }
        }
        self.q_model = q.round(self.q_rank_cap.max(cfg.visit_round_rank), 1e-12);
        self.q_cache = SuffixSums::new(&self.q_model);
        Ok(())
    }
}

/// Outcome of a search, before any continuous refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub solutions: SolutionSet,
    pub trace: Vec<TraceEntry>,
    pub evaluations: usize,
    /// Core entries held by the value and visit models at the end.
    pub storage: usize,
}

/// Builds the value model over the augmented grid (condition modes first).
pub fn build_model(problem: &Problem, cross_cfg: &CrossConfig) -> Result<(TensorTrain, CrossDiagnostics)> {
    problem.check_grid()?;
    let failure = std::sync::Mutex::new(None::<Error>);
    let transform = problem.transform;
    let f = |idx: &[usize]| match problem.augmented_cost(idx) {
        Ok(c) => transform.apply(c),
        Err(e) => {
            failure.lock().expect("poisoned").get_or_insert(e);
            0.0
        }
    };
    let out = tt_cross(&f, &problem.augmented_shape(), cross_cfg)?;
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(out)
}

/// One search instance over a conditioned value model.
pub struct TreeSearch<'a> {
    problem: &'a Problem,
    z: Vec<f64>,
    cfg: SearchConfig,
    state: SearchState,
    solutions: SolutionSet,
    memo: HashMap<Vec<usize>, f64>,
    trace: Vec<TraceEntry>,
    iter: usize,
    started: Instant,
}

impl<'a> TreeSearch<'a> {
    /// `q_aug` is the model over the augmented grid; it is conditioned on `z`.
    pub fn new(problem: &'a Problem, q_aug: &TensorTrain, z: &[f64], cfg: SearchConfig) -> Result<Self> {
        cfg.validate()?;
        problem.check_grid()?;
        if q_aug.shape() != problem.augmented_shape() {
            return Err(Error::ShapeMismatch(format!(
                "model shape {:?} does not match problem grid {:?}",
                q_aug.shape(),
                problem.augmented_shape()
            )));
        }
        let q = condition(q_aug, z, &problem.condition_dims)?;
        Ok(Self {
            problem,
            z: z.to_vec(),
            solutions: SolutionSet::new(cfg.tau),
            cfg,
            state: SearchState::new(q)?,
            memo: HashMap::new(),
            trace: Vec::new(),
            iter: 0,
            started: Instant::now(),
        })
    }

    pub fn state(&self) -> &SearchState {
        &self.state
    }

    pub fn solutions(&self) -> &SolutionSet {
        &self.solutions
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn evaluations(&self) -> usize {
        self.memo.len()
    }

    /// One select, simulate, evaluate, backprop cycle.
    pub fn step(&mut self) -> Result<()> {
        self.iter += 1;
        let prefixes = self.state.select(&self.cfg)?;
        let stream = (self.iter as u64) * (self.cfg.tau as u64);
        let leaves = self.state.simulate(&prefixes, &self.cfg, stream)?;

        let mut fresh: Vec<Vec<usize>> = leaves.iter().filter(|l| !self.memo.contains_key(*l)).cloned().collect();
        fresh.sort();
        fresh.dedup();
        let costs: Vec<f64> = fresh
            .par_iter()
            .map(|b| self.problem.branch_cost(&self.z, b))
            .collect::<Result<_>>()?;
        for (b, c) in fresh.into_iter().zip(costs) {
            self.memo.insert(b, c);
        }
        let mut distinct: Vec<&Vec<usize>> = leaves.iter().collect();
        distinct.sort();
        distinct.dedup();
        for b in &distinct {
            let (actions, weights) = self.problem.decode(b)?;
            self.solutions.insert(Solution {
                actions,
                weights,
                cost: self.memo[*b],
            });
        }
        self.state.backprop(&leaves, &self.cfg)?;
        if self.cfg.update_q {
            let targets: Vec<(Vec<usize>, f64)> = distinct
                .iter()
                .map(|b| ((*b).clone(), self.problem.transform.apply(self.memo[*b])))
                .collect();
            self.state.correct_q(&targets, &self.cfg)?;
        }
        self.trace.push(TraceEntry {
            iter: self.iter,
            best_cost: self.solutions.best().map_or(f64::INFINITY, |s| s.cost),
            evals: self.memo.len(),
            q_rank: self.state.q_model.max_rank(),
            v_rank: self.state.v_rank(),
            wall_ms: self.started.elapsed().as_secs_f64() * 1e3,
        });
        Ok(())
    }

    pub fn run(mut self) -> Result<SearchOutcome> {
        while self.iter < self.cfg.max_iters {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> SearchOutcome {
        SearchOutcome {
            storage: self.state.storage(),
            evaluations: self.memo.len(),
            solutions: self.solutions,
            trace: self.trace,
        }
    }
}

/// Searches from an already built augmented model, running `cfg.instances`
/// independent instances and merging their solution sets.
pub fn search_model(problem: &Problem, q_aug: &TensorTrain, z: &[f64], cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let mut merged: Option<SearchOutcome> = None;
    for k in 0..cfg.instances {
        let inst = SearchConfig {
            seed: cfg.seed.wrapping_add(k as u64),
            ..cfg.clone()
        };
        let out = TreeSearch::new(problem, q_aug, z, inst)?.run()?;
        merged = Some(match merged {
            None => out,
            Some(mut acc) => {
                acc.solutions.merge(out.solutions);
                for (a, b) in acc.trace.iter_mut().zip(&out.trace) {
                    a.best_cost = a.best_cost.min(b.best_cost);
                    a.evals += b.evals;
                    a.v_rank = a.v_rank.max(b.v_rank);
                    a.wall_ms = a.wall_ms.max(b.wall_ms);
                }
                acc.evaluations += out.evaluations;
                acc.storage += out.storage;
                acc
            }
        });
    }
    Ok(merged.expect("at least one instance"))
}

/// Approximates the problem with TT-cross, conditions on `z` and searches.
pub fn run(problem: &Problem, cfg: &SearchConfig, cross_cfg: &CrossConfig, z: &[f64]) -> Result<SearchOutcome> {
    let (q_aug, _) = build_model(problem, cross_cfg)?;
    search_model(problem, &q_aug, z, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ucb_examples() {
        assert_eq!(ucb_score(1.0, 1.0, 1.0, 3.0), 1.0);
        assert_eq!(ucb_score(1.0, 0.0, 5.0, 3.0), f64::INFINITY);
        assert!((ucb_score(2.0, 1.0, std::f64::consts::E, 1.0) - 3.0).abs() < 1e-15);
    }

    fn sol(cost: f64, w: f64) -> Solution {
        Solution {
            actions: vec![],
            weights: vec![w],
            cost,
        }
    }

    #[test]
    fn solution_set_keeps_best_distinct() {
        let mut s = SolutionSet::new(3);
        assert!(s.insert(sol(3.0, 0.0)));
        assert!(s.insert(sol(1.0, 1.0)));
        assert!(!s.insert(sol(1.0, 1.0)));
        assert!(s.insert(sol(2.0, 2.0)));
        assert!(s.insert(sol(0.5, 3.0)));
        assert!(!s.insert(sol(9.0, 4.0)));
        let costs: Vec<f64> = s.entries().iter().map(|e| e.cost).collect();
        assert_eq!(costs, vec![0.5, 1.0, 2.0]);
    }

    #[test]
    fn cold_start_picks_tau_depth_one_prefixes_by_q() {
        let q = TensorTrain::separable(&[vec![0.1, 0.5, 0.3, 0.9, 0.2], vec![1.0, 2.0]]).unwrap();
        let mut st = SearchState::new(q).unwrap();
        let cfg = SearchConfig {
            tau: 3,
            ..Default::default()
        };
        let sel = st.select(&cfg).unwrap();
        assert_eq!(sel, vec![vec![3], vec![1], vec![2]]);
    }

    #[test]
    fn single_branch_tree_selects_full_path() {
        let q = TensorTrain::constant(&[1, 1, 1], 2.0).unwrap();
        let mut st = SearchState::new(q).unwrap();
        let sel = st.select(&SearchConfig::default()).unwrap();
        assert_eq!(sel, vec![vec![0, 0, 0]]);
    }

    #[test]
    fn full_prefix_simulates_to_itself() {
        let q = TensorTrain::constant(&[2, 3], 1.0).unwrap();
        let st = SearchState::new(q).unwrap();
        let out = st.simulate(&[vec![1, 2]], &SearchConfig::default(), 0).unwrap();
        assert_eq!(out, vec![vec![1, 2]]);
    }

    #[test]
    fn indicator_q_is_followed() {
        let q = TensorTrain::separable(&[vec![1.0, 1.0], vec![0.0, 0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let st = SearchState::new(q).unwrap();
        let out = st.simulate(&[vec![0]], &SearchConfig::default(), 0).unwrap();
        assert_eq!(out, vec![vec![0, 2, 1]]);
    }

    #[test]
    fn backprop_counts_and_doubles() {
        let q = TensorTrain::constant(&[3, 4, 2], 1.0).unwrap();
        let mut st = SearchState::new(q).unwrap();
        let cfg = SearchConfig::default();
        let path = vec![2, 1, 0];
        st.backprop(std::slice::from_ref(&path), &cfg).unwrap();
        let below = [8.0, 2.0, 1.0];
        for g in 1..=3 {
            assert!((st.node_visits(&path[..g]).unwrap() - below[g - 1]).abs() < 1e-9);
        }
        assert_eq!(st.node_visits(&[]).unwrap(), 24.0);
        st.backprop(std::slice::from_ref(&path), &cfg).unwrap();
        for g in 1..=3 {
            assert!((st.node_visits(&path[..g]).unwrap() - 2.0 * below[g - 1]).abs() < 1e-9);
        }
        assert!(st.node_visits(&[0]).unwrap().abs() < 1e-9);
    }

    #[test]
    fn shared_prefix_counts_once_per_iteration() {
        let q = TensorTrain::constant(&[3, 3, 3], 1.0).unwrap();
        let mut st = SearchState::new(q).unwrap();
        st.backprop(&[vec![1, 2, 0], vec![1, 2, 2]], &SearchConfig::default())
            .unwrap();
        assert!((st.node_visits(&[1, 2]).unwrap() - 3.0).abs() < 1e-9);
        assert!((st.node_visits(&[1, 2, 0]).unwrap() - 1.0).abs() < 1e-9);
        st.backprop(&[vec![1, 2, 1]], &SearchConfig::default()).unwrap();
        assert!((st.node_visits(&[1, 2]).unwrap() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn backprop_rejects_partial_paths() {
        let q = TensorTrain::constant(&[2, 2], 1.0).unwrap();
        let mut st = SearchState::new(q).unwrap();
        assert!(st.backprop(&[vec![1]], &SearchConfig::default()).is_err());
    }

    #[test]
    fn q_correction_hits_targets() {
        let q = TensorTrain::constant(&[3, 3], 1.0).unwrap();
        let mut st = SearchState::new(q).unwrap();
        st.correct_q(&[(vec![1, 1], 5.0), (vec![0, 2], -1.0)], &SearchConfig::default())
            .unwrap();
        assert!((st.q_model().eval(&[1, 1]).unwrap() - 5.0).abs() < 1e-10);
        assert!((st.q_model().eval(&[0, 2]).unwrap() + 1.0).abs() < 1e-10);
        assert!((st.q_model().eval(&[2, 2]).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig {
            tau: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            c_explore: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SearchConfig::default().validate().is_ok());
    }
}

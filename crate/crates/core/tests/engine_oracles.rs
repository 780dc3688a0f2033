mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use ttts::cross::CrossConfig;
use ttts::oracle::{dense_reconstruct, grid_argmin, regrid, table_mcts, DenseVisitCounter, TableMcts};
use ttts::problems::config::builtin;
use ttts::search::{build_model, search_model, SearchConfig, SearchState, TreeSearch};
use ttts::tt::{SuffixSums, TensorTrain};
use ttts::ttgo::greedy_complete;

/// Runs the tensor-train state and the table oracle side by side on the
/// same value tensor and compares every selection and rollout.
fn lockstep(q: &TensorTrain, cfg: &SearchConfig, iters: usize) {
    let mut state = SearchState::new(q.clone()).unwrap();
    let mut table = TableMcts::from_dense(&dense_reconstruct(q).unwrap()).unwrap();
    for iter in 1..=iters {
        let a = state.select(cfg).unwrap();
        let b = table.select(cfg);
        assert_eq!(a, b, "selection differs at iteration {iter}");
        let stream = (iter * cfg.tau) as u64;
        let la = state.simulate(&a, cfg, stream).unwrap();
        let lb = table.simulate(&b, cfg, stream);
        assert_eq!(la, lb, "rollouts differ at iteration {iter}");
        state.backprop(&la, cfg).unwrap();
        table.backprop(&lb);
    }
}

#[test]
fn selection_matches_table_search_on_three_layers() {
    let mut r = rng(40);
    let q = random_tt(&mut r, &[3, 4, 3], 2, 0.1, 1.0);
    let cfg = SearchConfig {
        tau: 4,
        ..Default::default()
    };
    lockstep(&q, &cfg, 50);
}

#[test]
fn selection_matches_table_search_on_four_layers() {
    let mut r = rng(41);
    for k in 0..5 {
        let shape = [3, 2, 4, 3];
        let q = random_tt(&mut r, &shape, 3, 0.0, 1.0);
        let cfg = SearchConfig {
            tau: 5,
            c_explore: 0.5 + k as f64,
            stochastic: k % 2 == 1,
            seed: k,
            ..Default::default()
        };
        lockstep(&q, &cfg, 60);
    }
}

#[test]
fn greedy_completion_matches_dense_descent() {
    let mut r = rng(42);
    let q = random_tt(&mut r, &[5, 5, 5, 5], 3, -0.5, 1.0);
    let cache = SuffixSums::new(&q);
    for g in 0..4 {
        let prefix: Vec<usize> = (0..g).map(|_| r.random_range(0..5)).collect();
        let mut want = prefix.clone();
        while want.len() < 4 {
            let sums: Vec<f64> = (0..5)
                .map(|c| {
                    let mut p = want.clone();
                    p.push(c);
                    prefix_sum(&q, &p)
                })
                .collect();
            let best = (0..5).fold(0, |b, c| if sums[c] > sums[b] { c } else { b });
            want.push(best);
        }
        assert_eq!(greedy_complete(&q, &cache, &prefix).unwrap(), want);
    }
}

#[test]
fn single_path_visits_scale_with_completions() {
    let shape = [3, 4, 2];
    let mut state = SearchState::new(TensorTrain::constant(&shape, 1.0).unwrap()).unwrap();
    let mut counter = DenseVisitCounter::new(&shape);
    let leaf = vec![2, 1, 0];
    state
        .backprop(std::slice::from_ref(&leaf), &SearchConfig::default())
        .unwrap();
    counter.record(std::slice::from_ref(&leaf));
    for g in 0..=3 {
        let below: usize = shape[g..].iter().product();
        let got = state.node_visits(&leaf[..g]).unwrap();
        assert!((got - below as f64).abs() < 1e-9, "depth {g}: {got}");
        assert!((got - counter.node_visits(&leaf[..g])).abs() < 1e-9);
    }
}

#[test]
fn shared_prefix_accumulates_across_iterations() {
    let shape = [3, 3, 3];
    let cfg = SearchConfig::default();
    let mut state = SearchState::new(TensorTrain::constant(&shape, 1.0).unwrap()).unwrap();
    let mut counter = DenseVisitCounter::new(&shape);
    for leaf in [vec![1, 2, 0], vec![1, 2, 2]] {
        state.backprop(std::slice::from_ref(&leaf), &cfg).unwrap();
        counter.record(&[leaf]);
    }
    let got = state.node_visits(&[1, 2]).unwrap();
    assert!((got - 2.0 * 3.0).abs() < 1e-9);
    assert!((got - counter.node_visits(&[1, 2])).abs() < 1e-9);
}

#[test]
fn exact_model_without_exploration_finds_the_optimum_in_one_iteration() {
    let p = regrid(&builtin("f2").unwrap().build().unwrap(), 20).unwrap();
    let (q, diag) = build_model(
        &p,
        &CrossConfig {
            max_rank: 11,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(diag.validation_error < 1e-10);
    let cfg = SearchConfig {
        tau: 11,
        c_explore: 0.0,
        max_iters: 1,
        ..Default::default()
    };
    let out = search_model(&p, &q, &[], &cfg).unwrap();
    assert_eq!(out.solutions.best().unwrap().cost, grid_argmin(&p, None).unwrap().cost);
}

#[test]
fn exact_model_search_equals_table_search() {
    let p = regrid(&builtin("f2").unwrap().build().unwrap(), 20).unwrap();
    let (q, _) = build_model(
        &p,
        &CrossConfig {
            max_rank: 11,
            ..Default::default()
        },
    )
    .unwrap();
    for seed in 0..3 {
        let cfg = SearchConfig {
            max_iters: 30,
            tau: 6,
            seed,
            stochastic: seed == 2,
            ..Default::default()
        };
        let tt = search_model(&p, &q, &[], &cfg).unwrap();
        let table = table_mcts(&p, &cfg, None).unwrap();
        assert_eq!(tt.solutions, table.solutions, "seed {seed}");
    }
}

#[test]
fn f1_search_reaches_the_grid_minimum() {
    let p = builtin("f1").unwrap().build().unwrap();
    let (q, _) = build_model(
        &p,
        &CrossConfig {
            max_rank: 2,
            ..Default::default()
        },
    )
    .unwrap();
    let out = search_model(&p, &q, &[], &SearchConfig::default()).unwrap();
    let opt = grid_argmin(&p, None).unwrap();
    assert!(out.solutions.best().unwrap().cost <= opt.cost + 1e-2);
}

#[test]
fn f2_search_returns_the_grid_argmin() {
    let p = builtin("f2").unwrap().build().unwrap();
    let (q, _) = build_model(
        &p,
        &CrossConfig {
            max_rank: 2,
            ..Default::default()
        },
    )
    .unwrap();
    let out = search_model(&p, &q, &[], &SearchConfig::default()).unwrap();
    let opt = grid_argmin(&p, None).unwrap();
    let best = out.solutions.best().unwrap();
    assert_eq!(best.actions, opt.actions);
    assert_eq!(best.weights, opt.weights);
}

#[test]
fn trace_is_monotone_and_every_prefix_of_the_run_is_valid() {
    let p = builtin("f2").unwrap().build().unwrap();
    let (q, _) = build_model(&p, &CrossConfig::default()).unwrap();
    let cfg = SearchConfig {
        max_iters: 25,
        ..Default::default()
    };
    let mut search = TreeSearch::new(&p, &q, &[], cfg.clone()).unwrap();
    for _ in 0..cfg.max_iters {
        search.step().unwrap();
        let e = search.solutions().entries();
        assert!(!e.is_empty() && e.len() <= cfg.tau);
        assert!(e.windows(2).all(|w| w[0].cost <= w[1].cost));
    }
    let trace = search.trace();
    assert!(trace.windows(2).all(|w| w[1].best_cost <= w[0].best_cost));
}

#[test]
fn identical_seeds_give_identical_runs() {
    let p = builtin("push").unwrap().build().unwrap();
    let (q, _) = build_model(
        &p,
        &CrossConfig {
            max_rank: 8,
            ..Default::default()
        },
    )
    .unwrap();
    let cfg = SearchConfig {
        max_iters: 10,
        stochastic: true,
        seed: 5,
        ..Default::default()
    };
    let a = search_model(&p, &q, &[], &cfg).unwrap();
    let b = search_model(&p, &q, &[], &cfg).unwrap();
    assert_eq!(a.solutions, b.solutions);
    let strip = |t: &[ttts::search::TraceEntry]| {
        t.iter()
            .map(|e| (e.iter, e.best_cost, e.evals, e.q_rank, e.v_rank))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a.trace), strip(&b.trace));
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn visit_models_match_a_dense_counter(seed in any::<u64>()) {
        let mut r = rng(seed);
        let shape = random_shape(&mut r, 4, 5);
        let cfg = SearchConfig::default();
        let mut state = SearchState::new(TensorTrain::constant(&shape, 1.0).unwrap()).unwrap();
        let mut counter = DenseVisitCounter::new(&shape);
        for _ in 0..r.random_range(1..12) {
            let visited: Vec<Vec<usize>> = (0..r.random_range(1..6))
                .map(|_| shape.iter().map(|&n| r.random_range(0..n)).collect())
                .collect();
            state.backprop(&visited, &cfg).unwrap();
            counter.record(&visited);
        }
        for idx in all_indices(&shape) {
            for g in 0..=shape.len() {
                let got = state.node_visits(&idx[..g]).unwrap();
                prop_assert!((got - counter.node_visits(&idx[..g])).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn solution_sets_stay_sorted_and_bounded(costs in prop::collection::vec((0u8..20, -5.0f64..5.0), 0..60), tau in 1usize..8) {
        use ttts::search::{Solution, SolutionSet};
        let mut set = SolutionSet::new(tau);
        for (w, c) in costs {
            set.insert(Solution { actions: vec![], weights: vec![w as f64], cost: c });
        }
        let e = set.entries();
        prop_assert!(e.len() <= tau);
        prop_assert!(e.windows(2).all(|w| w[0].cost <= w[1].cost));
    }
}

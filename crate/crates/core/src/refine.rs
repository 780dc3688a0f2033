//! CMA-ES polishing of the continuous weights of search candidates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::search::{Solution, SolutionSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaesConfig {
    pub population: usize,
    pub iterations: usize,
    pub sigma0: f64,
    /// Optional per-dimension scaling of `sigma0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
}

impl CmaesConfig {
    pub fn new(bounds: Vec<(f64, f64)>, sigma0: f64) -> Self {
        Self {
            population: 25,
            iterations: 20,
            sigma0,
            scales: None,
            bounds,
            seed: 0,
        }
    }

    /// Defaults for a problem's weight block: step size of one grid spacing.
    pub fn for_problem(problem: &Problem) -> Self {
        let spacings = problem.weight_spacings();
        let sigma0 = spacings.iter().cloned().fold(0.0, f64::max);
        let mut cfg = Self::new(problem.weight_bounds(), if sigma0 > 0.0 { sigma0 } else { 1.0 });
        if sigma0 > 0.0 && spacings.iter().any(|&s| s != sigma0) {
            cfg.scales = Some(
                spacings
                    .iter()
                    .map(|&s| if s > 0.0 { s / sigma0 } else { 1.0 })
                    .collect(),
            );
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::Config(format!(
                "CMA-ES population must be at least 4, got {}",
                self.population
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("CMA-ES needs at least one iteration".into()));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::Config(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        if self.bounds.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::Config("CMA-ES bounds must satisfy lo <= hi".into()));
        }
        if let Some(s) = &self.scales {
            if s.len() != self.bounds.len() || s.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Config(
                    "CMA-ES scales must be positive, one per dimension".into(),
                ));
            }
        }
        Ok(())
    }
}

fn clip(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// `(mu / mu_w, lambda)`-CMA-ES from `w0`; returns the best point seen,
/// which is never worse than `w0`.
pub fn cmaes_refine<F>(j: F, w0: &[f64], cfg: &CmaesConfig) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let n = w0.len();
    if cfg.bounds.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} bounds for {n} weights",
            cfg.bounds.len()
        )));
    }
    if w0.iter().zip(&cfg.bounds).any(|(w, (lo, hi))| w < lo || w > hi) {
        return Err(Error::Domain("initial weights outside the CMA-ES bounds".into()));
    }
    let mut best = (w0.to_vec(), j(w0));
    if n == 0 {
        return Ok(best);
    }

    let lambda = cfg.population;
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu)
        .map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    let nf = n as f64;
    let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
    let cs = (mueff + 2.0) / (nf + mueff + 5.0);
    let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
    let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
    let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mean = DVector::from_column_slice(w0);
    let mut sigma = cfg.sigma0;
    let mut c = match &cfg.scales {
        Some(s) => DMatrix::from_diagonal(&DVector::from_iterator(n, s.iter().map(|v| v * v))),
        None => DMatrix::identity(n, n),
    };
    let mut ps = DVector::zeros(n);
    let mut pc = DVector::zeros(n);

    for gen in 0..cfg.iterations {
        let eig = SymmetricEigen::new(c.clone());
        let d: DVector<f64> = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());
        let b = eig.eigenvectors;
        let bd = &b * DMatrix::from_diagonal(&d);
        let inv_sqrt = &b * DMatrix::from_diagonal(&d.map(|v| 1.0 / v)) * b.transpose();

        let points: Vec<Vec<f64>> = (0..lambda)
            .map(|_| {
                let z = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
                let mut x: Vec<f64> = (&mean + sigma * (&bd * z)).iter().copied().collect();
                clip(&mut x, &cfg.bounds);
                x
            })
            .collect();
        let costs: Vec<f64> = points.par_iter().map(|x| j(x)).collect();

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        let top = order[0];
        if costs[top] < best.1 {
            best = (points[top].clone(), costs[top]);
        }

        let old = mean.clone();
        let ys: Vec<DVector<f64>> = order[..mu]
            .iter()
            .map(|&k| (DVector::from_column_slice(&points[k]) - &old) / sigma)
            .collect();
        let yw = ys
            .iter()
            .zip(&weights)
            .fold(DVector::zeros(n), |acc, (y, w)| acc + y * *w);
        mean = &old + sigma * &yw;

        ps = (1.0 - cs) * &ps + (cs * (2.0 - cs) * mueff).sqrt() * (&inv_sqrt * &yw);
        let norm_ps = ps.norm();
        let hsig = norm_ps / (1.0 - (1.0 - cs).powi(2 * (gen as i32 + 1))).sqrt() / chi_n < 1.4 + 2.0 / (nf + 1.0);
        let h = if hsig { 1.0 } else { 0.0 };
        pc = (1.0 - cc) * &pc + h * (cc * (2.0 - cc) * mueff).sqrt() * &yw;
        let rank_mu = ys
            .iter()
            .zip(&weights)
            .fold(DMatrix::zeros(n, n), |acc, (y, w)| acc + *w * (y * y.transpose()));
        c = (1.0 - c1 - cmu + (1.0 - h) * c1 * cc * (2.0 - cc)) * &c + c1 * (&pc * pc.transpose()) + cmu * rank_mu;
        c = (&c + c.transpose()) * 0.5;
        sigma *= ((cs / damps) * (norm_ps / chi_n - 1.0)).exp();
        if !sigma.is_finite() || sigma <= 0.0 {
            break;
        }
    }
    Ok(best)
}

/// Refines the weights of every candidate with its actions frozen; candidate
/// `k` uses seed `cfg.seed + k`.
pub fn refine_solutions(problem: &Problem, z: &[f64], set: &SolutionSet, cfg: &CmaesConfig) -> Result<SolutionSet> {
    let refined: Vec<Solution> = set
        .entries()
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let local = CmaesConfig {
                seed: cfg.seed.wrapping_add(k as u64),
                ..cfg.clone()
            };
            let j = |w: &[f64]| problem.cost(z, &s.actions, w).unwrap_or(f64::INFINITY);
            let (weights, cost) = cmaes_refine(j, &s.weights, &local)?;
            Ok(Solution {
                actions: s.actions.clone(),
                weights,
                cost,
            })
        })
        .collect::<Result<_>>()?;
    let mut out = SolutionSet::new(set.tau());
    for s in refined {
        out.insert(s);
    }
    Ok(out)
}

/// CMA-ES as a standalone solver from the center of the weight box; only
/// defined for problems without discrete actions.
pub fn cmaes_solve(problem: &Problem, z: &[f64], cfg: &CmaesConfig) -> Result<Solution> {
    if !problem.action_dims.is_empty() {
        return Err(Error::Incompatible(format!(
            "CMA-ES cannot search the {} discrete action layers of problem {}",
            problem.action_dims.len(),
            problem.name
        )));
    }
    let w0: Vec<f64> = cfg.bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let j = |w: &[f64]| problem.cost(z, &[], w).unwrap_or(f64::INFINITY);
    let (weights, cost) = cmaes_refine(j, &w0, cfg)?;
    Ok(Solution {
        actions: vec![],
        weights,
        cost,
    })
}

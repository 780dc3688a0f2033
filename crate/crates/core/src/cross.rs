//! Cross approximation of black-box grid functions into tensor-train format.
//!
//! The sweep follows the interpolative scheme: for each bond the fiber matrix
//! `f(I_{<j} x i_j, J_{>j})` is orthogonalized, maxvol selects the skeleton
//! rows, and the core becomes `Q Q[piv]^{-1}`. Ranks start at 2 and double up
//! to `max_rank` while the validation error stays above `tol`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tt::{TensorTrain, TtCore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossConfig {
    pub max_rank: usize,
    pub tol: f64,
    pub max_sweeps: usize,
    pub validation_samples: usize,
    pub seed: u64,
}

impl Default for CrossConfig {
    fn default() -> Self {
        Self {
            max_rank: 10,
            tol: 1e-3,
            max_sweeps: 10,
            validation_samples: 1000,
            seed: 0,
        }
    }
}

impl CrossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rank == 0 {
            return Err(Error::Config("cross max_rank must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("cross tol must be positive, got {}", self.tol)));
        }
        if self.max_sweeps == 0 || self.validation_samples == 0 {
            return Err(Error::Config(
                "cross max_sweeps and validation_samples must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDiagnostics {
    pub achieved_ranks: Vec<usize>,
    /// Distinct grid entries evaluated by the sweeps (validation excluded).
    pub evaluations_used: usize,
    pub validation_evaluations: usize,
    /// Relative l2 error on the validation sample.
    pub validation_error: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Memoizing batch evaluator; batches run on the rayon pool in a fixed order.
struct Sampler<'a, F> {
    f: &'a F,
    memo: HashMap<Vec<usize>, f64>,
}

impl<'a, F: Fn(&[usize]) -> f64 + Sync> Sampler<'a, F> {
    fn new(f: &'a F) -> Self {
        Self {
            f,
            memo: HashMap::new(),
        }
    }

    fn eval_batch(&mut self, indices: &[Vec<usize>]) -> Vec<f64> {
        let mut missing: Vec<&Vec<usize>> = Vec::new();
        {
            let mut seen = std::collections::HashSet::new();
            for idx in indices {
                if !self.memo.contains_key(idx) && seen.insert(idx) {
                    missing.push(idx);
                }
            }
        }
        let fresh: Vec<f64> = missing.par_iter().map(|idx| (self.f)(idx)).collect();
        for (idx, v) in missing.into_iter().zip(fresh) {
            self.memo.insert(idx.clone(), v);
        }
        indices.iter().map(|idx| self.memo[idx]).collect()
    }

    fn evaluations(&self) -> usize {
        self.memo.len()
    }
}

/// Approximate `f` on the grid `shape` with a tensor train of ranks at most `cfg.max_rank`.
pub fn tt_cross<F>(f: &F, shape: &[usize], cfg: &CrossConfig) -> Result<(TensorTrain, CrossDiagnostics)>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    cfg.validate()?;
    if shape.is_empty() {
        return Err(Error::ShapeMismatch(
            "cross approximation needs at least one mode".into(),
        ));
    }
    if let Some(k) = shape.iter().position(|&n| n == 0) {
        return Err(Error::InfeasibleGrid(format!("mode {k} has size 0")));
    }
    let d = shape.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sampler = Sampler::new(f);

    let validation = validation_set(shape, cfg);
    let truth: Vec<f64> = validation.par_iter().map(|idx| f(idx)).collect();

    if d == 1 {
        let fibers: Vec<Vec<usize>> = (0..shape[0]).map(|i| vec![i]).collect();
        let values = sampler.eval_batch(&fibers);
        let tt = TensorTrain::new(vec![TtCore::new(1, shape[0], 1, sanitize(values))?])?;
        let err = relative_error(&tt, &validation, &truth);
        let diag = CrossDiagnostics {
            achieved_ranks: vec![],
            evaluations_used: sampler.evaluations(),
            validation_evaluations: validation.len(),
            validation_error: err,
            sweeps: 1,
            converged: err <= cfg.tol,
        };
        return Ok((tt, diag));
    }

    let caps = bond_caps(shape, cfg.max_rank);
    let mut target = cfg.max_rank.min(2);
    let mut right = vec![Vec::new(); d - 1];
    let mut left = vec![Vec::new(); d - 1];
    grow_right_sets(&mut right, shape, &caps, target, &mut rng);

    let mut best: Option<(TensorTrain, f64)> = None;
    let mut sweeps = 0;
    let mut left_to_right = true;
    loop {
        let tt = if left_to_right {
            sweep_left_to_right(&mut sampler, shape, &right, &mut left)?
        } else {
            sweep_right_to_left(&mut sampler, shape, &left, &mut right)?
        };
        sweeps += 1;
        let err = relative_error(&tt, &validation, &truth);
        if best.as_ref().is_none_or(|(_, e)| err < *e) {
            best = Some((tt, err));
        }
        if err <= cfg.tol || sweeps >= cfg.max_sweeps {
            break;
        }
        // Grow after each left/right pair; the right sets are fresh at that point.
        if !left_to_right && target < cfg.max_rank {
            target = (target * 2).min(cfg.max_rank);
            grow_right_sets(&mut right, shape, &caps, target, &mut rng);
        }
        left_to_right = !left_to_right;
    }

    let (tt, _) = best.expect("at least one sweep ran");
    // Drop numerically null directions left by over-provisioned bonds.
    let tt = tt.round(cfg.max_rank, 1e-10);
    let err = relative_error(&tt, &validation, &truth);
    let diag = CrossDiagnostics {
        achieved_ranks: tt.ranks(),
        evaluations_used: sampler.evaluations(),
        validation_evaluations: validation.len(),
        validation_error: err,
        sweeps,
        converged: err <= cfg.tol,
    };
    Ok((tt, diag))
}

fn validation_set(shape: &[usize], cfg: &CrossConfig) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..cfg.validation_samples)
        .map(|_| shape.iter().map(|&n| rng.random_range(0..n)).collect())
        .collect()
}

fn relative_error(tt: &TensorTrain, indices: &[Vec<usize>], truth: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (idx, &y) in indices.iter().zip(truth) {
        let approx = tt.eval(idx).unwrap_or(f64::NAN);
        num += (approx - y).powi(2);
        den += y * y;
    }
    let err = if den > 0.0 {
        (num / den).sqrt()
    } else {
        (num / indices.len().max(1) as f64).sqrt()
    };
    if err.is_nan() {
        f64::INFINITY
    } else {
        err
    }
}

/// Largest useful rank per bond: `min(max_rank, prod N_left, prod N_right)`.
fn bond_caps(shape: &[usize], max_rank: usize) -> Vec<usize> {
    let d = shape.len();
    (0..d - 1)
        .map(|j| {
            let left = shape[..=j].iter().fold(1usize, |a, &n| a.saturating_mul(n));
            let right = shape[j + 1..].iter().fold(1usize, |a, &n| a.saturating_mul(n));
            max_rank.min(left).min(right)
        })
        .collect()
}

/// Pad each right index set to `min(target, cap)` with random nested candidates.
fn grow_right_sets(
    right: &mut [Vec<Vec<usize>>],
    shape: &[usize],
    caps: &[usize],
    target: usize,
    rng: &mut ChaCha8Rng,
) {
    let d = shape.len();
    for j in (0..d - 1).rev() {
        let want = target.min(caps[j]);
        if right[j].len() >= want {
            continue;
        }
        let mut candidates: Vec<Vec<usize>> = Vec::new();
        let tails: Vec<Vec<usize>> = if j + 1 == d - 1 {
            vec![Vec::new()]
        } else {
            right[j + 1].clone()
        };
        for i in 0..shape[j + 1] {
            for tail in &tails {
                let mut c = Vec::with_capacity(tail.len() + 1);
                c.push(i);
                c.extend_from_slice(tail);
                if !right[j].contains(&c) {
                    candidates.push(c);
                }
            }
        }
        candidates.shuffle(rng);
        let need = want - right[j].len();
        right[j].extend(candidates.into_iter().take(need));
    }
}

fn sweep_left_to_right<F: Fn(&[usize]) -> f64 + Sync>(
    sampler: &mut Sampler<'_, F>,
    shape: &[usize],
    right: &[Vec<Vec<usize>>],
    left: &mut [Vec<Vec<usize>>],
) -> Result<TensorTrain> {
    let d = shape.len();
    let mut cores = Vec::with_capacity(d);
    let mut prev: Vec<Vec<usize>> = vec![Vec::new()];
    for j in 0..d {
        let n = shape[j];
        let empty = vec![Vec::new()];
        let cols = if j + 1 < d { &right[j] } else { &empty };
        let mut fibers = Vec::with_capacity(prev.len() * n * cols.len());
        for p in &prev {
            for i in 0..n {
                for c in cols {
                    let mut idx = Vec::with_capacity(d);
                    idx.extend_from_slice(p);
                    idx.push(i);
                    idx.extend_from_slice(c);
                    fibers.push(idx);
                }
            }
        }
        let values = sanitize(sampler.eval_batch(&fibers));
        if j + 1 == d {
            cores.push(TtCore::new(prev.len(), n, 1, values)?);
            break;
        }
        let z = DMatrix::from_row_slice(prev.len() * n, cols.len(), &values);
        let (interp, piv) = skeleton(&z);
        let k = piv.len();
        cores.push(core_from_rows(prev.len(), n, k, &interp)?);
        left[j] = piv
            .iter()
            .map(|&row| {
                let mut idx = prev[row / n].clone();
                idx.push(row % n);
                idx
            })
            .collect();
        prev = left[j].clone();
    }
    TensorTrain::new(cores)
}

fn sweep_right_to_left<F: Fn(&[usize]) -> f64 + Sync>(
    sampler: &mut Sampler<'_, F>,
    shape: &[usize],
    left: &[Vec<Vec<usize>>],
    right: &mut [Vec<Vec<usize>>],
) -> Result<TensorTrain> {
    let d = shape.len();
    let mut cores = vec![None; d];
    let mut next: Vec<Vec<usize>> = vec![Vec::new()];
    for j in (0..d).rev() {
        let n = shape[j];
        let empty = vec![Vec::new()];
        let rows = if j > 0 { &left[j - 1] } else { &empty };
        let mut fibers = Vec::with_capacity(rows.len() * n * next.len());
        for p in rows {
            for i in 0..n {
                for c in &next {
                    let mut idx = Vec::with_capacity(d);
                    idx.extend_from_slice(p);
                    idx.push(i);
                    idx.extend_from_slice(c);
                    fibers.push(idx);
                }
            }
        }
        let values = sanitize(sampler.eval_batch(&fibers));
        let r = next.len();
        if j == 0 {
            cores[0] = Some(TtCore::new(1, n, r, values)?);
            break;
        }
        // Work on the transpose so the skeleton selects columns (i_j, J_{>j}).
        let z = DMatrix::from_row_slice(rows.len(), n * r, &values).transpose();
        let (interp, piv) = skeleton(&z);
        let k = piv.len();
        let t = interp.transpose();
        let mut vals = Vec::with_capacity(k * n * r);
        for a in 0..k {
            for col in 0..n * r {
                vals.push(t[(a, col)]);
            }
        }
        cores[j] = Some(TtCore::new(k, n, r, vals)?);
        right[j - 1] = piv
            .iter()
            .map(|&col| {
                let mut idx = Vec::with_capacity(d - j);
                idx.push(col / r);
                idx.extend_from_slice(&next[col % r]);
                idx
            })
            .collect();
        next = right[j - 1].clone();
    }
    TensorTrain::new(cores.into_iter().map(|c| c.expect("every core is set")).collect())
}

fn core_from_rows(l: usize, n: usize, r: usize, m: &DMatrix<f64>) -> Result<TtCore> {
    let mut vals = Vec::with_capacity(l * n * r);
    for row in 0..m.nrows() {
        for col in 0..m.ncols() {
            vals.push(m[(row, col)]);
        }
    }
    TtCore::new(l, n, r, vals)
}

fn sanitize(mut values: Vec<f64>) -> Vec<f64> {
    for v in &mut values {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
    values
}

/// Orthogonalize the columns of `z`, pick maxvol rows, and return the
/// interpolation matrix `Q Q[piv]^{-1}` together with the pivots.
fn skeleton(z: &DMatrix<f64>) -> (DMatrix<f64>, Vec<usize>) {
    let q = z.clone().qr().q();
    let piv = maxvol(&q, 1.01, 100);
    let k = piv.len();
    let sub = DMatrix::from_fn(k, k, |a, b| q[(piv[a], b)]);
    let inv = sub.clone().lu().try_inverse().unwrap_or_else(|| pseudo_inverse(&sub));
    let mut interp = q * inv;
    // Skeleton rows interpolate exactly.
    for (a, &p) in piv.iter().enumerate() {
        for b in 0..k {
            interp[(p, b)] = if a == b { 1.0 } else { 0.0 };
        }
    }
    (interp, piv)
}

fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    crate::linalg::pseudo_inverse(m, 1e-12)
}

/// Greedy maximal-volume row selection for a tall `n x r` matrix.
///
/// Starts from the pivots of Gaussian elimination with partial pivoting and
/// swaps rows while some coefficient of `A A[piv]^{-1}` exceeds `tol` in
/// magnitude, up to `max_swaps` swaps. Ties pick the lowest index.
pub fn maxvol(a: &DMatrix<f64>, tol: f64, max_swaps: usize) -> Vec<usize> {
    let (n, r) = (a.nrows(), a.ncols());
    assert!(n >= r, "maxvol needs at least as many rows as columns");
    if n == r {
        return (0..n).collect();
    }
    let mut piv = lu_pivots(a);
    let sub = DMatrix::from_fn(r, r, |x, y| a[(piv[x], y)]);
    let Some(inv) = sub.lu().try_inverse() else {
        return piv;
    };
    let mut b = a * inv;
    for _ in 0..max_swaps {
        let (mut bi, mut bj, mut best) = (0, 0, 0.0);
        for i in 0..n {
            for j in 0..r {
                let v = b[(i, j)].abs();
                if v > best {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        if best <= tol {
            break;
        }
        piv[bj] = bi;
        let col = b.column(bj).clone_owned();
        let mut row = b.row(bi).clone_owned();
        row[bj] -= 1.0;
        let pivot = b[(bi, bj)];
        b -= (col * row) / pivot;
    }
    piv
}

fn lu_pivots(a: &DMatrix<f64>) -> Vec<usize> {
    let (n, r) = (a.nrows(), a.ncols());
    let mut m = a.clone();
    let mut used = vec![false; n];
    let mut piv = Vec::with_capacity(r);
    for c in 0..r {
        let mut best = None;
        let mut best_val = -1.0;
        for i in 0..n {
            if !used[i] && m[(i, c)].abs() > best_val {
                best_val = m[(i, c)].abs();
                best = Some(i);
            }
        }
        let p = best.expect("row available");
        used[p] = true;
        piv.push(p);
        let pv = m[(p, c)];
        if pv != 0.0 {
            for i in 0..n {
                if !used[i] {
                    let factor = m[(i, c)] / pv;
                    for k in c..r {
                        let sub = factor * m[(p, k)];
                        m[(i, k)] -= sub;
                    }
                }
            }
        }
    }
    piv
}

/// Visited branch prefix recorded during backpropagation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VisitDelta {
    pub prefix: Vec<usize>,
}

/// Exact rank-1 indicator of the branches extending `delta.prefix`.
///
/// Because the nonzero pattern of a visit delta is known, a single guided
/// pass reduces to unit-basis slices on the fixed layers and all-ones slices
/// on the free ones.
pub fn guided_cross(delta: &VisitDelta, shape: &[usize]) -> Result<TensorTrain> {
    if delta.prefix.len() > shape.len() {
        return Err(Error::DimensionMismatch(format!(
            "prefix of length {} on a tree with {} layers",
            delta.prefix.len(),
            shape.len()
        )));
    }
    let factors = shape
        .iter()
        .enumerate()
        .map(|(layer, &n)| match delta.prefix.get(layer) {
            Some(&i) if i >= n => Err(Error::IndexOutOfRange {
                layer,
                index: i,
                size: n,
            }),
            Some(&i) => {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                Ok(e)
            }
            None => Ok(vec![1.0; n]),
        })
        .collect::<Result<Vec<_>>>()?;
    TensorTrain::separable(&factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_function_gives_rank_one() {
        let cfg = CrossConfig::default();
        let (tt, diag) = tt_cross(&|_: &[usize]| 1.0, &[5, 4, 6], &cfg).unwrap();
        assert_eq!(tt.ranks(), vec![1, 1]);
        assert!(diag.converged);
        for idx in [[0, 0, 0], [4, 3, 5], [2, 1, 3]] {
            assert!((tt.eval(&idx).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_is_exact() {
        let (tt, diag) = tt_cross(&|i: &[usize]| (i[0] as f64).sin(), &[7], &CrossConfig::default()).unwrap();
        assert_eq!(diag.validation_error, 0.0);
        assert_eq!(tt.eval(&[3]).unwrap(), 3f64.sin());
    }

    #[test]
    fn rejects_empty_and_zero_modes() {
        let cfg = CrossConfig::default();
        assert!(tt_cross(&|_: &[usize]| 0.0, &[], &cfg).is_err());
        assert!(matches!(
            tt_cross(&|_: &[usize]| 0.0, &[3, 0], &cfg),
            Err(Error::InfeasibleGrid(_))
        ));
        let bad = CrossConfig { tol: 0.0, ..cfg };
        assert!(tt_cross(&|_: &[usize]| 0.0, &[3], &bad).is_err());
    }

    #[test]
    fn maxvol_picks_dominant_rows() {
        let a = DMatrix::from_row_slice(4, 2, &[0.1, 0.0, 5.0, 0.1, 0.0, 0.2, 0.2, 3.0]);
        let mut piv = maxvol(&a, 1.0, 100);
        piv.sort();
        assert_eq!(piv, vec![1, 3]);
    }

    #[test]
    fn guided_cross_indicators() {
        let all = guided_cross(&VisitDelta { prefix: vec![] }, &[2, 2]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(all.eval(&[i, j]).unwrap(), 1.0);
            }
        }
        let row = guided_cross(&VisitDelta { prefix: vec![1] }, &[2, 3]).unwrap();
        for j in 0..3 {
            assert_eq!(row.eval(&[0, j]).unwrap(), 0.0);
            assert_eq!(row.eval(&[1, j]).unwrap(), 1.0);
        }
        let t = guided_cross(&VisitDelta { prefix: vec![0, 2] }, &[3, 3, 3]).unwrap();
        let cache = crate::tt::SuffixSums::new(&t);
        assert_eq!(cache.total(), 3.0);
        assert!(matches!(
            guided_cross(&VisitDelta { prefix: vec![3] }, &[3, 3]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}

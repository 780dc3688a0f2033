//! Tensor-train storage and algebra.
//!
//! A tensor train represents a `d`-way tensor as a chain of third-order cores
//! `G_k` of shape `(r_{k-1}, N_k, r_k)` with `r_0 = r_d = 1`:
//!
//! ```text
//! T(i_1, ..., i_d) = G_1[:, i_1, :] G_2[:, i_2, :] ... G_d[:, i_d, :]
//! ```
//!
//! Viewed as a decision tree, layer `k` of the tree is mode `k` of the tensor
//! and a complete branch is a full index tuple. Node queries (the sum of all
//! entries below a prefix) are answered from a [`SuffixSums`] snapshot in
//! `O(r^2)` per layer.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One third-order core, stored row-major as `(left_rank, mode_size, right_rank)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TtCore {
    left_rank: usize,
    mode_size: usize,
    right_rank: usize,
    values: Vec<f64>,
}

impl TtCore {
    pub fn new(left_rank: usize, mode_size: usize, right_rank: usize, values: Vec<f64>) -> Result<Self> {
        if left_rank == 0 || mode_size == 0 || right_rank == 0 {
            return Err(Error::InvalidCore(format!(
                "extents must be positive, got ({left_rank}, {mode_size}, {right_rank})"
            )));
        }
        let expected = left_rank * mode_size * right_rank;
        if values.len() != expected {
            return Err(Error::InvalidCore(format!(
                "expected {expected} values for shape ({left_rank}, {mode_size}, {right_rank}), got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCore(format!("non-finite value at position {pos}")));
        }
        Ok(Self {
            left_rank,
            mode_size,
            right_rank,
            values,
        })
    }

    pub fn zeros(left_rank: usize, mode_size: usize, right_rank: usize) -> Self {
        Self {
            left_rank,
            mode_size,
            right_rank,
            values: vec![0.0; left_rank * mode_size * right_rank],
        }
    }

    /// Rank-1 core whose slice `i` is `[slice_values[i]]`.
    pub fn rank_one(slice_values: &[f64]) -> Result<Self> {
        Self::new(1, slice_values.len(), 1, slice_values.to_vec())
    }

    pub fn left_rank(&self) -> usize {
        self.left_rank
    }

    pub fn mode_size(&self) -> usize {
        self.mode_size
    }

    pub fn right_rank(&self) -> usize {
        self.right_rank
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.left_rank, self.mode_size, self.right_rank)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, a: usize, i: usize, b: usize) -> f64 {
        self.values[(a * self.mode_size + i) * self.right_rank + b]
    }

    #[inline]
    fn set(&mut self, a: usize, i: usize, b: usize, v: f64) {
        let idx = (a * self.mode_size + i) * self.right_rank + b;
        self.values[idx] = v;
    }

    /// `row · G[:, i, :]`.
    pub fn apply_left(&self, row: &[f64], i: usize) -> Vec<f64> {
        debug_assert_eq!(row.len(), self.left_rank);
        let mut out = vec![0.0; self.right_rank];
        for (a, &ra) in row.iter().enumerate() {
            if ra == 0.0 {
                continue;
            }
            let base = (a * self.mode_size + i) * self.right_rank;
            for (o, &g) in out.iter_mut().zip(&self.values[base..base + self.right_rank]) {
                *o += ra * g;
            }
        }
        out
    }

    /// `G[:, i, :] · col`.
    pub fn apply_right(&self, i: usize, col: &[f64]) -> Vec<f64> {
        debug_assert_eq!(col.len(), self.right_rank);
        (0..self.left_rank)
            .map(|a| {
                let base = (a * self.mode_size + i) * self.right_rank;
                self.values[base..base + self.right_rank]
                    .iter()
                    .zip(col)
                    .map(|(g, c)| g * c)
                    .sum()
            })
            .collect()
    }

    /// `row · ((1 - t) G[:, i, :] + t G[:, i + 1, :])`, with `i + 1` ignored when `t == 0`.
    fn apply_left_interpolated(&self, row: &[f64], i: usize, t: f64) -> Vec<f64> {
        let mut out = self.apply_left(row, i);
        if t != 0.0 {
            let upper = self.apply_left(row, i + 1);
            for (o, u) in out.iter_mut().zip(upper) {
                *o = (1.0 - t) * *o + t * u;
            }
        }
        out
    }

    fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `(left_rank * mode_size) x right_rank` unfolding.
    fn left_unfolding(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.left_rank * self.mode_size, self.right_rank, &self.values)
    }

    /// `left_rank x (mode_size * right_rank)` unfolding.
    fn right_unfolding(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.left_rank, self.mode_size * self.right_rank, &self.values)
    }

    fn from_matrix(left_rank: usize, mode_size: usize, right_rank: usize, m: &DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows() * m.ncols(), left_rank * mode_size * right_rank);
        let mut values = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                values.push(m[(r, c)]);
            }
        }
        Self {
            left_rank,
            mode_size,
            right_rank,
            values,
        }
    }
}

/// A uniform grid of `points` nodes spanning `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl UniformGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::InfeasibleGrid("grid with zero points".into()));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi < lo || (points > 1 && hi == lo) {
            return Err(Error::Config(format!(
                "invalid grid range [{lo}, {hi}] with {points} points"
            )));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn spacing(&self) -> f64 {
        if self.points > 1 {
            (self.hi - self.lo) / (self.points - 1) as f64
        } else {
            0.0
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.points == 1 {
            self.lo
        } else if i + 1 == self.points {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }

    /// Index of the nearest node (lowest index on ties), with `x` clamped to the range.
    pub fn nearest(&self, x: f64) -> usize {
        if self.points == 1 {
            return 0;
        }
        let pos = ((x - self.lo) / self.spacing()).clamp(0.0, (self.points - 1) as f64);
        let lower = pos.floor();
        let idx = if pos - lower > 0.5 { lower + 1.0 } else { lower };
        idx as usize
    }

    /// Bracketing node `i` and weight `t` such that `x = (1 - t) x_i + t x_{i+1}`.
    pub fn locate(&self, dim: usize, x: f64) -> Result<(usize, f64)> {
        let slack = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        if !x.is_finite() || x < self.lo - slack || x > self.hi + slack {
            return Err(Error::OutOfDomain {
                dim,
                value: x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        if self.points == 1 {
            return Ok((0, 0.0));
        }
        let x = x.clamp(self.lo, self.hi);
        let pos = (x - self.lo) / self.spacing();
        let mut i = pos.floor() as usize;
        if i >= self.points - 1 {
            return Ok((self.points - 1, 0.0));
        }
        let mut t = pos - i as f64;
        if t < 0.0 {
            t = 0.0;
        }
        if t >= 1.0 {
            i += 1;
            t = 0.0;
        }
        Ok((i, t))
    }

    /// Linear-interpolation weights over all grid nodes (at most two nonzero).
    pub fn interpolation_weights(&self, dim: usize, x: f64) -> Result<Vec<f64>> {
        let (i, t) = self.locate(dim, x)?;
        let mut w = vec![0.0; self.points];
        w[i] = 1.0 - t;
        if t != 0.0 {
            w[i + 1] = t;
        }
        Ok(w)
    }
}

/// A chain of cores. Immutable once built; every update constructs a new train.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorTrain {
    cores: Vec<TtCore>,
}

impl TensorTrain {
    pub fn new(cores: Vec<TtCore>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::ShapeMismatch("a tensor train needs at least one core".into()));
        }
        if cores[0].left_rank != 1 {
            return Err(Error::ShapeMismatch(format!(
                "first core must have left rank 1, got {}",
                cores[0].left_rank
            )));
        }
        let last = cores.len() - 1;
        if cores[last].right_rank != 1 {
            return Err(Error::ShapeMismatch(format!(
                "last core must have right rank 1, got {}",
                cores[last].right_rank
            )));
        }
        for (j, pair) in cores.windows(2).enumerate() {
            if pair[0].right_rank != pair[1].left_rank {
                return Err(Error::ShapeMismatch(format!(
                    "core {j} right rank {} differs from core {} left rank {}",
                    pair[0].right_rank,
                    j + 1,
                    pair[1].left_rank
                )));
            }
        }
        Ok(Self { cores })
    }

    /// Rank-1 train with every entry equal to `value`.
    pub fn constant(shape: &[usize], value: f64) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::InfeasibleGrid(format!("mode of size 0 in shape {shape:?}")));
        }
        let mut cores: Vec<TtCore> = shape
            .iter()
            .map(|&n| TtCore::rank_one(&vec![1.0; n]))
            .collect::<Result<_>>()?;
        if let Some(first) = cores.first_mut() {
            for v in &mut first.values {
                *v = value;
            }
        }
        Self::new(cores)
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::constant(shape, 0.0)
    }

    /// Rank-1 separable train `f_1(i_1) f_2(i_2) ... f_d(i_d)`.
    pub fn separable(factors: &[Vec<f64>]) -> Result<Self> {
        Self::new(factors.iter().map(|f| TtCore::rank_one(f)).collect::<Result<_>>()?)
    }

    pub fn cores(&self) -> &[TtCore] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<TtCore> {
        self.cores
    }

    pub fn ndim(&self) -> usize {
        self.cores.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.mode_size).collect()
    }

    /// Internal bond ranks `r_1 .. r_{d-1}`.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1]
            .iter()
            .map(|c| c.right_rank)
            .collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Total number of stored core entries.
    pub fn storage(&self) -> usize {
        self.cores.iter().map(|c| c.values.len()).sum()
    }

    fn check_index(&self, layer: usize, index: usize) -> Result<()> {
        let size = self.cores[layer].mode_size;
        if index >= size {
            return Err(Error::IndexOutOfRange { layer, index, size });
        }
        Ok(())
    }

    /// Product of the slices selected by `prefix`, a row vector of length `r_j`.
    pub fn prefix_row(&self, prefix: &[usize]) -> Result<Vec<f64>> {
        if prefix.len() > self.ndim() {
            return Err(Error::DimensionMismatch(format!(
                "prefix of length {} on a train with {} modes",
                prefix.len(),
                self.ndim()
            )));
        }
        let mut row = vec![1.0];
        for (layer, &i) in prefix.iter().enumerate() {
            self.check_index(layer, i)?;
            row = self.cores[layer].apply_left(&row, i);
        }
        Ok(row)
    }

    /// Entry at a full index tuple.
    pub fn eval(&self, index: &[usize]) -> Result<f64> {
        if index.len() != self.ndim() {
            return Err(Error::DimensionMismatch(format!(
                "index of length {} on a train with {} modes",
                index.len(),
                self.ndim()
            )));
        }
        Ok(self.prefix_row(index)?[0])
    }

    /// Piecewise-multilinear interpolation of the train at a continuous point.
    pub fn eval_continuous(&self, x: &[f64], grids: &[UniformGrid]) -> Result<f64> {
        if x.len() != self.ndim() || grids.len() != self.ndim() {
            return Err(Error::DimensionMismatch(format!(
                "point of length {} with {} grids on a train with {} modes",
                x.len(),
                grids.len(),
                self.ndim()
            )));
        }
        let mut row = vec![1.0];
        for (k, ((core, grid), &xk)) in self.cores.iter().zip(grids).zip(x).enumerate() {
            if grid.points != core.mode_size {
                return Err(Error::DimensionMismatch(format!(
                    "grid {k} has {} points but mode size is {}",
                    grid.points, core.mode_size
                )));
            }
            let (i, t) = grid.locate(k, xk)?;
            row = core.apply_left_interpolated(&row, i, t);
        }
        Ok(row[0])
    }

    /// Sum of all entries whose index extends `prefix`.
    pub fn node_value(&self, prefix: &[usize], cache: &SuffixSums) -> Result<f64> {
        cache.check(self)?;
        let row = self.prefix_row(prefix)?;
        Ok(dot(&row, &cache.vectors[prefix.len()]))
    }

    /// Node values of every child of the node whose prefix row is `row` at depth `layer`.
    pub fn child_values(&self, row: &[f64], layer: usize, cache: &SuffixSums) -> Result<Vec<f64>> {
        cache.check(self)?;
        if layer >= self.ndim() || row.len() != self.cores[layer].left_rank {
            return Err(Error::DimensionMismatch(format!(
                "child query at layer {layer} with row of length {}",
                row.len()
            )));
        }
        Ok(cache.contracted[layer].iter().map(|g| dot(row, g)).collect())
    }

    /// Sum of two trains with identical mode sizes; ranks add.
    pub fn add(&self, other: &TensorTrain) -> Result<TensorTrain> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "cannot add trains of shapes {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let d = self.ndim();
        if d == 1 {
            let values = self.cores[0]
                .values
                .iter()
                .zip(&other.cores[0].values)
                .map(|(a, b)| a + b)
                .collect();
            return TensorTrain::new(vec![TtCore::new(1, self.cores[0].mode_size, 1, values)?]);
        }
        let mut cores = Vec::with_capacity(d);
        for j in 0..d {
            let (a, b) = (&self.cores[j], &other.cores[j]);
            let n = a.mode_size;
            let l = if j == 0 { 1 } else { a.left_rank + b.left_rank };
            let r = if j == d - 1 { 1 } else { a.right_rank + b.right_rank };
            let mut core = TtCore::zeros(l, n, r);
            let (b_row, b_col) = (
                if j == 0 { 0 } else { a.left_rank },
                if j == d - 1 { 0 } else { a.right_rank },
            );
            for i in 0..n {
                for x in 0..a.left_rank {
                    for y in 0..a.right_rank {
                        core.set(x, i, y, a.get(x, i, y));
                    }
                }
                for x in 0..b.left_rank {
                    for y in 0..b.right_rank {
                        core.set(b_row + x, i, b_col + y, b.get(x, i, y));
                    }
                }
            }
            cores.push(core);
        }
        TensorTrain::new(cores)
    }

    /// Multiply every entry by `factor`.
    pub fn scale(&self, factor: f64) -> TensorTrain {
        let mut cores = self.cores.clone();
        for v in &mut cores[0].values {
            *v *= factor;
        }
        TensorTrain { cores }
    }

    /// Frobenius norm, computed by contracting the train with itself.
    pub fn norm(&self) -> f64 {
        // Gram matrix of the left part, r_j x r_j.
        let mut gram = DMatrix::from_element(1, 1, 1.0);
        for core in &self.cores {
            let (l, n, r) = core.shape();
            let mut next = DMatrix::zeros(r, r);
            for i in 0..n {
                let slice = DMatrix::from_fn(l, r, |a, b| core.get(a, i, b));
                next += slice.transpose() * &gram * &slice;
            }
            gram = next;
        }
        gram[(0, 0)].max(0.0).sqrt()
    }

    /// TT rounding: left-to-right QR orthogonalization, then right-to-left
    /// truncated SVD keeping at most `max_rank` singular values per bond and
    /// discarding tails whose norm is within `tol * |t| / sqrt(d - 1)`.
    pub fn round(&self, max_rank: usize, tol: f64) -> TensorTrain {
        let max_rank = max_rank.max(1);
        let d = self.ndim();
        if d == 1 {
            return self.clone();
        }
        let mut cores = self.cores.clone();
        for j in 0..d - 1 {
            let (l, n, _) = cores[j].shape();
            let qr = cores[j].left_unfolding().qr();
            let q = qr.q();
            let r = qr.r();
            let k = q.ncols();
            cores[j] = TtCore::from_matrix(l, n, k, &q);
            let (_, n2, r2) = cores[j + 1].shape();
            let merged = r * cores[j + 1].right_unfolding();
            cores[j + 1] = TtCore::from_matrix(k, n2, r2, &merged);
        }
        let norm = cores[d - 1].frobenius_sq().sqrt();
        let delta = tol.max(0.0) * norm / ((d - 1) as f64).sqrt();

        for j in (1..d).rev() {
            let (l, n, r) = cores[j].shape();
            let (u, s, vt) = crate::linalg::svd(&cores[j].right_unfolding());

            let mut keep = s.len();
            let mut tail = 0.0;
            while keep > 1 {
                let next = tail + s[keep - 1].powi(2);
                if next.sqrt() > delta {
                    break;
                }
                tail = next;
                keep -= 1;
            }
            let keep = keep.min(max_rank);

            let mut new_core = DMatrix::zeros(keep, n * r);
            let mut us = DMatrix::zeros(l, keep);
            for c in 0..keep {
                new_core.row_mut(c).copy_from(&vt.row(c));
                for a in 0..l {
                    us[(a, c)] = u[(a, c)] * s[c];
                }
            }
            cores[j] = TtCore::from_matrix(keep, n, r, &new_core);
            let (l0, n0, _) = cores[j - 1].shape();
            let merged = cores[j - 1].left_unfolding() * us;
            cores[j - 1] = TtCore::from_matrix(l0, n0, keep, &merged);
        }
        TensorTrain { cores }
    }

    pub fn to_file(&self) -> TtFile {
        TtFile {
            format: TT_FORMAT.to_string(),
            d: self.ndim(),
            shapes: self
                .cores
                .iter()
                .map(|c| [c.left_rank, c.mode_size, c.right_rank])
                .collect(),
            cores: self.cores.iter().map(|c| c.values.clone()).collect(),
        }
    }

    pub fn from_file(file: TtFile) -> Result<Self> {
        if file.format != TT_FORMAT {
            return Err(Error::Serialization(format!(
                "unsupported format tag {:?}",
                file.format
            )));
        }
        if file.shapes.len() != file.d || file.cores.len() != file.d {
            return Err(Error::Serialization(format!(
                "declared d = {} but found {} shapes and {} cores",
                file.d,
                file.shapes.len(),
                file.cores.len()
            )));
        }
        let cores = file
            .shapes
            .into_iter()
            .zip(file.cores)
            .map(|([l, n, r], values)| TtCore::new(l, n, r, values))
            .collect::<Result<Vec<_>>>()?;
        TensorTrain::new(cores)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }
}

pub const TT_FORMAT: &str = "ttts-tt/1";

/// Serialized train: `d`, per-core `[left_rank, mode_size, right_rank]`, and
/// row-major core values. Floats are written in shortest round-trip decimal
/// form, so a parse restores every value bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtFile {
    pub format: String,
    pub d: usize,
    pub shapes: Vec<[usize; 3]>,
    pub cores: Vec<Vec<f64>>,
}

/// Right-to-left summed contractions of a train, for prefix-sum node queries.
///
/// `vectors[j]` is `(sum_i G_j[:, i, :]) · vectors[j + 1]` with `vectors[d] = [1]`,
/// and `contracted[j][i] = G_j[:, i, :] · vectors[j + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffixSums {
    vectors: Vec<Vec<f64>>,
    contracted: Vec<Vec<Vec<f64>>>,
    shapes: Vec<(usize, usize, usize)>,
}

impl SuffixSums {
    pub fn new(tt: &TensorTrain) -> Self {
        let d = tt.ndim();
        let mut vectors = vec![Vec::new(); d + 1];
        let mut contracted = vec![Vec::new(); d];
        vectors[d] = vec![1.0];
        for j in (0..d).rev() {
            let core = &tt.cores[j];
            let per_child: Vec<Vec<f64>> = (0..core.mode_size)
                .map(|i| core.apply_right(i, &vectors[j + 1]))
                .collect();
            let mut sum = vec![0.0; core.left_rank];
            for g in &per_child {
                for (s, v) in sum.iter_mut().zip(g) {
                    *s += v;
                }
            }
            vectors[j] = sum;
            contracted[j] = per_child;
        }
        Self {
            vectors,
            contracted,
            shapes: tt.cores.iter().map(TtCore::shape).collect(),
        }
    }

    pub fn suffix(&self, j: usize) -> &[f64] {
        &self.vectors[j]
    }

    /// Sum of every entry of the summarized tensor.
    pub fn total(&self) -> f64 {
        self.vectors[0][0]
    }

    pub fn check(&self, tt: &TensorTrain) -> Result<()> {
        if self.shapes.len() != tt.cores.len() || self.shapes.iter().zip(&tt.cores).any(|(s, c)| *s != c.shape()) {
            return Err(Error::StaleCache);
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(d: usize, n: usize) -> TensorTrain {
        TensorTrain::constant(&vec![n; d], 1.0).unwrap()
    }

    #[test]
    fn eval_all_ones() {
        assert_eq!(ones(3, 2).eval(&[0, 1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn eval_separable_product() {
        let t = TensorTrain::separable(&[vec![2.0, 0.5], vec![3.0, 0.5], vec![4.0, 0.5]]).unwrap();
        assert_eq!(t.eval(&[0, 0, 0]).unwrap(), 24.0);
    }

    #[test]
    fn eval_rejects_bad_index() {
        let t = ones(3, 2);
        assert!(matches!(t.eval(&[0, 1]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(
            t.eval(&[0, 2, 0]),
            Err(Error::IndexOutOfRange {
                layer: 1,
                index: 2,
                size: 2
            })
        ));
    }

    #[test]
    fn construction_checks_boundary_and_bond_ranks() {
        let a = TtCore::zeros(2, 3, 1);
        assert!(TensorTrain::new(vec![a]).is_err());
        let a = TtCore::zeros(1, 3, 2);
        let b = TtCore::zeros(3, 3, 1);
        assert!(TensorTrain::new(vec![a, b]).is_err());
        assert!(TtCore::new(1, 2, 1, vec![1.0, f64::NAN]).is_err());
        assert!(TtCore::new(1, 2, 1, vec![1.0]).is_err());
        assert!(TtCore::new(0, 2, 1, vec![]).is_err());
    }

    #[test]
    fn node_value_counts_completions() {
        let t = ones(3, 2);
        let cache = SuffixSums::new(&t);
        assert_eq!(t.node_value(&[0], &cache).unwrap(), 4.0);
        assert_eq!(t.node_value(&[], &cache).unwrap(), 8.0);
        assert_eq!(t.node_value(&[1, 0, 1], &cache).unwrap(), 1.0);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let t = ones(3, 2);
        let cache = SuffixSums::new(&ones(2, 2));
        assert_eq!(t.node_value(&[0], &cache), Err(Error::StaleCache));
    }

    #[test]
    fn continuous_eval_on_nodes_and_midpoints() {
        let grid = UniformGrid::new(0.0, 1.0, 3).unwrap();
        // Linear in the first coordinate: values 1, 2, 3 at x = 0, 0.5, 1.
        let t = TensorTrain::separable(&[vec![1.0, 2.0, 3.0], vec![1.0, 1.0, 1.0]]).unwrap();
        let on_node = t.eval_continuous(&[0.5, 1.0], &[grid, grid]).unwrap();
        assert_eq!(on_node, t.eval(&[1, 2]).unwrap());
        let mid = t.eval_continuous(&[0.25, 0.0], &[grid, grid]).unwrap();
        assert!((mid - 1.5).abs() < 1e-15);
        assert!(matches!(
            t.eval_continuous(&[1.5, 0.0], &[grid, grid]),
            Err(Error::OutOfDomain { dim: 0, .. })
        ));
    }

    #[test]
    fn add_disjoint_indicators() {
        let a = TensorTrain::separable(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let b = TensorTrain::separable(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.ranks(), vec![2]);
        for (i, j, v) in [(0, 0, 1.0), (0, 1, 0.0), (1, 0, 0.0), (1, 1, 1.0)] {
            assert_eq!(s.eval(&[i, j]).unwrap(), v);
        }
    }

    #[test]
    fn add_zero_is_identity() {
        let a = TensorTrain::separable(&[vec![1.0, -2.0], vec![0.5, 3.0], vec![7.0, 1.0]]).unwrap();
        let z = TensorTrain::zeros(&[2, 2, 2]).unwrap();
        let s = a.add(&z).unwrap();
        for idx in [[0, 0, 0], [1, 0, 1], [1, 1, 1], [0, 1, 0]] {
            assert_eq!(s.eval(&idx).unwrap(), a.eval(&idx).unwrap());
        }
        assert!(a.add(&TensorTrain::zeros(&[2, 3, 2]).unwrap()).is_err());
    }

    #[test]
    fn round_rank_one_is_lossless() {
        let a = TensorTrain::separable(&[vec![1.0, -2.0], vec![0.5, 3.0], vec![7.0, 1.0]]).unwrap();
        let r = a.round(1, 0.0);
        assert_eq!(r.ranks(), vec![1, 1]);
        for idx in [[0, 0, 0], [1, 0, 1], [1, 1, 1], [0, 1, 0]] {
            assert!((r.eval(&idx).unwrap() - a.eval(&idx).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn round_zero_train_keeps_rank_one() {
        let z = TensorTrain::zeros(&[3, 3, 3])
            .unwrap()
            .add(&TensorTrain::zeros(&[3, 3, 3]).unwrap())
            .unwrap();
        let r = z.round(4, 1e-12);
        assert_eq!(r.ranks(), vec![1, 1]);
        assert_eq!(r.eval(&[1, 2, 0]).unwrap(), 0.0);
    }

    #[test]
    fn norm_of_ones() {
        assert!((ones(3, 2).norm() - 8f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn grid_locate_and_weights() {
        let g = UniformGrid::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.locate(0, -1.0).unwrap(), (0, 0.0));
        assert_eq!(g.locate(0, 1.0).unwrap(), (4, 0.0));
        let (i, t) = g.locate(0, 0.25).unwrap();
        assert_eq!(i, 2);
        assert!((t - 0.5).abs() < 1e-15);
        let w = g.interpolation_weights(0, 0.25).unwrap();
        assert_eq!(w.iter().filter(|&&v| v != 0.0).count(), 2);
        assert_eq!(g.nearest(0.26), 3);
        assert_eq!(g.nearest(0.25), 2);
        assert!(UniformGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let t = TensorTrain::separable(&[vec![0.1, 1.0 / 3.0], vec![std::f64::consts::PI, -1e-300]]).unwrap();
        let back = TensorTrain::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(t, back);
    }
}

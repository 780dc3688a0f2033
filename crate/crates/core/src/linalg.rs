//! Dense SVD helpers. nalgebra's SVD returns inaccurate factors on some
//! rank-deficient inputs (structured 0/1 sums such as accumulated prefix
//! indicators), so decompositions go through faer.

use nalgebra::DMatrix;

/// Thin SVD `m = u diag(s) vt` with `s` in descending order.
pub(crate) fn svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return (DMatrix::zeros(rows, 0), vec![], DMatrix::zeros(0, cols));
    }
    let a = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    match a.thin_svd() {
        Ok(f) => {
            let (u, s, v) = (f.U(), f.S().column_vector(), f.V());
            (
                DMatrix::from_fn(rows, k, |i, j| u[(i, j)]),
                (0..k).map(|j| s[j]).collect(),
                DMatrix::from_fn(k, cols, |i, j| v[(j, i)]),
            )
        }
        Err(_) => {
            let f = m.clone().svd(true, true);
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| f.singular_values[b].total_cmp(&f.singular_values[a]));
            let (u, vt) = (f.u.expect("requested"), f.v_t.expect("requested"));
            (
                DMatrix::from_fn(rows, k, |i, j| u[(i, order[j])]),
                order.iter().map(|&j| f.singular_values[j]).collect(),
                DMatrix::from_fn(k, cols, |i, j| vt[(order[i], j)]),
            )
        }
    }
}

/// Moore-Penrose pseudo-inverse, dropping singular values below
/// `rcond * s_max`.
pub(crate) fn pseudo_inverse(m: &DMatrix<f64>, rcond: f64) -> DMatrix<f64> {
    let (u, s, vt) = svd(m);
    let cut = rcond * s.first().copied().unwrap_or(0.0);
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &sv) in s.iter().enumerate() {
        if sv > cut && sv > 0.0 {
            out += vt.row(k).transpose() * u.column(k).transpose() / sv;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_wide_matrix() {
        // nalgebra reports 6.869 here; the exact value is sqrt(45).
        let a = DMatrix::from_fn(2, 5, |i, _| if i == 0 { 3f64.sqrt() } else { 6f64.sqrt() });
        let (u, s, vt) = svd(&a);
        assert!((s[0] - 45f64.sqrt()).abs() < 1e-12);
        assert!(s[1].abs() < 1e-12);
        let rec = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s)) * &vt;
        assert!((rec - a).norm() < 1e-12);
    }

    #[test]
    fn pseudo_inverse_of_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let p = pseudo_inverse(&a, 1e-12);
        assert!((&a * &p * &a - &a).norm() < 1e-12);
        assert!((p[(0, 0)] - 0.25).abs() < 1e-12);
    }
}
